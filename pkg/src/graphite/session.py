"""Session fan-out: fair type scheduling, latest-wins state, datagram relay.

The hub is the transport-agnostic core of the live server: datagrams
arriving from one client are queued per message type and relayed
unmodified to every other registered client, drained in least-recently-
sent type order so a chatty type can never starve a quiet one. There are
no acknowledgements and no retransmission; the hub also reassembles a
copy of everything into its own latest-wins store so late joiners can be
brought up to date with a snapshot.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Generic, Iterator, TypeVar

from .wire import (DEFAULT_MTU, Message, MsgType, ReassemblyBuffer,
                   decode_datagram, encode_message, seq_newer)

T = TypeVar("T")


class FairScheduler(Generic[T]):
    """Per-type queues drained least-recently-sent first.

    With k non-empty queues every type is picked at least once in any k
    consecutive picks; ties go to the lower type id.
    """

    def __init__(self):
        self._queues: dict[int, deque[T]] = {}
        self._last_sent: dict[int, int] = {}
        self._picks = 0

    def enqueue(self, msg_type: int, item: T) -> None:
        self._queues.setdefault(int(msg_type), deque()).append(item)
        self._last_sent.setdefault(int(msg_type), 0)

    def next_to_send(self) -> tuple[int, T] | None:
        ready = [t for t, q in self._queues.items() if q]
        if not ready:
            return None
        chosen = min(ready, key=lambda t: (self._last_sent[t], t))
        self._picks += 1
        self._last_sent[chosen] = self._picks
        return chosen, self._queues[chosen].popleft()

    def __len__(self) -> int:
        return sum(len(q) for q in self._queues.values())


class StateStore:
    """Latest Message per (client, type); stale sequences never regress it."""

    def __init__(self):
        self._entries: dict[tuple[int, int], Message] = {}

    def get(self, client_id: int, msg_type: MsgType) -> Message | None:
        return self._entries.get((client_id, int(msg_type)))

    def messages(self) -> list[Message]:
        """All stored messages, ordered by (client, type) for determinism."""
        return [self._entries[k] for k in sorted(self._entries)]

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[Message]:
        return iter(self.messages())


def merge_state(store: StateStore, m: Message) -> StateStore:
    """Apply a full-state message; keeps the newer sequence under wrap compare.

    Duplicates and stale arrivals are no-ops, so any delivery subsequence
    that includes the final message converges to the same store.
    """
    key = (m.client_id, int(m.msg_type))
    cur = store._entries.get(key)
    if cur is None or seq_newer(m.sequence, cur.sequence):
        store._entries[key] = m
    return store


@dataclass
class HubStats:
    forwarded: int = 0
    dropped_unknown_sender: int = 0
    suppressed_non_master: int = 0


class SessionHub:
    """Fan-out core shared by the live transports and the simulator.

    Clients register by id; ``handle_datagram`` queues the raw datagram
    for every other client and ``pop_outbound`` drains the queues fairly.
    In master mode, TRANSFORM traffic from anyone but the master client
    is suppressed (the proposed desync remedy), so all participants
    follow a single authoritative transform.
    """

    def __init__(self, mtu: int = DEFAULT_MTU, master_mode: bool = False):
        self.mtu = mtu
        self.master_mode = master_mode
        self.master_id: int | None = None
        self.stats = HubStats()
        self.store = StateStore()
        self._clients: list[int] = []
        self._outbound: FairScheduler[tuple[int, bytes]] = FairScheduler()
        self._reassembly = ReassemblyBuffer()

    @property
    def clients(self) -> tuple[int, ...]:
        return tuple(self._clients)

    def register_client(self, client_id: int) -> list[tuple[int, bytes]]:
        """Add a client; returns snapshot datagrams bringing it up to date."""
        if client_id in self._clients:
            raise ValueError(f"client {client_id} already registered")
        self._clients.append(client_id)
        if self.master_mode and self.master_id is None:
            self.master_id = client_id
        snapshot: list[tuple[int, bytes]] = []
        for m in self.store.messages():
            for d in encode_message(m, self.mtu):
                snapshot.append((client_id, d.to_bytes()))
        return snapshot

    def unregister_client(self, client_id: int) -> None:
        if client_id in self._clients:
            self._clients.remove(client_id)
        if self.master_id == client_id:
            self.master_id = self._clients[0] if (self.master_mode and self._clients) else None

    def handle_datagram(self, sender_id: int, data: bytes) -> None:
        """Queue one datagram from a registered client for fan-out."""
        if sender_id not in self._clients:
            self.stats.dropped_unknown_sender += 1
            return
        msg_type = data[3] if len(data) > 3 else 0
        if (self.master_mode and msg_type == int(MsgType.TRANSFORM)
                and sender_id != self.master_id):
            self.stats.suppressed_non_master += 1
            return
        # Keep the hub's own view current so join snapshots are fresh.
        completed = decode_datagram(data, self._reassembly)
        if completed is not None:
            merge_state(self.store, completed)
        for dest in self._clients:
            if dest != sender_id:
                self._outbound.enqueue(msg_type, (dest, data))

    def pop_outbound(self, budget: int | None = None) -> list[tuple[int, bytes]]:
        """Drain up to ``budget`` (dest, datagram) sends in fair type order."""
        out: list[tuple[int, bytes]] = []
        while budget is None or len(out) < budget:
            item = self._outbound.next_to_send()
            if item is None:
                break
            out.append(item[1])
            self.stats.forwarded += 1
        return out

    def pending_outbound(self) -> int:
        return len(self._outbound)
