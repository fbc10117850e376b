"""Deterministic simulated-network harness for the sync protocol.

Drives per-client interaction sessions tick by tick through a seeded
lossy channel into a fan-out hub and back into receiver state stores,
then reports delivery counts, scheduler fairness, staleness, and whether
every receiver converged to every sender's final state. Time is a
virtual clock, so identical seeds give identical metrics.

Also includes an event-based strawman interpreter (delta accumulation
instead of full-state merge) to demonstrate why loss-tolerant sync needs
state broadcasts: under the same lossy trace the strawman desynchronizes
while latest-wins merge converges.
"""

from __future__ import annotations

import heapq
import json
import random
from dataclasses import dataclass, field

from .graph import Graph
from .interaction import HandFrame, InteractionState, make_hand_frame, step_session
from .kdtree import KdTree
from .session import SessionHub, StateStore, merge_state
from .wire import (DEFAULT_MTU, Message, MsgType, ReassemblyBuffer,
                   SequenceAllocator, TransformPayload, decode_datagram,
                   encode_message)

DEFAULT_TICK_MS = 1000.0 / 30.0  # 30 Hz state broadcast


@dataclass(frozen=True)
class NetworkModel:
    """Loss/latency/reorder/duplicate behavior of the simulated network."""

    loss_rate: float = 0.0
    latency_ms: tuple[float, float] = (0.0, 0.0)
    reorder_rate: float = 0.0
    duplicate_rate: float = 0.0
    rng_seed: int = 0

    def __post_init__(self):
        for name in ("loss_rate", "reorder_rate", "duplicate_rate"):
            v = getattr(self, name)
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        lo, hi = self.latency_ms
        if lo < 0 or hi < lo:
            raise ValueError("latency_ms must satisfy 0 <= min <= max")


@dataclass
class SimMetrics:
    """Counters and convergence outcome of one scenario run."""

    injected: dict[int, int] = field(default_factory=dict)
    delivered: dict[int, int] = field(default_factory=dict)
    dropped: dict[int, int] = field(default_factory=dict)
    duplicated: dict[int, int] = field(default_factory=dict)
    max_send_gap: dict[int, int] = field(default_factory=dict)
    staleness_ms: dict[int, float] = field(default_factory=dict)
    converged: bool = False

    def to_json(self) -> str:
        def names(d: dict[int, float]) -> dict[str, float]:
            return {MsgType(t).name if t in MsgType._value2member_map_ else str(t): v
                    for t, v in sorted(d.items())}
        return json.dumps({
            "injected": names(self.injected),
            "delivered": names(self.delivered),
            "dropped": names(self.dropped),
            "duplicated": names(self.duplicated),
            "max_send_gap": names(self.max_send_gap),
            "staleness_ms": {str(c): v for c, v in sorted(self.staleness_ms.items())},
            "converged": self.converged,
        }, indent=2, sort_keys=True)


class _Channel:
    """Seeded datagram pipe with loss, uniform latency, reorder, duplication."""

    def __init__(self, model: NetworkModel):
        self.model = model
        self.rng = random.Random(model.rng_seed)
        self._heap: list[tuple[float, int, int, int, bytes]] = []
        self._counter = 0
        self.dropped: dict[int, int] = {}
        self.duplicated: dict[int, int] = {}
        self.injected: dict[int, int] = {}

    def send(self, now_ms: float, dest: int, data: bytes) -> None:
        msg_type = data[3] if len(data) > 3 else 0
        self.injected[msg_type] = self.injected.get(msg_type, 0) + 1
        copies = 1
        if self.rng.random() < self.model.duplicate_rate:
            copies = 2
            self.duplicated[msg_type] = self.duplicated.get(msg_type, 0) + 1
        for _ in range(copies):
            if self.rng.random() < self.model.loss_rate:
                self.dropped[msg_type] = self.dropped.get(msg_type, 0) + 1
                continue
            delay = self.rng.uniform(*self.model.latency_ms)
            if self.rng.random() < self.model.reorder_rate:
                delay += self.rng.uniform(0.0, 2 * DEFAULT_TICK_MS)
            self._counter += 1
            heapq.heappush(self._heap, (now_ms + delay, self._counter, dest,
                                        msg_type, data))

    def due(self, now_ms: float) -> list[tuple[int, int, bytes]]:
        """Pop all (dest, type, data) scheduled at or before ``now_ms``."""
        out = []
        while self._heap and self._heap[0][0] <= now_ms:
            _, _, dest, msg_type, data = heapq.heappop(self._heap)
            out.append((dest, msg_type, data))
        return out

    def pending(self) -> bool:
        return bool(self._heap)

    def horizon(self) -> float:
        return self._heap[0][0] if self._heap else 0.0


@dataclass
class _SimClient:
    client_id: int
    state: InteractionState = field(default_factory=InteractionState)
    sequences: SequenceAllocator = field(default_factory=SequenceAllocator)
    reassembly: ReassemblyBuffer = field(default_factory=ReassemblyBuffer)
    store: StateStore = field(default_factory=StateStore)
    last_merge_ms: float = 0.0
    final_sent: dict[int, bytes] = field(default_factory=dict)


def run_scenario(clients: int, model: NetworkModel,
                 scripts: dict[int, list[HandFrame]], ticks: int,
                 *, tick_ms: float = DEFAULT_TICK_MS, mtu: int = DEFAULT_MTU,
                 server_budget_per_tick: int = 1024,
                 master_mode: bool = False,
                 graph: Graph | None = None, tree: KdTree | None = None,
                 ) -> SimMetrics:
    """Run a multi-client session over the simulated network.

    ``scripts`` maps client id to its frame trace; a client holds its
    last frame when the trace is shorter than the run. After the scripted
    ticks the channel is drained (no new sends) so in-flight datagrams
    settle before convergence is judged.
    """
    if clients < 1:
        raise ValueError("need at least one client")
    channel = _Channel(model)
    hub = SessionHub(mtu=mtu, master_mode=master_mode)
    sims = {cid: _SimClient(cid) for cid in range(1, clients + 1)}
    for cid in sorted(sims):
        for dest, data in hub.register_client(cid):
            channel.send(0.0, dest, data)

    gap_last_pick: dict[int, int] = {}
    gap_max: dict[int, int] = {}
    picks = 0

    def pump_server(now: float) -> None:
        nonlocal picks
        for dest, data in hub.pop_outbound(server_budget_per_tick):
            picks += 1
            msg_type = data[3]
            if msg_type in gap_last_pick:
                gap = picks - gap_last_pick[msg_type]
                gap_max[msg_type] = max(gap_max.get(msg_type, 1), gap)
            gap_last_pick[msg_type] = picks
            channel.send(now, dest, data)

    def deliver(now: float) -> None:
        for dest, _, data in channel.due(now):
            if dest == 0:
                hub.handle_datagram(_sender_of(data), data)
            else:
                sim = sims[dest]
                msg = decode_datagram(data, sim.reassembly)
                if msg is not None:
                    merge_state(sim.store, msg)
                    sim.last_merge_ms = now

    def _sender_of(data: bytes) -> int:
        return int.from_bytes(data[4:6], "little")

    for tick in range(ticks):
        now = tick * tick_ms
        deliver(now)
        for cid, sim in sorted(sims.items()):
            trace = scripts.get(cid, [])
            if not trace:
                continue
            frame = trace[min(tick, len(trace) - 1)]
            sim.state, messages = step_session(
                sim.state, frame, tree, graph,
                client_id=cid, sequences=sim.sequences)
            for m in messages:
                sim.final_sent[int(m.msg_type)] = m.payload
                for d in encode_message(m, mtu):
                    channel.send(now, 0, d.to_bytes())  # dest 0 = server
        pump_server(now)

    # Drain: advance past every scheduled arrival, pumping as we go.
    now = ticks * tick_ms
    while channel.pending() or hub.pending_outbound():
        now = max(now + tick_ms, channel.horizon())
        deliver(now)
        pump_server(now)
    end = now

    converged = True
    for cid, sim in sims.items():
        for other_id, other in sims.items():
            if other_id == cid:
                continue
            for msg_type, payload in other.final_sent.items():
                if master_mode and msg_type == int(MsgType.TRANSFORM) \
                        and other_id != hub.master_id:
                    continue
                stored = sim.store.get(other_id, MsgType(msg_type))
                if stored is None or stored.payload != payload:
                    converged = False

    metrics = SimMetrics(converged=converged)
    metrics.injected = dict(channel.injected)
    metrics.delivered = {
        t: channel.injected.get(t, 0) + channel.duplicated.get(t, 0)
           - channel.dropped.get(t, 0)
        for t in channel.injected}
    metrics.dropped = dict(channel.dropped)
    metrics.duplicated = dict(channel.duplicated)
    metrics.max_send_gap = dict(gap_max)
    metrics.staleness_ms = {cid: end - sim.last_merge_ms for cid, sim in sims.items()}
    return metrics


def grab_and_hold_script(ticks: int, hold_ticks: int = 10,
                         step: tuple[float, float, float] = (0.01, 0.0, 0.0),
                         ) -> list[HandFrame]:
    """Fist-drag along ``step`` per tick, then hold still for ``hold_ticks``."""
    frames = []
    moving = max(0, ticks - hold_ticks)
    pos = (0.0, 0.0, 0.0)
    for t in range(ticks):
        if t and t <= moving:
            pos = (pos[0] + step[0], pos[1] + step[1], pos[2] + step[2])
        frames.append(make_hand_frame(0b00000, hand_position=pos,
                                      timestamp_ms=t * DEFAULT_TICK_MS))
    return frames


def idle_script(ticks: int) -> list[HandFrame]:
    """Open-hand (idle) frames; the client still broadcasts every tick."""
    return [make_hand_frame(0b11111, timestamp_ms=t * DEFAULT_TICK_MS)
            for t in range(ticks)]


def measure_fairness(load: dict[int, int], total_sends: int,
                     picks_per_cycle: int | None = None) -> dict[int, int]:
    """Max pick gap per type for a scheduler under sustained asymmetric load.

    Each cycle enqueues ``load[t]`` items per type and then pops
    ``picks_per_cycle`` sends (default: one per type, which keeps every
    queue backlogged no matter how lopsided the load is: the link is
    the bottleneck, the regime where fairness matters). Returns the
    largest observed pick gap per type over ``total_sends`` sends.
    """
    from .session import FairScheduler

    sched: FairScheduler[int] = FairScheduler()
    if picks_per_cycle is None:
        picks_per_cycle = len(load)
    last_pick: dict[int, int] = {}
    max_gap: dict[int, int] = {}
    picks = 0
    while picks < total_sends:
        for msg_type, count in sorted(load.items()):
            for _ in range(count):
                sched.enqueue(msg_type, picks)
        for _ in range(picks_per_cycle):
            if picks >= total_sends:
                break
            item = sched.next_to_send()
            if item is None:
                break
            msg_type = item[0]
            picks += 1
            if msg_type in last_pick:
                max_gap[msg_type] = max(max_gap.get(msg_type, 1),
                                        picks - last_pick[msg_type])
            last_pick[msg_type] = picks
    return max_gap


@dataclass(frozen=True)
class StrawmanResult:
    """Final transforms after replaying one lossy trace both ways.

    Positions are compared in wire precision (the payload carries f32),
    so the sender's own final value is quantized the same way.
    """

    sender_final: tuple[float, float, float]
    state_based_final: tuple[float, float, float] | None
    event_based_final: tuple[float, float, float]

    @property
    def state_converged(self) -> bool:
        return self.state_based_final == self.sender_final

    @property
    def event_converged(self) -> bool:
        return all(abs(a - b) < 1e-7
                   for a, b in zip(self.event_based_final, self.sender_final))


def run_strawman_comparison(model: NetworkModel, *, move_ticks: int = 30,
                            hold_ticks: int = 10,
                            step: tuple[float, float, float] = (0.01, 0.0, 0.0),
                            ) -> StrawmanResult:
    """Replay one sender trace as full-state vs delta messages over one channel.

    Both interpretations see the identical loss/latency pattern: each tick
    sends exactly one TRANSFORM datagram whose payload carries the
    absolute translation, and the delta interpreter derives per-tick
    increments from consecutive *sent* values, applying only the ones
    that arrived, in arrival order. Losing any moving-phase delta leaves
    the event-based replica permanently offset.
    """
    channel = _Channel(model)
    ticks = move_ticks + hold_ticks
    reassembly = ReassemblyBuffer()
    seq = SequenceAllocator()

    sent: list[tuple[float, float, float]] = []  # wire-precision positions
    arrivals: list[tuple[int, tuple[float, float, float]]] = []  # (seq, absolute)
    pos = (0.0, 0.0, 0.0)
    for t in range(ticks):
        if 0 < t <= move_ticks:
            pos = (pos[0] + step[0], pos[1] + step[1], pos[2] + step[2])
        payload = TransformPayload(pos, 1.0).pack()
        sent.append(TransformPayload.unpack(payload).translation)
        m = Message(MsgType.TRANSFORM, 1, seq.next(MsgType.TRANSFORM), payload)
        for d in encode_message(m):
            channel.send(t * DEFAULT_TICK_MS, 2, d.to_bytes())
        for _, _, data in channel.due(t * DEFAULT_TICK_MS):
            msg = decode_datagram(data, reassembly)
            if msg is not None:
                arrivals.append((msg.sequence, TransformPayload.unpack(msg.payload).translation))
    now = ticks * DEFAULT_TICK_MS
    while channel.pending():
        now = max(now + DEFAULT_TICK_MS, channel.horizon())
        for _, _, data in channel.due(now):
            msg = decode_datagram(data, reassembly)
            if msg is not None:
                arrivals.append((msg.sequence, TransformPayload.unpack(msg.payload).translation))

    state_final: tuple[float, float, float] | None = None
    best_seq = -1
    for s, translation in arrivals:
        if s > best_seq:
            best_seq = s
            state_final = translation

    event_pos = [0.0, 0.0, 0.0]
    for s, _ in arrivals:
        prev = sent[s - 1] if s > 0 else (0.0, 0.0, 0.0)
        delta = (sent[s][0] - prev[0], sent[s][1] - prev[1], sent[s][2] - prev[2])
        event_pos[0] += delta[0]
        event_pos[1] += delta[1]
        event_pos[2] += delta[2]

    return StrawmanResult(sender_final=sent[-1],
                          state_based_final=state_final,
                          event_based_final=tuple(event_pos))
