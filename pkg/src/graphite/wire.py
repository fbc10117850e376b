"""Binary message framing with MTU-aware fragmentation and reassembly.

Datagram layout, little-endian, 16-byte header:

    magic        u16   0x474A ("GJ")
    version      u8    1
    msg_type     u8
    client_id    u16
    sequence     u32   per (client, type), wrapping
    frag_index   u16
    frag_count   u16   >= 1
    payload_len  u16   bytes following the header

Messages up to 64 KiB are pre-fragmented below the configured MTU so the
transport never splits them itself; a missing fragment discards the
whole message (no partial delivery, no retransmission). Sequence
comparison uses a wrap window: b is newer than a iff
0 < (b - a) mod 2^32 < 2^31.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from enum import IntEnum
from typing import Iterable

MAGIC = 0x474A
VERSION = 1
HEADER = struct.Struct("<HBBHIHHH")
HEADER_SIZE = HEADER.size  # 16
DEFAULT_MTU = 1400
MAX_PAYLOAD = 64 * 1024
SEQ_MOD = 1 << 32


class MsgType(IntEnum):
    POSE = 1
    TRANSFORM = 2
    HIGHLIGHT = 3
    PRESENCE = 4


class WireError(ValueError):
    """Raised for messages that cannot be encoded within protocol limits."""


def seq_newer(candidate: int, reference: int) -> bool:
    """True iff candidate is newer than reference under the wrap window."""
    delta = (candidate - reference) % SEQ_MOD
    return 0 < delta < SEQ_MOD // 2


@dataclass(frozen=True)
class Message:
    """A typed state payload from one client, before fragmentation."""

    msg_type: MsgType
    client_id: int
    sequence: int
    payload: bytes

    def __post_init__(self):
        if not 0 <= self.client_id <= 0xFFFF:
            raise WireError(f"client_id {self.client_id} out of u16 range")
        if not 0 <= self.sequence < SEQ_MOD:
            raise WireError(f"sequence {self.sequence} out of u32 range")
        if len(self.payload) > MAX_PAYLOAD:
            raise WireError(f"payload of {len(self.payload)} bytes exceeds {MAX_PAYLOAD}")


@dataclass(frozen=True)
class Datagram:
    """One wire frame; a message is 1..n of these."""

    msg_type: int
    client_id: int
    sequence: int
    frag_index: int
    frag_count: int
    payload: bytes

    def to_bytes(self) -> bytes:
        return HEADER.pack(MAGIC, VERSION, self.msg_type, self.client_id,
                           self.sequence, self.frag_index, self.frag_count,
                           len(self.payload)) + self.payload

    def __len__(self) -> int:
        return HEADER_SIZE + len(self.payload)


def encode_message(m: Message, mtu: int = DEFAULT_MTU) -> list[Datagram]:
    """Split a message into datagrams that each fit within ``mtu`` bytes."""
    if mtu < HEADER_SIZE + 1:
        raise WireError(f"mtu {mtu} below minimum {HEADER_SIZE + 1}")
    chunk = mtu - HEADER_SIZE
    payload = m.payload
    count = max(1, -(-len(payload) // chunk))  # empty payload still sends one frame
    if count > 0xFFFF:
        raise WireError("payload requires more than 65535 fragments at this mtu")
    return [
        Datagram(msg_type=int(m.msg_type), client_id=m.client_id,
                 sequence=m.sequence, frag_index=i, frag_count=count,
                 payload=payload[i * chunk:(i + 1) * chunk])
        for i in range(count)
    ]


@dataclass
class _Pending:
    sequence: int
    frag_count: int
    parts: dict[int, bytes] = field(default_factory=dict)


@dataclass
class ReassemblyBuffer:
    """Per-receiver fragment tracker: at most one in-flight message per
    (client, type), always the newest sequence seen."""

    malformed: int = 0
    evicted: int = 0
    stale: int = 0
    _pending: dict[tuple[int, int], _Pending] = field(default_factory=dict)
    _delivered: dict[tuple[int, int], int] = field(default_factory=dict)


def decode_datagram(data: bytes, buf: ReassemblyBuffer) -> Message | None:
    """Feed one received datagram; returns a Message when one completes.

    Robust to garbage: anything that fails header validation bumps
    ``buf.malformed`` and is dropped. A newer sequence for the same
    (client, type) evicts an incomplete older reassembly; fragments at or
    below the last delivered sequence are dropped as stale.
    """
    if len(data) < HEADER_SIZE:
        buf.malformed += 1
        return None
    magic, version, msg_type, client_id, sequence, frag_index, frag_count, payload_len = \
        HEADER.unpack_from(data)
    if (magic != MAGIC or version != VERSION
            or msg_type not in MsgType._value2member_map_
            or frag_count < 1 or frag_index >= frag_count
            or payload_len != len(data) - HEADER_SIZE):
        buf.malformed += 1
        return None

    key = (client_id, msg_type)
    last = buf._delivered.get(key)
    if last is not None and not seq_newer(sequence, last):
        buf.stale += 1
        return None

    payload = data[HEADER_SIZE:]
    if frag_count == 1:
        stale_pending = buf._pending.get(key)
        if stale_pending is not None and not seq_newer(stale_pending.sequence, sequence):
            del buf._pending[key]
            buf.evicted += 1
        buf._delivered[key] = sequence
        return Message(MsgType(msg_type), client_id, sequence, payload)

    pending = buf._pending.get(key)
    if pending is None or seq_newer(sequence, pending.sequence):
        if pending is not None:
            buf.evicted += 1
        pending = _Pending(sequence=sequence, frag_count=frag_count)
        buf._pending[key] = pending
    elif sequence != pending.sequence:
        buf.stale += 1
        return None
    if frag_count != pending.frag_count:
        # Conflicting metadata for the same sequence: treat as corruption.
        buf.malformed += 1
        return None
    pending.parts[frag_index] = payload
    if sum(len(p) for p in pending.parts.values()) > MAX_PAYLOAD:
        del buf._pending[key]
        buf.malformed += 1
        return None
    if len(pending.parts) < pending.frag_count:
        return None

    whole = b"".join(pending.parts[i] for i in range(pending.frag_count))
    del buf._pending[key]
    buf._delivered[key] = sequence
    return Message(MsgType(msg_type), client_id, sequence, whole)


class SequenceAllocator:
    """Monotone wrapping sequence numbers per message type."""

    def __init__(self, start: int = 0):
        self._next: dict[int, int] = {}
        self._start = start % SEQ_MOD

    def next(self, msg_type: MsgType) -> int:
        seq = self._next.get(int(msg_type), self._start)
        self._next[int(msg_type)] = (seq + 1) % SEQ_MOD
        return seq


# --- Typed payload bodies -------------------------------------------------

_VEC3 = struct.Struct("<fff")
_TRANSFORM = struct.Struct("<ffff")
_HIGHLIGHT = struct.Struct("<I")
_PRESENCE = struct.Struct("<fffffff")
HIGHLIGHT_NONE = 0xFFFFFFFF

Vec3 = tuple[float, float, float]


def _vec3(v: Iterable[float]) -> Vec3:
    x, y, z = v
    return (float(x), float(y), float(z))


@dataclass(frozen=True)
class PosePayload:
    """Full hand snapshot: position, forward axis, pose bits, 5 joint pairs."""

    hand_position: Vec3
    hand_forward: Vec3
    pose_code: int
    fingers: tuple[tuple[Vec3, Vec3], ...]  # 5 x (knuckle, tip)

    SIZE = 12 + 12 + 1 + 5 * 24

    def pack(self) -> bytes:
        if len(self.fingers) != 5:
            raise WireError("pose payload requires exactly 5 finger pairs")
        out = bytearray()
        out += _VEC3.pack(*self.hand_position)
        out += _VEC3.pack(*self.hand_forward)
        out.append(self.pose_code & 0x1F)
        for knuckle, tip in self.fingers:
            out += _VEC3.pack(*knuckle)
            out += _VEC3.pack(*tip)
        return bytes(out)

    @classmethod
    def unpack(cls, data: bytes) -> "PosePayload":
        if len(data) != cls.SIZE:
            raise WireError(f"pose payload must be {cls.SIZE} bytes, got {len(data)}")
        hand_position = _vec3(_VEC3.unpack_from(data, 0))
        hand_forward = _vec3(_VEC3.unpack_from(data, 12))
        pose_code = data[24]
        fingers = []
        off = 25
        for _ in range(5):
            knuckle = _vec3(_VEC3.unpack_from(data, off))
            tip = _vec3(_VEC3.unpack_from(data, off + 12))
            fingers.append((knuckle, tip))
            off += 24
        return cls(hand_position, hand_forward, pose_code, tuple(fingers))


@dataclass(frozen=True)
class TransformPayload:
    """Whole-graph transform: translation plus uniform scale."""

    translation: Vec3
    scale: float

    SIZE = 16

    def pack(self) -> bytes:
        return _TRANSFORM.pack(*self.translation, self.scale)

    @classmethod
    def unpack(cls, data: bytes) -> "TransformPayload":
        x, y, z, s = _TRANSFORM.unpack(data)
        return cls((x, y, z), s)


@dataclass(frozen=True)
class HighlightPayload:
    """Currently highlighted vertex, if any."""

    vertex: int | None

    SIZE = 4

    def pack(self) -> bytes:
        return _HIGHLIGHT.pack(HIGHLIGHT_NONE if self.vertex is None else self.vertex)

    @classmethod
    def unpack(cls, data: bytes) -> "HighlightPayload":
        (raw,) = _HIGHLIGHT.unpack(data)
        return cls(None if raw == HIGHLIGHT_NONE else raw)


@dataclass(frozen=True)
class PresencePayload:
    """Head pose for avatar rendering: position plus orientation quaternion."""

    head_position: Vec3
    orientation: tuple[float, float, float, float]

    SIZE = 28

    def pack(self) -> bytes:
        return _PRESENCE.pack(*self.head_position, *self.orientation)

    @classmethod
    def unpack(cls, data: bytes) -> "PresencePayload":
        vals = _PRESENCE.unpack(data)
        return cls((vals[0], vals[1], vals[2]), (vals[3], vals[4], vals[5], vals[6]))
