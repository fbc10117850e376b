"""Hand-pose encoding and the state-based grab/scale/highlight machine.

A hand frame carries nine points (a hand position plus knuckle/tip per
finger). Each finger is classified open or closed from the angle between
its knuckle-to-tip vector and the palm-forward axis, with a hysteresis
band so a finger hovering near the threshold never flickers. The five
bits pack into a pose code (thumb = bit 0) selecting the gesture:

    0b00000 fist          -> grab (translate the whole graph)
    0b00011 thumb+index   -> scale about the gesture-start point
    0b00010 index only    -> highlight the node nearest the fingertip
    anything else         -> idle

Every frame re-derives the full transform from the gesture anchor and
broadcasts complete state (never deltas), so lost or reordered messages
only delay convergence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum

from .graph import Graph
from .kdtree import KdTree
from .wire import (HighlightPayload, Message, MsgType, PosePayload,
                   SequenceAllocator, TransformPayload, Vec3)

OPEN_ANGLE_DEG = 80.0
CLOSED_ANGLE_DEG = 100.0
SCALE_RATE = 2.0  # exponential drag factor per unit length
DEFAULT_HIGHLIGHT_RADIUS = 0.1

POSE_FIST = 0b00000
POSE_POINT = 0b00010
POSE_PINCH = 0b00011
POSE_OPEN_HAND = 0b11111

_COS_OPEN = math.cos(math.radians(OPEN_ANGLE_DEG))
_COS_CLOSED = math.cos(math.radians(CLOSED_ANGLE_DEG))


class Mode(Enum):
    IDLE = "idle"
    GRABBING = "grabbing"
    SCALING = "scaling"


class GestureMode(Enum):
    """What the current pose code asks for; HIGHLIGHT is idle plus picking."""

    IDLE = "idle"
    GRAB = "grab"
    SCALE = "scale"
    HIGHLIGHT = "highlight"


@dataclass(frozen=True)
class FingerState:
    """Last committed open/closed decision (the hysteresis memory)."""

    open: bool = False


CLOSED_HAND = tuple(FingerState(False) for _ in range(5))


@dataclass(frozen=True)
class HandFrame:
    """One tracked hand sample: nine points plus the palm-forward axis."""

    hand_position: Vec3
    hand_forward: Vec3
    fingers: tuple[tuple[Vec3, Vec3], ...]  # 5 x (knuckle, tip), thumb..pinky
    timestamp_ms: float = 0.0

    def __post_init__(self):
        if len(self.fingers) != 5:
            raise ValueError("a hand frame carries exactly 5 finger pairs")
        norm = math.sqrt(sum(c * c for c in self.hand_forward))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError("hand_forward must be a unit vector")


@dataclass(frozen=True)
class GraphTransform:
    """Uniform scale followed by translation: world = translation + scale * local."""

    translation: Vec3 = (0.0, 0.0, 0.0)
    scale: float = 1.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError("scale must be > 0")

    def apply(self, local: Vec3) -> Vec3:
        return (self.translation[0] + self.scale * local[0],
                self.translation[1] + self.scale * local[1],
                self.translation[2] + self.scale * local[2])

    def to_local(self, world: Vec3) -> Vec3:
        return ((world[0] - self.translation[0]) / self.scale,
                (world[1] - self.translation[1]) / self.scale,
                (world[2] - self.translation[2]) / self.scale)


@dataclass(frozen=True)
class InteractionState:
    """Per-client session state; anchors are set iff a gesture is active."""

    mode: Mode = Mode.IDLE
    current: GraphTransform = GraphTransform()
    anchor: Vec3 | None = None
    anchor_transform: GraphTransform | None = None
    anchor_forward: Vec3 | None = None
    highlighted: int | None = None
    fingers: tuple[FingerState, ...] = CLOSED_HAND


@dataclass(frozen=True)
class Highlight:
    """A picked vertex with its emanating edges and label text."""

    vertex: int
    edges: tuple[tuple[int, int], ...]
    label: str | None


def classify_finger(knuckle: Vec3, tip: Vec3, hand_forward: Vec3,
                    prev: FingerState) -> FingerState:
    """Open/closed from the knuckle-to-tip angle, with hysteresis.

    Commits OPEN below 80 degrees and CLOSED above 100; inside the band
    (or for a degenerate zero-length finger) the previous state holds.
    """
    vx = tip[0] - knuckle[0]
    vy = tip[1] - knuckle[1]
    vz = tip[2] - knuckle[2]
    norm = math.sqrt(vx * vx + vy * vy + vz * vz)
    if norm < 1e-12:
        return prev
    cos_theta = (vx * hand_forward[0] + vy * hand_forward[1]
                 + vz * hand_forward[2]) / norm
    if cos_theta > _COS_OPEN:
        return FingerState(True)
    if cos_theta < _COS_CLOSED:
        return FingerState(False)
    return prev


def encode_pose(frame: HandFrame,
                prev: tuple[FingerState, ...] = CLOSED_HAND) -> tuple[int, tuple[FingerState, ...]]:
    """Classify all five fingers and pack them into a 5-bit pose code."""
    states = tuple(
        classify_finger(knuckle, tip, frame.hand_forward, prev[i])
        for i, (knuckle, tip) in enumerate(frame.fingers)
    )
    code = 0
    for i, s in enumerate(states):
        if s.open:
            code |= 1 << i
    return code, states


def pose_to_mode(code: int) -> GestureMode:
    """Map a pose code to its gesture; unassigned codes are idle."""
    if code == POSE_FIST:
        return GestureMode.GRAB
    if code == POSE_PINCH:
        return GestureMode.SCALE
    if code == POSE_POINT:
        return GestureMode.HIGHLIGHT
    return GestureMode.IDLE


def apply_grab(state: InteractionState, hand: Vec3) -> InteractionState:
    """Translate by the hand displacement since the gesture anchor."""
    if state.mode is not Mode.GRABBING or state.anchor is None:
        raise ValueError("apply_grab requires an active grab gesture")
    base = state.anchor_transform
    translation = (base.translation[0] + hand[0] - state.anchor[0],
                   base.translation[1] + hand[1] - state.anchor[1],
                   base.translation[2] + hand[2] - state.anchor[2])
    return replace(state, current=GraphTransform(translation, base.scale))


def apply_scale(state: InteractionState, hand: Vec3) -> InteractionState:
    """Rescale about the gesture-start point by exponential radial drag.

    The factor is exp(SCALE_RATE * d) where d is the hand displacement
    projected on the axis from the graph center (at gesture start) out
    to the anchor; dragging outward grows, inward shrinks, and the world
    position of the anchor point never moves.
    """
    if state.mode is not Mode.SCALING or state.anchor is None:
        raise ValueError("apply_scale requires an active scale gesture")
    base = state.anchor_transform
    anchor = state.anchor
    rx = anchor[0] - base.translation[0]
    ry = anchor[1] - base.translation[1]
    rz = anchor[2] - base.translation[2]
    norm = math.sqrt(rx * rx + ry * ry + rz * rz)
    if norm < 1e-12:
        rx, ry, rz = state.anchor_forward or (0.0, 0.0, 1.0)
    else:
        rx, ry, rz = rx / norm, ry / norm, rz / norm
    d = ((hand[0] - anchor[0]) * rx + (hand[1] - anchor[1]) * ry
         + (hand[2] - anchor[2]) * rz)
    f = math.exp(SCALE_RATE * d)
    translation = (anchor[0] + f * (base.translation[0] - anchor[0]),
                   anchor[1] + f * (base.translation[1] - anchor[1]),
                   anchor[2] + f * (base.translation[2] - anchor[2]))
    return replace(state, current=GraphTransform(translation, base.scale * f))


def update_highlight(g: Graph, tree: KdTree, fingertip: Vec3,
                     radius: float = DEFAULT_HIGHLIGHT_RADIUS) -> Highlight | None:
    """Pick the node nearest the fingertip (graph-local coords) within radius.

    Returns the vertex with all its emanating edges and its label so a
    client can illuminate and annotate the selection.
    """
    hit = tree.nearest_within(fingertip, radius)
    if hit is None:
        return None
    vertex = hit[0]
    edges = tuple(e for e in g.edges if vertex in e)
    return Highlight(vertex=vertex, edges=edges, label=g.meta[vertex].label)


_MODE_FOR_GESTURE = {
    GestureMode.GRAB: Mode.GRABBING,
    GestureMode.SCALE: Mode.SCALING,
    GestureMode.IDLE: Mode.IDLE,
    GestureMode.HIGHLIGHT: Mode.IDLE,
}


def step_session(state: InteractionState, frame: HandFrame, tree: KdTree | None,
                 graph: Graph | None, *, client_id: int = 0,
                 sequences: SequenceAllocator | None = None,
                 highlight_radius: float = DEFAULT_HIGHLIGHT_RADIUS,
                 ) -> tuple[InteractionState, list[Message]]:
    """Per-frame driver: classify pose, update the gesture, emit full state.

    Entering grab/scale records the hand position and transform as the
    gesture anchor; every frame then recomputes the transform from that
    anchor, so the result depends only on the latest hand position.
    Messages carry complete state (transform + pose + highlight) each
    frame regardless of whether anything changed.
    """
    sequences = sequences if sequences is not None else SequenceAllocator()
    code, fingers = encode_pose(frame, state.fingers)
    gesture = pose_to_mode(code)
    mode = _MODE_FOR_GESTURE[gesture]

    if mode is not state.mode:
        if mode is Mode.IDLE:
            state = replace(state, mode=mode, anchor=None,
                            anchor_transform=None, anchor_forward=None)
        else:
            state = replace(state, mode=mode, anchor=frame.hand_position,
                            anchor_transform=state.current,
                            anchor_forward=frame.hand_forward)
    state = replace(state, fingers=fingers)

    if state.mode is Mode.GRABBING:
        state = apply_grab(state, frame.hand_position)
    elif state.mode is Mode.SCALING:
        state = apply_scale(state, frame.hand_position)

    highlighted: int | None = None
    if gesture is GestureMode.HIGHLIGHT and tree is not None and graph is not None:
        index_tip = frame.fingers[1][1]
        local = state.current.to_local(index_tip)
        hit = update_highlight(graph, tree, local, highlight_radius)
        if hit is not None:
            highlighted = hit.vertex
    state = replace(state, highlighted=highlighted)

    messages = [
        Message(MsgType.TRANSFORM, client_id, sequences.next(MsgType.TRANSFORM),
                TransformPayload(state.current.translation, state.current.scale).pack()),
        Message(MsgType.POSE, client_id, sequences.next(MsgType.POSE),
                PosePayload(frame.hand_position, frame.hand_forward, code,
                            frame.fingers).pack()),
        Message(MsgType.HIGHLIGHT, client_id, sequences.next(MsgType.HIGHLIGHT),
                HighlightPayload(state.highlighted).pack()),
    ]
    return state, messages


def make_hand_frame(code: int, hand_position: Vec3 = (0.0, 0.0, 0.0),
                    hand_forward: Vec3 = (0.0, 0.0, 1.0),
                    timestamp_ms: float = 0.0,
                    open_angle_deg: float = 10.0,
                    closed_angle_deg: float = 170.0) -> HandFrame:
    """Synthesize a frame whose joints classify to the given pose code.

    Open fingers point ``open_angle_deg`` off the forward axis, closed
    ones ``closed_angle_deg``; both default far outside the hysteresis
    band so the frame commits the pose regardless of prior state.
    """
    if not 0 <= code <= 31:
        raise ValueError("pose code must fit in 5 bits")
    fx, fy, fz = hand_forward
    # Any axis not parallel to forward works for building the off-axis bend.
    ref = (1.0, 0.0, 0.0) if abs(fx) < 0.9 else (0.0, 1.0, 0.0)
    sx = fy * ref[2] - fz * ref[1]
    sy = fz * ref[0] - fx * ref[2]
    sz = fx * ref[1] - fy * ref[0]
    sn = math.sqrt(sx * sx + sy * sy + sz * sz)
    sx, sy, sz = sx / sn, sy / sn, sz / sn

    fingers = []
    for i in range(5):
        angle = math.radians(open_angle_deg if code >> i & 1 else closed_angle_deg)
        knuckle = (hand_position[0] + 0.02 * i * sx,
                   hand_position[1] + 0.02 * i * sy,
                   hand_position[2] + 0.02 * i * sz)
        length = 0.05
        tip = (knuckle[0] + length * (math.cos(angle) * fx + math.sin(angle) * sx),
               knuckle[1] + length * (math.cos(angle) * fy + math.sin(angle) * sy),
               knuckle[2] + length * (math.cos(angle) * fz + math.sin(angle) * sz))
        fingers.append((knuckle, tip))
    return HandFrame(hand_position=hand_position, hand_forward=hand_forward,
                     fingers=tuple(fingers), timestamp_ms=timestamp_ms)
