/**
 * Desk-scale gesture emulation: pointer position is a virtual hand,
 * keyboard chords select the pose, and the grab/scale state machine
 * recomputes the whole-graph transform from the gesture anchor every
 * frame, byte-for-byte the same message semantics as a tracked glove.
 *
 * Chords: hold G for a fist (grab), S for thumb+index (scale); plain
 * hovering points the index finger (highlight).
 */

import { FingerPair, Vec3 } from "./codec.js";

export const POSE_FIST = 0b00000;
export const POSE_POINT = 0b00010;
export const POSE_PINCH = 0b00011;
export const POSE_OPEN_HAND = 0b11111;

export const SCALE_RATE = 2.0; // exponential drag factor per unit length

export interface ChordState {
    grab: boolean;   // G held
    scale: boolean;  // S held
}

export function poseForChord(chord: ChordState): number {
    if (chord.grab) return POSE_FIST;
    if (chord.scale) return POSE_PINCH;
    return POSE_POINT; // hovering always points for highlight
}

export type GestureMode = "idle" | "grab" | "scale";

export function modeForPose(code: number): GestureMode {
    if (code === POSE_FIST) return "grab";
    if (code === POSE_PINCH) return "scale";
    return "idle";
}

export interface Transform {
    translation: Vec3;
    scale: number;
}

export const IDENTITY: Transform = { translation: [0, 0, 0], scale: 1 };

export function applyTransform(t: Transform, local: Vec3): Vec3 {
    return [t.translation[0] + t.scale * local[0],
            t.translation[1] + t.scale * local[1],
            t.translation[2] + t.scale * local[2]];
}

export function toLocal(t: Transform, world: Vec3): Vec3 {
    return [(world[0] - t.translation[0]) / t.scale,
            (world[1] - t.translation[1]) / t.scale,
            (world[2] - t.translation[2]) / t.scale];
}

export interface GestureState {
    mode: GestureMode;
    current: Transform;
    anchor: Vec3 | null;
    anchorTransform: Transform | null;
    anchorForward: Vec3;
}

export function initialGestureState(): GestureState {
    return { mode: "idle", current: IDENTITY, anchor: null,
             anchorTransform: null, anchorForward: [0, 0, 1] };
}

function grabTransform(state: GestureState, hand: Vec3): Transform {
    const base = state.anchorTransform!;
    const anchor = state.anchor!;
    return {
        translation: [base.translation[0] + hand[0] - anchor[0],
                      base.translation[1] + hand[1] - anchor[1],
                      base.translation[2] + hand[2] - anchor[2]],
        scale: base.scale,
    };
}

function scaleTransform(state: GestureState, hand: Vec3): Transform {
    const base = state.anchorTransform!;
    const anchor = state.anchor!;
    let rx = anchor[0] - base.translation[0];
    let ry = anchor[1] - base.translation[1];
    let rz = anchor[2] - base.translation[2];
    const norm = Math.sqrt(rx * rx + ry * ry + rz * rz);
    if (norm < 1e-12) {
        [rx, ry, rz] = state.anchorForward;
    } else {
        rx /= norm; ry /= norm; rz /= norm;
    }
    const d = (hand[0] - anchor[0]) * rx + (hand[1] - anchor[1]) * ry
        + (hand[2] - anchor[2]) * rz;
    const f = Math.exp(SCALE_RATE * d);
    return {
        translation: [anchor[0] + f * (base.translation[0] - anchor[0]),
                      anchor[1] + f * (base.translation[1] - anchor[1]),
                      anchor[2] + f * (base.translation[2] - anchor[2])],
        scale: base.scale * f,
    };
}

/**
 * Advance the gesture with this frame's pose and hand position.
 * Entering grab/scale records the anchor; while active, the transform is
 * recomputed absolutely from it (pure state, no accumulated deltas).
 */
export function stepGesture(state: GestureState, poseCode: number,
                            hand: Vec3, forward: Vec3 = [0, 0, 1]): GestureState {
    const mode = modeForPose(poseCode);
    let next: GestureState = { ...state };
    if (mode !== state.mode) {
        if (mode === "idle") {
            next = { ...next, mode, anchor: null, anchorTransform: null };
        } else {
            next = { ...next, mode, anchor: hand,
                     anchorTransform: state.current, anchorForward: forward };
        }
    }
    if (next.mode === "grab") {
        next.current = grabTransform(next, hand);
    } else if (next.mode === "scale") {
        next.current = scaleTransform(next, hand);
    }
    return next;
}

/**
 * Synthetic hand joints realizing a pose code, mirroring the tracked
 * client's frame synthesis: open fingers point 10 degrees off the
 * forward axis, closed ones 170.
 */
export function makeFingers(code: number, hand: Vec3,
                            forward: Vec3 = [0, 0, 1]): FingerPair[] {
    const ref: Vec3 = Math.abs(forward[0]) < 0.9 ? [1, 0, 0] : [0, 1, 0];
    let sx = forward[1] * ref[2] - forward[2] * ref[1];
    let sy = forward[2] * ref[0] - forward[0] * ref[2];
    let sz = forward[0] * ref[1] - forward[1] * ref[0];
    const sn = Math.sqrt(sx * sx + sy * sy + sz * sz);
    sx /= sn; sy /= sn; sz /= sn;

    const fingers: FingerPair[] = [];
    for (let i = 0; i < 5; i++) {
        const open = (code >> i) & 1;
        const angle = (open ? 10 : 170) * Math.PI / 180;
        const knuckle: Vec3 = [hand[0] + 0.02 * i * sx,
                               hand[1] + 0.02 * i * sy,
                               hand[2] + 0.02 * i * sz];
        const length = 0.05;
        const tip: Vec3 = [
            knuckle[0] + length * (Math.cos(angle) * forward[0] + Math.sin(angle) * sx),
            knuckle[1] + length * (Math.cos(angle) * forward[1] + Math.sin(angle) * sy),
            knuckle[2] + length * (Math.cos(angle) * forward[2] + Math.sin(angle) * sz),
        ];
        fingers.push({ knuckle, tip });
    }
    return fingers;
}

/** Index fingertip of a synthesized hand (the highlight probe point). */
export function indexTip(code: number, hand: Vec3, forward: Vec3 = [0, 0, 1]): Vec3 {
    return makeFingers(code, hand, forward)[1].tip;
}
