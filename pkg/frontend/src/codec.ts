/**
 * Binary wire codec: datagram framing, fragmentation, reassembly, payloads.
 *
 * Byte-compatible with the analysis server. Layout (little-endian),
 * 16-byte header: magic u16 0x474A, version u8 (=1), msg_type u8,
 * client_id u16, sequence u32, frag_index u16, frag_count u16,
 * payload_len u16, then the payload. Messages are pre-fragmented below
 * the MTU; a missing fragment discards the whole message.
 */

export const MAGIC = 0x474a;
export const VERSION = 1;
export const HEADER_SIZE = 16;
export const DEFAULT_MTU = 1400;
export const MAX_PAYLOAD = 64 * 1024;
export const HIGHLIGHT_NONE = 0xffffffff;

export enum MsgType {
    Pose = 1,
    Transform = 2,
    Highlight = 3,
    Presence = 4,
}

export interface Message {
    msgType: MsgType;
    clientId: number;
    sequence: number;
    payload: Uint8Array;
}

/** b is newer than a under the u32 wrap window. */
export function seqNewer(candidate: number, reference: number): boolean {
    const delta = (candidate - reference) >>> 0;
    return delta > 0 && delta < 0x80000000;
}

export function encodeMessage(m: Message, mtu: number = DEFAULT_MTU): Uint8Array[] {
    if (mtu < HEADER_SIZE + 1) {
        throw new Error(`mtu ${mtu} below minimum ${HEADER_SIZE + 1}`);
    }
    if (m.payload.length > MAX_PAYLOAD) {
        throw new Error(`payload of ${m.payload.length} bytes exceeds ${MAX_PAYLOAD}`);
    }
    const chunk = mtu - HEADER_SIZE;
    const count = Math.max(1, Math.ceil(m.payload.length / chunk));
    if (count > 0xffff) {
        throw new Error("payload requires more than 65535 fragments at this mtu");
    }
    const frags: Uint8Array[] = [];
    for (let i = 0; i < count; i++) {
        const part = m.payload.subarray(i * chunk, (i + 1) * chunk);
        const out = new Uint8Array(HEADER_SIZE + part.length);
        const view = new DataView(out.buffer);
        view.setUint16(0, MAGIC, true);
        view.setUint8(2, VERSION);
        view.setUint8(3, m.msgType);
        view.setUint16(4, m.clientId, true);
        view.setUint32(6, m.sequence, true);
        view.setUint16(10, i, true);
        view.setUint16(12, count, true);
        view.setUint16(14, part.length, true);
        out.set(part, HEADER_SIZE);
        frags.push(out);
    }
    return frags;
}

interface Pending {
    sequence: number;
    fragCount: number;
    parts: Map<number, Uint8Array>;
    bytes: number;
}

/**
 * Per-connection fragment tracker: one in-flight message per
 * (client, type), always the newest sequence; garbage is counted and
 * dropped, never thrown.
 */
export class Reassembler {
    malformed = 0;
    evicted = 0;
    stale = 0;
    private pending = new Map<string, Pending>();
    private delivered = new Map<string, number>();

    decode(data: Uint8Array): Message | null {
        if (data.length < HEADER_SIZE) {
            this.malformed++;
            return null;
        }
        const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
        const magic = view.getUint16(0, true);
        const version = view.getUint8(2);
        const msgType = view.getUint8(3);
        const clientId = view.getUint16(4, true);
        const sequence = view.getUint32(6, true);
        const fragIndex = view.getUint16(10, true);
        const fragCount = view.getUint16(12, true);
        const payloadLen = view.getUint16(14, true);
        if (magic !== MAGIC || version !== VERSION
            || !(msgType >= 1 && msgType <= 4)
            || fragCount < 1 || fragIndex >= fragCount
            || payloadLen !== data.length - HEADER_SIZE) {
            this.malformed++;
            return null;
        }

        const key = `${clientId}:${msgType}`;
        const last = this.delivered.get(key);
        if (last !== undefined && !seqNewer(sequence, last)) {
            this.stale++;
            return null;
        }
        const payload = data.slice(HEADER_SIZE);

        if (fragCount === 1) {
            const p = this.pending.get(key);
            if (p !== undefined && !seqNewer(p.sequence, sequence)) {
                this.pending.delete(key);
                this.evicted++;
            }
            this.delivered.set(key, sequence);
            return { msgType, clientId, sequence, payload };
        }

        let p = this.pending.get(key);
        if (p === undefined || seqNewer(sequence, p.sequence)) {
            if (p !== undefined) this.evicted++;
            p = { sequence, fragCount, parts: new Map(), bytes: 0 };
            this.pending.set(key, p);
        } else if (sequence !== p.sequence) {
            this.stale++;
            return null;
        }
        if (fragCount !== p.fragCount) {
            this.malformed++;
            return null;
        }
        if (!p.parts.has(fragIndex)) {
            p.parts.set(fragIndex, payload);
            p.bytes += payload.length;
        }
        if (p.bytes > MAX_PAYLOAD) {
            this.pending.delete(key);
            this.malformed++;
            return null;
        }
        if (p.parts.size < p.fragCount) return null;

        const whole = new Uint8Array(p.bytes);
        let offset = 0;
        for (let i = 0; i < p.fragCount; i++) {
            const part = p.parts.get(i)!;
            whole.set(part, offset);
            offset += part.length;
        }
        this.pending.delete(key);
        this.delivered.set(key, sequence);
        return { msgType, clientId, sequence, payload: whole };
    }
}

// --- length-prefixed stream framing (the /session bridge) -----------------

export function packRecord(datagram: Uint8Array): Uint8Array {
    const out = new Uint8Array(4 + datagram.length);
    new DataView(out.buffer).setUint32(0, datagram.length, true);
    out.set(datagram, 4);
    return out;
}

/** Accumulates stream bytes and yields complete records. */
export class StreamParser {
    private buffer = new Uint8Array(0);

    push(chunk: Uint8Array): Uint8Array[] {
        const merged = new Uint8Array(this.buffer.length + chunk.length);
        merged.set(this.buffer, 0);
        merged.set(chunk, this.buffer.length);
        this.buffer = merged;
        const records: Uint8Array[] = [];
        while (this.buffer.length >= 4) {
            const len = new DataView(this.buffer.buffer, this.buffer.byteOffset)
                .getUint32(0, true);
            if (this.buffer.length < 4 + len) break;
            records.push(this.buffer.slice(4, 4 + len));
            this.buffer = this.buffer.slice(4 + len);
        }
        return records;
    }
}

// --- typed payload bodies --------------------------------------------------

export type Vec3 = [number, number, number];
export type Quat = [number, number, number, number];

export interface FingerPair {
    knuckle: Vec3;
    tip: Vec3;
}

export interface PosePayload {
    handPosition: Vec3;
    handForward: Vec3;
    poseCode: number;
    fingers: FingerPair[]; // exactly 5, thumb..pinky
}

export interface TransformPayload {
    translation: Vec3;
    scale: number;
}

export interface PresencePayload {
    headPosition: Vec3;
    orientation: Quat;
}

export const POSE_PAYLOAD_SIZE = 145;
export const TRANSFORM_PAYLOAD_SIZE = 16;
export const HIGHLIGHT_PAYLOAD_SIZE = 4;
export const PRESENCE_PAYLOAD_SIZE = 28;

function putVec3(view: DataView, offset: number, v: Vec3): void {
    view.setFloat32(offset, v[0], true);
    view.setFloat32(offset + 4, v[1], true);
    view.setFloat32(offset + 8, v[2], true);
}

function getVec3(view: DataView, offset: number): Vec3 {
    return [view.getFloat32(offset, true), view.getFloat32(offset + 4, true),
            view.getFloat32(offset + 8, true)];
}

export function packTransform(t: TransformPayload): Uint8Array {
    const out = new Uint8Array(TRANSFORM_PAYLOAD_SIZE);
    const view = new DataView(out.buffer);
    putVec3(view, 0, t.translation);
    view.setFloat32(12, t.scale, true);
    return out;
}

export function unpackTransform(data: Uint8Array): TransformPayload {
    const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
    return { translation: getVec3(view, 0), scale: view.getFloat32(12, true) };
}

export function packHighlight(vertex: number | null): Uint8Array {
    const out = new Uint8Array(HIGHLIGHT_PAYLOAD_SIZE);
    new DataView(out.buffer).setUint32(0, vertex === null ? HIGHLIGHT_NONE : vertex, true);
    return out;
}

export function unpackHighlight(data: Uint8Array): number | null {
    const raw = new DataView(data.buffer, data.byteOffset, data.byteLength)
        .getUint32(0, true);
    return raw === HIGHLIGHT_NONE ? null : raw;
}

export function packPose(p: PosePayload): Uint8Array {
    if (p.fingers.length !== 5) throw new Error("pose payload requires 5 finger pairs");
    const out = new Uint8Array(POSE_PAYLOAD_SIZE);
    const view = new DataView(out.buffer);
    putVec3(view, 0, p.handPosition);
    putVec3(view, 12, p.handForward);
    view.setUint8(24, p.poseCode & 0x1f);
    let offset = 25;
    for (const finger of p.fingers) {
        putVec3(view, offset, finger.knuckle);
        putVec3(view, offset + 12, finger.tip);
        offset += 24;
    }
    return out;
}

export function unpackPose(data: Uint8Array): PosePayload {
    if (data.length !== POSE_PAYLOAD_SIZE) {
        throw new Error(`pose payload must be ${POSE_PAYLOAD_SIZE} bytes`);
    }
    const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
    const fingers: FingerPair[] = [];
    let offset = 25;
    for (let i = 0; i < 5; i++) {
        fingers.push({ knuckle: getVec3(view, offset), tip: getVec3(view, offset + 12) });
        offset += 24;
    }
    return {
        handPosition: getVec3(view, 0),
        handForward: getVec3(view, 12),
        poseCode: view.getUint8(24),
        fingers,
    };
}

export function packPresence(p: PresencePayload): Uint8Array {
    const out = new Uint8Array(PRESENCE_PAYLOAD_SIZE);
    const view = new DataView(out.buffer);
    putVec3(view, 0, p.headPosition);
    view.setFloat32(12, p.orientation[0], true);
    view.setFloat32(16, p.orientation[1], true);
    view.setFloat32(20, p.orientation[2], true);
    view.setFloat32(24, p.orientation[3], true);
    return out;
}

export function unpackPresence(data: Uint8Array): PresencePayload {
    const view = new DataView(data.buffer, data.byteOffset, data.byteLength);
    return {
        headPosition: getVec3(view, 0),
        orientation: [view.getFloat32(12, true), view.getFloat32(16, true),
                      view.getFloat32(20, true), view.getFloat32(24, true)],
    };
}
