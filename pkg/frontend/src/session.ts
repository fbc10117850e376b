/**
 * Live session client for the /session bridge.
 *
 * Outbound: every tick broadcasts the complete local state (transform +
 * pose + highlight, each with its own wrapping sequence) so packet loss
 * merely delays convergence. Inbound: datagram records are reassembled
 * and merged latest-wins; remote transforms, poses, highlights, and
 * presence flow to the renderer through callbacks. A dropped connection
 * reconnects and the server replays its state snapshot on join.
 */

import {
    encodeMessage, Message, MsgType, packHighlight, packPose, packPresence,
    packRecord, packTransform, Quat, Reassembler, StreamParser, Vec3,
} from "./codec.js";
import { makeFingers, Transform } from "./gesture.js";
import { StateStore } from "./store.js";

export interface Transport {
    send(data: Uint8Array): void;
    close(): void;
    onmessage: ((data: Uint8Array) => void) | null;
    onclose: (() => void) | null;
    onopen: (() => void) | null;
}

export type TransportFactory = () => Transport;

export interface LocalState {
    transform: Transform;
    poseCode: number;
    handPosition: Vec3;
    handForward: Vec3;
    highlighted: number | null;
    headPosition: Vec3;
    headOrientation: Quat;
}

export interface SessionOptions {
    clientId: number;
    transportFactory: TransportFactory;
    tickMs?: number;               // default 33 (about 30 Hz)
    reconnectDelayMs?: number;     // default 500
    onRemoteMessage?: (m: Message) => void;
    onConnect?: () => void;
}

export class SessionClient {
    readonly clientId: number;
    readonly store = new StateStore();
    private readonly options: SessionOptions;
    private readonly sequences = new Map<MsgType, number>();
    private readonly reassembler = new Reassembler();
    private parser = new StreamParser();
    private transport: Transport | null = null;
    private timer: ReturnType<typeof setInterval> | null = null;
    private reconnectTimer: ReturnType<typeof setTimeout> | null = null;
    private stopped = false;
    local: LocalState = {
        transform: { translation: [0, 0, 0], scale: 1 },
        poseCode: 0b11111,
        handPosition: [0, 0, 0],
        handForward: [0, 0, 1],
        highlighted: null,
        headPosition: [0, 0, 2],
        headOrientation: [0, 0, 0, 1],
    };

    constructor(options: SessionOptions) {
        this.clientId = options.clientId;
        this.options = options;
    }

    start(): void {
        this.stopped = false;
        this.connect();
        this.timer = setInterval(() => this.tick(), this.options.tickMs ?? 33);
    }

    stop(): void {
        this.stopped = true;
        if (this.timer !== null) clearInterval(this.timer);
        if (this.reconnectTimer !== null) clearTimeout(this.reconnectTimer);
        this.transport?.close();
        this.transport = null;
    }

    private connect(): void {
        this.parser = new StreamParser();
        const transport = this.options.transportFactory();
        transport.onopen = () => {
            this.options.onConnect?.();
            this.tick(); // announce state immediately on (re)join
        };
        transport.onmessage = (data) => {
            for (const record of this.parser.push(data)) {
                const message = this.reassembler.decode(record);
                if (message !== null && this.store.merge(message)) {
                    this.options.onRemoteMessage?.(message);
                }
            }
        };
        transport.onclose = () => {
            this.transport = null;
            if (!this.stopped) {
                this.reconnectTimer = setTimeout(
                    () => this.connect(), this.options.reconnectDelayMs ?? 500);
            }
        };
        this.transport = transport;
    }

    private nextSeq(msgType: MsgType): number {
        const seq = this.sequences.get(msgType) ?? 0;
        this.sequences.set(msgType, (seq + 1) >>> 0);
        return seq;
    }

    /** Broadcast the full local state; called by the interval and on join. */
    tick(): void {
        if (this.transport === null) return;
        const { transform, poseCode, handPosition, handForward, highlighted,
                headPosition, headOrientation } = this.local;
        const messages: Message[] = [
            {
                msgType: MsgType.Transform, clientId: this.clientId,
                sequence: this.nextSeq(MsgType.Transform),
                payload: packTransform({ translation: transform.translation,
                                         scale: transform.scale }),
            },
            {
                msgType: MsgType.Pose, clientId: this.clientId,
                sequence: this.nextSeq(MsgType.Pose),
                payload: packPose({
                    handPosition, handForward, poseCode,
                    fingers: makeFingers(poseCode, handPosition, handForward),
                }),
            },
            {
                msgType: MsgType.Highlight, clientId: this.clientId,
                sequence: this.nextSeq(MsgType.Highlight),
                payload: packHighlight(highlighted),
            },
            {
                msgType: MsgType.Presence, clientId: this.clientId,
                sequence: this.nextSeq(MsgType.Presence),
                payload: packPresence({ headPosition,
                                        orientation: headOrientation }),
            },
        ];
        const out: Uint8Array[] = [];
        for (const m of messages) {
            for (const datagram of encodeMessage(m)) {
                out.push(packRecord(datagram));
            }
        }
        const total = out.reduce((n, r) => n + r.length, 0);
        const frame = new Uint8Array(total);
        let offset = 0;
        for (const r of out) {
            frame.set(r, offset);
            offset += r.length;
        }
        try {
            this.transport.send(frame);
        } catch {
            // connection died mid-send; onclose will schedule the reconnect
        }
    }
}

/** Browser transport over a WebSocket (binary frames carry the stream). */
export function webSocketTransport(url: string,
                                   WS: typeof WebSocket = WebSocket): TransportFactory {
    return () => {
        const socket = new WS(url);
        socket.binaryType = "arraybuffer";
        const transport: Transport = {
            send: (data) => socket.send(data as Uint8Array<ArrayBuffer>),
            close: () => socket.close(),
            onmessage: null,
            onclose: null,
            onopen: null,
        };
        socket.onopen = () => transport.onopen?.();
        socket.onmessage = (event: MessageEvent) => {
            transport.onmessage?.(new Uint8Array(event.data as ArrayBuffer));
        };
        socket.onclose = () => transport.onclose?.();
        return transport;
    };
}
