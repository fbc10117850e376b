/**
 * Loopback integration against the real analysis server: two viewer
 * session clients exchange grab/scale/highlight state through the
 * /session bridge, and a layout job's result renders into scene buffers.
 */

import { spawn, ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { MsgType, unpackHighlight, unpackPresence,
         unpackTransform } from "../src/codec.js";
import { buildSceneBuffers, parseAnnotatedDocument } from "../src/scene.js";
import { SessionClient, Transport, webSocketTransport } from "../src/session.js";

const HTTP_PORT = 8717 + Math.floor(Math.random() * 200);
const UDP_PORT = HTTP_PORT + 1000;
const BASE = `http://127.0.0.1:${HTTP_PORT}`;

let server: ChildProcess;
let dataDir: string;

async function waitForHealthy(timeoutMs = 20_000): Promise<void> {
    const deadline = Date.now() + timeoutMs;
    while (Date.now() < deadline) {
        try {
            const r = await fetch(`${BASE}/healthz`);
            if (r.ok) return;
        } catch {
            // not up yet
        }
        await new Promise((r) => setTimeout(r, 100));
    }
    throw new Error("analysis server never became healthy");
}

function makeClient(clientId: number): SessionClient {
    return new SessionClient({
        clientId,
        transportFactory: webSocketTransport(
            `ws://127.0.0.1:${HTTP_PORT}/session?client_id=${clientId}`,
            WebSocket as unknown as typeof globalThis.WebSocket),
        tickMs: 16,
    });
}

async function until<T>(probe: () => T | null | undefined, timeoutMs: number,
                        what: string): Promise<[T, number]> {
    const start = Date.now();
    for (;;) {
        const value = probe();
        if (value !== null && value !== undefined) return [value, Date.now() - start];
        if (Date.now() - start > timeoutMs) throw new Error(`timed out: ${what}`);
        await new Promise((r) => setTimeout(r, 5));
    }
}

beforeAll(async () => {
    dataDir = mkdtempSync(join(tmpdir(), "graphite-viewer-test-"));
    server = spawn("python3", ["-m", "graphite.cli", "serve",
                               "--http-port", String(HTTP_PORT),
                               "--udp-port", String(UDP_PORT),
                               "--data-dir", dataDir],
                   { stdio: "ignore" });
    await waitForHealthy();
});

afterAll(() => {
    server?.kill();
    rmSync(dataDir, { recursive: true, force: true });
});

describe("cross-client session sync", () => {
    it("propagates grab, scale, and highlight within 200 ms", async () => {
        const a = makeClient(101);
        const b = makeClient(102);
        a.start();
        b.start();
        try {
            // both clients see each other's baseline first
            await until(() => b.store.get(101, MsgType.Transform), 5000,
                        "baseline transform from A");
            await until(() => a.store.get(102, MsgType.Transform), 5000,
                        "baseline transform from B");

            // grab: A moves the graph; B must follow within 200 ms
            a.local = { ...a.local,
                        transform: { translation: [0.5, -0.25, 0.125], scale: 1 } };
            const [moved, grabMs] = await until(() => {
                const m = b.store.get(101, MsgType.Transform);
                if (m === undefined) return null;
                const t = unpackTransform(m.payload);
                return t.translation[0] === 0.5 ? t : null;
            }, 5000, "grab propagation");
            expect(grabMs).toBeLessThan(200);
            expect(moved.translation).toEqual([0.5, -0.25, 0.125]);

            // scale about a point
            a.local = { ...a.local,
                        transform: { translation: [0.5, -0.25, 0.125], scale: 2.5 } };
            const [, scaleMs] = await until(() => {
                const m = b.store.get(101, MsgType.Transform);
                return m !== undefined && unpackTransform(m.payload).scale === 2.5
                    ? m : null;
            }, 5000, "scale propagation");
            expect(scaleMs).toBeLessThan(200);

            // highlight a node for everyone
            a.local = { ...a.local, highlighted: 7 };
            const [, highlightMs] = await until(() => {
                const m = b.store.get(101, MsgType.Highlight);
                return m !== undefined && unpackHighlight(m.payload) === 7 ? m : null;
            }, 5000, "highlight propagation");
            expect(highlightMs).toBeLessThan(200);

            // presence keeps idle clients' avatars alive on A's side too
            const [presence] = await until(
                () => a.store.get(102, MsgType.Presence), 5000,
                "presence from idle client");
            expect(unpackPresence(presence.payload).orientation).toEqual([0, 0, 0, 1]);
        } finally {
            a.stop();
            b.stop();
        }
    });

    it("late joiner receives the state snapshot", async () => {
        const a = makeClient(111);
        a.start();
        try {
            a.local = { ...a.local,
                        transform: { translation: [9, 0, 0], scale: 1 },
                        highlighted: 3 };
            await new Promise((r) => setTimeout(r, 150)); // a few ticks land

            const late = makeClient(112);
            late.start();
            try {
                const [snap] = await until(() => {
                    const m = late.store.get(111, MsgType.Transform);
                    return m !== undefined && unpackTransform(m.payload).translation[0] === 9
                        ? m : null;
                }, 5000, "snapshot replay");
                expect(unpackTransform(snap.payload).translation[0]).toBe(9);
            } finally {
                late.stop();
            }
        } finally {
            a.stop();
        }
    });
});

describe("reconnection", () => {
    it("dials a fresh transport after the connection drops", async () => {
        const transports: FakeTransport[] = [];
        class FakeTransport implements Transport {
            sent: Uint8Array[] = [];
            onmessage: ((data: Uint8Array) => void) | null = null;
            onclose: (() => void) | null = null;
            onopen: (() => void) | null = null;
            send(data: Uint8Array): void { this.sent.push(data); }
            close(): void {}
        }
        const client = new SessionClient({
            clientId: 5,
            transportFactory: () => {
                const t = new FakeTransport();
                transports.push(t);
                setTimeout(() => t.onopen?.(), 0);
                return t;
            },
            tickMs: 10,
            reconnectDelayMs: 20,
        });
        client.start();
        try {
            await until(() => transports[0]?.sent.length ? true : null, 2000,
                        "first transport carried state");
            transports[0].onclose?.(); // simulate the server going away
            const [, ms] = await until(
                () => transports.length >= 2 && transports[1].sent.length
                    ? true : null,
                2000, "reconnected transport carried state");
            expect(ms).toBeLessThan(1000);
        } finally {
            client.stop();
        }
    });
});

describe("viewer consumes real server output", () => {
    it("submits a job, fetches the result, and builds two draw batches", async () => {
        const n = 40;
        const doc = {
            directed: false,
            nodes: Array.from({ length: n }, (_, i) => ({ id: `v${i}` })),
            edges: Array.from({ length: n }, (_, i) => [`v${i}`, `v${(i + 1) % n}`]),
        };
        const submit = await fetch(`${BASE}/jobs?iterations=40&seed=5`, {
            method: "POST",
            body: JSON.stringify(doc),
        });
        expect(submit.ok).toBe(true);
        const { job_id } = await submit.json() as { job_id: string };

        const deadline = Date.now() + 20_000;
        let state = "";
        while (Date.now() < deadline) {
            const status = await fetch(`${BASE}/jobs/${job_id}`);
            state = ((await status.json()) as { state: string }).state;
            if (state === "done" || state === "failed") break;
            await new Promise((r) => setTimeout(r, 100));
        }
        expect(state).toBe("done");

        const result = await fetch(`${BASE}/jobs/${job_id}/result`);
        const annotated = parseAnnotatedDocument(await result.text());
        expect(annotated.nodes.length).toBe(n);
        expect(annotated.nodes.every((node) => node.cluster !== null)).toBe(true);
        const buffers = buildSceneBuffers(annotated);
        expect(buffers.drawBatches).toBe(2);
        expect(buffers.monochrome).toBe(false);
        expect(buffers.edgeCount).toBe(n);
    });
});
