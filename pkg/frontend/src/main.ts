/**
 * Browser entry point. Query parameters:
 *   ?server=host:port   analysis server (default: the page's host)
 *   &job=<job id>       which finished layout to load
 *   &client=<u16>       session client id (default: random)
 *
 * Hold G to grab, S to scale about the cursor; hovering highlights the
 * nearest node for everyone in the session.
 */

import * as THREE from "three";

import { MsgType, unpackTransform } from "./codec.js";
import { poseForChord, stepGesture, initialGestureState } from "./gesture.js";
import { buildSceneBuffersChunked, parseAnnotatedDocument } from "./scene.js";
import { SessionClient, webSocketTransport } from "./session.js";
import { GraphView, nearestNode } from "./viewer.js";

const HIGHLIGHT_RADIUS = 0.1;
const HAND_DEPTH = 2.0;

function banner(text: string, isError = false): void {
    const el = document.getElementById("banner")!;
    el.textContent = text;
    el.className = isError ? "error" : "";
}

async function run(): Promise<void> {
    const params = new URLSearchParams(location.search);
    const server = params.get("server") ?? location.host;
    const jobId = params.get("job");
    const clientId = Number(params.get("client") ?? Math.floor(Math.random() * 0xffff));
    if (!jobId) {
        banner("missing ?job=<id>; submit a layout job first", true);
        return;
    }

    banner("downloading layout…");
    const response = await fetch(`http://${server}/jobs/${jobId}/result`);
    if (!response.ok) {
        banner(`layout not available: ${response.status} ${await response.text()}`, true);
        return;
    }
    let doc: ReturnType<typeof parseAnnotatedDocument>;
    try {
        doc = parseAnnotatedDocument(await response.text());
    } catch (e) {
        banner(String(e), true);
        return;
    }

    banner("building geometry…");
    const buffers = await buildSceneBuffersChunked(doc, 2000, (f) => {
        banner(`building geometry… ${Math.round(f * 100)}%`);
    });

    const canvas = document.getElementById("view") as HTMLCanvasElement;
    const renderer = new THREE.WebGLRenderer({ canvas, antialias: true });
    renderer.setSize(innerWidth, innerHeight);
    const view = new GraphView(innerWidth / innerHeight,
                               document.getElementById("label"));
    view.setGraph(doc, buffers);
    banner(`${buffers.nodeCount} nodes / ${buffers.edgeCount} edges, `
           + `${buffers.drawBatches} draw batches`);

    const session = new SessionClient({
        clientId,
        transportFactory: webSocketTransport(
            `ws://${server}/session?client_id=${clientId}`),
    });
    session.start();

    let gesture = initialGestureState();
    const chord = { grab: false, scale: false };
    let pointer: [number, number] = [0, 0];

    addEventListener("keydown", (e) => {
        if (e.key === "g") chord.grab = true;
        if (e.key === "s") chord.scale = true;
    });
    addEventListener("keyup", (e) => {
        if (e.key === "g") chord.grab = false;
        if (e.key === "s") chord.scale = false;
    });
    addEventListener("pointermove", (e) => {
        pointer = [(e.clientX / innerWidth) * 2 - 1,
                   -(e.clientY / innerHeight) * 2 + 1];
    });
    addEventListener("resize", () => {
        renderer.setSize(innerWidth, innerHeight);
        view.camera.aspect = innerWidth / innerHeight;
        view.camera.updateProjectionMatrix();
    });

    function frame(): void {
        const hand = view.pointerToLocal(pointer[0], pointer[1], HAND_DEPTH,
                                         { translation: [0, 0, 0], scale: 1 });
        const code = poseForChord(chord);
        gesture = stepGesture(gesture, code, hand);

        let highlighted: number | null = null;
        if (gesture.mode === "idle") {
            const local = view.pointerToLocal(pointer[0], pointer[1], HAND_DEPTH,
                                              gesture.current);
            highlighted = nearestNode(doc, local, HIGHLIGHT_RADIUS / gesture.current.scale);
        }

        session.local = {
            transform: gesture.current,
            poseCode: code,
            handPosition: hand,
            handForward: [0, 0, 1],
            highlighted,
            headPosition: view.camera.position.toArray() as [number, number, number],
            headOrientation: view.camera.quaternion.toArray() as
                [number, number, number, number],
        };

        // remote transforms win when someone else is actively steering
        const remote = view.remoteTransform(session.store, clientId);
        const mine = session.store.get(clientId, MsgType.Transform);
        if (remote !== null && gesture.mode === "idle"
            && (mine === undefined
                || JSON.stringify(unpackTransform(mine.payload)) !== JSON.stringify(remote))) {
            gesture = { ...gesture, current: remote };
        }
        view.applyTransform(gesture.current);
        view.syncRemote(session.store, clientId);
        view.setHighlight(highlighted ?? null);
        renderer.render(view.scene, view.camera);
        requestAnimationFrame(frame);
    }
    requestAnimationFrame(frame);
}

run().catch((e) => banner(String(e), true));
