/**
 * Three.js rendering: the whole graph is exactly two draw batches (a
 * point cloud and a line-segment soup), remote participants appear as
 * mask+hand avatars, and highlights overlay the shared selection.
 */

import * as THREE from "three";

import { Message, MsgType, unpackHighlight, unpackPose, unpackPresence,
         unpackTransform } from "./codec.js";
import { AnnotatedDocument, highlightBuffers, SceneGraphBuffers } from "./scene.js";
import { Transform } from "./gesture.js";
import { StateStore } from "./store.js";

export class GraphView {
    readonly scene = new THREE.Scene();
    readonly camera: THREE.PerspectiveCamera;
    readonly graphRoot = new THREE.Group();
    private readonly avatars = new Map<number, THREE.Group>();
    private readonly highlightGroup = new THREE.Group();
    private readonly labelEl: HTMLElement | null;
    private doc: AnnotatedDocument | null = null;

    constructor(aspect: number, labelEl: HTMLElement | null = null) {
        this.camera = new THREE.PerspectiveCamera(60, aspect, 0.01, 100);
        this.camera.position.set(0, 0, 2.2);
        this.scene.background = new THREE.Color(0x0c0e14);
        this.scene.add(this.graphRoot);
        this.scene.add(this.highlightGroup);
        this.labelEl = labelEl;
    }

    /** Install the batched geometry; exactly one Points + one LineSegments. */
    setGraph(doc: AnnotatedDocument, buffers: SceneGraphBuffers): void {
        this.doc = doc;
        this.graphRoot.clear();
        const nodeGeometry = new THREE.BufferGeometry();
        nodeGeometry.setAttribute(
            "position", new THREE.BufferAttribute(buffers.nodePositions, 3));
        nodeGeometry.setAttribute(
            "color", new THREE.BufferAttribute(buffers.nodeColors, 3));
        const nodes = new THREE.Points(nodeGeometry, new THREE.PointsMaterial({
            size: 0.015, vertexColors: true, sizeAttenuation: true,
        }));
        nodes.frustumCulled = false;

        const edgeGeometry = new THREE.BufferGeometry();
        edgeGeometry.setAttribute(
            "position", new THREE.BufferAttribute(buffers.edgePositions, 3));
        const edges = new THREE.LineSegments(edgeGeometry, new THREE.LineBasicMaterial({
            color: 0x3a4a6a, transparent: true, opacity: 0.35,
        }));
        edges.frustumCulled = false;

        this.graphRoot.add(nodes);
        this.graphRoot.add(edges);
    }

    applyTransform(t: Transform): void {
        this.graphRoot.position.set(...t.translation);
        this.graphRoot.scale.setScalar(t.scale);
        this.highlightGroup.position.copy(this.graphRoot.position);
        this.highlightGroup.scale.copy(this.graphRoot.scale);
    }

    /** Render remote participants and the shared highlight from the store. */
    syncRemote(store: StateStore, localClientId: number): void {
        let highlightVertex: number | null = null;
        for (const clientId of store.clients()) {
            if (clientId === localClientId) continue;
            const presence = store.get(clientId, MsgType.Presence);
            const pose = store.get(clientId, MsgType.Pose);
            const avatar = this.avatarFor(clientId);
            if (presence !== undefined) {
                const p = unpackPresence(presence.payload);
                avatar.children[0].position.set(...p.headPosition);
                avatar.children[0].quaternion.set(...p.orientation);
            }
            if (pose !== undefined) {
                const p = unpackPose(pose.payload);
                avatar.children[1].position.set(...p.handPosition);
            }
            const highlight = store.get(clientId, MsgType.Highlight);
            if (highlight !== undefined) {
                highlightVertex = highlightVertex ?? unpackHighlight(highlight.payload);
            }
        }
        this.setHighlight(highlightVertex);
    }

    /** Latest remote transform wins the shared graph placement. */
    remoteTransform(store: StateStore, localClientId: number): Transform | null {
        let newest: Message | undefined;
        for (const clientId of store.clients()) {
            if (clientId === localClientId) continue;
            const m = store.get(clientId, MsgType.Transform);
            if (m !== undefined && (newest === undefined || m.sequence > newest.sequence)) {
                newest = m;
            }
        }
        if (newest === undefined) return null;
        const t = unpackTransform(newest.payload);
        return { translation: t.translation, scale: t.scale };
    }

    setHighlight(vertex: number | null): void {
        this.highlightGroup.clear();
        if (vertex === null || this.doc === null) {
            if (this.labelEl) this.labelEl.textContent = "";
            return;
        }
        const h = highlightBuffers(this.doc, vertex);
        const nodeGeometry = new THREE.BufferGeometry();
        nodeGeometry.setAttribute(
            "position", new THREE.BufferAttribute(h.nodePosition, 3));
        this.highlightGroup.add(new THREE.Points(nodeGeometry, new THREE.PointsMaterial({
            color: 0xffffff, size: 0.03, sizeAttenuation: true,
        })));
        if (h.edgePositions.length > 0) {
            const edgeGeometry = new THREE.BufferGeometry();
            edgeGeometry.setAttribute(
                "position", new THREE.BufferAttribute(h.edgePositions, 3));
            this.highlightGroup.add(new THREE.LineSegments(
                edgeGeometry, new THREE.LineBasicMaterial({ color: 0xffe27a })));
        }
        if (this.labelEl) {
            this.labelEl.textContent = h.label ?? `node #${vertex} (${h.degree} edges)`;
        }
    }

    private avatarFor(clientId: number): THREE.Group {
        let avatar = this.avatars.get(clientId);
        if (avatar === undefined) {
            avatar = new THREE.Group();
            const hue = (clientId * 0.618033988749895) % 1;
            const color = new THREE.Color().setHSL(hue, 0.65, 0.6);
            // mask: a flattened cone stands in for the face
            const mask = new THREE.Mesh(
                new THREE.ConeGeometry(0.06, 0.1, 4),
                new THREE.MeshBasicMaterial({ color, wireframe: true }));
            mask.rotation.x = Math.PI / 2;
            const hand = new THREE.Mesh(
                new THREE.SphereGeometry(0.025, 8, 8),
                new THREE.MeshBasicMaterial({ color }));
            avatar.add(mask);
            avatar.add(hand);
            this.avatars.set(clientId, avatar);
            this.scene.add(avatar);
        }
        return avatar;
    }

    /** Pointer ray in graph-local coordinates for kd-style picking. */
    pointerToLocal(ndcX: number, ndcY: number, depth: number,
                   current: Transform): [number, number, number] {
        const world = new THREE.Vector3(ndcX, ndcY, 0.5)
            .unproject(this.camera)
            .sub(this.camera.position)
            .normalize()
            .multiplyScalar(depth)
            .add(this.camera.position);
        return [(world.x - current.translation[0]) / current.scale,
                (world.y - current.translation[1]) / current.scale,
                (world.z - current.translation[2]) / current.scale];
    }
}

/** Nearest annotated node to a graph-local point, linear scan. */
export function nearestNode(doc: AnnotatedDocument,
                            local: [number, number, number],
                            radius: number): number | null {
    let best: [number, number] | null = null; // [d2, index]
    for (let i = 0; i < doc.nodes.length; i++) {
        const p = doc.nodes[i].pos;
        const dx = p[0] - local[0];
        const dy = p[1] - local[1];
        const dz = p[2] - local[2];
        const d2 = dx * dx + dy * dy + dz * dz;
        if (best === null || d2 < best[0]) best = [d2, i];
    }
    if (best === null || Math.sqrt(best[0]) > radius) return null;
    return best[1];
}
