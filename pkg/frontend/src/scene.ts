/**
 * Annotated-document parsing and batched scene-buffer construction.
 *
 * However many nodes the layout has, the viewer draws exactly two
 * batches: one point cloud for nodes and one line-segment soup for
 * edges. Buffer filling is chunked so a multi-megabyte document never
 * freezes the UI thread while it is turned into geometry.
 */

export interface AnnotatedNode {
    id: string;
    label: string | null;
    cluster: number | null;
    pos: [number, number, number];
}

export interface AnnotatedDocument {
    directed: boolean;
    nodes: AnnotatedNode[];
    edges: [number, number][]; // dense indices into nodes
}

export class DocumentError extends Error {}

/** Fixed 16-color cycle indexed by cluster id, identical on every client. */
export const CLUSTER_PALETTE: [number, number, number][] = [
    [0.906, 0.298, 0.235], [0.204, 0.596, 0.859], [0.180, 0.800, 0.443],
    [0.945, 0.769, 0.059], [0.608, 0.349, 0.714], [0.102, 0.737, 0.612],
    [0.902, 0.494, 0.133], [0.204, 0.286, 0.369], [0.753, 0.224, 0.169],
    [0.161, 0.502, 0.725], [0.153, 0.682, 0.376], [0.953, 0.612, 0.071],
    [0.557, 0.267, 0.678], [0.086, 0.627, 0.522], [0.827, 0.329, 0.000],
    [0.584, 0.647, 0.651],
];

export const MONOCHROME: [number, number, number] = [0.78, 0.78, 0.82];

export function parseAnnotatedDocument(text: string): AnnotatedDocument {
    let raw: any;
    try {
        raw = JSON.parse(text);
    } catch (e) {
        throw new DocumentError(`document is not valid JSON: ${e}`);
    }
    if (typeof raw !== "object" || raw === null || !Array.isArray(raw.nodes)) {
        throw new DocumentError("document must be an object with a nodes list");
    }
    const index = new Map<string, number>();
    const nodes: AnnotatedNode[] = raw.nodes.map((n: any, i: number) => {
        if (typeof n?.id !== "string") {
            throw new DocumentError(`node #${i} is missing a string id`);
        }
        if (!Array.isArray(n.pos) || n.pos.length !== 3
            || n.pos.some((c: any) => typeof c !== "number")) {
            throw new DocumentError(
                `node ${n.id} has no position; graph must be laid out first`);
        }
        index.set(n.id, i);
        return {
            id: n.id,
            label: typeof n.label === "string" ? n.label : null,
            cluster: typeof n.cluster === "number" ? n.cluster : null,
            pos: [n.pos[0], n.pos[1], n.pos[2]],
        };
    });
    const edges: [number, number][] = (raw.edges ?? []).map((e: any, i: number) => {
        const a = index.get(e?.[0]);
        const b = index.get(e?.[1]);
        if (a === undefined || b === undefined) {
            throw new DocumentError(`edge #${i} references an unknown node`);
        }
        return [a, b] as [number, number];
    });
    return { directed: Boolean(raw.directed), nodes, edges };
}

export interface SceneGraphBuffers {
    nodePositions: Float32Array;  // 3 floats per node
    nodeColors: Float32Array;     // 3 floats per node
    edgePositions: Float32Array;  // 6 floats per edge (two endpoints)
    nodeCount: number;
    edgeCount: number;
    /** One batch for all nodes plus one for all edges, whatever N is. */
    drawBatches: number;
    monochrome: boolean;
}

function colorFor(cluster: number | null, monochrome: boolean): [number, number, number] {
    if (monochrome || cluster === null) return MONOCHROME;
    return CLUSTER_PALETTE[cluster % CLUSTER_PALETTE.length];
}

function fillChunk(doc: AnnotatedDocument, buffers: SceneGraphBuffers,
                   start: number, end: number): void {
    for (let i = start; i < end; i++) {
        const n = doc.nodes[i];
        buffers.nodePositions.set(n.pos, i * 3);
        buffers.nodeColors.set(colorFor(n.cluster, buffers.monochrome), i * 3);
    }
}

function fillEdgeChunk(doc: AnnotatedDocument, buffers: SceneGraphBuffers,
                       start: number, end: number): void {
    for (let i = start; i < end; i++) {
        const [a, b] = doc.edges[i];
        buffers.edgePositions.set(doc.nodes[a].pos, i * 6);
        buffers.edgePositions.set(doc.nodes[b].pos, i * 6 + 3);
    }
}

function allocate(doc: AnnotatedDocument): SceneGraphBuffers {
    return {
        nodePositions: new Float32Array(doc.nodes.length * 3),
        nodeColors: new Float32Array(doc.nodes.length * 3),
        edgePositions: new Float32Array(doc.edges.length * 6),
        nodeCount: doc.nodes.length,
        edgeCount: doc.edges.length,
        drawBatches: 2,
        monochrome: doc.nodes.every((n) => n.cluster === null),
    };
}

export function buildSceneBuffers(doc: AnnotatedDocument): SceneGraphBuffers {
    const buffers = allocate(doc);
    fillChunk(doc, buffers, 0, doc.nodes.length);
    fillEdgeChunk(doc, buffers, 0, doc.edges.length);
    return buffers;
}

/**
 * Incremental variant: fills at most chunkSize items per event-loop
 * turn and reports progress in [0, 1], so large documents build without
 * blocking input or rendering.
 */
export async function buildSceneBuffersChunked(
    doc: AnnotatedDocument, chunkSize = 2000,
    onProgress?: (fraction: number) => void,
): Promise<SceneGraphBuffers> {
    const buffers = allocate(doc);
    const total = doc.nodes.length + doc.edges.length;
    let done = 0;
    for (let start = 0; start < doc.nodes.length; start += chunkSize) {
        const end = Math.min(start + chunkSize, doc.nodes.length);
        fillChunk(doc, buffers, start, end);
        done += end - start;
        onProgress?.(total === 0 ? 1 : done / total);
        await new Promise((resolve) => setTimeout(resolve, 0));
    }
    for (let start = 0; start < doc.edges.length; start += chunkSize) {
        const end = Math.min(start + chunkSize, doc.edges.length);
        fillEdgeChunk(doc, buffers, start, end);
        done += end - start;
        onProgress?.(total === 0 ? 1 : done / total);
        await new Promise((resolve) => setTimeout(resolve, 0));
    }
    return buffers;
}

/** Endpoint buffer for highlighting a vertex and its emanating edges. */
export function highlightBuffers(doc: AnnotatedDocument, vertex: number): {
    nodePosition: Float32Array;
    edgePositions: Float32Array;
    label: string | null;
    degree: number;
} {
    const incident = doc.edges.filter(([a, b]) => a === vertex || b === vertex);
    const edgePositions = new Float32Array(incident.length * 6);
    incident.forEach(([a, b], i) => {
        edgePositions.set(doc.nodes[a].pos, i * 6);
        edgePositions.set(doc.nodes[b].pos, i * 6 + 3);
    });
    return {
        nodePosition: new Float32Array(doc.nodes[vertex].pos),
        edgePositions,
        label: doc.nodes[vertex].label,
        degree: incident.length,
    };
}
