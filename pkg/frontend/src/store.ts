/**
 * Latest-wins state store: the newest full-state message per
 * (client, type) under wrapping sequence comparison. Loss, duplication,
 * and reordering of older messages never regress an entry.
 */

import { Message, MsgType, seqNewer } from "./codec.js";

export class StateStore {
    private entries = new Map<string, Message>();

    merge(m: Message): boolean {
        const key = `${m.clientId}:${m.msgType}`;
        const current = this.entries.get(key);
        if (current === undefined || seqNewer(m.sequence, current.sequence)) {
            this.entries.set(key, m);
            return true;
        }
        return false;
    }

    get(clientId: number, msgType: MsgType): Message | undefined {
        return this.entries.get(`${clientId}:${msgType}`);
    }

    /** All client ids with any stored state, ascending. */
    clients(): number[] {
        const ids = new Set<number>();
        for (const m of this.entries.values()) ids.add(m.clientId);
        return [...ids].sort((a, b) => a - b);
    }

    get size(): number {
        return this.entries.size;
    }
}
