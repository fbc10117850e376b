#!/usr/bin/env python3
"""Regenerate the cross-component wire golden fixtures in golden/wire.json.

Run from the repo root after any codec change:

    python3 tools/gen_golden.py
"""

import json
from pathlib import Path

from graphite.interaction import make_hand_frame
from graphite.wire import (HighlightPayload, Message, MsgType, PosePayload,
                           PresencePayload, TransformPayload, encode_message)


def entry(name, message, mtu=1400):
    return {
        "name": name,
        "msg_type": int(message.msg_type),
        "client_id": message.client_id,
        "sequence": message.sequence,
        "payload_hex": message.payload.hex(),
        "mtu": mtu,
        "datagrams_hex": [d.to_bytes().hex() for d in encode_message(message, mtu)],
    }


def main():
    frame = make_hand_frame(0b00010, hand_position=(0.25, -1.5, 3.0))
    pose = PosePayload(frame.hand_position, frame.hand_forward, 0b00010,
                       frame.fingers)
    fixtures = [
        entry("transform_identity",
              Message(MsgType.TRANSFORM, 1, 0,
                      TransformPayload((0.0, 0.0, 0.0), 1.0).pack())),
        entry("transform_moved",
              Message(MsgType.TRANSFORM, 7, 41,
                      TransformPayload((1.5, -2.25, 0.125), 3.5).pack())),
        entry("highlight_vertex_9",
              Message(MsgType.HIGHLIGHT, 2, 5, HighlightPayload(9).pack())),
        entry("highlight_none",
              Message(MsgType.HIGHLIGHT, 2, 6, HighlightPayload(None).pack())),
        entry("pose_index_point",
              Message(MsgType.POSE, 3, 1000, pose.pack())),
        entry("presence_head",
              Message(MsgType.PRESENCE, 4, 2**32 - 1,
                      PresencePayload((0.0, 1.625, -0.5),
                                      (0.0, 0.0, 0.0, 1.0)).pack())),
        entry("fragmented_pose",
              Message(MsgType.POSE, 3, 2, pose.pack()), mtu=80),
        entry("empty_payload",
              Message(MsgType.PRESENCE, 9, 3, b"")),
    ]
    out = Path(__file__).resolve().parent.parent / "golden" / "wire.json"
    out.parent.mkdir(exist_ok=True)
    out.write_text(json.dumps(fixtures, indent=2) + "\n")
    print(f"wrote {len(fixtures)} fixtures to {out}")


if __name__ == "__main__":
    main()
