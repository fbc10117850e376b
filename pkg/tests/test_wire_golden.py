"""Pin the wire format to the shared golden fixtures (cross-component contract)."""

import json
from pathlib import Path

import pytest

from graphite.wire import (Message, MsgType, ReassemblyBuffer, decode_datagram,
                           encode_message)

GOLDEN = Path(__file__).resolve().parent.parent / "golden" / "wire.json"


def fixtures():
    return json.loads(GOLDEN.read_text())


@pytest.mark.parametrize("fix", fixtures(), ids=lambda f: f["name"])
def test_encode_matches_golden_bytes(fix):
    m = Message(MsgType(fix["msg_type"]), fix["client_id"], fix["sequence"],
                bytes.fromhex(fix["payload_hex"]))
    got = [d.to_bytes().hex() for d in encode_message(m, fix["mtu"])]
    assert got == fix["datagrams_hex"]


@pytest.mark.parametrize("fix", fixtures(), ids=lambda f: f["name"])
def test_decode_matches_golden_fields(fix):
    buf = ReassemblyBuffer()
    result = None
    for raw_hex in fix["datagrams_hex"]:
        decoded = decode_datagram(bytes.fromhex(raw_hex), buf)
        if decoded is not None:
            result = decoded
    assert result is not None
    assert int(result.msg_type) == fix["msg_type"]
    assert result.client_id == fix["client_id"]
    assert result.sequence == fix["sequence"]
    assert result.payload.hex() == fix["payload_hex"]
