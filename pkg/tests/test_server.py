import struct

import pytest
from fastapi.testclient import TestClient

from graphite.jobs import JobService
from graphite.server import BridgeHub, create_app, pack_record, unpack_stream
from graphite.wire import (Message, MsgType, ReassemblyBuffer, decode_datagram,
                           encode_message)

from conftest import make_document

K3_DOC = make_document(["a", "b", "c"], [("a", "b"), ("b", "c"), ("a", "c")])


@pytest.fixture()
def client(tmp_path):
    app = create_app(JobService(tmp_path), BridgeHub())
    with TestClient(app) as c:
        yield c


def submit_and_wait(client, doc=K3_DOC, params="?iterations=30&seed=1", timeout=30.0):
    import time

    r = client.post(f"/jobs{params}", content=doc)
    assert r.status_code == 200, r.text
    job_id = r.json()["job_id"]
    deadline = time.monotonic() + timeout
    while time.monotonic() < deadline:
        state = client.get(f"/jobs/{job_id}").json()["state"]
        if state in ("done", "failed"):
            return job_id, state
        time.sleep(0.05)
    raise TimeoutError(state)


class TestStreamFraming:
    def test_unpack_partial_then_complete(self):
        record = b"hello world"
        framed = pack_record(record)
        buf = bytearray(framed[:5])
        assert unpack_stream(buf) == []
        buf.extend(framed[5:])
        assert unpack_stream(buf) == [record]
        assert buf == b""

    def test_unpack_multiple_records(self):
        buf = bytearray(pack_record(b"a") + pack_record(b"bb") + b"\x05\x00")
        assert unpack_stream(buf) == [b"a", b"bb"]
        assert buf == b"\x05\x00"  # incomplete header stays buffered

    def test_prefix_is_u32_le(self):
        assert pack_record(b"xy")[:4] == struct.pack("<I", 2)


class TestHttpApi:
    def test_healthz(self, client):
        assert client.get("/healthz").json() == {"status": "ok"}

    def test_job_lifecycle(self, client):
        job_id, state = submit_and_wait(client)
        assert state == "done"
        result = client.get(f"/jobs/{job_id}/result")
        assert result.status_code == 200
        doc = result.json()
        assert len(doc["nodes"]) == 3
        assert all("pos" in n and "cluster" in n for n in doc["nodes"])

    def test_malformed_document_is_400(self, client):
        r = client.post("/jobs", content=b"{broken")
        assert r.status_code == 400

    def test_unknown_job_is_404(self, client):
        assert client.get("/jobs/deadbeef").status_code == 404
        assert client.get("/jobs/deadbeef/result").status_code == 404

    def test_result_before_done_is_409(self, client):
        r = client.post("/jobs?iterations=2000", content=K3_DOC)
        job_id = r.json()["job_id"]
        status = client.get(f"/jobs/{job_id}").json()["state"]
        if status == "done":
            pytest.skip("job finished before the conflict could be observed")
        conflict = client.get(f"/jobs/{job_id}/result")
        assert conflict.status_code == 409

    def test_bad_sampling_scheme_is_400(self, client):
        r = client.post("/jobs?scheme=bogus", content=K3_DOC)
        assert r.status_code == 400

    def test_sampled_job(self, client):
        job_id, state = submit_and_wait(
            client, params="?iterations=30&seed=2&scheme=rn&p=0.9")
        assert state == "done"


class TestSessionBridge:
    def make_datagrams(self, message):
        return b"".join(pack_record(d.to_bytes())
                        for d in encode_message(message, 1400))

    def recv_messages(self, ws, buf, reasm, count=1, max_frames=20):
        out = []
        for _ in range(max_frames):
            buf.extend(ws.receive_bytes())
            for record in unpack_stream(buf):
                m = decode_datagram(record, reasm)
                if m is not None:
                    out.append(m)
            if len(out) >= count:
                break
        return out

    def test_two_clients_fan_out(self, client):
        with client.websocket_connect("/session?client_id=1") as ws1, \
                client.websocket_connect("/session?client_id=2") as ws2:
            sent = Message(MsgType.TRANSFORM, 1, 0, b"t" * 16)
            ws1.send_bytes(self.make_datagrams(sent))
            got = self.recv_messages(ws2, bytearray(), ReassemblyBuffer())
            assert got == [sent]

    def test_late_joiner_gets_snapshot(self, client):
        with client.websocket_connect("/session?client_id=1") as ws1:
            sent = Message(MsgType.POSE, 1, 9, b"p" * 145)
            ws1.send_bytes(self.make_datagrams(sent))
            with client.websocket_connect("/session?client_id=7") as ws7:
                got = self.recv_messages(ws7, bytearray(), ReassemblyBuffer())
                assert got == [sent]

    def test_duplicate_client_id_rejected(self, client):
        from starlette.websockets import WebSocketDisconnect

        with client.websocket_connect("/session?client_id=3"):
            with pytest.raises(WebSocketDisconnect):
                with client.websocket_connect("/session?client_id=3") as dup:
                    dup.receive_bytes()

    def test_fragmented_message_crosses_bridge(self, client):
        with client.websocket_connect("/session?client_id=1") as ws1, \
                client.websocket_connect("/session?client_id=2") as ws2:
            sent = Message(MsgType.POSE, 1, 3, bytes(range(256)) * 20)
            ws1.send_bytes(self.make_datagrams(sent))
            got = self.recv_messages(ws2, bytearray(), ReassemblyBuffer())
            assert got == [sent]
