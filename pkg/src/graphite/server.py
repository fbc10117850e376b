"""Analysis service HTTP API, live session bridge, and UDP transport.

HTTP endpoints:

    POST /jobs               body: interchange document; layout/sampling
                             parameters as query fields -> {"job_id": ...}
    GET  /jobs/{id}          job status
    GET  /jobs/{id}/result   annotated document (409 until done)
    GET  /healthz            liveness probe
    WS   /session?client_id=N  session bridge

The bridge carries the same wire datagrams as UDP, re-framed for a
reliable stream: every record is a u32 little-endian length followed by
one encoded datagram. UDP clients are registered implicitly from the
client id in their first datagram; WS clients declare theirs in the
query string and receive a state snapshot on join.
"""

from __future__ import annotations

import asyncio
import os
import socket
import struct
import threading
from pathlib import Path

from fastapi import FastAPI, Query, Request, Response, WebSocket, WebSocketDisconnect

from .jobs import JobService, ResultNotReadyError, UnknownJobError
from .layout import LayoutParams
from .sampling import SampleSpec
from .session import SessionHub
from .wire import DEFAULT_MTU, HEADER_SIZE

LENGTH_PREFIX = struct.Struct("<I")

DEFAULT_HTTP_PORT = int(os.environ.get("GRAPHITE_HTTP_PORT", "8707"))
DEFAULT_UDP_PORT = int(os.environ.get("GRAPHITE_UDP_PORT", "8708"))


def unpack_stream(buffer: bytearray) -> list[bytes]:
    """Consume complete length-prefixed records from a stream buffer."""
    records = []
    while len(buffer) >= LENGTH_PREFIX.size:
        (length,) = LENGTH_PREFIX.unpack_from(buffer)
        if len(buffer) < LENGTH_PREFIX.size + length:
            break
        start = LENGTH_PREFIX.size
        records.append(bytes(buffer[start:start + length]))
        del buffer[:start + length]
    return records


def pack_record(datagram: bytes) -> bytes:
    return LENGTH_PREFIX.pack(len(datagram)) + datagram


class BridgeHub:
    """Thread-safe wrapper around SessionHub that pushes to transports.

    The UDP thread and the asyncio websocket handlers all funnel through
    one lock; outbound datagrams are flushed to their destination's
    transport immediately after each inbound datagram is queued.
    """

    def __init__(self, mtu: int = DEFAULT_MTU, master_mode: bool = False):
        self.hub = SessionHub(mtu=mtu, master_mode=master_mode)
        self._lock = threading.Lock()
        self._udp_peers: dict[int, tuple[str, int]] = {}
        self._udp_socket: socket.socket | None = None
        self._ws_queues: dict[int, "asyncio.Queue[bytes]"] = {}
        self._loop: asyncio.AbstractEventLoop | None = None

    # -- registration ------------------------------------------------------

    def attach_ws(self, client_id: int, loop: asyncio.AbstractEventLoop,
                  queue: "asyncio.Queue[bytes]") -> None:
        with self._lock:
            self._loop = loop
            snapshot = self.hub.register_client(client_id)
            self._ws_queues[client_id] = queue
            for dest, data in snapshot:
                queue.put_nowait(pack_record(data))

    def detach(self, client_id: int) -> None:
        with self._lock:
            self.hub.unregister_client(client_id)
            self._ws_queues.pop(client_id, None)
            self._udp_peers.pop(client_id, None)

    def _register_udp(self, client_id: int, addr: tuple[str, int]) -> None:
        # Caller holds the lock.
        snapshot = self.hub.register_client(client_id)
        self._udp_peers[client_id] = addr
        for dest, data in snapshot:
            self._send_udp(dest, data)

    # -- datagram flow -----------------------------------------------------

    def ingest(self, sender_id: int, data: bytes,
               udp_addr: tuple[str, int] | None = None) -> None:
        with self._lock:
            if udp_addr is not None and sender_id not in self.hub.clients:
                self._register_udp(sender_id, udp_addr)
            elif udp_addr is not None:
                self._udp_peers[sender_id] = udp_addr
            self.hub.handle_datagram(sender_id, data)
            for dest, out in self.hub.pop_outbound():
                self._dispatch(dest, out)

    def _dispatch(self, dest: int, data: bytes) -> None:
        queue = self._ws_queues.get(dest)
        if queue is not None and self._loop is not None:
            self._loop.call_soon_threadsafe(queue.put_nowait, pack_record(data))
            return
        self._send_udp(dest, data)

    def _send_udp(self, dest: int, data: bytes) -> None:
        addr = self._udp_peers.get(dest)
        if addr is not None and self._udp_socket is not None:
            try:
                self._udp_socket.sendto(data, addr)
            except OSError:
                pass

    # -- UDP transport -----------------------------------------------------

    def serve_udp(self, port: int, stop: threading.Event) -> None:
        """Blocking UDP receive loop; run in a dedicated thread."""
        sock = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        sock.bind(("0.0.0.0", port))
        sock.settimeout(0.25)
        self._udp_socket = sock
        try:
            while not stop.is_set():
                try:
                    data, addr = sock.recvfrom(65536)
                except socket.timeout:
                    continue
                if len(data) < HEADER_SIZE:
                    continue
                sender_id = int.from_bytes(data[4:6], "little")
                self.ingest(sender_id, data, udp_addr=addr)
        finally:
            sock.close()
            self._udp_socket = None


def create_app(service: JobService, bridge: BridgeHub | None = None) -> FastAPI:
    app = FastAPI(title="graphite analysis server")
    bridge = bridge or BridgeHub()
    app.state.service = service
    app.state.bridge = bridge

    @app.get("/healthz")
    def healthz():
        return {"status": "ok"}

    @app.post("/jobs")
    async def submit_job(
        request: Request,
        iterations: int = Query(default=2000, ge=1),
        cooling: float = Query(default=1.5, gt=0),
        seed: int = Query(default=0),
        scheme: str | None = Query(default=None),
        p: float = Query(default=0.5, ge=0, le=1),
        fraction: float = Query(default=1.0, gt=0, le=1),
    ):
        document = await request.body()
        try:
            layout = LayoutParams(max_iterations=iterations,
                                  cooling_exponent=cooling, rng_seed=seed)
            sample = SampleSpec(scheme=scheme, p=p, target_fraction=fraction,
                                rng_seed=seed) if scheme else None
            job_id = service.submit(document, layout=layout, sample=sample)
        except ValueError as e:
            return Response(content=str(e), status_code=400)
        return {"job_id": job_id}

    @app.get("/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            record = service.status(job_id)
        except UnknownJobError:
            return Response(content=f"unknown job {job_id}", status_code=404)
        return {
            "job_id": record.job_id,
            "state": record.state.value,
            "submitted_at": record.submitted_at,
            "finished_at": record.finished_at,
            "result_ref": record.result_ref,
            "error": record.error,
        }

    @app.get("/jobs/{job_id}/result")
    def job_result(job_id: str):
        try:
            data = service.result(job_id)
        except UnknownJobError:
            return Response(content=f"unknown job {job_id}", status_code=404)
        except ResultNotReadyError as e:
            return Response(content=f"job {job_id} is {e.state.value}",
                            status_code=409)
        return Response(content=data, media_type="application/json")

    @app.websocket("/session")
    async def session_bridge(ws: WebSocket, client_id: int = Query(ge=0, le=0xFFFF)):
        await ws.accept()
        if client_id in bridge.hub.clients:
            await ws.close(code=4000, reason=f"client {client_id} already connected")
            return
        queue: asyncio.Queue[bytes] = asyncio.Queue()
        bridge.attach_ws(client_id, asyncio.get_running_loop(), queue)

        async def sender():
            while True:
                record = await queue.get()
                await ws.send_bytes(record)

        task = asyncio.create_task(sender())
        buffer = bytearray()
        try:
            while True:
                buffer.extend(await ws.receive_bytes())
                for datagram in unpack_stream(buffer):
                    bridge.ingest(client_id, datagram)
        except WebSocketDisconnect:
            pass
        finally:
            task.cancel()
            bridge.detach(client_id)

    return app


def serve(data_dir: str, http_port: int = DEFAULT_HTTP_PORT,
          udp_port: int = DEFAULT_UDP_PORT, master_mode: bool = False) -> None:
    """Run the analysis server until interrupted."""
    import uvicorn

    service = JobService(Path(data_dir))
    bridge = BridgeHub(master_mode=master_mode)
    app = create_app(service, bridge)

    stop = threading.Event()
    udp_thread = threading.Thread(target=bridge.serve_udp, args=(udp_port, stop),
                                  daemon=True)
    udp_thread.start()
    try:
        uvicorn.run(app, host="0.0.0.0", port=http_port, log_level="warning")
    finally:
        stop.set()
        udp_thread.join(timeout=2.0)
