"""Layout job orchestration: durable catalogue, blob storage, worker processes.

A submitted job is validated synchronously, persisted as Queued, and
handed to a spawned worker process that runs optional sampling, the
layout, community detection, and serialization, then commits the result
blob before marking itself Done. Every state write is an atomic file
rename, so a killed worker or server can never leave a Done job whose
blob is missing: non-terminal jobs found without a live worker are
failed on recovery.
"""

from __future__ import annotations

import json
import multiprocessing
import os
import threading
import time
import uuid
from dataclasses import asdict, dataclass
from enum import Enum
from pathlib import Path

from .community import detect_communities
from .graph import load_graph
from .layout import LayoutParams, run_layout
from .sampling import SampleSpec, apply_sample
from .graph import serialize_annotated


class JobState(str, Enum):
    QUEUED = "queued"
    RUNNING = "running"
    UPLOADING = "uploading"
    DONE = "done"
    FAILED = "failed"


_TERMINAL = {JobState.DONE, JobState.FAILED}

# Legal forward transitions; anything may fail.
_NEXT = {
    JobState.QUEUED: {JobState.RUNNING, JobState.FAILED},
    JobState.RUNNING: {JobState.UPLOADING, JobState.FAILED},
    JobState.UPLOADING: {JobState.DONE, JobState.FAILED},
    JobState.DONE: set(),
    JobState.FAILED: set(),
}


class UnknownJobError(KeyError):
    pass


class ResultNotReadyError(RuntimeError):
    def __init__(self, job_id: str, state: JobState):
        super().__init__(f"job {job_id} is {state.value}, not done")
        self.state = state


@dataclass
class JobRecord:
    """Durable view of one layout job."""

    job_id: str
    state: JobState
    layout: dict
    sample: dict | None = None
    submitted_at: float = 0.0
    finished_at: float | None = None
    result_ref: str | None = None
    error: str | None = None
    worker_pid: int | None = None

    def to_json(self) -> str:
        d = asdict(self)
        d["state"] = self.state.value
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "JobRecord":
        d = json.loads(text)
        d["state"] = JobState(d["state"])
        return cls(**d)


def _atomic_write(path: Path, data: bytes) -> None:
    tmp = path.with_name(path.name + f".tmp{os.getpid()}")
    tmp.write_bytes(data)
    os.replace(tmp, path)


class JobCatalogue:
    """One JSON file per job, committed by atomic rename."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, job_id: str) -> Path:
        return self.root / f"{job_id}.json"

    def put(self, record: JobRecord) -> None:
        _atomic_write(self._path(record.job_id), record.to_json().encode("utf-8"))

    def get(self, job_id: str) -> JobRecord:
        path = self._path(job_id)
        if not path.exists():
            raise UnknownJobError(job_id)
        return JobRecord.from_json(path.read_text("utf-8"))

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.json"))

    def advance(self, job_id: str, state: JobState, **updates) -> JobRecord:
        """Transition a job, enforcing the legal state machine."""
        record = self.get(job_id)
        if state not in _NEXT[record.state]:
            raise ValueError(f"illegal transition {record.state.value} -> {state.value}")
        record.state = state
        for k, v in updates.items():
            setattr(record, k, v)
        self.put(record)
        return record


class BlobStore:
    """Key-addressed byte storage; puts are atomic renames."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def put(self, key: str, data: bytes) -> str:
        _atomic_write(self.root / key, data)
        return key

    def get(self, key: str) -> bytes:
        path = self.root / key
        if not path.exists():
            raise KeyError(key)
        return path.read_bytes()

    def exists(self, key: str) -> bool:
        return (self.root / key).exists()


def run_job_worker(data_dir: str, job_id: str) -> None:
    """Worker entry point: runs in its own process, reports via the catalogue."""
    root = Path(data_dir)
    catalogue = JobCatalogue(root / "jobs")
    blobs = BlobStore(root / "blobs")
    try:
        record = catalogue.advance(job_id, JobState.RUNNING, worker_pid=os.getpid())
        document = (root / "inputs" / f"{job_id}.json").read_bytes()
        g, _ = load_graph(document)
        if record.sample:
            g = apply_sample(g, SampleSpec(**record.sample))
        if g.n == 0:
            raise ValueError("sampling removed every vertex; nothing to lay out")
        params = LayoutParams(**record.layout)
        positions = run_layout(g, params)
        partition = detect_communities(g, seed=params.rng_seed)
        result = serialize_annotated(g, positions.tolist(), partition.assignment)
        catalogue.advance(job_id, JobState.UPLOADING)
        blobs.put(job_id, result)
        catalogue.advance(job_id, JobState.DONE,
                          result_ref=job_id, finished_at=time.time())
    except Exception as e:  # the worker must always leave a terminal record
        try:
            record = catalogue.get(job_id)
            if record.state not in _TERMINAL:
                record.state = JobState.FAILED
                record.error = f"{type(e).__name__}: {e}"
                record.finished_at = time.time()
                catalogue.put(record)
        except Exception:
            pass
        raise


class JobService:
    """Accepts jobs, spawns isolated workers, serves status and results."""

    def __init__(self, data_dir: str | os.PathLike):
        self.data_dir = Path(data_dir)
        self.catalogue = JobCatalogue(self.data_dir / "jobs")
        self.blobs = BlobStore(self.data_dir / "blobs")
        self.inputs = self.data_dir / "inputs"
        self.inputs.mkdir(parents=True, exist_ok=True)
        self._ctx = multiprocessing.get_context("spawn")
        self._workers: dict[str, multiprocessing.process.BaseProcess] = {}
        self._lock = threading.Lock()
        self._recover()

    def _recover(self) -> None:
        """Fail any non-terminal job left behind by a previous incarnation."""
        for job_id in self.catalogue.ids():
            record = self.catalogue.get(job_id)
            if record.state not in _TERMINAL:
                record.state = JobState.FAILED
                record.error = "orphaned: server restarted while job was in flight"
                record.finished_at = time.time()
                self.catalogue.put(record)

    def submit(self, document: bytes, layout: LayoutParams | None = None,
               sample: SampleSpec | None = None) -> str:
        """Validate and enqueue a job; returns its id once persisted.

        An unparsable document is rejected synchronously and no job is
        created.
        """
        load_graph(document)  # raises on malformed input
        layout = layout or LayoutParams()
        job_id = uuid.uuid4().hex
        _atomic_write(self.inputs / f"{job_id}.json", document)
        record = JobRecord(job_id=job_id, state=JobState.QUEUED,
                           layout=asdict(layout),
                           sample=asdict(sample) if sample else None,
                           submitted_at=time.time())
        self.catalogue.put(record)
        process = self._ctx.Process(target=run_job_worker,
                                    args=(str(self.data_dir), job_id),
                                    daemon=True)
        process.start()
        with self._lock:
            self._workers[job_id] = process
        threading.Thread(target=self._reap, args=(job_id, process),
                         daemon=True).start()
        return job_id

    def _reap(self, job_id: str, process) -> None:
        process.join()
        # A worker that died without reaching a terminal state (killed,
        # OOM, ...) must not linger as Running forever.
        try:
            record = self.catalogue.get(job_id)
        except UnknownJobError:
            return
        if record.state not in _TERMINAL:
            record.state = JobState.FAILED
            record.error = f"worker exited with code {process.exitcode} before finishing"
            record.finished_at = time.time()
            self.catalogue.put(record)
        with self._lock:
            self._workers.pop(job_id, None)

    def status(self, job_id: str) -> JobRecord:
        return self.catalogue.get(job_id)

    def result(self, job_id: str) -> bytes:
        record = self.catalogue.get(job_id)
        if record.state is not JobState.DONE or not record.result_ref:
            raise ResultNotReadyError(job_id, record.state)
        return self.blobs.get(record.result_ref)

    def worker_process(self, job_id: str):
        """Live worker handle if the job is still in flight (for supervision)."""
        with self._lock:
            return self._workers.get(job_id)

    def wait(self, job_id: str, timeout: float = 60.0) -> JobRecord:
        """Poll until the job reaches a terminal state."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            record = self.catalogue.get(job_id)
            if record.state in _TERMINAL:
                return record
            time.sleep(0.05)
        raise TimeoutError(f"job {job_id} still {self.catalogue.get(job_id).state.value}")
