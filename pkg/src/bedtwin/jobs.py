"""Asynchronous job execution with an append-only JSONL event log.

Jobs move queued -> running -> done | failed, never backwards, and a
completed job keeps its result until it is explicitly deleted. Every
transition is appended to the log, so a restarted process sees the
jobs of earlier runs (any still marked queued/running are surfaced as
failed: their worker died with the process).
"""

from __future__ import annotations

import json
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from pathlib import Path

__all__ = ["Job", "JobError", "JobStore", "JOB_KINDS"]

JOB_KINDS = ("simulate", "train", "validate", "sensitivity")

_TRANSITIONS = {
    "queued": {"running"},
    "running": {"done", "failed"},
    "done": set(),
    "failed": set(),
}


class JobError(ValueError):
    """Unknown job id or an illegal status transition."""


@dataclass
class Job:
    """One unit of background work; ``result`` is set iff status is done."""

    job_id: str
    kind: str
    status: str
    submitted_at: float
    finished_at: float | None = None
    result: dict | None = None
    error_message: str | None = None

    def to_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "kind": self.kind,
            "status": self.status,
            "submitted_at": self.submitted_at,
            "finished_at": self.finished_at,
            "result": self.result,
            "error_message": self.error_message,
        }


class JobStore:
    """Thread-safe registry plus a bounded worker pool."""

    def __init__(self, path, worker_count: int = 2):
        self._path = Path(path)
        self._lock = threading.Lock()
        self._jobs: dict[str, Job] = {}
        self._pool = ThreadPoolExecutor(max_workers=worker_count,
                                        thread_name_prefix="bedtwin-job")
        self._replay()

    def _replay(self) -> None:
        if not self._path.exists():
            return
        with self._path.open(encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                event = json.loads(line)
                job_id = event["job_id"]
                if event["event"] == "submitted":
                    self._jobs[job_id] = Job(
                        job_id=job_id, kind=event["kind"], status="queued",
                        submitted_at=event["at"])
                elif event["event"] == "deleted":
                    self._jobs.pop(job_id, None)
                elif job_id in self._jobs:
                    job = self._jobs[job_id]
                    job.status = event["event"]
                    if event["event"] == "done":
                        job.result = event["result"]
                        job.finished_at = event["at"]
                    elif event["event"] == "failed":
                        job.error_message = event["error_message"]
                        job.finished_at = event["at"]
        # Workers do not survive the process; orphans cannot complete.
        for job in self._jobs.values():
            if job.status in ("queued", "running"):
                job.status = "failed"
                job.error_message = "interrupted by process restart"
                job.finished_at = job.submitted_at

    def _append(self, event: dict) -> None:
        self._path.parent.mkdir(parents=True, exist_ok=True)
        with self._path.open("a", encoding="utf-8") as fh:
            fh.write(json.dumps(event) + "\n")

    def _transition(self, job: Job, status: str) -> None:
        if status not in _TRANSITIONS[job.status]:
            raise JobError(f"job {job.job_id}: cannot go {job.status} -> {status}")
        job.status = status

    def submit(self, kind: str, fn) -> Job:
        """Queue ``fn`` (no arguments, returns a JSON-safe dict)."""
        if kind not in JOB_KINDS:
            raise JobError(f"unknown job kind {kind!r}")
        job = Job(job_id=str(uuid.uuid4()), kind=kind, status="queued",
                  submitted_at=time.time())
        with self._lock:
            self._jobs[job.job_id] = job
            self._append({"event": "submitted", "job_id": job.job_id,
                          "kind": kind, "at": job.submitted_at})
        snapshot = replace(job)
        self._pool.submit(self._run, job.job_id, fn)
        return snapshot

    def _run(self, job_id: str, fn) -> None:
        with self._lock:
            job = self._jobs.get(job_id)
            if job is None:
                return
            self._transition(job, "running")
            self._append({"event": "running", "job_id": job_id,
                          "at": time.time()})
        try:
            result = fn()
        except Exception as exc:
            with self._lock:
                self._transition(job, "failed")
                job.error_message = f"{type(exc).__name__}: {exc}"
                job.finished_at = time.time()
                self._append({"event": "failed", "job_id": job_id,
                              "error_message": job.error_message,
                              "at": job.finished_at})
            return
        with self._lock:
            self._transition(job, "done")
            job.result = result
            job.finished_at = time.time()
            self._append({"event": "done", "job_id": job_id,
                          "result": result, "at": job.finished_at})

    def get(self, job_id: str) -> Job | None:
        """A snapshot of the job's current state."""
        with self._lock:
            job = self._jobs.get(job_id)
            return None if job is None else replace(job)

    def delete(self, job_id: str) -> None:
        with self._lock:
            if job_id not in self._jobs:
                raise JobError(f"unknown job {job_id}")
            del self._jobs[job_id]
            self._append({"event": "deleted", "job_id": job_id,
                          "at": time.time()})

    def wait(self, job_id: str, timeout: float = 60.0) -> Job:
        """Block until the job finishes; for tests and the CLI."""
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            job = self.get(job_id)
            if job is None:
                raise JobError(f"unknown job {job_id}")
            if job.status in ("done", "failed"):
                return job
            time.sleep(0.005)
        raise TimeoutError(f"job {job_id} still {self.get(job_id).status}")

    def close(self) -> None:
        self._pool.shutdown(wait=True)
