"""A small deterministic discrete-event kernel.

Future-event list with (time, insertion-sequence) ordering, FIFO
multi-server resource pools whose capacity can change at shift boundaries,
and per-pool wait/service/throughput collectors. Processes are plain
generators that yield ``pool.acquire()`` or ``engine.delay(dt)`` requests.

A single engine instance is strictly single-threaded while running;
independent engines may run concurrently.
"""

from __future__ import annotations

import heapq
from collections import deque
from dataclasses import dataclass, field

from .core import DEFAULT_CALENDAR, MINUTES_PER_DAY, ShiftCalendar, ShiftId

__all__ = [
    "CausalityError",
    "EngineError",
    "SimClock",
    "PoolStats",
    "RunStats",
    "Pool",
    "Engine",
]


class CausalityError(RuntimeError):
    """An event was scheduled before the current simulation time."""


class EngineError(RuntimeError):
    """An event handler failed or the kernel was misused."""


@dataclass(frozen=True)
class SimClock:
    """Snapshot of the simulation clock."""

    now: float
    day_index: int
    shift: ShiftId


@dataclass
class PoolStats:
    """Collected per-pool statistics. Waits are grant_time - request_time."""

    waits: list = field(default_factory=list)
    services: list = field(default_factory=list)
    grants: int = 0
    releases: int = 0

    @property
    def mean_wait(self) -> float:
        return sum(self.waits) / len(self.waits) if self.waits else 0.0


@dataclass
class RunStats:
    """What :meth:`Engine.run` hands back."""

    end_time: float
    events_dispatched: int
    pools: dict
    tallies: dict


class _DelayReq:
    __slots__ = ("dt",)

    def __init__(self, dt: float):
        self.dt = dt


class _AcquireReq:
    __slots__ = ("pool",)

    def __init__(self, pool: "Pool"):
        self.pool = pool


class Pool:
    """FIFO multi-server resource pool with shift-varying capacity.

    Capacity changes are graceful: dropping capacity below ``in_use`` never
    preempts running services, it only blocks new grants until enough
    holders release.
    """

    def __init__(self, engine: "Engine", name: str, capacity):
        if name in engine.pools:
            raise EngineError(f"pool {name!r} already registered")
        if isinstance(capacity, int):
            capacity_by_shift = (capacity, capacity, capacity)
        else:
            capacity_by_shift = tuple(int(c) for c in capacity)
            if len(capacity_by_shift) != 3:
                raise EngineError("capacity must be an int or one int per shift")
        if any(c < 0 for c in capacity_by_shift):
            raise EngineError(f"pool {name!r} capacities must be non-negative")
        self.engine = engine
        self.name = name
        self.capacity_by_shift = capacity_by_shift
        self.capacity = capacity_by_shift[0]
        self.in_use = 0
        self._queue = deque()  # (request_time, generator)
        self.stats = PoolStats()
        engine.pools[name] = self

    @property
    def idle(self) -> int:
        return self.capacity - self.in_use

    def acquire(self) -> _AcquireReq:
        """Request one unit; yield this from a process generator."""
        return _AcquireReq(self)

    def release(self, service_time: float | None = None) -> None:
        """Give back one unit and hand it to the queue head, if any."""
        if self.in_use <= 0:
            raise EngineError(f"release on pool {self.name!r} with no unit held")
        self.in_use -= 1
        self.stats.releases += 1
        if service_time is not None:
            self.stats.services.append(service_time)
        self._grant_waiting()

    def set_capacity(self, capacity: int) -> None:
        """Apply a shift-boundary capacity change.

        Raising capacity grants queued requests FIFO at this instant;
        lowering it lets running services drain.
        """
        if capacity < 0:
            raise EngineError("capacity must be non-negative")
        self.capacity = capacity
        self._grant_waiting()

    def queue_length(self) -> int:
        return len(self._queue)

    # -- internal ----------------------------------------------------------

    def _try_acquire(self, gen):
        """Immediate grant if a unit is idle, else enqueue. Returns wait or None."""
        if self.in_use < self.capacity:
            self.in_use += 1
            self.stats.grants += 1
            self.stats.waits.append(0.0)
            return 0.0
        self._queue.append((self.engine.now, gen))
        return None

    def _grant_waiting(self):
        while self.in_use < self.capacity and self._queue:
            request_time, gen = self._queue.popleft()
            self.in_use += 1
            self.stats.grants += 1
            wait = self.engine.now - request_time
            self.stats.waits.append(wait)
            self.engine._step(gen, wait)


class Engine:
    """Future-event-list simulator with FIFO tie-breaking among equal times."""

    def __init__(self, calendar: ShiftCalendar = DEFAULT_CALENDAR):
        self.calendar = calendar
        self.now = 0.0
        self.pools: dict[str, Pool] = {}
        self.tallies: dict[str, list] = {}
        self.events_dispatched = 0
        self._fel: list = []  # heap of (time, seq, action)
        self._seq = 0

    def clock(self) -> SimClock:
        return SimClock(
            now=self.now,
            day_index=int(self.now // MINUTES_PER_DAY),
            shift=self.calendar.shift_at(self.now),
        )

    def schedule(self, time: float, action) -> None:
        """Enqueue ``action()`` to fire at ``time`` (FIFO among equal times)."""
        if time < self.now:
            raise CausalityError(f"cannot schedule at t={time} before now={self.now}")
        heapq.heappush(self._fel, (time, self._seq, action))
        self._seq += 1

    def delay(self, dt: float) -> _DelayReq:
        """Pure-delay request; yield this from a process generator."""
        if dt < 0:
            raise CausalityError(f"negative delay {dt}")
        return _DelayReq(dt)

    def process(self, gen) -> None:
        """Start a process generator at the current time."""
        self._step(gen, None)

    def schedule_process(self, time: float, gen) -> None:
        """Start a process generator when the clock reaches ``time``."""
        self.schedule(time, lambda: self._step(gen, None))

    def tally(self, name: str) -> list:
        """A named list collector, created on first use."""
        return self.tallies.setdefault(name, [])

    def run(self, until: float) -> RunStats:
        """Dispatch every event with time <= until; clock ends at ``until``."""
        if until < self.now:
            raise CausalityError(f"cannot run until t={until} before now={self.now}")
        fel = self._fel
        while fel and fel[0][0] <= until:
            time, seq, action = heapq.heappop(fel)
            self.now = time
            self.events_dispatched += 1
            try:
                action()
            except (CausalityError, EngineError):
                raise
            except Exception as exc:
                raise EngineError(
                    f"event handler failed at t={time} (event #{seq}, {_describe(action)})"
                ) from exc
        self.now = until
        return RunStats(
            end_time=self.now,
            events_dispatched=self.events_dispatched,
            pools={name: pool.stats for name, pool in self.pools.items()},
            tallies=dict(self.tallies),
        )

    # -- internal ----------------------------------------------------------

    def _step(self, gen, value):
        """Drive a process generator until it suspends or finishes."""
        while True:
            try:
                req = gen.send(value)
            except StopIteration:
                return
            if isinstance(req, _DelayReq):
                self.schedule(self.now + req.dt, lambda g=gen: self._step(g, None))
                return
            if isinstance(req, _AcquireReq):
                wait = req.pool._try_acquire(gen)
                if wait is None:
                    return  # queued; the pool resumes us on grant
                value = wait
            else:
                raise EngineError(f"process yielded unsupported request {req!r}")


def _describe(action) -> str:
    name = getattr(action, "__qualname__", None) or getattr(action, "__name__", None)
    return name or repr(action)
