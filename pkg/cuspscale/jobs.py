"""Lazily evaluated job graph for the command pipelines.

Each job creates one or more keys and requires others; results are cached
behind a lock so a job shared by several dependents runs once. Numerical
kernels are blocking, so `Compute` hands them to a worker thread, throttled
by the database's semaphore.
"""

from __future__ import annotations
from contextlib import nullcontext
from copy import copy
from dataclasses import dataclass, field
from typing import Any, Callable, Generic, Optional, TypeVar
import asyncio

from .errors import ComputationError, CyclicWorkflowError
from .logging import logger
from .result import DependencyFailure, Failure, JobFailure, MissingFailure, Ok, Result

T = TypeVar("T")
R = TypeVar("R")

log = logger()


@dataclass
class Job(Generic[T, R]):
    """A unit of work tagged with keys of type `T`, producing an `R`.

    Subclasses implement the asynchronous `run` method, which returns an `R`
    or raises `JobFailure`.

    Attributes:
        creates: keys under which the result is known.
        requires: keys that must be computed before this job runs.
        result (property): the value once the job ran successfully.
    """

    creates: list[T]
    requires: list[T]

    _lock: asyncio.Lock = field(default_factory=asyncio.Lock, init=False, repr=False)
    _result: Optional[Result[R]] = field(default=None, init=False, repr=False)

    def __bool__(self):
        return self._result is not None and bool(self._result)

    @property
    def result(self) -> R:
        if self._result is None:
            raise ValueError("Job has not run yet.")
        if not isinstance(self._result, Ok):
            raise ValueError("Job has failed.")
        return self._result.value

    async def run(self, *, db) -> R:
        raise NotImplementedError()

    async def settle(self, resolve, path: dict[T, None], **kwargs) -> Result[R]:
        """Resolve every requirement along `path`, then run once. Later calls
        return the stored outcome."""
        async with self._lock:
            if self._result is None:
                outcomes = await asyncio.gather(
                    *(resolve(key, copy(path), **kwargs) for key in self.requires)
                )
                failed = {key: out for key, out in zip(self.requires, outcomes) if not out}
                self._result = DependencyFailure(failed) if failed else await self._attempt(**kwargs)
            return self._result

    async def _attempt(self, **kwargs) -> Result[R]:
        try:
            return Ok(await self.run(**kwargs))
        except JobFailure as failure:
            return failure

    def reset(self):
        self._result = None


@dataclass
class Compute(Job[str, Any]):
    """Call `func(*args, *dependency_results)` on a worker thread."""

    func: Callable[..., Any]
    args: tuple = ()
    name: str = ""

    async def run(self, *, db: JobDB) -> Any:
        deps = [db.index[t].result for t in self.requires]
        async with db.throttle or nullcontext():
            log.debug(f"running `{self.name or self.creates[0]}`")
            try:
                return await asyncio.to_thread(self.func, *self.args, *deps)
            except ComputationError as e:
                raise JobFailure(self.creates[0], str(e)) from e


@dataclass
class JobsFailed(ComputationError):
    failures: dict[str, Failure]

    def __str__(self):
        causes = {str(c) for fail in self.failures.values() for c in fail.causes()}
        return "\n".join(sorted(causes))


@dataclass
class JobDB(Generic[T]):
    """Collect jobs and run them by key."""

    jobs: list[Job] = field(default_factory=list)
    index: dict[T, Job] = field(default_factory=dict)
    throttle: Optional[asyncio.Semaphore] = None

    async def run(self, key: T, path: dict[T, None] | None = None, **kwargs) -> Result[Any]:
        path = {} if path is None else path
        if key in path:
            raise CyclicWorkflowError([*path, key])
        path[key] = None

        job = self.index.get(key)
        if job is None:
            return MissingFailure(key)
        return await job.settle(self.run, path, **kwargs)

    def add(self, job: Job):
        log.debug(f"adding job {job.creates}")
        self.jobs.append(job)
        for target in job.creates:
            self.index[target] = job

    def submit(self, key: str, func: Callable[..., Any], *args, requires: list[str] | None = None) -> str:
        self.add(Compute([key], list(requires or []), func, args, key))
        return key

    async def gather(self, keys: list[T]) -> list[Any]:
        """Run `keys` concurrently; raise `JobsFailed` if any of them fails."""
        results = await asyncio.gather(*(self.run(k, db=self) for k in keys))
        failed = {str(k): r for k, r in zip(keys, results) if not r}
        if failed:
            raise JobsFailed(failed)
        return [r.value for r in results if isinstance(r, Ok)]

    def clean(self):
        self.jobs = []
        self.index = {}

    def reset(self):
        for j in self.jobs:
            j.reset()
