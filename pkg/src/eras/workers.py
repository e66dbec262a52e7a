import os
import queue
import threading
import typing

import eras.logging as logging

logger = logging.getLogger()

T = typing.TypeVar("T")
R = typing.TypeVar("R")


def default_threads() -> int:
    return os.cpu_count() or 1


class Job(typing.NamedTuple):
    index: int
    payload: typing.Any


class BaseWorker:
    """Thread consuming jobs from a shared queue until it reads a ``None`` sentinel."""

    def __init__(self, jobs: queue.Queue, name="Worker") -> None:
        self.jobs = jobs
        self._thread = threading.Thread(target=self._consume, daemon=True, name=name)

    def start(self):
        if not self._thread.is_alive():
            self._thread.start()
            logger.debug(f"Worker {self._thread.name} starting")

    def join(self):
        self._thread.join()

    def handle(self, job: Job):
        raise NotImplementedError("Child class must implement this method")

    def _consume(self):
        while True:
            job = self.jobs.get(block=True)
            try:
                if job is None:
                    return
                self.handle(job)
            finally:
                self.jobs.task_done()


class _MapWorker(BaseWorker):
    def __init__(self, jobs: queue.Queue, fn, results: list, errors: dict, name: str):
        super().__init__(jobs, name=name)
        self.fn = fn
        self.results = results
        self.errors = errors

    def handle(self, job: Job):
        try:
            self.results[job.index] = self.fn(job.payload)
        except Exception as e:
            logger.exception(f"Job {job.index} failed. Error '{e}'")
            self.errors[job.index] = e


class WorkerPool:
    """Apply a function to items on a fixed number of threads.

    Results come back in item order whatever the thread count, and the error of
    the lowest failing index is re-raised in the caller.
    """

    def __init__(self, threads: typing.Optional[int] = None, name: str = "Worker"):
        threads = default_threads() if threads is None else threads
        if threads < 1:
            raise ValueError(f"Worker pool needs at least one thread, got {threads}")
        self.threads = threads
        self.name = name

    def map(self, fn: typing.Callable[[T], R], items: typing.Sequence[T]) -> typing.List[R]:
        items = list(items)
        if self.threads == 1 or len(items) <= 1:
            return [fn(item) for item in items]

        jobs: queue.Queue = queue.Queue()
        results: list = [None] * len(items)
        errors: typing.Dict[int, Exception] = {}
        workers = [
            _MapWorker(jobs, fn, results, errors, name=f"{self.name}-{i}")
            for i in range(min(self.threads, len(items)))
        ]
        for worker in workers:
            worker.start()
        for index, item in enumerate(items):
            jobs.put(Job(index, item))
        for _ in workers:
            jobs.put(None)
        for worker in workers:
            worker.join()

        if errors:
            raise errors[min(errors)]
        return results
