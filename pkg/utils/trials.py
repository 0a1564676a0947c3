"""
Seeded Monte Carlo trials over a process pool.

A trial function takes ``(trial, seed)`` and returns a ``TrialOutcome``. It
must be a module-level callable (or a ``functools.partial`` of one) so it
pickles into worker processes. Results always come back ordered by trial
index, whatever the worker count.
"""

import asyncio
import logging
import time
from concurrent.futures import ProcessPoolExecutor
from typing import Any, Callable, Dict, List, NamedTuple, Sequence, TypeVar

from models import RngSeed, TrialResult
from utils.errors import EstimationError

logger = logging.getLogger(__name__)

T = TypeVar('T')


class TrialOutcome(NamedTuple):
    success: bool
    iterations: int = 0
    metrics: Dict[str, float] = {}
    rows: Sequence[Sequence[Any]] = ()


TrialFn = Callable[[int, RngSeed], TrialOutcome]


def run_trial(fn: TrialFn, trial: int, seed: RngSeed) -> TrialResult:
    """Run one trial, recording estimation failures instead of raising them."""
    start = time.perf_counter()
    try:
        outcome = fn(trial, seed)
    except EstimationError as e:
        logger.warning(f"Trial {trial} (stream {seed.stream_index}) failed: {e}")
        return TrialResult(
            trial=trial,
            seed=seed.stream_index,
            success=False,
            wall_time=time.perf_counter() - start,
            error=f"{type(e).__name__}: {e}",
        )
    return TrialResult(
        trial=trial,
        seed=seed.stream_index,
        success=bool(outcome.success),
        iterations=int(outcome.iterations),
        metrics={k: float(v) for k, v in outcome.metrics.items()},
        wall_time=time.perf_counter() - start,
        rows=[list(row) for row in outcome.rows],
    )


class TrialPool:
    """Runs independent tasks inline (one worker) or on a process pool."""

    def __init__(self, workers: int = 1):
        self.workers = max(1, int(workers))

    async def map(self, fn: Callable[..., T], *iterables: Sequence[Any]) -> List[T]:
        """``[fn(*args) for args in zip(*iterables)]`` in input order."""
        tasks = list(zip(*iterables))
        if self.workers <= 1 or len(tasks) <= 1:
            return [fn(*args) for args in tasks]

        loop = asyncio.get_running_loop()
        with ProcessPoolExecutor(max_workers=min(self.workers, len(tasks))) as pool:
            futures = [loop.run_in_executor(pool, fn, *args) for args in tasks]
            return list(await asyncio.gather(*futures))

    async def run_trials(self, fn: TrialFn, seeds: Sequence[RngSeed]) -> List[TrialResult]:
        """One trial per seed; trial ``i`` uses ``seeds[i]``."""
        count = len(seeds)
        results = await self.map(run_trial, [fn] * count, list(range(count)), list(seeds))
        failed = sum(1 for result in results if result.error is not None)
        logger.info(f"Completed {count} trials ({failed} failed) on {self.workers} worker(s)")
        return results
