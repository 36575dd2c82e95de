"""Seed-parallel execution with run registry bookkeeping."""

import asyncio
import logging
from pathlib import Path
from typing import Any, Callable, List, Optional, Sequence, TypeVar
from uuid import UUID

from pydantic import BaseModel, ConfigDict

from .models import RunCreate, RunStatus, RunUpdate, utcnow
from .run_service import RunService

logger = logging.getLogger(__name__)

R = TypeVar("R")


class SeedOutcome(BaseModel):
    """What happened to one seed."""

    model_config = ConfigDict(arbitrary_types_allowed=True)

    seed: int
    result: Optional[Any] = None
    error: Optional[str] = None
    output_file: Optional[str] = None
    run_id: Optional[UUID] = None

    @property
    def ok(self) -> bool:
        return self.error is None


async def run_seeds(
    kind: str,
    sampler: str,
    seeds: Sequence[int],
    work: Callable[[int], R],
    write: Callable[[int, R], Path],
    config_json: str,
    jobs: int = 1,
    registry: Optional[RunService] = None,
    on_done: Optional[Callable[[SeedOutcome], None]] = None,
) -> List[SeedOutcome]:
    """Run ``work(seed)`` for every seed, at most ``jobs`` at a time.

    Work runs in worker threads; ``write`` and registry updates run on the
    event loop, one seed at a time, so no two seeds write the same file. A
    failing seed is recorded and the others continue. Outcomes come back in
    seed order.
    """
    semaphore = asyncio.Semaphore(max(1, jobs))
    write_lock = asyncio.Lock()

    async def _one(seed: int) -> SeedOutcome:
        run_id = None
        if registry is not None:
            run = registry.create_run(
                RunCreate(kind=kind, sampler=sampler, seed=seed, config_json=config_json)
            )
            run_id = run.id

        async with semaphore:
            if registry is not None and run_id is not None:
                registry.update_run(run_id, RunUpdate(status=RunStatus.RUNNING, start_time=utcnow()))
            try:
                result = await asyncio.to_thread(work, seed)
                async with write_lock:
                    output = write(seed, result)
            except Exception as e:
                logger.error(f"{kind} seed {seed} failed: {e}")
                outcome: SeedOutcome = SeedOutcome(seed=seed, error=str(e), run_id=run_id)
                if registry is not None and run_id is not None:
                    registry.update_run(
                        run_id, RunUpdate(status=RunStatus.FAILED, end_time=utcnow(), log=str(e))
                    )
            else:
                outcome = SeedOutcome(seed=seed, result=result, output_file=str(output), run_id=run_id)
                if registry is not None and run_id is not None:
                    registry.update_run(
                        run_id,
                        RunUpdate(status=RunStatus.COMPLETED, end_time=utcnow(), output_file=str(output)),
                    )

        if on_done is not None:
            on_done(outcome)
        return outcome

    return list(await asyncio.gather(*(_one(seed) for seed in seeds)))
