"""Run service for recording experiment and simulation runs in the database."""

import json
from datetime import timedelta
from typing import Any, Dict, List, Optional
from uuid import UUID

from sqlmodel import Session, and_, func, or_, select

from .database import create_db_and_tables, get_session_sync
from .models import RunCreate, RunDB, RunStatus, RunUpdate, utcnow


class RunService:
    """Service for managing registered runs."""

    def __init__(self) -> None:
        self._session: Optional[Session] = None

    @property
    def session(self) -> Session:
        if self._session is None:
            create_db_and_tables()
            self._session = get_session_sync()
        return self._session

    def close(self) -> None:
        if self._session is not None:
            self._session.close()
        self._session = None

    def create_run(self, run_data: RunCreate) -> RunDB:
        """Register a queued run."""
        run = RunDB(
            kind=run_data.kind,
            sampler=run_data.sampler,
            seed=run_data.seed,
            config_json=run_data.config_json,
            status=RunStatus.QUEUED,
        )
        self.session.add(run)
        self.session.commit()
        self.session.refresh(run)
        return run

    def get_run(self, run_id: UUID) -> Optional[RunDB]:
        statement = select(RunDB).where(RunDB.id == run_id)
        return self.session.exec(statement).first()

    def find_run(self, prefix: str) -> Optional[RunDB]:
        """Look a run up by full id or by a unique id prefix."""
        try:
            return self.get_run(UUID(prefix))
        except ValueError:
            pass
        matches = [run for run in self.get_runs(limit=10_000) if str(run.id).startswith(prefix)]
        return matches[0] if len(matches) == 1 else None

    def get_runs(
        self,
        status: Optional[RunStatus] = None,
        kind: Optional[str] = None,
        limit: int = 50,
        offset: int = 0,
    ) -> List[RunDB]:
        """Get runs with optional filtering, newest first."""
        statement = select(RunDB)

        if status:
            statement = statement.where(RunDB.status == status)

        if kind:
            statement = statement.where(RunDB.kind == kind)

        statement = statement.order_by(RunDB.created_at.desc()).offset(offset).limit(limit)
        return list(self.session.exec(statement))

    def update_run(self, run_id: UUID, run_update: RunUpdate) -> Optional[RunDB]:
        run = self.get_run(run_id)
        if not run:
            return None

        for field, value in run_update.model_dump(exclude_none=True).items():
            setattr(run, field, value)
        run.updated_at = utcnow()

        self.session.add(run)
        self.session.commit()
        self.session.refresh(run)
        return run

    def delete_run(self, run_id: UUID) -> bool:
        run = self.get_run(run_id)
        if not run:
            return False

        self.session.delete(run)
        self.session.commit()
        return True

    def clear_old_runs(self, days_old: int = 30) -> int:
        """Clear completed/failed runs created before ``days_old`` days ago."""
        cutoff_date = utcnow().replace(hour=0, minute=0, second=0, microsecond=0)
        cutoff_date = cutoff_date - timedelta(days=days_old)

        statement = select(RunDB).where(
            and_(
                or_(RunDB.status == RunStatus.COMPLETED, RunDB.status == RunStatus.FAILED),
                RunDB.created_at < cutoff_date,
            )
        )

        old_runs = list(self.session.exec(statement))
        for run in old_runs:
            self.session.delete(run)

        self.session.commit()
        return len(old_runs)

    def count_runs(self, status: Optional[RunStatus] = None, kind: Optional[str] = None) -> int:
        conditions = []
        if status:
            conditions.append(RunDB.status == status)
        if kind:
            conditions.append(RunDB.kind == kind)

        statement = select(func.count()).select_from(RunDB)
        if conditions:
            statement = statement.where(and_(*conditions))
        return int(self.session.exec(statement).one())

    @staticmethod
    def config_of(run: RunDB) -> Dict[str, Any]:
        return json.loads(run.config_json) if run.config_json else {}


# Global run service instance
run_service = RunService()
