"""Query functions for the experiment results store."""
from datetime import datetime, timezone
from typing import Any, Dict, Iterable, List, Optional, Protocol

from sqlalchemy import select
from sqlalchemy.orm import Session

from .models import ExperimentResult, ExperimentRun


class ResultRow(Protocol):
    """Anything shaped like an experiment CSV row."""
    dimension: int
    k: int
    metric: str
    mean: float
    min: float
    max: float
    theory: Optional[float]
    n_samples: int
    n_features: int
    repetitions: int
    seed: int
    status: str
    gamma: Optional[float]


# =============================================================================
# WRITES
# =============================================================================

def insert_run(session: Session, experiment: str, config_json: str, seed: int) -> ExperimentRun:
    """Record the start of a run and return it with its id assigned."""
    run = ExperimentRun(experiment=experiment, config_json=config_json, seed=str(seed), status="running")
    session.add(run)
    session.flush()
    return run


def finish_run(session: Session, run_id: int, status: str = "completed") -> Optional[ExperimentRun]:
    """Stamp completion time and final status on a run."""
    run = session.get(ExperimentRun, run_id)
    if run is None:
        return None
    run.completed_at = datetime.now(timezone.utc)
    run.status = status
    return run


def insert_rows(session: Session, run_id: int, rows: Iterable[ResultRow]) -> int:
    """Attach result rows to a run. Returns the number of rows written."""
    records = [
        ExperimentResult(
            run_id=run_id,
            dimension=row.dimension,
            k=row.k,
            metric=row.metric,
            mean=row.mean,
            min=row.min,
            max=row.max,
            theory=row.theory,
            n_samples=row.n_samples,
            n_features=row.n_features,
            repetitions=row.repetitions,
            seed=str(row.seed),
            status=row.status,
            gamma=row.gamma,
        )
        for row in rows
    ]
    session.add_all(records)
    session.flush()
    return len(records)


# =============================================================================
# READS
# =============================================================================

def fetch_rows(session: Session, run_id: int) -> List[Dict[str, Any]]:
    """Rows of a run in insertion order, as plain dicts."""
    stmt = select(ExperimentResult).where(ExperimentResult.run_id == run_id).order_by(ExperimentResult.id)
    return [
        {
            "dimension": r.dimension,
            "k": r.k,
            "metric": r.metric,
            "mean": r.mean,
            "min": r.min,
            "max": r.max,
            "theory": r.theory,
            "n_samples": r.n_samples,
            "n_features": r.n_features,
            "repetitions": r.repetitions,
            "seed": int(r.seed),
            "status": r.status,
            "gamma": r.gamma,
        }
        for r in session.scalars(stmt)
    ]


def latest_run(session: Session, experiment: str) -> Optional[ExperimentRun]:
    """Most recent run of an experiment, if any."""
    stmt = (
        select(ExperimentRun)
        .where(ExperimentRun.experiment == experiment)
        .order_by(ExperimentRun.id.desc())
        .limit(1)
    )
    return session.scalars(stmt).first()
