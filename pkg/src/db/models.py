"""SQLAlchemy models for the optional experiment results store."""
from sqlalchemy import (
    Column,
    DateTime,
    Float,
    ForeignKey,
    Integer,
    String,
    Text,
    func,
)
from sqlalchemy.orm import declarative_base, relationship

Base = declarative_base()


class ExperimentRun(Base):
    """One invocation of an experiment sweep."""

    __tablename__ = "experiment_runs"

    id = Column(Integer, primary_key=True, autoincrement=True)
    experiment = Column(String(32), nullable=False, index=True)
    config_json = Column(Text, nullable=False)
    # 64-bit unsigned seeds do not fit a signed BIGINT; stored as decimal text
    seed = Column(String(20), nullable=False)
    started_at = Column(DateTime(timezone=True), default=func.now())
    completed_at = Column(DateTime(timezone=True))
    status = Column(String(16), nullable=False, default="running")

    # Relationships
    results = relationship("ExperimentResult", back_populates="run", cascade="all, delete-orphan")


class ExperimentResult(Base):
    """One (dimension, metric) row of a run, mirroring the CSV schema."""

    __tablename__ = "experiment_results"

    id = Column(Integer, primary_key=True, autoincrement=True)
    run_id = Column(Integer, ForeignKey("experiment_runs.id", ondelete="CASCADE"), nullable=False, index=True)
    dimension = Column(Integer, nullable=False)
    k = Column(Integer, nullable=False)
    metric = Column(String(64), nullable=False)
    mean = Column(Float)
    min = Column(Float)
    max = Column(Float)
    theory = Column(Float)
    n_samples = Column(Integer, nullable=False)
    n_features = Column(Integer, nullable=False)
    repetitions = Column(Integer, nullable=False)
    seed = Column(String(20), nullable=False)
    status = Column(String(16), nullable=False, default="ok")
    gamma = Column(Float)

    # Relationships
    run = relationship("ExperimentRun", back_populates="results")
