"""
Pytest configuration and fixtures.

Provides quadrature rules, seeded sample generators, settings isolation and
an in-memory results store.
"""
import os
from typing import Generator

import numpy as np
import pytest
from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import Session, sessionmaker

from src.config import get_settings
from src.db.connection import init_database
from src.harmonics import QuadratureRule, gauss_jacobi_rule
from tests.mocks import SampleGenerator

# =============================================================================
# TEST DATABASE CONFIGURATION
# =============================================================================

# SQLite in-memory by default; override with TEST_DATABASE_URL
TEST_DATABASE_URL = os.getenv("TEST_DATABASE_URL", "sqlite:///:memory:")


# =============================================================================
# SETTINGS
# =============================================================================

@pytest.fixture(autouse=True)
def fresh_settings(monkeypatch) -> Generator[None, None, None]:
    """Clear cached settings around every test so env overrides take effect."""
    monkeypatch.delenv("SPHERE_METRICS_RESULTS_DB_URL", raising=False)
    get_settings.cache_clear()
    yield
    get_settings.cache_clear()


# =============================================================================
# NUMERICS
# =============================================================================

@pytest.fixture(scope="session")
def rule() -> QuadratureRule:
    """Default 256-node quadrature rule."""
    return gauss_jacobi_rule(256)


@pytest.fixture
def rng() -> np.random.Generator:
    """Fixed-seed generator."""
    return np.random.default_rng(12345)


@pytest.fixture
def generator() -> SampleGenerator:
    """Seeded sample-set generator."""
    return SampleGenerator(seed=42)


# =============================================================================
# DATABASE FIXTURES
# =============================================================================

@pytest.fixture
def db_engine() -> Generator[Engine, None, None]:
    """
    Create test database engine.

    Uses SQLite in-memory with the results tables created.
    """
    engine = create_engine(TEST_DATABASE_URL, echo=False)
    init_database(engine)
    yield engine
    engine.dispose()


@pytest.fixture
def db_session(db_engine: Engine) -> Generator[Session, None, None]:
    """Database session, rolled back after each test."""
    SessionFactory = sessionmaker(bind=db_engine)
    session = SessionFactory()
    yield session
    session.rollback()
    session.close()
