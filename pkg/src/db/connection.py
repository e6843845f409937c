"""Database connection management for the results store."""
import logging
from contextlib import contextmanager
from typing import Generator, Optional

from sqlalchemy import create_engine
from sqlalchemy.engine import Engine
from sqlalchemy.orm import sessionmaker, Session

from ..config import ConfigurationError, get_settings
from .models import Base

logger = logging.getLogger(__name__)


def get_engine(url: Optional[str] = None) -> Engine:
    """
    Create a database engine.

    Args:
        url: SQLAlchemy URL, defaults to SPHERE_METRICS_RESULTS_DB_URL

    Returns:
        SQLAlchemy engine

    Raises:
        ConfigurationError: If no URL is given or configured.
    """
    url = url or get_settings().results_db_url
    if not url:
        raise ConfigurationError("No results database URL given (--db or SPHERE_METRICS_RESULTS_DB_URL)")
    return create_engine(url, echo=False, pool_pre_ping=True)


def get_session_factory(engine: Engine) -> sessionmaker:
    """Create a session factory bound to an engine."""
    return sessionmaker(bind=engine, expire_on_commit=False)


@contextmanager
def get_session(engine: Engine) -> Generator[Session, None, None]:
    """
    Context manager for database sessions.

    Automatically commits on success, rolls back on error.

    Usage:
        with get_session(engine) as session:
            insert_rows(session, run_id, rows)
    """
    SessionFactory = get_session_factory(engine)
    session = SessionFactory()
    try:
        yield session
        session.commit()
    except Exception:
        session.rollback()
        raise
    finally:
        session.close()


def init_database(engine: Engine) -> None:
    """Create the results tables if they do not exist."""
    Base.metadata.create_all(engine)
    logger.debug(f"Results store ready at {engine.url.render_as_string(hide_password=True)}")
