from datetime import datetime
import logging

from sqlalchemy import Column, DateTime, Integer, create_engine
from sqlalchemy.orm import declarative_base, scoped_session, sessionmaker

logger = logging.getLogger(__name__)

# Create base class for models
Base = declarative_base()


class BaseModel:
    """Base model with common columns"""
    id = Column(Integer, primary_key=True, index=True)
    created_at = Column(DateTime, default=datetime.utcnow)


def make_engine(database_url: str):
    """Create an engine; in-memory and file SQLite URLs are both accepted"""
    return create_engine(database_url, echo=False, future=True)


def make_session_factory(engine):
    return scoped_session(sessionmaker(autocommit=False, autoflush=False, bind=engine))


def init_db(engine):
    """Create the ledger tables if they do not exist"""
    try:
        Base.metadata.create_all(bind=engine)
        logger.debug("Run ledger tables ready")
    except Exception as e:
        logger.error(f"Error creating run ledger tables: {str(e)}")
        raise
