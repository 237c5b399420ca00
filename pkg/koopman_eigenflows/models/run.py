import enum
import logging
from typing import Dict, List, Optional

from sqlalchemy import Column, Enum, Float, ForeignKey, Integer, String, Text
from sqlalchemy.orm import relationship

from .base import Base, BaseModel, init_db, make_engine, make_session_factory

logger = logging.getLogger(__name__)


class MethodStatus(enum.Enum):
    OK = "ok"
    FAILED = "failed"


class ExperimentRun(Base, BaseModel):
    """One invocation of the compare command"""
    __tablename__ = "experiment_runs"

    preset = Column(String(100), index=True, nullable=False)
    seed = Column(Integer, nullable=False)
    scale = Column(Float, default=1.0)
    output_dir = Column(String(500))

    results = relationship("MethodResult", back_populates="run", cascade="all, delete-orphan")

    def __repr__(self):
        return f"<ExperimentRun(id={self.id}, preset={self.preset}, seed={self.seed})>"

    def to_dict(self):
        return {
            'id': self.id,
            'preset': self.preset,
            'seed': self.seed,
            'scale': self.scale,
            'output_dir': self.output_dir,
            'created_at': self.created_at.isoformat() if self.created_at else None,
            'results': [r.to_dict() for r in self.results],
        }


class MethodResult(Base, BaseModel):
    """Result row of a single method within a run"""
    __tablename__ = "method_results"

    run_id = Column(Integer, ForeignKey("experiment_runs.id"), index=True, nullable=False)
    method = Column(String(50), nullable=False)
    status = Column(Enum(MethodStatus), nullable=False)
    rmse_mean = Column(Float)
    rmse_std = Column(Float)
    lifted_dim = Column(Integer)
    wall_time = Column(Float)
    error_message = Column(Text)

    run = relationship("ExperimentRun", back_populates="results")

    def to_dict(self):
        return {
            'method': self.method,
            'status': self.status.value if self.status else None,
            'rmse_mean': self.rmse_mean,
            'rmse_std': self.rmse_std,
            'lifted_dim': self.lifted_dim,
            'wall_time': self.wall_time,
            'error_message': self.error_message,
        }


class RunLedger:
    """Best-effort record of compare runs; database errors are logged, never raised"""

    def __init__(self, database_url: str):
        self.database_url = database_url
        self.logger = logging.getLogger(__name__)
        self.engine = make_engine(database_url)
        init_db(self.engine)
        self.SessionLocal = make_session_factory(self.engine)

    def record(self, preset: str, seed: int, scale: float, output_dir: str,
               methods: List[Dict]) -> Optional[int]:
        """
        Store a run and its per-method rows.

        Args:
            methods (List[Dict]): dicts with method, status, rmse_mean, rmse_std,
                lifted_dim, wall_time and error_message keys

        Returns:
            Optional[int]: the run id, or None if the write failed
        """
        db = self.SessionLocal()
        try:
            run = ExperimentRun(preset=preset, seed=seed, scale=scale, output_dir=output_dir)
            for row in methods:
                run.results.append(MethodResult(
                    method=row['method'],
                    status=MethodStatus(row.get('status', 'ok')),
                    rmse_mean=row.get('rmse_mean'),
                    rmse_std=row.get('rmse_std'),
                    lifted_dim=row.get('lifted_dim'),
                    wall_time=row.get('wall_time'),
                    error_message=row.get('error_message'),
                ))
            db.add(run)
            db.commit()
            self.logger.info(f"Recorded run {run.id} ({preset}, seed {seed}) with {len(methods)} method rows")
            return run.id
        except Exception as e:
            db.rollback()
            self.logger.error(f"Error saving run to ledger: {str(e)}")
            return None
        finally:
            db.close()

    def runs(self, preset: Optional[str] = None) -> List[Dict]:
        db = self.SessionLocal()
        try:
            query = db.query(ExperimentRun)
            if preset is not None:
                query = query.filter(ExperimentRun.preset == preset)
            return [run.to_dict() for run in query.order_by(ExperimentRun.id).all()]
        finally:
            db.close()
