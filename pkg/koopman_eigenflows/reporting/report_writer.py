import logging
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np
import pandas as pd

from ..analysis.evaluation import EvalReport, trajectory_frame
from ..analysis.oracles import OracleCheck
from ..utils.io import PathLike, write_csv, write_json


class ReportWriter:
    """
    Writes evaluation artifacts (JSON documents and CSV tables) under one directory.
    """

    def __init__(self, out_dir: PathLike):
        self.out_dir = Path(out_dir)
        self.logger = logging.getLogger(__name__)

    def _path(self, name: str) -> Path:
        return self.out_dir / name

    def write_eval_report(self, report: EvalReport) -> Dict[str, Path]:
        """
        Write report.json, rmse_table.csv and per_trajectory_rmse.csv.

        Returns:
            Dict[str, Path]: written files by role
        """
        paths = {
            'report': write_json(self._path('report.json'), report.to_dict(include_timing=True)),
            'rmse_table': write_csv(self._path('rmse_table.csv'), report.rmse_table()),
            'per_trajectory': write_csv(self._path('per_trajectory_rmse.csv'), report.per_trajectory_frame()),
        }
        self.logger.info(f"Wrote evaluation report for {len(report.methods)} method(s) to {self.out_dir}")
        return paths

    def write_trajectories(self, method: str, predicted: np.ndarray, dt: float) -> Path:
        return write_csv(self._path(f'trajectories_{method}.csv'), trajectory_frame(predicted, dt))

    def write_ground_truth(self, truth: np.ndarray, dt: float) -> Path:
        return write_csv(self._path('ground_truth.csv'), trajectory_frame(truth, dt, prefix='x'))

    def write_diffeo_grid(self, frame: pd.DataFrame) -> Path:
        return write_csv(self._path('diffeo_error_grid.csv'), frame)

    def write_comparison(self, report: EvalReport) -> Dict[str, Path]:
        """Method comparison: method, rmse_mean, rmse_std, lifted_dim."""
        table = report.rmse_table()
        document = {
            'preset': report.preset,
            'seed': report.seed,
            'rows': table.to_dict(orient='records'),
            'failures': {r.method: r.error_message for r in report.methods.values() if not r.ok},
        }
        return {
            'json': write_json(self._path('comparison.json'), document),
            'csv': write_csv(self._path('comparison.csv'), table),
        }

    def write_oracle_report(self, checks: List[OracleCheck], seed: int) -> Path:
        return write_json(self._path('oracle_report.json'),
                          {'seed': seed, 'all_passed': all(c.passed for c in checks),
                           'checks': [c.to_dict() for c in checks]})


def format_summary(report: EvalReport, title: Optional[str] = None) -> str:
    """Plain-text RMSE summary for the console."""
    lines = ["=" * 50, title or f"RMSE SUMMARY ({report.preset}, seed {report.seed})", "=" * 50,
             f"Trajectories: {report.n_trajectories}, horizon {report.horizon} steps of {report.dt:g}s"]
    for r in report.methods.values():
        if r.ok:
            lines.append(f"  {r.method:<15} {r.rmse_mean:.4g} +/- {r.rmse_std:.4g}  (D={r.lifted_dim})")
        else:
            lines.append(f"  {r.method:<15} FAILED: {r.error_message}")
    return "\n".join(lines)
