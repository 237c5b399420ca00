"""
End-to-end experiment steps behind the command line: generate, train,
build, evaluate and compare, all reading and writing one run directory.
"""
import logging
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Optional, Union

from ..baselines.dictionary import DictionaryKind, make_dictionary
from ..baselines.edmd import GeneratorEDMDModel, fit_generator_edmd, predict_edmd_batch
from ..dynamics.dataset import generate_dataset, load_dataset, save_dataset
from ..dynamics.exact import ExactEx1Diffeomorphism
from ..dynamics.sampling import boundary_starts, grid_starts
from ..dynamics.systems import jacobian_linearization
from ..dynamics.types import TrajectoryDataset
from ..eigen.lift import build_eigenfunction_library
from ..exceptions import MissingArtifactError
from ..flows.coupling import FlowModel
from ..models.run import RunLedger
from ..prediction.kefmd import LiftedLTIModel, fit_kefmd, predict_batch
from ..reporting.report_writer import ReportWriter, format_summary
from ..settings import ExperimentConfig
from ..training.trainer import DiffeoTrainer, TrainResult, save_history
from ..utils.io import write_json
from .evaluation import EvalReport, diffeo_error_grid, evaluate_method, failed_method, ground_truth

FittedModel = Union[LiftedLTIModel, GeneratorEDMDModel]


@dataclass(frozen=True)
class ArtifactPaths:
    """File layout of a run directory."""
    root: Path

    @property
    def experiment(self) -> Path:
        return self.root / 'experiment.json'

    @property
    def dataset(self) -> Path:
        return self.root / 'dataset.csv'

    @property
    def flow(self) -> Path:
        return self.root / 'flow.json'

    @property
    def loss_log(self) -> Path:
        return self.root / 'loss_log.csv'

    @property
    def checkpoints(self) -> Path:
        return self.root / 'checkpoints'

    @property
    def library(self) -> Path:
        return self.root / 'library.json'

    @property
    def kefmd(self) -> Path:
        return self.root / 'kefmd_model.json'

    def edmd(self, method: str) -> Path:
        return self.root / f'{method}.json'

    @property
    def eval_dir(self) -> Path:
        return self.root / 'eval'


def _dictionary_kind(method: str) -> DictionaryKind:
    return DictionaryKind(method.split('_', 1)[1])


class ExperimentPipeline:
    """
    Runs the experiment steps for one ExperimentConfig.

    Every step writes its artifacts under config.output_dir and the next step
    reads them back, so steps can run in separate processes.
    """

    def __init__(self, config: ExperimentConfig, threads: int = 1, progress: bool = True,
                 ledger: Optional[RunLedger] = None):
        self.config = config
        self.threads = max(1, int(threads))
        self.progress = progress
        self.ledger = ledger
        self.paths = ArtifactPaths(config.output_path)
        self.system = config.vector_field
        self.box = config.domain
        self.logger = logging.getLogger(__name__)

    def write_config(self) -> Path:
        return write_json(self.paths.experiment, self.config.to_dict())

    def generate(self) -> TrajectoryDataset:
        """Sample boundary starts, integrate them and write dataset.csv with its metadata."""
        c = self.config
        starts = boundary_starts(self.box, c.n_train_trajectories, c.seed)
        dataset = generate_dataset(self.system, starts, c.dt, c.steps, box=self.box, seed=c.seed, n_total=c.n_total)
        dataset.metadata['preset'] = c.name
        self.write_config()
        save_dataset(dataset, self.paths.dataset)
        return dataset

    def load_dataset(self) -> TrajectoryDataset:
        if not self.paths.dataset.exists():
            raise MissingArtifactError("Dataset not found, run 'generate' first", str(self.paths.dataset))
        return load_dataset(self.paths.dataset)

    def train(self, dataset: Optional[TrajectoryDataset] = None) -> TrainResult:
        """Train a fresh identity-initialised flow and write flow.json and loss_log.csv."""
        dataset = dataset if dataset is not None else self.load_dataset()
        arch = self.config.flow
        A = jacobian_linearization(self.system)
        flow = FlowModel.create(self.system.dim, arch.n_layers, arch.hidden, seed=self.config.seed,
                                s_clamp=arch.s_clamp)
        train_config = self.config.train_config(progress=self.progress)
        checkpoint_dir = self.paths.checkpoints if train_config.checkpoint_every > 0 else None
        result = DiffeoTrainer(A, train_config).fit(flow, dataset, checkpoint_dir=checkpoint_dir)
        result.flow.save(self.paths.flow)
        save_history(result.history, self.paths.loss_log)
        final = result.final_loss
        if final is not None:
            self.logger.info(f"Final conjugacy loss {final.conjugacy:.4e} after {len(result.history)} epoch(s)")
        return result

    def load_flow(self) -> FlowModel:
        if not self.paths.flow.exists():
            raise MissingArtifactError("Trained flow not found, run 'train' first", str(self.paths.flow))
        return FlowModel.load(self.paths.flow)

    def build_kefmd(self, dataset: Optional[TrajectoryDataset] = None,
                    flow: Optional[FlowModel] = None) -> LiftedLTIModel:
        """Eigenfunction library and lifted LTI model on top of the trained flow."""
        dataset = dataset if dataset is not None else self.load_dataset()
        flow = flow if flow is not None else self.load_flow()
        c = self.config
        A = jacobian_linearization(self.system)
        library = build_eigenfunction_library(flow, A, dataset, c.max_powers, margin=c.box_margin,
                                              flow_path=self.paths.flow.name)
        model = fit_kefmd(dataset, library, dt=c.dt, ridge=c.kefmd_ridge)
        library.save(self.paths.library)
        model.save(self.paths.kefmd, library_path=self.paths.library.name)
        self.logger.info(f"KEFMD model: D={model.D}, training reconstruction RMSE={model.train_rmse:.3e}")
        return model

    def fit_baseline(self, method: str, dataset: Optional[TrajectoryDataset] = None) -> GeneratorEDMDModel:
        dataset = dataset if dataset is not None else self.load_dataset()
        b = self.config.baselines
        dictionary = make_dictionary(_dictionary_kind(method).value, self.system.dim, states=dataset.states,
                                     degree=b.monomial_degree, mode=b.monomial_mode, size=b.rbf_size,
                                     seed=self.config.seed)
        model = fit_generator_edmd(dataset, dictionary, ridge=b.ridge)
        model.save(self.paths.edmd(method))
        return model

    def build(self, dataset: Optional[TrajectoryDataset] = None) -> Dict[str, FittedModel]:
        """Fit every requested method on the stored dataset (and flow, for KEFMD)."""
        dataset = dataset if dataset is not None else self.load_dataset()
        models: Dict[str, FittedModel] = {}
        for method in self.config.methods:
            if method == 'kefmd':
                models[method] = self.build_kefmd(dataset)
            else:
                models[method] = self.fit_baseline(method, dataset)
        return models

    def load_model(self, method: str) -> FittedModel:
        if method == 'kefmd':
            if not self.paths.kefmd.exists():
                raise MissingArtifactError("KEFMD model not found, run 'build' first", str(self.paths.kefmd))
            return LiftedLTIModel.load(self.paths.kefmd)
        path = self.paths.edmd(method)
        if not path.exists():
            raise MissingArtifactError(f"{method} model not found, run 'build' first", str(path))
        return GeneratorEDMDModel.load(path)

    def _predictor(self, model: FittedModel):
        horizon, dt = self.config.eval.horizon, self.config.dt
        if isinstance(model, LiftedLTIModel):
            return lambda starts: predict_batch(model, starts, horizon)
        return lambda starts: predict_edmd_batch(model, starts, dt, horizon)

    @staticmethod
    def _diagnostics(model: FittedModel) -> Dict:
        diagnostics = {'spectral_abscissa': model.spectral_abscissa, 'train_rmse': model.train_rmse,
                       'rank': model.rank}
        if isinstance(model, LiftedLTIModel):
            diagnostics['constant_mode'] = model.constant_mode.tolist()
        return diagnostics

    def _diffeo_sup_error(self, model: LiftedLTIModel, writer: ReportWriter) -> Optional[float]:
        per_dim = self.config.eval.diffeo_grid
        if self.system.name != 'ex1' or per_dim <= 0:
            return None
        exact = ExactEx1Diffeomorphism(self.system.params['mu'], self.system.params['lam'])
        frame, sup = diffeo_error_grid(model.library.diffeo, exact, self.box, per_dim)
        writer.write_diffeo_grid(frame)
        self.logger.info(f"Diffeomorphism sup error against the closed form on a {per_dim}x{per_dim} grid: {sup:.4e}")
        return sup

    def evaluate(self, models: Optional[Dict[str, FittedModel]] = None,
                 failures: Optional[Dict[str, Exception]] = None,
                 fit_times: Optional[Dict[str, float]] = None) -> EvalReport:
        """
        Score every requested method on the evaluation grid.

        Args:
            models: already fitted models by method; missing ones are loaded from the run directory
            failures: methods that already failed upstream, reported as failed
            fit_times: seconds spent fitting each method, stored as a diagnostic

        Returns:
            EvalReport: one entry per requested method, in request order
        """
        c = self.config
        models, failures, fit_times = dict(models or {}), dict(failures or {}), dict(fit_times or {})
        writer = ReportWriter(self.paths.eval_dir)
        starts = grid_starts(self.box, c.eval.grid_per_dim)
        truth = ground_truth(self.system, starts, c.dt, c.eval.horizon)
        writer.write_ground_truth(truth, c.dt)
        report = EvalReport(preset=c.name, seed=c.seed, dt=c.dt, horizon=c.eval.horizon,
                            n_trajectories=starts.shape[0])

        for method in c.methods:
            if method in failures:
                report.add(failed_method(method, failures[method]))
                continue
            try:
                model = models[method] if method in models else self.load_model(method)
                diagnostics = self._diagnostics(model)
                if method in fit_times:
                    diagnostics['fit_time'] = fit_times[method]
                if isinstance(model, LiftedLTIModel):
                    sup = self._diffeo_sup_error(model, writer)
                    if sup is not None:
                        diagnostics['diffeo_sup_error'] = sup
                method_report, predicted = evaluate_method(method, self._predictor(model), starts, truth,
                                                           lifted_dim=model.D, diagnostics=diagnostics,
                                                           threads=self.threads)
                writer.write_trajectories(method, predicted, c.dt)
                report.add(method_report)
            except Exception as e:
                self.logger.error(f"Evaluation of {method} failed: {str(e)}")
                report.add(failed_method(method, e))

        writer.write_eval_report(report)
        return report

    def compare(self) -> EvalReport:
        """Run every requested method end to end; one method failing does not stop the others."""
        c = self.config
        if not c.methods:
            self.logger.info("No methods requested; writing an empty comparison")
            report = EvalReport(preset=c.name, seed=c.seed, dt=c.dt, horizon=c.eval.horizon, n_trajectories=0)
            ReportWriter(self.paths.eval_dir).write_comparison(report)
            return report

        dataset = self.generate()
        models: Dict[str, FittedModel] = {}
        failures: Dict[str, Exception] = {}
        fit_times: Dict[str, float] = {}
        for method in c.methods:
            t0 = time.perf_counter()
            try:
                if method == 'kefmd':
                    result = self.train(dataset)
                    models[method] = self.build_kefmd(dataset, result.flow)
                else:
                    models[method] = self.fit_baseline(method, dataset)
                fit_times[method] = time.perf_counter() - t0
            except Exception as e:
                self.logger.error(f"Fitting {method} failed: {str(e)}")
                failures[method] = e

        report = self.evaluate(models, failures, fit_times)
        ReportWriter(self.paths.eval_dir).write_comparison(report)
        print(format_summary(report, title=f"METHOD COMPARISON ({c.name}, seed {c.seed})"))
        if self.ledger is not None:
            rows = [r.to_dict(include_timing=True) for r in report.methods.values()]
            self.ledger.record(c.name, c.seed, c.scale, str(self.paths.root), rows)
        return report


def open_ledger(database_url: Optional[str]) -> Optional[RunLedger]:
    """A run ledger, or None when no URL is set or the database cannot be opened."""
    if not database_url:
        return None
    try:
        return RunLedger(database_url)
    except Exception as e:
        logging.getLogger(__name__).error(f"Run ledger unavailable ({database_url}): {str(e)}")
        return None
