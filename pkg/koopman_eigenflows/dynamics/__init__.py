from .systems import VectorFieldSpec, eval_rhs, jacobian_linearization, make_system
from .types import DomainBox, Trajectory, TrajectoryDataset
from .integrator import integrate, integrate_batch
from .sampling import boundary_starts, grid_starts
from .dataset import generate_dataset, save_dataset, load_dataset
from .exact import ExactEx1Diffeomorphism, exact_diffeo_ex1
