# Initialize models package
from .run import ExperimentRun, MethodResult, MethodStatus, RunLedger
