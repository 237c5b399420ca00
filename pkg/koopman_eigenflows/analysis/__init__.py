from .evaluation import EvalReport, MethodReport, evaluate_method, ground_truth, trajectory_rmse
from .oracles import OracleCheck, OracleSuite, run_oracle_suite
