from .config import ExperimentConfig, load_config
from .experiment import build_problem, run_experiment
from .sweep import SweepResult, run_sweep
