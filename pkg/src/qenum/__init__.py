"""Simulator and semantic checker for quantum expression enumerators."""
from .dynamics import MachineRun, StepOperator, apply_step, apply_steps, build_step, region_expectation, split_apply
from .kernels import BACKEND
from .lang import Expression, classify, parse, tokenize_tape
from .machines import BUILTINS, MachineSpec, builtin, load_machine
from .state import EPS, BasisConfig, SparseState, init_state, inner_product, superpose

__version__ = "0.1.0"
