"""Backstepping boundary stabilization of the linearized two-layer
shallow-water model: linearization, characteristic decomposition, kernel
solve, boundary feedback, weighted-energy certification, and a closed-loop
finite-volume simulator."""

from .bilayer import (
    EigenBasis, LinearModel, PhysicalParams, PhysicalState, SetPoint,
    characteristic_speeds, coupling_matrices, eigenbasis, flux,
    friction_sources, from_riemann, jacobian, linearize, to_riemann,
)
from .config import ExperimentConfig, PRESETS, load_config, parse_config
from .controller import RiemannState, control_input, to_target
from .errors import BilayerCtrlError, SolverError, ValidationError, VerificationError
from .hetero import HeteroSystem, ValidationReport, constant_system, from_bilayer, validate
from .kernels import KernelGrid, KernelSet, kernel_residuals, solve_C, solve_kernels
from .lyapunov import LyapunovParams, certify_decay, choose_params, evaluate_V
from .pipeline import BilayerPipeline, build_pipeline, run_closed_loop
from .sim import SimConfig, SimGrid, SimTrace, init_state, l2_norms, run, step

__version__ = "0.1.0"
