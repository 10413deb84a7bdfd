"""End-to-end assembly: config -> model -> basis -> system -> kernels -> run.

Also owns the published component labeling of the two-layer experiment:
characteristics are reported in the order (upper +, lower +, upper -,
lower -) as xi1..xi4, and the controls in leftward layer order.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .bilayer import EigenBasis, LinearModel, eigenbasis, linearize
from .config import ExperimentConfig
from .controller import RiemannState
from .hetero import HeteroSystem, from_bilayer
from .kernels import KernelGrid, KernelSet, solve_C, solve_kernels
from .lyapunov import LyapunovParams, choose_params
from .sim import SimConfig, SimGrid, SimTrace, run


@dataclass
class BilayerPipeline:
    cfg: ExperimentConfig
    model: LinearModel
    basis: EigenBasis
    system: HeteroSystem
    kernel_grid: KernelGrid
    kernels: KernelSet
    lyap: Optional[LyapunovParams] = None


def build_pipeline(cfg: ExperimentConfig, with_lyapunov: bool = True,
                   kernel_n: Optional[int] = None) -> BilayerPipeline:
    cfg = cfg.validated()
    model = linearize(cfg.setpoint(), cfg.physical_params())
    basis = eigenbasis(model)
    system = from_bilayer(model, basis, cfg.q0_matrix(), cfg.r1_matrix())
    grid = KernelGrid(kernel_n if kernel_n is not None else cfg.kernel_n)
    kernels = solve_kernels(system, grid, tol=cfg.kernel_tol,
                            max_iter=cfg.kernel_max_iter)
    Cr, Cl, c_iters = solve_C(kernels, system, grid, tol=cfg.kernel_tol,
                              max_iter=cfg.kernel_max_iter)
    kernels = kernels.with_C(Cr, Cl, c_iters)
    lyap = choose_params(system, kernels, grid) if with_lyapunov else None
    return BilayerPipeline(cfg=cfg, model=model, basis=basis, system=system,
                           kernel_grid=grid, kernels=kernels, lyap=lyap)


def sim_config(cfg: ExperimentConfig, controller_on: Optional[bool] = None) -> SimConfig:
    params = {"path": cfg.profile_path} if cfg.profile_path else {}
    return SimConfig(
        grid=SimGrid(cfg.nx),
        T=cfg.t_final,
        cfl=cfg.cfl,
        output_every=cfg.output_every,
        initial_profile=cfg.profile,
        profile_params=params,
        controller_on=cfg.controller if controller_on is None else controller_on,
    )


def run_closed_loop(pipe: BilayerPipeline, controller_on: Optional[bool] = None,
                    initial: Optional[RiemannState] = None) -> SimTrace:
    return run(
        pipe.system, pipe.kernels, sim_config(pipe.cfg, controller_on),
        setpoint=pipe.cfg.setpoint(), basis=pipe.basis, lyap=pipe.lyap,
        initial=initial,
    )


def published_labeling(basis: EigenBasis):
    """Column orders and labels matching the published component naming.

    Returns (norm_order, norm_labels, control_order, control_labels) for
    the trace CSV: characteristics xi1..xi4 listed as (upper +, lower +,
    upper -, lower -), controls in leftward (upper, lower) order.
    """
    n = basis.n_right
    layers_u = [basis.layers[basis.perm[a]] for a in range(n)]
    layers_v = [basis.layers[basis.perm[n + a]] for a in range(basis.n_left)]
    u_of_layer = {layer: idx for idx, layer in enumerate(layers_u)}
    v_of_layer = {layer: idx for idx, layer in enumerate(layers_v)}
    norm_order = [u_of_layer[1], u_of_layer[2], n + v_of_layer[1], n + v_of_layer[2]]
    norm_labels = ["xi1_norm", "xi2_norm", "xi3_norm", "xi4_norm"]
    control_order = [v_of_layer[1], v_of_layer[2]]
    control_labels = ["u1_ctrl", "u2_ctrl"]
    return norm_order, norm_labels, control_order, control_labels

