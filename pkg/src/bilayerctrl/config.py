"""Experiment configuration: flat sectioned key-value text.

Sections [physics], [setpoint], [boundary], [kernel], [sim], [output] with
numeric values only (matrices row-major, whitespace separated).  Unset keys
take the values of the selected preset; unknown keys are rejected by name.
"""

from __future__ import annotations

import configparser
import io
from dataclasses import dataclass, replace

import numpy as np

from .bilayer import PhysicalParams, SetPoint
from .errors import ValidationError


@dataclass(frozen=True)
class ExperimentConfig:
    g: float = 9.81
    r: float = 0.01
    cf: float = 0.05
    h1: float = 3.0
    u1: float = 1.0
    h2: float = 1.0
    u2: float = 0.95
    q0: tuple = (-1.5, 0.01, 0.01, 1.5)     # row-major 2x2, layer ordering
    r1: tuple = (0.5, 0.1, 0.15, -0.5)      # row-major 2x2, layer ordering
    kernel_n: int = 200
    kernel_tol: float = 1e-8
    kernel_max_iter: int = 200
    nx: int = 400
    cfl: float = 0.9
    t_final: float = 10.0
    output_every: int = 25
    profile: str = "section4_default"
    profile_path: str = ""
    controller: bool = True
    out_dir: str = "out"
    snapshots: int = 0

    def physical_params(self) -> PhysicalParams:
        return PhysicalParams(g=self.g, r=self.r, Cf=self.cf)

    def setpoint(self) -> SetPoint:
        return SetPoint(H1=self.h1, U1=self.u1, H2=self.h2, U2=self.u2)

    def q0_matrix(self) -> np.ndarray:
        return np.asarray(self.q0, dtype=float).reshape(2, 2)

    def r1_matrix(self) -> np.ndarray:
        return np.asarray(self.r1, dtype=float).reshape(2, 2)

    def validated(self) -> "ExperimentConfig":
        self.physical_params()
        sp = self.setpoint()
        if not sp.is_subcritical(self.physical_params()):
            raise ValidationError("set point must be subcritical in both layers")
        if self.kernel_n < 8:
            raise ValidationError(f"kernel grid needs N >= 8, got {self.kernel_n}")
        if self.kernel_tol <= 0:
            raise ValidationError("kernel tolerance must be positive")
        if self.kernel_max_iter < 1:
            raise ValidationError("kernel max_iter must be >= 1")
        if self.nx < 16:
            raise ValidationError(f"simulation grid needs Nx >= 16, got {self.nx}")
        if not (0.0 < self.cfl <= 1.0):
            raise ValidationError(f"Courant number must be in (0, 1], got {self.cfl}")
        if self.t_final <= 0:
            raise ValidationError("final time must be positive")
        if self.output_every < 1:
            raise ValidationError("output_every must be >= 1")
        if self.snapshots < 0:
            raise ValidationError("snapshots must be >= 0")
        if self.profile not in ("section4_default", "constant_setpoint", "custom_csv"):
            raise ValidationError(f"unknown initial profile {self.profile!r}")
        if self.profile == "custom_csv" and not self.profile_path:
            raise ValidationError("custom_csv profile needs profile_path")
        return self


PRESETS = {
    # published experiment defaults
    "paper-sec4": ExperimentConfig(),
    # same physics with the interlayer friction switched off: zero couplings
    "trivial-decoupled": ExperimentConfig(cf=0.0),
}


_SCHEMA = {
    "physics": {"g": float, "r": float, "cf": float},
    "setpoint": {"h1": float, "u1": float, "h2": float, "u2": float},
    "boundary": {"q0": "matrix", "r1": "matrix"},
    "kernel": {"n": int, "tol": float, "max_iter": int},
    "sim": {"nx": int, "cfl": float, "t_final": float, "output_every": int,
            "profile": str, "profile_path": str, "controller": bool},
    "output": {"dir": str, "snapshots": int},
}

_FIELD_NAMES = {
    ("kernel", "n"): "kernel_n",
    ("kernel", "tol"): "kernel_tol",
    ("kernel", "max_iter"): "kernel_max_iter",
    ("output", "dir"): "out_dir",
}


def _convert(section: str, key: str, raw: str):
    kind = _SCHEMA[section][key]
    raw = raw.strip()
    try:
        if kind == "matrix":
            vals = tuple(float(tok) for tok in raw.split())
            if len(vals) != 4:
                raise ValidationError(
                    f"[{section}] {key}: expected 4 row-major numbers, got {len(vals)}")
            return vals
        if kind is bool:
            low = raw.lower()
            if low in ("on", "true", "1", "yes"):
                return True
            if low in ("off", "false", "0", "no"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValidationError:
        raise
    except ValueError as exc:
        raise ValidationError(f"[{section}] {key}: not a valid value: {raw!r}") from exc


def parse_config(text: str, preset: str | None = None) -> ExperimentConfig:
    """Parse config text over the given preset's defaults and validate."""
    if preset is None:
        base = ExperimentConfig()
    else:
        try:
            base = PRESETS[preset]
        except KeyError:
            raise ValidationError(
                f"unknown preset {preset!r}, available: {sorted(PRESETS)}") from None
    parser = configparser.ConfigParser(interpolation=None)
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ValidationError(f"config syntax error: {exc}") from exc

    overrides = {}
    for section in parser.sections():
        if section not in _SCHEMA:
            raise ValidationError(f"unknown config section [{section}]")
        for key, raw in parser.items(section):
            if key not in _SCHEMA[section]:
                raise ValidationError(f"unknown key {key!r} in section [{section}]")
            name = _FIELD_NAMES.get((section, key), key)
            overrides[name] = _convert(section, key, raw)
    return replace(base, **overrides).validated()


def load_config(path, preset: str | None = None) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read(), preset=preset)


def render_config(cfg: ExperimentConfig) -> str:
    """Serialize the effective configuration back to config text."""
    buf = io.StringIO()
    buf.write("[physics]\n")
    buf.write(f"g = {cfg.g!r}\nr = {cfg.r!r}\ncf = {cfg.cf!r}\n\n")
    buf.write("[setpoint]\n")
    buf.write(f"h1 = {cfg.h1!r}\nu1 = {cfg.u1!r}\nh2 = {cfg.h2!r}\nu2 = {cfg.u2!r}\n\n")
    buf.write("[boundary]\n")
    buf.write("q0 = " + " ".join(repr(v) for v in cfg.q0) + "\n")
    buf.write("r1 = " + " ".join(repr(v) for v in cfg.r1) + "\n\n")
    buf.write("[kernel]\n")
    buf.write(f"n = {cfg.kernel_n}\ntol = {cfg.kernel_tol!r}\nmax_iter = {cfg.kernel_max_iter}\n\n")
    buf.write("[sim]\n")
    buf.write(f"nx = {cfg.nx}\ncfl = {cfg.cfl!r}\nt_final = {cfg.t_final!r}\n")
    buf.write(f"output_every = {cfg.output_every}\nprofile = {cfg.profile}\n")
    if cfg.profile_path:
        buf.write(f"profile_path = {cfg.profile_path}\n")
    buf.write(f"controller = {'on' if cfg.controller else 'off'}\n\n")
    buf.write("[output]\n")
    buf.write(f"dir = {cfg.out_dir}\nsnapshots = {cfg.snapshots}\n")
    return buf.getvalue()
