"""Declarative experiment configuration (YAML) and its validation.

Everything scientific lives in the config file so runs are reproducible;
command-line flags only pick the file and override output directory, seed
and worker count.  Validation reports every problem at once with field
paths, and nothing is simulated until the whole config is clean.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import yaml

from .coeffs import (COEFF_FAMILIES, CoefficientPair, InitialCondition,
                     coeffs_from_expressions, make_builtin_coeffs)
from .errors import ConfigValidationError, SvekitError
from .expr import compile_expression
from .kernels import KERNEL_FAMILIES, KernelSpec, make_builtin_kernel
from .scheme import QUADRATURE_MODES, SchemeConfig

ANALYSIS_TYPES = ("moments", "holder", "cauchy", "decomposition", "coupling")


@dataclass(frozen=True)
class AnalysisRequest:
    kind: str
    params: dict = field(default_factory=dict)

    @property
    def name(self) -> str:
        return self.params.get("name", self.kind)


@dataclass(frozen=True)
class ExperimentConfig:
    name: str
    horizon: float
    base_seed: int
    n_paths: int
    finest_level: int
    kernel_mu: KernelSpec
    kernel_sigma: KernelSpec
    coefficients: CoefficientPair
    x0: InitialCondition
    scheme: SchemeConfig
    analyses: tuple
    output_dir: str
    audit_resolution: int = 64
    raw: dict = field(default_factory=dict, repr=False)


def _levels_referenced(analyses) -> list:
    out = []
    for req in analyses:
        p = req.params
        out.extend(p.get("levels", []))
        if "level" in p:
            out.append(p["level"])
        if "driver_level" in p:
            out.append(p["driver_level"])
    return [int(v) for v in out]


def _validate_analysis(kind: str, params: dict, path: str, errors: list) -> None:
    if kind == "moments":
        q = params.get("q", [2, 4])
        if not isinstance(q, (list, tuple)) or not q:
            errors.append(f"{path}.q: must be a non-empty list")
        else:
            for v in q:
                if not isinstance(v, (int, float)) or not 1 <= v <= 8:
                    errors.append(f"{path}.q: order {v!r} out of [1, 8]")
        if "level" not in params:
            errors.append(f"{path}.level: required")
    elif kind == "holder":
        if "level" not in params:
            errors.append(f"{path}.level: required")
        p = params.get("p", 4)
        if not isinstance(p, (int, float)) or p < 2:
            errors.append(f"{path}.p: must be a real >= 2")
        steps = params.get("lag_steps")
        if not isinstance(steps, (list, tuple)) or len(set(steps)) < 4:
            errors.append(f"{path}.lag_steps: need at least 4 distinct lags")
        elif any((not isinstance(s, int)) or s < 1 for s in steps):
            errors.append(f"{path}.lag_steps: entries must be positive integers")
        elif max(steps) / min(steps) < 4:
            errors.append(f"{path}.lag_steps: lags must span at least two octaves")
    elif kind in ("cauchy", "coupling"):
        levels = params.get("levels")
        if not isinstance(levels, (list, tuple)) or len(levels) < 2:
            errors.append(f"{path}.levels: need at least two levels")
        elif any((not isinstance(v, int)) or v < 0 for v in levels):
            errors.append(f"{path}.levels: entries must be nonnegative integers")
        if kind == "coupling":
            qb = params.get("quadrature_b")
            if qb is not None and qb not in QUADRATURE_MODES:
                errors.append(f"{path}.quadrature_b: must be one of {QUADRATURE_MODES}")
    elif kind == "decomposition":
        if "level" not in params:
            errors.append(f"{path}.level: required")
    else:
        errors.append(f"{path}.type: unknown analysis {kind!r} "
                      f"(valid: {', '.join(ANALYSIS_TYPES)})")


def _build_kernel(desc, horizon: float, path: str, errors: list) -> Optional[KernelSpec]:
    if not isinstance(desc, dict) or "family" not in desc:
        errors.append(f"{path}: expected a mapping with a 'family' key")
        return None
    family = desc["family"]
    params = desc.get("params", [])
    if family not in KERNEL_FAMILIES:
        errors.append(f"{path}.family: unknown kernel family {family!r} "
                      f"(valid: {', '.join(KERNEL_FAMILIES)})")
        return None
    try:
        return make_builtin_kernel(family, params, horizon)
    except SvekitError as exc:
        errors.append(f"{path}: {exc}")
        return None


def _build_coeffs(desc, path: str, errors: list) -> Optional[CoefficientPair]:
    if not isinstance(desc, dict) or "family" not in desc:
        errors.append(f"{path}: expected a mapping with a 'family' key")
        return None
    family = desc["family"]
    if family not in COEFF_FAMILIES:
        errors.append(f"{path}.family: unknown coefficient family {family!r} "
                      f"(valid: {', '.join(COEFF_FAMILIES)})")
        return None
    try:
        if family == "custom":
            xi = desc.get("xi", 0.5)
            if not isinstance(xi, (int, float)) or not 0 <= xi <= 0.5:
                errors.append(f"{path}.xi: xi out of [0, 0.5]")
                return None
            return coeffs_from_expressions(
                desc.get("mu", "0"), desc.get("sigma", "0"),
                growth_const=float(desc.get("growth_const", 1.0)),
                lipschitz_const=desc.get("lipschitz_const"),
                holder_const=desc.get("holder_const"), xi=float(xi))
        return make_builtin_coeffs(family, desc.get("params", []))
    except SvekitError as exc:
        errors.append(f"{path}: {exc}")
        return None


def config_from_dict(raw: dict) -> ExperimentConfig:
    """Validate a parsed mapping; raises with every error found."""
    errors: list = []
    if not isinstance(raw, dict):
        raise ConfigValidationError(["top level: expected a mapping"])

    name = raw.get("name", "experiment")
    horizon = raw.get("T", 1.0)
    if not isinstance(horizon, (int, float)) or horizon <= 0:
        errors.append("T: must be a positive real")
        horizon = 1.0
    base_seed = raw.get("base_seed", 0)
    if not isinstance(base_seed, int):
        errors.append("base_seed: must be an integer")
        base_seed = 0
    n_paths = raw.get("n_paths", 1)
    if not isinstance(n_paths, int) or n_paths < 1:
        errors.append("n_paths: must be an integer >= 1")
        n_paths = 1

    kernel_mu = _build_kernel(raw.get("kernel_mu", {"family": "constant", "params": [1.0]}),
                              horizon, "kernel_mu", errors)
    kernel_sigma = _build_kernel(raw.get("kernel_sigma", {"family": "constant", "params": [1.0]}),
                                 horizon, "kernel_sigma", errors)
    coefficients = _build_coeffs(raw.get("coefficients", {"family": "linear_ou", "params": [1.0, 1.0]}),
                                 "coefficients", errors)

    x0 = None
    x0_raw = raw.get("x0", 0.0)
    try:
        if isinstance(x0_raw, (int, float)):
            x0 = InitialCondition(x0=float(x0_raw), holder_beta_claim=1.0,
                                  horizon_hint=float(horizon))
        elif isinstance(x0_raw, str):
            fn = compile_expression(x0_raw, ("t",))
            x0 = InitialCondition(x0=fn, holder_beta_claim=0.5,
                                  horizon_hint=float(horizon))
        else:
            errors.append("x0: must be a number or an expression in t")
    except SvekitError as exc:
        errors.append(f"x0: {exc}")

    scheme_raw = raw.get("scheme", {})
    scheme = None
    try:
        scheme = SchemeConfig(
            kernel_quadrature=scheme_raw.get("kernel_quadrature", "left_point"),
            quadrature_nodes=int(scheme_raw.get("quadrature_nodes", 4)),
            store_aux=bool(scheme_raw.get("store_aux", False)))
    except SvekitError as exc:
        errors.append(f"scheme: {exc}")

    analyses = []
    raw_analyses = raw.get("analyses", [])
    if not isinstance(raw_analyses, list):
        errors.append("analyses: expected a list")
        raw_analyses = []
    for idx, entry in enumerate(raw_analyses):
        path = f"analyses[{idx}]"
        if not isinstance(entry, dict) or "type" not in entry:
            errors.append(f"{path}: expected a mapping with a 'type' key")
            continue
        kind = entry["type"]
        params = {k: v for k, v in entry.items() if k != "type"}
        _validate_analysis(kind, params, path, errors)
        analyses.append(AnalysisRequest(kind=kind, params=params))

    levels = _levels_referenced(analyses)
    finest = raw.get("finest_level", max(levels) if levels else 0)
    if not isinstance(finest, int) or finest < 0:
        errors.append("finest_level: must be a nonnegative integer")
        finest = 0
    for lv in levels:
        if lv > finest:
            errors.append(f"analyses: level {lv} exceeds finest_level {finest}")

    out_dir = raw.get("output_dir", "out")
    audit_resolution = raw.get("audit_resolution", 64)
    if not isinstance(audit_resolution, int) or audit_resolution < 8:
        errors.append("audit_resolution: must be an integer >= 8")
        audit_resolution = 64

    if errors:
        raise ConfigValidationError(errors)
    return ExperimentConfig(
        name=str(name), horizon=float(horizon), base_seed=base_seed,
        n_paths=n_paths, finest_level=finest, kernel_mu=kernel_mu,
        kernel_sigma=kernel_sigma, coefficients=coefficients, x0=x0,
        scheme=scheme, analyses=tuple(analyses), output_dir=str(out_dir),
        audit_resolution=audit_resolution, raw=raw)


def parse_config(text: str) -> ExperimentConfig:
    """Parse YAML text into a fully validated experiment config.

    Syntax errors carry line/column; semantic problems are collected and
    reported all at once.
    """
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        where = (f" at line {mark.line + 1}, column {mark.column + 1}"
                 if mark is not None else "")
        raise ConfigValidationError([f"syntax error{where}: {exc}"]) from exc
    if raw is None:
        raise ConfigValidationError(["empty configuration"])
    return config_from_dict(raw)


def load_config(path) -> ExperimentConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_config(fh.read())
