"""Plain-text run configuration: strict schema, defaults, canonical echo.

The format is INI-style: `[section]` headers, `key = value` pairs, and
`#` comments.  Every key has a documented default, unknown sections or
keys are errors (not warnings), and `echo_config` renders the fully
resolved configuration in canonical order, so parse -> echo -> parse is a
fixed point.  The full schema with defaults is `describe_schema()`, which
the CLI exposes as `phtaxis schema`.
"""

from __future__ import annotations

import configparser
import io
import math
from dataclasses import dataclass, fields

from .core import (
    ConfigurationError,
    Domain1D,
    GrowthSpec,
    Grid1D,
    InitialCondition,
    ModelParams,
    SourceSpec,
    build_grid,
    sample_growth_bounds,
    validate_growth,
    validate_source,
)
from .kernels import KernelSpec
from .solver import IntegratorConfig

_MODES = ("simulate", "stability-report", "kinetic-validate", "experiment-suite")

# section -> key -> (type tag, default, allowed values or None)
_SCHEMA: dict[str, dict[str, tuple[str, object, tuple | None]]] = {
    "run": {
        "mode": ("str", "simulate", _MODES),
        "seed": ("int", 1, None),
        "blow_up_study": ("bool", False, None),
    },
    "grid": {
        "a": ("float", 20.0, None),
        "n_cells": ("int", 400, None),
    },
    "model": {
        "alpha": ("float", 2.0, None),
        "beta": ("float", 1.0, None),
        "d": ("float", 1.0, None),
        "D_H": ("float", 1.0, None),
    },
    "growth": {
        "form": ("str", "rational", ("rational", "constant")),
        "mu0": ("float", 1.0, None),
        "delta": ("optfloat", None, None),
    },
    "source": {
        "form": ("str", "logistic_acid", ("logistic_acid", "destabilizing")),
        "gamma": ("float", 0.8, None),
        "H": ("float", 1.0, None),
        "G": ("optfloat", None, None),
    },
    "kernel": {
        "family": (
            "str",
            "logistic",
            ("logistic", "uniform", "gaussian", "mexican_hat", "cosine", "epanechnikov", "dirac"),
        ),
        "rho": ("float", 1.0, None),
        "sigma": ("float", 1.0, None),
        "renormalize": ("bool", True, None),
    },
    "ic": {
        "form": ("str", "bump_ramp", ("bump_ramp", "constant")),
        "x_l": ("float", -5.0, None),
        "x_r": ("float", 5.0, None),
        "u0_value": ("float", 1.0, None),
        "h0_value": ("float", 0.0, None),
    },
    "integrator": {
        "scheme": ("str", "rk2-heun", ("explicit-euler", "rk2-heun", "imex")),
        "cfl_safety": ("float", 0.9, None),
        "dt_max": ("float", math.inf, None),
        "t_end": ("float", 50.0, None),
        "snapshot_every": ("float", 1.0, None),
    },
    "output": {
        "directory": ("str", "out", None),
        "heatmap": ("bool", True, None),
    },
    "stability": {
        "z_max": ("int", 200, None),
    },
    "kinetic": {
        "n_particles": ("int", 100000, None),
        "epsilon": ("float", 0.1, None),
        "s1": ("float", 0.0, None),
        "s2": ("float", 1.0, None),
        "lambda0": ("float", 1.0, None),
        "a_coef": ("float", 0.0, None),
        "b_coef": ("float", 0.0, None),
        "t_macro": ("float", 1.0, None),
    },
}


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved configuration of one run (every default applied)."""

    mode: str
    seed: int
    blow_up_study: bool
    a: float
    n_cells: int
    alpha: float
    beta: float
    d: float
    D_H: float
    growth_form: str
    mu0: float
    delta: float | None
    source_form: str
    gamma: float
    H: float
    G: float | None
    kernel_family: str
    rho: float
    sigma: float
    renormalize: bool
    ic_form: str
    x_l: float
    x_r: float
    u0_value: float
    h0_value: float
    scheme: str
    cfl_safety: float
    dt_max: float
    t_end: float
    snapshot_every: float
    directory: str
    heatmap: bool
    z_max: int
    n_particles: int
    epsilon: float
    s1: float
    s2: float
    lambda0: float
    a_coef: float
    b_coef: float
    t_macro: float

    # --- builders for the library objects -------------------------------
    def build_grid(self) -> Grid1D:
        return build_grid(Domain1D(self.a), self.n_cells)

    def build_params(self) -> ModelParams:
        growth = GrowthSpec(form=self.growth_form, mu0=self.mu0, delta=self.delta)
        source = SourceSpec(form=self.source_form, gamma=self.gamma, H=self.H, G=self.G)
        kernel = KernelSpec(family=self.kernel_family, rho=self.rho, sigma=self.sigma)
        validate_growth(growth, source.H)
        validate_source(source)
        return ModelParams(
            alpha=self.alpha,
            beta=self.beta,
            d=self.d,
            D_H=self.D_H,
            growth=growth,
            source=source,
            kernel=kernel,
            blow_up_study=self.blow_up_study,
        )

    def build_ic(self) -> InitialCondition:
        return InitialCondition(
            form=self.ic_form,
            x_l=self.x_l,
            x_r=self.x_r,
            u0_value=self.u0_value,
            h0_value=self.h0_value,
        )

    def build_integrator(self) -> IntegratorConfig:
        return IntegratorConfig(
            scheme=self.scheme,
            cfl_safety=self.cfl_safety,
            dt_max=self.dt_max,
            t_end=self.t_end,
            snapshot_every=self.snapshot_every,
        )

    def theory_flags(self) -> list[str]:
        """Applicability caveats echoed into the run manifest."""
        flags = []
        if self.kernel_family == "mexican_hat":
            flags.append("sign-changing kernel: boundedness theory not applicable")
        if self.source_form == "destabilizing":
            flags.append("source violates the acid ceiling condition: instability permitted")
        if self.alpha > 1.0 + self.beta:
            flags.append("exponents outside the well-posedness condition: blow-up study")
        growth = GrowthSpec(form=self.growth_form, mu0=self.mu0, delta=self.delta)
        if sample_growth_bounds(growth, self.H).mu_min <= 0.0:
            flags.append("growth rate not bounded below by a positive delta")
        return flags


def _convert(section: str, key: str, raw: str):
    tag, _default, allowed = _SCHEMA[section][key]
    raw = raw.strip()
    try:
        if tag == "int":
            value = int(raw)
        elif tag == "float":
            value = float(raw)
        elif tag == "optfloat":
            value = None if raw.lower() in ("", "none", "auto") else float(raw)
        elif tag == "bool":
            if raw.lower() in ("true", "yes", "on", "1"):
                value = True
            elif raw.lower() in ("false", "no", "off", "0"):
                value = False
            else:
                raise ValueError(raw)
        else:
            value = raw
    except ValueError:
        raise ConfigurationError(
            f"[{section}] {key}: cannot parse {raw!r} as {tag}"
        ) from None
    if allowed is not None and value not in allowed:
        raise ConfigurationError(
            f"[{section}] {key}: {value!r} is not one of {allowed}"
        )
    return value


def parse_config(text: str) -> RunConfig:
    """Parse and validate a config; every default is resolved in the result.

    Unknown sections or keys are errors.  The exponent condition
    alpha <= 1 + beta is enforced here (naming the remedy) unless
    blow_up_study is set.
    """
    cp = configparser.ConfigParser(inline_comment_prefixes=("#",), strict=True)
    cp.optionxform = str  # keys are case-sensitive
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigurationError(f"config syntax error: {exc}") from None

    values: dict[str, object] = {}
    for section, keys in _SCHEMA.items():
        for key, (_tag, default, _allowed) in keys.items():
            values[f"{section}.{key}"] = default
    for section in cp.sections():
        if section not in _SCHEMA:
            raise ConfigurationError(f"unknown config section [{section}]")
        for key, raw in cp.items(section):
            if key not in _SCHEMA[section]:
                raise ConfigurationError(f"unknown key {key!r} in section [{section}]")
            values[f"{section}.{key}"] = _convert(section, key, raw)

    cfg = RunConfig(
        mode=values["run.mode"],
        seed=values["run.seed"],
        blow_up_study=values["run.blow_up_study"],
        a=values["grid.a"],
        n_cells=values["grid.n_cells"],
        alpha=values["model.alpha"],
        beta=values["model.beta"],
        d=values["model.d"],
        D_H=values["model.D_H"],
        growth_form=values["growth.form"],
        mu0=values["growth.mu0"],
        delta=values["growth.delta"],
        source_form=values["source.form"],
        gamma=values["source.gamma"],
        H=values["source.H"],
        G=values["source.G"],
        kernel_family=values["kernel.family"],
        rho=values["kernel.rho"],
        sigma=values["kernel.sigma"],
        renormalize=values["kernel.renormalize"],
        ic_form=values["ic.form"],
        x_l=values["ic.x_l"],
        x_r=values["ic.x_r"],
        u0_value=values["ic.u0_value"],
        h0_value=values["ic.h0_value"],
        scheme=values["integrator.scheme"],
        cfl_safety=values["integrator.cfl_safety"],
        dt_max=values["integrator.dt_max"],
        t_end=values["integrator.t_end"],
        snapshot_every=values["integrator.snapshot_every"],
        directory=values["output.directory"],
        heatmap=values["output.heatmap"],
        z_max=values["stability.z_max"],
        n_particles=values["kinetic.n_particles"],
        epsilon=values["kinetic.epsilon"],
        s1=values["kinetic.s1"],
        s2=values["kinetic.s2"],
        lambda0=values["kinetic.lambda0"],
        a_coef=values["kinetic.a_coef"],
        b_coef=values["kinetic.b_coef"],
        t_macro=values["kinetic.t_macro"],
    )
    if cfg.alpha > 1.0 + cfg.beta and not cfg.blow_up_study:
        raise ConfigurationError(
            f"well-posedness exponent condition alpha <= 1 + beta violated "
            f"(alpha={cfg.alpha}, beta={cfg.beta}); set [run] blow_up_study = true "
            f"to run a blow-up study"
        )
    return cfg


_FIELD_TO_SECTION_KEY = {
    "mode": ("run", "mode"),
    "seed": ("run", "seed"),
    "blow_up_study": ("run", "blow_up_study"),
    "a": ("grid", "a"),
    "n_cells": ("grid", "n_cells"),
    "alpha": ("model", "alpha"),
    "beta": ("model", "beta"),
    "d": ("model", "d"),
    "D_H": ("model", "D_H"),
    "growth_form": ("growth", "form"),
    "mu0": ("growth", "mu0"),
    "delta": ("growth", "delta"),
    "source_form": ("source", "form"),
    "gamma": ("source", "gamma"),
    "H": ("source", "H"),
    "G": ("source", "G"),
    "kernel_family": ("kernel", "family"),
    "rho": ("kernel", "rho"),
    "sigma": ("kernel", "sigma"),
    "renormalize": ("kernel", "renormalize"),
    "ic_form": ("ic", "form"),
    "x_l": ("ic", "x_l"),
    "x_r": ("ic", "x_r"),
    "u0_value": ("ic", "u0_value"),
    "h0_value": ("ic", "h0_value"),
    "scheme": ("integrator", "scheme"),
    "cfl_safety": ("integrator", "cfl_safety"),
    "dt_max": ("integrator", "dt_max"),
    "t_end": ("integrator", "t_end"),
    "snapshot_every": ("integrator", "snapshot_every"),
    "directory": ("output", "directory"),
    "heatmap": ("output", "heatmap"),
    "z_max": ("stability", "z_max"),
    "n_particles": ("kinetic", "n_particles"),
    "epsilon": ("kinetic", "epsilon"),
    "s1": ("kinetic", "s1"),
    "s2": ("kinetic", "s2"),
    "lambda0": ("kinetic", "lambda0"),
    "a_coef": ("kinetic", "a_coef"),
    "b_coef": ("kinetic", "b_coef"),
    "t_macro": ("kinetic", "t_macro"),
}


def _render_value(value) -> str:
    if value is None:
        return "auto"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def echo_config(cfg: RunConfig) -> str:
    """Render the resolved configuration in canonical section/key order."""
    per_section: dict[str, list[str]] = {s: [] for s in _SCHEMA}
    for f in fields(cfg):
        section, key = _FIELD_TO_SECTION_KEY[f.name]
        per_section[section].append(f"{key} = {_render_value(getattr(cfg, f.name))}")
    out = io.StringIO()
    for section in _SCHEMA:
        out.write(f"[{section}]\n")
        for line in per_section[section]:
            out.write(line + "\n")
        out.write("\n")
    return out.getvalue()


def config_with(cfg: RunConfig, **overrides) -> RunConfig:
    """Copy with field overrides (used by the experiment presets)."""
    from dataclasses import replace

    return replace(cfg, **overrides)


def default_config() -> RunConfig:
    return parse_config("")


def describe_schema() -> str:
    """Human-readable schema listing with types and defaults."""
    out = io.StringIO()
    out.write("Configuration schema (INI format, '#' comments allowed).\n")
    out.write("Every key is optional; defaults shown are the resolved values.\n\n")
    for section, keys in _SCHEMA.items():
        out.write(f"[{section}]\n")
        for key, (tag, default, allowed) in keys.items():
            line = f"  {key} ({tag}, default {_render_value(default)})"
            if allowed:
                line += f"  one of: {', '.join(map(str, allowed))}"
            out.write(line + "\n")
        out.write("\n")
    return out.getvalue()
