"""Run execution and the preset experiment grids.

`execute_run` dispatches one resolved configuration to the matching
pipeline (simulation, stability report, or kinetic validation) and writes
the run directory: config echo, manifest, snapshot CSVs, optional heatmap
or report files.  `run_experiment_suite` expands a named preset grid into
configurations and executes them, one directory per entry, optionally
across worker processes; the orchestrator only aggregates exit summaries,
so entries stay independent and deterministic.
"""

from __future__ import annotations

import os
import time
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .config import RunConfig, config_with, default_config, echo_config
from .core import GrowthSpec, InitialCondition, ModelParams, SourceSpec
from .kernels import KernelSpec
from .kinetic import (
    EquilibriumDist,
    TurningParams,
    VelocitySpace1D,
    compare_to_pde,
    histogram_density,
    macroscopic_coefficients,
    point_cloud,
    simulate as kinetic_simulate,
)
from .output import (
    ensure_dir,
    write_dispersion_report,
    write_heatmap,
    write_manifest,
    write_snapshot,
)
from .solver import IntegratorConfig, run
from .stability import classify, equilibrium_from_model

SUITE_NAMES = ("fig1", "fig2", "fig3", "dispersion-table")


def _kernel_label(cfg: RunConfig) -> str:
    fam = cfg.kernel_family
    if fam in ("uniform", "cosine", "epanechnikov"):
        return f"{fam}(rho={cfg.rho!r})"
    if fam in ("gaussian", "mexican_hat"):
        return f"{fam}(sigma={cfg.sigma!r})"
    return fam


def _write_common(out_dir: str, cfg: RunConfig, events, clip, reject, steps, t0: float) -> None:
    echo = echo_config(cfg)
    with open(os.path.join(out_dir, "config.ini"), "w", newline="\n") as fh:
        fh.write(echo)
    write_manifest(
        os.path.join(out_dir, "manifest.txt"),
        version=__version__,
        config_echo=echo,
        events=events,
        clip_count=clip,
        reject_count=reject,
        steps=steps,
        theory_flags=cfg.theory_flags(),
        wall_clock_s=time.perf_counter() - t0,
    )


def _run_simulation(cfg: RunConfig, out_dir: str) -> dict:
    t0 = time.perf_counter()
    grid = cfg.build_grid()
    params = cfg.build_params()
    traj = run(
        params,
        grid,
        cfg.build_ic(),
        cfg.build_integrator(),
        renormalize_kernel=cfg.renormalize,
    )
    for i, snap in enumerate(traj.snapshots):
        write_snapshot(snap, os.path.join(out_dir, f"snap_{i:06d}.csv"), grid.x)
    if cfg.heatmap and len(traj.snapshots) >= 2:
        write_heatmap(traj, os.path.join(out_dir, "u_heatmap.pgm"))
    _write_common(out_dir, cfg, traj.events, traj.clip_count, traj.reject_count, traj.steps, t0)
    blow_time = traj.blow_up_time()
    return {
        "out_dir": out_dir,
        "mode": "simulate",
        "blow_up_time": blow_time,
        "flagged_study": cfg.blow_up_study,
        "snapshots": len(traj.snapshots),
        "final_time": traj.final.t,
    }


def _run_stability(cfg: RunConfig, out_dir: str) -> dict:
    t0 = time.perf_counter()
    params = cfg.build_params()
    eq = equilibrium_from_model(params)
    report = classify(eq, cfg.d, cfg.D_H, cfg.beta, params.kernel, cfg.a, cfg.z_max)
    write_dispersion_report(
        report, os.path.join(out_dir, "dispersion.csv"), _kernel_label(cfg)
    )
    _write_common(out_dir, cfg, [], 0, 0, 0, t0)
    return {
        "out_dir": out_dir,
        "mode": "stability-report",
        "verdict": report.verdict,
        "critical_k": [c.k for c in report.critical_ks],
    }


def _run_kinetic(cfg: RunConfig, out_dir: str) -> dict:
    """Diffusion-limit validation: ensemble histogram against the PDE.

    A point cloud spreads from the origin with the turning process; the
    reference is this package's own solver run as pure diffusion with the
    recovered coefficient D (growth off, acid decoupled)."""
    t0 = time.perf_counter()
    grid = cfg.build_grid()
    vspace = VelocitySpace1D(cfg.s1, cfg.s2)
    M = EquilibriumDist()
    M.validate(vspace)
    tp = TurningParams(
        lambda0=cfg.lambda0, a_coef=cfg.a_coef, b_coef=cfg.b_coef, eps=cfg.epsilon
    )
    D, chi = macroscopic_coefficients(M, tp, vspace)

    ens = point_cloud(cfg.n_particles, 0.0, M, vspace, cfg.seed)
    h_frozen = np.full(grid.n_cells, cfg.h0_value) if tp.biased else None
    ens = kinetic_simulate(ens, tp, M, vspace, grid, cfg.t_macro, h_profile=h_frozen)

    pde_params = ModelParams(
        alpha=1.0,
        beta=1.0,
        d=D,
        D_H=1.0,
        growth=GrowthSpec(form="constant", mu0=0.0),
        source=SourceSpec(form="tabulated", func=lambda u, h: np.zeros_like(u)),
        kernel=KernelSpec("dirac"),
    )
    center = int(np.argmin(np.abs(grid.x)))
    delta_mass = np.zeros(grid.n_cells)
    delta_mass[center] = 1.0 / grid.dx
    ic = InitialCondition(
        form="tabulated",
        u0_func=lambda x: delta_mass,
        h0_form="constant",
        h0_value=cfg.h0_value,
    )
    integ = IntegratorConfig(
        scheme="rk2-heun", cfl_safety=0.9, t_end=cfg.t_macro, snapshot_every=cfg.t_macro
    )
    traj = run(pde_params, grid, ic, integ)
    pde_u = traj.final.u
    l1 = compare_to_pde(ens, pde_u, grid)
    hist = histogram_density(ens, grid)
    pde_density = pde_u / (np.sum(pde_u) * grid.dx)

    with open(os.path.join(out_dir, "kinetic_report.csv"), "w", newline="\n") as fh:
        fh.write("quantity,value\n")
        fh.write(f"diffusion_coefficient,{D:.17g}\n")
        fh.write(f"taxis_coefficient,{chi:.17g}\n")
        fh.write(f"l1_error,{l1:.17g}\n")
        fh.write(f"n_particles,{cfg.n_particles}\n")
        fh.write(f"epsilon,{cfg.epsilon:.17g}\n")
        fh.write(f"t_macro,{cfg.t_macro:.17g}\n")
        fh.write(f"seed,{cfg.seed}\n")
    with open(os.path.join(out_dir, "histogram.csv"), "w", newline="\n") as fh:
        fh.write("x,density_mc,density_pde\n")
        for xi, mi, pi in zip(grid.x, hist, pde_density):
            fh.write(f"{xi:.17g},{mi:.17g},{pi:.17g}\n")
    _write_common(out_dir, cfg, [], 0, 0, 0, t0)
    return {"out_dir": out_dir, "mode": "kinetic-validate", "l1_error": l1, "D": D, "chi": chi}


def execute_run(cfg: RunConfig, out_dir: str) -> dict:
    """Run one configuration into its own directory; returns a summary."""
    ensure_dir(out_dir)
    if cfg.mode == "simulate":
        return _run_simulation(cfg, out_dir)
    if cfg.mode == "stability-report":
        return _run_stability(cfg, out_dir)
    if cfg.mode == "kinetic-validate":
        return _run_kinetic(cfg, out_dir)
    raise ValueError(f"mode {cfg.mode!r} is not directly executable")


def _fig1_entries(base: RunConfig) -> list[tuple[str, RunConfig]]:
    entries = []
    for alpha in (2.0, 6.2, 8.15):
        for family, rho in (("logistic", 1.0), ("uniform", 1.0)):
            name = f"alpha{alpha:g}_{family}"
            cfg = config_with(
                base,
                mode="simulate",
                alpha=alpha,
                beta=1.0,
                mu0=1.0,
                kernel_family=family,
                rho=rho,
                t_end=50.0,
                snapshot_every=1.0,
                blow_up_study=alpha > 2.0,
            )
            entries.append((name, cfg))
    return entries


def _fig2_entries(base: RunConfig) -> list[tuple[str, RunConfig]]:
    kernels = [("logistic", 1.0), ("uniform", 1.0), ("uniform", 0.6), ("uniform", 0.05)]
    entries = []
    for alpha in (2.0, 10.0):
        for family, rho in kernels:
            for d in (1.0, 0.01):  # last row of the grid: cell motility far below D_H
                tag = f"{family}{rho:g}" if family == "uniform" else family
                name = f"alpha{alpha:g}_{tag}_d{d:g}"
                cfg = config_with(
                    base,
                    mode="simulate",
                    alpha=alpha,
                    beta=20.0,
                    mu0=100.0,
                    d=d,
                    D_H=1.0,
                    kernel_family=family,
                    rho=rho,
                    # the narrowest kernel needs dx <= rho to be resolvable
                    n_cells=800 if rho == 0.05 else 400,
                    t_end=200.0,
                    snapshot_every=2.0,
                )
                entries.append((name, cfg))
    return entries


def _fig3_entries(base: RunConfig) -> list[tuple[str, RunConfig]]:
    common = dict(
        mode="simulate",
        alpha=2.0,
        beta=20.0,
        mu0=100.0,
        kernel_family="dirac",
        t_end=200.0,
        snapshot_every=2.0,
    )
    return [
        ("local_acid_d1", config_with(base, **common, source_form="logistic_acid", d=1.0)),
        ("local_acid_dsmall", config_with(base, **common, source_form="logistic_acid", d=0.01)),
        (
            "local_destabilizing",
            config_with(
                base, **common, source_form="destabilizing", gamma=0.8, H=4.0, d=1.0
            ),
        ),
    ]


def suite_entries(name: str, base: RunConfig | None = None) -> list[tuple[str, RunConfig]]:
    """Expand a preset grid into named configurations."""
    base = base if base is not None else default_config()
    if name == "fig1":
        return _fig1_entries(base)
    if name == "fig2":
        return _fig2_entries(base)
    if name == "fig3":
        return _fig3_entries(base)
    if name == "dispersion-table":
        return [
            (entry_name, config_with(cfg, mode="stability-report"))
            for entry_name, cfg in _fig2_entries(base)
        ]
    raise ValueError(f"unknown suite {name!r}, expected one of {SUITE_NAMES}")


def run_experiment_suite(
    name: str,
    out_base: str,
    threads: int = 1,
    base: RunConfig | None = None,
) -> list[dict]:
    """Execute a preset grid, one directory per entry, and summarize.

    Entries are independent; with threads > 1 they run in worker
    processes.  Summaries are aggregated in grid order regardless of
    completion order."""
    entries = suite_entries(name, base)
    ensure_dir(out_base)
    jobs = [(cfg, os.path.join(out_base, entry_name)) for entry_name, cfg in entries]
    if threads <= 1:
        summaries = [execute_run(cfg, path) for cfg, path in jobs]
    else:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(execute_run, cfg, path) for cfg, path in jobs]
            summaries = [f.result() for f in futures]
    for (entry_name, _), summary in zip(entries, summaries):
        summary["name"] = entry_name
    with open(os.path.join(out_base, "suite_summary.csv"), "w", newline="\n") as fh:
        fh.write("name,mode,detail\n")
        for s in summaries:
            if s["mode"] == "simulate":
                detail = (
                    f"blow_up@{s['blow_up_time']:.6g}" if s["blow_up_time"] is not None else "completed"
                )
            elif s["mode"] == "stability-report":
                detail = s["verdict"]
            else:
                detail = f"l1={s['l1_error']:.4g}"
            fh.write(f"{s['name']},{s['mode']},{detail}\n")
    return summaries
