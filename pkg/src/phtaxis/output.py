"""Run artifacts: snapshot CSVs, space-time heatmaps, reports, manifests.

Snapshots are CSV with 17 significant digits and LF line endings, which
round-trips doubles bit-exactly.  Heatmaps are binary PGM (maxval 65535,
big-endian rows, top row = t0) with a sidecar CSV recording the color
scale.  The manifest echoes the resolved configuration and the event and
invariant counters; its wall-clock line is explicitly marked volatile so
determinism comparisons can filter it.
"""

from __future__ import annotations

import os

import numpy as np

from .core import State
from .solver import Trajectory
from .stability import InstabilityReport

SNAPSHOT_HEADER = "x,u,h"
VOLATILE_PREFIX = "# volatile"


class OutputError(OSError):
    """I/O failure while writing a run artifact (carries path context)."""


def _wrap_io(path: str, exc: OSError) -> OutputError:
    return OutputError(f"failed writing {path}: {exc}")


def write_snapshot(state: State, path: str, x: np.ndarray) -> None:
    """One row per node: x,u,h at 17 significant digits, LF endings."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(SNAPSHOT_HEADER + "\n")
            for xi, ui, hi in zip(x, state.u, state.h):
                fh.write(f"{xi:.17g},{ui:.17g},{hi:.17g}\n")
    except OSError as exc:
        raise _wrap_io(path, exc) from exc


def read_snapshot(path: str) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Inverse of write_snapshot; returns (x, u, h)."""
    data = np.loadtxt(path, delimiter=",", skiprows=1)
    data = np.atleast_2d(data)
    return data[:, 0], data[:, 1], data[:, 2]


def write_heatmap(traj: Trajectory, path: str) -> None:
    """Binary PGM of u over space-time: rows are snapshots (top = t0).

    Values map linearly from [0, max over the trajectory] to [0, 65535];
    a constant-zero trajectory yields an all-black image rather than an
    error.  The sidecar `<path>.scale.csv` records the mapping.
    """
    if len(traj.snapshots) < 2:
        raise ValueError("heatmap needs at least 2 snapshots")
    rows = np.stack([s.u for s in traj.snapshots])
    u_max = float(rows.max())
    scale = 65535.0 / u_max if u_max > 0.0 else 0.0
    pixels = np.clip(np.round(rows * scale), 0, 65535).astype(">u2")
    height, width = pixels.shape
    try:
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n65535\n".encode("ascii"))
            fh.write(pixels.tobytes())
        with open(path + ".scale.csv", "w", newline="\n") as fh:
            fh.write("field,u_min,u_max,maxval\n")
            fh.write(f"u,0,{u_max:.17g},65535\n")
    except OSError as exc:
        raise _wrap_io(path, exc) from exc


def write_dispersion_report(report: InstabilityReport, path: str, kernel_label: str) -> None:
    """CSV of per-mode dispersion data plus a verdict/critical-k summary.

    The kernel metadata comment is the only line distinguishing otherwise
    identical sweeps (e.g. a dirac sweep versus the local model's)."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write(f"# kernel: {kernel_label}\n")
            fh.write("k,trace,det,re_lambda1,im_lambda1,re_lambda2,im_lambda2,class\n")
            for p in report.points:
                fh.write(
                    f"{p.k:.17g},{p.trace:.17g},{p.determinant:.17g},"
                    f"{p.lambda1.real:.17g},{p.lambda1.imag:.17g},"
                    f"{p.lambda2.real:.17g},{p.lambda2.imag:.17g},{p.classification}\n"
                )
            fh.write(f"# verdict: {report.verdict}\n")
            if report.critical_ks:
                joined = "; ".join(f"{c.quantity}@{c.k:.12g}" for c in report.critical_ks)
                fh.write(f"# critical_k: {joined}\n")
            else:
                fh.write("# critical_k: none\n")
            for note in report.notes:
                fh.write(f"# note: {note}\n")
    except OSError as exc:
        raise _wrap_io(path, exc) from exc


def write_manifest(
    path: str,
    *,
    version: str,
    config_echo: str,
    events: list,
    clip_count: int,
    reject_count: int,
    steps: int,
    theory_flags: list[str],
    wall_clock_s: float,
) -> None:
    """Plain-text record sufficient to reproduce a deterministic run.

    Everything except the marked volatile line is a pure function of the
    configuration, so byte comparisons of manifests may drop lines starting
    with the volatile prefix."""
    try:
        with open(path, "w", newline="\n") as fh:
            fh.write("phtaxis run manifest\n")
            fh.write(f"version: {version}\n")
            fh.write("\n--- resolved configuration ---\n")
            fh.write(config_echo)
            fh.write("--- events ---\n")
            if events:
                for ev in events:
                    fh.write(f"{ev.kind} at t={ev.t:.12g}: {ev.detail}\n")
            else:
                fh.write("none\n")
            fh.write("\n--- invariant checks ---\n")
            fh.write(f"steps: {steps}\n")
            fh.write(f"positivity_clips: {clip_count}\n")
            fh.write(f"dt_rejections: {reject_count}\n")
            if theory_flags:
                for flag in theory_flags:
                    fh.write(f"flag: {flag}\n")
            else:
                fh.write("flag: none\n")
            fh.write(f"\n{VOLATILE_PREFIX} wall_clock_seconds: {wall_clock_s:.3f}\n")
    except OSError as exc:
        raise _wrap_io(path, exc) from exc


def manifest_stable_lines(path: str) -> list[str]:
    """Manifest lines with the volatile ones dropped (for determinism checks)."""
    with open(path) as fh:
        return [ln for ln in fh.read().splitlines() if not ln.startswith(VOLATILE_PREFIX)]


def ensure_dir(path: str) -> str:
    try:
        os.makedirs(path, exist_ok=True)
    except OSError as exc:
        raise _wrap_io(path, exc) from exc
    return path
