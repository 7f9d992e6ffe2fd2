"""Report emission: delimited outputs, a JSON summary and rendered figures.

CSV files are byte-deterministic for a fixed scenario (shortest round-trip
float formatting, fixed row order); figures are rendered next to them from
the same series.
"""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from .mesh import save_mesh_json
from .runner import RunResult
from .targets import CAT_MINUS_1

__all__ = ["emit_report", "write_quadrature_selftest"]


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        if math.isnan(x):
            return "nan"
        return repr(x)
    return str(x)


def _write_csv(path: Path, header, rows):
    with open(path, "w", newline="\n") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def emit_report(result: RunResult, out_dir, formats=("csv", "json", "png")) -> list[str]:
    """Write all report files for a run; returns the manifest of file names."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest: list[str] = []

    def record(name: str):
        manifest.append(name)

    if "csv" in formats:
        _write_csv(out / "margins.csv",
                   ["check", "vertex", "sigma", "lhs", "rhs", "margin", "pass"],
                   [(m.check, m.basepoint if m.basepoint is not None else "",
                     m.sigma if m.sigma is not None else "",
                     m.lhs, m.rhs, m.margin, int(m.passed))
                    for m in result.margins])
        record("margins.csv")

        _write_csv(out / "profiles.csv",
                   ["basepoint", "sigma", "E", "I", "flux", "order", "order_bound"],
                   result.profile_rows)
        record("profiles.csv")

        if result.bochner_report is not None:
            rep = result.bochner_report
            _write_csv(out / "bochner.csv",
                       ["vertex", "density", "ric_pi", "pi_pi", "lap",
                        "residual_npc", "residual_cat1"],
                       [(int(v), rep.density[i], rep.ric_pi[i], rep.pi_pi[i],
                         2.0 * rep.lap_half[i], rep.residual_npc[i], rep.residual_cat1[i])
                        for i, v in enumerate(rep.vertices)])
            record("bochner.csv")

        if result.convergence_log is not None:
            _write_csv(out / "convergence.csv", ["sweep", "energy", "max_move"],
                       result.convergence_log.rows())
            record("convergence.csv")

    if "json" in formats:
        save_mesh_json(result.mesh, out / "mesh.json")
        record("mesh.json")
        with open(out / "map.json", "w") as fh:
            json.dump(result.state.to_json(), fh, sort_keys=True)
        record("map.json")

        summary = {
            "scenario": result.scenario.name,
            "seed": result.scenario.seed,
            "converged": result.converged,
            "energy": result.energy,
            "wall_time_s": result.wall_time,
            "pass_fractions": result.pass_fractions,
            "all_passed": result.all_passed,
            "margin_count": len(result.margins),
            "extras": _jsonable(result.extras),
            "files": sorted(set(manifest)),
        }
        if result.bochner_report is not None:
            rep = result.bochner_report
            summary["bochner"] = {
                "sigma": rep.sigma, "tolerance": rep.tolerance,
                "vertices": int(len(rep.vertices)),
                "pass_fraction_npc": rep.pass_fraction_npc,
                "pass_fraction_cat1": rep.pass_fraction_cat1,
            }
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2, sort_keys=True)
        record("summary.json")

    if "png" in formats:
        manifest.extend(_render_figures(result, out))

    result.manifest = sorted(set(manifest))
    return result.manifest


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


# ---------------------------------------------------------------------------
# figures


def _render_figures(result: RunResult, out: Path) -> list[str]:
    made = []
    rows = np.array(result.profile_rows, dtype=float) if result.profile_rows else None

    if rows is not None and len(rows):
        fig, axes = plt.subplots(1, 2, figsize=(9.5, 4.0))
        for bp in np.unique(rows[:, 0]):
            sel = rows[rows[:, 0] == bp]
            axes[0].loglog(sel[:, 1], sel[:, 2], "o-", label=f"E, v{int(bp)}")
            axes[0].loglog(sel[:, 1], sel[:, 3], "s--", label=f"I, v{int(bp)}")
            axes[1].plot(sel[:, 1], sel[:, 5], "o-", label=f"v{int(bp)}")
            good = ~np.isnan(sel[:, 6])
            if good.any():
                axes[1].plot(sel[good, 1], sel[good, 6], ":", color="gray")
        axes[0].set_xlabel("sigma")
        axes[0].set_ylabel("ball energy / boundary integral")
        axes[0].legend(fontsize=7)
        axes[1].axhline(1.0, color="k", lw=0.6)
        axes[1].set_xlabel("sigma")
        axes[1].set_ylabel("sigma E / I")
        axes[1].legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / "profiles.png", dpi=130)
        plt.close(fig)
        made.append("profiles.png")

    if result.margins:
        radial = [m for m in result.margins if m.sigma is not None]
        fig, ax = plt.subplots(figsize=(7.0, 4.2))
        checks = sorted({m.check for m in radial})
        for i, name in enumerate(checks):
            ms = [m for m in radial if m.check == name]
            ax.plot([m.sigma for m in ms], [m.margin for m in ms], "o",
                    ms=4, label=name, color=f"C{i % 10}")
        others = [m for m in result.margins if m.sigma is None]
        for i, m in enumerate(others):
            ax.axhline(m.margin, lw=0.5, ls="--", color="gray")
        ax.axhline(0.0, color="k", lw=0.8)
        ax.set_xlabel("sigma")
        ax.set_ylabel("margin (lhs - rhs)")
        if checks:
            ax.legend(fontsize=7)
        fig.tight_layout()
        fig.savefig(out / "margins.png", dpi=130)
        plt.close(fig)
        made.append("margins.png")

    if result.bochner_report is not None and len(result.bochner_report.vertices):
        rep = result.bochner_report
        which = (rep.residual_cat1 if result.extras.get("curvature_class") == CAT_MINUS_1
                 else rep.residual_npc)
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.hist(which, bins=40, color="C0", alpha=0.85)
        ax.axvline(-rep.tolerance, color="r", lw=0.8, ls="--")
        ax.set_xlabel("pointwise differential-inequality residual")
        ax.set_ylabel("vertices")
        fig.tight_layout()
        fig.savefig(out / "bochner.png", dpi=130)
        plt.close(fig)
        made.append("bochner.png")

    if result.convergence_log is not None and len(result.convergence_log.sweeps) > 1:
        log = np.array(result.convergence_log.rows(), dtype=float)
        fig, axes = plt.subplots(1, 2, figsize=(9.0, 3.6))
        axes[0].plot(log[:, 0], log[:, 1], lw=1.0)
        axes[0].set_xlabel("sweep")
        axes[0].set_ylabel("energy")
        axes[1].semilogy(log[1:, 0], np.maximum(log[1:, 2], 1e-300), lw=1.0)
        axes[1].set_xlabel("sweep")
        axes[1].set_ylabel("max vertex move")
        fig.tight_layout()
        fig.savefig(out / "convergence.png", dpi=130)
        plt.close(fig)
        made.append("convergence.png")

    return made


# ---------------------------------------------------------------------------
# quadrature self-test report


def write_quadrature_selftest(out_dir, seed: int = 20260810, count: int = 100,
                              rel_tol: float = 1e-6):
    """Random quadratic forms against the three closed forms; writes
    quadrature.csv (form_id, n, sigma, analytic, numeric, rel_err) and a
    residual figure.  Returns (passed, max_rel_err, manifest)."""
    from .quadrature import (QuadraticForm, integrate_quadratic_ball,
                             integrate_quadratic_product_sphere,
                             integrate_quadratic_sphere)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    rng = np.random.default_rng(seed)
    rows = []
    worst = 0.0
    for n in (2, 3):
        for i in range(count):
            M = rng.standard_normal((n, n))
            Q = QuadraticForm(M + M.T)
            M2 = rng.standard_normal((n, n))
            Qt = QuadraticForm(M2 + M2.T)
            for sigma in (0.5, 1.0, 2.0):
                for form_id, (analytic, check) in (
                    ("sphere", integrate_quadratic_sphere(Q, sigma, n, numeric=True)),
                    ("ball", integrate_quadratic_ball(Q, sigma, n, numeric=True)),
                    ("product_sphere",
                     integrate_quadratic_product_sphere(Q, Qt, sigma, n, numeric=True)),
                ):
                    scale = max(abs(analytic), 1e-12)
                    rel = abs(check.value - analytic) / scale
                    worst = max(worst, rel)
                    rows.append((f"{form_id}[{i}]", n, sigma, analytic, check.value, rel))
    _write_csv(out / "quadrature.csv",
               ["form_id", "n", "sigma", "analytic", "numeric", "rel_err"], rows)

    rels = np.array([r[5] for r in rows])
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.semilogy(np.arange(len(rels)), np.maximum(rels, 1e-18), ".", ms=2)
    ax.axhline(rel_tol, color="r", lw=0.8, ls="--")
    ax.set_xlabel("case")
    ax.set_ylabel("relative error")
    fig.tight_layout()
    fig.savefig(out / "quadrature.png", dpi=130)
    plt.close(fig)

    return worst <= rel_tol, worst, ["quadrature.csv", "quadrature.png"]
