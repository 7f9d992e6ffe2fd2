"""Command-line interface.

Exit codes: 0 all checks pass, 2 completed with failing margins, 3 solver
did not converge, 4 configuration error.
"""

from __future__ import annotations

import os
import sys
from pathlib import Path

import click

from .scenario import ScenarioError, list_builtin_scenarios, parse_scenario

EXIT_OK = 0
EXIT_FAILED_MARGINS = 2
EXIT_NOT_CONVERGED = 3
EXIT_CONFIG = 4


def _thread_count(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("LAB_THREADS")
    return max(1, int(env)) if env else 1


def _load(scenario_path: str):
    p = Path(scenario_path)
    if not p.exists() and not p.suffix:
        from .scenario import builtin_scenario_path

        try:
            p = builtin_scenario_path(scenario_path)
        except FileNotFoundError:
            pass
    return parse_scenario(p)


@click.group()
def main():
    """Numerical laboratory for energy-minimizing maps into NPC and CAT(-1)
    metric targets: builds model domains, solves for discrete harmonic maps
    and verifies the variational and curvature inequalities."""


@main.command()
@click.argument("scenario_path")
@click.option("--out", "out_dir", default=None, help="Output directory (overrides the scenario).")
@click.option("--checks", default=None,
              help="Comma-separated subset of checks to run.")
@click.option("--threads", default=None, type=int,
              help="Worker threads for per-basepoint checks (env LAB_THREADS).")
def run(scenario_path, out_dir, checks, threads):
    """Run a scenario file (or a bundled scenario by name) and emit reports."""
    from .report import emit_report
    from .runner import run_scenario

    try:
        scenario = _load(scenario_path)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)

    check_list = [c.strip() for c in checks.split(",")] if checks else None
    if check_list:
        unknown = [c for c in check_list if c not in scenario.checks
                   and c not in ("profiles",)]
        from .scenario import _CHECK_NAMES

        bad = [c for c in check_list if c not in _CHECK_NAMES]
        if bad:
            click.echo(f"unknown checks: {', '.join(bad)}", err=True)
            sys.exit(EXIT_CONFIG)

    result = run_scenario(scenario, checks=check_list, threads=_thread_count(threads))
    target_dir = out_dir or scenario.output_dir or f"out/{scenario.name}"
    manifest = emit_report(result, target_dir)

    click.echo(f"scenario {scenario.name}: energy={result.energy:.6g} "
               f"converged={result.converged} wall={result.wall_time:.2f}s")
    for name, frac in result.pass_fractions.items():
        click.echo(f"  {name}: pass fraction {frac:.3f}")
    click.echo(f"wrote {len(manifest)} files to {target_dir}")

    if not result.converged:
        sys.exit(EXIT_NOT_CONVERGED)
    if not result.all_passed:
        sys.exit(EXIT_FAILED_MARGINS)
    sys.exit(EXIT_OK)


@main.command()
@click.argument("scenario_path")
def validate(scenario_path):
    """Validate a scenario file without running it."""
    try:
        scenario = _load(scenario_path)
    except ScenarioError as exc:
        click.echo(str(exc), err=True)
        sys.exit(EXIT_CONFIG)
    click.echo(f"scenario {scenario.name}: valid "
               f"({scenario.domain_tag.kind} @ {scenario.resolution}, "
               f"target {scenario.target_config.get('kind')}, "
               f"{len(scenario.sigma_ladder)} ladder radii, seed {scenario.seed})")
    sys.exit(EXIT_OK)


@main.command("quadrature-selftest")
@click.option("--out", "out_dir", default="out/quadrature", show_default=True)
@click.option("--count", default=100, show_default=True,
              help="Random forms per dimension.")
def quadrature_selftest(out_dir, count):
    """Check the closed-form sphere/ball integrals against numeric quadrature."""
    from .report import write_quadrature_selftest

    passed, worst, manifest = write_quadrature_selftest(out_dir, count=count)
    click.echo(f"quadrature self-test: max relative error {worst:.3e} "
               f"({'PASS' if passed else 'FAIL'}); wrote {', '.join(manifest)} to {out_dir}")
    sys.exit(EXIT_OK if passed else EXIT_FAILED_MARGINS)


@main.command("scenarios")
def scenarios_cmd():
    """List bundled scenarios."""
    for name in list_builtin_scenarios():
        click.echo(name)


if __name__ == "__main__":
    main()
