"""Command-line experiment harness.

Subcommands: ``run`` a config file, ``sweep`` a direction parameter over a
grid, ``probe`` the projection geometry of a manifold, and ``demo`` the
fixed qualitative eigenvalue scenarios.
"""

from __future__ import annotations

import click

from . import bench
from .manifolds import Grassmann, Stiefel

_COMMON = [
    click.option("--seed", type=int, default=None, help="Master seed override."),
    click.option("--instances", type=int, default=None, help="Instance count override."),
    click.option("--out-dir", default="out", show_default=True),
    click.option("--format", "fmt", type=click.Choice(["csv", "json"]), default="csv",
                 show_default=True),
]


def _common(fn):
    for opt in reversed(_COMMON):
        fn = opt(fn)
    return fn


def _apply_overrides(config, seed, instances):
    if seed is not None:
        config.seed = seed
    if instances is not None:
        config.n_instances = instances
    return config


def parse_grid(spec):
    """Grid syntax start:step:stop, endpoints inclusive up to rounding."""
    parts = spec.split(":")
    if len(parts) != 3:
        raise click.BadParameter("grid must look like start:step:stop")
    start, step, stop = (float(p) for p in parts)
    if step <= 0:
        raise click.BadParameter("grid step must be positive")
    values = []
    v = start
    while v <= stop + 1e-12 * max(1.0, abs(stop)):
        values.append(round(v, 12))
        v += step
    return values


def _manifold_from(name, n, r, p):
    if name == "stiefel":
        return Stiefel(n, r)
    if name == "grassmann":
        return Grassmann(p, n)
    raise click.BadParameter(f"unknown manifold {name!r}")


@click.group()
def main():
    """Benchmarks and geometry probes for projected gradient methods on
    compact matrix manifolds."""


@main.command()
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--traces", is_flag=True, help="Also write per-run trace files.")
@_common
def run(config_file, jobs, traces, seed, instances, out_dir, fmt):
    """Run the experiment described by CONFIG_FILE."""
    config = _apply_overrides(bench.load_config(config_file), seed, instances)
    if config.experiment == "geometry_probe":
        p = config.params
        reports = []
        reports += bench.run_probe_suite(Stiefel(int(p["n"]), int(p["r"])),
                                         int(p["samples"]), config.seed)
        reports += bench.run_probe_suite(Grassmann(int(p["p"]), int(p["n"])),
                                         int(p["samples"]), config.seed)
        path = bench.emit_probe_reports(reports, out_dir, fmt)
        click.echo(f"wrote {path}")
        return
    result = bench.run_experiment(config, jobs=jobs, keep_records=traces)
    paths = bench.emit_report(result, out_dir, fmt)
    for row in result.metrics_rows:
        click.echo(f"{row.algorithm}: NIter={row.n_iter_mean:.1f} "
                   f"NGlobal={row.n_global} NSuper={row.n_super} NFail={row.n_fail}")
    click.echo("wrote " + ", ".join(paths[:2]))


@main.command()
@click.argument("config_file", type=click.Path(exists=True))
@click.option("--param", type=click.Choice(["a", "rho"]), required=True)
@click.option("--grid", required=True, help="start:step:stop")
@click.option("--algorithm", default=None, help="Algorithm to sweep.")
@_common
def sweep(config_file, param, grid, algorithm, seed, instances, out_dir, fmt):
    """Sweep a direction parameter over a grid of values."""
    config = _apply_overrides(bench.load_config(config_file), seed, instances)
    values = parse_grid(grid)
    result = bench.sweep_parameter(config, param, values, algorithm)
    path = bench.emit_sweep(result, out_dir, fmt)
    for value, m in result.rows:
        click.echo(f"{param}={value:g}: NIter={m.n_iter_mean:.1f} "
                   f"NGlobal={m.n_global} NSuper={m.n_super}")
    click.echo(f"wrote {path}")


@main.command()
@click.argument("manifold_name", metavar="MANIFOLD",
                type=click.Choice(["stiefel", "grassmann"]))
@click.option("--lemma", "lemmas", multiple=True, default=("all",),
              help="Probe selection; repeatable. One of all, first_order, "
                   "second_order, lower, normal_quadratic, normal_stability, descent.")
@click.option("--samples", type=int, default=10_000, show_default=True)
@click.option("--n", type=int, default=4, show_default=True)
@click.option("--r", type=int, default=2, show_default=True)
@click.option("--p", type=int, default=2, show_default=True)
@_common
def probe(manifold_name, lemmas, samples, n, r, p, seed, instances, out_dir, fmt):
    """Fuzz the projection-geometry inequalities on MANIFOLD."""
    manifold = _manifold_from(manifold_name, n, r, p)
    reports = bench.run_probe_suite(manifold, samples, seed or 0, lemmas)
    path = bench.emit_probe_reports(reports, out_dir, fmt)
    for rep in reports:
        consts = ", ".join(f"{k}={v:.4g}" for k, v in rep.constants.items())
        delta = "" if rep.delta is None else f" delta={rep.delta:.4g}"
        click.echo(f"{rep.name}{delta}: violations={rep.violations}/{rep.samples} "
                   f"worst_ratio={rep.worst_ratio:.4g} [{consts}]")
    click.echo(f"wrote {path}")


@main.command()
@click.argument("which", type=click.Choice(["eigenvalue"]))
@_common
def demo(which, seed, instances, out_dir, fmt):
    """Run the fixed qualitative demo scenarios."""
    config = bench.default_config("eigenvalue_demo")
    _apply_overrides(config, seed, instances)
    result = bench.run_experiment(config)
    paths = bench.emit_report(result, out_dir, fmt)
    for row in result.demo_rows:
        point = ", ".join(f"{v:+.4f}" for v in row.point)
        click.echo(f"{row.scenario:12s} {row.algorithm:12s} {row.status:9s} "
                   f"iters={row.n_iter:5d} f={row.f_final:+.6f} x=({point})")
    click.echo("wrote " + ", ".join(paths))


if __name__ == "__main__":
    main()
