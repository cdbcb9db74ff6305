"""Experiment harness: seeded instance batches, algorithm-by-instance solve
matrices, the summary metrics (NIter / Time / NGlobal / NBetter / NWorse /
NSuper / NFail), parameter sweeps, and CSV/JSON report emission.

Fairness contract: within one experiment every algorithm sees the same
instance list, the same starts, and the same shift matrices S, because all
of them are derived from the per-instance seed. Per-instance seeds come
from the master seed through one splitmix64 step per index.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .directions import (
    Egp,
    IdentityS,
    Rgd,
    ShiftedPm,
    TgpAEigen,
    TgpDE,
    TgpDF,
    TgpE,
    TgpR,
)
from .geometry import (
    probe_descent_inequality,
    probe_first_order_bound,
    probe_lower_bound,
    probe_normal_quadratic,
    probe_normal_stability,
    probe_second_order_bound,
)
from .manifolds import ManifoldPoint, Stiefel
from .problems import EigenvalueProblem, InhomogeneousQP, generate_instance
from .solver import MAX_ITER, MAX_TIME, SolverConfig, solve
from .stepsizes import ArmijoParams

_MASK = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15

EXPERIMENTS = (
    "qp_inhomo_case1",
    "qp_inhomo_case2",
    "jamd_s",
    "jatd_s",
    "eigenvalue_demo",
    "geometry_probe",
)

DEFAULT_ALGORITHMS = (
    "tgp_a_r", "tgp_na_r", "tgp_f_r", "tgp_a_e", "tgp_na_e", "tgp_f_e", "rgd",
)

_COMMON_PARAMS = dict(
    n=3, r=2, gamma=0.5, beta=0.5, trial0=1.0, eta=0.1,
    tol_gradnorm=1e-4, max_iter=10_000, max_time=5.0,
    rho=0.25, f_scale=0.05, shift_s=4.0, samples=10_000,
)

EXPERIMENT_DEFAULTS = {
    # fixed stepsizes for the QP experiments are tuned near 1/L of the
    # quadratic (L ~ lambda_max(A)); see README for the choice
    "qp_inhomo_case1": dict(_COMMON_PARAMS, gamma=1e-4, a_r=1.1, a_e=1.1,
                            tau_fixed_r=0.11, tau_fixed_e=0.11),
    "qp_inhomo_case2": dict(_COMMON_PARAMS, a_r=0.7, a_e=0.7,
                            tau_fixed_r=0.10, tau_fixed_e=0.10),
    "jamd_s": dict(_COMMON_PARAMS, a_r=2.0, a_e=10.8, eta=0.2, L=3, noise=0.02,
                   tau_fixed_r=0.025, tau_fixed_e=0.059),
    "jatd_s": dict(_COMMON_PARAMS, a_r=9.6, a_e=12.4, L=1, max_time=10.0,
                   tau_fixed_r=0.01, tau_fixed_e=0.035),
    "eigenvalue_demo": dict(_COMMON_PARAMS),
    "geometry_probe": dict(_COMMON_PARAMS, n=4, r=2, p=2),
}

_PROBLEM_KIND = {
    "qp_inhomo_case1": "qp_inhomo_case1",
    "qp_inhomo_case2": "qp_inhomo_case2",
    "jamd_s": "jamd_s",
    "jatd_s": "jatd_s",
}


def derive_seed(master, index):
    """Per-index seed: one splitmix64 output step from the master seed."""
    z = (int(master) + (int(index) + 1) * _GOLDEN) & _MASK
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK
    return (z ^ (z >> 31)) & _MASK


@dataclass
class ExperimentConfig:
    experiment: str
    n_instances: int = 100
    seed: int = 20240601
    algorithms: tuple = DEFAULT_ALGORITHMS
    baseline: str = "rgd"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.experiment not in EXPERIMENTS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        merged = dict(EXPERIMENT_DEFAULTS[self.experiment])
        merged.update(self.params)
        self.params = merged
        self.algorithms = tuple(self.algorithms)


def default_config(experiment, n_instances=100, seed=20240601, **overrides):
    return ExperimentConfig(experiment, n_instances, seed, params=overrides)


_INT_KEYS = {"instances", "seed", "max_iter", "n", "r", "p", "L", "samples"}


def load_config(path):
    """Parse the flat key = value config format (one experiment per file).

    Lines starting with '#' are comments. ``algorithms`` is a comma list;
    numeric values are typed by key.
    """
    raw = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, _, value = line.partition("=")
            raw[key.strip()] = value.strip()

    if "experiment" not in raw:
        raise ValueError(f"{path}: missing required key 'experiment'")
    experiment = raw.pop("experiment")
    n_instances = int(raw.pop("instances", 100))
    seed = int(raw.pop("seed", 20240601))
    algorithms = tuple(
        a.strip() for a in raw.pop("algorithms", ",".join(DEFAULT_ALGORITHMS)).split(",")
        if a.strip()
    )
    baseline = raw.pop("baseline", "rgd")
    params = {}
    for key, value in raw.items():
        if key in _INT_KEYS:
            params[key] = int(value)
        elif key in ("sweep_algorithm",):
            params[key] = value
        else:
            params[key] = float(value)
    return ExperimentConfig(experiment, n_instances, seed, algorithms, baseline, params)


def _armijo_params(p, trial0=None):
    return ArmijoParams(gamma=p["gamma"], beta=p["beta"],
                        trial0=p["trial0"] if trial0 is None else trial0)


def solver_config_for(algorithm, p):
    """Map an algorithm name plus experiment parameters to a SolverConfig."""
    stopping = dict(tol_gradnorm=p["tol_gradnorm"], max_iter=int(p["max_iter"]),
                    max_time=p["max_time"])
    armijo = _armijo_params(p)
    r = int(p.get("r", 2))
    n = int(p.get("n", 3))
    if algorithm == "rgd":
        return SolverConfig(Rgd(), "armijo", armijo, **stopping)
    if algorithm == "egp":
        return SolverConfig(Egp(), "armijo", armijo, **stopping)
    if algorithm == "shifted_pm":
        return SolverConfig(ShiftedPm(p["shift_s"]), "fixed", tau_fixed=1.0, **stopping)
    if algorithm == "tgp_a_eigen":
        return SolverConfig(TgpAEigen(p["f_scale"]), "armijo",
                            _armijo_params(p, trial0=p.get("trial0", 1.0)), **stopping)
    if algorithm == "tgp_a_de":
        return SolverConfig(TgpDE(p["rho"], p["a_e"]), "armijo", armijo, **stopping)
    if algorithm == "tgp_a_df":
        scal_f = p["f_scale"] * np.eye(n - r)
        spec = TgpDF(np.eye(r), scal_f, 4.0 * p["rho"] - 1.0, p["a_e"])
        return SolverConfig(spec, "armijo", armijo, **stopping)

    family = {"r": TgpR, "e": TgpE}.get(algorithm[-1])
    if family is None or not algorithm.startswith("tgp_"):
        raise ValueError(f"unknown algorithm {algorithm!r}")
    a = p["a_r"] if algorithm.endswith("_r") else p["a_e"]
    spec = family(a)
    mode = algorithm[len("tgp_"):-2]
    if mode == "a":
        return SolverConfig(spec, "armijo", armijo, **stopping)
    if mode == "na":
        return SolverConfig(spec, "nonmonotone", armijo, eta=p["eta"], **stopping)
    if mode == "f":
        tau = p["tau_fixed_r"] if algorithm.endswith("_r") else p["tau_fixed_e"]
        return SolverConfig(spec, "fixed", tau_fixed=tau, **stopping)
    raise ValueError(f"unknown algorithm {algorithm!r}")


@dataclass(frozen=True)
class RunRow:
    experiment: str
    algorithm: str
    instance_seed: int
    status: str
    n_iter: int
    wall_ms: float
    f_final: float
    gradnorm_final: float


@dataclass(frozen=True)
class MetricsRow:
    experiment: str
    algorithm: str
    n_instances: int
    n_iter_mean: float
    time_mean_s: float
    n_global: int | None
    n_better: int | None
    n_worse: int | None
    n_super: int | None
    n_fail: int


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    run_rows: list
    metrics_rows: list
    records: dict = field(default_factory=dict)


def make_instances(config):
    """Shared instance batch: [(instance_seed, problem, x0), ...]."""
    kind = _PROBLEM_KIND[config.experiment]
    out = []
    for i in range(config.n_instances):
        seed_i = derive_seed(config.seed, i)
        problem, x0 = generate_instance(kind, config.params, seed_i)
        out.append((seed_i, problem, x0))
    return out


def _solve_task(args):
    algorithm, solver_config, seed_i, problem, x0, experiment, keep = args
    record = solve(problem, x0, solver_config, seed=seed_i)
    row = RunRow(experiment, algorithm, seed_i, record.status, record.n_iter,
                 1e3 * record.wall_time, record.f_final, record.gradnorm_final)
    return algorithm, seed_i, row, (record if keep else None)


def _metrics_from_rows(experiment, algorithm, rows, fstar, baseline_f, n_instances,
                       is_baseline):
    n_iter_mean = float(np.mean([r.n_iter for r in rows]))
    time_mean = float(np.mean([r.wall_ms for r in rows])) / 1e3
    n_fail = sum(r.status in (MAX_ITER, MAX_TIME) for r in rows)
    n_global = n_better = n_worse = n_super = None
    if fstar is not None:
        n_global = sum(r.f_final < fstar + 1e-4 for r in rows)
    elif not is_baseline and baseline_f is not None:
        n_better = sum(r.f_final < b - 1e-4 for r, b in zip(rows, baseline_f))
        n_worse = sum(r.f_final > b + 1e-4 for r, b in zip(rows, baseline_f))
        n_super = n_better - n_worse
    return MetricsRow(experiment, algorithm, n_instances, n_iter_mean, time_mean,
                      n_global, n_better, n_worse, n_super, n_fail)


def run_experiment(config, jobs=1, keep_records=False):
    """Solve every (instance, algorithm) pair and aggregate the metrics.

    ``jobs > 1`` dispatches the solve jobs to a process pool; aggregation
    order is deterministic either way.
    """
    if config.experiment == "eigenvalue_demo":
        return run_eigenvalue_demo(config, keep_records=keep_records)
    if config.experiment == "geometry_probe":
        raise ValueError("use run_probe_suite for the geometry_probe experiment")

    algorithms = list(config.algorithms)
    needs_baseline = config.experiment in ("jamd_s", "jatd_s")
    if needs_baseline and config.baseline not in algorithms:
        algorithms.append(config.baseline)

    instances = make_instances(config)
    tasks = [
        (alg, solver_config_for(alg, config.params), seed_i, problem, x0,
         config.experiment, keep_records)
        for alg in algorithms
        for (seed_i, problem, x0) in instances
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(_solve_task, tasks, chunksize=8))
    else:
        outcomes = [_solve_task(t) for t in tasks]

    by_alg = {alg: [] for alg in algorithms}
    records = {}
    for algorithm, seed_i, row, record in outcomes:
        by_alg[algorithm].append(row)
        if record is not None:
            records[(algorithm, seed_i)] = record

    fstar = instances[0][1].known_fstar if instances else None
    baseline_rows = by_alg.get(config.baseline)
    baseline_f = [r.f_final for r in baseline_rows] if baseline_rows else None

    metrics = [
        _metrics_from_rows(config.experiment, alg, by_alg[alg], fstar, baseline_f,
                           config.n_instances, alg == config.baseline)
        for alg in algorithms
    ]
    run_rows = [row for alg in algorithms for row in by_alg[alg]]
    return ExperimentResult(config, run_rows, metrics, records)


# ---------------------------------------------------------------------------
# eigenvalue demo (fixed qualitative scenarios)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class DemoRow:
    scenario: str
    algorithm: str
    status: str
    n_iter: int
    f_final: float
    gradnorm_final: float
    point: tuple


def demo_scenarios(params):
    """The fixed qualitative scenarios: saddle escape via a non-zero F block,
    per-coordinate contraction ratios, and the QP local-minimum escape."""
    sqrt3 = math.sqrt(3.0)
    stopping = dict(tol_gradnorm=params["tol_gradnorm"],
                    max_iter=int(params["max_iter"]), max_time=params["max_time"])
    eigen_escape = EigenvalueProblem(np.diag([4.0, 2.0, -2.0]))
    x0_escape = np.array([[sqrt3 / 2.0], [0.5], [0.0]])
    eigen_ratio = EigenvalueProblem(np.diag([3.0, 3.0, 2.0]))
    x0_ratio = np.full((3, 1), 1.0 / sqrt3)
    qp = InhomogeneousQP(np.diag([5.0, 2.0]), np.array([[0.0], [1.0]]))
    x0_qp = np.array([[-1.0], [-1.0]]) / math.sqrt(2.0)

    armijo = ArmijoParams(gamma=0.5, beta=0.5, trial0=1.0)
    return [
        ("eigen_escape", "rgd", eigen_escape, x0_escape,
         SolverConfig(Rgd(), "armijo", armijo, keep_iterates=True, **stopping)),
        ("eigen_escape", "tgp_a_eigen", eigen_escape, x0_escape,
         SolverConfig(TgpAEigen(params["f_scale"]), "armijo",
                      ArmijoParams(gamma=0.5, beta=0.5, trial0=0.5),
                      keep_iterates=True, **stopping)),
        ("eigen_ratio", "egp_fixed", eigen_ratio, x0_ratio,
         SolverConfig(Egp(), "fixed", tau_fixed=0.2, keep_iterates=True, **stopping)),
        ("eigen_ratio", "shifted_pm", eigen_ratio, x0_ratio,
         SolverConfig(ShiftedPm(params["shift_s"]), "fixed", tau_fixed=1.0,
                      keep_iterates=True, **stopping)),
        ("qp_escape", "rgd", qp, x0_qp,
         SolverConfig(Rgd(), "armijo", armijo, keep_iterates=True, **stopping)),
        ("qp_escape", "tgp_a_r", qp, x0_qp,
         SolverConfig(TgpR(2.0, IdentityS()), "armijo", armijo,
                      keep_iterates=True, **stopping)),
    ]


def run_eigenvalue_demo(config, keep_records=False):
    demo_rows = []
    run_rows = []
    records = {}
    for scenario, algorithm, problem, x0, solver_config in demo_scenarios(config.params):
        record = solve(problem, ManifoldPoint(problem.manifold, x0), solver_config,
                       seed=config.seed)
        demo_rows.append(DemoRow(scenario, algorithm, record.status, record.n_iter,
                                 record.f_final, record.gradnorm_final,
                                 tuple(record.final_point.value.ravel())))
        run_rows.append(RunRow(config.experiment, f"{scenario}/{algorithm}",
                               config.seed, record.status, record.n_iter,
                               1e3 * record.wall_time, record.f_final,
                               record.gradnorm_final))
        if keep_records:
            records[(scenario, algorithm)] = record
    result = ExperimentResult(config, run_rows, [], records)
    result.demo_rows = demo_rows
    return result


# ---------------------------------------------------------------------------
# geometry probe suite
# ---------------------------------------------------------------------------


def run_probe_suite(manifold, samples=10_000, seed=0, lemmas=("all",), problem=None):
    """Run the projection-geometry probes over the delta grid
    {0.1, 0.25, 0.5} * reach."""
    wanted = set(lemmas)
    everything = "all" in wanted
    deltas = [f * manifold.reach for f in (0.1, 0.25, 0.5)]
    reports = []
    if everything or "first_order" in wanted:
        reports += [probe_first_order_bound(manifold, d, samples, seed) for d in deltas]
    if everything or "second_order" in wanted:
        reports += [probe_second_order_bound(manifold, d, samples, seed) for d in deltas]
    if everything or "lower" in wanted:
        reports.append(probe_lower_bound(manifold, samples, seed))
    if everything or "normal_quadratic" in wanted:
        reports.append(probe_normal_quadratic(manifold, samples, seed))
    if everything or "normal_stability" in wanted:
        reports.append(probe_normal_stability(manifold, samples, seed))
    if (everything or "descent" in wanted) and isinstance(manifold, Stiefel):
        if problem is None:
            problem, _ = generate_instance(
                "qp_inhomo_case2", {"n": manifold.n, "r": manifold.r}, seed)
        reports += [probe_descent_inequality(manifold, problem, d, samples, seed)
                    for d in deltas]
    return reports


# ---------------------------------------------------------------------------
# parameter sweeps
# ---------------------------------------------------------------------------


@dataclass
class SweepResult:
    config: ExperimentConfig
    param: str
    algorithm: str
    rows: list          # (value, MetricsRow)
    records: dict       # (value, instance_seed) -> RunRecord, if kept
    baseline_metrics: MetricsRow | None


def sweep_parameter(config, param, grid, algorithm=None, keep_records=False):
    """Re-run one algorithm over the shared instance batch for every grid
    value of ``a`` or ``rho``; the baseline algorithm runs once."""
    if param not in ("a", "rho"):
        raise ValueError("sweep parameter must be 'a' or 'rho'")
    if algorithm is None:
        algorithm = config.params.get("sweep_algorithm") or (
            "tgp_a_de" if param == "rho" else "tgp_a_r")

    instances = make_instances(config)
    fstar = instances[0][1].known_fstar if instances else None

    def run_alg(name, params):
        cfg = solver_config_for(name, params)
        rows, recs = [], {}
        for seed_i, problem, x0 in instances:
            record = solve(problem, x0, cfg, seed=seed_i)
            rows.append(RunRow(config.experiment, name, seed_i, record.status,
                               record.n_iter, 1e3 * record.wall_time,
                               record.f_final, record.gradnorm_final))
            if keep_records:
                recs[seed_i] = record
        return rows, recs

    baseline_rows, _ = run_alg(config.baseline, config.params)
    baseline_f = [r.f_final for r in baseline_rows]
    baseline_metrics = _metrics_from_rows(config.experiment, config.baseline,
                                          baseline_rows, fstar, None,
                                          config.n_instances, True)

    rows = []
    records = {}
    for value in grid:
        params = dict(config.params)
        if param == "a":
            params["a_r"] = value
            params["a_e"] = value
        else:
            params["rho"] = value
        alg_rows, recs = run_alg(algorithm, params)
        metrics = _metrics_from_rows(config.experiment, algorithm, alg_rows, fstar,
                                     baseline_f, config.n_instances, False)
        rows.append((float(value), metrics))
        for seed_i, record in recs.items():
            records[(float(value), seed_i)] = record
    return SweepResult(config, param, algorithm, rows, records, baseline_metrics)


# ---------------------------------------------------------------------------
# report emission
# ---------------------------------------------------------------------------


def _fmt(value):
    if value is None:
        return ""
    if isinstance(value, float):
        if math.isnan(value):
            return ""
        return f"{value:.17g}"
    return str(value)


def _write_csv(path, header, rows):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


RUNS_HEADER = ["experiment", "algorithm", "instance_seed", "status", "n_iter",
               "wall_ms", "f_final", "gradnorm_final"]
METRICS_HEADER = ["experiment", "algorithm", "n_instances", "n_iter_mean",
                  "time_mean_s", "n_global", "n_better", "n_worse", "n_super",
                  "n_fail"]
TRACE_HEADER = ["k", "f", "gradnorm", "tau", "backtracks", "c"]
PROBE_HEADER = ["manifold", "probe", "delta", "samples", "violations",
                "worst_ratio", "constants"]
DEMO_HEADER = ["scenario", "algorithm", "status", "n_iter", "f_final",
               "gradnorm_final", "point"]


def _rows_to_dicts(header, rows):
    out = []
    for row in rows:
        d = {}
        for key, val in zip(header, row):
            if isinstance(val, float) and math.isnan(val):
                val = None
            d[key] = val
        out.append(d)
    return out


def _emit(path_base, header, rows, fmt):
    if fmt == "csv":
        _write_csv(path_base + ".csv", header, rows)
        return path_base + ".csv"
    with open(path_base + ".json", "w") as fh:
        json.dump(_rows_to_dicts(header, rows), fh, indent=1)
    return path_base + ".json"


def _run_row_values(r):
    return [r.experiment, r.algorithm, r.instance_seed, r.status, r.n_iter,
            r.wall_ms, r.f_final, r.gradnorm_final]


def _metrics_row_values(m):
    return [m.experiment, m.algorithm, m.n_instances, m.n_iter_mean, m.time_mean_s,
            m.n_global, m.n_better, m.n_worse, m.n_super, m.n_fail]


def trace_rows(record):
    return [[row.k, row.f, row.gradnorm, row.tau, row.backtracks, row.c]
            for row in record.rows]


def emit_report(result, out_dir, fmt="csv"):
    """Write runs + metrics (+ demo rows, + traces for kept records)."""
    os.makedirs(out_dir, exist_ok=True)
    paths = []
    paths.append(_emit(os.path.join(out_dir, "runs"), RUNS_HEADER,
                       [_run_row_values(r) for r in result.run_rows], fmt))
    paths.append(_emit(os.path.join(out_dir, "metrics"), METRICS_HEADER,
                       [_metrics_row_values(m) for m in result.metrics_rows], fmt))
    demo_rows = getattr(result, "demo_rows", None)
    if demo_rows:
        rows = [[d.scenario, d.algorithm, d.status, d.n_iter, d.f_final,
                 d.gradnorm_final, ";".join(f"{v:.17g}" for v in d.point)]
                for d in demo_rows]
        paths.append(_emit(os.path.join(out_dir, "demo_points"), DEMO_HEADER, rows, fmt))
    if result.records:
        trace_dir = os.path.join(out_dir, "traces")
        os.makedirs(trace_dir, exist_ok=True)
        for key, record in result.records.items():
            name = "_".join(str(k) for k in key)
            paths.append(_emit(os.path.join(trace_dir, name), TRACE_HEADER,
                               trace_rows(record), fmt))
    return paths


def emit_sweep(result, out_dir, fmt="csv"):
    os.makedirs(out_dir, exist_ok=True)
    header = ["experiment", "param", "value", "algorithm"] + METRICS_HEADER[2:]
    rows = [[result.config.experiment, result.param, value, result.algorithm]
            + _metrics_row_values(m)[2:] for value, m in result.rows]
    return _emit(os.path.join(out_dir, "sweep"), header, rows, fmt)


def emit_probe_reports(reports, out_dir, fmt="csv"):
    os.makedirs(out_dir, exist_ok=True)
    rows = [[r.manifold, r.name, r.delta, r.samples, r.violations, r.worst_ratio,
             ";".join(f"{k}={v:.17g}" for k, v in r.constants.items())]
            for r in reports]
    return _emit(os.path.join(out_dir, "probe_report"), PROBE_HEADER, rows, fmt)


def read_metrics_json(path):
    """Round-trip loader for the JSON metrics report."""
    with open(path) as fh:
        data = json.load(fh)
    return [MetricsRow(d["experiment"], d["algorithm"], d["n_instances"],
                       d["n_iter_mean"], d["time_mean_s"], d["n_global"],
                       d["n_better"], d["n_worse"], d["n_super"], d["n_fail"])
            for d in data]
