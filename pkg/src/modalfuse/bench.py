"""Benchmark harness: Monte Carlo experiments, RMSE tables, CSV output.

Every run r of an experiment derives three independent random streams
from ``(master_seed, r)``: one for the dataset, one for the initial
particle set, one for the filter itself. Dataset and initial particles
are functions of ``(master_seed, r)`` only -- never of the algorithm --
so all algorithms are evaluated on identical data from identical
starting particles, and cross-algorithm RMSE comparisons are
seed-shared.

Usage from a shell (installed as ``bench``)::

    bench --algorithm dma --scenario 2 --particles 10000 --runs 100 \
          --seed 1 --out results/
    bench table1 --particles 10000 --runs 100 --seed 1 --out results/

Wall-clock time covers filter stepping only, excluding data generation
and I/O.
"""

from __future__ import annotations

import argparse
import csv
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import baselines, dma
from .config import ConfigError, ExperimentConfig, default_config, load_config
from .diagnostics import RunTrace
from .particles import init_particles
from .tracksim import GroundTruthRun, ScenarioSpec, builtin_scenario, generate_run

ALGORITHMS = ("pf", "sma", "ts", "dma")
PRIOR_MODES = ("accurate", "biased")
RMSE_MODES = ("full", "position")

# stream labels for the (master_seed, run, stream) splitting rule
STREAM_DATA = 0
STREAM_INIT = 1
STREAM_FILTER = 2

PRIOR_COV_DIAG = np.array([1.0, 1.0, 10.0, 10.0])
# ~32 sigma of the d_y prior: far outside the initial particle support,
# yet small enough that the bearing stays within ~2 sigma of its noise,
# which keeps recovery by process-noise diffusion feasible
BIAS_OFFSET = np.array([0.0, 0.0, 0.0, 100.0])

# position offsets live in state components 2 and 3
POSITION_SLICE = slice(2, 4)


def stream_rng(master_seed: int, run_index: int, stream: int) -> np.random.Generator:
    """The documented splitting rule: SeedSequence(master_seed, spawn_key=(run, stream))."""
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(run_index, stream)))


@dataclass(frozen=True)
class GaussianPrior:
    """Diagonal-Gaussian prior sampler usable with init_particles."""

    mean: np.ndarray
    cov_diag: np.ndarray

    def __call__(self, n, rng):
        mean = np.asarray(self.mean, dtype=float)
        scale = np.sqrt(np.asarray(self.cov_diag, dtype=float))
        return mean + rng.standard_normal((n, mean.shape[0])) * scale


def init_prior(mode: str, x0_true) -> GaussianPrior:
    """Initial-particle prior: 'accurate' centres on the true initial
    state, 'biased' shifts the mean by BIAS_OFFSET (+100 in d_y); both
    use covariance diag(1, 1, 10, 10)."""
    x0_true = np.asarray(x0_true, dtype=float)
    if mode == "accurate":
        return GaussianPrior(x0_true, PRIOR_COV_DIAG)
    if mode == "biased":
        return GaussianPrior(x0_true + BIAS_OFFSET, PRIOR_COV_DIAG)
    raise ValueError(f"unknown prior mode {mode!r}")


def per_step_error(estimates, truth, mode: str = "full") -> np.ndarray:
    """Euclidean error per step, over the full state or position only."""
    estimates = np.asarray(estimates, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if estimates.shape != truth.shape:
        raise ValueError("estimate and truth trajectories must have equal shapes")
    diff = estimates - truth
    if mode == "position":
        diff = diff[:, POSITION_SLICE]
    elif mode != "full":
        raise ValueError(f"unknown rmse mode {mode!r}")
    return np.sqrt(np.sum(diff * diff, axis=1))


def rmse(estimates, truth, mode: str = "full") -> float:
    """Root mean squared Euclidean error over a trajectory."""
    err = per_step_error(estimates, truth, mode)
    return float(np.sqrt(np.mean(err * err)))


def run_filter(algorithm: str, frames, particles0, transition, models, rng):
    """Step one filter over all frames; returns (estimates, trace)."""
    n = len(models)
    trace = RunTrace()
    estimates = np.empty((len(frames), particles0.dim))
    if algorithm == "pf":
        state = particles0
        for k, frame in enumerate(frames):
            state, estimates[k] = baselines.pf_step(state, frame, transition, models, rng, trace=trace)
    elif algorithm == "sma":
        state = baselines.init_sma(particles0, n)
        for k, frame in enumerate(frames):
            state, estimates[k] = baselines.sma_step(state, frame, transition, models, rng, trace=trace)
    elif algorithm == "ts":
        state = baselines.init_ts(particles0, n)
        for k, frame in enumerate(frames):
            state, estimates[k] = baselines.ts_step(state, frame, transition, models, rng, trace=trace)
    elif algorithm == "dma":
        state = dma.init_dma(particles0, n)
        for k, frame in enumerate(frames):
            state, estimates[k], _ = dma.dma_step(state, frame, transition, models, rng, trace=trace)
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    return estimates, trace


@dataclass
class RunResult:
    """Outcome of one filter run on one generated dataset."""

    algorithm: str
    scenario: str
    run_index: int
    rmse: float
    per_step_error: np.ndarray          # (T,)
    wall_time_seconds: float
    estimates: np.ndarray               # (T, d)
    weight_trace: np.ndarray | None     # (T, M) candidate posteriors or (T, n) alphas
    n_flagged_steps: int


@dataclass
class ExperimentSummary:
    algorithm: str
    scenario: str
    n_particles: int
    runs: int
    mean_rmse: float
    var_rmse: float
    mean_time: float
    var_time: float


@dataclass
class ExperimentResult:
    summary: ExperimentSummary
    results: list[RunResult]


def make_dataset(spec: ScenarioSpec, cfg: ExperimentConfig, master_seed: int, run_index: int) -> GroundTruthRun:
    """The dataset for run r -- a function of (master_seed, r) only."""
    rng = stream_rng(master_seed, run_index, STREAM_DATA)
    return generate_run(spec, cfg.x0, cfg.truth_transition(), cfg.model.modalities, rng)


def _single_run(algorithm, spec, cfg, n_particles, master_seed, run_index, prior_mode, rmse_mode):
    dataset = make_dataset(spec, cfg, master_seed, run_index)
    prior = init_prior(prior_mode, cfg.x0)
    particles0 = init_particles(prior, n_particles, stream_rng(master_seed, run_index, STREAM_INIT))
    filter_rng = stream_rng(master_seed, run_index, STREAM_FILTER)
    start = time.perf_counter()
    estimates, trace = run_filter(
        algorithm, dataset.frames, particles0, cfg.model.transition, cfg.model.modalities, filter_rng
    )
    elapsed = time.perf_counter() - start
    err = per_step_error(estimates, dataset.states, rmse_mode)
    return RunResult(
        algorithm=algorithm,
        scenario=_scenario_id(spec),
        run_index=run_index,
        rmse=float(np.sqrt(np.mean(err * err))),
        per_step_error=err,
        wall_time_seconds=elapsed,
        estimates=estimates,
        weight_trace=trace.weight_matrix(),
        n_flagged_steps=trace.n_flagged,
    )


def _scenario_id(spec: ScenarioSpec) -> str:
    return spec.label


def _resolve_scenario(scenario, cfg: ExperimentConfig) -> ScenarioSpec:
    if cfg.scenario is not None:
        return cfg.scenario
    if isinstance(scenario, ScenarioSpec):
        return scenario
    spec = builtin_scenario(int(scenario))
    if spec.horizon != cfg.horizon:
        spec = ScenarioSpec(cfg.horizon, spec.failure_windows, spec.loss_windows, spec.label)
    return spec


def run_experiment(
    algorithm: str,
    scenario,
    n_particles: int,
    runs: int,
    master_seed: int,
    prior: str = "accurate",
    rmse_mode: str = "full",
    config: ExperimentConfig | None = None,
    jobs: int = 1,
) -> ExperimentResult:
    """Monte Carlo batch of one algorithm on one scenario.

    ``scenario`` is a built-in index (1-4) or a ScenarioSpec. Runs may
    execute in parallel (``jobs``); results are reduced in run order, so
    the output is independent of the schedule. Degenerate steps inside a
    run are flagged and counted, never fatal.
    """
    if algorithm not in ALGORITHMS:
        raise ValueError(f"unknown algorithm {algorithm!r}")
    if n_particles < 1 or runs < 1:
        raise ValueError("particles and runs must be >= 1")
    if prior not in PRIOR_MODES:
        raise ValueError(f"unknown prior mode {prior!r}")
    if rmse_mode not in RMSE_MODES:
        raise ValueError(f"unknown rmse mode {rmse_mode!r}")
    cfg = config or default_config()
    spec = _resolve_scenario(scenario, cfg)
    args = [
        (algorithm, spec, cfg, n_particles, master_seed, r, prior, rmse_mode)
        for r in range(runs)
    ]
    if jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_single_run_star, args))
    else:
        results = [_single_run(*a) for a in args]
    results.sort(key=lambda r: r.run_index)
    rmses = np.array([r.rmse for r in results])
    times = np.array([r.wall_time_seconds for r in results])
    summary = ExperimentSummary(
        algorithm=algorithm,
        scenario=_scenario_id(spec),
        n_particles=n_particles,
        runs=runs,
        mean_rmse=float(rmses.mean()),
        var_rmse=float(rmses.var(ddof=1)) if runs > 1 else 0.0,
        mean_time=float(times.mean()),
        var_time=float(times.var(ddof=1)) if runs > 1 else 0.0,
    )
    return ExperimentResult(summary=summary, results=results)


def _single_run_star(args):
    return _single_run(*args)


# ---------------------------------------------------------------------------
# CSV output / input
# ---------------------------------------------------------------------------

def _fmt(x) -> str:
    return repr(float(x))


def _weight_header(algorithm: str, k: int) -> list[str]:
    if algorithm == "dma":
        n = int(np.log2(k))
        return ["pi_" + dma.candidate_label(bits) for bits in dma.enumerate_candidates(n)]
    return [f"alpha_{i}" for i in range(k)]


def write_summary(path, summaries: list[ExperimentSummary]) -> None:
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["algorithm", "scenario", "particles", "runs",
                    "mean_rmse", "var_rmse", "mean_time", "var_time"])
        for s in summaries:
            w.writerow([s.algorithm, s.scenario, s.n_particles, s.runs,
                        _fmt(s.mean_rmse), _fmt(s.var_rmse), _fmt(s.mean_time), _fmt(s.var_time)])


def write_experiment(outdir, experiment: ExperimentResult, datasets=None, per_run_files: bool = True) -> None:
    """Emit runs.csv plus per-run trajectory/weights/dataset files.

    ``datasets`` maps run index to GroundTruthRun; pass it to get
    trajectory and replay files (the harness regenerates datasets from
    seeds, so they are optional here).
    """
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    with open(outdir / "runs.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["algorithm", "scenario", "run", "rmse", "wall_time_seconds", "n_flagged_steps"])
        for r in experiment.results:
            w.writerow([r.algorithm, r.scenario, r.run_index, _fmt(r.rmse),
                        _fmt(r.wall_time_seconds), r.n_flagged_steps])
    if not per_run_files:
        return
    for r in experiment.results:
        if r.weight_trace is not None:
            with open(outdir / f"weights_{r.run_index}.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["t"] + _weight_header(r.algorithm, r.weight_trace.shape[1]))
                for k, row in enumerate(r.weight_trace):
                    w.writerow([k + 1] + [_fmt(v) for v in row])
        if datasets is not None and r.run_index in datasets:
            ds = datasets[r.run_index]
            with open(outdir / f"trajectory_{r.run_index}.csv", "w", newline="") as f:
                w = csv.writer(f)
                dim = ds.states.shape[1]
                w.writerow(["t"] + [f"truth_{i}" for i in range(dim)]
                           + [f"est_{i}" for i in range(dim)] + ["err"])
                for k in range(ds.horizon):
                    w.writerow([k + 1]
                               + [_fmt(v) for v in ds.states[k]]
                               + [_fmt(v) for v in r.estimates[k]]
                               + [_fmt(r.per_step_error[k])])
            ds.save(outdir / f"dataset_{r.run_index}.ndjson")


def read_runs(outdir) -> list[RunResult]:
    """Rebuild RunResults from an output directory written by write_experiment."""
    outdir = Path(outdir)
    out = []
    with open(outdir / "runs.csv", newline="") as f:
        for row in csv.DictReader(f):
            ri = int(row["run"])
            weight_trace = None
            wpath = outdir / f"weights_{ri}.csv"
            if wpath.exists():
                with open(wpath, newline="") as wf:
                    rows = list(csv.reader(wf))[1:]
                weight_trace = np.array([[float(v) for v in r[1:]] for r in rows])
            estimates = None
            err = None
            tpath = outdir / f"trajectory_{ri}.csv"
            if tpath.exists():
                with open(tpath, newline="") as tf:
                    rows = list(csv.reader(tf))[1:]
                dim = (len(rows[0]) - 2) // 2
                estimates = np.array([[float(v) for v in r[1 + dim:1 + 2 * dim]] for r in rows])
                err = np.array([float(r[-1]) for r in rows])
            out.append(RunResult(
                algorithm=row["algorithm"],
                scenario=row["scenario"],
                run_index=ri,
                rmse=float(row["rmse"]),
                per_step_error=err,
                wall_time_seconds=float(row["wall_time_seconds"]),
                estimates=estimates,
                weight_trace=weight_trace,
                n_flagged_steps=int(row["n_flagged_steps"]),
            ))
    return out


# ---------------------------------------------------------------------------
# Table-style grid over all algorithms and scenarios
# ---------------------------------------------------------------------------

TABLE_ALGORITHMS = ("pf", "ts", "sma", "dma")


def run_table1(n_particles, runs, master_seed, config=None, rmse_mode="full",
               jobs=1, scenarios=(1, 2, 3, 4), progress=None):
    """All algorithms x all scenarios; returns {(algorithm, scenario): ExperimentResult}."""
    grid = {}
    for k in scenarios:
        for algorithm in TABLE_ALGORITHMS:
            grid[(algorithm, k)] = run_experiment(
                algorithm, k, n_particles, runs, master_seed,
                rmse_mode=rmse_mode, config=config, jobs=jobs,
            )
            if progress is not None:
                progress(algorithm, k, grid[(algorithm, k)].summary)
    return grid


def format_table1(grid, scenarios=(1, 2, 3, 4)) -> str:
    """Text grid: mean RMSE (variance) per scenario, then averages and timing."""
    lines = []
    header = f"{'':<34}" + "".join(f"{a.upper():>22}" for a in TABLE_ALGORITHMS)
    lines.append(header)
    mean_by_alg = {a: [] for a in TABLE_ALGORITHMS}
    for k in scenarios:
        cells = []
        for a in TABLE_ALGORITHMS:
            s = grid[(a, k)].summary
            mean_by_alg[a].append(s.mean_rmse)
            cells.append(f"{s.mean_rmse:.2f} ({s.var_rmse:.3f})")
        lines.append(f"{'Scenario ' + str(k):<34}" + "".join(f"{c:>22}" for c in cells))
    avg_cells = [f"{np.mean(mean_by_alg[a]):.2f}" for a in TABLE_ALGORITHMS]
    lines.append(f"{'averaged over scenarios':<34}" + "".join(f"{c:>22}" for c in avg_cells))
    time_cells = []
    for a in TABLE_ALGORITHMS:
        ts = [grid[(a, k)].summary.mean_time for k in scenarios]
        time_cells.append(f"{np.mean(ts):.3f}")
    lines.append(f"{'computing time per run (s)':<34}" + "".join(f"{c:>22}" for c in time_cells))
    return "\n".join(lines)


def write_table1(outdir, grid) -> None:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    write_summary(outdir / "summary.csv", [e.summary for e in grid.values()])
    with open(outdir / "table1.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["scenario", "algorithm", "mean_rmse", "var_rmse", "mean_time", "var_time"])
        for (a, k), e in grid.items():
            s = e.summary
            w.writerow([k, a, _fmt(s.mean_rmse), _fmt(s.var_rmse), _fmt(s.mean_time), _fmt(s.var_time)])


# ---------------------------------------------------------------------------
# CLI
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bench",
        description="Monte Carlo benchmark for multi-modal fusion filters.",
    )
    parser.add_argument("command", nargs="?", default="run", choices=("run", "table1"),
                        help="'run' (default): one algorithm on one scenario; "
                             "'table1': all algorithms on all four scenarios")
    parser.add_argument("--algorithm", choices=ALGORITHMS, help="filter to benchmark")
    parser.add_argument("--scenario", type=int, choices=(1, 2, 3, 4), help="built-in scenario")
    parser.add_argument("--particles", type=int, default=10000, help="particle count N")
    parser.add_argument("--runs", type=int, default=100, help="independent Monte Carlo runs")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--prior", choices=PRIOR_MODES, default="accurate",
                        help="initial-particle prior placement")
    parser.add_argument("--rmse", choices=RMSE_MODES, default="full",
                        help="error over the full state or position only")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--config", help="key-value config file (model/simulation/scenario)")
    parser.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
        outdir = Path(args.out)
        outdir.mkdir(parents=True, exist_ok=True)
        if args.command == "table1":
            if cfg.scenario is not None:
                print("error: table1 runs the four built-in scenarios; "
                      "remove the [scenario] config section", file=sys.stderr)
                return 2

            def progress(a, k, s):
                print(f"scenario {k} {a:>4}: mean RMSE {s.mean_rmse:10.3f}  "
                      f"mean time {s.mean_time:8.3f}s", flush=True)
            grid = run_table1(args.particles, args.runs, args.seed, config=cfg,
                              rmse_mode=args.rmse, jobs=args.jobs, progress=progress)
            write_table1(outdir, grid)
            print(format_table1(grid))
            return 0
        if args.algorithm is None or (args.scenario is None and cfg.scenario is None):
            print("error: --algorithm and --scenario are required "
                  "(a [scenario] config section replaces --scenario)", file=sys.stderr)
            return 2
        experiment = run_experiment(
            args.algorithm, args.scenario if args.scenario is not None else cfg.scenario,
            args.particles, args.runs, args.seed,
            prior=args.prior, rmse_mode=args.rmse, config=cfg, jobs=args.jobs,
        )
        spec = _resolve_scenario(args.scenario, cfg) if cfg.scenario is None else cfg.scenario
        datasets = {r: make_dataset(spec, cfg, args.seed, r) for r in range(args.runs)}
        write_summary(outdir / "summary.csv", [experiment.summary])
        write_experiment(outdir, experiment, datasets=datasets)
        s = experiment.summary
        print(f"{s.algorithm} scenario {s.scenario}: mean RMSE {s.mean_rmse:.3f} "
              f"(var {s.var_rmse:.3f}), mean time {s.mean_time:.3f}s over {s.runs} runs")
        return 0
    except (ConfigError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
