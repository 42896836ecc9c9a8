"""Command-line benchmark runner.

Subcommands:
  simulate   build the true coherency matrix for a scenario file
  sample     emit speckled multilook samples of the scenario matrix
  invert     fit the eight-parameter model to one matrix file
  bench      full Monte Carlo: records, summary stats, histograms, figures
  sweep      volume-power sweep charting accuracy against entropy

All outputs are deterministic for a given command line and input files:
reruns are byte-identical, regardless of --threads. Exit status is 0 on
success, 1 on a validation error (bad scenario, bad matrix, bad flags), and
2 on an I/O error. Partially written outputs are removed on failure.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .assessment import (
    DEFAULT_HISTOGRAM_BINS,
    DEFAULT_N_TRIALS,
    SweepPoint,
    TrialRun,
    collect_series,
    entropy_sweep,
    histogram,
    run_trials,
    summarize,
)
from .inversion import FitOptions, fit
from .model import (
    CoherencyMatrix,
    DihedralSpec,
    Scenario,
    assemble,
    entropy,
    mechanism_powers,
    scenario_to_params,
)
from .speckle import SpeckleConfig, batch_samples

THREADS_ENV_VAR = "POLSAR_MCBENCH_THREADS"

_MATRIX_KEYS = (
    "t11",
    "t22",
    "t33",
    "t12_re",
    "t12_im",
    "t13_re",
    "t13_im",
    "t23_re",
    "t23_im",
)

_DEFAULT_LOOKS = 49


@dataclass(frozen=True)
class RunConfig:
    """Execution settings resolved from a scenario file plus defaults."""

    looks: int = _DEFAULT_LOOKS
    trials: int = DEFAULT_N_TRIALS
    seed: int = 0
    fit: FitOptions = FitOptions()


class ScenarioError(ValueError):
    """Scenario/matrix file failed validation; message carries the key path."""


def _require_number(value, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioError(f"{path}: expected a number, got {value!r}")
    return float(value)


def _require_int(value, path: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ScenarioError(f"{path}: expected an integer, got {value!r}")
    return value


def _reject_unknown(obj: dict, allowed, path: str):
    for key in obj:
        if key not in allowed:
            raise ScenarioError(f"{path}: unknown key '{key}'")


def _parse_alpha(obj, notice_stream) -> complex | DihedralSpec:
    if not isinstance(obj, dict):
        raise ScenarioError("alpha: expected an object")
    keys = set(obj)
    if keys <= {"re", "im"} and "re" in keys:
        return complex(
            _require_number(obj["re"], "alpha.re"),
            _require_number(obj.get("im", 0.0), "alpha.im"),
        )
    if keys <= {"epsilon_trunk", "phase_deg"} and "epsilon_trunk" in keys:
        return DihedralSpec(
            epsilon_trunk=_require_number(obj["epsilon_trunk"], "alpha.epsilon_trunk"),
            phase_deg=_require_number(obj.get("phase_deg", 180.0), "alpha.phase_deg"),
        )
    raise ScenarioError(
        "alpha: expected keys {re, im} or {epsilon_trunk, phase_deg}, "
        f"got {sorted(keys)}"
    )


def _parse_fit(obj) -> FitOptions:
    if not isinstance(obj, dict):
        raise ScenarioError("fit: expected an object")
    allowed = {
        "n_random_starts",
        "max_iterations",
        "cost_tolerance",
        "step_tolerance",
        "start_seed",
        "fix_imag_alpha",
    }
    _reject_unknown(obj, allowed, "fit")
    kwargs = {}
    for key in ("n_random_starts", "max_iterations", "start_seed"):
        if key in obj:
            kwargs[key] = _require_int(obj[key], f"fit.{key}")
    for key in ("cost_tolerance", "step_tolerance"):
        if key in obj:
            kwargs[key] = _require_number(obj[key], f"fit.{key}")
    if "fix_imag_alpha" in obj:
        if not isinstance(obj["fix_imag_alpha"], bool):
            raise ScenarioError("fit.fix_imag_alpha: expected true or false")
        kwargs["fix_imag_alpha"] = obj["fix_imag_alpha"]
    try:
        return FitOptions(**kwargs)
    except ValueError as exc:
        raise ScenarioError(f"fit: {exc}") from exc


def parse_scenario(path: str | Path, notice_stream=None) -> tuple[Scenario, RunConfig]:
    """Load and validate a scenario file; defaults are applied and echoed.

    Raises ScenarioError (a ValueError) with the offending key path on any
    semantic problem; I/O problems propagate as OSError.
    """
    if notice_stream is None:
        notice_stream = sys.stderr
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a JSON object at the top level")
    allowed = {
        "epsilon_soil",
        "theta_deg",
        "psi_d_deg",
        "psi_s_deg",
        "alpha",
        "fractions",
        "span",
        "looks",
        "trials",
        "seed",
        "fit",
    }
    _reject_unknown(raw, allowed, "scenario")
    for key in ("epsilon_soil", "theta_deg", "fractions"):
        if key not in raw:
            raise ScenarioError(f"scenario: missing required key '{key}'")

    fr = raw["fractions"]
    if not isinstance(fr, dict):
        raise ScenarioError("fractions: expected an object")
    _reject_unknown(fr, {"volume", "surface", "double"}, "fractions")
    for key in ("volume", "surface", "double"):
        if key not in fr:
            raise ScenarioError(f"fractions: missing required key '{key}'")
    fractions = tuple(
        _require_number(fr[key], f"fractions.{key}")
        for key in ("volume", "surface", "double")
    )
    if not math.isclose(sum(fractions), 1.0, abs_tol=1e-9):
        raise ScenarioError(
            f"fractions: must sum to 1, got {sum(fractions)!r}"
        )

    if "alpha" in raw:
        alpha_spec = _parse_alpha(raw["alpha"], notice_stream)
    else:
        alpha_spec = None
        print(
            "notice: alpha not specified; defaulting to a ground-trunk dihedral "
            "(epsilon_trunk = epsilon_soil, phase 180 deg)",
            file=notice_stream,
        )

    scenario = Scenario(
        epsilon_soil=_require_number(raw["epsilon_soil"], "epsilon_soil"),
        theta0_deg=_require_number(raw["theta_deg"], "theta_deg"),
        psi_d_deg=_require_number(raw.get("psi_d_deg", 0.0), "psi_d_deg"),
        psi_s_deg=_require_number(raw.get("psi_s_deg", 0.0), "psi_s_deg"),
        power_fractions=fractions,
        alpha_spec=alpha_spec,
        span=_require_number(raw.get("span", 1.0), "span"),
    )
    try:
        scenario_to_params(scenario)  # full physical validation at parse time
    except ValueError as exc:
        raise ScenarioError(str(exc)) from exc

    config = RunConfig(
        looks=_require_int(raw.get("looks", _DEFAULT_LOOKS), "looks"),
        trials=_require_int(raw.get("trials", DEFAULT_N_TRIALS), "trials"),
        seed=_require_int(raw.get("seed", 0), "seed"),
        fit=_parse_fit(raw.get("fit", {})),
    )
    if config.looks < 1:
        raise ScenarioError(f"looks: must be >= 1, got {config.looks}")
    if config.trials < 1:
        raise ScenarioError(f"trials: must be >= 1, got {config.trials}")
    if config.seed < 0:
        raise ScenarioError(f"seed: must be >= 0, got {config.seed}")
    return scenario, config


def parse_matrix(path: str | Path) -> CoherencyMatrix:
    """Load a coherency matrix from its nine-key JSON form."""
    text = Path(path).read_text()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ScenarioError(f"{path}: expected a JSON object")
    _reject_unknown(raw, _MATRIX_KEYS, "matrix")
    for key in _MATRIX_KEYS:
        if key not in raw:
            raise ScenarioError(f"matrix: missing required key '{key}'")
    vals = [_require_number(raw[key], f"matrix.{key}") for key in _MATRIX_KEYS]
    return CoherencyMatrix.from_components(np.asarray(vals))


def matrix_to_dict(t: CoherencyMatrix) -> dict:
    comps = t.components()
    return {key: float(val) for key, val in zip(_MATRIX_KEYS, comps)}


def _fmt(value) -> str:
    """CSV cell: 9 significant digits for floats, plain for ints/bools/strings."""
    if isinstance(value, bool):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, str):
        return value
    return format(float(value), ".9g")


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    lines.extend(",".join(_fmt(cell) for cell in row) for row in rows)
    path.write_text("\n".join(lines) + "\n")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


def _resolve_threads(flag: int | None) -> int:
    if flag is None:
        env = os.environ.get(THREADS_ENV_VAR)
        if env is not None:
            try:
                flag = int(env)
            except ValueError:
                raise ScenarioError(
                    f"{THREADS_ENV_VAR}: expected an integer, got {env!r}"
                ) from None
        else:
            flag = os.cpu_count() or 1
    if flag < 1:
        raise ScenarioError(f"threads: must be >= 1, got {flag}")
    return flag


def _scenario_meta(scenario: Scenario) -> dict:
    alpha = scenario.alpha_spec
    if alpha is None:
        alpha_meta = {
            "epsilon_trunk": scenario.epsilon_soil,
            "phase_deg": 180.0,
            "defaulted": True,
        }
    elif isinstance(alpha, DihedralSpec):
        alpha_meta = {
            "epsilon_trunk": alpha.epsilon_trunk,
            "phase_deg": alpha.phase_deg,
        }
    else:
        alpha_meta = {"re": alpha.real, "im": alpha.imag}
    return {
        "epsilon_soil": scenario.epsilon_soil,
        "theta_deg": scenario.theta0_deg,
        "psi_d_deg": scenario.psi_d_deg,
        "psi_s_deg": scenario.psi_s_deg,
        "alpha": alpha_meta,
        "fractions": {
            "volume": scenario.power_fractions[0],
            "surface": scenario.power_fractions[1],
            "double": scenario.power_fractions[2],
        },
        "span": scenario.span,
    }


def _truth_meta(scenario: Scenario) -> dict:
    params = scenario_to_params(scenario)
    t_true = assemble(params)
    return {
        "params": {
            "f_v": params.f_v,
            "f_d": params.f_d,
            "f_s": params.f_s,
            "alpha_re": params.alpha.real,
            "alpha_im": params.alpha.imag,
            "beta": params.beta,
            "psi_d_deg": math.degrees(params.psi_d),
            "psi_s_deg": math.degrees(params.psi_s),
        },
        "entropy": entropy(t_true),
        "span": t_true.span,
        "matrix": matrix_to_dict(t_true),
    }


def _fit_meta(opts: FitOptions) -> dict:
    return {
        "n_random_starts": opts.n_random_starts,
        "max_iterations": opts.max_iterations,
        "cost_tolerance": opts.cost_tolerance,
        "step_tolerance": opts.step_tolerance,
        "start_seed": opts.start_seed,
        "fix_imag_alpha": opts.fix_imag_alpha,
    }


class _OutputSet:
    """Tracks files written by one command so failures leave no partial runs."""

    def __init__(self):
        self.paths: list[Path] = []
        self.dirs: list[Path] = []

    def add_dir(self, path: Path) -> Path:
        path.mkdir(parents=True, exist_ok=True)
        self.dirs.append(path)
        return path

    def write_csv(self, path: Path, header, rows):
        _write_csv(path, header, rows)
        self.paths.append(path)

    def write_json(self, path: Path, obj):
        _write_json(path, obj)
        self.paths.append(path)

    def note(self, path: Path):
        self.paths.append(path)

    def discard(self):
        for p in self.paths:
            p.unlink(missing_ok=True)
        for d in reversed(self.dirs):
            try:
                d.rmdir()
            except OSError:
                pass


def _records_rows(run: TrialRun) -> list[list]:
    rows = []
    for rec in run:
        p = rec.params
        rows.append(
            [
                rec.trial_index,
                rec.converged,
                rec.cost,
                p.f_v,
                p.f_d,
                p.f_s,
                p.alpha.real,
                p.alpha.imag,
                p.beta,
                math.degrees(p.psi_d),
                math.degrees(p.psi_s),
                100.0 * rec.fractions[0],
                100.0 * rec.fractions[1],
                100.0 * rec.fractions[2],
                rec.span_ratio,
                rec.alpha_identifiable,
                rec.beta_identifiable,
            ]
        )
    return rows


_RECORDS_HEADER = [
    "trial",
    "converged",
    "cost",
    "f_v",
    "f_d",
    "f_s",
    "alpha_re",
    "alpha_im",
    "beta",
    "psi_d_deg",
    "psi_s_deg",
    "p_v_pct",
    "p_s_pct",
    "p_d_pct",
    "span_ratio",
    "alpha_identifiable",
    "beta_identifiable",
]

_SUMMARY_HEADER = [
    "name",
    "unit",
    "truth",
    "mean",
    "std",
    "rel_error_pct",
    "abs_error",
    "error_is_absolute",
    "n_effective",
]


def cmd_simulate(args) -> int:
    scenario, _ = parse_scenario(args.scenario)
    params = scenario_to_params(scenario)
    t_true = assemble(params)
    powers = mechanism_powers(params)
    doc = matrix_to_dict(t_true)
    if args.out:
        _write_json(Path(args.out), doc)
        stream = sys.stdout
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
        stream = sys.stderr
    print(f"entropy: {entropy(t_true):.9g}", file=stream)
    print(f"span: {t_true.span:.9g}", file=stream)
    print(
        f"powers: volume {powers.p_v:.9g}, surface {powers.p_s:.9g}, "
        f"double {powers.p_d:.9g}",
        file=stream,
    )
    return 0


def cmd_sample(args) -> int:
    scenario, config = parse_scenario(args.scenario)
    looks = args.looks if args.looks is not None else config.looks
    seed = args.seed if args.seed is not None else config.seed
    count = args.count
    cfg = SpeckleConfig(n_looks=looks, seed=seed)
    t_true = assemble(scenario_to_params(scenario))
    samples = batch_samples(t_true, count, cfg)
    doc = [matrix_to_dict(s) for s in samples]
    if args.out:
        _write_json(Path(args.out), doc)
    else:
        print(json.dumps(doc, indent=2, sort_keys=True))
    return 0


def cmd_invert(args) -> int:
    t_obs = parse_matrix(args.matrix)
    kwargs = {}
    if args.starts is not None:
        kwargs["n_random_starts"] = args.starts
    if args.start_seed is not None:
        kwargs["start_seed"] = args.start_seed
    if args.fix_imag_alpha:
        kwargs["fix_imag_alpha"] = True
    result = fit(t_obs, FitOptions(**kwargs))
    p = result.params
    powers = mechanism_powers(p)
    if args.json:
        print(
            json.dumps(
                {
                    "params": {
                        "f_v": p.f_v,
                        "f_d": p.f_d,
                        "f_s": p.f_s,
                        "alpha_re": p.alpha.real,
                        "alpha_im": p.alpha.imag,
                        "beta": p.beta,
                        "psi_d_deg": math.degrees(p.psi_d),
                        "psi_s_deg": math.degrees(p.psi_s),
                    },
                    "powers": {
                        "volume": powers.p_v,
                        "surface": powers.p_s,
                        "double": powers.p_d,
                        "span": powers.span,
                    },
                    "cost": result.cost,
                    "converged": result.converged,
                    "n_starts_used": result.n_starts_used,
                    "n_iterations": result.n_iterations,
                    "start_index_of_winner": result.start_index_of_winner,
                },
                indent=2,
                sort_keys=True,
            )
        )
        return 0
    print(f"converged: {result.converged}")
    print(f"cost: {result.cost:.9g}")
    print(f"f_v: {p.f_v:.9g}")
    print(f"f_d: {p.f_d:.9g}")
    print(f"f_s: {p.f_s:.9g}")
    print(f"alpha: {p.alpha.real:.9g} {p.alpha.imag:+.9g}j")
    print(f"beta: {p.beta:.9g}")
    print(f"psi_d_deg: {math.degrees(p.psi_d):.9g}")
    print(f"psi_s_deg: {math.degrees(p.psi_s):.9g}")
    print(
        f"powers: volume {powers.p_v:.9g}, surface {powers.p_s:.9g}, "
        f"double {powers.p_d:.9g}"
    )
    print(
        f"starts: {result.n_starts_used} used, winner {result.start_index_of_winner}, "
        f"{result.n_iterations} residual evaluations"
    )
    return 0


def cmd_bench(args) -> int:
    scenario, config = parse_scenario(args.scenario)
    trials = args.trials if args.trials is not None else config.trials
    looks = args.looks if args.looks is not None else config.looks
    seed = args.seed if args.seed is not None else config.seed
    threads = _resolve_threads(args.threads)
    speckle = SpeckleConfig(n_looks=looks, seed=seed)

    outputs = _OutputSet()
    out_dir = Path(args.out)
    try:
        outputs.add_dir(out_dir)
        hist_dir = outputs.add_dir(out_dir / "histograms")

        run = run_trials(scenario, trials, speckle, config.fit, n_workers=threads)
        stats = summarize(run.records, run.truth)

        meta = {
            "command": "bench",
            "version": __version__,
            "scenario": _scenario_meta(scenario),
            "run": {
                "trials": trials,
                "looks": looks,
                "seed": seed,
                "fit": _fit_meta(config.fit),
                "histogram_bins": args.bins,
            },
            "truth": _truth_meta(scenario),
            "n_converged": sum(1 for r in run if r.converged),
        }
        outputs.write_json(out_dir / "meta.json", meta)
        outputs.write_csv(out_dir / "records.csv", _RECORDS_HEADER, _records_rows(run))
        outputs.write_csv(
            out_dir / "summary.csv",
            _SUMMARY_HEADER,
            [
                [
                    s.name,
                    s.unit,
                    s.truth,
                    s.mean,
                    s.std,
                    s.rel_error_pct,
                    s.abs_error,
                    s.error_is_absolute,
                    s.n_effective,
                ]
                for s in stats
            ],
        )

        values, truths, _ = collect_series(run.records, run.truth)
        for name, vals in values.items():
            if len(vals) == 0:
                continue
            h = histogram(vals, args.bins, name=name, truth=truths[name])
            rows = [
                [left, right, int(count)]
                for left, right, count in zip(h.edges[:-1], h.edges[1:], h.counts)
            ]
            outputs.write_csv(hist_dir / f"{name}.csv", ["bin_left", "bin_right", "count"], rows)
            if not args.no_figures:
                from .figures import histogram_figure

                outputs.note(
                    histogram_figure(
                        h,
                        hist_dir / f"{name}.png",
                        subtitle=f"{trials} trials, {looks} looks",
                    )
                )
    except BaseException:
        outputs.discard()
        raise
    return 0


def _parse_grid(spec: str, scenario: Scenario) -> list[float]:
    if spec == "auto":
        p_d_power = scenario.power_fractions[2] * scenario.span
        if p_d_power <= 0:
            raise ScenarioError(
                "fv-grid auto requires a scenario with nonzero double-bounce power"
            )
        return [float(v) for v in np.linspace(0.0, 9.0 * p_d_power, 20)]
    parts = spec.split(":")
    if len(parts) != 3:
        raise ScenarioError(
            f"fv-grid: expected 'start:stop:step' or 'auto', got {spec!r}"
        )
    try:
        start, stop, step = (float(p) for p in parts)
    except ValueError:
        raise ScenarioError(f"fv-grid: non-numeric component in {spec!r}") from None
    if step <= 0 or stop < start:
        raise ScenarioError(f"fv-grid: need stop >= start and step > 0 in {spec!r}")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [start + k * step for k in range(n)]


def cmd_sweep(args) -> int:
    scenario, config = parse_scenario(args.scenario)
    trials = args.trials if args.trials is not None else config.trials
    looks = args.looks if args.looks is not None else config.looks
    seed = args.seed if args.seed is not None else config.seed
    threads = _resolve_threads(args.threads)
    grid = _parse_grid(args.fv_grid, scenario)
    speckle = SpeckleConfig(n_looks=looks, seed=seed)

    outputs = _OutputSet()
    out_dir = Path(args.out)
    try:
        outputs.add_dir(out_dir)
        points = entropy_sweep(
            scenario, grid, trials, speckle, config.fit, n_workers=threads
        )
        meta = {
            "command": "sweep",
            "version": __version__,
            "scenario": _scenario_meta(scenario),
            "run": {
                "trials": trials,
                "looks": looks,
                "seed": seed,
                "fit": _fit_meta(config.fit),
                "fv_grid": grid,
            },
        }
        outputs.write_json(out_dir / "meta.json", meta)
        outputs.write_csv(
            out_dir / "sweep.csv",
            [
                "f_v",
                "entropy",
                "p_v_truth_pct",
                "p_v_error_pct",
                "p_v_std_pp",
                "p_s_truth_pct",
                "p_s_error_pct",
                "p_s_std_pp",
                "p_d_truth_pct",
                "p_d_error_pct",
                "p_d_std_pp",
            ],
            [_sweep_row(p) for p in points],
        )
        if not args.no_figures:
            from .figures import sweep_figure

            outputs.note(sweep_figure(points, out_dir / "sweep.png"))
    except BaseException:
        outputs.discard()
        raise
    return 0


def _sweep_row(point: SweepPoint) -> list:
    by_name = {s.name: s for s in point.stats}
    return [
        point.f_v,
        point.entropy,
        by_name["p_v_pct"].truth,
        point.p_v_error_pct,
        point.p_v_std_pp,
        by_name["p_s_pct"].truth,
        point.p_s_error_pct,
        point.p_s_std_pp,
        by_name["p_d_pct"].truth,
        point.p_d_error_pct,
        point.p_d_std_pp,
    ]


class _Parser(argparse.ArgumentParser):
    """argparse reports usage problems as validation errors (exit 1)."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog="polsar-mcbench",
        description=(
            "Monte Carlo benchmarking of the eight-parameter polarimetric "
            "decomposition: simulate coherency matrices, speckle them, invert, "
            "and report estimator bias and spread."
        ),
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="emit the true coherency matrix of a scenario")
    p.add_argument("--scenario", required=True, help="scenario JSON file")
    p.add_argument("--out", help="matrix JSON path (default: stdout)")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sample", help="emit speckled multilook samples")
    p.add_argument("--scenario", required=True)
    p.add_argument("--count", type=int, default=1, help="number of samples")
    p.add_argument("--looks", type=int, help="override scenario looks")
    p.add_argument("--seed", type=int, help="override scenario seed")
    p.add_argument("--out", help="samples JSON path (default: stdout)")
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("invert", help="fit the model to one matrix file")
    p.add_argument("--matrix", required=True, help="matrix JSON file")
    p.add_argument("--starts", type=int, help="random multi-start count")
    p.add_argument("--start-seed", type=int, help="seed of the start stream")
    p.add_argument("--fix-imag-alpha", action="store_true")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("bench", help="Monte Carlo benchmark of one scenario")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--trials", type=int)
    p.add_argument("--looks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int, help=f"default: {THREADS_ENV_VAR} or cores")
    p.add_argument("--bins", type=int, default=DEFAULT_HISTOGRAM_BINS)
    p.add_argument("--no-figures", action="store_true", help="skip PNG rendering")
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("sweep", help="volume-power sweep against entropy")
    p.add_argument("--scenario", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--fv-grid", default="auto", help="'start:stop:step' or 'auto'")
    p.add_argument("--trials", type=int)
    p.add_argument("--looks", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--no-figures", action="store_true")
    p.set_defaults(func=cmd_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
