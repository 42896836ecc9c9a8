"""Monte Carlo assessment of the inversion.

Runs the simulate -> speckle -> invert loop over many trials, aggregates
per-parameter bias, standard deviation and histograms against the known truth,
and sweeps the volume coefficient to chart estimation quality as a function of
scene entropy.

Angle statistics respect the pi/2-with-sign-flip orientation symmetry: each
record's (shape, angle) pair is aligned to the truth representative before
aggregation, so estimates hugging the canonical-cell boundary do not split
into two spurious modes. Fractions are reported in percent (error %, spread in
percentage points), angles in degrees; power coefficients stay linear.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .inversion import FitOptions, fit
from .model import (
    CoherencyMatrix,
    ModelParams,
    Scenario,
    assemble,
    entropy,
    mechanism_powers,
    scenario_to_params,
)
from .speckle import SpeckleConfig, cholesky_hermitian, multilook_sample, substream

IDENTIFIABILITY_FLOOR = 1e-6
"""A mechanism with fitted f below this fraction of the observed span has
arbitrary shape/angle values; they are masked out of the statistics."""

_TINY_TRUTH = 1e-9  # below this, relative error degenerates to absolute

DEFAULT_N_TRIALS = 1000
DEFAULT_HISTOGRAM_BINS = 50

_HALF_CELL = math.pi / 4


@dataclass(frozen=True)
class TrialRecord:
    """One inverted speckle realization."""

    trial_index: int
    params: ModelParams
    fractions: tuple[float, float, float]  # (P_v, P_s, P_d) over the fitted span
    cost: float
    converged: bool
    alpha_identifiable: bool
    beta_identifiable: bool
    span_ratio: float  # fitted model span / observed sample span


@dataclass(frozen=True)
class ParamStats:
    """Bias/spread summary for one parameter.

    rel_error_pct is 100*|mean - truth|/|truth| unless |truth| < 1e-9 in the
    reporting units, in which case it holds the absolute error instead and
    error_is_absolute is set. Fractions are reported in percent, so std is in
    percentage points; angles are degrees.
    """

    name: str
    unit: str
    truth: float
    mean: float
    std: float
    rel_error_pct: float
    abs_error: float
    error_is_absolute: bool
    n_effective: int


@dataclass(frozen=True)
class Histogram:
    """Uniform-bin histogram with out-of-range bookkeeping."""

    name: str
    edges: np.ndarray
    counts: np.ndarray
    underflow: int
    overflow: int
    truth: float | None = None


@dataclass(frozen=True)
class SweepPoint:
    """One volume-coefficient step of the entropy sweep."""

    f_v: float
    entropy: float
    p_v_error_pct: float
    p_v_std_pp: float
    p_s_error_pct: float
    p_s_std_pp: float
    p_d_error_pct: float
    p_d_std_pp: float
    stats: tuple[ParamStats, ...]


@dataclass(frozen=True)
class TrialRun:
    """Sequence of TrialRecord plus the run's ground truth and configuration."""

    records: tuple[TrialRecord, ...]
    truth: ModelParams
    t_true: CoherencyMatrix
    entropy_true: float
    truth_fractions: tuple[float, float, float]
    speckle: SpeckleConfig
    fit_options: FitOptions

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def __getitem__(self, i):
        return self.records[i]


def _one_trial(
    l_factor: np.ndarray,
    cfg: SpeckleConfig,
    trial_index: int,
    fit_opts: FitOptions,
) -> TrialRecord:
    rng = substream(cfg.seed, cfg.stream_id + trial_index)
    sample = multilook_sample(l_factor, cfg, rng)
    result = fit(sample, fit_opts)
    p = result.params
    mp = mechanism_powers(p)
    span_obs = sample.span
    floor = IDENTIFIABILITY_FLOOR * span_obs
    fitted_span = mp.span
    return TrialRecord(
        trial_index=trial_index,
        params=p,
        fractions=mp.fractions if fitted_span > 0 else (0.0, 0.0, 0.0),
        cost=result.cost,
        converged=result.converged,
        alpha_identifiable=p.f_d >= floor,
        beta_identifiable=p.f_s >= floor,
        span_ratio=fitted_span / span_obs if span_obs > 0 else float("nan"),
    )


def _trial_chunk(args) -> list[TrialRecord]:
    t_comps, cfg, fit_opts, lo, hi = args
    t_true = CoherencyMatrix.from_components(np.asarray(t_comps))
    l_factor = cholesky_hermitian(t_true)
    return [_one_trial(l_factor, cfg, i, fit_opts) for i in range(lo, hi)]


def _monte_carlo(
    t_true: CoherencyMatrix,
    n_trials: int,
    cfg: SpeckleConfig,
    fit_opts: FitOptions,
    n_workers: int,
) -> tuple[TrialRecord, ...]:
    if n_trials < 1:
        raise ValueError(f"n_trials must be >= 1, got {n_trials}")
    if n_workers > 1 and n_trials > 1:
        import multiprocessing

        workers = min(n_workers, n_trials)
        bounds = np.linspace(0, n_trials, workers + 1).astype(int)
        jobs = [
            (tuple(t_true.components()), cfg, fit_opts, int(lo), int(hi))
            for lo, hi in zip(bounds[:-1], bounds[1:])
            if hi > lo
        ]
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            chunks = list(pool.map(_trial_chunk, jobs))
        records = [rec for chunk in chunks for rec in chunk]
    else:
        l_factor = cholesky_hermitian(t_true)
        records = [_one_trial(l_factor, cfg, i, fit_opts) for i in range(n_trials)]
    records.sort(key=lambda r: r.trial_index)  # aggregation by index, not schedule
    return tuple(records)


def run_trials(
    scenario: Scenario,
    n_trials: int,
    speckle: SpeckleConfig,
    fit_opts: FitOptions,
    *,
    n_workers: int = 1,
) -> TrialRun:
    """Full Monte Carlo for one scenario: simulate, speckle, invert, record."""
    truth = scenario_to_params(scenario)
    t_true = assemble(truth)
    records = _monte_carlo(t_true, n_trials, speckle, fit_opts, n_workers)
    return TrialRun(
        records=records,
        truth=truth,
        t_true=t_true,
        entropy_true=entropy(t_true),
        truth_fractions=mechanism_powers(truth).fractions,
        speckle=speckle,
        fit_options=fit_opts,
    )


def _align_to_truth(
    est_angle: float, est_shape, truth_angle: float
) -> tuple[float, complex | float]:
    """Move an estimate to the truth's side of the pi/2 orientation symmetry."""
    delta = est_angle - truth_angle
    if delta > _HALF_CELL:
        return est_angle - 2.0 * _HALF_CELL, -est_shape
    if delta < -_HALF_CELL:
        return est_angle + 2.0 * _HALF_CELL, -est_shape
    return est_angle, est_shape


def collect_series(records, truth: ModelParams) -> tuple[dict, dict, dict]:
    """Aligned per-parameter estimate series from converged records.

    Returns (values, truths, units) keyed by parameter name. Non-converged
    trials are skipped entirely; shape/angle parameters additionally honor the
    per-record identifiability mask. Fractions are in percent, angles degrees.
    """
    truth_mp = mechanism_powers(truth)
    tf = truth_mp.fractions
    names_units = {
        "f_v": "power",
        "f_d": "power",
        "f_s": "power",
        "alpha_re": "1",
        "alpha_im": "1",
        "beta": "1",
        "psi_d_deg": "deg",
        "psi_s_deg": "deg",
        "p_v_pct": "percent",
        "p_s_pct": "percent",
        "p_d_pct": "percent",
    }
    truths = {
        "f_v": truth.f_v,
        "f_d": truth.f_d,
        "f_s": truth.f_s,
        "alpha_re": truth.alpha.real,
        "alpha_im": truth.alpha.imag,
        "beta": truth.beta,
        "psi_d_deg": math.degrees(truth.psi_d),
        "psi_s_deg": math.degrees(truth.psi_s),
        "p_v_pct": 100.0 * tf[0],
        "p_s_pct": 100.0 * tf[1],
        "p_d_pct": 100.0 * tf[2],
    }
    values: dict[str, list] = {name: [] for name in names_units}
    # canonical order: statistics are identical no matter how the caller
    # shuffled or merged the records
    for rec in sorted(records, key=lambda r: r.trial_index):
        if not rec.converged:
            continue
        p = rec.params
        values["f_v"].append(p.f_v)
        values["f_d"].append(p.f_d)
        values["f_s"].append(p.f_s)
        values["p_v_pct"].append(100.0 * rec.fractions[0])
        values["p_s_pct"].append(100.0 * rec.fractions[1])
        values["p_d_pct"].append(100.0 * rec.fractions[2])
        if rec.alpha_identifiable:
            psi_d, alpha = _align_to_truth(p.psi_d, p.alpha, truth.psi_d)
            values["alpha_re"].append(alpha.real)
            values["alpha_im"].append(alpha.imag)
            values["psi_d_deg"].append(math.degrees(psi_d))
        if rec.beta_identifiable:
            psi_s, beta = _align_to_truth(p.psi_s, p.beta, truth.psi_s)
            values["beta"].append(beta)
            values["psi_s_deg"].append(math.degrees(psi_s))
    arrays = {k: np.asarray(v, dtype=float) for k, v in values.items()}
    return arrays, truths, names_units


def summarize(records, truth: ModelParams) -> list[ParamStats]:
    """Per-parameter bias and spread over the converged, identifiable trials.

    Sample standard deviation uses the n-1 denominator. Needs at least two
    effective records overall.
    """
    values, truths, units = collect_series(records, truth)
    n_conv = sum(1 for r in records if r.converged)
    if n_conv < 2:
        raise ValueError(
            f"need at least 2 converged records to summarize, got {n_conv}"
        )
    out = []
    for name, vals in values.items():
        t = truths[name]
        n_eff = len(vals)
        if n_eff == 0:
            out.append(
                ParamStats(
                    name=name,
                    unit=units[name],
                    truth=t,
                    mean=float("nan"),
                    std=float("nan"),
                    rel_error_pct=float("nan"),
                    abs_error=float("nan"),
                    error_is_absolute=False,
                    n_effective=0,
                )
            )
            continue
        mean = float(vals.mean())
        std = float(vals.std(ddof=1)) if n_eff > 1 else 0.0
        abs_err = abs(mean - t)
        absolute = abs(t) < _TINY_TRUTH
        rel = abs_err if absolute else 100.0 * abs_err / abs(t)
        out.append(
            ParamStats(
                name=name,
                unit=units[name],
                truth=t,
                mean=mean,
                std=std,
                rel_error_pct=rel,
                abs_error=abs_err,
                error_is_absolute=absolute,
                n_effective=n_eff,
            )
        )
    return out


def histogram(values, n_bins: int, value_range=None, *, name: str = "", truth: float | None = None) -> Histogram:
    """Uniform-bin histogram; a degenerate range is widened by +/-0.5.

    Counts inside the bins plus underflow and overflow always equal the number
    of input values.
    """
    vals = np.asarray(list(values), dtype=float)
    if vals.size == 0:
        raise ValueError("histogram needs at least one value")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    if value_range is None:
        lo, hi = float(vals.min()), float(vals.max())
    else:
        lo, hi = float(value_range[0]), float(value_range[1])
    if hi <= lo:
        lo, hi = lo - 0.5, hi + 0.5
    edges = np.linspace(lo, hi, n_bins + 1)
    underflow = int((vals < lo).sum())
    overflow = int((vals > hi).sum())
    inside = vals[(vals >= lo) & (vals <= hi)]
    counts, _ = np.histogram(inside, bins=edges)
    return Histogram(
        name=name,
        edges=edges,
        counts=counts,
        underflow=underflow,
        overflow=overflow,
        truth=truth,
    )


def entropy_sweep(
    base: Scenario,
    f_v_grid,
    n_trials: int,
    speckle: SpeckleConfig,
    fit_opts: FitOptions,
    *,
    n_workers: int = 1,
) -> list[SweepPoint]:
    """Entropy-sweep experiment: fixed double bounce, volume power swept up.

    The base scenario must have zero surface fraction; each grid value replaces
    f_v while keeping the double-bounce coefficients fixed, and every point
    runs its own Monte Carlo on disjoint RNG substreams.
    """
    grid = [float(v) for v in f_v_grid]
    if not grid:
        raise ValueError("f_v grid must be nonempty")
    if any(b <= a for a, b in zip(grid, grid[1:])):
        raise ValueError("f_v grid must be strictly increasing")
    if grid[0] < 0:
        raise ValueError("f_v grid values must be nonnegative")
    if base.power_fractions[1] != 0.0:
        raise ValueError(
            f"sweep base scenario must have zero surface fraction, "
            f"got {base.power_fractions[1]}"
        )
    p_base = scenario_to_params(base)
    points = []
    for j, f_v in enumerate(grid):
        params = replace(p_base, f_v=f_v)
        t_true = assemble(params)
        h = entropy(t_true)
        cfg = replace(speckle, stream_id=speckle.stream_id + j * n_trials)
        records = _monte_carlo(t_true, n_trials, cfg, fit_opts, n_workers)
        stats = summarize(records, params)
        by_name = {s.name: s for s in stats}
        points.append(
            SweepPoint(
                f_v=f_v,
                entropy=h,
                p_v_error_pct=by_name["p_v_pct"].rel_error_pct,
                p_v_std_pp=by_name["p_v_pct"].std,
                p_s_error_pct=by_name["p_s_pct"].rel_error_pct,
                p_s_std_pp=by_name["p_s_pct"].std,
                p_d_error_pct=by_name["p_d_pct"].rel_error_pct,
                p_d_std_pp=by_name["p_d_pct"].std,
                stats=tuple(stats),
            )
        )
    return points
