"""Seedable, parallel Monte Carlo engine for all four detector schemes.

Determinism contract: every (grid-point index, trial block) pair owns an
independent counter-based substream (Philox keyed through a SeedSequence
spawn key), blocks tally integer counts, and integer merges are exact and
order-free, so a result depends only on (seed, spec) and never on thread
count or scheduling. ``COGSENSE_THREADS`` caps worker threads.

Energy sampling: the default draws each chi-square energy literally as a
sum of squared standard normals (two per complex sample); the ``"gamma"``
fast path draws the identically distributed Gamma(shape=M, scale=2)
variate directly and is validated against the literal path in the tests.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import fusion as fus
from . import reconfig as rc
from . import thresholds as th
from .detection import SensingModel, avg_md_exact, bayes_error_prob, false_alarm_prob
from .errors import EstimationError, ValidationError
from .fusion import FusionConfig
from .reconfig import AntennaConfig

_BLOCK = 1 << 16
_LOW_COUNT = 10

SCHEMES = ("noncoop", "cooperative", "switching", "selection")


@dataclass(frozen=True)
class Criterion:
    """Threshold policy: NP with a false-alarm level, or Bayes with a drift."""

    kind: str
    alpha: float | None = None
    theta: float = 1.0

    def __post_init__(self):
        if self.kind not in ("np", "bayes"):
            raise ValidationError(f"criterion kind must be 'np' or 'bayes', got {self.kind!r}")
        if self.kind == "np":
            if self.alpha is None or not (0.0 < self.alpha < 1.0):
                raise ValidationError(f"NP criterion needs alpha in (0, 1), got {self.alpha}")
        elif not (self.theta > 0.0):
            raise ValidationError(f"Bayes criterion needs theta > 0, got {self.theta}")


@dataclass(frozen=True)
class ExperimentSpec:
    """One scheme, one SNR grid, one seed: everything a run depends on."""

    scheme: str
    model: SensingModel
    criterion: Criterion
    snr_grid_db: tuple
    trials: int
    seed: int
    fusion: FusionConfig | None = None
    antenna: AntennaConfig | None = None
    energy_sampler: str = "normals"

    def __post_init__(self):
        if self.scheme not in SCHEMES:
            raise ValidationError(f"unknown scheme {self.scheme!r}; expected one of {SCHEMES}")
        grid = tuple(float(s) for s in self.snr_grid_db)
        object.__setattr__(self, "snr_grid_db", grid)
        if not grid:
            raise ValidationError("SNR grid must be nonempty")
        if any(b <= a for a, b in zip(grid, grid[1:])):
            raise ValidationError("SNR grid must be strictly increasing")
        if self.trials < 1 or int(self.trials) != self.trials:
            raise ValidationError(f"trials must be a positive integer, got {self.trials}")
        if not (0 <= int(self.seed) < 2**64):
            raise ValidationError("seed must fit in 64 bits")
        if self.scheme == "cooperative" and self.fusion is None:
            raise ValidationError("cooperative scheme needs a fusion config")
        if self.scheme in ("switching", "selection") and self.antenna is None:
            raise ValidationError(f"{self.scheme} scheme needs an antenna config")
        if self.energy_sampler not in ("normals", "gamma"):
            raise ValidationError(f"unknown energy sampler {self.energy_sampler!r}")


@dataclass(frozen=True)
class CurvePoint:
    snr_db: float
    threshold: float
    p_fa: float
    p_md: float
    p_err: float
    ci_halfwidth: float
    trials_used: int
    flags: tuple = ()


@dataclass(frozen=True)
class CurveResult:
    spec: ExperimentSpec
    points: tuple

    @property
    def snr_db(self) -> np.ndarray:
        return np.array([p.snr_db for p in self.points])

    def metric(self, name: str) -> np.ndarray:
        return np.array([getattr(p, name) for p in self.points])


def _round6(x: float) -> float:
    """Quantize to the CSV's 6 significant digits, keeping NaN."""
    if not math.isfinite(x):
        return x
    return float(f"{x:.5e}")


def _threads() -> int:
    env = os.environ.get("COGSENSE_THREADS", "")
    if env.strip():
        try:
            n = int(env)
        except ValueError as exc:
            raise ValidationError(f"COGSENSE_THREADS must be an integer, got {env!r}") from exc
        if n < 1:
            raise ValidationError("COGSENSE_THREADS must be >= 1")
        return n
    return min(8, os.cpu_count() or 1)


def _chisq(rng: np.random.Generator, m: int, n: int, sampler: str) -> np.ndarray:
    """Energy of m complex noise samples: chi-square with 2m DoF."""
    if sampler == "gamma":
        return rng.gamma(float(m), 2.0, n)
    out = np.zeros(n)
    for _ in range(2 * m):
        v = rng.standard_normal(n)
        out += v * v
    return out


def _design_threshold(spec: ExperimentSpec, mean_snr: float) -> float:
    m = spec.model.m
    crit = spec.criterion
    if crit.kind == "np":
        if spec.scheme == "cooperative":
            return th.np_threshold_cooperative(spec.fusion, m, crit.alpha)
        return th.np_threshold_local(m, crit.alpha)

    prior = spec.model.prior_h1
    if spec.scheme in ("noncoop", "cooperative"):
        try:
            lam_opt = th.bayes_threshold_noncoop(m, mean_snr, prior)
        except Exception:
            lam_opt = th.minimize_unimodal(
                lambda lam: bayes_error_prob(
                    false_alarm_prob(m, lam), avg_md_exact(m, lam, mean_snr), prior
                ),
                0.2,
                40.0 * m + 200.0,
            )
        return crit.theta * lam_opt

    q = spec.antenna.q
    try:
        lam_opt = th.bayes_threshold_reconfig(m, q, mean_snr)
    except Exception:
        objective_q = q if spec.scheme == "selection" else 1
        lam_opt = th.minimize_unimodal(
            lambda lam: bayes_error_prob(
                false_alarm_prob(m, lam),
                rc.selection_avg_md(m, lam, mean_snr, objective_q),
                prior,
            ),
            0.2,
            40.0 * m + 200.0,
        )
    return crit.theta * lam_opt


def _simulate_block(
    spec: ExperimentSpec, point_idx: int, block_idx: int, n: int, mean_snr: float, lam: float
) -> tuple[int, int]:
    """(false alarms, missed detections) among n trials of one substream."""
    seq = np.random.SeedSequence(entropy=int(spec.seed), spawn_key=(point_idx, block_idx))
    rng = np.random.Generator(np.random.Philox(seq))
    m = spec.model.m
    sampler = spec.energy_sampler

    if spec.scheme == "noncoop":
        y0 = _chisq(rng, m, n, sampler)
        gains = rng.exponential(mean_snr, n)
        y1 = (1.0 + gains) * _chisq(rng, m, n, sampler)
        return int((y0 > lam).sum()), int((y1 <= lam).sum())

    if spec.scheme == "cooperative":
        votes0 = np.zeros(n, dtype=np.int64)
        votes1 = np.zeros(n, dtype=np.int64)
        for _ in range(spec.fusion.n_users):
            votes0 += _chisq(rng, m, n, sampler) > lam
            gains = rng.exponential(mean_snr, n)
            votes1 += (1.0 + gains) * _chisq(rng, m, n, sampler) > lam
        k = spec.fusion.vote_threshold
        return int((votes0 >= k).sum()), int((votes1 < k).sum())

    if spec.scheme == "switching":
        plan = rc.equal_split_plan(m, spec.antenna.q, spec.antenna.d)
        y0 = _chisq(rng, m, n, sampler)
        y1 = np.zeros(n)
        for l_j in plan.alloc:
            gains = rng.exponential(mean_snr, n)
            y1 += (1.0 + gains) * _chisq(rng, l_j, n, sampler)
        return int((y0 > lam).sum()), int((y1 <= lam).sum())

    # selection: strongest of Q states, settling delay under an independent
    # arbitrary state.
    q, d = spec.antenna.q, spec.antenna.d
    y0 = _chisq(rng, m, n, sampler)
    g_max = -mean_snr * np.log1p(-rng.random(n) ** (1.0 / q))
    d_eff = min(d, m)
    if d_eff > 0:
        g_arb = rng.exponential(mean_snr, n)
        y1 = (1.0 + g_arb) * _chisq(rng, d_eff, n, sampler)
        if d_eff < m:
            y1 += (1.0 + g_max) * _chisq(rng, m - d_eff, n, sampler)
    else:
        y1 = (1.0 + g_max) * _chisq(rng, m, n, sampler)
    return int((y0 > lam).sum()), int((y1 <= lam).sum())


def simulate_curve(spec: ExperimentSpec) -> CurveResult:
    """Run the experiment over its SNR grid; deterministic in (seed, spec)."""
    jobs = []
    thresholds = []
    for point_idx, snr_db in enumerate(spec.snr_grid_db):
        mean_snr = 10.0 ** (snr_db / 10.0)
        lam = _design_threshold(spec, mean_snr)
        thresholds.append(lam)
        offset = 0
        block_idx = 0
        while offset < spec.trials:
            n = min(_BLOCK, spec.trials - offset)
            jobs.append((point_idx, block_idx, n, mean_snr, lam))
            offset += n
            block_idx += 1

    results: dict[tuple[int, int], tuple[int, int]] = {}
    workers = _threads()
    if workers == 1 or len(jobs) == 1:
        for point_idx, block_idx, n, mean_snr, lam in jobs:
            results[(point_idx, block_idx)] = _simulate_block(
                spec, point_idx, block_idx, n, mean_snr, lam
            )
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futures = {
                pool.submit(_simulate_block, spec, p, b, n, g, lam): (p, b)
                for p, b, n, g, lam in jobs
            }
            for fut, key in futures.items():
                results[key] = fut.result()

    points = []
    prior1 = spec.model.prior_h1
    for point_idx, snr_db in enumerate(spec.snr_grid_db):
        n_fa = sum(v[0] for (p, _), v in results.items() if p == point_idx)
        n_md = sum(v[1] for (p, _), v in results.items() if p == point_idx)
        n = spec.trials
        flags = []
        p_fa = n_fa / n
        p_md = n_md / n
        ci_fa = 1.96 * math.sqrt(max(p_fa * (1.0 - p_fa), 0.0) / n)
        ci_md = 1.96 * math.sqrt(max(p_md * (1.0 - p_md), 0.0) / n)
        if 0 < n_fa < _LOW_COUNT:
            flags.append("low_fa_count")
            p_fa = math.nan
        if 0 < n_md < _LOW_COUNT:
            flags.append("low_md_count")
            p_md = math.nan
        p_err = (
            prior1 * p_md + (1.0 - prior1) * p_fa
            if math.isfinite(p_fa) and math.isfinite(p_md)
            else math.nan
        )
        points.append(
            CurvePoint(
                snr_db=float(snr_db),
                threshold=thresholds[point_idx],
                p_fa=_round6(p_fa),
                p_md=_round6(p_md),
                p_err=_round6(p_err),
                ci_halfwidth=_round6(max(ci_fa, ci_md)),
                trials_used=n,
                flags=tuple(flags),
            )
        )
    return CurveResult(spec=spec, points=tuple(points))


def slope_loglog(snr_db, probs, window_db: tuple[float, float]) -> float:
    """Least-squares slope of -log10 p against log10 mean-SNR in a window."""
    lo, hi = window_db
    xs, ys = [], []
    for s, p in zip(snr_db, probs):
        if lo <= s <= hi and p is not None and math.isfinite(p) and p > 0.0:
            xs.append(s / 10.0)
            ys.append(-math.log10(p))
    if len(xs) < 3:
        raise EstimationError(
            f"diversity fit needs >= 3 positive points in [{lo}, {hi}] dB; "
            f"got {len(xs)} (raise trials or widen the window)"
        )
    return float(np.polyfit(xs, ys, 1)[0])


def diversity_slope(curve: CurveResult, window_db: tuple[float, float], metric: str = "p_md") -> float:
    """Diversity estimate from a simulated curve's chosen metric."""
    return slope_loglog(curve.snr_db, curve.metric(metric), window_db)


def crossover_snr(curve_a, curve_b, metric: str = "p_md"):
    """First SNR (dB) where the two curves' log-metric difference changes sign.

    Accepts CurveResults or (snr_db, values) pairs on identical grids;
    returns None when there is no strict sign change.
    """
    snr_a, val_a = _as_series(curve_a, metric)
    snr_b, val_b = _as_series(curve_b, metric)
    if len(snr_a) != len(snr_b) or any(abs(a - b) > 1e-9 for a, b in zip(snr_a, snr_b)):
        raise ValidationError("crossover requires a common SNR grid")
    diffs = []
    for s, pa, pb in zip(snr_a, val_a, val_b):
        if math.isfinite(pa) and math.isfinite(pb) and pa > 0.0 and pb > 0.0:
            diffs.append((s, math.log(pa) - math.log(pb)))
    for (s0, d0), (s1, d1) in zip(diffs, diffs[1:]):
        if d0 == 0.0 or d1 == 0.0:
            continue
        if (d0 > 0.0) != (d1 > 0.0):
            return s0 + (s1 - s0) * (-d0) / (d1 - d0)
    return None


def _as_series(curve, metric: str):
    if isinstance(curve, CurveResult):
        return list(curve.snr_db), list(curve.metric(metric))
    snr, vals = curve
    return list(snr), list(vals)
