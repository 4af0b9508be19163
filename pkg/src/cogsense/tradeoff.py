"""Sensing-throughput trade-off and secondary-link ergodic capacity.

Throughput uses the standard frame split: M of K samples sense, the rest
transmit, and the normalized rate is (1 - M/K)(1 - P_F) with the detection
probability pinned to the protection target by choice of threshold.
Capacities are in nats (natural log); ratios are base-independent.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import reconfig as rc
from . import specfun as sf
from .detection import avg_md_exact, false_alarm_prob
from .errors import DomainError, NumericError, ValidationError

LN2 = math.log(2.0)


@dataclass(frozen=True)
class FrameConfig:
    """Frame structure and link parameters for the throughput analysis."""

    k: int
    m: int
    q_t: int = 1
    q_r: int = 1
    d: int = 0
    sensing_mean_snr: float = 1.0
    link_mean_snr: float = 10.0
    prior_h0: float = 0.8
    target_pd: float = 0.9

    def __post_init__(self):
        if self.k < 2 or int(self.k) != self.k:
            raise ValidationError(f"frame length K must be an integer >= 2, got {self.k}")
        if not (1 <= self.m < self.k):
            raise ValidationError(f"sensing samples M must satisfy 1 <= M < K, got {self.m}")
        if self.q_t < 1 or self.q_r < 1:
            raise ValidationError("antenna state counts must be positive")
        if self.d < 0 or self.d > self.k - self.m:
            raise ValidationError(f"delay must satisfy 0 <= D <= K - M, got {self.d}")
        if not (0.0 < self.prior_h0 < 1.0):
            raise ValidationError(f"prior_h0 must lie in (0, 1), got {self.prior_h0}")
        if not (0.0 < self.target_pd < 1.0):
            raise ValidationError(f"target_pd must lie in (0, 1), got {self.target_pd}")
        if not (self.sensing_mean_snr > 0.0) or not (self.link_mean_snr > 0.0):
            raise ValidationError("mean SNRs must be positive")


@dataclass(frozen=True)
class ThroughputScan:
    """Result of scanning the sensing length: optimum plus the full curve."""

    m_star: int
    r_star: float
    m_values: tuple
    r_values: tuple
    thresholds: tuple
    p_fa_values: tuple


def normalized_throughput(k: int, m: int, p_fa: float) -> float:
    """(1 - M/K)(1 - P_F): transmit fraction times channel-use probability."""
    if k < 1 or int(k) != k:
        raise ValidationError(f"frame length K must be a positive integer, got {k}")
    if m < 0 or m >= k:
        raise ValidationError(f"need 0 <= M < K, got M={m}, K={k}")
    if not (0.0 <= p_fa <= 1.0):
        raise DomainError(f"false alarm probability must lie in [0, 1], got {p_fa}")
    return (1.0 - m / k) * (1.0 - p_fa)


def throughput_two_term(
    k: int, m: int, c0: float, c1: float, prior_h0: float, p_fa: float, p_md: float
) -> float:
    """Unapproximated two-term frame throughput (read-only reference form).

    (1 - M/K) [C0 P(H0) (1 - P_F) + C1 P(H1) P_md].
    """
    if m < 0 or m >= k:
        raise ValidationError(f"need 0 <= M < K, got M={m}, K={k}")
    return (1.0 - m / k) * (
        c0 * prior_h0 * (1.0 - p_fa) + c1 * (1.0 - prior_h0) * p_md
    )


def _avg_detection(scheme: str, m: int, lam: float, mean_snr: float, q_t: int, d: int) -> float:
    # Sensing-phase switching delay wastes the settling samples outright
    # ("blank"): they carry noise energy but no primary signal. This is the
    # reading under which delay strictly degrades the throughput optimum;
    # the signal-bearing reading would let the settling block act as an
    # extra diversity branch and can invert the delay ordering.
    if scheme == "conventional":
        return 1.0 - avg_md_exact(m, lam, mean_snr)
    if scheme == "selection":
        d_eff = min(d, m)
        return 1.0 - rc.selection_avg_md_delayed(m, lam, mean_snr, q_t, d_eff, "blank")
    raise ValidationError(f"unknown throughput scheme {scheme!r}")


def solve_threshold_for_pd(
    scheme: str, m: int, mean_snr: float, target_pd: float, q_t: int = 1, d: int = 0
) -> float:
    """Threshold making the scheme's average detection equal target_pd.

    Average detection decreases monotonically in the threshold, so a
    doubling bracket plus bisection converges unconditionally.
    """
    if not (0.0 < target_pd < 1.0):
        raise DomainError(f"target_pd must lie in (0, 1), got {target_pd}")
    hi = 1.0
    for _ in range(80):
        if _avg_detection(scheme, m, hi, mean_snr, q_t, d) < target_pd:
            break
        hi *= 2.0
    else:
        raise NumericError("detection-probability bracket expansion failed")
    lo = 0.0
    for _ in range(90):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if _avg_detection(scheme, m, mid, mean_snr, q_t, d) > target_pd:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def optimal_sensing_samples(cfg: FrameConfig, scheme: str) -> ThroughputScan:
    """Scan M = 1..K-1 holding average detection at target_pd; maximize R.

    The scan asserts unimodality of the resulting normalized-throughput
    sequence (at most one sign change of its discrete difference).
    """
    m_values, r_values, lams, pfas = [], [], [], []
    for m in range(1, cfg.k):
        lam = solve_threshold_for_pd(
            scheme, m, cfg.sensing_mean_snr, cfg.target_pd, cfg.q_t, cfg.d
        )
        p_fa = false_alarm_prob(m, lam) if lam > 0.0 else 1.0
        m_values.append(m)
        lams.append(lam)
        pfas.append(p_fa)
        r_values.append(normalized_throughput(cfg.k, m, p_fa))

    diffs = [b - a for a, b in zip(r_values, r_values[1:]) if b != a]
    signs = [d > 0 for d in diffs]
    flips = sum(1 for a, b in zip(signs, signs[1:]) if a != b)
    if flips > 1:
        raise NumericError(
            f"normalized throughput scan is not unimodal for {scheme} (flips={flips})"
        )
    best = max(range(len(r_values)), key=r_values.__getitem__)
    return ThroughputScan(
        m_star=m_values[best],
        r_star=r_values[best],
        m_values=tuple(m_values),
        r_values=tuple(r_values),
        thresholds=tuple(lams),
        p_fa_values=tuple(pfas),
    )


def throughput_gain(cfg: FrameConfig) -> float:
    """Normalized throughput gain of state selection over conventional.

    (1 - M_opt/(K H_QT)) / (1 - M_opt/K) * (1 - P_Fs) / (1 - P_Fc), with
    M_opt the conventional optimum and P_Fs evaluated at the selection
    scheme's equality threshold for its reduced sample count.
    """
    conv = optimal_sensing_samples(cfg, "conventional")
    if cfg.q_t == 1:
        return 1.0
    h_qt = sf.harmonic(cfg.q_t)
    m_opt = conv.m_star
    p_fc = conv.p_fa_values[m_opt - 1]
    m_sel = max(1, round(m_opt / h_qt))
    lam_s = solve_threshold_for_pd(
        "selection", m_sel, cfg.sensing_mean_snr, cfg.target_pd, cfg.q_t, cfg.d
    )
    p_fs = false_alarm_prob(m_sel, lam_s)
    return (1.0 - m_opt / (cfg.k * h_qt)) / (1.0 - m_opt / cfg.k) * (1.0 - p_fs) / (1.0 - p_fc)


# ---------------------------------------------------------------------------
# Ergodic capacity


def ergodic_capacity_conventional(link_mean_snr: float) -> float:
    """E[ln(1 + g)] for exponential g: e^(1/s) E1(1/s), in nats."""
    if not (link_mean_snr > 0.0):
        raise DomainError(f"link mean SNR must be positive, got {link_mean_snr}")
    return sf.exp_e1_scaled(1.0 / link_mean_snr)


def ergodic_capacity_selection(q_t: int, q_r: int, link_mean_snr: float) -> float:
    """Ergodic capacity of joint transmit/receive state selection, nats.

    n = Q_T Q_R combined states: n sum_i C(n-1, i) (-1)^i/(i+1)
    e^((i+1)/s) E1((i+1)/s), evaluated with exact compensated summation.
    The alternating sum loses roughly n/4 digits, so state products above
    64 are refused rather than silently degraded.
    """
    if q_t < 1 or q_r < 1 or int(q_t) != q_t or int(q_r) != q_r:
        raise DomainError("state counts must be positive integers")
    if not (link_mean_snr > 0.0):
        raise DomainError(f"link mean SNR must be positive, got {link_mean_snr}")
    n = q_t * q_r
    if n > 64:
        raise DomainError(
            f"{n} combined states: alternating-sum cancellation exceeds double precision"
        )
    if n == 1:
        return ergodic_capacity_conventional(link_mean_snr)
    terms = [
        math.comb(n - 1, i)
        * ((-1.0) ** i / (i + 1.0))
        * sf.exp_e1_scaled((i + 1.0) / link_mean_snr)
        for i in range(n)
    ]
    return n * math.fsum(terms)


def ergodic_capacity_delayed(
    q_t: int, q_r: int, link_mean_snr: float, k: int, m: int, d: int
) -> float:
    """Average capacity when D of the K - M transmit samples still use the
    sensing state: a convex mix of conventional and selection capacities."""
    if m < 0 or k <= m:
        raise ValidationError(f"need 0 <= M < K, got M={m}, K={k}")
    if d < 0 or d > k - m:
        raise ValidationError(f"delay must satisfy 0 <= D <= K - M, got {d}")
    frac = d / (k - m)
    return frac * ergodic_capacity_conventional(link_mean_snr) + (
        1.0 - frac
    ) * ergodic_capacity_selection(q_t, q_r, link_mean_snr)


def nats_to_bits(nats: float) -> float:
    return nats / LN2
