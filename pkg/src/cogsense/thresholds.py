"""Detection-threshold design for both optimization criteria.

Neyman-Pearson thresholds invert the (local or global) false-alarm
constraint exactly. Bayes thresholds use the high-SNR Lambert-W closed
forms; below their validity regime callers fall back to direct unimodal
minimization of the exact error probability (``minimize_unimodal``).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from . import fusion as fus
from . import specfun as sf
from .errors import DomainError, NoSolutionError, NumericError, RegimeError, ValidationError


@dataclass(frozen=True)
class ThresholdDesign:
    """A designed threshold with its drift factor and diversity bookkeeping."""

    lam: float
    drift_theta: float = 1.0
    global_n: int | None = None
    diversity_fa: float = math.nan
    diversity_md: float = math.nan

    def __post_init__(self):
        if not (self.lam > 0.0):
            raise ValidationError(f"threshold must be positive, got {self.lam}")
        if not (self.drift_theta > 0.0):
            raise ValidationError(f"drift factor must be positive, got {self.drift_theta}")

    @property
    def diversity_err(self) -> float:
        return min(self.diversity_fa, self.diversity_md)


def np_threshold_local(m: int, alpha: float) -> float:
    """Threshold with P_F(M, lambda) = alpha."""
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    if m < 1 or int(m) != m:
        raise DomainError(f"M must be a positive integer, got {m}")
    return 2.0 * sf.inv_reg_gamma_upper(float(m), alpha)


def np_threshold_cooperative(cfg: fus.FusionConfig, m: int, alpha: float) -> float:
    """Local threshold making the global false alarm equal alpha.

    Solves the binomial tail for the local rate (monotone bisection), then
    inverts the local false-alarm curve.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError(f"alpha must lie in (0, 1), got {alpha}")
    lo, hi = 0.0, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if fus.global_false_alarm(cfg, mid) < alpha:
            lo = mid
        else:
            hi = mid
    p_local = 0.5 * (lo + hi)
    lam = np_threshold_local(m, p_local)
    # Polish the residual at the global level.
    if abs(fus.global_false_alarm(cfg, sf.reg_gamma_upper(float(m), lam / 2.0)) - alpha) > 1e-9:
        raise NumericError("cooperative threshold inversion did not converge")
    return lam


def bayes_threshold_noncoop(m: int, mean_snr: float, prior_h1: float = 0.5) -> float:
    """High-SNR Bayes-optimal threshold for non-cooperative sensing.

    lambda = mu^(1/(M-1)) exp(-W_{-1}(-mu^(1/(M-1)) / (2(M-1)))) with
    mu = (P(H1)/P(H0)) 2^(M-2) Gamma(M-1) / mean_snr, evaluated through the
    algebraically equivalent -2 (M-1) W_{-1}(.) form. Raises RegimeError
    when the W argument leaves [-1/e, 0) (mean SNR too low).
    """
    if m < 2 or int(m) != m:
        raise DomainError(f"Bayes closed form needs integer M >= 2, got {m}")
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    if not (0.0 < prior_h1 < 1.0):
        raise DomainError(f"prior_h1 must lie in (0, 1), got {prior_h1}")
    ln_mu = (
        math.log(prior_h1 / (1.0 - prior_h1))
        + (m - 2.0) * math.log(2.0)
        + math.lgamma(m - 1.0)
        - math.log(mean_snr)
    )
    arg = -math.exp(ln_mu / (m - 1.0)) / (2.0 * (m - 1.0))
    if arg < -math.exp(-1.0):
        raise RegimeError(
            f"mean SNR {mean_snr} too low for the Lambert-W regime at M={m}; "
            "minimize the exact error probability instead"
        )
    return -2.0 * (m - 1.0) * sf.lambert_w(sf.Branch.LOWER, arg)


def bayes_threshold_noncoop_approx(m: int, mean_snr: float) -> float:
    """Large-SNR logarithmic form of the same threshold (equal priors)."""
    if m < 2 or int(m) != m:
        raise DomainError(f"approximation needs integer M >= 2, got {m}")
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    ln_arg = (
        math.log(m - 1.0)
        + math.log(mean_snr) / (m - 1.0)
        - math.lgamma(m - 1.0) / (m - 1.0)
    )
    if ln_arg <= 0.0:
        raise RegimeError("mean SNR too low for the logarithmic threshold form")
    return 2.0 * (m - 1.0) * ln_arg


def bayes_stationarity_residual(m: int, mean_snr: float, lam: float, prior_h1: float = 0.5) -> float:
    """Residual of the asymptotic stationarity condition at lambda.

    d/d lambda of [P(H0) Q(M, lambda/2) + P(H1) lambda / (2 g (M-1))] with
    the derivative of Q taken as -e^(-lambda/2) lambda^(M-1) / (2^(M-1)
    Gamma(M)); zero exactly at the closed-form threshold.
    """
    p0 = 1.0 - prior_h1
    dpf = -math.exp((m - 1.0) * math.log(lam) - lam / 2.0 - (m - 1.0) * math.log(2.0) - math.lgamma(m))
    return p0 * dpf + prior_h1 / (2.0 * mean_snr * (m - 1.0))


def bayes_threshold_reconfig(m: int, q: int, mean_snr: float) -> float:
    """High-SNR Bayes threshold for reconfigurable-antenna sensing.

    lambda = 2 W0(1 / (2 zeta)) with zeta = 2^(M-1) Gamma(M) / g^min(M,Q).
    Raises RegimeError when the logarithm of the W argument is not > 1.
    """
    if m < 1 or q < 1 or int(m) != m or int(q) != q:
        raise DomainError("M and Q must be positive integers")
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    mq = min(m, q)
    ln_arg = mq * math.log(mean_snr) - m * math.log(2.0) - math.lgamma(m)
    if ln_arg <= 1.0:
        raise RegimeError(
            f"mean SNR {mean_snr} too low for the reconfigurable Lambert-W regime "
            f"at M={m}, Q={q}; minimize the exact error probability instead"
        )
    return 2.0 * sf.lambert_w0_of_log(ln_arg)


def bayes_threshold_reconfig_approx(m: int, q: int, mean_snr: float) -> float:
    """Nested-logarithm form 2 log(A / log A), A = g^min(M,Q) / (2^M Gamma(M))."""
    if m < 1 or q < 1:
        raise DomainError("M and Q must be positive integers")
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    ln_a = min(m, q) * math.log(mean_snr) - m * math.log(2.0) - math.lgamma(m)
    if ln_a <= 1.0:
        raise RegimeError("mean SNR too low for the nested-logarithm threshold form")
    return 2.0 * (ln_a - math.log(ln_a))


def drift_diversity(scheme: str, theta: float, m: int, q: int | None = None) -> float:
    """Error-probability diversity under a drifted threshold theta * lambda_opt.

    Non-cooperative sensing achieves min{theta, 1}; the reconfigurable
    schemes achieve min{theta * min(M, Q), min(M, Q)}.
    """
    if not (theta > 0.0):
        raise DomainError(f"drift factor must be positive, got {theta}")
    key = scheme.lower()
    if key in ("noncoop", "non-coop", "conventional"):
        return min(theta, 1.0)
    if key in ("reconfig", "switching", "selection"):
        if q is None:
            raise ValidationError("reconfigurable diversity needs the state count Q")
        mq = float(min(m, q))
        return min(theta * mq, mq)
    raise ValidationError(f"unknown scheme {scheme!r}")


def coop_bayes_design(n_users: int, known_n: bool) -> tuple[int, float, int]:
    """Bayes-optimal (vote threshold, drift factor, diversity) for N users.

    With N unknown at the users: locally optimal thresholds (theta = 1) and
    majority vote n = floor((N+1)/2), achieving that same diversity. With N
    known: OR rule with theta = N, achieving full diversity N.
    """
    if n_users < 1 or int(n_users) != n_users:
        raise DomainError(f"N must be a positive integer, got {n_users}")
    if known_n:
        return 1, float(n_users), n_users
    n_vote = (n_users + 1) // 2
    return n_vote, 1.0, n_vote


def solve_diversity_balance(d_fa, d_md, bracket: tuple[float, float], rel_tol: float = 1e-8) -> float:
    """Crossing point of a nondecreasing d_F and a nonincreasing d_md.

    Bisection on d_F - d_md over the bracket; raises NoSolutionError when
    the difference does not change sign.
    """
    lo, hi = bracket
    if not (lo < hi):
        raise ValidationError(f"invalid bracket {bracket}")
    f_lo = d_fa(lo) - d_md(lo)
    f_hi = d_fa(hi) - d_md(hi)
    if f_lo == 0.0:
        return lo
    if f_hi == 0.0:
        return hi
    if f_lo * f_hi > 0.0:
        raise NoSolutionError(f"no diversity crossing inside bracket {bracket}")
    for _ in range(400):
        mid = 0.5 * (lo + hi)
        f_mid = d_fa(mid) - d_md(mid)
        if f_mid == 0.0:
            return mid
        if f_lo * f_mid < 0.0:
            hi = mid
        else:
            lo, f_lo = mid, f_mid
        if hi - lo <= rel_tol * max(1.0, abs(hi)):
            break
    return 0.5 * (lo + hi)


def minimize_unimodal(f, lo: float, hi: float, tol: float = 1e-10) -> float:
    """Golden-section minimum of a unimodal f over log-spaced [lo, hi].

    The documented fallback for Bayes designs below the Lambert-W regime.
    """
    if not (0.0 < lo < hi):
        raise ValidationError(f"invalid search interval [{lo}, {hi}]")
    inv_phi = (math.sqrt(5.0) - 1.0) / 2.0
    a, b = math.log(lo), math.log(hi)
    c = b - inv_phi * (b - a)
    d = a + inv_phi * (b - a)
    fc, fd = f(math.exp(c)), f(math.exp(d))
    for _ in range(300):
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - inv_phi * (b - a)
            fc = f(math.exp(c))
        else:
            a, c, fc = c, d, fd
            d = a + inv_phi * (b - a)
            fd = f(math.exp(d))
        if b - a <= tol * max(1.0, abs(b)):
            break
    return math.exp(0.5 * (a + b))
