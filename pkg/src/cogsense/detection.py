"""Single-user energy-detection statistics.

Sampling convention (fixed throughout the toolkit): received samples are
complex with unit noise variance per quadrature component, so the detector
output Y = sum |r_i|^2 over M samples is chi-square with 2M degrees of
freedom under the null and scaled by (1 + snr) per sample under the
alternative. With threshold lambda this gives exactly

    P_F(M, lambda)        = Q(M, lambda / 2)
    P_D(M, lambda, snr)   = Q(M, lambda / (2 (1 + snr)))

with Q the regularized upper incomplete gamma function. This is the only
convention under which the false-alarm form and the Bessel closed form of
the Rayleigh-averaged detection probability hold simultaneously.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from scipy import integrate

from . import specfun as sf
from .errors import DomainError, NumericError, ValidationError


@dataclass(frozen=True)
class SensingModel:
    """Single-user sensing configuration: M samples, mean SNR, priors."""

    m: int
    mean_snr: float = 1.0
    prior_h1: float = 0.5

    def __post_init__(self):
        if self.m < 1 or int(self.m) != self.m:
            raise ValidationError(f"sample count M must be a positive integer, got {self.m}")
        if not (self.mean_snr > 0.0):
            raise ValidationError(f"mean SNR must be positive, got {self.mean_snr}")
        if not (0.0 < self.prior_h1 < 1.0):
            raise ValidationError(f"prior_h1 must lie in (0, 1), got {self.prior_h1}")

    @property
    def prior_h0(self) -> float:
        return 1.0 - self.prior_h1


@dataclass(frozen=True)
class GainProfile:
    """Per-state channel gains and the sample counts assigned to each state."""

    gains: tuple
    alloc: tuple

    def __post_init__(self):
        object.__setattr__(self, "gains", tuple(float(g) for g in self.gains))
        object.__setattr__(self, "alloc", tuple(int(l) for l in self.alloc))
        if len(self.gains) == 0:
            raise ValidationError("gain profile must contain at least one state")
        if len(self.gains) != len(self.alloc):
            raise ValidationError(
                f"gains ({len(self.gains)}) and alloc ({len(self.alloc)}) differ in length"
            )
        if any(g < 0.0 for g in self.gains):
            raise ValidationError("channel gains must be nonnegative")
        if any(l < 0 for l in self.alloc):
            raise ValidationError("sample allocations must be nonnegative")
        if self.total_samples < 1:
            raise ValidationError("gain profile allocates no samples")

    @property
    def total_samples(self) -> int:
        return sum(self.alloc)


@dataclass(frozen=True)
class DetectionMetrics:
    """False alarm, missed detection, and the prior-weighted error they imply."""

    p_fa: float
    p_md: float
    prior_h1: float = 0.5
    p_err: float = field(init=False)

    def __post_init__(self):
        for name, p in (("p_fa", self.p_fa), ("p_md", self.p_md)):
            if not (0.0 <= p <= 1.0):
                raise ValidationError(f"{name} must lie in [0, 1], got {p}")
        object.__setattr__(
            self, "p_err", bayes_error_prob(self.p_fa, self.p_md, self.prior_h1)
        )


def _check_m_lambda(m: int, lam: float) -> None:
    if m < 1 or int(m) != m:
        raise DomainError(f"sample count M must be a positive integer, got {m}")
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f"threshold must be positive and finite, got {lam}")


def false_alarm_prob(m: int, lam: float) -> float:
    """P_F = Q(M, lambda/2): null-hypothesis exceedance of the threshold."""
    _check_m_lambda(m, lam)
    return sf.reg_gamma_upper(float(m), lam / 2.0)


def detection_prob_inst(m: int, lam: float, snr: float) -> float:
    """Detection probability at a fixed instantaneous SNR."""
    _check_m_lambda(m, lam)
    if snr < 0.0:
        raise DomainError(f"instantaneous SNR must be nonnegative, got {snr}")
    return sf.reg_gamma_upper(float(m), lam / (2.0 * (1.0 + snr)))


def avg_detection_prob(m: int, lam: float, mean_snr: float) -> float:
    """Rayleigh-averaged detection probability, Bessel closed form.

    (2 e^{1/g} / Gamma(M)) (lambda / 2g)^{M/2} K_M(sqrt(2 lambda / g)) with
    g the mean SNR. This is a high-SNR reduction of the exact average and
    can marginally exceed 1 at low mean SNR, so the result is clipped to
    [0, 1]; use ``avg_detection_exact`` when exactness matters.
    """
    _check_m_lambda(m, lam)
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    ln_val = (
        math.log(2.0)
        + 1.0 / mean_snr
        - math.lgamma(m)
        + (m / 2.0) * math.log(lam / (2.0 * mean_snr))
        + sf.ln_bessel_k_int(m, math.sqrt(2.0 * lam / mean_snr))
    )
    if ln_val >= 0.0:
        return 1.0
    return math.exp(ln_val)


def avg_md_exact(m: int, lam: float, mean_snr: float) -> float:
    """Exact Rayleigh-averaged missed-detection probability, by quadrature.

    Integrates P(M, lambda / (2 (1 + g))) against the exponential SNR
    density; this is the reference the closed form and the Monte Carlo
    engine are validated against.
    """
    _check_m_lambda(m, lam)
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")

    def integrand(g: float) -> float:
        return (
            sf.reg_gamma_lower(float(m), lam / (2.0 * (1.0 + g)))
            * math.exp(-g / mean_snr)
            / mean_snr
        )

    val, err = integrate.quad(integrand, 0.0, math.inf, epsabs=1e-13, epsrel=1e-11, limit=300)
    if err > 1e-8 + 1e-6 * abs(val):
        raise NumericError(f"averaged missed-detection quadrature error {err:.2e} too large")
    return min(max(val, 0.0), 1.0)


def avg_detection_exact(m: int, lam: float, mean_snr: float) -> float:
    """Exact Rayleigh-averaged detection probability (complement of the above)."""
    return 1.0 - avg_md_exact(m, lam, mean_snr)


def md_asymptote_noncoop(m: int, lam: float, mean_snr: float) -> float:
    """High-SNR missed-detection asymptote lambda / (2 g (M - 1)).

    Diversity order 1 with coding gain (M - 1) / lambda; requires M >= 2.
    """
    if m < 2 or int(m) != m:
        raise DomainError(f"asymptote needs integer M >= 2, got {m}")
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")
    return lam / (2.0 * mean_snr * (m - 1.0))


def noncoop_diversity_coding(m: int, lam: float) -> tuple[float, float]:
    """(diversity order, coding gain) of the non-cooperative NP test."""
    if m < 2:
        raise DomainError(f"coding gain needs M >= 2, got {m}")
    return 1.0, (m - 1.0) / lam


def bayes_error_prob(p_fa: float, p_md: float, prior_h1: float) -> float:
    """Prior-weighted error P(H1) p_md + P(H0) p_fa."""
    for name, p in (("p_fa", p_fa), ("p_md", p_md)):
        if not (0.0 <= p <= 1.0):
            raise DomainError(f"{name} must lie in [0, 1], got {p}")
    if not (0.0 <= prior_h1 <= 1.0):
        raise DomainError(f"prior_h1 must lie in [0, 1], got {prior_h1}")
    return prior_h1 * p_md + (1.0 - prior_h1) * p_fa


def weighted_lrt_statistic(energies, gains) -> float:
    """Optimal weighted energy statistic sum_j gain/(1+gain) * Z_j."""
    energies = list(energies)
    gains = list(gains)
    if len(energies) != len(gains):
        raise ValidationError(
            f"energies ({len(energies)}) and gains ({len(gains)}) differ in length"
        )
    if any(z < 0.0 for z in energies):
        raise DomainError("per-state energies must be nonnegative")
    if any(g < 0.0 for g in gains):
        raise DomainError("gains must be nonnegative")
    return math.fsum(g / (1.0 + g) * z for g, z in zip(gains, energies))


# ---------------------------------------------------------------------------
# Weighted chi-square CDFs


def weighted_chisq_cdf(gains, dofs, y: float) -> float:
    """Exact CDF of sum_j (1 + gain_j) X_j with X_j chi-square(dofs_j).

    Equal-gain blocks are merged, then one block at a time is integrated
    out against the CDF of the remainder (recursive convolution). Exact up
    to quadrature tolerance; used as the analytic core for delayed-selection
    averages and as a test oracle for the min{H, G} approximation.
    """
    gains = [float(g) for g in gains]
    dofs = [int(d) for d in dofs]
    if len(gains) != len(dofs) or not gains:
        raise ValidationError("gains and dofs must be equal-length, nonempty")
    if any(d <= 0 or d % 2 for d in dofs):
        raise ValidationError("degrees of freedom must be positive even integers")
    if any(g < 0.0 for g in gains):
        raise DomainError("gains must be nonnegative")
    if y <= 0.0:
        return 0.0

    merged: dict[float, int] = {}
    for g, d in zip(gains, dofs):
        merged[g] = merged.get(g, 0) + d
    # (shape k, scale theta) of each gamma block, largest scale first so the
    # outermost integration runs over the widest component.
    blocks = sorted(
        ((d // 2, 2.0 * (1.0 + g)) for g, d in merged.items()),
        key=lambda b: -b[1],
    )
    return _gamma_sum_cdf(blocks, y)


def _gamma_sum_cdf(blocks, y: float) -> float:
    if y <= 0.0:
        return 0.0
    shape, theta = blocks[0]
    if len(blocks) == 1:
        return sf.reg_gamma_lower(float(shape), y / theta)
    rest = blocks[1:]
    ln_norm = -math.lgamma(shape) - shape * math.log(theta)

    def integrand(a: float) -> float:
        if a <= 0.0:
            return 0.0
        ln_pdf = ln_norm + (shape - 1.0) * math.log(a) - a / theta
        if ln_pdf < -745.0:
            return 0.0
        return math.exp(ln_pdf) * _gamma_sum_cdf(rest, y - a)

    val, _ = integrate.quad(integrand, 0.0, y, epsabs=1e-12, epsrel=1e-9, limit=200)
    return min(max(val, 0.0), 1.0)


def md_prob_weighted_sum(lam: float, profile: GainProfile) -> float:
    """Missed-detection probability for a multi-state switching pattern.

    Weighted chi-square CDF approximation min{H(w), G(w)} with
    w = lambda / (M + sum l_j gain_j). H carries a halved argument,
    lambda / (2 (Pi (1+gain_j)^{l_j})^{1/M}), so the single-state case
    reproduces the exact CDF P(M, lambda / (2 (1 + gain))); G sums the
    per-sample terms over all 2M degrees of freedom.
    """
    if not (lam > 0.0) or not math.isfinite(lam):
        raise DomainError(f"threshold must be positive and finite, got {lam}")
    m = profile.total_samples
    active = [(g, l) for g, l in zip(profile.gains, profile.alloc) if l > 0]

    w = lam / (m + math.fsum(g * l for g, l in active))
    ln_geo = math.fsum(l * math.log1p(g) for g, l in active) / m
    h_val = sf.reg_gamma_lower(float(m), lam / (2.0 * math.exp(ln_geo)))

    g_val = 0.0
    for g, l in active:
        shape = lam / (2.0 * w * (1.0 + g))
        x = lam / (1.0 + g)
        g_val += 2.0 * l * (w * (1.0 + g) / lam) * sf.reg_gamma_lower(shape, x)

    return min(max(min(h_val, g_val), 0.0), 1.0)
