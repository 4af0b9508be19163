"""Cooperative n-out-of-N hard-decision fusion.

Global probabilities are binomial tails of the local ones; they are
evaluated in log space so deep tails (N up to 64, local probabilities far
below underflow when raised to powers) remain exact in the log domain.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import DomainError, ValidationError


@dataclass(frozen=True)
class FusionConfig:
    """N cooperating users with an n-out-of-N voting rule at the fusion center."""

    n_users: int
    vote_threshold: int

    def __post_init__(self):
        if self.n_users < 1 or int(self.n_users) != self.n_users:
            raise ValidationError(f"N must be a positive integer, got {self.n_users}")
        if not (1 <= self.vote_threshold <= self.n_users):
            raise ValidationError(
                f"vote threshold must lie in [1, N={self.n_users}], got {self.vote_threshold}"
            )


def _check_prob(name: str, p: float) -> None:
    if not (0.0 <= p <= 1.0):
        raise DomainError(f"{name} must lie in [0, 1], got {p}")


def ln_binomial_tail(n: int, k_min: int, ln_p: float, ln_q: float) -> float:
    """log sum_{l=k_min}^{n} C(n,l) p^l q^(n-l), from log p and log(1-p)."""
    if k_min > n:
        return -math.inf
    terms = []
    for l in range(k_min, n + 1):
        terms.append(math.lgamma(n + 1) - math.lgamma(l + 1) - math.lgamma(n - l + 1)
                     + l * ln_p + (n - l) * ln_q)
    top = max(terms)
    if top == -math.inf:
        return -math.inf
    return top + math.log(math.fsum(math.exp(t - top) for t in terms))


def _binomial_tail(n: int, k_min: int, p: float) -> float:
    if p <= 0.0:
        return 1.0 if k_min <= 0 else 0.0
    if p >= 1.0:
        return 1.0
    val = math.exp(ln_binomial_tail(n, k_min, math.log(p), math.log1p(-p)))
    return min(max(val, 0.0), 1.0)


def global_false_alarm(cfg: FusionConfig, p_f_local: float) -> float:
    """Probability that at least n of N users raise a false alarm."""
    _check_prob("local false alarm", p_f_local)
    return _binomial_tail(cfg.n_users, cfg.vote_threshold, p_f_local)


def global_detection(cfg: FusionConfig, p_d_local: float) -> float:
    """Probability that at least n of N users detect the primary."""
    _check_prob("local detection", p_d_local)
    return _binomial_tail(cfg.n_users, cfg.vote_threshold, p_d_local)


def global_missed_detection(cfg: FusionConfig, p_md_local: float) -> float:
    """Complement of global detection expressed through the local miss rate."""
    _check_prob("local missed detection", p_md_local)
    return 1.0 - _binomial_tail(cfg.n_users, cfg.vote_threshold, 1.0 - p_md_local)


def ln_global_missed_detection(cfg: FusionConfig, ln_p_md_local: float) -> float:
    """log global missed detection from log local miss rate (deep-tail safe).

    Uses the identity P_md,G = sum_{l=0}^{n-1} C(N,l) p_md^(N-l) (1-p_md)^l,
    i.e. the lower voting tail counted in misses.
    """
    n, k = cfg.n_users, cfg.vote_threshold
    ln_q = math.log1p(-math.exp(ln_p_md_local)) if ln_p_md_local > -690.0 else 0.0
    # at least N-n+1 misses
    return ln_binomial_tail(n, n - k + 1, ln_p_md_local, ln_q)


def global_md_asymptote(
    cfg: FusionConfig, m: int, lam: float, mean_snr: float
) -> tuple[float, float, float]:
    """High-SNR global missed-detection asymptote with its diversity/coding.

    Returns (value, diversity order N-n+1, coding gain
    C(N, n-1)^(-1/(N-n+1)) (M-1)/lambda).
    """
    if m < 2 or int(m) != m:
        raise DomainError(f"asymptote needs integer M >= 2, got {m}")
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")
    n, k = cfg.n_users, cfg.vote_threshold
    d = n - k + 1
    comb = math.comb(n, k - 1)
    local = lam / (2.0 * mean_snr * (m - 1.0))
    value = comb * local**d
    coding = comb ** (-1.0 / d) * (m - 1.0) / lam
    return value, float(d), coding


def global_fa_approx(cfg: FusionConfig, m: int, lam: float) -> float:
    """Large-threshold global false-alarm approximation.

    C(N,n) (lambda^(M-1) / (2^(M-1) Gamma(M)))^n e^(-lambda n / 2); the
    dominant term of the local false-alarm series raised to the voting
    threshold. Meaningful for lambda well above 2M.
    """
    if m < 1 or int(m) != m:
        raise DomainError(f"M must be a positive integer, got {m}")
    if not (lam > 0.0):
        raise DomainError(f"threshold must be positive, got {lam}")
    n, k = cfg.n_users, cfg.vote_threshold
    ln_local = (m - 1.0) * math.log(lam) - (m - 1.0) * math.log(2.0) - math.lgamma(m)
    ln_val = math.log(math.comb(n, k)) + k * ln_local - lam * k / 2.0
    return math.exp(ln_val)
