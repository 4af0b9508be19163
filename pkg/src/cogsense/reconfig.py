"""Reconfigurable-antenna sensing: switching plans, state-selection
statistics, diversity/selection-gain laws, and switching-delay penalties.

Delay semantics follow two documented readings that the toolkit keeps
side by side because no single physical model reproduces both of the
published delay laws at once (see the selection functions below):

* ``during_delay="signal"`` - while the antenna settles, samples carry an
  independent arbitrary-state gain. This is what the Monte Carlo engine
  simulates; it preserves the mean-energy bookkeeping behind the delayed
  selection gain D/M + (1 - D/M) H_Q.
* ``during_delay="blank"`` - the settling samples capture noise energy
  only. This is the effective-window reading behind the delayed diversity
  law max{1, min{M - D, Q}} and is the family the diversity-slope checks
  fit.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy import integrate

from . import specfun as sf
from .detection import weighted_chisq_cdf
from .errors import DomainError, NumericError, ValidationError


@dataclass(frozen=True)
class AntennaConfig:
    """Reconfigurable antenna: Q radiation states, D-sample switching delay."""

    q: int
    d: int = 0

    def __post_init__(self):
        if self.q < 1 or int(self.q) != self.q:
            raise ValidationError(f"state count Q must be a positive integer, got {self.q}")
        if self.d < 0 or int(self.d) != self.d:
            raise ValidationError(f"switching delay D must be a nonnegative integer, got {self.d}")


@dataclass(frozen=True)
class SwitchPlan:
    """Sample allocation across the antenna states used in one sensing window."""

    alloc: tuple

    def __post_init__(self):
        object.__setattr__(self, "alloc", tuple(int(l) for l in self.alloc))
        if not self.alloc:
            raise ValidationError("switch plan must use at least one state")
        if any(l < 1 for l in self.alloc):
            raise ValidationError("every planned state must receive at least one sample")

    @property
    def n_states(self) -> int:
        return len(self.alloc)

    @property
    def total_samples(self) -> int:
        return sum(self.alloc)


def equal_split_plan(m: int, q: int, d: int = 0) -> SwitchPlan:
    """Evenly split M samples over as many states as the delay permits.

    Uses L = min(Q, floor(M / max(1, D)), M) states; the first M mod L
    states receive one extra sample. A delay longer than the window
    degenerates to a single state.
    """
    if m < 1 or int(m) != m:
        raise DomainError(f"sample count M must be a positive integer, got {m}")
    if q < 1 or d < 0:
        raise DomainError("need Q >= 1 and D >= 0")
    l_states = max(1, min(q, m // max(1, d), m))
    base, extra = divmod(m, l_states)
    return SwitchPlan(tuple(base + 1 for _ in range(extra)) + tuple(base for _ in range(l_states - extra)))


def switching_md_asymptote(lam: float, m: int, plan: SwitchPlan, mean_snr: float) -> float:
    """High-SNR averaged missed detection of state switching.

    lambda^M / (Gamma(M+1) g^L prod_j (l_j - 1)) over the L planned states;
    requires every l_j >= 2 (singleton states make the product degenerate).
    """
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")
    if plan.total_samples != m:
        raise ValidationError(
            f"plan allocates {plan.total_samples} samples, expected M={m}"
        )
    if any(l < 2 for l in plan.alloc):
        raise DomainError("asymptote undefined for plans with fewer than 2 samples per state")
    ln_val = (
        m * math.log(lam)
        - math.lgamma(m + 1)
        - plan.n_states * math.log(mean_snr)
        - math.fsum(math.log(l - 1.0) for l in plan.alloc)
    )
    return min(1.0, math.exp(ln_val))


def switching_avg_md_reduced(lam: float, plan: SwitchPlan, mean_snr: float) -> float:
    """Averaged small-CDF reduction of the switching missed detection.

    (lambda/2)^M / Gamma(M+1) * prod_j E[(1+g)^-l_j], with the per-state
    Rayleigh average E[(1+g)^-l] = e^(1/g) E_l(1/g) / g evaluated exactly.
    Halved CDF argument keeps the single-state case consistent with the
    exact reduction; valid where the per-draw CDF is already in its
    small-argument regime (high mean SNR), which is where the diversity
    fits use it.
    """
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")
    m = plan.total_samples
    x = 1.0 / mean_snr
    ln_val = m * math.log(lam / 2.0) - math.lgamma(m + 1)
    for l in plan.alloc:
        ln_val += x + math.log(sf.exp_en(l, x)) - math.log(mean_snr)
    return min(1.0, math.exp(ln_val))


def max_rayleigh_pdf(gamma: float, mean_snr: float, q: int) -> float:
    """Density of the largest of Q i.i.d. exponential(mean_snr) SNR draws."""
    if q < 1 or int(q) != q:
        raise DomainError(f"Q must be a positive integer, got {q}")
    if not (mean_snr > 0.0):
        raise DomainError(f"mean SNR must be positive, got {mean_snr}")
    if gamma < 0.0:
        raise DomainError(f"SNR must be nonnegative, got {gamma}")
    z = gamma / mean_snr
    if q == 1:
        return math.exp(-z) / mean_snr
    return q / mean_snr * math.exp(-z) * (-math.expm1(-z)) ** (q - 1)


def _quad_over_gamma(integrand, mean_snr: float, abs_tol: float = 1e-8):
    val, err = integrate.quad(
        integrand, 0.0, math.inf, epsabs=abs_tol * 1e-2, epsrel=1e-9, limit=300
    )
    if err > abs_tol:
        raise NumericError(f"selection quadrature error {err:.2e} exceeds {abs_tol:.0e}")
    return min(max(val, 0.0), 1.0)


def selection_avg_md(m: int, lam: float, mean_snr: float, q: int) -> float:
    """Averaged missed detection of state selection, exact quadrature.

    Integrates P(M, lambda / (2 (1 + g))) against the exact maximum-of-Q
    density (not its dominant-term approximation).
    """
    if m < 1 or int(m) != m:
        raise DomainError(f"sample count M must be a positive integer, got {m}")
    if not (lam > 0.0):
        raise DomainError(f"threshold must be positive, got {lam}")

    def integrand(g: float) -> float:
        return sf.reg_gamma_lower(float(m), lam / (2.0 * (1.0 + g))) * max_rayleigh_pdf(
            g, mean_snr, q
        )

    return _quad_over_gamma(integrand, mean_snr)


def selection_avg_md_dominant(m: int, lam: float, mean_snr: float, q: int) -> float:
    """Diagnostic variant using the dominant-term maximum density.

    Replaces the exact max-of-Q density with Q g^(Q-1) e^(-g/s) / s^Q, the
    high-SNR dominant term; kept separate for comparisons against the exact
    path.
    """
    if m < 1 or q < 1:
        raise DomainError("need M >= 1 and Q >= 1")
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")

    def integrand(g: float) -> float:
        ln_pdf = (
            math.log(q)
            - q * math.log(mean_snr)
            + (q - 1.0) * (math.log(g) if g > 0.0 else -math.inf)
            - g / mean_snr
        )
        if ln_pdf < -745.0:
            return 0.0
        return sf.reg_gamma_lower(float(m), lam / (2.0 * (1.0 + g))) * math.exp(ln_pdf)

    return _quad_over_gamma(integrand, mean_snr)


def ln_selection_avg_md(m: int, lam: float, mean_snr: float, q: int) -> float:
    """log of the selection miss average, stable deep into the diversity tail.

    Factors the gamma^-Q decay out of the maximum-density average so the
    remaining integral stays order one; the linear-domain quadrature
    underflows once the average drops below its absolute tolerance.
    """
    if m < 1 or q < 1:
        raise DomainError("need M >= 1 and Q >= 1")
    if not (lam > 0.0) or not (mean_snr > 0.0):
        raise DomainError("threshold and mean SNR must be positive")

    def integrand(g: float) -> float:
        # max-density with the gamma^-Q factor and g^(Q-1) shape split off:
        # q e^{-z} ((1 - e^{-z})/z)^{Q-1} with z = g / mean_snr.
        p = sf.reg_gamma_lower(float(m), lam / (2.0 * (1.0 + g)))
        if p == 0.0:
            return 0.0
        z = g / mean_snr
        if z > 0.0:
            ln_env = -z + (q - 1.0) * math.log(-math.expm1(-z) / z)
        else:
            ln_env = 0.0
        if g > 0.0:
            ln_shape = (q - 1.0) * math.log(g)
        elif q == 1:
            ln_shape = 0.0
        else:
            return 0.0
        return p * math.exp(ln_shape + ln_env)

    val, err = integrate.quad(integrand, 0.0, math.inf, epsrel=1e-10, epsabs=0.0, limit=400)
    if val <= 0.0 or err > 1e-6 * val:
        raise NumericError("scaled selection quadrature failed to converge")
    return math.log(q) - q * math.log(mean_snr) + math.log(val)


def ln_selection_avg_md_delayed_blank(
    m: int, lam: float, mean_snr: float, q: int, d: int, nodes: int = 400
) -> float:
    """log of the blank-delay selection miss average (effective-window family).

    Convolves the noise block's chi-square density against the delay-free
    log-average on the remaining window via Gauss-Legendre in log space.
    """
    if d <= 0:
        return ln_selection_avg_md(m, lam, mean_snr, q)
    if d >= m:
        return sf.ln_reg_gamma_lower(float(m), lam / 2.0)
    x, w = np.polynomial.legendre.leggauss(nodes)
    u = 0.5 * lam * (x + 1.0)
    half_w = 0.5 * lam * w
    ln_terms = []
    for ui, wi in zip(u, half_w):
        ln_pdf = -math.lgamma(d) - d * math.log(2.0) + (d - 1.0) * math.log(ui) - ui / 2.0
        ln_tail = ln_selection_avg_md(m - d, lam - ui, mean_snr, q)
        ln_terms.append(math.log(wi) + ln_pdf + ln_tail)
    top = max(ln_terms)
    return top + math.log(math.fsum(math.exp(t - top) for t in ln_terms))


def selection_avg_md_delayed(
    m: int,
    lam: float,
    mean_snr: float,
    q: int,
    d: int,
    during_delay: str = "signal",
) -> float:
    """Averaged missed detection of state selection with switching delay.

    The first D samples are spent before the chosen state takes effect:
    under ``"signal"`` they observe an independent arbitrary state (what
    the simulator does); under ``"blank"`` they collect noise only (the
    effective-window diversity family). D = 0 reduces to
    ``selection_avg_md`` exactly.
    """
    if d < 0 or int(d) != d:
        raise DomainError(f"delay must be a nonnegative integer, got {d}")
    if d > m:
        raise ValidationError(f"delay D={d} exceeds the sensing window M={m}")
    if during_delay not in ("signal", "blank"):
        raise ValidationError(f"unknown delay mode {during_delay!r}")
    if d == 0:
        return selection_avg_md(m, lam, mean_snr, q)
    if d == m:
        if during_delay == "signal":
            # Entire window under one arbitrary state: conventional sensing.
            return _quad_over_gamma(
                lambda g: sf.reg_gamma_lower(float(m), lam / (2.0 * (1.0 + g)))
                * math.exp(-g / mean_snr)
                / mean_snr,
                mean_snr,
            )
        # Entire window is settling noise: the miss rate is the null CDF.
        return sf.reg_gamma_lower(float(m), lam / 2.0)

    # Both delay modes reduce to a single convolution over the delay-block
    # energy u: integral_0^lam h(u) * S(lam - u) du, with S the delay-free
    # selection miss average on the remaining M - D samples and h the
    # delay-block energy density (averaging over the arbitrary gain commutes
    # with the convolution).
    def tail_md(y: float) -> float:
        if y <= 0.0:
            return 0.0
        return selection_avg_md(m - d, y, mean_snr, q)

    ln_norm = -math.lgamma(d)
    if during_delay == "blank":

        def block_pdf(u: float) -> float:
            ln_pdf = ln_norm - d * math.log(2.0) + (d - 1.0) * math.log(u) - u / 2.0
            return math.exp(ln_pdf) if ln_pdf > -745.0 else 0.0

    else:

        def block_pdf(u: float) -> float:
            def over_gain(g: float) -> float:
                scale = 2.0 * (1.0 + g)
                ln_pdf = ln_norm - d * math.log(scale) + (d - 1.0) * math.log(u) - u / scale
                if ln_pdf < -745.0:
                    return 0.0
                return math.exp(ln_pdf) * math.exp(-g / mean_snr) / mean_snr

            val, _ = integrate.quad(
                over_gain, 0.0, math.inf, epsabs=1e-13, epsrel=1e-9, limit=150
            )
            return val

    val, err = integrate.quad(
        lambda u: block_pdf(u) * tail_md(lam - u),
        0.0,
        lam,
        epsabs=1e-10,
        epsrel=1e-8,
        limit=150,
    )
    if err > 1e-6:
        raise NumericError(f"delayed selection quadrature error {err:.2e} too large")
    return min(max(val, 0.0), 1.0)


def scheme_diversity(scheme: str, m: int, q: int, d: int = 0) -> float:
    """Diversity order of the reconfigurable schemes under switching delay.

    Switching: min{Q, M / max(1, D), M}; selection: max{1, min{M - D, Q}}.
    """
    if m < 1 or q < 1 or d < 0:
        raise DomainError("need M >= 1, Q >= 1, D >= 0")
    if d > m:
        raise ValidationError(f"delay D={d} exceeds the sensing window M={m}")
    key = scheme.lower()
    if key == "switching":
        return min(float(q), m / max(1, d), float(m))
    if key == "selection":
        return float(max(1, min(m - d, q)))
    raise ValidationError(f"unknown scheme {scheme!r}")


def selection_gain(q: int, m: int | None = None, d: int = 0) -> tuple[float, float]:
    """(linear, dB) mean-SNR boost of selecting the best of Q states.

    Delay-free gain is the harmonic number H_Q; with a D-sample delay only
    M - D samples enjoy the boost: D/M + (1 - D/M) H_Q.
    """
    if q < 1 or int(q) != q:
        raise DomainError(f"Q must be a positive integer, got {q}")
    if d < 0:
        raise DomainError(f"delay must be nonnegative, got {d}")
    if d > 0 and m is None:
        raise ValidationError("delayed selection gain needs the window length M")
    if m is not None and d > m:
        raise ValidationError(f"delay D={d} exceeds the sensing window M={m}")
    h_q = sf.harmonic(q)
    if d == 0 or m is None:
        linear = h_q
    else:
        frac = d / m
        linear = frac + (1.0 - frac) * h_q
    return linear, 10.0 * math.log10(linear)
