"""n-out-of-N fusion: vote arithmetic, enumeration oracle, asymptotes."""

import itertools
import math

import numpy as np
import pytest

from cogsense import detection as det
from cogsense import fusion as fus
from cogsense import specfun as sf
from cogsense.errors import DomainError, ValidationError


class TestConfig:
    def test_validation(self):
        fus.FusionConfig(10, 1)
        with pytest.raises(ValidationError):
            fus.FusionConfig(0, 1)
        with pytest.raises(ValidationError):
            fus.FusionConfig(5, 6)
        with pytest.raises(ValidationError):
            fus.FusionConfig(5, 0)


class TestGlobalFalseAlarm:
    def test_or_rule(self):
        cfg = fus.FusionConfig(2, 1)
        assert fus.global_false_alarm(cfg, 0.1) == pytest.approx(0.19, abs=1e-14)

    def test_and_rule(self):
        cfg = fus.FusionConfig(4, 4)
        assert fus.global_false_alarm(cfg, 0.3) == pytest.approx(0.3**4, rel=1e-12)

    def test_enumeration_oracle(self):
        # Brute force over all 2^10 vote patterns.
        n, k, p = 10, 4, 0.3
        total = 0.0
        for votes in itertools.product((0, 1), repeat=n):
            if sum(votes) >= k:
                total += p ** sum(votes) * (1 - p) ** (n - sum(votes))
        cfg = fus.FusionConfig(n, k)
        assert fus.global_false_alarm(cfg, p) == pytest.approx(total, rel=1e-12)


class TestGlobalDetection:
    def test_certain_detection(self):
        assert fus.global_detection(fus.FusionConfig(3, 2), 1.0) == 1.0

    def test_arithmetic(self):
        cfg = fus.FusionConfig(3, 2)
        assert fus.global_detection(cfg, 0.9) == pytest.approx(0.972, abs=1e-12)

    def test_missed_detection_identity(self):
        # 1 - P_D,G equals the lower vote tail expressed in miss rates.
        cfg = fus.FusionConfig(7, 3)
        p_md = 0.23
        direct = fus.global_missed_detection(cfg, p_md)
        total = sum(
            math.comb(7, l) * p_md ** (7 - l) * (1 - p_md) ** l for l in range(0, 3)
        )
        assert direct == pytest.approx(total, rel=1e-12)
        assert direct == pytest.approx(1.0 - fus.global_detection(cfg, 1.0 - p_md), abs=1e-14)

    def test_log_variant_deep_tail(self):
        cfg = fus.FusionConfig(10, 1)
        ln = fus.ln_global_missed_detection(cfg, math.log(1e-20))
        assert ln == pytest.approx(10 * math.log(1e-20), rel=1e-10)


class TestMonotonicity:
    def test_nondecreasing_in_local_prob_nonincreasing_in_n(self):
        ps = np.linspace(0.0, 1.0, 21)
        for n in (1, 3, 8):
            for k in range(1, n + 1):
                cfg = fus.FusionConfig(n, k)
                vals = [fus.global_false_alarm(cfg, float(p)) for p in ps]
                assert all(a <= b + 1e-12 for a, b in zip(vals, vals[1:]))
        for p in (0.05, 0.4, 0.9):
            by_k = [
                fus.global_detection(fus.FusionConfig(8, k), p) for k in range(1, 9)
            ]
            assert all(a >= b - 1e-12 for a, b in zip(by_k, by_k[1:]))


class TestMdAsymptote:
    def test_or_rule_maximizes_diversity(self):
        for n in (3, 10):
            divs = [
                fus.global_md_asymptote(fus.FusionConfig(n, k), 10, 20.0, 1e4)[1]
                for k in range(1, n + 1)
            ]
            assert divs[0] == max(divs) == n

    def test_degenerate_network_reduces_to_noncoop(self):
        val, d, coding = fus.global_md_asymptote(fus.FusionConfig(1, 1), 10, 20.0, 1e4)
        assert val == pytest.approx(det.md_asymptote_noncoop(10, 20.0, 1e4), rel=1e-14)
        assert d == 1.0
        assert coding == pytest.approx(9.0 / 20.0, rel=1e-14)

    def test_exact_slope_matches_diversity(self):
        # Log-log slope of the exact global missed detection over 30..50 dB
        # equals N - n + 1 within 0.3 for all (N <= 10, n <= N).
        m, alpha = 10, 0.05
        snrs = [10**3.0, 10**3.5, 10**4.0, 10**4.5, 10**5.0]
        for n in (1, 2, 4, 7, 10):
            lam = 2.0 * sf.inv_reg_gamma_upper(float(m), alpha)
            local_ln_md = [math.log(det.avg_md_exact(m, lam, g)) for g in snrs]
            for k in (1, (n + 1) // 2, n):
                if k > n:
                    continue
                cfg = fus.FusionConfig(n, k)
                ln_md = [fus.ln_global_missed_detection(cfg, lm) for lm in local_ln_md]
                x = np.log10(snrs)
                y = -np.array(ln_md) / math.log(10.0)
                slope = np.polyfit(x, y, 1)[0]
                assert slope == pytest.approx(n - k + 1, abs=0.3)


class TestFaApprox:
    def test_single_user_dominant_term(self):
        cfg = fus.FusionConfig(1, 1)
        m, lam = 5, 100.0
        expected = lam ** (m - 1) * math.exp(-lam / 2.0) / (2 ** (m - 1) * math.gamma(m))
        assert fus.global_fa_approx(cfg, m, lam) == pytest.approx(expected, rel=1e-12)

    def test_ratio_to_exact(self):
        # At lambda = 10 * 2M the dominant-term global approximation sits
        # within ~15% of the exact tail (measured 0.849 for this setup: the
        # local dominant term is itself ~8% low and the n = 2 power squares
        # it).
        m, n, k = 5, 5, 2
        lam = 10.0 * 2 * m
        cfg = fus.FusionConfig(n, k)
        exact = fus.global_false_alarm(cfg, det.false_alarm_prob(m, lam))
        approx = fus.global_fa_approx(cfg, m, lam)
        assert approx / exact == pytest.approx(0.849, abs=0.02)

    def test_vote_threshold_squares_factor(self):
        cfg1 = fus.FusionConfig(6, 1)
        cfg2 = fus.FusionConfig(6, 2)
        m, lam = 4, 90.0
        f1 = fus.global_fa_approx(cfg1, m, lam) / math.comb(6, 1)
        f2 = fus.global_fa_approx(cfg2, m, lam) / math.comb(6, 2)
        assert f2 == pytest.approx(f1**2, rel=1e-10)

    def test_domain(self):
        with pytest.raises(DomainError):
            fus.global_fa_approx(fus.FusionConfig(2, 1), 5, -1.0)
