import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from diqkd.errors import ContractViolation
from diqkd.families import (
    ENVELOPE_EPS,
    WERNER_CA_MIN_N,
    Rank2Params,
    envelope_bounds,
    envelope_check,
    pure_keyrate,
    pure_state_matrix,
    rank2_keyrate,
    rank2_keyrate_from_negativity,
    rank2_negativity,
    rank2_normal_alpha,
    rank2_p_from_negativity,
    rank2_state_matrix,
    rank2_state_matrix_tabulated,
    sweep_pure,
    sweep_rank2,
    sweep_werner,
    werner_keyrate,
    werner_keyrate_arrays,
    werner_p_from_negativity,
    werner_state_matrix,
)
from diqkd import keyrate as kr
from diqkd import resources

from conftest import bell_phi_plus

# frozen mpmath (40-digit) oracle values
WERNER_CA_035 = -0.2563444458741630
PURE_CA_03 = -0.1909236884766436
OSCA_AT_Q_01 = 0.0620088128214376  # both families hit Q = 0.1 at these points
NSTAR = 0.2803300858899106


def params_strategy():
    return st.builds(
        Rank2Params,
        p1=st.floats(0, 1),
        alpha=st.floats(0, 1),
        a=st.floats(-1, 1),
        a_prime=st.floats(-1, 1),
    )


class TestPureFamily:
    def test_bell_at_pi_half(self):
        assert np.abs(pure_state_matrix(math.pi / 2) - bell_phi_plus()).max() < 1e-12

    def test_product_at_zero(self):
        rho = pure_state_matrix(0.0)
        assert rho[0, 0] == 1.0 and np.abs(rho).sum() == 1.0

    def test_negativity_cross_module(self):
        assert resources.negativity(pure_state_matrix(math.pi / 3)) == pytest.approx(
            math.sin(math.pi / 3) / 2, abs=1e-12
        )

    def test_correlation_diagonal(self):
        theta = 0.9
        t = resources.correlation_matrix(pure_state_matrix(theta))
        assert np.allclose(t, np.diag([math.sin(theta), -math.sin(theta), 1.0]), atol=1e-12)

    def test_keyrate_bell_point(self):
        assert pure_keyrate(0.5, "osca") == pytest.approx(1.0, abs=1e-12)
        assert pure_keyrate(0.5, "ca") == pytest.approx(1.0, abs=1e-12)

    def test_keyrate_oracle_values(self):
        assert pure_keyrate(0.3, "osca") == pytest.approx(OSCA_AT_Q_01, abs=1e-12)
        assert pure_keyrate(0.3, "ca") == pytest.approx(PURE_CA_03, abs=1e-12)

    def test_matches_pipeline_everywhere(self):
        for attack in ("osca", "ca"):
            rows = sweep_pure(attack, 0.01)
            worst = max(r["abs_diff"] for r in rows)
            assert worst < 1e-9


class TestWernerFamily:
    def test_bell_at_one(self):
        assert np.abs(werner_state_matrix(1.0) - bell_phi_plus()).max() < 1e-12

    def test_mixed_at_zero(self):
        assert np.allclose(werner_state_matrix(0.0), np.eye(4) / 4, atol=1e-15)

    def test_separability_boundary(self):
        assert resources.negativity(werner_state_matrix(1 / 3)) == pytest.approx(0.0, abs=1e-10)

    def test_correlation_diagonal(self):
        p = 0.8
        t = resources.correlation_matrix(werner_state_matrix(p))
        assert np.allclose(t, np.diag([p, -p, p]), atol=1e-12)

    def test_keyrate_bell_point_delta_limit(self):
        # delta -> 3 at n = 1/2: the (3-delta) log(3-delta) guard must yield 1 exactly
        assert werner_keyrate(0.5, "ca") == pytest.approx(1.0, abs=1e-12)
        assert werner_keyrate(0.5, "osca") == pytest.approx(1.0, abs=1e-12)

    def test_keyrate_oracle_values(self):
        assert werner_keyrate(0.35, "osca") == pytest.approx(OSCA_AT_Q_01, abs=1e-12)
        assert werner_keyrate(0.35, "ca") == pytest.approx(WERNER_CA_035, abs=1e-12)

    def test_ca_undefined_below_threshold(self):
        assert werner_keyrate(0.28, "ca") is None
        assert werner_keyrate(0.29, "ca") is not None

    def test_ca_domain_boundary_matches_chsh(self):
        # sqrt argument root and S(p(n)) = 2 must agree on the same n
        assert 32 * NSTAR**2 + 16 * NSTAR - 7 == pytest.approx(0.0, abs=1e-9)
        p = werner_p_from_negativity(NSTAR)
        assert resources.chsh_value(werner_state_matrix(p)) == pytest.approx(2.0, abs=1e-9)
        assert abs(WERNER_CA_MIN_N - NSTAR) < 1e-12

    def test_matches_pipeline_everywhere(self):
        for attack in ("osca", "ca"):
            rows = sweep_werner(attack, 0.01)
            finite = [r["abs_diff"] for r in rows if r["abs_diff"] is not None]
            assert max(finite) < 1e-9
            # undefined rows agree on definedness (abs_diff None, never inf)
            assert all(r["abs_diff"] != float("inf") for r in rows)

    def test_monotone_in_n_on_positive_region(self):
        n = np.arange(0.46, 0.5, 1e-4)
        for attack in ("osca", "ca"):
            up, _ = envelope_bounds(n, attack)
            w = np.array([werner_keyrate(x, attack) for x in n])
            assert (np.diff(w) > 0).all()
            assert (np.diff(up) > 0).all()


class TestRank2Family:
    def test_bell_collapse(self):
        params = Rank2Params(p1=1.0, alpha=1 / math.sqrt(2), a=1.0, a_prime=0.0)
        assert np.abs(rank2_state_matrix(params) - bell_phi_plus()).max() < 1e-12
        assert rank2_negativity(params) == pytest.approx(0.5, abs=1e-12)

    @settings(max_examples=200)
    @given(params_strategy())
    def test_dual_construction(self, params):
        a = rank2_state_matrix(params)
        b = rank2_state_matrix_tabulated(params)
        assert np.abs(a - b).max() < 1e-12

    @settings(max_examples=200)
    @given(params_strategy())
    def test_state_invariants(self, params):
        rho = rank2_state_matrix(params)
        assert np.abs(rho - rho.conj().T).max() < 1e-12
        assert abs(np.trace(rho).real - 1.0) < 1e-10
        from diqkd.linalg import jacobi_eigh

        ev, _ = jacobi_eigh(rho)
        assert ev[2] < 1e-10  # rank <= 2

    @settings(max_examples=150)
    @given(params_strategy())
    def test_negativity_matches_pipeline(self, params):
        closed = rank2_negativity(params)
        numeric = resources.negativity(rank2_state_matrix(params))
        assert closed == pytest.approx(numeric, abs=1e-9)

    def test_negativity_branch_point(self):
        params = Rank2Params(p1=0.5, alpha=0.7, a=0.9, a_prime=0.1)
        assert rank2_negativity(params) == 0.0

    def test_negativity_example(self):
        params = Rank2Params(p1=0.8, alpha=0.6, a=0.9, a_prime=0.2)
        assert rank2_negativity(params) == pytest.approx(
            resources.negativity(rank2_state_matrix(params)), abs=1e-9
        )

    def test_p_from_negativity_roundtrip_high(self):
        alpha, a, ap = 0.6, 0.9, 0.2
        for p1 in (0.55, 0.7, 0.9, 0.99):
            n = rank2_negativity(Rank2Params(p1=p1, alpha=alpha, a=a, a_prime=ap))
            back = rank2_p_from_negativity(n, alpha, a, ap, "high")
            assert back == pytest.approx(p1, abs=1e-8)
            n2 = rank2_negativity(Rank2Params(p1=back, alpha=alpha, a=a, a_prime=ap))
            assert n2 == pytest.approx(n, abs=1e-8)

    def test_p_from_negativity_roundtrip_low(self):
        alpha, a, ap = 0.6, 0.9, 0.2
        for p1 in (0.01, 0.2, 0.45):
            n = rank2_negativity(Rank2Params(p1=p1, alpha=alpha, a=a, a_prime=ap))
            back = rank2_p_from_negativity(n, alpha, a, ap, "low")
            assert back == pytest.approx(p1, abs=1e-8)

    def test_p_from_negativity_boundaries(self):
        alpha, a, ap = 0.5, 0.8, -0.3
        # n = 0 on the low branch: the p1 solving N = 0
        p0 = rank2_p_from_negativity(0.0, alpha, a, ap, "low")
        assert rank2_negativity(Rank2Params(p1=p0, alpha=alpha, a=a, a_prime=ap)) < 1e-12
        # branch maximum n = sqrt(k) maps to the pure endpoint p1 = 1 on high
        import diqkd.families as fam

        nmax = math.sqrt(fam._rank2_k(alpha, a, ap))
        assert rank2_p_from_negativity(nmax, alpha, a, ap, "high") == pytest.approx(1.0, abs=1e-9)

    def test_p_from_negativity_domain_error(self):
        with pytest.raises(ContractViolation):
            rank2_p_from_negativity(0.4, 0.9, 0.99, 0.98, "high")  # above sqrt(k)
        with pytest.raises(ContractViolation):
            rank2_p_from_negativity(0.3, 0.7, 0.5, 0.5, "high")  # separable family

    def test_keyrate_requires_constraint(self):
        with pytest.raises(ContractViolation):
            rank2_keyrate(Rank2Params(p1=0.9, alpha=0.5, a=1.0, a_prime=0.0), "osca")
        with pytest.raises(ContractViolation):
            rank2_keyrate_from_negativity(0.2, 0.5, 1.0, 0.0, "osca")

    def test_keyrate_exact_on_normal_subdomain(self):
        for a in (-0.9, -0.5, 0.0, 0.3, 0.8, 1.0):
            alpha = rank2_normal_alpha(a)
            for p1 in (0.0, 0.2, 0.5, 0.77, 0.95, 1.0):
                params = Rank2Params(p1=p1, alpha=alpha, a=a, a_prime=a)
                closed = rank2_keyrate(params, "osca")
                pipeline = kr.evaluate(rank2_state_matrix(params)).osca_raw
                assert closed == pytest.approx(pipeline, abs=1e-9)

    def test_keyrate_deviates_off_normal_subdomain(self):
        # the documented finding: eigenvalue-based error rate != singular-value QBER
        params = Rank2Params(p1=0.95, alpha=0.6, a=0.8, a_prime=0.8)
        closed = rank2_keyrate(params, "osca")
        pipeline = kr.evaluate(rank2_state_matrix(params)).osca_raw
        assert abs(closed - pipeline) > 1e-3

    def test_nform_equals_pform_with_p1_substitution(self):
        for alpha, a in ((0.5, 0.8), (0.9, -0.4)):
            for n in (0.0, 0.1, 0.3, 0.5):
                nform = rank2_keyrate_from_negativity(n, alpha, a, a, "osca")
                pform = rank2_keyrate(Rank2Params(p1=n, alpha=alpha, a=a, a_prime=a), "osca")
                assert nform == pytest.approx(pform, abs=1e-12)

    def test_ca_undefined_across_constraint_domain(self):
        for a in (0.3, 0.8):
            for p1 in (0.1, 0.5, 0.9):
                params = Rank2Params(p1=p1, alpha=rank2_normal_alpha(a), a=a, a_prime=a)
                assert rank2_keyrate(params, "ca") is None

    def test_constraint_family_is_separable(self):
        # a'=a with unit normalization forces product-state mixtures
        for a in (-0.7, 0.2, 0.9):
            for alpha in (0.3, 0.8):
                for p1 in (0.15, 0.6):
                    params = Rank2Params(p1=p1, alpha=alpha, a=a, a_prime=a)
                    assert rank2_negativity(params) == 0.0
                    assert resources.negativity(rank2_state_matrix(params)) < 1e-12
                    assert resources.chsh_value(rank2_state_matrix(params)) <= 2.0 + 1e-9

    def test_sweep_findings(self):
        rows, findings = sweep_rank2("osca", step=0.05)
        assert findings.max_absdiff_normal < 1e-9
        assert findings.max_absdiff_off_normal > 1e-3  # deviation surfaced, not hidden
        assert findings.max_family_negativity < 1e-12
        assert findings.printed_low_inversion_max_error > 0.1
        assert findings.corrected_low_inversion_max_error < 1e-10
        assert findings.nform_pform_max_gap < 1e-12
        assert len(findings.notes) >= 3
        assert all(row["constraint_residual"] <= 1e-10 for row in rows)


class TestEnvelope:
    def test_werner_is_its_own_lower_bound(self):
        rho = werner_state_matrix(0.95)
        verdict = envelope_check(rho, "osca")
        assert verdict.inside
        assert verdict.r_state == pytest.approx(verdict.r_werner_at_n, abs=1e-9)

    def test_pure_is_its_own_upper_bound(self):
        rho = pure_state_matrix(1.2)
        for attack in ("osca", "ca"):
            verdict = envelope_check(rho, attack)
            assert verdict.inside
            assert verdict.r_state == pytest.approx(verdict.r_pure_at_n, abs=1e-9)

    def test_requires_key_positive(self):
        with pytest.raises(ContractViolation):
            envelope_check(werner_state_matrix(0.5), "osca")

    def test_werner_ca_bound_zero_when_undefined(self):
        up, lo = envelope_bounds(np.array([0.1, 0.45]), "ca")
        assert lo[0] == 0.0  # undefined region treated as 0
        assert lo[1] < up[1]

    def test_epsilon_is_tight(self):
        assert ENVELOPE_EPS == 1e-9
