import math

import numpy as np
import pytest

from diqkd.errors import ContractViolation
from diqkd.keyrate import (
    binary_entropy,
    evaluate,
    keyrate_ca,
    keyrate_ca_arrays,
    keyrate_osca,
    qber,
    qber_consistency,
    qber_from_singulars,
)
from diqkd.families import pure_state_matrix, werner_state_matrix
from diqkd.resources import resource_arrays
from diqkd.stategen import generate_batch

from conftest import bell_phi_plus

CHSH_MAX = 2 * math.sqrt(2)

# frozen mpmath (40-digit) oracle values
H_011 = 0.4999159581645280          # h(0.11)
R_OSCA_01 = 0.0620088128214376      # 1 - 2 h(0.1)
R_CA_WERNER_09 = 0.2249504899996662  # 1 - h(0.05) - h((1+sqrt(2*0.81-1))/2)
QSTAR = 0.1100278644383596          # root of h(q) = 1/2


class TestBinaryEntropy:
    def test_half(self):
        assert binary_entropy(0.5) == 1.0

    def test_endpoints(self):
        assert binary_entropy(0.0) == 0.0
        assert binary_entropy(1.0) == 0.0

    def test_table_value(self):
        assert binary_entropy(0.11) == pytest.approx(H_011, abs=1e-12)

    def test_clamps_rounding_dust(self):
        assert binary_entropy(-1e-13) == 0.0
        assert binary_entropy(1 + 1e-13) == 0.0

    def test_rejects_out_of_range(self):
        with pytest.raises(ContractViolation):
            binary_entropy(-0.01)
        with pytest.raises(ContractViolation):
            binary_entropy(1.01)

    def test_symmetry(self):
        q = np.linspace(0, 1, 101)
        assert np.abs(binary_entropy(q) - binary_entropy(1 - q)).max() < 1e-12


class TestQber:
    def test_bell(self):
        assert qber(bell_phi_plus()) == pytest.approx(0.0, abs=1e-12)

    def test_werner(self):
        # (1-p)/2
        assert qber(werner_state_matrix(0.9)) == pytest.approx(0.05, abs=1e-12)
        assert qber(werner_state_matrix(0.6)) == pytest.approx(0.2, abs=1e-12)

    def test_pure(self):
        theta = 0.7
        assert qber(pure_state_matrix(theta)) == pytest.approx(
            (1 - math.sin(theta)) / 4, abs=1e-12
        )

    def test_consistency_route(self):
        assert qber_consistency(bell_phi_plus()) == pytest.approx(0.0, abs=1e-12)
        assert qber_consistency(werner_state_matrix(0.6)) == pytest.approx(0.2, abs=1e-10)

    def test_routes_agree_on_random_states(self):
        for rank in (1, 2, 3, 4):
            rho = generate_batch(rank, 17, np.arange(2500))
            arr = resource_arrays(rho)
            q = qber_from_singulars(arr.sv1, arr.sv2)
            alt = 0.5 * (1 - np.sqrt(arr.chsh**2 / 16 + np.abs(arr.sv1 * arr.sv2) / 2))
            assert np.abs(q - alt).max() < 1e-10


class TestOscaRate:
    def test_endpoints(self):
        assert keyrate_osca(0.0) == 1.0
        assert keyrate_osca(0.5) == pytest.approx(-1.0, abs=1e-12)

    def test_q_01(self):
        assert keyrate_osca(0.1) == pytest.approx(R_OSCA_01, abs=1e-12)

    def test_equals_one_minus_two_h(self):
        q = np.linspace(0, 0.5, 1000)
        assert np.abs(keyrate_osca(q) - (1 - 2 * binary_entropy(q))).max() < 1e-12

    def test_strictly_decreasing_with_root_bracket(self):
        q = np.linspace(0, 0.5, 5001)
        r = keyrate_osca(q)
        assert (np.diff(r) < 0).all()
        assert keyrate_osca(0.1100) > 0 > keyrate_osca(0.1101)
        # bisection oracle reproduces the analytic root
        lo, hi = 0.1100, 0.1101
        for _ in range(60):
            mid = (lo + hi) / 2
            if keyrate_osca(mid) > 0:
                lo = mid
            else:
                hi = mid
        assert lo == pytest.approx(QSTAR, abs=1e-12)


class TestCaRate:
    def test_perfect_state(self):
        assert keyrate_ca(0.0, CHSH_MAX) == pytest.approx(1.0, abs=1e-12)

    def test_no_violation_boundary(self):
        for q in (0.0, 0.1, 0.3):
            val = keyrate_ca(q, 2.0)
            assert val == pytest.approx(-binary_entropy(q), abs=1e-12)

    def test_werner_09(self):
        assert keyrate_ca(0.05, CHSH_MAX * 0.9) == pytest.approx(R_CA_WERNER_09, abs=1e-12)

    def test_undefined_below_two_is_none_not_zero(self):
        assert keyrate_ca(0.1, 1.99) is None
        r, defined = keyrate_ca_arrays(np.array([0.1, 0.0]), np.array([1.5, 2.5]))
        assert not defined[0] and math.isnan(r[0])
        assert defined[1] and not math.isnan(r[1])

    def test_bad_qber(self):
        with pytest.raises(ContractViolation):
            keyrate_ca(0.6, 2.5)


class TestEvaluate:
    def test_bell(self):
        rep = evaluate(bell_phi_plus())
        assert rep.positive_osca and rep.positive_ca
        assert rep.osca_raw == pytest.approx(1.0, abs=1e-12)
        assert rep.ca_raw == pytest.approx(1.0, abs=1e-12)
        assert rep.osca_rate == rep.osca_raw and rep.ca_rate == rep.ca_raw

    def test_maximally_mixed(self):
        rep = evaluate(np.eye(4, dtype=complex) / 4)
        assert rep.chsh_value == pytest.approx(0.0, abs=1e-12)
        assert not rep.positive_osca and not rep.positive_ca
        assert not rep.ca_defined and rep.ca_raw is None
        assert rep.ca_rate == 0.0

    def test_werner_075_nonlocal_but_keyless(self):
        rep = evaluate(werner_state_matrix(0.75))
        assert rep.chsh_value == pytest.approx(CHSH_MAX * 0.75, abs=1e-12)  # ~2.121 > 2
        assert rep.chsh_value > 2.0
        # r = 1 - 2 h(0.125) < 0: Bell-nonlocal yet no key
        assert rep.osca_raw == pytest.approx(1 - 2 * binary_entropy(0.125), abs=1e-12)
        assert rep.osca_raw < 0.0
        assert not rep.positive_osca and not rep.positive_ca
        assert rep.osca_rate == 0.0

    def test_clamped_vs_raw(self):
        rep = evaluate(werner_state_matrix(0.75))
        assert rep.osca_rate == max(0.0, rep.osca_raw)

    def test_counting_rules_agree_on_random_states(self):
        # positive raw rate forces S > 2.2, so the rules coincide in practice
        for rank in (1, 2):
            rho = generate_batch(rank, 23, np.arange(3000))
            for i in range(0, 3000, 301):
                a = evaluate(rho[i], "require_chsh")
                b = evaluate(rho[i], "raw_rate_only")
                assert (a.positive_osca, a.positive_ca) == (b.positive_osca, b.positive_ca)

    def test_no_key_without_violation(self):
        # raw_rate_only never lets an S <= 2 state count as key-positive
        for rank in (1, 2, 3, 4):
            rho = generate_batch(rank, 29, np.arange(5000))
            arr = resource_arrays(rho)
            q = qber_from_singulars(arr.sv1, arr.sv2)
            r = keyrate_osca(q)
            assert not ((r > 0) & (arr.chsh <= 2.0)).any()
