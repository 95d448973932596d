import math

import numpy as np
import pytest

from diqkd.errors import NumericIntegrityError
from diqkd.linalg import IDENTITY_4, jacobi_eigh, partial_transpose
from diqkd.resources import (
    chsh_value,
    correlation_matrix,
    evaluate_resources,
    log_negativity,
    negativity,
    negativity_batch,
    resource_arrays,
)
from diqkd.families import pure_state_matrix, werner_state_matrix
from diqkd.stategen import generate_batch

from conftest import bell_phi_plus

CHSH_MAX = 2 * math.sqrt(2)


def product_01():
    rho = np.zeros((4, 4), dtype=complex)
    rho[1, 1] = 1.0  # |01><01|
    return rho


class TestNegativity:
    def test_bell(self):
        assert negativity(bell_phi_plus()) == pytest.approx(0.5, abs=1e-12)

    def test_werner_half(self):
        # (3p-1)/4 at p = 1/2
        assert negativity(werner_state_matrix(0.5)) == pytest.approx(0.125, abs=1e-12)

    def test_pure_pi_over_6(self):
        # sin(theta)/2 at theta = pi/6
        assert negativity(pure_state_matrix(math.pi / 6)) == pytest.approx(0.25, abs=1e-12)

    def test_separable(self):
        assert negativity(product_01()) == pytest.approx(0.0, abs=1e-12)
        assert negativity(IDENTITY_4 / 4) == pytest.approx(0.0, abs=1e-12)

    def test_range(self):
        rho = generate_batch(4, 7, np.arange(2000))
        neg = negativity_batch(rho)
        assert neg.min() >= 0.0 and neg.max() <= 0.5 + 1e-12


class TestLogNegativity:
    def test_bell(self):
        assert log_negativity(bell_phi_plus()) == pytest.approx(1.0, abs=1e-12)

    def test_product(self):
        assert log_negativity(product_01()) == pytest.approx(0.0, abs=1e-12)

    def test_werner_half(self):
        # log2(2*0.125 + 1) = log2(1.25); mpmath 40-digit oracle
        assert log_negativity(werner_state_matrix(0.5)) == pytest.approx(
            0.3219280948873623, abs=1e-12
        )


class TestCorrelationMatrix:
    def test_bell(self):
        assert np.allclose(correlation_matrix(bell_phi_plus()), np.diag([1, -1, 1]), atol=1e-12)

    def test_werner(self):
        p = 0.37
        assert np.allclose(
            correlation_matrix(werner_state_matrix(p)), np.diag([p, -p, p]), atol=1e-12
        )

    def test_maximally_mixed(self):
        assert np.allclose(correlation_matrix(IDENTITY_4 / 4), 0.0, atol=1e-15)

    def test_imaginary_residue_guard(self):
        rho = bell_phi_plus().astype(complex)
        rho[0, 3] += 1e-6j  # non-Hermitian corruption leaks an imaginary trace
        with pytest.raises(NumericIntegrityError):
            correlation_matrix(rho)


class TestChsh:
    def test_bell_tsirelson(self):
        assert chsh_value(bell_phi_plus()) == pytest.approx(CHSH_MAX, abs=1e-12)

    def test_werner_scaling(self):
        for p in (0.2, 0.5, 0.9):
            assert chsh_value(werner_state_matrix(p)) == pytest.approx(
                CHSH_MAX * p, abs=1e-12
            )

    def test_pure_value(self):
        for theta in (0.3, 1.0, math.pi / 2):
            expect = 2 * math.sqrt(1 + math.sin(theta) ** 2)
            assert chsh_value(pure_state_matrix(theta)) == pytest.approx(expect, abs=1e-12)


class TestReports:
    def test_report_identities(self):
        for rank in (1, 2, 3, 4):
            rho = generate_batch(rank, 13, np.arange(200))
            arr = resource_arrays(rho)
            assert np.abs(
                arr.log_negativity - np.log2(2 * arr.negativity + 1)
            ).max() < 1e-12
            assert np.abs(
                arr.chsh - 2 * np.sqrt(arr.sv1**2 + arr.sv2**2)
            ).max() < 1e-12

    def test_flag_implications(self):
        rep = evaluate_resources(werner_state_matrix(0.9))
        assert rep.is_bell_nonlocal and rep.is_entangled
        rep = evaluate_resources(werner_state_matrix(0.5))
        assert rep.is_entangled and not rep.is_bell_nonlocal
        rep = evaluate_resources(IDENTITY_4 / 4)
        assert not rep.is_entangled and not rep.is_bell_nonlocal

    def test_hierarchy_100k(self):
        # Bell-nonlocal implies entangled: zero counterexamples over 1e5 samples
        counter = 0
        for rank in (1, 2, 3, 4):
            arr = resource_arrays(generate_batch(rank, 313, np.arange(25_000)))
            counter += int((arr.bell_nonlocal & ~arr.entangled).sum())
        assert counter == 0

    def test_ppt_criterion_10k(self):
        for rank in (2, 3, 4):
            rho = generate_batch(rank, 99, np.arange(3400))
            arr = resource_arrays(rho)
            ev, _ = jacobi_eigh(partial_transpose(rho, "B"))
            ppt = ev.min(axis=1) >= -1e-9
            assert ((arr.negativity <= 1e-9) == ppt).all()

    def test_gisin_every_entangled_pure_violates(self):
        arr = resource_arrays(generate_batch(1, 71, np.arange(10_000)))
        entangled = arr.negativity > 1e-9
        assert (arr.chsh[entangled] >= 2.0).all()
        # and in practice all 1e4 are entangled and violating
        assert entangled.all()
        assert (arr.chsh > 2.0).all()

    def test_local_unitary_invariance(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ua, _ = np.linalg.qr(x)
        x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
        ub, _ = np.linalg.qr(x)
        w = np.kron(ua, ub)
        rho = generate_batch(3, 5, np.arange(500))
        rot = np.einsum("ij,bjk,lk->bil", w, rho, w.conj())
        a0, a1 = resource_arrays(rho), resource_arrays(rot)
        assert np.abs(a0.negativity - a1.negativity).max() < 1e-9
        assert np.abs(a0.log_negativity - a1.log_negativity).max() < 1e-9
        assert np.abs(a0.chsh - a1.chsh).max() < 1e-9
