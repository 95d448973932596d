"""Entanglement (negativity, logarithmic negativity) and Bell-CHSH
nonlocality of two-qubit states.

The CHSH figure of merit is the optimal-measurement value
S = 2 sqrt(l1^2 + l2^2) built from the two largest singular values of the
3x3 correlation matrix t_ij = Tr[(sigma_i x sigma_j) rho].
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, NumericIntegrityError
from .linalg import (
    SIGMA_X,
    SIGMA_Y,
    SIGMA_Z,
    jacobi_eigh,
    partial_transpose,
    singular_values_3x3_batch,
    tensor_product,
)

ENTANGLEMENT_TOL = 1e-9        # count as entangled when N > this
BELL_TOL = 1e-12               # count as nonlocal when S > 2 + this
IMAG_RESIDUE_TOL = 1e-10
CHSH_MAX = 2.0 * np.sqrt(2.0)

# sigma_i (x) sigma_j stacked in row-major (i, j) order, i, j in (x, y, z)
PAULI_PAIRS = np.stack(
    [tensor_product(a, b) for a in (SIGMA_X, SIGMA_Y, SIGMA_Z)
     for b in (SIGMA_X, SIGMA_Y, SIGMA_Z)]
)


@dataclass(frozen=True)
class ResourceReport:
    negativity: float
    log_negativity: float
    chsh_value: float
    sv_top2: tuple[float, float]
    is_entangled: bool
    is_bell_nonlocal: bool


def correlation_matrices(rhos: np.ndarray) -> np.ndarray:
    """(B, 4, 4) density matrices -> (B, 3, 3) real correlation matrices.

    Raises NumericIntegrityError if any trace has imaginary residue above
    1e-10 or an entry leaves [-1-1e-9, 1+1e-9].
    """
    rhos = np.asarray(rhos, dtype=np.complex128)
    tc = np.einsum("mkl,...lk->...m", PAULI_PAIRS, rhos)
    bad = np.abs(tc.imag).max()
    if bad > IMAG_RESIDUE_TOL:
        idx = int(np.abs(tc.imag).max(axis=-1).argmax())
        raise NumericIntegrityError(
            f"correlation-matrix imaginary residue {bad:.3e} at batch index {idx}"
        )
    t = tc.real.reshape(rhos.shape[:-2] + (3, 3))
    if np.abs(t).max() > 1.0 + 1e-9:
        raise NumericIntegrityError(f"correlation entry {np.abs(t).max():.12f} outside [-1, 1]")
    return t


def correlation_matrix(rho: np.ndarray) -> np.ndarray:
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape != (4, 4):
        raise ContractViolation(f"expected one 4x4 density matrix, got {rho.shape}")
    return correlation_matrices(rho[None])[0]


def negativity_batch(rhos: np.ndarray) -> np.ndarray:
    """Sum of |negative eigenvalues| of the partial transpose, batched."""
    pt = partial_transpose(rhos, "B")
    ev, _ = jacobi_eigh(pt)
    return -np.minimum(ev, 0.0).sum(axis=-1)


def negativity(rho: np.ndarray) -> float:
    return float(negativity_batch(np.asarray(rho)[None])[0])


def log_negativity(rho: np.ndarray) -> float:
    return float(np.log2(2.0 * negativity(rho) + 1.0))


def top_singular_values(rhos: np.ndarray) -> np.ndarray:
    """(B, 3) descending singular values of the correlation matrices."""
    return singular_values_3x3_batch(correlation_matrices(rhos))


def chsh_value(rho: np.ndarray) -> float:
    sv = top_singular_values(np.asarray(rho)[None])[0]
    return float(2.0 * np.sqrt(sv[0] ** 2 + sv[1] ** 2))


@dataclass(frozen=True)
class ResourceArrays:
    """Per-sample resource quantities for a batch (campaign hot path)."""

    negativity: np.ndarray
    log_negativity: np.ndarray
    chsh: np.ndarray
    sv1: np.ndarray
    sv2: np.ndarray

    @property
    def entangled(self) -> np.ndarray:
        return self.negativity > ENTANGLEMENT_TOL

    @property
    def bell_nonlocal(self) -> np.ndarray:
        return self.chsh > 2.0 + BELL_TOL


def resource_arrays(rhos: np.ndarray) -> ResourceArrays:
    rhos = np.asarray(rhos, dtype=np.complex128)
    neg = negativity_batch(rhos)
    sv = top_singular_values(rhos)
    return ResourceArrays(
        negativity=neg,
        log_negativity=np.log2(2.0 * neg + 1.0),
        chsh=2.0 * np.sqrt(sv[:, 0] ** 2 + sv[:, 1] ** 2),
        sv1=sv[:, 0],
        sv2=sv[:, 1],
    )


def evaluate_resources(rho: np.ndarray) -> ResourceReport:
    arr = resource_arrays(np.asarray(rho)[None])
    return ResourceReport(
        negativity=float(arr.negativity[0]),
        log_negativity=float(arr.log_negativity[0]),
        chsh_value=float(arr.chsh[0]),
        sv_top2=(float(arr.sv1[0]), float(arr.sv2[0])),
        is_entangled=bool(arr.entangled[0]),
        is_bell_nonlocal=bool(arr.bell_nonlocal[0]),
    )
