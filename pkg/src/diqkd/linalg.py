"""Dense linear algebra sized for this problem: 4x4 Hermitian eigenproblems,
partial trace / partial transpose of two-qubit states, tensor products, and
3x3 singular values.

Everything here is a pure function. The batched entry points accept stacks
(..., n, n) and are the hot path of the Monte Carlo campaign; the scalar
wrappers add the contract checks.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Literal, Sequence

import numpy as np

from .errors import ContractViolation, NumericIntegrityError

MAX_DIM = 16
HERMITIAN_TOL = 1e-12
PSD_TOL = 1e-10
JACOBI_OFF_TOL = 1e-13

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=np.complex128)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=np.complex128)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=np.complex128)
IDENTITY_2 = np.eye(2, dtype=np.complex128)
IDENTITY_4 = np.eye(4, dtype=np.complex128)


@dataclass(frozen=True)
class Spectrum:
    """Ordered (descending) real spectrum of a matrix."""

    values: tuple[float, ...]
    kind: Literal["eigenvalues", "singular-values"]

    def __post_init__(self):
        vals = self.values
        if any(vals[i] < vals[i + 1] for i in range(len(vals) - 1)):
            raise ContractViolation("spectrum values must be descending")
        if self.kind == "singular-values" and vals and vals[-1] < 0:
            raise ContractViolation("singular values must be non-negative")


def hermiticity_residual(m: np.ndarray) -> float:
    """Largest entrywise deviation from M = M^dagger."""
    m = np.asarray(m)
    return float(np.abs(m - np.conj(np.swapaxes(m, -1, -2))).max())


def ensure_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> np.ndarray:
    m = np.asarray(m, dtype=np.complex128)
    if m.shape[-1] != m.shape[-2]:
        raise ContractViolation(f"matrix must be square, got shape {m.shape}")
    if m.shape[-1] > MAX_DIM:
        raise ContractViolation(f"dimension {m.shape[-1]} exceeds supported maximum {MAX_DIM}")
    res = hermiticity_residual(m)
    if res > tol:
        raise ContractViolation(f"matrix is not Hermitian within {tol:g} (residual {res:.3e})")
    return m


def jacobi_eigh(
    mats: np.ndarray,
    need_vectors: bool = False,
    off_tol: float = JACOBI_OFF_TOL,
    max_sweeps: int = 40,
):
    """Batched threshold cyclic Jacobi diagonalization of Hermitian matrices.

    Rotations that would act on an off-diagonal entry with |a_pq| <= off_tol/(2n)
    are skipped, which both terminates the sweep loop and keeps each matrix's
    result independent of whatever else is in the batch.  On return the
    off-diagonal Frobenius norm of every matrix is below ``off_tol``.

    Parameters
    ----------
    mats : (..., n, n) complex, Hermitian
    need_vectors : accumulate eigenvectors as well

    Returns
    -------
    vals : (..., n) eigenvalues, descending
    vecs : (..., n, n) unitary with columns matching ``vals``, or None
    """
    a = np.asarray(mats, dtype=np.complex128)
    single = a.ndim == 2
    if single:
        a = a[None]
    lead = a.shape[:-2]
    n = a.shape[-1]
    # explicit copy: for B=1 the moveaxis view is flagged contiguous and
    # ascontiguousarray would alias the caller's matrix, which we mutate
    a = np.moveaxis(a.reshape(-1, n, n), 0, 2).copy()  # (n, n, B)
    B = a.shape[2]
    v = None
    if need_vectors:
        v = np.zeros((n, n, B), dtype=np.complex128)
        v[np.arange(n), np.arange(n), :] = 1.0

    thresh = off_tol / (2 * n)
    pairs = [(p, q) for p in range(n - 1) for q in range(p + 1, n)]
    converged = n == 1
    for _ in range(max_sweeps):
        rmax = 0.0
        for p, q in pairs:
            rmax = max(rmax, float(np.abs(a[p, q]).max(initial=0.0)))
        if rmax <= thresh:
            converged = True
            break
        for p, q in pairs:
            apq = a[p, q]
            r = np.abs(apq)
            active = r > thresh
            if not active.any():
                continue
            rs = np.where(active, r, 1.0)
            tau = np.where(active, (a[q, q].real - a[p, p].real) / (2.0 * rs), 0.0)
            sgn = np.where(tau >= 0.0, 1.0, -1.0)
            t = sgn / (np.abs(tau) + np.sqrt(1.0 + tau * tau))
            c = 1.0 / np.sqrt(1.0 + t * t)
            s = t * c
            c = np.where(active, c, 1.0)
            s = np.where(active, s, 0.0)
            phase = np.where(active, apq / rs, 1.0)
            pc = np.conj(phase)
            colp = a[:, p].copy()
            colq = a[:, q]
            a[:, p] = c * colp - (s * pc) * colq
            a[:, q] = s * colp + (c * pc) * colq
            rowp = a[p, :].copy()
            rowq = a[q, :]
            a[p, :] = c * rowp - (s * phase) * rowq
            a[q, :] = s * rowp + (c * phase) * rowq
            if need_vectors:
                vp = v[:, p].copy()
                vq = v[:, q]
                v[:, p] = c * vp - (s * pc) * vq
                v[:, q] = s * vp + (c * pc) * vq
    if not converged:
        off2 = np.zeros(B)
        for p, q in pairs:
            off2 += np.abs(a[p, q]) ** 2 + np.abs(a[q, p]) ** 2
        if np.sqrt(off2.max()) > off_tol:
            raise NumericIntegrityError(
                f"Jacobi did not converge in {max_sweeps} sweeps "
                f"(off-diagonal norm {np.sqrt(off2.max()):.3e})"
            )

    diag = a[np.arange(n), np.arange(n), :].real.T  # (B, n)
    order = np.argsort(-diag, axis=1, kind="stable")
    vals = np.take_along_axis(diag, order, axis=1)
    vecs = None
    if need_vectors:
        vecs = np.moveaxis(v, 2, 0)  # (B, n, n)
        vecs = np.take_along_axis(vecs, order[:, None, :], axis=2)
    vals = vals.reshape(lead + (n,)) if not single else vals[0]
    if need_vectors:
        vecs = vecs.reshape(lead + (n, n)) if not single else vecs[0]
    return vals, vecs


def hermitian_eigenvalues(m: np.ndarray) -> Spectrum:
    """Eigenvalues of a Hermitian matrix, descending.

    Verifies the eigenpair residual ||M v - lambda v|| <= 1e-10 internally;
    the vectors themselves are not exposed.
    """
    m = ensure_hermitian(m)
    if m.ndim != 2:
        raise ContractViolation("hermitian_eigenvalues takes a single matrix")
    vals, vecs = jacobi_eigh(m, need_vectors=True)
    resid = np.linalg.norm(m @ vecs - vecs * vals[None, :], axis=0).max()
    if resid > 1e-10:
        raise NumericIntegrityError(f"eigenpair residual {resid:.3e} exceeds 1e-10")
    return Spectrum(values=tuple(float(x) for x in vals), kind="eigenvalues")


def partial_transpose(rho: np.ndarray, subsystem: Literal["A", "B"] = "B") -> np.ndarray:
    """Partial transpose of a (stack of) two-qubit density matrices.

    Accepts (..., 4, 4); transposing A or B yields matrices with identical
    spectra, so the choice only matters for the matrix entries themselves.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    if rho.shape[-2:] != (4, 4):
        raise ContractViolation(f"partial transpose needs 4x4 matrices, got {rho.shape}")
    if subsystem not in ("A", "B"):
        raise ContractViolation(f"subsystem must be 'A' or 'B', got {subsystem!r}")
    lead = rho.shape[:-2]
    r4 = rho.reshape(lead + (2, 2, 2, 2))
    nd = r4.ndim
    # indices (..., i, j, k, l) with row (i,j), col (k,l)
    if subsystem == "A":
        perm = tuple(range(nd - 4)) + (nd - 2, nd - 3, nd - 4, nd - 1)
    else:
        perm = tuple(range(nd - 4)) + (nd - 4, nd - 1, nd - 2, nd - 3)
    return r4.transpose(perm).reshape(lead + (4, 4))


def partial_trace(rho: np.ndarray, dims: Sequence[int], keep: Iterable[int]) -> np.ndarray:
    """Trace out all subsystems not in ``keep`` from a density matrix on
    a tensor product with dimensions ``dims``.

    ``keep`` must select a contiguous block of subsystems.
    """
    rho = np.asarray(rho, dtype=np.complex128)
    dims = list(dims)
    d = int(np.prod(dims))
    if rho.shape != (d, d):
        raise ContractViolation(f"dims {dims} do not match matrix of shape {rho.shape}")
    keep = sorted(set(keep))
    if not keep or any(k < 0 or k >= len(dims) for k in keep):
        raise ContractViolation(f"keep {keep} out of range for {len(dims)} subsystems")
    if keep != list(range(keep[0], keep[-1] + 1)):
        raise ContractViolation(f"keep {keep} must be contiguous")
    k = len(dims)
    t = rho.reshape(dims + dims)
    # trace highest subsystem first: indices below it keep their axis positions
    for i in reversed(range(k)):
        if i not in keep:
            t = np.trace(t, axis1=i, axis2=i + t.ndim // 2)
    dkeep = int(np.prod([dims[i] for i in keep]))
    return t.reshape(dkeep, dkeep)


def singular_values_3x3(t: np.ndarray) -> Spectrum:
    """Singular values of a real 3x3 matrix, via the eigenvalues of T^T T.

    Tiny negative eigenvalues from rounding are clamped to zero before the
    square root.
    """
    t = np.asarray(t, dtype=np.float64)
    if t.shape != (3, 3):
        raise ContractViolation(f"expected a 3x3 real matrix, got {t.shape}")
    if np.abs(t).max() > 1.0 + 1e-9:
        raise ContractViolation("correlation entries must lie in [-1-1e-9, 1+1e-9]")
    sv = singular_values_3x3_batch(t[None])[0]
    return Spectrum(values=tuple(float(x) for x in sv), kind="singular-values")


def singular_values_3x3_batch(ts: np.ndarray) -> np.ndarray:
    """(B, 3, 3) real -> (B, 3) singular values, descending."""
    ts = np.asarray(ts, dtype=np.float64)
    gram = np.einsum("...ki,...kj->...ij", ts, ts)
    ev, _ = jacobi_eigh(gram.astype(np.complex128))
    return np.sqrt(np.maximum(ev, 0.0))


def tensor_product(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Kronecker product with the package's size cap."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape[0] * b.shape[0] > MAX_DIM:
        raise ContractViolation(
            f"tensor product of dims {a.shape[0]} x {b.shape[0]} exceeds {MAX_DIM}"
        )
    return np.kron(a, b)
