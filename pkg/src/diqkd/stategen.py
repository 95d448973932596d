"""Haar-uniform random two-qubit states of ranks 1-4.

Rank 1 states are normalized vectors of i.i.d. complex Gaussian amplitudes;
rank r in {2,3,4} states are obtained by tracing the first (ancilla)
subsystem of dimension r out of a Haar-random pure state on C^r (x) C^4.

Randomness comes from a vectorized Philox4x32-10 keyed by the campaign seed,
with the counter laid out as (position, sample_lo, sample_hi, domain).  The
value of sample k is therefore a pure function of (seed, rank, k): it does
not depend on batch boundaries, worker count or call order.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractViolation

PHILOX_M0 = np.uint64(0xD2511F53)
PHILOX_M1 = np.uint64(0xCD9E8D57)
PHILOX_W0 = np.uint32(0x9E3779B9)
PHILOX_W1 = np.uint32(0xBB67AE85)
_MASK32 = np.uint64(0xFFFFFFFF)

DEGENERATE_NORM = 1e-12
RANK_EIGENVALUE_THRESHOLD = 1e-8
# positions for redraw attempt j start at j * REDRAW_STRIDE
REDRAW_STRIDE = 64

ANCILLA_DIM = {1: 1, 2: 2, 3: 3, 4: 4}


def philox4x32(counters: np.ndarray, key: np.ndarray) -> np.ndarray:
    """Philox4x32-10 block function, vectorized over rows of ``counters``.

    counters : (B, 4) uint32, key : (2,) uint32  ->  (B, 4) uint32
    """
    counters = np.asarray(counters, dtype=np.uint32)
    c0 = counters[:, 0].astype(np.uint64)
    c1 = counters[:, 1].astype(np.uint64)
    c2 = counters[:, 2].astype(np.uint64)
    c3 = counters[:, 3].astype(np.uint64)
    k0, k1 = int(key[0]), int(key[1])
    round_keys = []
    for _ in range(10):
        round_keys.append((np.uint64(k0), np.uint64(k1)))
        k0 = (k0 + int(PHILOX_W0)) & 0xFFFFFFFF
        k1 = (k1 + int(PHILOX_W1)) & 0xFFFFFFFF
    for rk0, rk1 in round_keys:
        p0 = c0 * PHILOX_M0
        p1 = c2 * PHILOX_M1
        n0 = (p1 >> np.uint64(32)) ^ c1 ^ rk0
        n1 = p1 & _MASK32
        n2 = (p0 >> np.uint64(32)) ^ c3 ^ rk1
        n3 = p0 & _MASK32
        c0, c1, c2, c3 = n0, n1, n2, n3
    return np.stack([c0, c1, c2, c3], axis=1).astype(np.uint32)


def _philox_key(seed: int) -> np.ndarray:
    seed = int(seed) & 0xFFFFFFFFFFFFFFFF
    return np.array([seed & 0xFFFFFFFF, seed >> 32], dtype=np.uint32)


def _normals_from_blocks(blocks_u32: np.ndarray) -> np.ndarray:
    """Map philox output blocks (B, 4) uint32 to (B, 4) standard normals
    via the trigonometric Box-Muller transform (two uniforms -> two normals)."""
    u = (blocks_u32.astype(np.float64) + 1.0) * 2.0**-32  # (0, 1]
    radius = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    angle = 2.0 * np.pi * u[:, 1::2]
    z = np.empty_like(u)
    z[:, 0::2] = radius * np.cos(angle)
    z[:, 1::2] = radius * np.sin(angle)
    return z


def normal_blocks(seed: int, stream_ids: np.ndarray, positions: np.ndarray,
                  domain: int = 0) -> np.ndarray:
    """Standard-normal blocks for (stream, position) pairs; (B,) -> (B, 4)."""
    stream_ids = np.asarray(stream_ids, dtype=np.uint64)
    positions = np.asarray(positions, dtype=np.uint32)
    ctr = np.empty((stream_ids.size, 4), dtype=np.uint32)
    ctr[:, 0] = positions
    ctr[:, 1] = (stream_ids & np.uint64(0xFFFFFFFF)).astype(np.uint32)
    ctr[:, 2] = (stream_ids >> np.uint64(32)).astype(np.uint32)
    ctr[:, 3] = np.uint32(domain)
    return _normals_from_blocks(philox4x32(ctr, _philox_key(seed)))


@dataclass
class GaussianStream:
    """A seekable stream of N(0,1) draws, fully determined by (seed, stream_id).

    ``position`` counts consumed philox blocks; a small buffer carries
    leftovers so that draw counts need not be multiples of four.
    """

    seed: int
    stream_id: int
    domain: int = 0
    position: int = 0
    _buffer: list = field(default_factory=list, repr=False)

    def normals(self, count: int) -> np.ndarray:
        if count < 1:
            raise ContractViolation("count must be >= 1")
        out = []
        if self._buffer:
            take = min(count, len(self._buffer))
            out.extend(self._buffer[:take])
            self._buffer = self._buffer[take:]
            count -= take
        if count > 0:
            nblk = (count + 3) // 4
            pos = self.position + np.arange(nblk, dtype=np.uint64)
            z = normal_blocks(self.seed, np.full(nblk, self.stream_id, dtype=np.uint64),
                              pos.astype(np.uint32), self.domain).ravel()
            self.position += nblk
            out.extend(z[:count])
            self._buffer = list(z[count:])
        return np.array(out)


def sample_complex_gaussian(stream: GaussianStream, count: int) -> np.ndarray:
    """``count`` complex numbers whose real and imaginary parts are i.i.d. N(0,1)."""
    z = stream.normals(2 * count)
    return z[0::2] + 1j * z[1::2]


@dataclass(frozen=True)
class RandomStateSpec:
    """Identifies one random state draw: (rank, seed, sample_index) is everything."""

    rank: int
    seed: int
    sample_index: int

    def __post_init__(self):
        if self.rank not in (1, 2, 3, 4):
            raise ContractViolation(f"rank must be in 1..4, got {self.rank}")
        if not (0 <= self.seed < 2**64):
            raise ContractViolation("seed must be a 64-bit unsigned integer")
        if not (0 <= self.sample_index < 2**64):
            raise ContractViolation("sample_index must be a 64-bit unsigned integer")


def complex_amplitude_batch(seed: int, rank: int, indices: np.ndarray,
                            attempt: int = 0) -> np.ndarray:
    """(B, rank*4) complex Gaussian amplitude vectors for the given sample indices.

    ``attempt`` shifts the philox position window; used only to redraw
    degenerate (norm ~ 0) vectors.
    """
    dim = ANCILLA_DIM[rank] * 4
    nblk = (2 * dim + 3) // 4
    if attempt * REDRAW_STRIDE + nblk >= 2**32:
        raise ContractViolation("redraw attempts exhausted the position counter")
    indices = np.asarray(indices, dtype=np.uint64)
    B = indices.size
    streams = np.repeat(indices, nblk)
    positions = np.tile(
        np.arange(attempt * REDRAW_STRIDE, attempt * REDRAW_STRIDE + nblk, dtype=np.uint32),
        B,
    )
    z = normal_blocks(seed, streams, positions, domain=rank).reshape(B, nblk * 4)
    return z[:, 0 : 2 * dim : 2] + 1j * z[:, 1 : 2 * dim : 2]


def generate_batch(rank: int, seed: int, indices: np.ndarray) -> np.ndarray:
    """Haar-uniform rank-``rank`` two-qubit states for each sample index.

    Returns a (B, 4, 4) complex stack of unit-trace Hermitian density matrices.
    """
    if rank not in ANCILLA_DIM:
        raise ContractViolation(f"rank must be in 1..4, got {rank}")
    indices = np.atleast_1d(np.asarray(indices, dtype=np.uint64))
    amp = complex_amplitude_batch(seed, rank, indices)
    norms = np.sqrt((amp.real**2 + amp.imag**2).sum(axis=1))
    attempt = 0
    while (norms < DEGENERATE_NORM).any():
        attempt += 1
        if attempt > 100:
            raise ContractViolation("persistent degenerate draws; RNG is broken")
        bad = np.flatnonzero(norms < DEGENERATE_NORM)
        amp[bad] = complex_amplitude_batch(seed, rank, indices[bad], attempt=attempt)
        norms[bad] = np.sqrt((amp[bad].real**2 + amp[bad].imag**2).sum(axis=1))
    amp /= norms[:, None]
    # trace out the leading (ancilla) index of |psi><psi|
    a = amp.reshape(-1, ANCILLA_DIM[rank], 4)
    return np.einsum("bas,bat->bst", a, a.conj())


def generate(spec: RandomStateSpec) -> np.ndarray:
    """Single 4x4 density matrix for a RandomStateSpec."""
    return generate_batch(spec.rank, spec.seed, np.array([spec.sample_index]))[0]


def generate_pure(spec: RandomStateSpec) -> np.ndarray:
    if spec.rank != 1:
        raise ContractViolation("generate_pure requires rank 1")
    return generate(spec)


def generate_rank2(spec: RandomStateSpec) -> np.ndarray:
    if spec.rank != 2:
        raise ContractViolation("generate_rank2 requires rank 2")
    return generate(spec)


def generate_rank3(spec: RandomStateSpec) -> np.ndarray:
    if spec.rank != 3:
        raise ContractViolation("generate_rank3 requires rank 3")
    return generate(spec)


def generate_rank4(spec: RandomStateSpec) -> np.ndarray:
    if spec.rank != 4:
        raise ContractViolation("generate_rank4 requires rank 4")
    return generate(spec)


def validate_two_qubit_state(rho: np.ndarray, declared_rank: int | None = None) -> None:
    """Check the density-matrix invariants; raises ContractViolation on failure."""
    from .linalg import hermiticity_residual, jacobi_eigh

    rho = np.asarray(rho)
    if rho.shape != (4, 4):
        raise ContractViolation(f"expected a 4x4 matrix, got {rho.shape}")
    res = hermiticity_residual(rho)
    if res > 1e-12:
        raise ContractViolation(f"not Hermitian within 1e-12 (residual {res:.3e})")
    tr = complex(np.trace(rho))
    if abs(tr - 1.0) > 1e-10:
        raise ContractViolation(f"trace {tr} is not 1 within 1e-10")
    ev, _ = jacobi_eigh(rho)
    if ev.min() < -1e-10:
        raise ContractViolation(f"negative eigenvalue {ev.min():.3e} below -1e-10")
    if declared_rank is not None:
        numerical_rank = int((ev > RANK_EIGENVALUE_THRESHOLD).sum())
        if numerical_rank != declared_rank:
            raise ContractViolation(
                f"numerical rank {numerical_rank} != declared rank {declared_rank}"
            )
