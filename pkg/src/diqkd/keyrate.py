"""QBER and minimum secure key rates of the entanglement-based DI protocol.

Two adversary models are covered:

* collective attacks (``ca``): rate depends on both the QBER Q and the CHSH
  value S,  r = 1 - h(Q) - h((1 + sqrt((S/2)^2 - 1))/2), defined for S >= 2;
* optimal symmetric collective attacks (``osca``): rate depends on Q only,
  r = 1 + 2(1-Q) log2(1-Q) + 2 Q log2 Q  (algebraically 1 - 2 h(Q)).

Positive-rate bookkeeping follows the ``require_chsh`` rule by default: a
state counts as key-positive only when its raw rate is positive *and* it
violates CHSH.  (For these formulas a positive raw rate in fact forces
S > 2.2, so the alternative ``raw_rate_only`` rule gives the same counts;
it exists as a sensitivity switch.)
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import ContractViolation, NumericIntegrityError
from .resources import BELL_TOL, resource_arrays

CountingRule = Literal["require_chsh", "raw_rate_only"]
QBER_CONSISTENCY_TOL = 1e-8


def binary_entropy(q):
    """h(q) = -q log2 q - (1-q) log2(1-q), with the 0 log 0 = 0 convention.

    Accepts scalars or arrays; inputs within 1e-12 outside [0, 1] are clamped,
    anything further out raises.
    """
    arr = np.asarray(q, dtype=np.float64)
    if arr.size and (arr.min() < -1e-12 or arr.max() > 1.0 + 1e-12):
        raise ContractViolation(f"binary_entropy argument outside [0,1]: {arr.min()}..{arr.max()}")
    x = np.clip(arr, 0.0, 1.0)
    with np.errstate(divide="ignore", invalid="ignore"):
        h = -np.where(x > 0, x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
        h -= np.where(x < 1, (1 - x) * np.log2(np.where(x < 1, 1 - x, 1.0)), 0.0)
    return h if arr.ndim else float(h)


def qber_from_singulars(sv1, sv2):
    """Q = (2 - |l1| - |l2|) / 4 from the two largest correlation singular values."""
    return np.clip((2.0 - np.abs(sv1) - np.abs(sv2)) / 4.0, 0.0, 0.5)


def qber(rho: np.ndarray) -> float:
    arr = resource_arrays(np.asarray(rho)[None])
    return float(qber_from_singulars(arr.sv1, arr.sv2)[0])


def qber_consistency(rho: np.ndarray) -> float:
    """QBER through the Bell-nonlocality route, (1/2)(1 - sqrt(S^2/16 + l1 l2 / 2)).

    Must agree with the direct route; a mismatch beyond 1e-8 raises."""
    arr = resource_arrays(np.asarray(rho)[None])
    s = arr.chsh[0]
    alt = 0.5 * (1.0 - np.sqrt(s * s / 16.0 + np.abs(arr.sv1[0] * arr.sv2[0]) / 2.0))
    direct = qber_from_singulars(arr.sv1[0], arr.sv2[0])
    if abs(alt - direct) > QBER_CONSISTENCY_TOL:
        raise NumericIntegrityError(
            f"QBER routes disagree: {direct!r} vs {alt!r}"
        )
    return float(alt)


def keyrate_osca(q):
    """Raw minimum secure key rate under optimal symmetric collective attacks."""
    arr = np.asarray(q, dtype=np.float64)
    if arr.size and (arr.min() < -1e-12 or arr.max() > 0.5 + 1e-12):
        raise ContractViolation(f"QBER outside [0, 1/2]: {arr.min()}..{arr.max()}")
    x = np.clip(arr, 0.0, 0.5)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = np.where(x < 1, 2.0 * (1 - x) * np.log2(np.where(x < 1, 1 - x, 1.0)), 0.0)
        t0 = np.where(x > 0, 2.0 * x * np.log2(np.where(x > 0, x, 1.0)), 0.0)
    r = 1.0 + t1 + t0
    return r if arr.ndim else float(r)


def keyrate_ca_arrays(q, s):
    """Raw CA key rates for arrays; returns (rates with NaN where undefined, defined mask)."""
    q = np.asarray(q, dtype=np.float64)
    s = np.asarray(s, dtype=np.float64)
    defined = s >= 2.0
    disc = np.maximum((s / 2.0) ** 2 - 1.0, 0.0)
    inner = (1.0 + np.sqrt(disc)) / 2.0
    r = 1.0 - binary_entropy(np.clip(q, 0.0, 0.5)) - binary_entropy(np.clip(inner, 0.0, 1.0))
    return np.where(defined, r, np.nan), defined


def keyrate_ca(q: float, s: float) -> float | None:
    """Raw CA key rate, or None when undefined (S < 2).

    Undefined is a value, not an error, and is never conflated with 0."""
    if not (-1e-12 <= q <= 0.5 + 1e-12):
        raise ContractViolation(f"QBER outside [0, 1/2]: {q}")
    r, defined = keyrate_ca_arrays(np.array([q]), np.array([s]))
    return float(r[0]) if defined[0] else None


@dataclass(frozen=True)
class KeyRateReport:
    qber: float
    chsh_value: float
    osca_raw: float
    ca_raw: float | None          # None when S < 2
    osca_rate: float              # clamped to >= 0
    ca_rate: float                # clamped; 0 when undefined
    ca_defined: bool
    positive_osca: bool
    positive_ca: bool


def evaluate(rho: np.ndarray, counting_rule: CountingRule = "require_chsh") -> KeyRateReport:
    """Full per-state key-rate assessment."""
    arr = resource_arrays(np.asarray(rho)[None])
    q = float(qber_from_singulars(arr.sv1, arr.sv2)[0])
    s = float(arr.chsh[0])
    # integrity: both QBER routes must agree
    alt = 0.5 * (1.0 - np.sqrt(s * s / 16.0 + abs(float(arr.sv1[0] * arr.sv2[0])) / 2.0))
    if abs(alt - q) > QBER_CONSISTENCY_TOL:
        raise NumericIntegrityError(f"QBER routes disagree: {q!r} vs {alt!r}")
    osca_raw = float(keyrate_osca(q))
    ca_raw = keyrate_ca(q, s)
    violates = s > 2.0 + BELL_TOL
    need_chsh = counting_rule == "require_chsh"
    if counting_rule not in ("require_chsh", "raw_rate_only"):
        raise ContractViolation(f"unknown counting rule {counting_rule!r}")
    positive_osca = osca_raw > 0.0 and (violates or not need_chsh)
    positive_ca = ca_raw is not None and ca_raw > 0.0 and (violates or not need_chsh)
    return KeyRateReport(
        qber=q,
        chsh_value=s,
        osca_raw=osca_raw,
        ca_raw=ca_raw,
        osca_rate=max(0.0, osca_raw),
        ca_rate=max(0.0, ca_raw) if ca_raw is not None else 0.0,
        ca_defined=ca_raw is not None,
        positive_osca=positive_osca,
        positive_ca=positive_ca,
    )
