"""Reduced-scale invariant suites behind ``diqkd verify``.

Each suite re-checks a module's contract with fresh random inputs and an
independent reference (numpy LAPACK routines, analytic identities).  The
tolerances live in TOLERANCES so tests can fault-inject corrupted values.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import families, keyrate, resources, stategen
from .campaign import CampaignConfig, run_campaign
from .linalg import jacobi_eigh, partial_trace, partial_transpose
from .serialize import summary_payload

TOLERANCES = {
    "eig_vs_lapack": 1e-12,
    "trace_identity": 1e-9,
    "det_relative": 1e-6,
    "qber_routes": 1e-10,
    "closed_form_vs_pipeline": 1e-9,
    "lu_invariance": 1e-9,
}


@dataclass(frozen=True)
class CheckResult:
    suite: str
    ok: bool
    detail: str


def _result(suite, ok, detail) -> CheckResult:
    return CheckResult(suite=suite, ok=bool(ok), detail=detail)


def suite_linalg(quick: bool = False) -> CheckResult:
    rng = np.random.default_rng(11)
    B = 200 if quick else 2000
    worst_eig = worst_tr = worst_det = 0.0
    for n in (3, 4, 8):
        x = rng.normal(size=(B, n, n)) + 1j * rng.normal(size=(B, n, n))
        h = (x + x.conj().transpose(0, 2, 1)) / 2
        vals, _ = jacobi_eigh(h)
        ref = np.linalg.eigvalsh(h)[:, ::-1]
        worst_eig = max(worst_eig, float(np.abs(vals - ref).max()))
        tr = np.trace(h, axis1=1, axis2=2).real
        worst_tr = max(worst_tr, float(np.abs(vals.sum(axis=1) - tr).max()))
        det = np.linalg.det(h).real
        scale = np.maximum(np.abs(det), 1e-30)
        worst_det = max(worst_det, float((np.abs(vals.prod(axis=1) - det) / scale).max()))
    ok = (
        worst_eig < TOLERANCES["eig_vs_lapack"]
        and worst_tr < TOLERANCES["trace_identity"]
        and worst_det < TOLERANCES["det_relative"]
    )
    return _result("linalg", ok,
                   f"eig {worst_eig:.2e}, trace {worst_tr:.2e}, det rel {worst_det:.2e}")


def suite_stategen(quick: bool = False) -> CheckResult:
    n = 1000 if quick else 10000
    problems = []
    for rank in (1, 2, 3, 4):
        rho = stategen.generate_batch(rank, 97, np.arange(n))
        ev, _ = jacobi_eigh(rho)
        ranks = (ev > stategen.RANK_EIGENVALUE_THRESHOLD).sum(axis=1)
        if not (ranks == rank).all():
            problems.append(f"rank law broke at rank {rank}")
        tr = np.einsum("bii->b", rho).real
        if np.abs(tr - 1).max() > 1e-10:
            problems.append(f"trace off at rank {rank}")
        if ev.min() < -1e-10:
            problems.append(f"negative eigenvalue at rank {rank}")
    again = stategen.generate_batch(2, 97, np.arange(16))
    first = stategen.generate_batch(2, 97, np.arange(16))
    if not np.array_equal(again, first):
        problems.append("regeneration is not bit-identical")
    return _result("stategen", not problems, "; ".join(problems) or f"{4*n} states clean")


def suite_resources(quick: bool = False) -> CheckResult:
    n = 2000 if quick else 20000
    problems = []
    counter_hierarchy = 0
    for rank in (1, 2, 3, 4):
        rho = stategen.generate_batch(rank, 131, np.arange(n // 2))
        arr = resources.resource_arrays(rho)
        counter_hierarchy += int((arr.bell_nonlocal & ~arr.entangled).sum())
        # PPT criterion: zero negativity iff no PT eigenvalue below -1e-9
        pt = partial_transpose(rho, "B")
        ev, _ = jacobi_eigh(pt)
        ppt = ev.min(axis=1) >= -1e-9
        if ((arr.negativity <= resources.ENTANGLEMENT_TOL) != ppt).any():
            problems.append(f"PPT mismatch at rank {rank}")
    if counter_hierarchy:
        problems.append(f"{counter_hierarchy} nonlocal-but-separable states")
    # local-unitary invariance on a fixed conjugation
    rng = np.random.default_rng(5)
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    u, _ = np.linalg.qr(x)
    x = rng.normal(size=(2, 2)) + 1j * rng.normal(size=(2, 2))
    v, _ = np.linalg.qr(x)
    w = np.kron(u, v)
    rho = stategen.generate_batch(1, 17, np.arange(200 if quick else 1000))
    rot = np.einsum("ij,bjk,lk->bil", w, rho, w.conj())
    a0 = resources.resource_arrays(rho)
    a1 = resources.resource_arrays(rot)
    gap = max(
        float(np.abs(a0.negativity - a1.negativity).max()),
        float(np.abs(a0.chsh - a1.chsh).max()),
    )
    if gap > TOLERANCES["lu_invariance"]:
        problems.append(f"local-unitary invariance broke ({gap:.2e})")
    return _result("resources", not problems, "; ".join(problems) or "hierarchy, PPT, LU ok")


def suite_keyrate(quick: bool = False) -> CheckResult:
    n = 2000 if quick else 10000
    worst = 0.0
    for rank in (2, 3):
        rho = stategen.generate_batch(rank, 7, np.arange(n))
        arr = resources.resource_arrays(rho)
        q = keyrate.qber_from_singulars(arr.sv1, arr.sv2)
        alt = 0.5 * (1.0 - np.sqrt(arr.chsh**2 / 16.0 + np.abs(arr.sv1 * arr.sv2) / 2.0))
        worst = max(worst, float(np.abs(q - alt).max()))
    qs = np.linspace(0, 0.5, 101)
    ident = np.abs(keyrate.keyrate_osca(qs) - (1 - 2 * keyrate.binary_entropy(qs))).max()
    ok = worst < TOLERANCES["qber_routes"] and ident < 1e-12
    return _result("keyrate", ok, f"route gap {worst:.2e}, identity gap {ident:.2e}")


def suite_families(quick: bool = False) -> CheckResult:
    step = 0.05 if quick else 0.01
    worst = 0.0
    for attack in ("osca", "ca"):
        for rows in (families.sweep_pure(attack, step), families.sweep_werner(attack, step)):
            for row in rows:
                if row["abs_diff"] is not None and math.isfinite(row["abs_diff"]):
                    worst = max(worst, row["abs_diff"])
                elif row["abs_diff"] is not None:
                    return _result("families", False, "definedness mismatch in sweep")
    ok = worst < TOLERANCES["closed_form_vs_pipeline"]
    return _result("families", ok, f"pure/werner closed-form gap {worst:.2e}")


def suite_campaign(quick: bool = False) -> CheckResult:
    n = 2000 if quick else 20000
    cfg1 = CampaignConfig(samples_per_rank=n, seed=3, ranks=(1, 2), worker_count=1)
    cfg2 = CampaignConfig(samples_per_rank=n, seed=3, ranks=(1, 2), worker_count=2)
    s1 = run_campaign(cfg1)
    s2 = run_campaign(cfg2)
    import json

    p1 = json.dumps(summary_payload(s1), sort_keys=True)
    p2 = json.dumps(summary_payload(s2), sort_keys=True)
    if p1 != p2:
        return _result("campaign", False, "worker counts 1 and 2 disagree")
    r1 = s1.rank_summary(1)
    ordered = (
        r1.n_entangled >= s1.rank_summary(2).n_entangled
        and r1.n_bell_nonlocal >= s1.rank_summary(2).n_bell_nonlocal
        and sum(r1.ln_histogram.counts) == r1.n_entangled
    )
    return _result("campaign", ordered, "determinism and ordering ok" if ordered
                   else "rank ordering or histogram mass broke")


ALL_SUITES = (
    suite_linalg,
    suite_stategen,
    suite_resources,
    suite_keyrate,
    suite_families,
    suite_campaign,
)


def run_all(quick: bool = False) -> list[CheckResult]:
    return [fn(quick) for fn in ALL_SUITES]
