"""Command-line entry point.

Subcommands
-----------
campaign   Monte Carlo run over ranks; emits table1, per-rank histograms and
           a summary (plus optional raw per-sample dumps).
families   Closed-form vs pipeline key-rate sweeps for the pure, Werner and
           rank-2 families, including the rank-2 findings report.
envelope   Per-sample pure/Werner envelope verdicts for key-positive states.
verify     Reduced-scale invariant suites; exit 1 on the first failure.

Exit codes: 0 success, 1 failed verification, 2 bad flags, 3 numeric fault.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from pathlib import Path

import numpy as np

from .campaign import (
    CampaignConfig,
    collect_envelope_samples,
    run_campaign,
)
from .errors import ContractViolation, NumericIntegrityError
from .keyrate import keyrate_ca_arrays, keyrate_osca, qber_from_singulars
from .resources import BELL_TOL, resource_arrays
from .serialize import (
    ENVELOPE_COLUMNS,
    FAMILY_COLUMNS,
    FAMILY_RANK2_COLUMNS,
    RAW_SAMPLE_COLUMNS,
    json_ready,
    write_campaign_outputs,
    write_records,
)
from .stategen import generate_batch
from . import families, verify

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_BAD_FLAGS = 2
EXIT_NUMERIC = 3


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1, got {value}")
    return value


def _ranks(text: str) -> tuple[int, ...]:
    try:
        ranks = tuple(int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"bad rank list {text!r}") from exc
    if not ranks or any(r not in (1, 2, 3, 4) for r in ranks):
        raise argparse.ArgumentTypeError(f"ranks must be from 1,2,3,4, got {text!r}")
    return ranks


def _attacks(text: str) -> tuple[str, ...]:
    attacks = tuple(a.strip() for a in text.split(","))
    if not attacks or any(a not in ("ca", "osca") for a in attacks):
        raise argparse.ArgumentTypeError(f"attacks must be from ca,osca, got {text!r}")
    return attacks


def _threads(text: str):
    if text == "auto":
        return "auto"
    return _positive_int(text)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="diqkd")
    sub = parser.add_subparsers(dest="command", required=True)

    c = sub.add_parser("campaign", help="Monte Carlo campaign over state ranks")
    c.add_argument("--ranks", type=_ranks, default=(1, 2, 3, 4))
    c.add_argument("--samples", type=_positive_int, default=1_000_000)
    c.add_argument("--seed", type=int, default=20240501)
    c.add_argument("--attacks", type=_attacks, default=("ca", "osca"))
    c.add_argument("--bins-ln", type=_positive_int, default=10)
    c.add_argument("--bins-bell", type=_positive_int, default=10)
    c.add_argument("--counting", choices=("require-chsh", "raw"), default="require-chsh")
    c.add_argument("--threads", type=_threads, default="auto",
                   help="worker threads for chunked generation; results do not depend on it")
    c.add_argument("--out", type=Path, required=True)
    c.add_argument("--format", choices=("csv", "json"), default="csv")
    c.add_argument("--dump-raw", action="store_true",
                   help="also write per-sample records (large)")

    f = sub.add_parser("families", help="closed-form vs pipeline sweeps")
    f.add_argument("--family", choices=("pure", "werner", "rank2"), required=True)
    f.add_argument("--attack", choices=("ca", "osca"), required=True)
    f.add_argument("--step", type=float, default=0.01)
    f.add_argument("--out", type=Path, required=True)
    f.add_argument("--format", choices=("csv", "json"), default="csv")

    e = sub.add_parser("envelope", help="pure/Werner envelope verdicts")
    e.add_argument("--ranks", type=_ranks, default=(2, 3, 4))
    e.add_argument("--samples", type=_positive_int, default=100_000)
    e.add_argument("--seed", type=int, default=20240501)
    e.add_argument("--attack", choices=("ca", "osca"), required=True)
    e.add_argument("--out", type=Path, required=True)
    e.add_argument("--format", choices=("csv", "json"), default="csv")

    v = sub.add_parser("verify", help="run reduced-scale invariant suites")
    v.add_argument("--quick", action="store_true")
    return parser


def cmd_campaign(args) -> int:
    config = CampaignConfig(
        samples_per_rank=args.samples,
        seed=args.seed,
        ranks=args.ranks,
        bins_ln=args.bins_ln,
        bins_bell=args.bins_bell,
        attack_modes=args.attacks,
        security_counting_rule="require_chsh" if args.counting == "require-chsh" else "raw_rate_only",
        worker_count=args.threads,
    )
    summary = run_campaign(config)
    written = write_campaign_outputs(summary, args.out, args.format)
    if args.dump_raw:
        written.extend(_dump_raw(config, args.out, args.format))
    print(
        f"campaign: {len(config.ranks)} rank(s) x {config.samples_per_rank} samples "
        f"in {summary.wall_time_s:.1f}s ({summary.samples_per_second:,.0f}/s)",
        file=sys.stderr,
    )
    for path in written:
        print(f"wrote {path}", file=sys.stderr)
    return EXIT_OK


def _dump_raw(config: CampaignConfig, out_dir: Path, fmt: str):
    from .campaign import CHUNK

    written = []
    for rank in config.ranks:
        rows = []
        for start in range(0, config.samples_per_rank, CHUNK):
            stop = min(config.samples_per_rank, start + CHUNK)
            idx = np.arange(start, stop, dtype=np.uint64)
            rho = generate_batch(rank, config.seed, idx)
            arr = resource_arrays(rho)
            q = qber_from_singulars(arr.sv1, arr.sv2)
            osca = keyrate_osca(q)
            ca, defined = keyrate_ca_arrays(q, arr.chsh)
            violates = arr.chsh > 2.0 + BELL_TOL
            allow = violates if config.security_counting_rule == "require_chsh" else np.ones_like(violates)
            for i in range(len(idx)):
                rows.append({
                    "rank": rank,
                    "sample_index": int(idx[i]),
                    "negativity": float(arr.negativity[i]),
                    "log_negativity": float(arr.log_negativity[i]),
                    "chsh": float(arr.chsh[i]),
                    "qber": float(q[i]),
                    "osca_raw": float(osca[i]),
                    "ca_raw": float(ca[i]) if defined[i] else None,
                    "positive_osca": bool((osca[i] > 0) and allow[i]),
                    "positive_ca": bool(defined[i] and ca[i] > 0 and allow[i]),
                })
        written.append(write_records(Path(out_dir) / f"raw_samples_r{rank}",
                                     RAW_SAMPLE_COLUMNS, rows, fmt))
    return written


def cmd_families(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    if args.family == "pure":
        rows = families.sweep_pure(args.attack, args.step)
        columns = FAMILY_COLUMNS
        findings = None
    elif args.family == "werner":
        rows = families.sweep_werner(args.attack, args.step)
        columns = FAMILY_COLUMNS
        findings = None
    else:
        rows, findings = families.sweep_rank2(args.attack, args.step)
        columns = FAMILY_RANK2_COLUMNS
    path = write_records(out_dir / f"family_{args.family}_{args.attack}", columns, rows, args.format)
    print(f"wrote {path}", file=sys.stderr)
    finite = [r["abs_diff"] for r in rows if r["abs_diff"] is not None]
    if finite:
        print(f"max |closed - pipeline| over sweep: {max(finite):.3e}", file=sys.stderr)
    if findings is not None:
        fpath = out_dir / f"family_rank2_{args.attack}_findings.json"
        fpath.write_text(json.dumps(json_ready(findings.__dict__), indent=1) + "\n",
                         encoding="utf-8")
        print(f"wrote {fpath}", file=sys.stderr)
        for note in findings.notes:
            print(f"finding: {note}", file=sys.stderr)
    return EXIT_OK


def cmd_envelope(args) -> int:
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows = []
    summary = []
    for rank in args.ranks:
        samples = collect_envelope_samples(
            rank, args.seed, args.attack, samples=args.samples
        )
        for i in range(samples.n_positive):
            rows.append({
                "rank": rank,
                "negativity": float(samples.negativity[i]),
                "r_state": float(samples.rate[i]),
                "r_pure_bound": float(samples.r_pure[i]),
                "r_werner_bound": float(samples.r_werner[i]),
                "inside": bool(samples.inside[i]),
            })
        n_pos = samples.n_positive
        ge01 = int((samples.rate >= 0.1).sum())
        summary.append({
            "rank": rank,
            "attack": args.attack,
            "n_examined": samples.n_examined,
            "n_key_positive": n_pos,
            "inside_fraction": samples.inside_fraction,
            "rate_ge_0.1_over_positive": (ge01 / n_pos) if n_pos else None,
            "rate_ge_0.1_over_all": ge01 / samples.n_examined,
        })
    path = write_records(out_dir / f"envelope_points_{args.attack}", ENVELOPE_COLUMNS,
                         rows, args.format)
    spath = out_dir / f"envelope_summary_{args.attack}.json"
    spath.write_text(json.dumps(json_ready(summary), indent=1) + "\n", encoding="utf-8")
    for entry in summary:
        print(
            f"rank {entry['rank']}: {entry['n_key_positive']} key-positive of "
            f"{entry['n_examined']}, inside fraction {entry['inside_fraction']}",
            file=sys.stderr,
        )
    print(f"wrote {path}", file=sys.stderr)
    print(f"wrote {spath}", file=sys.stderr)
    return EXIT_OK


def cmd_verify(args) -> int:
    t0 = time.perf_counter()
    results = verify.run_all(quick=args.quick)
    status = EXIT_OK
    for res in results:
        print(f"[{'PASS' if res.ok else 'FAIL'}] {res.suite}: {res.detail}")
        if not res.ok:
            status = EXIT_VERIFY_FAILED
    print(f"verify finished in {time.perf_counter() - t0:.1f}s")
    return status


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code) if exc.code is not None else EXIT_BAD_FLAGS
    handlers = {
        "campaign": cmd_campaign,
        "families": cmd_families,
        "envelope": cmd_envelope,
        "verify": cmd_verify,
    }
    try:
        return handlers[args.command](args)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_FLAGS
    except NumericIntegrityError as exc:
        print(f"numeric integrity failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
