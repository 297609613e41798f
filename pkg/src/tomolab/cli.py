"""Command-line front end: run, table, verify, sample.

Every output file embeds the fully resolved configuration, contains no
timestamps, and is therefore byte-identical across repeated runs with
the same flags (the TOMOLAB_THREADS worker cap cannot change results).
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from . import serialize
from .analysis import run_trials, sample_record, summary_table
from .estimators import BallPolicy
from .sampling import ProtocolTag, SeedSpec
from .verify import run_suites


class ConfigError(ValueError):
    """Invalid command-line configuration (exit code 2)."""


def _parse_triple(text: str, flag: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise ConfigError(f"{flag} expects three comma-separated numbers")
    try:
        return tuple(float(p) for p in parts)  # type: ignore[return-value]
    except ValueError as exc:
        raise ConfigError(f"could not parse {flag}: {exc}") from None


def _resolve_r0(args) -> np.ndarray:
    if args.r0 is not None and args.r0_sph is not None:
        raise ConfigError("give either --r0 or --r0-sph, not both")
    if args.r0_sph is not None:
        radius, polar, azimuth = _parse_triple(args.r0_sph, "--r0-sph")
        return np.array(
            [
                radius * np.sin(polar) * np.cos(azimuth),
                radius * np.sin(polar) * np.sin(azimuth),
                radius * np.cos(polar),
            ]
        )
    if args.r0 is None:
        raise ConfigError("a state is required (--r0 or --r0-sph)")
    return np.array(_parse_triple(args.r0, "--r0"))


def _resolve_allocation(args) -> tuple[int, int, int] | None:
    if getattr(args, "alloc", None) is None:
        return None
    parts = args.alloc.split(",")
    if len(parts) != 3:
        raise ConfigError("--alloc expects three comma-separated integers")
    try:
        return tuple(int(p) for p in parts)  # type: ignore[return-value]
    except ValueError:
        raise ConfigError("--alloc entries must be integers") from None


def _config_payload(args, r0, protocol=None, extra=None) -> dict:
    payload = {
        "r0": [float(v) for v in r0],
        "shots": args.shots,
        "seed": args.seed,
    }
    if protocol is not None:
        payload["protocol"] = protocol
    if hasattr(args, "trials"):
        payload["trials"] = args.trials
    if hasattr(args, "policy"):
        payload["policy"] = args.policy
    if extra:
        payload.update(extra)
    return payload


def _write(path: str, text: str):
    Path(path).write_text(text, encoding="utf-8")


def cmd_run(args) -> int:
    r0 = _resolve_r0(args)
    tag = ProtocolTag(args.protocol)
    policy = BallPolicy(args.policy)
    allocation = _resolve_allocation(args)
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.shots < 1:
        raise ConfigError("--shots must be at least 1")
    stats = run_trials(
        tag,
        r0,
        args.shots,
        args.trials,
        SeedSpec(args.seed),
        policy=policy,
        allocation=allocation,
    )
    if args.format == "json":
        payload = {
            "config": _config_payload(
                args, r0, tag.value,
                extra={"allocation": list(allocation) if allocation else None},
            ),
            "stats": serialize.stats_to_dict(stats),
        }
        _write(args.out, serialize.dumps(payload))
    else:
        _write(args.out, serialize.run_csv(tag.value, args.shots, stats))
    return 0


def cmd_table(args) -> int:
    r0 = _resolve_r0(args)
    if args.trials < 1:
        raise ConfigError("--trials must be at least 1")
    if args.shots < 1 or args.shots % 3 != 0:
        raise ConfigError("--shots must be a positive multiple of 3 for the table")
    rows = summary_table(
        r0,
        args.shots,
        args.trials,
        SeedSpec(args.seed),
        policy=BallPolicy(args.policy),
    )
    if args.format == "json":
        payload = {
            "config": _config_payload(args, r0),
            "rows": [serialize.table_row_to_dict(row, args.shots) for row in rows],
        }
        _write(args.out, serialize.dumps(payload))
    else:
        _write(args.out, serialize.table_csv(rows, args.shots))
    return 0


def cmd_verify(args) -> int:
    results = run_suites(args.level)
    for result in results:
        status = "pass" if result.passed else "FAIL"
        print(f"{result.name:<22} {status}  ({result.detail})")
    if all(result.passed for result in results):
        return 0
    failing = ", ".join(r.name for r in results if not r.passed)
    print(f"failing suites: {failing}", file=sys.stderr)
    return 1


def cmd_sample(args) -> int:
    r0 = _resolve_r0(args)
    tag = ProtocolTag(args.protocol)
    if args.shots < 1:
        raise ConfigError("--shots must be at least 1")
    if args.alpha is not None:
        if tag not in (ProtocolTag.CONTINUOUS_MOMENT, ProtocolTag.CONTINUOUS_ML):
            raise ConfigError("--alpha applies to continuous protocols only")
        if not (0.0 <= args.alpha <= 1.0):
            raise ConfigError("--alpha must be in [0, 1]")
    allocation = _resolve_allocation(args)
    if tag in (ProtocolTag.CONTINUOUS_MOMENT, ProtocolTag.CONTINUOUS_ML):
        from .sampling import sample_continuous

        record = sample_continuous(
            r0, args.shots, SeedSpec(args.seed),
            alpha=1.0 if args.alpha is None else args.alpha, tag=tag,
        )
    else:
        record = sample_record(
            tag, r0, args.shots, SeedSpec(args.seed), allocation=allocation
        )
    payload = {
        "config": _config_payload(
            args, r0, tag.value,
            extra={
                "alpha": args.alpha,
                "allocation": list(allocation) if allocation else None,
            },
        ),
        "record": serialize.record_to_dict(record),
    }
    _write(args.out, serialize.dumps(payload))
    return 0


def _add_state_options(parser: argparse.ArgumentParser):
    parser.add_argument("--r0", help="state as x,y,z")
    parser.add_argument(
        "--r0-sph", dest="r0_sph", help="state as radius,polar,azimuth (radians)"
    )
    parser.add_argument("--shots", type=int, required=True, help="shots per trial")
    parser.add_argument("--seed", type=int, default=0, help="master seed")
    parser.add_argument("--out", required=True, help="output file path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tomolab",
        description="Qubit tomography protocols: simulation and verification.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    protocols = [tag.value for tag in ProtocolTag]

    run = sub.add_parser("run", help="Monte Carlo trials for one protocol")
    _add_state_options(run)
    run.add_argument("--protocol", choices=protocols, required=True)
    run.add_argument("--trials", type=int, required=True)
    run.add_argument(
        "--policy",
        choices=[p.value for p in BallPolicy],
        default=BallPolicy.UNRESTRICTED.value,
    )
    run.add_argument("--format", choices=["json", "csv"], default="json")
    run.add_argument("--alloc", help="projective per-axis shots as nx,ny,nz")
    run.set_defaults(handler=cmd_run)

    table = sub.add_parser("table", help="five-protocol comparison table")
    _add_state_options(table)
    table.add_argument("--trials", type=int, required=True)
    table.add_argument(
        "--policy",
        choices=[p.value for p in BallPolicy],
        default=BallPolicy.UNRESTRICTED.value,
    )
    table.add_argument("--format", choices=["json", "csv"], default="csv")
    table.set_defaults(handler=cmd_table)

    verify = sub.add_parser("verify", help="run the invariant suites")
    verify.add_argument("level", choices=["quick", "full"])
    verify.set_defaults(handler=cmd_verify)

    sample = sub.add_parser("sample", help="dump one raw measurement record")
    _add_state_options(sample)
    sample.add_argument("--protocol", choices=protocols, required=True)
    sample.add_argument("--alpha", type=float, help="smearing for continuous sampling")
    sample.add_argument("--alloc", help="projective per-axis shots as nx,ny,nz")
    sample.set_defaults(handler=cmd_sample)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.handler(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failure
        print(f"failure: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    raise SystemExit(main())
