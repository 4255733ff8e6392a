"""``sync`` command-line entry point."""

from __future__ import annotations

import argparse
import json
import sys

from .errors import ConfigError, SyncError
from .scenario import MODES, parse_config, run_scenario

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERIC = 3


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="sync",
        description="Cross-layer clock skew estimation and one-timestamp synchronization simulator.",
    )
    p.add_argument("mode", choices=MODES)
    p.add_argument("--config", help="flat JSON scenario file; flags override its values")
    p.add_argument("--skew", type=float, help="injected receiver skew (s < 0: receiver fast)")
    p.add_argument("--symbols", type=int, dest="n_symbols", help="PAM symbols per PHY exchange")
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="output directory (default: current directory)")
    return p


def _fail(code: int, kind: str, message: str, key: str | None = None) -> int:
    err = {"error": kind, "message": message}
    if key is not None:
        err["key"] = key
    print(json.dumps(err, sort_keys=True), file=sys.stderr)
    return code


def _attach_negative_numbers(argv: list[str]) -> list[str]:
    # argparse reads "-1.2e-3" as an option flag; bind it to the preceding option
    out: list[str] = []
    for tok in argv:
        if out and out[-1].startswith("--") and "=" not in out[-1] and tok.startswith("-"):
            try:
                float(tok)
            except ValueError:
                pass
            else:
                out[-1] = f"{out[-1]}={tok}"
                continue
        out.append(tok)
    return out


def main(argv: list[str] | None = None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(_attach_negative_numbers(argv))
    overrides = {"mode": args.mode, "skew": args.skew, "n_symbols": args.n_symbols,
                 "seed": args.seed, "out": args.out}
    try:
        cfg = parse_config(args.config, overrides)
    except ConfigError as exc:
        return _fail(EXIT_CONFIG, "config", str(exc), exc.key)
    try:
        summary = run_scenario(cfg)
    except SyncError as exc:
        return _fail(EXIT_NUMERIC, type(exc).__name__, str(exc))
    print(json.dumps(summary, sort_keys=True))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
