"""Command-line entry point: ``synfeeder --config region.toml``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from .errors import ConfigError, SynFeederError
from .pipeline import load_config, run_pipeline

EXIT_OK, EXIT_FEEDER_FAILED, EXIT_CONFIG = 0, 1, 2


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 1 << 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="synfeeder", description="Generate synthetic radial distribution feeders.")
    p.add_argument("--config", required=True, type=Path, help="TOML pipeline configuration")
    p.add_argument("--seed", type=_u64, help="global RNG seed (overrides rng_seed in the config)")
    p.add_argument("--substation", action="append", metavar="ID", help="only generate this substation (repeatable)")
    p.add_argument("--out", type=Path, help="output directory (overrides output_dir)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config, rng_seed=args.seed,
                          substation_filter=tuple(args.substation) if args.substation else None)
        if args.out is not None:
            cfg.output_dir = args.out
        results = run_pipeline(cfg)
    except (ConfigError, SynFeederError, OSError) as exc:
        print(f"synfeeder: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    for res in results:
        line = f"{res.substation}: {res.status}"
        if res.summary is not None:
            s = res.summary
            line += f" nodes={s.nodes} min_v={s.min_v_pu:.4f} pruned={s.pruned_nodes} laterals={s.laterals}"
        if res.error:
            line += f" ({res.error})"
        print(line)
    return EXIT_FEEDER_FAILED if any(r.status != "ok" for r in results) else EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
