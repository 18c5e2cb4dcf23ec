"""Run every shipped config through the CLI and write the results to one directory.

    python3 scripts/reproduce_figures.py --out-dir out
"""
import argparse
import json
import sys
import time
from pathlib import Path

from lagrangian_dimple.cli import main as cli_main

ROOT = Path(__file__).resolve().parents[1]


def main(argv=None) -> int:
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--configs", type=Path, default=ROOT / "configs")
    p.add_argument("--out-dir", type=Path, default=ROOT / "out")
    p.add_argument("--only", nargs="*", help="config stems to run (default: all)")
    args = p.parse_args(argv)

    failed = []
    for cfg in sorted(args.configs.glob("*.json")):
        if args.only and cfg.stem not in args.only:
            continue
        command = json.loads(cfg.read_text())["command"]
        suffix = ".json" if command in ("classify", "validate") else ".csv"
        out = args.out_dir / (cfg.stem + suffix)
        t0 = time.perf_counter()
        code = cli_main([command, "--config", str(cfg), "--out", str(out)])
        print(f"{cfg.stem:<32} {command:<9} exit={code} {time.perf_counter() - t0:6.2f}s -> {out}")
        if code:
            failed.append(cfg.stem)
    if failed:
        print("failed: " + ", ".join(failed), file=sys.stderr)
    return 1 if failed else 0


if __name__ == "__main__":
    raise SystemExit(main())
