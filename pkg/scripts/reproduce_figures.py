"""Run every protocol in protocols/ through the command-line front end.

    python scripts/reproduce_figures.py [--out results] [--threads 4] [--only fig1_red fig8]
"""
import argparse
import sys
from pathlib import Path

from qubitgp.cli import main as cli_main
from qubitgp.config import load

ROOT = Path(__file__).resolve().parents[1]


def command_for(path: Path) -> str:
    cfg = load(path)
    if cfg.sweep is not None:
        return "sweep"
    if cfg.kernels is not None:
        return "kernels"
    return "phase" if path.stem.endswith("phase") or path.stem.endswith("cell") else "trajectory"


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=ROOT / "results")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--only", nargs="*", help="protocol stems to run")
    args = ap.parse_args()
    status = 0
    for path in sorted((ROOT / "protocols").glob("*.yaml")):
        if args.only and path.stem not in args.only:
            continue
        code = cli_main([command_for(path), "--config", str(path), "--out", str(args.out),
                         "--threads", str(args.threads)])
        if code:
            print(f"{path.name}: exit {code}", file=sys.stderr)
            status = max(status, code)
    return status


if __name__ == "__main__":
    sys.exit(main())
