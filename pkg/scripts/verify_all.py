"""Run the residual sweep on every bundled system and write one JSON report each."""
import argparse
from pathlib import Path

from jmreeb.cli import stable_json
from jmreeb.models import SYSTEMS, get_system
from jmreeb.verification import verify_system


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--samples", type=int, default=100)
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--out", type=Path, default=Path("results/verify"))
    args = ap.parse_args()

    args.out.mkdir(parents=True, exist_ok=True)
    failures = 0
    for name in sorted(SYSTEMS):
        report = verify_system(get_system(name), samples=args.samples, seed=args.seed)
        (args.out / f"{name}.json").write_text(stable_json(report) + "\n")
        worst = max(report["checks"], key=lambda c: c["max_residual"] / c["tolerance"])
        status = "pass" if report["all_passed"] else "FAIL"
        print(f"{name:18s} {status}  {len(report['checks'])} checks, "
              f"tightest {worst['name']} = {worst['max_residual']:.2e} (tol {worst['tolerance']:g})")
        failures += not report["all_passed"]
    return 1 if failures else 0


if __name__ == "__main__":
    raise SystemExit(main())
