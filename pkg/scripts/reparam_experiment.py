"""Gap between c(s) and c_e(h(s)) as the rk4 step shrinks."""
import argparse
import csv
from pathlib import Path

from jmreeb.dynamics import hamiltonian_field, hamiltonian_flow, integrate, reparametrize
from jmreeb.models import get_system

CASES = {"oscillator": 1.0, "heavy-top": 2.0, "pendula": 2.0}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=1.0)
    ap.add_argument("--steps", type=float, nargs="+", default=[1e-2, 3e-3, 1e-3, 3e-4, 1e-4])
    ap.add_argument("--out", type=Path, default=Path("results/reparam_gap.csv"))
    args = ap.parse_args()

    rows = []
    for name, e in CASES.items():
        b = get_system(name)
        X = hamiltonian_flow(hamiltonian_field(b.metric, b.potential), b.model)
        for step in args.steps:
            c = integrate(X, b.initial, (0.0, args.t), "rk4", step, base_dim=b.base_dim)
            rep = reparametrize(c, b.model, b.metric, b.potential, e, step=step)
            rows.append([name, e, step, rep.gap, rep.h[-1], rep.increasing])
            print(f"{name:11s} step {step:8.1e}  gap {rep.gap:.3e}  h(T) {rep.h[-1]:.6f}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["system", "energy", "step", "gap", "h_end", "h_increasing"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
