"""Drift of H and the Casimirs over long runs, rk4 at several steps and rk45."""
import argparse
import csv
from pathlib import Path

import numpy as np

from jmreeb.dynamics import hamiltonian_field, hamiltonian_flow, integrate
from jmreeb.models import get_system


def drifts(b, method, step, t_final):
    H = hamiltonian_field(b.metric, b.potential)
    conserved = {q.name: q.fn for q in b.quantities if q.conserved and q.name != "H"}
    traj = integrate(hamiltonian_flow(H, b.model), b.initial, (0.0, t_final), method, step,
                     base_dim=b.base_dim, hamiltonian=H, conserved=conserved)
    out = {"H": float(np.max(np.abs(traj.H - traj.H[0])))}
    out.update({k: float(np.max(np.abs(v - v[0]))) for k, v in traj.quantities.items()})
    return out


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--t", type=float, default=10.0)
    ap.add_argument("--systems", nargs="+", default=["rigid-body", "heavy-top", "pendula"])
    ap.add_argument("--out", type=Path, default=Path("results/conservation.csv"))
    args = ap.parse_args()

    runs = [("rk4", 1e-2), ("rk4", 1e-3), ("rk45", 1e-2)]
    rows = []
    for name in args.systems:
        b = get_system(name)
        for method, step in runs:
            for quantity, value in drifts(b, method, step, args.t).items():
                rows.append([name, method, step, quantity, value])
                print(f"{name:11s} {method:5s} {step:7.0e}  {quantity:10s} drift {value:.3e}")

    args.out.parent.mkdir(parents=True, exist_ok=True)
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["system", "method", "step", "quantity", "max_drift"])
        w.writerows(rows)


if __name__ == "__main__":
    main()
