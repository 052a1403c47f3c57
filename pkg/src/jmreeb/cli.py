"""Command-line entry point: simulate, verify, reparam-check, bracket-table.

Settings come from an optional YAML file (``--config``) with flag overrides.
Exit codes: 0 all checks pass, 1 a check failed, 2 bad configuration or a
point outside the model's domain.
"""
from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np
import yaml

from .algebroid import AlgebroidModel, assemble_poisson_matrix
from .dynamics import (
    MetricModel,
    Potential,
    energy_guard,
    hamiltonian_field,
    hamiltonian_flow,
    integrate,
    reparametrize,
    sphere_projection,
)
from .errors import ConfigError, DomainError
from .jacobi import sphere_membership
from .models import Quantity, SystemBundle, get_system
from .verification import verify_system

OUTPUT_DIR_ENV = "JMREEB_OUTPUT_DIR"
DEFAULT_SEED = 42
REPARAM_TOL = 1e-5

TOP_KEYS = {"system", "params", "inline", "energy", "initial", "integrator", "verify", "output"}
SECTION_KEYS = {
    "initial": {"q", "y"},
    "integrator": {"method", "step", "t_final", "abs_tol", "rel_tol", "stride"},
    "verify": {"samples", "fd_step", "tolerance", "seed"},
    "output": {"dir"},
    "inline": {"name", "anchor", "structure", "cometric", "energy"},
}


@dataclass
class IntegratorSettings:
    method: str = "rk4"
    step: float | None = None
    t_final: float | None = None
    abs_tol: float = 1e-10
    rel_tol: float = 1e-9
    stride: int = 1


@dataclass
class VerifySettings:
    samples: int = 100
    fd_step: float | None = None
    tolerance: float | None = None
    seed: int = DEFAULT_SEED


@dataclass
class RunConfig:
    system: str = "rigid-body"
    params: dict = field(default_factory=dict)
    inline: dict | None = None
    energy: float | None = None
    initial_q: list | None = None
    initial_y: list | None = None
    integrator: IntegratorSettings = field(default_factory=IntegratorSettings)
    verify: VerifySettings = field(default_factory=VerifySettings)
    output_dir: str | None = None
    out: str | None = None

    def resolved_output_dir(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_DIR_ENV) or ".")


# -- config loading --------------------------------------------------------

def _floats(value, what):
    if isinstance(value, str):
        value = [v for v in value.replace(",", " ").split()]
    try:
        return [float(v) for v in np.atleast_1d(value)]
    except (TypeError, ValueError):
        raise ConfigError(f"{what}: expected numbers, got {value!r}") from None


def _check_keys(data, allowed, where):
    unknown = set(data) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in {where}: {sorted(unknown)}")


def config_from_mapping(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config file must contain a mapping")
    _check_keys(data, TOP_KEYS, "config")
    for section, allowed in SECTION_KEYS.items():
        sub = data.get(section)
        if sub is None:
            continue
        if not isinstance(sub, dict):
            raise ConfigError(f"{section} must be a mapping")
        _check_keys(sub, allowed, section)

    cfg = RunConfig()
    if "inline" in data:
        cfg.inline = dict(data["inline"])
        cfg.system = "inline"
    if "system" in data:
        cfg.system = str(data["system"])
    cfg.params = dict(data.get("params") or {})
    if data.get("energy") is not None:
        cfg.energy = float(data["energy"])
    init = data.get("initial") or {}
    if "q" in init:
        cfg.initial_q = _floats(init["q"], "initial.q")
    if "y" in init:
        cfg.initial_y = _floats(init["y"], "initial.y")
    integ = data.get("integrator") or {}
    cfg.integrator = IntegratorSettings(**{**IntegratorSettings().__dict__, **integ})
    ver = data.get("verify") or {}
    cfg.verify = VerifySettings(**{**VerifySettings().__dict__, **ver})
    cfg.output_dir = (data.get("output") or {}).get("dir")
    return cfg


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = yaml.safe_load(fh) or {}
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from None
    return config_from_mapping(data)


def apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.system is not None:
        cfg.system = args.system
        if args.system != "inline":
            cfg.inline = None
    for key, value in args.param or []:
        cfg.params[key] = value
    if args.I is not None:
        cfg.params["I"] = _floats(args.I, "--I")
    if args.mgl is not None:
        cfg.params["mgl"] = args.mgl
    if args.a is not None:
        cfg.params["a"] = _floats(args.a, "--a")
    if args.energy is not None:
        cfg.energy = args.energy
    if args.q0 is not None:
        cfg.initial_q = _floats(args.q0, "--q0")
    if args.y0 is not None:
        cfg.initial_y = _floats(args.y0, "--y0")
    it = cfg.integrator
    for attr, value in (("method", args.method), ("step", args.step), ("t_final", args.t),
                        ("stride", args.stride)):
        if value is not None:
            setattr(it, attr, value)
    ver = cfg.verify
    for attr, value in (("samples", args.samples), ("seed", args.seed),
                        ("fd_step", args.fd_step), ("tolerance", args.tolerance)):
        if value is not None:
            setattr(ver, attr, value)
    if args.output_dir is not None:
        cfg.output_dir = args.output_dir
    if args.out is not None:
        cfg.out = args.out
    validate(cfg)
    return cfg


def validate(cfg: RunConfig):
    it, ver = cfg.integrator, cfg.verify
    if it.method not in ("rk4", "rk45"):
        raise ConfigError(f"integrator.method must be rk4 or rk45, got {it.method!r}")
    if it.step is not None and not float(it.step) > 0:
        raise ConfigError("integrator.step must be positive")
    if it.t_final is not None and not float(it.t_final) >= 0:
        raise ConfigError("integrator.t_final must be non-negative")
    if int(it.stride) < 1:
        raise ConfigError("integrator.stride must be >= 1")
    if int(ver.samples) < 1:
        raise ConfigError("verify.samples must be >= 1")
    if ver.fd_step is not None and not float(ver.fd_step) > 0:
        raise ConfigError("verify.fd_step must be positive")
    if ver.tolerance is not None and not float(ver.tolerance) > 0:
        raise ConfigError("verify.tolerance must be positive")


# -- systems ---------------------------------------------------------------

def _structure_table(spec, n):
    """Full n x n x n array, or entries [a, b, c, value] meaning C^c_ab (1-based)."""
    arr = np.array(spec, dtype=float)
    if arr.shape == (n, n, n):
        if np.max(np.abs(arr + arr.transpose(1, 0, 2)), initial=0.0) > 0:
            raise ConfigError("structure table must be antisymmetric in its first two indices")
        return arr
    if arr.size == 0:
        return np.zeros((n, n, n))
    if arr.ndim != 2 or arr.shape[1] != 4:
        raise ConfigError("structure must be an n x n x n table or a list of [a, b, c, value]")
    C = np.zeros((n, n, n))
    for a, b, c, v in arr:
        a, b, c = int(a) - 1, int(b) - 1, int(c) - 1
        if not (0 <= a < n and 0 <= b < n and 0 <= c < n) or a == b:
            raise ConfigError(f"bad structure entry {[a + 1, b + 1, c + 1, v]}")
        C[a, b, c] += v
        C[b, a, c] -= v
    return C


def inline_bundle(spec: dict, energy=None) -> SystemBundle:
    """System with constant anchor, structure constants and cometric."""
    _check_keys(spec, SECTION_KEYS["inline"], "inline")
    if "cometric" in spec:
        G = np.array(spec["cometric"], dtype=float)
        G = np.diag(G) if G.ndim == 1 else G
        n = G.shape[0]
    elif "structure" in spec and np.array(spec["structure"]).ndim == 3:
        n = np.array(spec["structure"]).shape[0]
        G = np.eye(n)
    else:
        raise ConfigError("inline system needs a cometric (or a full structure table)")
    if G.shape != (n, n) or not np.allclose(G, G.T):
        raise ConfigError("cometric must be a symmetric n x n matrix")
    rho = np.array(spec.get("anchor", []), dtype=float).reshape(-1, n) if spec.get("anchor") else np.zeros((0, n))
    C = _structure_table(spec.get("structure", []), n)
    name = str(spec.get("name", "inline"))
    metric = MetricModel.constant(G, name=f"{name}-cometric")
    if not metric.is_positive_definite(np.zeros(rho.shape[0])):
        raise ConfigError("cometric must be positive definite")
    model = AlgebroidModel.constant(rho, C, name=name)
    e = float(energy if energy is not None else spec.get("energy", 0.5))
    m = rho.shape[0]
    V = Potential.zero(m)
    z0 = np.concatenate([np.zeros(m), np.ones(n)])
    z0 = sphere_projection(z0, metric, V, e)
    quantities = (Quantity("H", lambda z: 0.5 * float(z[m:] @ G @ z[m:])),)
    return SystemBundle(name, model, metric, V, e, z0, quantities,
                        params={"anchor": rho.tolist(), "cometric": G.tolist()})


def build_bundle(cfg: RunConfig) -> SystemBundle:
    if cfg.system == "inline":
        if not cfg.inline:
            raise ConfigError("system 'inline' needs an inline section")
        bundle = inline_bundle(cfg.inline, cfg.energy)
    else:
        bundle = get_system(cfg.system, cfg.params)
    if cfg.energy is not None:
        bundle = replace(bundle, energy=float(cfg.energy))
    return bundle


def initial_point(cfg: RunConfig, bundle: SystemBundle) -> np.ndarray:
    m, n = bundle.base_dim, bundle.fiber_dim
    q = bundle.initial[:m] if cfg.initial_q is None else np.asarray(cfg.initial_q, float)
    y = bundle.initial[m:] if cfg.initial_y is None else np.asarray(cfg.initial_y, float)
    if q.size != m:
        raise ConfigError(f"{bundle.name}: initial q needs {m} entries, got {q.size}")
    if y.size != n:
        raise ConfigError(f"{bundle.name}: initial y needs {n} entries, got {y.size}")
    z = np.concatenate([q, y])
    bundle.model.check(z)
    return z


def coordinate_labels(bundle: SystemBundle):
    return ([f"q_{i + 1}" for i in range(bundle.base_dim)]
            + [f"y_{a + 1}" for a in range(bundle.fiber_dim)])


# -- output ----------------------------------------------------------------

def fmt(x) -> str:
    return format(float(x) + 0.0, ".17g")


def stable_json(obj, indent=2, _level=0) -> str:
    """JSON with sorted keys and floats fixed to 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {stable_json(obj[k], indent, _level + 1)}"
                 for k in sorted(obj, key=str)]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(obj)
        if not seq:
            return "[]"
        if all(not isinstance(v, (dict, list, tuple, np.ndarray)) for v in seq):
            return "[" + ", ".join(stable_json(v, indent, _level + 1) for v in seq) + "]"
        return "[\n" + ",\n".join(pad + stable_json(v, indent, _level + 1) for v in seq) + "\n" + end + "]"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt(obj) if math.isfinite(obj) else "null"
    return json.dumps(str(obj))


def write_csv(path: Path, header, rows):
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def emit_json(payload, path: Path | None):
    text = stable_json(payload) + "\n"
    if path is not None:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    sys.stdout.write(text)


def _target(cfg: RunConfig, default_name: str) -> Path:
    return Path(cfg.out) if cfg.out else cfg.resolved_output_dir() / default_name


# -- commands --------------------------------------------------------------

def cmd_simulate(cfg: RunConfig) -> int:
    bundle = build_bundle(cfg)
    z0 = initial_point(cfg, bundle)
    on_level = cfg.energy is not None
    if on_level:
        z0 = sphere_projection(z0, bundle.metric, bundle.potential, bundle.energy)
    it = cfg.integrator
    step = float(it.step or 1e-3)
    t_final = float(10.0 if it.t_final is None else it.t_final)
    H = hamiltonian_field(bundle.metric, bundle.potential)
    others = {q.name: q.fn for q in bundle.quantities if q.name != "H"}
    traj = integrate(hamiltonian_flow(H, bundle.model), z0, (0.0, t_final), it.method, step,
                     base_dim=bundle.base_dim, hamiltonian=H, conserved=others,
                     stride=int(it.stride), abs_tol=it.abs_tol, rel_tol=it.rel_tol)
    header = ["s", *coordinate_labels(bundle), "H", "dH", *others]
    cols = [traj.s[:, None], traj.z, traj.H[:, None], (traj.H - traj.H[0])[:, None]]
    cols += [traj.quantities[k][:, None] for k in others]
    if on_level:
        header.append("sphere_residual")
        cols.append(np.array([[sphere_membership(z, bundle.metric, bundle.potential, bundle.energy)]
                              for z in traj.z]))
    path = _target(cfg, f"{bundle.name}_trajectory.csv")
    write_csv(path, header, np.hstack(cols))
    summary = {
        "system": bundle.name,
        "file": str(path),
        "rows": len(traj),
        "t_final": float(traj.s[-1]),
        "exit_reason": traj.exit_reason,
        "max_abs_dH": float(np.max(np.abs(traj.H - traj.H[0]))),
    }
    sys.stdout.write(stable_json(summary) + "\n")
    if traj.truncated:
        print(f"error: integration stopped early ({traj.exit_reason})", file=sys.stderr)
        return 2
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    bundle = build_bundle(cfg)
    ver = cfg.verify
    report = verify_system(bundle, int(ver.samples), int(ver.seed),
                           None if ver.fd_step is None else float(ver.fd_step),
                           None if ver.tolerance is None else float(ver.tolerance))
    path = None
    if cfg.out:
        path = Path(cfg.out)
    elif cfg.output_dir or os.environ.get(OUTPUT_DIR_ENV):
        path = cfg.resolved_output_dir() / f"{bundle.name}_verify.json"
    emit_json(report, path)
    for check in report["checks"]:
        if not check["passed"]:
            print(f"FAIL {check['name']}: max {check['max_residual']:.3e} >= {check['tolerance']:.0e}",
                  file=sys.stderr)
    return 0 if report["all_passed"] else 1


def cmd_reparam_check(cfg: RunConfig) -> int:
    bundle = build_bundle(cfg)
    e = bundle.energy
    z0 = sphere_projection(initial_point(cfg, bundle), bundle.metric, bundle.potential, e)
    it = cfg.integrator
    step = float(it.step or 1e-4)
    t_final = float(1.0 if it.t_final is None else it.t_final)
    H = hamiltonian_field(bundle.metric, bundle.potential)
    m = bundle.base_dim
    traj = integrate(hamiltonian_flow(H, bundle.model), z0, (0.0, t_final), "rk4", step,
                     base_dim=m, guard=energy_guard(bundle.potential, e, m))
    if traj.truncated:
        raise DomainError(f"trajectory left U_e before s = {t_final} ({traj.exit_reason})")
    rep = reparametrize(traj, bundle.model, bundle.metric, bundle.potential, e, step)

    out_dir = Path(cfg.out).parent if cfg.out else cfg.resolved_output_dir()
    labels = coordinate_labels(bundle)
    c_path = out_dir / f"{bundle.name}_c.csv"
    ce_path = out_dir / f"{bundle.name}_ce.csv"
    write_csv(c_path, ["s", *labels], np.hstack([rep.s[:, None], rep.c]))
    write_csv(ce_path, ["s", "h", *labels], np.hstack([rep.s[:, None], rep.h[:, None], rep.c_e]))
    passed = bool(rep.gap < REPARAM_TOL and rep.increasing and rep.h[0] == 0.0)
    report = {
        "system": bundle.name,
        "energy": e,
        "step": step,
        "t_final": t_final,
        "gap": rep.gap,
        "tolerance": REPARAM_TOL,
        "h_start": float(rep.h[0]),
        "h_end": float(rep.h[-1]),
        "h_strictly_increasing": rep.increasing,
        "max_abs_h_minus_s": float(np.max(np.abs(rep.h - rep.s))),
        "files": {"c": str(c_path), "c_e": str(ce_path)},
        "passed": passed,
    }
    emit_json(report, Path(cfg.out) if cfg.out else out_dir / f"{bundle.name}_reparam.json")
    return 0 if passed else 1


def cmd_bracket_table(cfg: RunConfig, style="text") -> int:
    bundle = build_bundle(cfg)
    z = initial_point(cfg, bundle)
    P = assemble_poisson_matrix(bundle.model, z)
    labels = coordinate_labels(bundle)
    N = len(labels)
    pairs = {f"{{{labels[a]},{labels[b]}}}": float(P[a, b]) for a in range(N) for b in range(a + 1, N)}
    if style == "json":
        payload = {"system": bundle.name, "point": z, "labels": labels,
                   "matrix": P, "pairs": pairs}
        emit_json(payload, Path(cfg.out) if cfg.out else None)
        return 0
    width = max(len(k) for k in pairs)
    lines = [f"# {bundle.name} at z = ({', '.join(fmt(v) for v in z)})"]
    lines += [f"{k.ljust(width)} = {fmt(v)}" for k, v in pairs.items()]
    text = "\n".join(lines) + "\n"
    if cfg.out:
        Path(cfg.out).parent.mkdir(parents=True, exist_ok=True)
        Path(cfg.out).write_text(text)
    sys.stdout.write(text)
    return 0


# -- argument parsing ------------------------------------------------------

def _key_value(text):
    if "=" not in text:
        raise argparse.ArgumentTypeError("expected KEY=VALUE")
    key, value = text.split("=", 1)
    return key.strip(), yaml.safe_load(value)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="YAML config file")
    common.add_argument("--system", help="bundled system name or 'inline'")
    common.add_argument("--param", action="append", type=_key_value, metavar="KEY=VALUE",
                        help="system parameter (repeatable)")
    common.add_argument("--I", help="principal moments, e.g. 1,2,3")
    common.add_argument("--mgl", type=float, help="heavy top m*g*l")
    common.add_argument("--a", help="heavy top unit vector, e.g. 0,0,1")
    common.add_argument("--energy", "--e", dest="energy", type=float, help="energy level e")
    common.add_argument("--q0", help="initial base point")
    common.add_argument("--y0", help="initial fiber point")
    common.add_argument("--method", choices=["rk4", "rk45"])
    common.add_argument("--t", type=float, help="final time")
    common.add_argument("--step", type=float, help="integrator step")
    common.add_argument("--stride", type=int, help="keep every k-th step")
    common.add_argument("--samples", type=int, help="verify sample points")
    common.add_argument("--seed", type=int, help="verify random seed")
    common.add_argument("--fd-step", type=float, help="finite-difference step")
    common.add_argument("--tolerance", type=float, help="override FD-limited tolerances")
    common.add_argument("--output-dir", help=f"output directory (default ${OUTPUT_DIR_ENV} or .)")
    common.add_argument("--out", help="output file")

    parser = argparse.ArgumentParser(prog="jmreeb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="integrate X_H and write a CSV trajectory")
    sub.add_parser("verify", parents=[common], help="run the invariant sweep, JSON report")
    sub.add_parser("reparam-check", parents=[common],
                   help="compare X_H and Jacobi-metric trajectories on an energy level")
    bt = sub.add_parser("bracket-table", parents=[common], help="coordinate brackets at a point")
    bt.add_argument("--format", choices=["text", "json"], default="text")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else RunConfig()
        cfg = apply_overrides(cfg, args)
        if args.command == "simulate":
            return cmd_simulate(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "reparam-check":
            return cmd_reparam_check(cfg)
        return cmd_bracket_table(cfg, args.format)
    except ValueError as exc:
        # ConfigError, DomainError and fiber degeneracy all land here
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
