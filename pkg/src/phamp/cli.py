"""Command-line pipeline: solve, globalize, respond, strobe, verify.

Configuration is a flat dotted-key text file (``key = value`` lines,
``#`` comments); command-line flags override file values.  All floats
are printed with 17 significant digits so repeated runs with the same
configuration produce byte-identical artifacts.

Exit codes: 0 success, 2 usage/configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import hashlib
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .globalize import (CoordinateError, GlobalizationConfig, grow_isochron,
                        grow_isostable, grow_slow_leaf)
from .integrate import Flow, IntegrationError
from .models import MODEL_NAMES, get_model
from .response import SingularJacobianError, local_response
from .solver import AccuracyDomain, Parameterization, SolverConfig, solve
from .strobe import (MAP_KINDS, StimulusSpec, StrobePoint, StrobeError,
                     fixed_point, iterate)

__all__ = ["main", "RunConfig"]

_NUMERICAL_ERRORS = (IntegrationError, CoordinateError, StrobeError,
                     SingularJacobianError, FloatingPointError,
                     np.linalg.LinAlgError, RuntimeError)


class UsageError(Exception):
    pass


@dataclass
class RunConfig:
    """Validated bundle of model, solver, globalization and strobe
    settings plus artifact locations."""
    model: str = "rt"
    out: str = "phamp-out"
    cache: str = "phamp-cache"
    solver: SolverConfig = field(default_factory=SolverConfig)
    glob: GlobalizationConfig = field(default_factory=GlobalizationConfig)
    thetas: tuple[float, ...] = (0.0,)
    stim: StimulusSpec | None = None
    map_kind: str = "state"
    iters: int = 80
    index: int = 2
    level: float = 0.0
    sigma: tuple[float, float] = (0.0, 0.0)
    n_theta: int = 64
    do_fixed_point: bool = False

    def validate(self) -> None:
        if self.model not in MODEL_NAMES:
            raise UsageError(f"unknown model {self.model!r}; "
                             f"available: {', '.join(MODEL_NAMES)}")
        if self.map_kind not in MAP_KINDS:
            raise UsageError(f"unknown map kind {self.map_kind!r}; "
                             f"available: {', '.join(MAP_KINDS)}")


# dotted config key -> (target dataclass attribute path, type)
_CONFIG_KEYS = {
    "model": ("model", str),
    "out": ("out", str),
    "cache": ("cache", str),
    "solver.L": ("solver.L", int),
    "solver.n": ("solver.n", int),
    "solver.n_max": ("solver.n_max", int),
    "solver.tail_tol": ("solver.tail_tol", float),
    "solver.e_tol": ("solver.e_tol", float),
    "solver.b1": ("solver.b1", float),
    "solver.b2": ("solver.b2", float),
    "glob.delta_max": ("glob.delta_max", float),
    "glob.max_points": ("glob.max_points", int),
    "glob.max_depth": ("glob.max_depth", int),
    "glob.attach_response": ("glob.attach_response", lambda s: s == "true"),
    "thetas": ("thetas", lambda s: tuple(float(t) for t in s.split(","))),
    "strobe.eps": ("stim.eps", float),
    "strobe.v": ("stim.v", lambda s: tuple(float(t) for t in s.split(","))),
    "strobe.n": ("stim.n", int),
    "strobe.ts": ("stim.t_s", float),
    "strobe.tp": ("stim.t_p", float),
    "strobe.map": ("map_kind", str),
    "strobe.iters": ("iters", int),
}


def read_config_file(path: str) -> dict[str, str]:
    entries: dict[str, str] = {}
    for ln, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected 'key = value'")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _CONFIG_KEYS:
            raise UsageError(f"{path}:{ln}: unknown config key {key!r}")
        entries[key] = value
    return entries


def build_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    entries: dict[str, str] = {}
    if getattr(args, "config", None):
        entries.update(read_config_file(args.config))

    # command-line flags override file values
    flag_map = {
        "model": "model", "out": "out", "cache": "cache",
        "L": "solver.L", "n": "solver.n", "b1": "solver.b1",
        "b2": "solver.b2", "tail_tol": "solver.tail_tol",
        "e_tol": "solver.e_tol", "delta_max": "glob.delta_max",
        "max_points": "glob.max_points", "max_depth": "glob.max_depth",
        "thetas": "thetas", "eps": "strobe.eps", "v": "strobe.v",
        "pulses": "strobe.n", "ts": "strobe.ts", "tp": "strobe.tp",
        "map": "strobe.map", "iters": "strobe.iters",
    }
    for flag, key in flag_map.items():
        val = getattr(args, flag, None)
        if val is not None:
            entries[key] = val if isinstance(val, str) else str(val)

    stim_fields: dict[str, object] = {}
    for key, raw in entries.items():
        path_, conv = _CONFIG_KEYS[key]
        try:
            value = conv(raw)
        except ValueError as err:
            raise UsageError(f"bad value for {key}: {raw!r} ({err})") from None
        if path_.startswith("stim."):
            stim_fields[path_.split(".", 1)[1]] = value
        elif "." in path_:
            owner, attr = path_.split(".", 1)
            setattr(getattr(cfg, owner), attr, value)
        else:
            setattr(cfg, path_, value)

    if stim_fields:
        defaults = {"eps": -0.1, "v": (1.0, 0.0, 0.0), "n": 100,
                    "t_s": 0.001, "t_p": 8.394}
        defaults.update(stim_fields)
        cfg.stim = StimulusSpec(**defaults)

    for attr in ("index", "level", "iters", "n_theta"):
        val = getattr(args, attr, None)
        if val is not None:
            setattr(cfg, attr, val)
    if getattr(args, "sigma", None) is not None:
        parts = [float(t) for t in args.sigma.split(",")]
        if len(parts) != 2:
            raise UsageError("--sigma expects 'sigma1,sigma2'")
        cfg.sigma = (parts[0], parts[1])
    if getattr(args, "fixed_point", False):
        cfg.do_fixed_point = True
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# artifact output
# ---------------------------------------------------------------------------

def _fmt(v: float) -> str:
    return f"{v:.17g}"


def write_grid(path: Path, rows: np.ndarray, comment: str | None = None
               ) -> None:
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    with open(path, "w") as fh:
        fh.write(f"# N={rows.shape[0]} dim={rows.shape[1]}\n")
        if comment:
            fh.write(f"# {comment}\n")
        for row in rows:
            fh.write(" ".join(_fmt(v) for v in row) + "\n")


def write_manifest(out_dir: Path, files: list[Path]) -> Path:
    manifest = out_dir / "manifest.txt"
    with open(manifest, "w") as fh:
        for f in sorted(files):
            digest = hashlib.sha256(f.read_bytes()).hexdigest()
            fh.write(f"{digest}  {f.relative_to(out_dir)}\n")
    return manifest


# ---------------------------------------------------------------------------
# cached solve
# ---------------------------------------------------------------------------

def _cache_dir(cfg: RunConfig) -> Path:
    return Path(cfg.cache) / cfg.model


def cached_solve(cfg: RunConfig, flow: Flow | None = None,
                 verbose: bool = True) -> Parameterization:
    """Load the parameterization from the cache if it passes the
    residual invariant; otherwise solve and store it."""
    model = get_model(cfg.model)
    flow = flow or Flow(model)
    cdir = _cache_dir(cfg)
    if (cdir / "parameterization.json").exists():
        try:
            K = Parameterization.load(cdir, model)
            if _cache_valid(K, cfg):
                if verbose:
                    print(f"[cache] reusing {cdir}")
                return K
            if verbose:
                print(f"[cache] invalid (residual or config), re-solving")
        except Exception as err:
            if verbose:
                print(f"[cache] unreadable ({err}), re-solving")
    K = solve(model, config=cfg.solver, flow=flow)
    cdir.mkdir(parents=True, exist_ok=True)
    K.save(cdir)
    return K


def _cache_valid(K: Parameterization, cfg: RunConfig) -> bool:
    if K.L != cfg.solver.L:
        return False
    r = AccuracyDomain(K).radius(0.0, 0.25 * np.pi)
    for theta in (0.0, 0.3, 0.7):
        e = K.residual(theta, 0.4 * r, 0.4 * r)
        if not np.all(np.isfinite(e)) or np.linalg.norm(e) > K.model.e_tol:
            return False
    return True


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_solve(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    K.save(out)
    files = [p for p in out.rglob("*") if p.is_file() and p.name != "manifest.txt"]
    write_manifest(out, files)
    print(f"model={cfg.model} T={_fmt(K.T)} lambda1={_fmt(K.lam1)} "
          f"lambda2={_fmt(K.lam2)}")
    tail = (float(np.max(K.diagnostics.tail))
            if K.diagnostics is not None else float("nan"))
    print(f"L={K.L} N={K.n} max_tail={_fmt(tail)}")
    print(f"artifacts written to {out}")
    return 0


def cmd_domain(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    domain = AccuracyDomain(K)
    rows = []
    for theta in cfg.thetas:
        for s1, s2 in domain.boundary(theta):
            rows.append([theta, s1, s2])
    path = out / "domain.txt"
    write_grid(path, np.array(rows), comment="theta sigma1 sigma2")
    print(f"wrote {path}")
    return 0


def cmd_slow_manifold(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    domain = AccuracyDomain(K)
    flow = Flow(K.model)
    files = []
    for theta in cfg.thetas:
        atlas = grow_slow_leaf(K, domain, theta, cfg.glob, flow)
        path = out / f"slow_leaf_theta{theta:g}.txt"
        atlas.save(path)
        files.append(path)
        print(f"theta={theta:g}: {len(atlas.points)} points"
              + (f", {len(atlas.diagnostics)} truncations"
                 if atlas.diagnostics else ""))
    write_manifest(out, files)
    return 0


def cmd_isochron(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    domain = AccuracyDomain(K)
    flow = Flow(K.model)
    files = []
    for theta in cfg.thetas:
        atlas = grow_isochron(K, domain, theta, cfg=cfg.glob, flow=flow)
        path = out / f"isochron_theta{theta:g}.txt"
        atlas.save(path)
        files.append(path)
        print(f"theta={theta:g}: {len(atlas.points)} points"
              + (f", {len(atlas.diagnostics)} truncations"
                 if atlas.diagnostics else ""))
    write_manifest(out, files)
    return 0


def cmd_isostable(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    domain = AccuracyDomain(K)
    atlas = grow_isostable(K, domain, cfg.index, cfg.level, cfg.glob,
                           n_theta=cfg.n_theta)
    path = out / f"isostable_{cfg.index}_{cfg.level:g}.txt"
    atlas.save(path)
    print(f"{len(atlas.points)} points"
          + (f", {len(atlas.diagnostics)} slices skipped"
             if atlas.diagnostics else ""))
    print(f"wrote {path}")
    return 0


def cmd_response(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    s1, s2 = cfg.sigma
    rows = []
    for theta in (cfg.thetas if len(cfg.thetas) > 1 or cfg.thetas[0] != 0.0
                  else np.arange(cfg.n_theta) / cfg.n_theta):
        g = local_response(K, float(theta), s1, s2)
        rows.append([theta, s1, s2, *g.x, *g.grad_theta, *g.grad_sigma1,
                     *g.grad_sigma2])
    path = out / "response.txt"
    write_grid(path, np.array(rows),
               comment="theta sigma1 sigma2 x1 x2 x3 gradTheta_1..3 "
                       "gradSigma1_1..3 gradSigma2_1..3")
    print(f"wrote {path}")
    return 0


def cmd_strobe(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    K = cached_solve(cfg)
    flow = Flow(K.model)
    stim = cfg.stim or StimulusSpec(eps=-0.1, v=(1.0, 0.0, 0.0), n=100,
                                    t_s=0.001, t_p=8.394)
    names = K.model.state_names
    if cfg.do_fixed_point:
        fp = fixed_point(cfg.map_kind, stim, K, flow=flow)
        status = "converged" if fp.converged else "NOT converged"
        print(f"{cfg.map_kind} map fixed point ({status}, "
              f"{fp.iterations} iterations, residual {_fmt(fp.residual)})")
        print(f"theta={_fmt(fp.theta)} sigma1={_fmt(fp.sigma1)} "
              f"sigma2={_fmt(fp.sigma2)}")
        print(" ".join(f"{n}={_fmt(v)}" for n, v in zip(names, fp.x)))
        return 0
    traj = iterate(cfg.map_kind, StrobePoint(0.0, 0.0, 0.0), stim, K,
                   cfg.iters, flow=flow)
    rows = [[k, p.theta, p.sigma1, p.sigma2, *p.x]
            for k, p in enumerate(traj)]
    path = out / f"strobe_{cfg.map_kind}.txt"
    write_grid(path, np.array(rows),
               comment="iterate theta sigma1 sigma2 "
                       + " ".join(names))
    print(f"wrote {path}")
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    import pytest

    here = Path(__file__).resolve().parents[2] / "tests" / "test_acceptance.py"
    if not here.exists():
        print(f"acceptance suite not found at {here}", file=sys.stderr)
        return 3
    rc = pytest.main(["-v", str(here)])
    return 0 if rc == 0 else 3


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--model", choices=MODEL_NAMES)
    p.add_argument("--config", help="dotted-key config file")
    p.add_argument("--out", help="output directory")
    p.add_argument("--cache", help="cache directory for solved artifacts")
    p.add_argument("--L", type=int, help="Taylor order")
    p.add_argument("--n", type=int, help="Fourier grid size")
    p.add_argument("--b1", type=float)
    p.add_argument("--b2", type=float)
    p.add_argument("--tail-tol", dest="tail_tol", type=float)
    p.add_argument("--e-tol", dest="e_tol", type=float)


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="phamp",
        description="Phase-amplitude parameterization of limit cycles")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="compute and store the parameterization")
    _add_common(p)

    p = sub.add_parser("domain", help="accuracy-domain boundary radii")
    _add_common(p)
    p.add_argument("--thetas", help="comma-separated phase list")

    p = sub.add_parser("slow-manifold", help="globalized slow-manifold leaves")
    _add_common(p)
    p.add_argument("--thetas", help="comma-separated phase list")
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--max-points", dest="max_points", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)

    p = sub.add_parser("isochron", help="globalized isochrons")
    _add_common(p)
    p.add_argument("--thetas", help="comma-separated phase list")
    p.add_argument("--delta-max", dest="delta_max", type=float)
    p.add_argument("--max-points", dest="max_points", type=int)
    p.add_argument("--max-depth", dest="max_depth", type=int)

    p = sub.add_parser("isostable", help="isostable surface at a level")
    _add_common(p)
    p.add_argument("--index", type=int, choices=(1, 2), default=2)
    p.add_argument("--level", type=float, default=0.0)
    p.add_argument("--n-theta", dest="n_theta", type=int)

    p = sub.add_parser("response", help="phase/amplitude response functions")
    _add_common(p)
    p.add_argument("--thetas", help="comma-separated phase list")
    p.add_argument("--sigma", help="sigma1,sigma2 evaluation amplitudes")
    p.add_argument("--n-theta", dest="n_theta", type=int)

    p = sub.add_parser("strobe", help="stroboscopic pulse-train maps")
    _add_common(p)
    p.add_argument("--map", choices=MAP_KINDS)
    p.add_argument("--eps", type=float)
    p.add_argument("--v", help="kick direction v1,v2,v3")
    p.add_argument("--pulses", type=int, help="pulses per train")
    p.add_argument("--ts", type=float, help="interpulse time")
    p.add_argument("--tp", type=float, help="intertrain gap")
    p.add_argument("--iters", type=int)
    p.add_argument("--fixed-point", dest="fixed_point", action="store_true")

    p = sub.add_parser("verify", help="run the acceptance suite")
    _add_common(p)
    return ap


_COMMANDS = {
    "solve": cmd_solve,
    "domain": cmd_domain,
    "slow-manifold": cmd_slow_manifold,
    "isochron": cmd_isochron,
    "isostable": cmd_isostable,
    "response": cmd_response,
    "strobe": cmd_strobe,
    "verify": cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    ap = make_parser()
    args = ap.parse_args(argv)
    try:
        cfg = build_config(args)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    try:
        return _COMMANDS[args.command](cfg)
    except UsageError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except _NUMERICAL_ERRORS as err:
        print(f"numerical failure in {args.command}: {err}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
