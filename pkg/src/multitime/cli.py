"""Command-line front end.

Exit codes: 0 all checks pass, 2 a tolerance is violated, 3 bad input.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Sequence

import numpy as np

from . import analysis
from .current import (
    Hypersurface,
    SlopeError,
    boundary_flux_check,
    surface_report,
)
from .initial_data import (
    FAMILIES,
    GridSpec,
    InitialData,
    InitialDataFormatError,
    load,
    make_family,
    validate,
)
from .lorentz import Boost, BoostedWaveFunction, boost_events, boost_hypersurface
from .model import DomainError, ModelParams, all_spins
from .solver import (
    TraceError,
    WaveFunction,
    _parity,
    equal_time_grid,
    random_interior,
    random_stratum,
    write_grid_csv,
)

EXIT_OK, EXIT_FAIL, EXIT_INPUT = 0, 2, 3


class InputError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_INPUT, f"{self.prog}: error: {message}\n")


# ---------------------------------------------------------------------------
# configuration


@dataclass
class RunConfig:
    n: int = 2
    phases: list[float] = field(default_factory=lambda: [math.pi / 2])
    smoothness: int = 3
    family: str = "bump"
    family_params: dict[str, Any] = field(default_factory=dict)
    initial: str | None = None
    boost: float = 0.0
    surface: dict[str, Any] | None = None
    grid: int = 41
    tol: float = 1e-9
    seed: int = 0
    out: str = "results"
    times: list[float] = field(default_factory=lambda: [0.0, 1.0])
    surfaces: int = 5
    samples: int = 2000
    conservation_rtol: float = 1e-6

    _KEYS = {"n": int, "phases": list, "smoothness": int, "family": str,
             "family_params": dict, "initial": str, "boost": float, "surface": dict,
             "grid": int, "tol": float, "seed": int, "out": str, "times": list,
             "surfaces": int, "samples": int, "conservation_rtol": float}

    @classmethod
    def from_mapping(cls, raw: dict[str, Any]) -> "RunConfig":
        unknown = set(raw) - set(cls._KEYS)
        if unknown:
            raise InputError(f"unknown config keys: {sorted(unknown)}")
        kw = {}
        for key, value in raw.items():
            typ = cls._KEYS[key]
            if value is None:
                continue
            if typ is float and isinstance(value, (int, float)) and not isinstance(value, bool):
                value = float(value)
            if typ is int and isinstance(value, float) and value.is_integer():
                value = int(value)
            if not isinstance(value, typ) or isinstance(value, bool):
                raise InputError(f"config key {key!r} must be {typ.__name__}")
            kw[key] = value
        return cls(**kw)

    def validate(self):
        if self.n < 2:
            raise InputError("--n must be at least 2")
        if len(self.phases) != self.n - 1:
            raise InputError(f"expected {self.n - 1} phases, got {len(self.phases)}")
        if self.grid < 3:
            raise InputError("--grid must be at least 3")
        if self.tol <= 0:
            raise InputError("--tol must be positive")
        if self.initial is None and self.family not in FAMILIES:
            raise InputError(f"unknown family {self.family!r}; choose from {sorted(FAMILIES)}")

    def params(self) -> ModelParams:
        try:
            return ModelParams(self.n, tuple(self.phases), self.smoothness)
        except ValueError as exc:
            raise InputError(str(exc)) from exc

    def data(self, params: ModelParams) -> InitialData:
        if self.initial:
            data = load(self.initial)
            if data.n != self.n:
                raise InputError(f"initial data has N={data.n}, config has N={self.n}")
            return data
        try:
            return make_family(self.family, params, **dict(self.family_params))
        except TypeError as exc:
            raise InputError(f"bad family parameters: {exc}") from exc

    def hypersurface(self) -> Hypersurface:
        if self.surface is None:
            return Hypersurface.flat()
        try:
            return Hypersurface.from_spec(self.surface)
        except (ValueError, SlopeError) as exc:
            raise InputError(str(exc)) from exc


def _parse_phi(items: Sequence[str], n: int, base: list[float]) -> list[float]:
    phases = list(base) if len(base) == n - 1 else [base[0] if base else math.pi / 2] * (n - 1)
    for item in items:
        try:
            if "=" in item:
                k, v = item.split("=", 1)
                k = int(k)
                if not 1 <= k <= n - 1:
                    raise InputError(f"--phi index {k} out of range 1..{n - 1}")
                phases[k - 1] = float(v)
            else:
                phases = [float(item)] * (n - 1)
        except ValueError as exc:
            raise InputError(f"bad --phi value {item!r}") from exc
    return phases


def build_config(args: argparse.Namespace) -> RunConfig:
    raw: dict[str, Any] = {}
    if args.config:
        try:
            raw = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise InputError(f"cannot read config: {exc}") from exc
        if not isinstance(raw, dict):
            raise InputError("config must be a JSON object")
    cfg = RunConfig.from_mapping(raw)
    for key in ("n", "smoothness", "initial", "boost", "grid", "tol", "seed", "out",
                "surfaces", "samples"):
        value = getattr(args, key, None)
        if value is not None:
            setattr(cfg, key, value)
    if args.family:
        name, _, params = args.family.partition(":")
        cfg.family = name
        if params:
            try:
                cfg.family_params = json.loads(params)
            except json.JSONDecodeError as exc:
                raise InputError(f"bad --family parameters: {exc}") from exc
            if not isinstance(cfg.family_params, dict):
                raise InputError("--family parameters must be a JSON object")
    if args.surface:
        try:
            cfg.surface = json.loads(args.surface)
        except json.JSONDecodeError as exc:
            raise InputError(f"bad --surface: {exc}") from exc
    if getattr(args, "times", None):
        cfg.times = list(args.times)
    cfg.phases = _parse_phi(args.phi or [], cfg.n, cfg.phases)
    cfg.validate()
    return cfg


# ---------------------------------------------------------------------------
# helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    return obj


def _write_json(path: Path, payload: dict):
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(_jsonable(payload), indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")


def _suite(name: str, value: float, tol: float, **extra) -> dict:
    return {"suite": name, "value": float(value), "tol": float(tol),
            "pass": bool(value <= tol), **extra}


def _setup(cfg: RunConfig):
    params = cfg.params()
    data = cfg.data(params)
    return params, data, WaveFunction(params, data)


def _surface_grid(sigma: Hypersurface, n: int, bound: float, points: int) -> np.ndarray:
    axis = np.linspace(-bound, bound, points)
    x = equal_time_grid(n, 0.0, axis)
    x[..., 0] = sigma(x[..., 1])
    return x


# ---------------------------------------------------------------------------
# commands


def cmd_solve(cfg: RunConfig) -> int:
    params, data, psi = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    b = Boost(cfg.boost)
    sigma = cfg.hypersurface()
    target = BoostedWaveFunction(psi, b) if cfg.boost else psi
    leaf = boost_hypersurface(b, sigma) if cfg.boost else sigma
    bound = target.support_radius + max(abs(t) for t in cfg.times) + 0.5
    files = []
    axis = np.linspace(-bound, bound, cfg.grid)
    for t in cfg.times:
        path = out / f"solution_t{t:+.6g}.csv"
        write_grid_csv(target, equal_time_grid(cfg.n, t, axis), path)
        files.append(str(path))
    if cfg.surface is not None or cfg.boost:
        path = out / "solution_surface.csv"
        write_grid_csv(target, _surface_grid(leaf, cfg.n, bound, cfg.grid), path)
        files.append(str(path))
    norm = surface_report(target, leaf, rtol=1e-9)
    _write_json(out / "solve.json", {"params": {"n": cfg.n, "phases": cfg.phases},
                                     "boost": cfg.boost, "surface": leaf.spec(),
                                     "norm": norm.as_dict(), "files": files})
    print(json.dumps({"norm": norm.value, "files": files}))
    return EXIT_OK


def run_verify(cfg: RunConfig) -> dict:
    params, data, psi = _setup(cfg)
    rng = np.random.default_rng(cfg.seed)
    suites = []
    n = cfg.n

    rep = validate(data, params, GridSpec(points=min(cfg.grid, 41 if n == 2 else 21)),
                   tol=cfg.tol)
    suites.append({"suite": "initial_data", "pass": rep.passed, "failures": rep.failures})

    # closed form against the tracing oracle
    x = random_interior(rng, n, cfg.samples // (2**n) + 1)
    worst = 0.0
    for s in all_spins(n):
        fast = psi.evaluate_many(x, s)
        for i, cfg_i in enumerate(x):
            worst = max(worst, abs(fast[i] - psi.trace_evaluate(cfg_i, s)[0]))
    suites.append(_suite("closed_form_vs_trace", worst, 1e-12))

    # PDE residual at the default step
    res = []
    for cfg_i in random_interior(rng, n, 50, min_gap=0.2):
        for s in all_spins(n):
            try:
                res.append(psi.residual(cfg_i, s))
            except DomainError:
                pass
    suites.append(_suite("pde_residual", max(res, default=0.0), 1e-6, points=len(res)))

    # boundary condition and flux
    strata = np.concatenate([random_stratum(rng, n, k, 50) for k in range(1, n)] +
                            [random_stratum(rng, n, k, 50, equal_time=True) for k in range(1, n)])
    strata[: 25 * (n - 1), :, 0] = 0.0
    bc = max((abs(a - c) for p in strata for _, a, c in psi.boundary_check(p)), default=0.0)
    suites.append(_suite("boundary_condition", bc, cfg.tol))
    flux = boundary_flux_check(psi, strata)
    suites.append(_suite("boundary_flux", flux.max_violation, cfg.tol))

    # antisymmetry
    y = random_interior(rng, n, 200)
    perm = rng.permutation(n)
    worst = 0.0
    sign = int(_parity(perm[None])[0])
    for s in all_spins(n):
        a = psi.evaluate_full_many(y[:, perm], tuple(np.asarray(s)[perm]))
        b = psi.evaluate_many(y, s)
        worst = max(worst, float(np.abs(a - sign * b).max()))
    suites.append(_suite("antisymmetry", worst, 0.0))

    # probability conservation
    ref = surface_report(psi, Hypersurface.flat(), rtol=cfg.conservation_rtol).value
    vals = [ref]
    for _ in range(cfg.surfaces):
        vals.append(surface_report(psi, Hypersurface.random(rng, 0.7),
                                   rtol=cfg.conservation_rtol).value)
    spread = (max(vals) - min(vals)) / ref if ref else 0.0
    suites.append(_suite("conservation", spread, cfg.conservation_rtol, integrals=vals))

    # Lorentz covariance
    beta = cfg.boost or float(rng.uniform(-1, 1))
    b = Boost(beta)
    pb = BoostedWaveFunction(psi, b)
    bstrata = boost_events(b, strata)
    bc_b = max((abs(a - c) for p in bstrata for _, a, c in pb.boundary_check(p)), default=0.0)
    suites.append(_suite("boost_boundary_condition", bc_b, cfg.tol, beta=beta))
    if n == 2:
        sig = Hypersurface.random(rng, 0.7)
        n0 = surface_report(psi, sig, rtol=cfg.conservation_rtol).value
        n1 = surface_report(pb, boost_hypersurface(b, sig), rtol=cfg.conservation_rtol).value
        suites.append(_suite("boost_norm", abs(n1 - n0) / n0 if n0 else 0.0,
                             cfg.conservation_rtol, beta=beta))
    return {"params": {"n": n, "phases": cfg.phases, "smoothness": cfg.smoothness},
            "data": data.name, "seed": cfg.seed, "suites": suites,
            "passed": all(s["pass"] for s in suites)}


def cmd_verify(cfg: RunConfig) -> int:
    report = run_verify(cfg)
    _write_json(Path(cfg.out) / "verify.json", report)
    for s in report["suites"]:
        print(f"{'PASS' if s['pass'] else 'FAIL'} {s['suite']}")
    return EXIT_OK if report["passed"] else EXIT_FAIL


def cmd_boost(cfg: RunConfig) -> int:
    params, data, psi = _setup(cfg)
    rng = np.random.default_rng(cfg.seed)
    b = Boost(cfg.boost)
    pb = BoostedWaveFunction(psi, b)
    strata = boost_events(b, np.concatenate([random_stratum(rng, cfg.n, k, 100)
                                             for k in range(1, cfg.n)]))
    bc = max((abs(a - c) for p in strata for _, a, c in pb.boundary_check(p)), default=0.0)
    sigma = cfg.hypersurface()
    n0 = surface_report(psi, sigma, rtol=cfg.conservation_rtol)
    n1 = surface_report(pb, boost_hypersurface(b, sigma), rtol=cfg.conservation_rtol)
    rel = abs(n1.value - n0.value) / n0.value if n0.value else 0.0
    suites = [_suite("boost_boundary_condition", bc, cfg.tol),
              _suite("boost_norm", rel, cfg.conservation_rtol,
                     norms=[n0.value, n1.value])]
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    bound = pb.support_radius + 0.5
    write_grid_csv(pb, equal_time_grid(cfg.n, 0.0, np.linspace(-bound, bound, cfg.grid)),
                   out / "boosted_t0.csv")
    passed = all(s["pass"] for s in suites)
    _write_json(out / "boost.json", {"beta": cfg.boost, "suites": suites, "passed": passed})
    for s in suites:
        print(f"{'PASS' if s['pass'] else 'FAIL'} {s['suite']}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_entangle(cfg: RunConfig, svd_tol: float) -> int:
    if cfg.n != 2:
        raise InputError("entangle needs --n 2")
    if cfg.initial is None and cfg.family == "bump":
        cfg.family = "wedge"
        cfg.family_params = {"mixed": 0.3, **cfg.family_params}
    params, data, psi = _setup(cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = []
    spectra = []
    grid = GridSpec(points=max(cfg.grid, 40))
    for t in cfg.times:
        sv = analysis.schmidt_spectrum(psi, t, grid)
        rank = int(np.sum(sv > svd_tol * sv[0])) if sv.size and sv[0] > 0 else 0
        rows.append({"t": t, "rank": rank})
        spectra.append(sv)
    with open(out / "schmidt_spectra.csv", "w", encoding="utf-8") as fh:
        fh.write(",".join(f"t={t:.17g}" for t in cfg.times) + "\n")
        for i in range(max(len(sv) for sv in spectra)):
            fh.write(",".join(f"{sv[i]:.17g}" if i < len(sv) else "" for sv in spectra) + "\n")
    _write_json(out / "entangle.json", {"phases": cfg.phases, "svd_tol": svd_tol, "ranks": rows})
    print(json.dumps(rows))
    return EXIT_OK


def cmd_delta(cfg: RunConfig, eps: float, t: float | None) -> int:
    if cfg.n != 2:
        raise InputError("delta-check needs --n 2")
    if cfg.initial is None and cfg.family == "bump":
        cfg.family = "wedge"
        cfg.family_params = {"mixed": 0.3, **cfg.family_params}
    params, data, psi = _setup(cfg)
    t = 3.0 if t is None else t
    v = np.linspace(-1.0, 1.0, cfg.grid)
    rep = analysis.delta_bc_check(psi, t, v, eps)
    suites = [_suite("jump_relation_chi2", rep.jump_minus_plus, 1e-6),
              _suite("jump_relation_chi3", rep.jump_plus_minus, 1e-6),
              _suite("equal_sign_zero", rep.equal_sign_at_zero, cfg.tol)]
    passed = all(s["pass"] for s in suites)
    _write_json(Path(cfg.out) / "delta.json", {**rep.as_dict(), "suites": suites,
                                               "passed": passed})
    for s in suites:
        print(f"{'PASS' if s['pass'] else 'FAIL'} {s['suite']}")
    return EXIT_OK if passed else EXIT_FAIL


def cmd_alpha(args: argparse.Namespace) -> int:
    if args.alpha_sq <= 0:
        raise InputError("--alpha-sq must be positive")
    try:
        inst = analysis.AlphaInstance(args.a1, args.b1, args.a2, args.b2, math.sqrt(args.alpha_sq))
    except ValueError as exc:
        raise InputError(str(exc)) from exc
    t0 = time.perf_counter()
    inst = analysis.alpha_points(inst)
    res = analysis.constraint_residuals(inst)
    if args.g_constant is not None:
        g = lambda z1, z2: args.g_constant
    else:
        g = lambda z1, z2: z1
    demo = analysis.alpha_contradiction_demo(g, inst, args.phase)
    payload = {
        "instance": {"a1": inst.a1, "b1": inst.b1, "a2": inst.a2, "b2": inst.b2,
                     "alpha": inst.alpha},
        "xi": inst.xi,
        "points": {"Y1": [inst.y1, inst.t1], "Y2": [inst.y2, inst.t2],
                   "X1": [inst.x1, inst.s1], "X2": [inst.x2, inst.s2]},
        "residuals": res.tolist(),
        "appendix_forms": analysis.appendix_report(inst),
        "contradiction": demo.as_dict(),
        "note": analysis.alpha_bc_uniqueness_note(),
        "runtime_s": time.perf_counter() - t0,
    }
    ok = float(np.abs(res).max()) <= 1e-9
    _write_json(Path(args.out or "results") / "alpha.json", payload)
    print(json.dumps(_jsonable({"points": payload["points"], "xi": inst.xi,
                                "conflict": demo.conflict})))
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# entry point


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON run configuration; flags override it")
    p.add_argument("--n", type=int, help="particle number")
    p.add_argument("--phi", action="append", metavar="K=ANGLE",
                   help="boundary phase for pair K (repeatable); a bare angle sets all")
    p.add_argument("--smoothness", type=int, help="smoothness order m")
    p.add_argument("--family", help="built-in data NAME[:JSON-params] "
                                    f"({', '.join(sorted(FAMILIES))})")
    p.add_argument("--initial", help="tabulated initial-data file")
    p.add_argument("--boost", type=float, help="rapidity")
    p.add_argument("--surface", help='hypersurface JSON, e.g. {"type":"tanh","params":{}}')
    p.add_argument("--grid", type=int, help="grid points per axis")
    p.add_argument("--tol", type=float, help="pointwise tolerance")
    p.add_argument("--seed", type=int, help="RNG seed for random geometry")
    p.add_argument("--out", help="output directory")
    p.add_argument("--times", type=float, nargs="+", help="common times to sample")
    p.add_argument("--surfaces", type=int, help="random hypersurfaces in verify")
    p.add_argument("--samples", type=int, help="random points for the oracle comparison")


def make_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="multitime", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, help_ in (("solve", "evaluate the solution on grids and surfaces"),
                        ("verify", "run the invariant suites"),
                        ("boost", "check Lorentz covariance for one rapidity")):
        _common(sub.add_parser(name, help=help_))
    p = sub.add_parser("entangle", help="Schmidt ranks of a two-particle state")
    _common(p)
    p.add_argument("--svd-tol", type=float, default=1e-8)
    p = sub.add_parser("delta-check", help="equal-time point-interaction relation")
    _common(p)
    p.add_argument("--eps", type=float, default=1e-5)
    p.add_argument("--time", type=float, default=None)
    p = sub.add_parser("alpha-demo", help="over-determination on the alpha-space-like domain")
    for key in ("a1", "b1", "a2", "b2"):
        p.add_argument(f"--{key}", type=float, required=True)
    p.add_argument("--alpha-sq", type=float, required=True)
    p.add_argument("--phase", type=float, default=0.0)
    p.add_argument("--g-constant", type=float, default=None,
                   help="use constant g_{-+} instead of g_{-+}(z1, z2) = z1")
    p.add_argument("--out")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    try:
        args = make_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return exc.code if isinstance(exc.code, int) else EXIT_INPUT
    try:
        if args.command == "alpha-demo":
            return cmd_alpha(args)
        cfg = build_config(args)
        if args.command == "solve":
            return cmd_solve(cfg)
        if args.command == "verify":
            return cmd_verify(cfg)
        if args.command == "boost":
            return cmd_boost(cfg)
        if args.command == "entangle":
            return cmd_entangle(cfg, args.svd_tol)
        if args.command == "delta-check":
            return cmd_delta(cfg, args.eps, args.time)
    except (InputError, InitialDataFormatError, DomainError, SlopeError,
            analysis.GridError, analysis.NoRootError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except TraceError as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
