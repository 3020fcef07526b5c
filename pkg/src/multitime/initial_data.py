"""Initial data on the ordered simplex ``z_1 <= ... <= z_N`` at ``t = 0``.

Each component is a vectorized callable taking an ``(M, N)`` array of
positions and returning ``M`` complex values. Data built from functions that
are valid on all of ``R^N`` (``full_domain=True``) can be antisymmetrized.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Mapping, Sequence

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.sparse.linalg import spsolve

from .model import ModelParams, Spin, all_spins, component_index, spin_label, spin_of_index
from .phases import spin_potential

ComponentFn = Callable[[np.ndarray], np.ndarray]


class InitialDataFormatError(ValueError):
    pass


def _zero(z: np.ndarray) -> np.ndarray:
    return np.zeros(np.asarray(z).shape[0], dtype=complex)


@dataclass(frozen=True)
class InitialData:
    n: int
    components: Mapping[Spin, ComponentFn]
    support_radius: float
    smoothness: int = 3
    full_domain: bool = False
    name: str = "custom"

    def __post_init__(self):
        comps = {tuple(int(v) for v in s): f for s, f in self.components.items()}
        for s in comps:
            if len(s) != self.n or any(v not in (-1, 1) for v in s):
                raise ValueError(f"bad spin key {s!r} for N={self.n}")
        object.__setattr__(self, "components", comps)
        if self.support_radius <= 0:
            raise ValueError("support radius must be positive")

    def component(self, s: Sequence[int]) -> ComponentFn:
        return self.components.get(tuple(s), _zero)

    def __call__(self, s: Sequence[int], z) -> np.ndarray:
        z = np.atleast_2d(np.asarray(z, dtype=float))
        return np.asarray(self.component(s)(z), dtype=complex)

    def nonzero_spins(self) -> list[Spin]:
        return [s for s in all_spins(self.n) if s in self.components]


def bump(z, center: float = 0.0, width: float = 1.0, m: int = 3) -> np.ndarray:
    """``(1 - ((z - center)/width)^2)^(m+1)`` on ``|z - center| < width``, else 0; C^m."""
    u = (np.asarray(z, dtype=float) - center) / width
    return np.where(np.abs(u) < 1.0, np.clip(1.0 - u * u, 0.0, None) ** (m + 1), 0.0)


def potential_phase(u: Sequence[int], params: ModelParams) -> float:
    return float(np.dot(spin_potential(u), params.phase_array))


def compatible_bumps(
    params: ModelParams,
    width: float = 1.5,
    spacing: float = 0.8,
    shift: float = 0.4,
    wavenumber: float = 0.7,
) -> InitialData:
    """Bump data satisfying the boundary compatibility identically to all orders.

    For a spin ``u`` with ``p`` plus entries, ``g_u(w) = exp(-i V(u)) K_p(w+, w-)``
    where ``w+`` (``w-``) lists the positions carrying ``+`` (``-``) in order and
    ``K_p`` is a product of polynomial bumps with a plane-wave factor. Swapping
    an adjacent ``+-`` at a coincidence changes ``V`` by exactly ``phi^(k)``, so
    the transition across every stratum is as smooth as the bumps.
    """
    n, m = params.n_particles, params.smoothness

    def centers(count: int, offset: float) -> np.ndarray:
        return (np.arange(count) - (count - 1) / 2.0) * spacing + offset

    def make(u: Spin) -> ComponentFn:
        plus = [k for k, v in enumerate(u) if v > 0]
        minus = [k for k, v in enumerate(u) if v < 0]
        cp, cm = centers(len(plus), shift), centers(len(minus), -shift)
        amp = np.exp(-1j * potential_phase(u, params)) * (1.0 + 0.25 * len(plus))

        def g(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=float)
            val = np.full(z.shape[0], amp, dtype=complex)
            for j, k in enumerate(plus):
                val *= bump(z[:, k], cp[j], width, m) * np.exp(1j * wavenumber * z[:, k])
            for j, k in enumerate(minus):
                val *= bump(z[:, k], cm[j], width, m) * np.exp(-0.5j * wavenumber * z[:, k])
            return val

        return g

    reach = max(abs(shift) + spacing * (n - 1) / 2.0 + width, width)
    return InitialData(n, {u: make(u) for u in all_spins(n)}, reach, m, full_domain=False,
                       name="bump")


Orbital = Callable[[np.ndarray], np.ndarray]  # z (M,) -> (M, 2) spinor, columns (-, +)


def bump_orbital(center: float, width: float, minus: complex, plus: complex, m: int = 3,
                 wavenumber: float = 0.0) -> Orbital:
    def orb(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        prof = bump(z, center, width, m) * np.exp(1j * wavenumber * (z - center))
        return np.stack([minus * prof, plus * prof], axis=-1)

    return orb


def slater(orbitals: Sequence[Orbital], support_radius: float, smoothness: int = 3,
           name: str = "slater") -> InitialData:
    """Wedge product of one-particle spinor profiles, valid on all of ``R^N``."""
    n = len(orbitals)
    norm = 1.0 / math.sqrt(math.factorial(n))

    def make(s: Spin) -> ComponentFn:
        idx = [(v + 1) // 2 for v in s]

        def g(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=float)
            mat = np.empty((z.shape[0], n, n), dtype=complex)
            for i, orb in enumerate(orbitals):
                for k in range(n):
                    mat[:, i, k] = orb(z[:, k])[:, idx[k]]
            if n == 2:
                return norm * (mat[:, 0, 0] * mat[:, 1, 1] - mat[:, 0, 1] * mat[:, 1, 0])
            return norm * np.linalg.det(mat)

        return g

    return InitialData(n, {s: make(s) for s in all_spins(n)}, support_radius, smoothness,
                       full_domain=True, name=name)


def wedge_orbitals(n: int = 2, separation: float = 6.0, width: float = 1.0, m: int = 3,
                   mixed: float = 0.0) -> tuple[list[Orbital], float]:
    """Orbitals of :func:`separated_wedge` and the support radius they need."""
    centers = (np.arange(n) - (n - 1) / 2.0) * separation
    orbs = []
    for i, c in enumerate(centers):
        if i % 2 == 0:
            orbs.append(bump_orbital(c, width, 1.0, mixed, m, wavenumber=0.9))
        else:
            orbs.append(bump_orbital(c, width, mixed, 1.0, m, wavenumber=-0.6))
    return orbs, float(abs(centers).max() + width)


def separated_wedge(n: int = 2, separation: float = 6.0, width: float = 1.0, m: int = 3,
                    mixed: float = 0.0) -> InitialData:
    """Slater state of ``n`` bump orbitals with disjoint supports.

    Orbitals alternate between right-movers (spin ``-``) and left-movers
    (spin ``+``) so that neighbouring supports approach each other; ``mixed``
    adds an admixture of the other spin. Disjoint supports make every
    boundary compatibility trivially exact, for any phases.
    """
    orbs, radius = wedge_orbitals(n, separation, width, m, mixed)
    return slater(orbs, radius, m, name="wedge")


def single_component(n: int, s: Sequence[int], width: float = 1.0, spacing: float = 2.5,
                     m: int = 3) -> InitialData:
    """Only component ``s`` nonzero: a product of bumps at increasing centres."""
    s = tuple(s)
    centers = (np.arange(n) - (n - 1) / 2.0) * spacing

    def g(z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        val = np.ones(z.shape[0], dtype=complex)
        for k in range(n):
            val *= bump(z[:, k], centers[k], width, m)
        return val

    return InitialData(n, {s: g}, float(abs(centers).max() + width), m, full_domain=True,
                       name="single")


FAMILIES = {
    "bump": lambda params, **kw: compatible_bumps(params, **kw),
    "wedge": lambda params, **kw: separated_wedge(params.n_particles, m=params.smoothness, **kw),
    "single": lambda params, **kw: single_component(
        params.n_particles, kw.pop("spin", (1,) * params.n_particles), m=params.smoothness, **kw),
}


def make_family(name: str, params: ModelParams, **kwargs) -> InitialData:
    if name not in FAMILIES:
        raise ValueError(f"unknown family {name!r}; choose from {sorted(FAMILIES)}")
    return FAMILIES[name](params, **kwargs)


# ---------------------------------------------------------------------------
# antisymmetrization


def _perm_sign(p: Sequence[int]) -> int:
    p = list(p)
    sign = 1
    for i in range(len(p)):
        while p[i] != i:
            j = p[i]
            p[i], p[j] = p[j], p[i]
            sign = -sign
    return sign


def antisymmetrize(raw: InitialData) -> InitialData:
    """Project onto data consistent with the exchange antisymmetry.

    ``g_s(z) = (1/N!) sum_pi sgn(pi) raw_{s o pi}(z o pi)``; requires component
    functions defined on all of ``R^N``. The projection is idempotent.
    """
    if not raw.full_domain:
        raise ValueError("antisymmetrize needs component functions defined on all of R^N")
    n = raw.n
    perms = [(p, _perm_sign(p)) for p in itertools.permutations(range(n))]
    scale = 1.0 / math.factorial(n)

    def make(s: Spin) -> ComponentFn:
        terms = []
        for p, sign in perms:
            sp = tuple(s[i] for i in p)
            if sp in raw.components:
                terms.append((raw.components[sp], list(p), sign))

        def g(z: np.ndarray) -> np.ndarray:
            z = np.asarray(z, dtype=float)
            out = np.zeros(z.shape[0], dtype=complex)
            for f, p, sign in terms:
                out += sign * np.asarray(f(z[:, p]), dtype=complex)
            return scale * out

        return g

    comps = {s: make(s) for s in all_spins(n)}
    comps = {s: f for s, f in comps.items()
             if any(tuple(s[i] for i in p) in raw.components for p, _ in perms)}
    return InitialData(n, comps, raw.support_radius, raw.smoothness, full_domain=True,
                       name=f"antisym({raw.name})")


# ---------------------------------------------------------------------------
# validation


@dataclass(frozen=True)
class GridSpec:
    """Sampling grid for validation: ``points`` nodes per axis on ``[-bound, bound]``."""

    points: int = 41
    bound: float | None = None
    fd_step: float = 1e-3

    @property
    def h(self) -> float:
        return 2.0 * (self.bound or 1.0) / (self.points - 1)


@dataclass
class ValidationReport:
    entries: list[dict] = field(default_factory=list)
    failures: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.failures

    def add(self, check: str, value: float, tol: float, **extra):
        ok = bool(value <= tol)
        self.entries.append({"check": check, "value": float(value), "tol": float(tol), "pass": ok,
                             **extra})
        if not ok:
            self.failures.append(f"{check}: {value:.3e} > {tol:.3e}")

    def as_dict(self) -> dict:
        return {"passed": self.passed, "entries": self.entries, "failures": self.failures}


def _ordered_tuples(axis: np.ndarray, n: int) -> np.ndarray:
    idx = np.array(list(itertools.combinations_with_replacement(range(len(axis)), n)), dtype=int)
    return axis[idx]


def _fd_derivatives(values: np.ndarray, h: float, order: int) -> np.ndarray:
    """Derivatives 0..order at d=0 from samples at d = 0, h, 2h, ... (one-sided)."""
    npts = values.shape[-1]
    d = h * np.arange(npts)
    vander = np.vander(d, order + 3, increasing=True)
    coef, *_ = np.linalg.lstsq(vander, values.T, rcond=None)
    fact = np.array([math.factorial(j) for j in range(order + 1)])
    return (coef[: order + 1].T * fact)


def validate(data: InitialData, params: ModelParams, grid: GridSpec | None = None,
             tol: float = 1e-9, deriv_tol: float = 1e-3) -> ValidationReport:
    """Check boundary compatibility, compact support and transition smoothness.

    Failures are collected in the report rather than raised.
    """
    grid = grid or GridSpec()
    n = data.n
    if n != params.n_particles:
        raise ValueError("data and model particle numbers differ")
    rep = ValidationReport()
    bound = grid.bound or data.support_radius + 1.0
    axis = np.linspace(-bound, bound, grid.points)
    scale = 0.0
    pts = _ordered_tuples(axis, n)
    for s in data.nonzero_spins():
        scale = max(scale, float(np.abs(data(s, pts)).max(initial=0.0)))
    scale = max(scale, 1e-300)

    # strata: z_k = z_{k+1}
    base = _ordered_tuples(axis, n - 1)
    order = min(params.smoothness, 3)
    h = grid.fd_step
    for k in range(n - 1):
        stratum = np.insert(base, k + 1, base[:, k], axis=1)
        worst = 0.0
        worst_d = np.zeros(order + 1)
        for rest in itertools.product((-1, 1), repeat=n - 2):
            u = tuple(rest[:k]) + (1, -1) + tuple(rest[k:])
            v = tuple(rest[:k]) + (-1, 1) + tuple(rest[k:])
            if u not in data.components and v not in data.components:
                continue
            lhs = data(u, stratum)
            rhs = np.exp(1j * params.phases[k]) * data(v, stratum)
            worst = max(worst, float(np.abs(lhs - rhs).max(initial=0.0)))
            # transverse profile d -> (z - d/2, z + d/2): u on the ordered side,
            # exp(i phi) g_v at swapped arguments continues it to d < 0
            steps = np.arange(order + 4) * h
            fwd = np.empty((stratum.shape[0], steps.size), dtype=complex)
            bwd = np.empty_like(fwd)
            for j, d in enumerate(steps):
                p = stratum.copy()
                p[:, k] -= d / 2
                p[:, k + 1] += d / 2
                fwd[:, j] = data(u, p)
                bwd[:, j] = np.exp(1j * params.phases[k]) * data(v, p)
            df = _fd_derivatives(fwd, h, order)
            db = _fd_derivatives(bwd, h, order)
            # backward side samples the reflected coordinate: odd derivatives flip sign
            signs = (-1.0) ** np.arange(order + 1)
            mism = np.abs(df - db * signs).max(axis=0)
            worst_d = np.maximum(worst_d, mism)
        rep.add(f"compatibility[k={k + 1}]", worst, tol)
        for j in range(1, order + 1):
            rep.add(f"transition_d{j}[k={k + 1}]", worst_d[j] / scale, deriv_tol, relative=True)

    # compact support: sample shells outside R inside the ordered simplex
    R = data.support_radius
    outer = np.linspace(R * (1 + 1e-9), R + 2.0, 9)
    leak = 0.0
    rng = np.random.default_rng(0)
    for s in data.nonzero_spins():
        for r in outer:
            z = rng.uniform(-r, r, size=(256, n))
            z[np.arange(256), rng.integers(0, n, 256)] = r * rng.choice([-1.0, 1.0], 256)
            z = np.sort(z, axis=1)
            leak = max(leak, float(np.abs(data(s, z)).max(initial=0.0)))
    rep.add("support_leakage", leak, tol)
    return rep


def stratum_check_only(data: InitialData, params: ModelParams, points: np.ndarray, k: int):
    """Boundary-compatibility residuals at given stratum points (pair k, 1-based)."""
    out = []
    n = data.n
    for rest in itertools.product((-1, 1), repeat=n - 2):
        u = tuple(rest[: k - 1]) + (1, -1) + tuple(rest[k - 1:])
        v = tuple(rest[: k - 1]) + (-1, 1) + tuple(rest[k - 1:])
        out.append(np.abs(data(u, points) - np.exp(1j * params.phases[k - 1]) * data(v, points)))
    return np.max(out, axis=0)


# ---------------------------------------------------------------------------
# tabulated file format

_HEADER = re.compile(r"^N=(\d+)\s+m=(\d+)\s+R=(\S+)\s+grid=(\d+)\s*$")


def save(data: InitialData, path: str | Path, grid: int = 21) -> None:
    """Write data on the tensor grid restricted to the ordered simplex."""
    n, R = data.n, data.support_radius
    axis = np.linspace(-R, R, grid)
    pts = _ordered_tuples(axis, n)
    lines = [f"N={n} m={data.smoothness} R={R!r} grid={grid}"]
    for i in range(1, 2**n + 1):
        s = spin_of_index(i, n)
        vals = data(s, pts)
        lines.append(f"component {i}")
        for z, v in zip(pts, vals):
            lines.append(" ".join(f"{x:.17g}" for x in (*z, v.real, v.imag)))
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def _interp_method(m: int, points: int) -> str:
    if m >= 4 and points >= 6:
        return "quintic"
    if m >= 2 and points >= 4:
        return "cubic"
    return "linear"


def load(path: str | Path) -> InitialData:
    """Read tabulated data and build per-component interpolants of order ~m."""
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text:
        raise InitialDataFormatError("empty file")
    mt = _HEADER.match(text[0].strip())
    if not mt:
        raise InitialDataFormatError(f"malformed header: {text[0]!r}")
    n, m, grid = int(mt.group(1)), int(mt.group(2)), int(mt.group(4))
    try:
        R = float(mt.group(3))
    except ValueError as exc:
        raise InitialDataFormatError(f"malformed header: {text[0]!r}") from exc
    if n < 2 or grid < 2 or not R > 0:
        raise InitialDataFormatError(f"malformed header: {text[0]!r}")

    blocks: dict[int, list[list[float]]] = {}
    current = None
    for lineno, line in enumerate(text[1:], start=2):
        line = line.strip()
        if not line:
            continue
        if line.startswith("component"):
            parts = line.split()
            if len(parts) != 2 or not parts[1].isdigit():
                raise InitialDataFormatError(f"line {lineno}: bad component header")
            current = int(parts[1])
            if current in blocks:
                raise InitialDataFormatError(f"line {lineno}: duplicate component {current}")
            blocks[current] = []
            continue
        if current is None:
            raise InitialDataFormatError(f"line {lineno}: data before component header")
        try:
            row = [float(x) for x in line.split()]
        except ValueError as exc:
            raise InitialDataFormatError(f"line {lineno}: non-numeric entry") from exc
        if len(row) != n + 2:
            raise InitialDataFormatError(f"line {lineno}: expected {n + 2} columns")
        blocks[current].append(row)

    if sorted(blocks) != list(range(1, 2**n + 1)):
        raise InitialDataFormatError(f"expected {2**n} components, found {len(blocks)}")

    expected_rows = math.comb(grid + n - 1, n)
    axis = None
    comps = {}
    for i, rows in sorted(blocks.items()):
        arr = np.asarray(rows, dtype=float)
        if arr.shape[0] != expected_rows:
            raise InitialDataFormatError(f"component {i}: expected {expected_rows} rows")
        z = arr[:, :n]
        if np.any(np.diff(z, axis=1) < 0):
            raise InitialDataFormatError(f"component {i}: row outside the ordered simplex")
        keys = [tuple(r) for r in z]
        if any(a >= b for a, b in zip(keys, keys[1:])):
            raise InitialDataFormatError(f"component {i}: non-monotone grid")
        ax = np.unique(z)
        if ax.size != grid or np.any(np.diff(ax) <= 0):
            raise InitialDataFormatError(f"component {i}: grid axis has {ax.size} nodes")
        if axis is None:
            axis = ax
        elif not np.array_equal(axis, ax):
            raise InitialDataFormatError(f"component {i}: grid differs between components")
        vals = arr[:, n] + 1j * arr[:, n + 1]
        if not np.any(vals):
            continue
        # fill the full tensor grid by the value at the sorted node
        index = {k: v for k, v in zip(keys, vals)}
        full = np.empty((grid,) * n, dtype=complex)
        for multi in itertools.product(range(grid), repeat=n):
            node = tuple(sorted(axis[list(multi)]))
            full[multi] = index[node]
        comps[spin_of_index(i, n)] = _Interpolant(axis, full, _interp_method(m, grid))
    return InitialData(n, comps, R, m, full_domain=False, name=f"file:{Path(path).name}")


class _Interpolant:
    """Tensor-grid spline that returns the tabulated value exactly at every node."""

    def __init__(self, axis: np.ndarray, values: np.ndarray, method: str):
        n = values.ndim
        # the default iterative spline fit stops at ~1e-6; a direct solve is exact
        kw = {} if method == "linear" else {"solver": spsolve}
        self._re = RegularGridInterpolator((axis,) * n, values.real, method=method,
                                           bounds_error=False, fill_value=0.0, **kw)
        self._im = RegularGridInterpolator((axis,) * n, values.imag, method=method,
                                           bounds_error=False, fill_value=0.0, **kw)
        self.axis = axis
        self.values = values
        self.method = method

    def __call__(self, z: np.ndarray) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        out = self._re(z) + 1j * self._im(z)
        idx = np.clip(np.searchsorted(self.axis, z), 0, self.axis.size - 1)
        on_node = np.all(self.axis[idx] == z, axis=1)
        if np.any(on_node):
            out[on_node] = self.values[tuple(idx[on_node].T)]
        return out


def component_table(data: InitialData, z: np.ndarray) -> np.ndarray:
    """``(M, 2**N)`` values in component order."""
    return np.stack([data(spin_of_index(i, data.n), z) for i in range(1, 2**data.n + 1)], axis=1)


__all__ = [
    "InitialData", "InitialDataFormatError", "GridSpec", "ValidationReport", "bump",
    "compatible_bumps", "slater", "separated_wedge", "wedge_orbitals", "single_component", "bump_orbital",
    "antisymmetrize", "validate", "save", "load", "make_family", "FAMILIES",
    "component_index", "spin_label", "component_table",
]
