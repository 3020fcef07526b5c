"""Tensor current, space-like leaves and probability integrals over them.

With the chosen gamma matrices ``gamma^0 gamma^1 = sigma_3`` acts on spin
component ``s`` as ``-s``, so the current is diagonal:

    j^{mu_1...mu_N} = sum_s |psi_s|^2 prod_k (-s_k)^{mu_k}.

On a product leaf ``t_k = t_S(z_k)`` the current form pulls back to the scalar
density ``sum_s |psi_s|^2 prod_k (1 + s_k t_S'(z_k))`` on the ordered simplex.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy.optimize import brentq

from .model import Kind, all_spins, as_events, classify


class SlopeError(ValueError):
    """The hypersurface is not space-like at some quadrature node."""


# ---------------------------------------------------------------------------
# current


def _sign_table(n: int) -> np.ndarray:
    """``(2,)*n + (2**n,)`` array of ``prod_k (-s_k)^{mu_k}``."""
    spins = np.asarray(all_spins(n))
    out = np.empty((2,) * n + (2**n,))
    for mu in itertools.product((0, 1), repeat=n):
        out[mu] = np.prod(np.where(np.asarray(mu) == 1, -spins, 1), axis=1)
    return out


def current_from_components(vals: np.ndarray, n: int) -> np.ndarray:
    """Current tensor(s) from component values of shape ``(..., 2**n)``."""
    dens = np.abs(np.asarray(vals)) ** 2
    return np.tensordot(dens, _sign_table(n), axes=([-1], [-1]))


def current(psi, cfg) -> np.ndarray:
    """All ``2**N`` entries ``j[mu_1, ..., mu_N]`` at a space-like configuration."""
    x = as_events(cfg)
    vals = psi.components(x[None], full=True)[0]
    return current_from_components(vals, psi.n)


def continuity_residual(psi, cfg, h: float = 1e-4) -> float:
    """Max over k of the central-difference ``d_t j^{..0..} + d_z j^{..1..}``."""
    x = as_events(cfg)
    n = x.shape[0]
    worst = 0.0
    for k in range(n):
        div = np.zeros((2,) * (n - 1))
        for mu in (0, 1):
            col = mu
            plus, minus = x.copy(), x.copy()
            plus[k, col] += h
            minus[k, col] -= h
            jp = current(psi, plus)
            jm = current(psi, minus)
            div += (np.take(jp, mu, axis=k) - np.take(jm, mu, axis=k)) / (2 * h)
        worst = max(worst, float(np.abs(div).max()))
    return worst


# ---------------------------------------------------------------------------
# hypersurfaces


@dataclass(frozen=True)
class Hypersurface:
    """Graph ``t = t_S(z)`` with a known bound on ``|t_S'|``."""

    profile: Callable[[np.ndarray], np.ndarray]
    slope: Callable[[np.ndarray], np.ndarray]
    max_slope: float
    kind: str = "custom"
    params: Mapping[str, Any] = field(default_factory=dict)
    joint: Callable[[np.ndarray], tuple[np.ndarray, np.ndarray]] | None = None

    def __post_init__(self):
        if not 0 <= self.max_slope < 1:
            raise SlopeError(f"slope bound {self.max_slope} is not below 1")

    def __call__(self, z) -> np.ndarray:
        return self.profile(np.asarray(z, dtype=float))

    def events(self, z: np.ndarray) -> np.ndarray:
        """Events ``(t_S(z_k), z_k)`` for positions of shape ``(M, N)``."""
        z = np.asarray(z, dtype=float)
        return np.stack([self.profile(z), z], axis=-1)

    def profile_and_slope(self, z) -> tuple[np.ndarray, np.ndarray]:
        z = np.asarray(z, dtype=float)
        if self.joint is not None:
            return self.joint(z)
        return self.profile(z), self.slope(z)

    def spec(self) -> dict:
        return {"type": self.kind, "params": dict(self.params)}

    @classmethod
    def flat(cls, t0: float = 0.0) -> "Hypersurface":
        return cls(lambda z: np.full_like(z, t0), lambda z: np.zeros_like(z), 0.0, "flat",
                   {"t0": t0})

    @classmethod
    def plane(cls, beta: float, t0: float = 0.0) -> "Hypersurface":
        """Simultaneity line of a frame with rapidity ``beta``: ``t = t0 + z tanh(beta)``."""
        v = math.tanh(beta)
        return cls(lambda z: t0 + v * z, lambda z: np.full_like(z, v), abs(v), "boost",
                   {"beta": beta, "t0": t0})

    @classmethod
    def tanh(cls, amplitude: float = 0.3, scale: float = 1.0, t0: float = 0.0) -> "Hypersurface":
        a, l = amplitude, scale
        return cls(lambda z: t0 + a * np.tanh(z / l),
                   lambda z: (a / l) / np.cosh(z / l) ** 2, abs(a / l), "tanh",
                   {"amplitude": a, "scale": l, "t0": t0})

    @classmethod
    def sine_series(cls, amplitudes: Sequence[float], wavenumbers: Sequence[float],
                    shifts: Sequence[float], t0: float = 0.0) -> "Hypersurface":
        a = np.asarray(amplitudes, dtype=float)
        k = np.asarray(wavenumbers, dtype=float)
        p = np.asarray(shifts, dtype=float)

        def prof(z):
            return t0 + np.sum(a * np.sin(np.multiply.outer(z, k) + p), axis=-1)

        def der(z):
            return np.sum(a * k * np.cos(np.multiply.outer(z, k) + p), axis=-1)

        return cls(prof, der, float(np.sum(np.abs(a * k))), "sine",
                   {"amplitudes": a.tolist(), "wavenumbers": k.tolist(),
                    "shifts": p.tolist(), "t0": t0})

    @classmethod
    def random(cls, rng: np.random.Generator, max_slope: float = 0.7, terms: int = 3,
               time_scale: float = 1.0) -> "Hypersurface":
        """Random smooth leaf with ``|t_S'| <= max_slope``."""
        k = rng.uniform(0.3, 2.0, terms)
        raw = rng.normal(size=terms)
        a = raw / np.sum(np.abs(raw * k)) * max_slope * rng.uniform(0.5, 1.0)
        return cls.sine_series(a, k, rng.uniform(0, 2 * np.pi, terms),
                               float(rng.uniform(-time_scale, time_scale)))

    @classmethod
    def from_spec(cls, spec: Mapping[str, Any] | str) -> "Hypersurface":
        """Build from ``{"type": "flat"|"boost"|"tanh"|"sine", "params": {...}}``."""
        if isinstance(spec, str):
            spec = json.loads(spec)
        kind = spec.get("type")
        params = dict(spec.get("params", {}))
        builders = {"flat": cls.flat, "boost": cls.plane, "tanh": cls.tanh,
                    "sine": cls.sine_series}
        if kind not in builders:
            raise ValueError(f"unknown hypersurface type {kind!r}")
        try:
            return builders[kind](**params)
        except TypeError as exc:
            raise ValueError(f"bad parameters for {kind!r} surface: {exc}") from exc


# ---------------------------------------------------------------------------
# quadrature on the ordered simplex


def _composite_gl(panels: int, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre nodes and weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(0.0, 1.0, panels + 1)
    half = np.diff(edges) / 2
    mid = (edges[:-1] + edges[1:]) / 2
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def simplex_rule(n: int, lo: float, hi: float, panels: int, order: int = 8
                 ) -> tuple[np.ndarray, np.ndarray]:
    """Nested rule on ``lo <= z_1 <= ... <= z_n <= hi``.

    ``z_1`` runs over ``[lo, hi]`` and each ``z_k`` over ``[z_{k-1}, hi]``, so the
    coincidence planes are panel edges and never cut through a cell.
    """
    u, v = _composite_gl(panels, order)
    z = (lo + (hi - lo) * u)[:, None]
    w = (hi - lo) * v
    for _ in range(n - 1):
        start = z[:, -1]
        span = hi - start
        nz = start[:, None] + span[:, None] * u[None, :]
        nw = w[:, None] * span[:, None] * v[None, :]
        z = np.concatenate([np.repeat(z, u.size, axis=0), nz.reshape(-1, 1)], axis=1)
        w = nw.ravel()
    return z, w


@dataclass(frozen=True)
class QuadratureResult:
    value: float
    panels: int
    change: float
    box: tuple[float, float]
    nodes: int
    converged: bool = True

    def as_dict(self) -> dict:
        return {"value": self.value, "panels": self.panels, "change": self.change,
                "box": list(self.box), "nodes": self.nodes,
                "converged": self.converged}


def support_box(psi, sigma: Hypersurface) -> float:
    """Half-width containing the support of ``psi`` restricted to ``sigma``.

    ``psi_s`` vanishes unless ``|z_k + s_k t_S(z_k)| <= R`` for all k, and
    ``|t_S(z)| <= |t_S(0)| + slope |z|``.
    """
    t0 = abs(float(sigma(np.array([0.0]))[0]))
    return (psi.support_radius + t0) / (1.0 - sigma.max_slope)


def support_interval(psi, sigma: Hypersurface) -> tuple[float, float]:
    """Tight interval of positions where some ``|z + s t_S(z)| <= R``.

    Both maps ``z -> z +- t_S(z)`` are increasing on a space-like leaf, so the
    ends are single roots inside the crude box.
    """
    if hasattr(psi, "leaf_interval"):
        return psi.leaf_interval(sigma)
    R, B = psi.support_radius, support_box(psi, sigma)
    lo, hi = np.inf, -np.inf
    for s in (-1.0, 1.0):
        f = lambda z, target: float(z + s * sigma(np.array([z]))[0]) - target
        lo = min(lo, brentq(f, -B - 1.0, B + 1.0, args=(-R,), xtol=1e-14))
        hi = max(hi, brentq(f, -B - 1.0, B + 1.0, args=(R,), xtol=1e-14))
    return lo, hi


def _density_integral(density: Callable[[np.ndarray], np.ndarray], n: int, sigma: Hypersurface,
                      box: tuple[float, float], panels: int, order: int, chunk: int
                      ) -> tuple[float, int]:
    z, w = simplex_rule(n, box[0], box[1], panels, order)
    times, slopes = sigma.profile_and_slope(z)
    if np.any(np.abs(slopes) >= 1.0):
        raise SlopeError("hypersurface is not space-like at a quadrature node")
    spins = np.asarray(all_spins(n), dtype=float)
    total = 0.0
    parts = []
    for lo in range(0, z.shape[0], chunk):
        zc = z[lo:lo + chunk]
        dens = density(np.stack([times[lo:lo + chunk], zc], axis=-1))  # (M, 2**n)
        weight = np.prod(1.0 + spins[None, :, :] * slopes[lo:lo + chunk, None, :], axis=2)
        parts.append(float(np.sum(w[lo:lo + chunk] * np.sum(dens * weight, axis=1))))
    total = math.fsum(parts)
    return total, z.shape[0]


def integrate_density(density: Callable[[np.ndarray], np.ndarray], n: int, sigma: Hypersurface,
                      box: tuple[float, float], rtol: float = 1e-9, order: int = 8,
                      panels: int = 4, max_nodes: int = 4_000_000, chunk: int = 65536
                      ) -> QuadratureResult:
    """Integral of a spin-resolved density over a leaf, doubling panels until the
    relative change drops below ``rtol`` or the next level exceeds ``max_nodes``."""
    prev, nodes = _density_integral(density, n, sigma, box, panels, order, chunk)
    change = math.inf
    while (2 * panels * order) ** n <= max_nodes:
        panels *= 2
        cur, nodes = _density_integral(density, n, sigma, box, panels, order, chunk)
        change = abs(cur - prev) / max(abs(cur), 1e-300)
        prev = cur
        if change < rtol or cur == 0.0:
            break
    return QuadratureResult(prev, panels, change, box, nodes, change < rtol or prev == 0.0)


def _abs2(psi) -> Callable[[np.ndarray], np.ndarray]:
    return lambda x: np.abs(psi.components(x, full=False, check=False)) ** 2


def _interval(psi, sigma, box) -> tuple[float, float]:
    if box is None:
        return support_interval(psi, sigma)
    if np.isscalar(box):
        return (-float(box), float(box))
    return (float(box[0]), float(box[1]))


def surface_report(psi, sigma: Hypersurface, box=None, rtol: float = 1e-9,
                   **kw) -> QuadratureResult:
    """Integral with convergence details; ``box`` is a half-width or ``(lo, hi)``."""
    box = _interval(psi, sigma, box)
    return integrate_density(_abs2(psi), psi.n, sigma, box, rtol, **kw)


def surface_integral(psi, sigma: Hypersurface, box=None, rtol: float = 1e-9,
                     **kw) -> float:
    """Probability carried through the leaf ``sigma``."""
    return surface_report(psi, sigma, box, rtol, **kw).value


def norm_distance(psi_a, psi_b, sigma: Hypersurface, box=None,
                  rtol: float = 1e-9, **kw) -> float:
    """``||psi_a - psi_b||`` in the leaf norm."""
    if psi_a.n != psi_b.n:
        raise ValueError("wave functions have different particle numbers")
    if box is None:
        ia, ib = support_interval(psi_a, sigma), support_interval(psi_b, sigma)
        box = (min(ia[0], ib[0]), max(ia[1], ib[1]))
    box = _interval(psi_a, sigma, box)

    def dens(x):
        a = psi_a.components(x, full=False, check=False)
        b = psi_b.components(x, full=False, check=False)
        return np.abs(a - b) ** 2

    res = integrate_density(dens, psi_a.n, sigma, box, rtol, **kw)
    return math.sqrt(max(res.value, 0.0))


# ---------------------------------------------------------------------------
# boundary flux


@dataclass
class FluxReport:
    max_violation: float
    per_stratum: dict[int, float]
    samples: int

    def as_dict(self) -> dict:
        return {"max_violation": self.max_violation,
                "per_stratum": {str(k): v for k, v in self.per_stratum.items()},
                "samples": self.samples}


def boundary_flux_check(psi, samples) -> FluxReport:
    """Net flux ``|sum_{s_k != s_k+1} s_{k+1} |psi_s|^2|`` through coincidence strata."""
    spins = all_spins(psi.n)
    per: dict[int, float] = {}
    count = 0
    for cfg in samples:
        x = as_events(cfg)
        cls = classify(x, psi.tol)
        if cls.kind is not Kind.BOUNDARY:
            raise ValueError(f"flux sample is {cls}, not on a coincidence stratum")
        vals = psi.components(x[None], full=False)[0]
        for k in cls.strata:
            flux = sum(s[k] * abs(v) ** 2 for s, v in zip(spins, vals) if s[k - 1] != s[k])
            per[k] = max(per.get(k, 0.0), abs(flux))
        count += 1
    return FluxReport(max(per.values(), default=0.0), per, count)
