"""Exact solution by sorting characteristic values and applying the phase ledger."""

from __future__ import annotations

import csv
import itertools
from pathlib import Path
from typing import Sequence

import numpy as np

from .initial_data import InitialData
from .model import (
    BOUNDARY,
    DEFAULT_TOL,
    INTERIOR,
    NOT_SPACELIKE,
    DomainError,
    Kind,
    ModelParams,
    Spin,
    all_spins,
    as_events,
    classify,
    classify_array,
    spin_label,
)
from .phases import phase_coefficients


class TraceError(RuntimeError):
    """The geometric tracing oracle could not find a valid collision point."""


def _perm_keys(perm: np.ndarray) -> np.ndarray:
    n = perm.shape[1]
    return perm @ (n ** np.arange(n))


def _parity(perm: np.ndarray) -> np.ndarray:
    n = perm.shape[1]
    inv = np.zeros(perm.shape[0], dtype=int)
    for a in range(n):
        for b in range(a + 1, n):
            inv += perm[:, a] > perm[:, b]
    return np.where(inv % 2 == 0, 1, -1)


class Evaluator:
    """Shared interface: subclasses provide ``evaluate_many`` and ``evaluate_full_many``
    plus ``n``, ``params``, ``tol`` and ``support_radius``."""

    params: ModelParams
    tol: float

    @property
    def n(self) -> int:
        return self.params.n_particles

    def _check(self, x: np.ndarray, allow_sectors: bool = False):
        codes, _ = classify_array(x, self.tol)
        if np.any(codes == NOT_SPACELIKE):
            raise DomainError("configuration is not space-like")
        if not allow_sectors and np.any((codes != INTERIOR) & (codes != BOUNDARY)):
            raise DomainError("configuration is outside the ordered domain z_1 <= ... <= z_N")

    def evaluate(self, cfg, s: Sequence[int]) -> complex:
        return complex(self.evaluate_many(as_events(cfg)[None], s)[0])

    def evaluate_full(self, cfg, s: Sequence[int]) -> complex:
        return complex(self.evaluate_full_many(as_events(cfg)[None], s)[0])

    def components(self, x, full: bool = True, check: bool = True) -> np.ndarray:
        """All ``2**N`` components, shape ``(M, 2**N)`` in component order."""
        f = self.evaluate_full_many if full else self.evaluate_many
        return np.stack([f(x, s, check=check) for s in all_spins(self.n)], axis=1)

    # -- checks ------------------------------------------------------------

    def residual(self, cfg, s: Sequence[int], h: float | None = None) -> float:
        """Central-difference size of ``(d/dt_k - s_k d/dz_k) psi_s``, max over k."""
        x = as_events(cfg)
        s = tuple(int(v) for v in s)
        if h is None:
            h = 1e-4 * (1.0 + float(np.abs(x).max()))
        n = x.shape[0]
        stencil = []
        for k in range(n):
            for col in (0, 1):
                for sgn in (1.0, -1.0):
                    y = x.copy()
                    y[k, col] += sgn * h
                    stencil.append(y)
        stencil = np.asarray(stencil)
        # every stencil point, and a 2h neighbourhood, must stay interior
        widened = x[None] + 2.0 * (stencil - x[None])
        codes, _ = classify_array(np.concatenate([stencil, widened]), self.tol)
        if np.any(codes != INTERIOR) or not np.all(_pair_gaps(x) > 2 * h):
            raise DomainError("residual stencil reaches the boundary")
        c = x[:, 1] + np.asarray(s) * x[:, 0]
        gaps = np.abs(c[:, None] - c[None, :])[np.triu_indices(n, 1)]
        if np.any(gaps <= 2 * h):
            raise DomainError("residual stencil straddles a characteristic tie")
        vals = self.evaluate_many(stencil, s, check=False).reshape(n, 2, 2)
        dt = (vals[:, 0, 0] - vals[:, 0, 1]) / (2 * h)
        dz = (vals[:, 1, 0] - vals[:, 1, 1]) / (2 * h)
        return float(np.max(np.abs(dt - np.asarray(s) * dz)))

    def boundary_check(self, cfg) -> list[tuple[Spin, complex, complex]]:
        """``(u, psi_u, exp(i phi^(k)) psi_v)`` for every ``u = (..+-..)`` at each stratum k."""
        x = as_events(cfg)
        cls = classify(x, self.tol)
        if cls.kind is not Kind.BOUNDARY:
            raise DomainError(f"configuration is {cls}, not on a coincidence stratum")
        phases = self.params.phase_array
        out = []
        for k in (j - 1 for j in cls.strata):
            for rest in itertools.product((-1, 1), repeat=self.n - 2):
                u = tuple(rest[:k]) + (1, -1) + tuple(rest[k:])
                v = tuple(rest[:k]) + (-1, 1) + tuple(rest[k:])
                a = self.evaluate(x, u)
                b = np.exp(1j * phases[k]) * self.evaluate(x, v)
                out.append((u, a, complex(b)))
        return out



class WaveFunction(Evaluator):
    """Unique solution determined by model parameters and compatible initial data."""

    def __init__(self, params: ModelParams, data: InitialData, tol: float = DEFAULT_TOL):
        if data.n != params.n_particles:
            raise ValueError("data and model particle numbers differ")
        self.params = params
        self.data = data
        self.tol = tol
        self._phases = params.phase_array

    @property
    def support_radius(self) -> float:
        """Bound on ``|c_k|`` outside which every component vanishes."""
        return self.data.support_radius

    # -- ordered domain ----------------------------------------------------

    def evaluate_many(self, x, s: Sequence[int], check: bool = True) -> np.ndarray:
        """Component ``s`` at a batch ``(M, N, 2)`` of ordered configurations."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[None]
        s = tuple(int(v) for v in s)
        if check:
            self._check(x)
        c = x[..., 1] + np.asarray(s, dtype=float) * x[..., 0]
        perm = np.argsort(c, axis=1, kind="stable")
        keys = _perm_keys(perm)
        uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
        out = np.empty(x.shape[0], dtype=complex)
        for j, row in enumerate(first):
            idx = np.flatnonzero(inv == j)
            pi = tuple(int(p) for p in perm[row])
            coeff, u = phase_coefficients(s, pi)
            ph = float(np.dot(coeff, self._phases)) if coeff else 0.0
            out[idx] = np.exp(1j * ph) * self.data(u, c[np.ix_(idx, pi)])
        return out

    # -- all sectors via antisymmetry -------------------------------------

    def evaluate_full_many(self, x, s: Sequence[int], check: bool = True) -> np.ndarray:
        """Component ``s`` anywhere in the space-like domain.

        Events are sorted by position with permutation ``rho`` and the value is
        ``sgn(rho) * psi_{s o rho}(x o rho)``.
        """
        x = np.asarray(x, dtype=float)
        if x.ndim == 2:
            x = x[None]
        s = np.asarray(tuple(int(v) for v in s))
        if check:
            self._check(x, allow_sectors=True)
        rho = np.argsort(x[..., 1], axis=1, kind="stable")
        sign = _parity(rho)
        xs = np.take_along_axis(x, rho[..., None], axis=1)
        keys = _perm_keys(rho)
        uniq, first, inv = np.unique(keys, return_index=True, return_inverse=True)
        out = np.empty(x.shape[0], dtype=complex)
        for j, row in enumerate(first):
            idx = np.flatnonzero(inv == j)
            r = rho[row]
            out[idx] = sign[row] * self.evaluate_many(xs[idx], tuple(s[r]), check=check)
        return out

    # -- independent oracle ------------------------------------------------

    def trace_evaluate(self, cfg, s: Sequence[int]) -> tuple[complex, list[dict]]:
        """Evaluate by walking back along the characteristic.

        At each step the latest crossing of two adjacent characteristic lines is
        located geometrically, both particles are moved to the crossing point,
        the boundary condition swaps their spins (picking up ``exp(i s_k phi^(k))``)
        and the characteristic values are recomputed from the new events. When
        the values are ordered, the initial surface is reached without leaving
        the closed domain.
        """
        ev = as_events(cfg).copy()
        if not classify(ev, self.tol).in_closed_domain:
            raise DomainError("configuration is outside the closed ordered domain")
        spin = list(int(v) for v in s)
        n = len(spin)
        total = 0.0
        steps: list[dict] = []
        for _ in range(n * (n - 1) // 2 + 1):
            c = ev[:, 1] + np.asarray(spin) * ev[:, 0]
            inverted = [k for k in range(n - 1) if c[k] > c[k + 1]]
            if not inverted:
                val = np.exp(1j * total) * self.data(tuple(spin), c[None])[0]
                return complex(val), steps
            candidates = []
            for k in inverted:
                if spin[k] == spin[k + 1]:
                    raise TraceError(f"equal-sign lines crossed at pair {k + 1}")
                tp = (c[k] - c[k + 1]) / (spin[k] - spin[k + 1])
                zp = c[k] - spin[k] * tp
                candidates.append((abs(tp), k, tp, zp))
            found = False
            for _, k, tp, zp in sorted(candidates, reverse=True):
                # bystanders either slide along their own lines to the crossing
                # time or stay put; both keep them on the same characteristic
                slid = np.stack([np.full(n, tp), c - np.asarray(spin) * tp], axis=1)
                for trial in (slid, ev.copy()):
                    trial[k] = trial[k + 1] = (tp, zp)
                    if classify(trial, self.tol).in_closed_domain:
                        found = True
                        break
                if found:
                    break
            if not found:
                raise TraceError("no collision point keeps the configuration in the domain")
            ev = trial
            total += spin[k] * self._phases[k]
            steps.append({"pair": k + 1, "point": (float(tp), float(zp)),
                          "from": spin_label(spin)})
            spin[k], spin[k + 1] = spin[k + 1], spin[k]
        raise TraceError("tracing did not terminate")

def _pair_gaps(x: np.ndarray) -> np.ndarray:
    """Space-like margin ``|dz| - |dt|`` for every pair."""
    n = x.shape[0]
    iu = np.triu_indices(n, 1)
    dt = np.abs(x[:, 0][:, None] - x[:, 0][None, :])[iu]
    dz = np.abs(x[:, 1][:, None] - x[:, 1][None, :])[iu]
    return dz - dt


# ---------------------------------------------------------------------------
# sampling helpers


def random_interior(rng: np.random.Generator, n: int, size: int, time_scale: float = 2.0,
                    spread: float = 2.0, min_gap: float = 0.05) -> np.ndarray:
    """Random ordered space-like configurations, shape ``(size, n, 2)``.

    Adjacent gaps exceed the time difference by at least ``min_gap``, which makes
    every pair space-like.
    """
    t = rng.uniform(-time_scale, time_scale, size=(size, n))
    gaps = np.abs(np.diff(t, axis=1)) + min_gap + rng.exponential(spread / n, size=(size, n - 1))
    z0 = rng.uniform(-spread, spread / 2, size=(size, 1))
    z = np.concatenate([z0, z0 + np.cumsum(gaps, axis=1)], axis=1)
    return np.stack([t, z], axis=-1)


def random_stratum(rng: np.random.Generator, n: int, k: int, size: int, time_scale: float = 2.0,
                   spread: float = 2.0, equal_time: bool = False) -> np.ndarray:
    """Random points on the coincidence stratum of pair ``k`` (1-based)."""
    base = random_interior(rng, n - 1, size, time_scale, spread)
    if equal_time:
        base[..., 0] = base[:, :1, 0]
        base[..., 1] = np.sort(base[..., 1], axis=1)
    return np.insert(base, k, base[:, k - 1], axis=1)


def equal_time_grid(n: int, t: float, axis: np.ndarray) -> np.ndarray:
    """Ordered configurations at common time ``t`` with strictly increasing positions."""
    idx = np.array(list(itertools.combinations(range(len(axis)), n)), dtype=int)
    z = axis[idx]
    return np.stack([np.full_like(z, t), z], axis=-1)


def write_grid_csv(psi, x: np.ndarray, path: str | Path) -> None:
    """CSV of all components at configurations ``x`` (any space-like sector)."""
    x = np.asarray(x, dtype=float)
    n = x.shape[1]
    vals = psi.components(x, full=True)
    header = [f"{a}{k}" for k in range(1, n + 1) for a in ("t", "z")]
    for s in all_spins(n):
        header += [f"re_{spin_label(s)}", f"im_{spin_label(s)}"]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row, v in zip(x.reshape(x.shape[0], -1), vals):
            cells = [f"{q:.17g}" for q in row]
            for z in v:
                cells += [f"{z.real:.17g}", f"{z.imag:.17g}"]
            w.writerow(cells)
