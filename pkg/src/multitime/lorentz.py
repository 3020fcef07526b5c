"""Boosts along z acting on events, wave functions and leaves.

A boost with rapidity ``beta`` maps ``z + t -> e^beta (z + t)`` and
``z - t -> e^-beta (z - t)``. The spinor factor on component ``s`` is
``prod_k (cosh(beta/2) - s_k sinh(beta/2)) = exp(-beta * sum(s) / 2)``, the
half-angle form that keeps the leaf norm invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .current import Hypersurface, support_interval
from .model import Event, as_events
from .solver import Evaluator


@dataclass(frozen=True)
class Boost:
    rapidity: float

    def compose(self, other: "Boost") -> "Boost":
        return Boost(self.rapidity + other.rapidity)

    def inverse(self) -> "Boost":
        return Boost(-self.rapidity)

    @property
    def matrix(self) -> np.ndarray:
        """Acts on column vectors ``(t, z)``."""
        c, s = math.cosh(self.rapidity), math.sinh(self.rapidity)
        return np.array([[c, s], [s, c]])

    def spinor_factor(self, s: Sequence[int]) -> float:
        b = 0.5 * self.rapidity
        return float(np.prod([math.cosh(b) - v * math.sinh(b) for v in s]))


def boost_events(b: Boost, x) -> np.ndarray:
    """Boost every event of an ``(..., 2)`` array with columns ``(t, z)``."""
    x = np.asarray(x, dtype=float)
    c, s = math.cosh(b.rapidity), math.sinh(b.rapidity)
    t, z = x[..., 0], x[..., 1]
    return np.stack([t * c + z * s, z * c + t * s], axis=-1)


def boost_event(b: Boost, e) -> Event:
    t, z = boost_events(b, np.asarray(tuple(e), dtype=float))
    return Event(float(t), float(z))


def interval(e1, e2) -> float:
    """Minkowski square ``dt^2 - dz^2``."""
    dt = e1[0] - e2[0]
    dz = e1[1] - e2[1]
    return dt * dt - dz * dz


class BoostedWaveFunction(Evaluator):
    """``psi'(x) = S psi(L^-1 x)``, evaluated lazily through the original solution."""

    def __init__(self, psi: Evaluator, boost: Boost):
        self.base = psi
        self.boost = boost
        self.params = psi.params
        self.tol = psi.tol
        self._inv = boost.inverse()

    @property
    def support_radius(self) -> float:
        return self.base.support_radius * math.exp(abs(self.boost.rapidity))

    def leaf_interval(self, sigma: Hypersurface) -> tuple[float, float]:
        """Support window on ``sigma``: the base window on the pulled-back leaf, pushed forward."""
        back = boost_hypersurface(self._inv, sigma)
        lo, hi = support_interval(self.base, back)
        ends = boost_events(self.boost, np.stack([back(np.array([lo, hi])), [lo, hi]], axis=-1))
        return float(ends[0, 1]), float(ends[1, 1])

    def evaluate_many(self, x, s: Sequence[int], check: bool = True) -> np.ndarray:
        # boosts keep space-like pairs in the same z order
        y = boost_events(self._inv, x)
        return self.boost.spinor_factor(s) * self.base.evaluate_many(y, s, check=check)

    def evaluate_full_many(self, x, s: Sequence[int], check: bool = True) -> np.ndarray:
        y = boost_events(self._inv, x)
        return self.boost.spinor_factor(s) * self.base.evaluate_full_many(y, s, check=check)


def boost_wavefunction(b: Boost, psi: Evaluator) -> BoostedWaveFunction:
    return BoostedWaveFunction(psi, b)


def _invert_position(sigma: Hypersurface, b: Boost, z: np.ndarray) -> np.ndarray:
    """Solve ``z = u cosh(beta) + t_S(u) sinh(beta)`` for ``u`` (increasing in ``u``)."""
    c, s = math.cosh(b.rapidity), math.sinh(b.rapidity)
    u = z / c
    for _ in range(60):
        tu, tp = sigma.profile_and_slope(u)
        step = (u * c + tu * s - z) / (c + tp * s)
        u = u - step
        if np.all(np.abs(step) <= 1e-14 * (1.0 + np.abs(u))):
            break
    return u


def boost_hypersurface(b: Boost, sigma: Hypersurface) -> Hypersurface:
    """Image of the leaf under the boost, again a graph over z."""
    c, s = math.cosh(b.rapidity), math.sinh(b.rapidity)
    v = math.tanh(b.rapidity)
    m = sigma.max_slope

    def joint(z):
        u = _invert_position(sigma, b, np.asarray(z, dtype=float))
        tu, tp = sigma.profile_and_slope(u)
        return tu * c + u * s, (tp * c + s) / (c + tp * s)

    bound = (m + abs(v)) / (1.0 + m * abs(v))
    return Hypersurface(lambda z: joint(z)[0], lambda z: joint(z)[1], bound, "boosted",
                        {"rapidity": b.rapidity, "base": sigma.spec()}, joint)


def boost_configuration(b: Boost, cfg) -> np.ndarray:
    return boost_events(b, as_events(cfg))
