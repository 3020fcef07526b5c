"""Configuration-space types for N massless Dirac particles in 1+1 dimensions.

Units are dimensionless with c = 1. A configuration is an ``(N, 2)`` array of
events with columns ``(t, z)``; batches of configurations are ``(M, N, 2)``.
Spin components are tuples of signs ``s_k in {-1, +1}`` and are linearly
indexed in binary order with ``- -> 0``, ``+ -> 1``, the last particle being
least significant.
"""

from __future__ import annotations

import enum
import itertools
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

import numpy as np

Spin = tuple[int, ...]

DEFAULT_TOL = 1e-12


class DomainError(ValueError):
    """Raised when a configuration lies outside the closed ordered domain."""


class Event(NamedTuple):
    t: float
    z: float


def _check_spin(s: Sequence[int]) -> Spin:
    s = tuple(int(v) for v in s)
    if not s or any(v not in (-1, 1) for v in s):
        raise ValueError(f"spin index must be a non-empty tuple of +-1, got {s!r}")
    return s


def component_index(s: Sequence[int]) -> int:
    """1-based linear index of spin component ``s``."""
    s = _check_spin(s)
    n = len(s)
    return 1 + sum(((v + 1) // 2) << (n - 1 - k) for k, v in enumerate(s))


def spin_of_index(i: int, n: int) -> Spin:
    """Inverse of :func:`component_index` for ``n`` particles."""
    if not 1 <= i <= 2**n:
        raise ValueError(f"component index {i} out of range 1..{2**n}")
    b = i - 1
    return tuple(1 if (b >> (n - 1 - k)) & 1 else -1 for k in range(n))


def all_spins(n: int) -> list[Spin]:
    """All ``2**n`` spin tuples in component order."""
    return [tuple(2 * b - 1 for b in bits) for bits in itertools.product((0, 1), repeat=n)]


def spin_label(s: Sequence[int]) -> str:
    return "".join("+" if v > 0 else "-" for v in s)


def parse_spin(label: str) -> Spin:
    return _check_spin([1 if ch == "+" else -1 if ch == "-" else 0 for ch in label])


@dataclass(frozen=True)
class ModelParams:
    """Particle number, boundary phases ``phi^(1..N-1)`` and smoothness order."""

    n_particles: int
    phases: tuple[float, ...]
    smoothness: int = 3

    def __post_init__(self):
        if self.n_particles < 2:
            raise ValueError("need at least two particles")
        phases = tuple(float(p) for p in self.phases)
        if len(phases) != self.n_particles - 1:
            raise ValueError(f"expected {self.n_particles - 1} boundary phases, got {len(phases)}")
        for p in phases:
            if not -np.pi < p <= np.pi:
                raise ValueError(f"boundary phase {p} not in (-pi, pi]")
        if self.smoothness < 1:
            raise ValueError("smoothness order must be >= 1")
        object.__setattr__(self, "phases", phases)

    @classmethod
    def uniform(cls, n: int, phi: float, smoothness: int = 3) -> "ModelParams":
        return cls(n, (reduce_angle(phi),) * (n - 1), smoothness)

    @property
    def phase_array(self) -> np.ndarray:
        return np.asarray(self.phases)


def reduce_angle(x: float) -> float:
    """Map an angle to the half-open interval (-pi, pi]."""
    y = float(np.mod(x, 2 * np.pi))
    if y > np.pi:
        y -= 2 * np.pi
    # keep -pi on the closed end
    if y <= -np.pi:
        y += 2 * np.pi
    return y


class Kind(enum.Enum):
    INTERIOR = "interior"
    BOUNDARY = "boundary"
    OUTSIDE = "outside"
    NOT_SPACELIKE = "not_spacelike"


@dataclass(frozen=True)
class Classification:
    kind: Kind
    strata: tuple[int, ...] = field(default=())  # 1-based k for each coinciding pair (k, k+1)

    @property
    def stratum(self) -> int | None:
        return self.strata[0] if self.strata else None

    @property
    def in_closed_domain(self) -> bool:
        return self.kind in (Kind.INTERIOR, Kind.BOUNDARY)

    def __str__(self):
        if self.kind is Kind.BOUNDARY:
            return f"BoundaryStratum({','.join(map(str, self.strata))})"
        return {
            Kind.INTERIOR: "Interior",
            Kind.OUTSIDE: "OutsideOrderedDomain",
            Kind.NOT_SPACELIKE: "NotSpacelike",
        }[self.kind]


# integer codes used by the vectorized classifier
INTERIOR, BOUNDARY, OUTSIDE, NOT_SPACELIKE = 0, 1, 2, 3


def as_events(cfg) -> np.ndarray:
    """Coerce a configuration (sequence of (t, z) pairs) to an ``(N, 2)`` float array."""
    if isinstance(cfg, Configuration):
        return cfg.array
    arr = np.asarray(cfg, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError(f"configuration must have shape (N, 2), got {arr.shape}")
    return arr


def classify_array(x: np.ndarray, tol: float = DEFAULT_TOL) -> tuple[np.ndarray, np.ndarray]:
    """Classify a batch of configurations.

    Returns ``(codes, coincident)`` where ``codes`` has shape ``(M,)`` with
    values INTERIOR/BOUNDARY/OUTSIDE/NOT_SPACELIKE and ``coincident`` is an
    ``(M, N-1)`` boolean array marking adjacent pairs that share an event.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 2:
        x = x[None]
    t, z = x[..., 0], x[..., 1]
    n = x.shape[1]
    dt = t[:, :, None] - t[:, None, :]
    dz = z[:, :, None] - z[:, None, :]
    coinc = (np.abs(dt) <= tol) & (np.abs(dz) <= tol)
    spacelike = dt * dt - dz * dz < -tol
    iu = np.triu_indices(n, 1)
    pair_ok = (spacelike | coinc)[:, iu[0], iu[1]]
    not_spacelike = ~pair_ok.all(axis=1)

    adj = np.arange(n - 1)
    adj_coinc = coinc[:, adj, adj + 1]
    ordered = (np.diff(z, axis=1) > 0) | adj_coinc
    # a coincident non-adjacent pair forces every pair in between to coincide
    outside = ~ordered.all(axis=1)
    if n > 2:
        for j, k in zip(*iu):
            if k - j > 1:
                chain = adj_coinc[:, j:k].all(axis=1)
                outside |= coinc[:, j, k] & ~chain

    codes = np.full(x.shape[0], INTERIOR, dtype=np.int8)
    codes[adj_coinc.any(axis=1)] = BOUNDARY
    codes[outside] = OUTSIDE
    codes[not_spacelike] = NOT_SPACELIKE
    return codes, adj_coinc


def classify(cfg, tol: float = DEFAULT_TOL) -> Classification:
    """Domain membership of a single configuration."""
    if tol < 0:
        raise ValueError("tolerance must be non-negative")
    codes, coinc = classify_array(as_events(cfg)[None], tol)
    code = int(codes[0])
    if code == BOUNDARY:
        strata = tuple(int(k) + 1 for k in np.flatnonzero(coinc[0]))
        return Classification(Kind.BOUNDARY, strata)
    return Classification({INTERIOR: Kind.INTERIOR, OUTSIDE: Kind.OUTSIDE,
                           NOT_SPACELIKE: Kind.NOT_SPACELIKE}[code])


@dataclass(frozen=True)
class Configuration:
    """N space-time events; classification is computed on demand."""

    events: tuple[Event, ...]

    def __post_init__(self):
        evs = tuple(Event(float(e[0]), float(e[1])) for e in self.events)
        if not all(np.isfinite(v) for e in evs for v in e):
            raise ValueError("event coordinates must be finite")
        object.__setattr__(self, "events", evs)

    @classmethod
    def from_array(cls, arr) -> "Configuration":
        return cls(tuple(map(tuple, as_events(arr))))

    @classmethod
    def equal_time(cls, t: float, zs: Sequence[float]) -> "Configuration":
        return cls(tuple((t, z) for z in zs))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.events, dtype=float).reshape(-1, 2)

    @property
    def n(self) -> int:
        return len(self.events)

    def classify(self, tol: float = DEFAULT_TOL) -> Classification:
        return classify(self.array, tol)


def characteristic_values(cfg, s: Sequence[int]) -> np.ndarray:
    """``c_k = z_k + s_k t_k``; accepts one configuration or a batch."""
    x = cfg.array if isinstance(cfg, Configuration) else np.asarray(cfg, dtype=float)
    s = np.asarray(_check_spin(s), dtype=float)
    if x.shape[-2] != len(s):
        raise ValueError("spin length does not match particle number")
    return x[..., 1] + s * x[..., 0]
