"""Entanglement, the equal-time point-interaction relation and the alpha-domain obstruction."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .initial_data import GridSpec, InitialData, Orbital
from .lorentz import Boost, boost_events
from .model import all_spins

# ---------------------------------------------------------------------------
# entanglement


class GridError(ValueError):
    """The sampling grid does not cover the support of the wave function."""


def _require_pair(psi):
    if psi.n != 2:
        raise ValueError("this diagnostic is defined for two particles")


def equal_time_matrix(psi, t: float, grid: GridSpec | None = None) -> tuple[np.ndarray, np.ndarray,
                                                                          np.ndarray]:
    """``chi`` reshaped over ``(s_1, z_1) x (s_2, z_2)`` at common time ``t``.

    The second axis is offset by half a grid step so no node lies on the
    coincidence line, where components may jump.
    """
    _require_pair(psi)
    grid = grid or GridSpec(points=160)
    reach = psi.support_radius + abs(t)
    bound = grid.bound if grid.bound is not None else reach + 0.5
    if bound < reach:
        raise GridError(f"grid half-width {bound} truncates the support (needs {reach})")
    z1 = np.linspace(-bound, bound, grid.points)
    z2 = z1 + 0.5 * (z1[1] - z1[0])
    Z1, Z2 = np.meshgrid(z1, z2, indexing="ij")
    x = np.stack([np.stack([np.full(Z1.size, t), Z1.ravel()], axis=1),
                  np.stack([np.full(Z2.size, t), Z2.ravel()], axis=1)], axis=1)
    P = grid.points
    mat = np.empty((2 * P, 2 * P), dtype=complex)
    for s in all_spins(2):
        i, j = (s[0] + 1) // 2, (s[1] + 1) // 2
        vals = psi.evaluate_full_many(x, s).reshape(P, P)
        mat[i * P:(i + 1) * P, j * P:(j + 1) * P] = vals
    return mat, z1, z2


def schmidt_spectrum(psi, t: float, grid: GridSpec | None = None) -> np.ndarray:
    mat, _, _ = equal_time_matrix(psi, t, grid)
    return np.linalg.svd(mat, compute_uv=False)


def schmidt_rank(psi, t: float, grid: GridSpec | None = None, svd_tol: float = 1e-8) -> int:
    """Number of singular values above ``svd_tol * sigma_max``."""
    sv = schmidt_spectrum(psi, t, grid)
    if sv.size == 0 or sv[0] == 0.0:
        return 0
    return int(np.sum(sv > svd_tol * sv[0]))


def heaviside_form(pair: Callable[[np.ndarray, np.ndarray], np.ndarray], phi: float, t: float,
                   z: np.ndarray, tail: Callable[[np.ndarray], np.ndarray] | None = None
                   ) -> np.ndarray:
    """``psi_{+-+..+}`` at common time ``t > 0`` from product initial data.

    ``pair(c1, c2)`` is the antisymmetry-consistent product ``alpha(c1) beta(c2)``
    and ``tail`` the remaining factor. The result is
    ``pair(c1, c2) tail(c3..) (Theta(c2 - c1) - e^{i phi} Theta(c1 - c2))`` with the
    tie assigned to the first branch.
    """
    z = np.atleast_2d(np.asarray(z, dtype=float))
    c1, c2 = z[:, 0] + t, z[:, 1] - t
    rest = z[:, 2:] + t
    val = pair(c1, c2) * np.where(c2 >= c1, 1.0, -np.exp(1j * phi))
    if tail is not None:
        val = val * tail(rest)
    return val


def wedge_pair(orbitals: Sequence[Orbital]) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """``g_{+-}`` of the normalised two-orbital Slater state, on all of ``R^2``."""
    a, b = orbitals

    def pair(c1, c2):
        A1, A2, B1, B2 = a(c1), a(c2), b(c1), b(c2)
        return (A1[:, 1] * B2[:, 0] - B1[:, 1] * A2[:, 0]) / math.sqrt(2.0)

    return pair


def product_data(n: int, left: Callable, right: Callable,
                 tail: Callable[[np.ndarray], np.ndarray] | None, support_radius: float,
                 m: int = 3) -> InitialData:
    """Data whose ``-++..+`` component is ``left(z1) right(z2) tail(z3..)``.

    The ``+-+..+`` component is the antisymmetric partner
    ``-left(z2) right(z1) tail(z3..)``; every other component vanishes. With
    ``left`` supported to the left of ``right`` and ``tail`` further right the
    boundary compatibility holds for any phases.
    """
    tail = tail or (lambda r: np.ones(r.shape[0]))
    minus = (-1, 1) + (1,) * (n - 2)
    plus = (1, -1) + (1,) * (n - 2)

    def g_minus(z):
        return left(z[:, 0]) * right(z[:, 1]) * tail(z[:, 2:])

    def g_plus(z):
        return -left(z[:, 1]) * right(z[:, 0]) * tail(z[:, 2:])

    return InitialData(n, {minus: g_minus, plus: g_plus}, support_radius, m, name="product")


# ---------------------------------------------------------------------------
# equal-time relation at u = 0


@dataclass
class DeltaReport:
    phi: float
    t: float
    eps: float
    jump_minus_plus: float
    jump_plus_minus: float
    equal_sign_at_zero: float
    samples: list[dict] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {"phi": self.phi, "t": self.t, "eps": self.eps,
                "jump_relation_chi2": self.jump_minus_plus,
                "jump_relation_chi3": self.jump_plus_minus,
                "equal_sign_at_zero": self.equal_sign_at_zero, "samples": self.samples}


def single_time(psi, t: float, u: np.ndarray, v: np.ndarray) -> np.ndarray:
    """``chi_1..chi_4`` at ``z_1 = v + u``, ``z_2 = v - u``; shape ``(M, 4)``."""
    _require_pair(psi)
    u, v = np.broadcast_arrays(np.asarray(u, dtype=float), np.asarray(v, dtype=float))
    x = np.stack([np.stack([np.full(u.size, t), (v + u).ravel()], axis=1),
                  np.stack([np.full(u.size, t), (v - u).ravel()], axis=1)], axis=1)
    return psi.components(x, full=True)


def delta_bc_check(psi, t: float, v_samples: Sequence[float], eps: float = 1e-5) -> DeltaReport:
    """One-sided limits at ``u -> 0`` by linear extrapolation from ``u = +-eps, +-2 eps``.

    Checks ``chi_2(0-) = -e^{-i phi} chi_2(0+)``, ``chi_3(0-) = -e^{i phi} chi_3(0+)``
    and that ``chi_1``, ``chi_4`` vanish at ``u = 0``.
    """
    phi = float(psi.params.phases[0])
    v = np.asarray(v_samples, dtype=float)
    ones = np.ones_like(v)
    lim = {}
    for side in (-1.0, 1.0):
        near = single_time(psi, t, side * eps * ones, v)
        far = single_time(psi, t, side * 2 * eps * ones, v)
        lim[side] = 2.0 * near - far
    lo, hi = lim[-1.0], lim[1.0]
    r2 = np.abs(lo[:, 1] + np.exp(-1j * phi) * hi[:, 1])
    r3 = np.abs(lo[:, 2] + np.exp(1j * phi) * hi[:, 2])
    zero = np.abs(np.concatenate([lo[:, [0, 3]], hi[:, [0, 3]]], axis=1)).max(axis=1)
    samples = [{"v": float(vv), "chi2_left": [a.real, a.imag], "chi2_right": [b.real, b.imag],
                "residual_chi2": float(e2), "residual_chi3": float(e3)}
               for vv, a, b, e2, e3 in zip(v, lo[:, 1], hi[:, 1], r2, r3)]
    return DeltaReport(phi, t, eps, float(r2.max(initial=0.0)), float(r3.max(initial=0.0)),
                       float(zero.max(initial=0.0)), samples)


# ---------------------------------------------------------------------------
# alpha-space-like domain


class NoRootError(ValueError):
    """Neither branch of the quadratic system gives points in the initial sector."""


@dataclass(frozen=True)
class AlphaInstance:
    a1: float
    b1: float
    a2: float
    b2: float
    alpha: float
    y1: float | None = None
    t1: float | None = None
    y2: float | None = None
    t2: float | None = None
    x1: float | None = None
    s1: float | None = None
    x2: float | None = None
    s2: float | None = None
    xi: float | None = None

    def __post_init__(self):
        if not (self.a1 < self.b1 < self.a2 < self.b2):
            raise ValueError("need a1 < b1 < a2 < b2")
        if not self.alpha > 0:
            raise ValueError("alpha must be positive")

    @property
    def points(self) -> dict[str, float]:
        names = ("y1", "t1", "y2", "t2", "x1", "s1", "x2", "s2")
        return {k: getattr(self, k) for k in names}

    def events(self) -> tuple[np.ndarray, np.ndarray]:
        """``(Y, X)`` as ``(2, 2)`` arrays of ``(t, z)`` events."""
        Y = np.array([[self.t1, self.y1], [self.t2, self.y2]], dtype=float)
        X = np.array([[self.s1, self.x1], [self.s2, self.x2]], dtype=float)
        return Y, X


def xi(inst: AlphaInstance) -> float:
    d1, d2 = inst.b1 - inst.a1, inst.b2 - inst.a2
    return math.sqrt((d2 * d2 * d1 + 4.0 * inst.alpha**2 * d2) / d1)


def constraint_residuals(inst: AlphaInstance, p: dict[str, float] | None = None) -> np.ndarray:
    """The eight defining equations, as residuals."""
    p = p or inst.points
    y1, t1, y2, t2 = p["y1"], p["t1"], p["y2"], p["t2"]
    x1, s1, x2, s2 = p["x1"], p["s1"], p["x2"], p["s2"]
    a2 = inst.alpha**2
    return np.array([
        inst.a1 - (y1 - t1),
        inst.a2 - (y2 + t2),
        (t1 - t2) ** 2 - ((y1 - y2) ** 2 - a2),
        inst.b1 - (x1 - s1),
        inst.b2 - (x2 + s2),
        (s1 - s2) ** 2 - ((x1 - x2) ** 2 - a2),
        (x1 + s1) - (y1 + t1),
        (x2 - s2) - (y2 - t2),
    ])


def _derived_branch(inst: AlphaInstance, sign: float) -> dict[str, float]:
    """Closed-form solution on one branch.

    With ``d_j = b_j - a_j`` and ``Q = y1 - y2`` the system reduces to
    ``2 Q^2 + (d1 - d2) Q - d1 d2 / 2 - 2 alpha^2 = 0``.
    """
    a1, b1, a2, b2 = inst.a1, inst.b1, inst.a2, inst.b2
    d1, d2 = b1 - a1, b2 - a2
    S, D = d1 + d2, d1 - d2
    Q = (-D + sign * S * math.sqrt(1.0 + 4.0 * inst.alpha**2 / (d1 * d2))) / 4.0
    M = (d1 * d2 - D * Q) / S
    P = Q - (a1 - a2)
    t1, t2 = (P + M) / 2.0, (P - M) / 2.0
    s1 = t1 + (a1 - b1) / 2.0
    s2 = t2 + (b2 - a2) / 2.0
    return {"y1": a1 + t1, "t1": t1, "y2": a2 - t2, "t2": t2,
            "x1": b1 + s1, "s1": s1, "x2": b2 - s2, "s2": s2}


def appendix_forms(inst: AlphaInstance, xi_value: float) -> dict[str, float]:
    """The printed closed forms, evaluated verbatim for a given ``xi``."""
    a1, b1, a2, b2 = inst.a1, inst.b1, inst.a2, inst.b2
    al2 = inst.alpha**2
    h = 0.5 * (a2 - 2 * b1 + b2)
    w = -a1 + b1 + h - 0.5 * xi_value
    num = al2 - b1**2 + 2 * b1 * b2 - b2**2 + (b2 - b1) * (h - 0.5 * xi_value)
    den = 2 * b1 - 2 * b2 + (a2 - 2 * b1 + b2) + xi_value
    return {
        "y1": a1 + 0.5 * w,
        "t1": 0.5 * w,
        "y2": a1 + 0.5 * (-a1 + b1 + h + 0.5 * xi_value),
        "t2": (a2 - b2 + 2 * num) / (4 * b1 - 4 * b2 + 2 * (a2 - 2 * b1 + b2) - 2 * xi_value),
        "x1": b1 + 0.25 * (a2 - 2 * b1 + b2) + 0.25 * xi_value,
        "s1": 0.25 * (a2 - 2 * b1 + b2) + 0.25 * xi_value,
        "x2": (b2 - al2 - b1**2 + 2 * b1 * b2 - b2**2 + (b2 - b1) * (h - 0.5 * xi_value)) / den,
        "s2": num / den,
    }


def _in_sector(p: dict[str, float]) -> bool:
    return p["y1"] < p["y2"] and p["x1"] < p["x2"]


def alpha_points(inst: AlphaInstance, tol: float = 1e-9) -> AlphaInstance:
    """Fill the eight derived coordinates.

    Both branches of the quadratic solve the eight equations; the one kept has
    ``y1 < y2`` and ``x1 < x2``, the sector of the initial points.
    """
    chosen = None
    for sign in (-1.0, 1.0):
        p = _derived_branch(inst, sign)
        res = np.abs(constraint_residuals(inst, p)).max()
        scale = 1.0 + max(abs(v) for v in p.values()) ** 2
        if res <= tol * scale and _in_sector(p):
            chosen = p
            break
    if chosen is None:
        raise NoRootError("no branch satisfies the constraints in the initial sector")
    return replace(inst, xi=xi(inst), **chosen)


def appendix_report(inst: AlphaInstance) -> dict:
    """Residuals of the printed closed forms for both signs of ``xi``."""
    out = {}
    x = xi(inst)
    for label, val in (("+xi", x), ("-xi", -x)):
        try:
            p = appendix_forms(inst, val)
        except ZeroDivisionError:
            out[label] = {"error": "division by zero"}
            continue
        res = constraint_residuals(inst, p)
        out[label] = {"points": p, "residuals": res.tolist(),
                      "max_residual": float(np.abs(res).max())}
    return out


@dataclass
class ContradictionReport:
    value_via_y: complex
    value_via_x: complex
    conflict: float
    characteristic_y: tuple[float, float]
    characteristic_x: tuple[float, float]
    path_interior: bool

    def as_dict(self) -> dict:
        return {"value_via_y": [self.value_via_y.real, self.value_via_y.imag],
                "value_via_x": [self.value_via_x.real, self.value_via_x.imag],
                "conflict": self.conflict,
                "characteristic_y": list(self.characteristic_y),
                "characteristic_x": list(self.characteristic_x),
                "path_interior": self.path_interior}


def _alpha_interval(ev: np.ndarray) -> np.ndarray:
    """Minkowski square of the pair separation for ``(..., 2, 2)`` event pairs."""
    d = ev[..., 0, :] - ev[..., 1, :]
    return d[..., 0] ** 2 - d[..., 1] ** 2


def alpha_contradiction_demo(g_minus_plus: Callable[[float, float], complex], inst: AlphaInstance,
                             phi: float = 0.0, path_samples: int = 200) -> ContradictionReport:
    """Two evaluations of ``psi_{+-}`` at ``Y`` that any solution would have to equate.

    Route 1: the boundary condition at ``Y`` and transport of ``psi_{-+}`` back to
    ``t = 0``. Route 2: transport of ``psi_{+-}`` from ``Y`` to ``X`` along its
    characteristic, the boundary condition at ``X`` and transport of ``psi_{-+}``
    back to ``t = 0``.
    """
    if inst.t1 is None:
        inst = alpha_points(inst)
    Y, X = inst.events()
    # psi_{-+} is constant along (z_1 - t_1, z_2 + t_2)
    cy = (Y[0, 1] - Y[0, 0], Y[1, 1] + Y[1, 0])
    cx = (X[0, 1] - X[0, 0], X[1, 1] + X[1, 0])
    via_y = complex(np.exp(1j * phi) * g_minus_plus(*cy))
    via_x = complex(np.exp(1j * phi) * g_minus_plus(*cx))

    # the connecting path: move particle 2 from Y2 to X2, then particle 1 from Y1 to X1
    lam = np.linspace(0.0, 1.0, path_samples)[1:-1]
    leg1 = np.stack([np.repeat(Y[:1][None], lam.size, 0)[:, 0],
                     Y[1] + lam[:, None] * (X[1] - Y[1])], axis=1)
    leg2 = np.stack([Y[0] + lam[:, None] * (X[0] - Y[0]),
                     np.repeat(X[1:][None], lam.size, 0)[:, 0]], axis=1)
    inside = bool(np.all(_alpha_interval(np.concatenate([leg1, leg2])) < -inst.alpha**2))
    return ContradictionReport(via_y, via_x, abs(via_y - via_x), cy, cx, inside)


def boost_alpha_points(inst: AlphaInstance, b: Boost) -> dict:
    """Boosted ``Y`` and ``X`` with their separations and characteristic values."""
    if inst.t1 is None:
        inst = alpha_points(inst)
    Y, X = inst.events()
    Yb, Xb = boost_events(b, Y), boost_events(b, X)
    return {
        "Y": Yb, "X": Xb,
        "interval_y": float(_alpha_interval(Yb)), "interval_x": float(_alpha_interval(Xb)),
        # psi_{+-} characteristic: (z_1 + t_1, z_2 - t_2), each scaled by e^{+-beta}
        "char_plus_minus_y": (Yb[0, 1] + Yb[0, 0], Yb[1, 1] - Yb[1, 0]),
        "char_plus_minus_x": (Xb[0, 1] + Xb[0, 0], Xb[1, 1] - Xb[1, 0]),
    }


def alpha_bc_uniqueness_note() -> str:
    return (
        "On the alpha-space-like domain the only boundary conditions compatible with "
        "probability conservation on every space-like leaf, antisymmetry and Poincare "
        "invariance are psi_{+-} = exp(+-i phi) psi_{-+} on the two boundary components. "
        "The flux through the boundary at p must vanish pointwise because exchanging the "
        "particles maps one boundary component onto the other with reversed orientation, "
        "so |psi_{+-}| = |psi_{-+}| there; invariance under translations and boosts forces "
        "the phase to be locally constant. Any other condition either leaks probability or "
        "breaks invariance, so only this family is exercised here: alpha_points builds the "
        "two boundary configurations on one characteristic of psi_{+-} and "
        "alpha_contradiction_demo shows that the condition over-determines the solution "
        "unless g_{-+} takes equal values at (a1, a2) and (b1, b2)."
    )
