"""End-to-end acceptance checks, one test per criterion.

Every test prints a single ``PASS``/``FAIL`` line; the same lines are repeated
in the pytest terminal summary. Run with ``pytest tests/test_acceptance.py -s``
or directly as ``python tests/test_acceptance.py``.
"""
import itertools
import math
import time

import numpy as np

from multitime.analysis import (
    AlphaInstance,
    alpha_contradiction_demo,
    alpha_points,
    constraint_residuals,
    delta_bc_check,
    heaviside_form,
    product_data,
    schmidt_rank,
    wedge_pair,
)
from multitime.current import Hypersurface, boundary_flux_check, surface_report
from multitime.initial_data import InitialData, bump, compatible_bumps, slater, wedge_orbitals
from multitime.lorentz import Boost, BoostedWaveFunction, boost_events, boost_hypersurface
from multitime.model import DomainError, ModelParams, all_spins
from multitime.phases import (
    admissible_collision_signs,
    all_decomposition_coefficients,
    collisions,
    phase_coefficients,
    sort_permutation,
)
from multitime.solver import WaveFunction, random_interior, random_stratum

try:
    from conftest import ACCEPTANCE_LINES
except ImportError:  # run as a script outside pytest
    ACCEPTANCE_LINES = {}

PHI3 = (math.pi / 2, 1.1)


def report(k: int, ok: bool, detail: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {detail}"
    ACCEPTANCE_LINES[k] = line
    print(line)
    assert ok, line


def bump_psi(n, phases):
    params = ModelParams(n, phases)
    return WaveFunction(params, compatible_bumps(params))


def wedge_psi(phi, mixed=0.3):
    orbs, radius = wedge_orbitals(2, mixed=mixed)
    return WaveFunction(ModelParams(2, (phi,)), slater(orbs, radius)), orbs


def perm_sign(p) -> int:
    return (-1) ** sum(1 for a, b in itertools.combinations(range(len(p)), 2) if p[a] > p[b])


def test_criterion_1_exact_solution():
    start = time.perf_counter()
    psi = bump_psi(3, PHI3)
    rng = np.random.default_rng(101)
    x = random_interior(rng, 3, 10_000, time_scale=2.5)
    c_plus = x[..., 1] + x[..., 0]
    all_plus = np.array_equal(psi.evaluate_many(x, (1, 1, 1)), psi.data((1, 1, 1), c_plus))
    cfg = [(1.0, 0.0), (1.0, 0.5), (0.0, 3.0)]
    c = np.array([1.0, -0.5, 3.0])
    expect = np.exp(1j * PHI3[0]) * psi.data((-1, 1, 1), [[c[1], c[0], c[2]]])[0]
    one_collision = psi.evaluate(cfg, (1, -1, 1)) == expect
    spins = rng.choice([-1, 1], size=(x.shape[0], 3))
    worst, hit = 0.0, 0
    for s in all_spins(3):
        rows = np.flatnonzero(np.all(spins == s, axis=1))
        fast = psi.evaluate_many(x[rows], s)
        for i, v in zip(rows, fast):
            ref, steps = psi.trace_evaluate(x[i], s)
            worst = max(worst, abs(v - ref))
            hit += bool(steps)
    elapsed = time.perf_counter() - start
    ok = all_plus and one_collision and worst <= 1e-12 and elapsed < 10.0
    report(1, ok, f"all-plus={all_plus} one-collision={one_collision} "
                  f"max|closed-trace|={worst:.2e} over {x.shape[0]} points "
                  f"({hit} with collisions) in {elapsed:.1f}s")


def test_criterion_2_conservation():
    start = time.perf_counter()
    rng = np.random.default_rng(202)
    details, ok = [], True
    for n, phases in ((2, (math.pi / 2,)), (3, (math.pi / 2, -0.7))):
        psi = bump_psi(n, phases)
        vals = []
        for _ in range(20):
            r = surface_report(psi, Hypersurface.random(rng, 0.7), rtol=1e-6)
            ok &= r.converged
            vals.append(r.value)
        vals = np.array(vals)
        spread = (vals.max() - vals.min()) / vals.mean()
        ok &= spread < 1e-6
        details.append(f"N={n} spread={spread:.2e}")
    elapsed = time.perf_counter() - start
    ok &= elapsed < 120.0
    report(2, ok, f"{', '.join(details)} over 20 surfaces each, {elapsed:.1f}s")


def test_criterion_3_boundary_flux():
    rng = np.random.default_rng(303)
    valid = 0.0
    for n, phases in ((2, (math.pi / 2,)), (3, PHI3)):
        psi = bump_psi(n, phases)
        for k in range(1, n):
            for equal_time in (False, True):
                pts = random_stratum(rng, n, k, 200, equal_time=equal_time)
                valid = max(valid, boundary_flux_check(psi, pts).max_violation)
    # phase-broken data: only g_{+-} is present, so no phase can match it at t = 0
    broken = InitialData(2, {(1, -1): lambda z: bump(z[:, 0], 0, 1.5) * bump(z[:, 1], 0, 1.5)},
                         2.0)
    bad = WaveFunction(ModelParams(2, (0.0,)), broken)
    at_zero = random_stratum(rng, 2, 1, 200, time_scale=0.0, spread=1.0)
    control = boundary_flux_check(bad, at_zero).max_violation
    ok = valid < 1e-9 and control > 1e-3
    report(3, ok, f"valid max violation={valid:.2e}, broken control={control:.2e}")


def test_criterion_4_lorentz():
    rng = np.random.default_rng(404)
    betas = rng.uniform(-1, 1, 10)
    psi2 = bump_psi(2, (math.pi / 2,))
    psi3 = bump_psi(3, (0.8, -2.0))
    ref = surface_report(psi2, Hypersurface.flat(), rtol=1e-9).value
    bc, norm = 0.0, 0.0
    for beta in betas:
        b = Boost(beta)
        for psi in (psi2, psi3):
            pb = BoostedWaveFunction(psi, b)
            for k in range(1, psi.n):
                for p in boost_events(b, random_stratum(rng, psi.n, k, 20)):
                    for _, lhs, rhs in pb.boundary_check(p):
                        bc = max(bc, abs(lhs - rhs))
        sigma = boost_hypersurface(b, Hypersurface.random(rng, 0.7))
        val = surface_report(BoostedWaveFunction(psi2, b), sigma, rtol=1e-9).value
        norm = max(norm, abs(val - ref) / ref)
    ok = bc < 1e-9 and norm < 1e-6
    report(4, ok, f"10 boosts in [{betas.min():.2f}, {betas.max():.2f}]: boundary condition "
                  f"max={bc:.2e} (N=2,3), boosted norm rel. diff={norm:.2e} (N=2)")


def test_criterion_5_phase_well_defined():
    rng = np.random.default_rng(505)
    total, sign_fail, seen = 0, 0, set()
    per_n = {2: 30_000, 3: 35_000, 4: 35_000}
    for n, size in per_n.items():
        x = random_interior(rng, n, size, time_scale=3.0, spread=1.0, min_gap=0.01)
        spins = rng.choice([-1, 1], size=(size, n))
        c = x[..., 1] + spins * x[..., 0]
        for a, b in itertools.combinations(range(n), 2):
            coll = c[:, a] > c[:, b]
            sa, sb, ta, tb = spins[:, a], spins[:, b], x[:, a, 0], x[:, b, 0]
            fine = ((sa == 1) & (sb == -1) & (ta > 0) & (tb > 0)) | \
                   ((sa == -1) & (sb == 1) & (ta < 0) & (tb < 0))
            sign_fail += int(np.count_nonzero(coll & ~fine))
        for cfg, s in zip(x[:50], spins[:50]):  # scalar form agrees with the vector check
            cv = cfg[:, 1] + s * cfg[:, 0]
            for a, b in itertools.combinations(range(n), 2):
                if cv[a] > cv[b]:
                    assert admissible_collision_signs(tuple(s), cfg[:, 0], a, b)
        for cfg_c, s in zip(c, spins):
            seen.add((tuple(int(v) for v in s), sort_permutation(cfg_c)))
        total += size
    order_fail = sum(all_decomposition_coefficients(s, pi) != {phase_coefficients(s, pi)[0]}
                     for s, pi in seen)
    multi = sum(1 for _, pi in seen if collisions(pi) > 1)
    ok = total >= 100_000 and sign_fail == 0 and order_fail == 0
    report(5, ok, f"{total} samples, {len(seen)} distinct (spin, permutation) pairs "
                  f"({multi} with several collisions): order disagreements={order_fail}, "
                  f"sign-claim failures={sign_fail}")


def test_criterion_6_residual_order():
    psi = bump_psi(3, PHI3)
    rng = np.random.default_rng(606)
    hs = np.array([1e-2, 1e-3, 1e-4])
    orders, exact, partial, points = [], 0, 0, 0
    while points < 100:
        cfg = random_interior(rng, 3, 1, min_gap=0.05)[0]
        try:
            r = np.array([max(psi.residual(cfg, s, h) for s in all_spins(3)) for h in hs])
        except DomainError:
            continue  # stencil straddles a characteristic tie
        points += 1
        if np.all(r == 0):
            exact += 1
        elif np.all(r > 0):
            orders.append(np.polyfit(np.log(hs), np.log(r), 1)[0])
        else:
            partial += 1  # zero at some h only: no rate can be observed
    orders = np.array(orders)
    ok = partial == 0 and (orders.size == 0 or bool(orders.min() >= 1.7))
    stats = (f"median={np.median(orders):.2f} min={orders.min():.2f}" if orders.size
             else "n/a")
    report(6, ok, f"100 points: {exact} zero at every h, {partial} zero at some h only, "
                  f"fitted order on {orders.size} others {stats} (need >= 1.7)")


def test_criterion_7_antisymmetry():
    rng = np.random.default_rng(707)
    checked, mismatches = 0, 0
    for n, phases in ((2, (0.9,)), (3, PHI3), (4, (0.3, -1.2, 2.5))):
        psi = bump_psi(n, phases)
        x = random_interior(rng, n, 200)
        for p in itertools.permutations(range(n)):
            order = np.argsort(p)
            sign = perm_sign(order)
            y = x[:, list(p)]
            for s in all_spins(n):
                got = psi.evaluate_full_many(y, s)
                expect = sign * psi.evaluate_many(x, tuple(np.asarray(s)[order]))
                mismatches += int(np.count_nonzero(got != expect))
                checked += got.size
    report(7, mismatches == 0, f"{checked} permuted evaluations for N=2,3,4, "
                               f"bitwise mismatches={mismatches}")


def test_criterion_8_interaction():
    free, _ = wedge_psi(math.pi)
    inter, orbs = wedge_psi(math.pi / 2)
    times = (0.0, 1.5, 3.0, 4.5, 6.0)
    free_ranks = [schmidt_rank(free, t) for t in times]
    late = (3.0, 4.5, 6.0)  # the supports have crossed by t = 2
    inter_ranks = [schmidt_rank(inter, t) for t in late]
    rng = np.random.default_rng(808)
    worst = 0.0
    for phi in (math.pi / 2, 0.3, math.pi):
        psi, _ = wedge_psi(phi)
        for t in (0.5, 3.0, 5.0):
            z = np.sort(rng.uniform(-6, 6, size=(2000, 2)), axis=1)
            z = z[np.diff(z, axis=1)[:, 0] > 1e-6]
            x = np.stack([np.full_like(z, t), z], axis=-1)
            got = psi.evaluate_many(x, (1, -1))
            worst = max(worst, np.abs(got - heaviside_form(wedge_pair(orbs), phi, t, z)).max())
    # three particles: an interacting pair next to a spectator
    left = lambda z: bump(z, -4.0, 1.0) * np.exp(0.7j * z)
    right = lambda z: bump(z, 0.0, 1.0)
    tail = lambda r: bump(r[:, 0], 9.0, 1.0)
    psi3 = WaveFunction(ModelParams(3, (1.2, 0.5)), product_data(3, left, right, tail, 10.0))
    pair = lambda c1, c2: -left(c2) * right(c1)
    for t in (2.5, 3.5):
        c = np.stack([rng.uniform(-5.5, 1.5, 3000), rng.uniform(-5.5, 1.5, 3000),
                      rng.uniform(8.0, 10.0, 3000)], axis=1)
        z = c + np.array([-t, t, -t])
        z = z[np.all(np.diff(z, axis=1) > 1e-6, axis=1)]
        x = np.stack([np.full_like(z, t), z], axis=-1)
        got = psi3.evaluate_many(x, (1, -1, 1))
        worst = max(worst, np.abs(got - heaviside_form(pair, 1.2, t, z, tail)).max())
    ok = all(r == 2 for r in free_ranks) and all(r > 2 for r in inter_ranks) and worst <= 1e-12
    report(8, ok, f"ranks phi=pi {free_ranks} at t={list(times)}, phi=pi/2 {inter_ranks} at "
                  f"t={list(late)}, closed form max diff={worst:.2e}")


def test_criterion_9_delta_relation():
    jump, zero = 0.0, 0.0
    for phi in (math.pi / 2, math.pi, -2.5):
        psi, _ = wedge_psi(phi)
        for t in (1.0, 3.0):
            rep = delta_bc_check(psi, t, np.linspace(-0.8, 0.8, 33))
            jump = max(jump, rep.jump_minus_plus, rep.jump_plus_minus)
            zero = max(zero, rep.equal_sign_at_zero)
    ok = jump < 1e-6 and zero < 1e-9
    report(9, ok, f"phase-jump extrapolation residual={jump:.2e}, chi_1/chi_4 at u=0={zero:.2e}")


def test_criterion_10_alpha_domain():
    start = time.perf_counter()
    inst = alpha_points(AlphaInstance(1.0, 2.0, 5.0, 6.0, math.sqrt(6.0)))
    p = inst.points
    want = dict(y1=2.0, t1=1.0, y2=4.5, t2=0.5, x1=2.5, s1=0.5, x2=5.0, s2=1.0)
    point_err = max(abs(p[k] - v) for k, v in want.items())
    resid = float(np.abs(constraint_residuals(inst)).max())
    demo = alpha_contradiction_demo(lambda z1, z2: z1 * np.exp(0.3j * z2), inst)
    elapsed = time.perf_counter() - start
    ok = point_err <= 1e-12 and resid < 1e-12 and abs(demo.conflict) > 0 and elapsed < 1.0
    report(10, ok, f"point error={point_err:.1e}, max constraint residual={resid:.1e}, "
                   f"conflict={abs(demo.conflict):.3f}, {elapsed * 1e3:.0f} ms")


if __name__ == "__main__":
    failed = 0
    for name, fn in sorted(globals().items(), key=lambda kv: int(kv[0].split("_")[2])
                           if kv[0].startswith("test_criterion_") else 0):
        if name.startswith("test_criterion_"):
            try:
                fn()
            except AssertionError:
                failed += 1
    raise SystemExit(1 if failed else 0)
