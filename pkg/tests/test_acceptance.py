"""End-to-end acceptance checks, one test per criterion, each with its time budget."""
import math
import time

import numpy as np
import pytest

from fermibrick.gate_core import GateParams, verify_gate_exponential
from fermibrick.graded_dense import (
    build_supercharges,
    build_transfer_matrix,
    build_ubw,
    commutator_norm,
    dense_sz_trace,
    verify_yang_baxter,
)
from fermibrick.hamiltonian_limit import dispersion_hgamma, gaplessness_identity, zero_mode_check
from fermibrick.quench_dynamics import (
    covariance_evolve,
    drift_velocity,
    gge_equilibrium,
    momentum_block_evolve_allzero,
    seed_bits,
)
from fermibrick.spectral_ubw import phase_multiset_distance, predicted_phases, small_k_fit, theta_critical
from fermibrick.topology import Perturbation, phase_scan, winding_number


def draw(rng, n, alpha=(0.2, 3.0), spread=2.0):
    return [GateParams(rng.uniform(*alpha), rng.uniform(-spread, spread), rng.uniform(-spread, spread))
            for _ in range(n)]


def test_theta_critical(acceptance_report):
    t0 = time.perf_counter()
    tc = theta_critical(1.0, 1.0)
    el = time.perf_counter() - t0
    err = abs(tc - 0.700109)
    assert acceptance_report(1, "theta_c(1, 1) = 0.700109", err < 1e-4, f"theta_c = {tc:.9f}, |err| = {err:.2e}", el, 1)


def test_gaplessness_identity(acceptance_report):
    rng = np.random.default_rng(2)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(100):
        lhs, mid, rhs = gaplessness_identity(rng.uniform(0.1, 10), rng.uniform(-4, 4))
        worst = max(worst, abs(lhs - rhs), abs(mid - rhs))
    el = time.perf_counter() - t0
    assert acceptance_report(2, "(nu0+nu1)^2 = sum mu = 16/(a^4 ch^4)", worst < 1e-10, f"max abs dev {worst:.2e}", el, 1)


def test_gate_exponential(acceptance_report):
    rng = np.random.default_rng(3)
    t0 = time.perf_counter()
    worst = max(verify_gate_exponential(p) for p in draw(rng, 100, alpha=(0.1, 10.0), spread=4.0))
    el = time.perf_counter() - t0
    assert acceptance_report(3, "||exp(iE) - S|| over 100 draws", worst < 1e-9, f"max {worst:.2e}", el, 5)


def test_symmetry_commutators(acceptance_report):
    rng = np.random.default_rng(4)
    t0 = time.perf_counter()
    worst = 0.0
    for L in (4, 6, 8):
        for p in draw(rng, 10):
            U = build_ubw(p, L)
            q = build_supercharges(p, L)
            worst = max(worst, commutator_norm(U, q.qL), commutator_norm(U, q.qR))
    worst_ext = 0.0
    for p in draw(rng, 10):
        q = build_supercharges(p, 4)
        worst_ext = max(worst_ext, commutator_norm(build_ubw(p, 4, "OBC_EXTENDED"), q.qL.entries + q.qR.entries))
    el = time.perf_counter() - t0
    ok = worst < 1e-10 and worst_ext < 1e-9
    assert acceptance_report(4, "[U_F, Q^L/R] and extended OBC", ok,
                             f"PBC max {worst:.2e}, OBC_EXTENDED max {worst_ext:.2e}", el, 30)


def test_yang_baxter_and_transfer_matrix(acceptance_report):
    rng = np.random.default_rng(5)
    t0 = time.perf_counter()
    p = draw(rng, 1)[0]
    yb = max(verify_yang_baxter(p, *rng.uniform(-3, 3, 3)) for _ in range(50))
    c_u = c_t = 0.0
    for _ in range(10):
        p = draw(rng, 1)[0]
        u, v = rng.uniform(-2, 2, 2)
        tu = build_transfer_matrix(u, p, 4).entries
        tv = build_transfer_matrix(v, p, 4).entries
        c_u = max(c_u, commutator_norm(tu, build_ubw(p, 4)))
        c_t = max(c_t, commutator_norm(tu, tv))
    el = time.perf_counter() - t0
    ok = yb < 1e-10 and c_u < 1e-9 and c_t < 1e-9
    assert acceptance_report(5, "Yang-Baxter and commuting transfer matrices", ok,
                             f"YB {yb:.2e}, [t,U_F] {c_u:.2e}, [t(u),t(v)] {c_t:.2e}", el, 60)


def test_spectral_oracle(acceptance_report):
    rng = np.random.default_rng(6)
    params = draw(rng, 4)
    g = rng.uniform(0.3, 2.0)
    params.append(GateParams(rng.uniform(0.3, 2.0), g, g))
    t0 = time.perf_counter()
    worst = 0.0
    for p in params:
        dense = np.angle(np.linalg.eigvals(build_ubw(p, 10).entries))
        worst = max(worst, phase_multiset_distance(dense, predicted_phases(p, 10)))
    el = time.perf_counter() - t0
    assert acceptance_report(6, "quasi-energy multiset vs dense L=10", worst < 1e-8, f"max distance {worst:.2e}", el, 120)


def test_cubic_multicritical_point(acceptance_report):
    t0 = time.perf_counter()
    slopes, cubics = small_k_fit(GateParams(1.0, 1.0, 1.0), np.linspace(0.005, 0.08, 30))
    el = time.perf_counter() - t0
    v, c = -2 * math.tanh(1.0), math.sinh(1.0) / 8
    rv, rc = abs(slopes[0] - v) / abs(v), abs(cubics[1] - c) / c
    ok = rv < 0.02 and rc < 0.05
    assert acceptance_report(7, "slope -2 tanh(1), cubic sinh(1)/8", ok,
                             f"slope {slopes[0]:.5f} ({rv:.1e}), cubic {cubics[1]:.5f} ({rc:.1e})", el, 5)


def test_k0_hamiltonian_energies(acceptance_report):
    rng = np.random.default_rng(8)
    t0 = time.perf_counter()
    worst_e = worst_z = 0.0
    for _ in range(20):
        a, g = rng.uniform(0.1, 10), rng.uniform(-4, 4)
        e1, e2 = dispersion_hgamma(a, g, 0.0)
        worst_e = max(worst_e, abs(e1), abs(e2 - 2 / (a * math.cosh(g / 2))))
    for _ in range(5):
        worst_z = max(worst_z, zero_mode_check(rng.uniform(0.3, 3), rng.uniform(-2, 2)))
    el = time.perf_counter() - t0
    ok = worst_e < 1e-10 and worst_z < 1e-10
    assert acceptance_report(8, "k=0 energies and zero mode", ok, f"energies {worst_e:.2e}, zero mode {worst_z:.2e}", el, 1)


def test_topology(acceptance_report):
    rng = np.random.default_rng(9)
    t0 = time.perf_counter()
    flags = [winding_number(rng.uniform(0.1, 10), rng.uniform(-4, 4), grid=256).gapless for _ in range(20)]
    inside = [winding_number(1.0, 0.0, Perturbation(0, -0.5, -0.5), grid=n).w for n in (256, 1024, 4096)]
    outside = [winding_number(1.0, 0.0, Perturbation(0, 0.5, 0.5), grid=n).w for n in (256, 1024, 4096)]
    grid = np.linspace(-1.0, 1.0, 40)
    rows = phase_scan(1.0, 0.0, grid, grid, grid=256)
    el = time.perf_counter() - t0
    ws = {r.w for r in rows if r.w is not None}
    # cells without a winding number must be the flagged gap closings
    n_gapless = sum(r.w is None for r in rows)
    ok = (all(flags) and len(set(inside)) == 1 and abs(inside[0]) == 1
          and set(outside) == {0} and ws <= {-1, 0, 1})
    detail = (f"gapless {sum(flags)}/20, W(-0.5) {inside}, W(+0.5) {outside}, "
              f"scan W set {sorted(ws)}, gap closings {n_gapless}/1600")
    assert acceptance_report(9, "winding number and phase scan", ok, detail, el, 60)


def test_quench_triple_agreement(acceptance_report):
    rng = np.random.default_rng(10)
    t0 = time.perf_counter()
    worst = 0.0
    for p in draw(rng, 3):
        zero = np.zeros(10, dtype=int)
        d = dense_sz_trace(p, zero, 20)
        c = covariance_evolve(p, 10, zero, 20).sz
        m = momentum_block_evolve_allzero(p, 10, 20).sz
        worst = max(worst, np.abs(d - c).max(), np.abs(d - m).max(), np.abs(c - m).max())
    el = time.perf_counter() - t0
    assert acceptance_report(10, "covariance / momentum / dense at L=10", worst < 1e-9, f"max dev {worst:.2e}", el, 30)


def test_gge(acceptance_report):
    t0 = time.perf_counter()
    res = {}
    for g in (0.0, 1.0):
        p = GateParams(1.0, g, 0.5)
        tr = covariance_evolve(p, 102, np.zeros(102, dtype=int), 200)
        res[g] = (tr.sz_even[100:201].mean(), tr.sz_odd[100:201].mean(), gge_equilibrium(p, 102))
    el = time.perf_counter() - t0
    e0, o0, (ge0, go0) = res[0.0]
    e1, o1, (ge1, go1) = res[1.0]
    ok = (abs(e0 - ge0) < 1e-2 and abs(o0 - go0) < 1e-2
          and abs(e1 - ge1) < 1e-2 and abs(o1 - go1) < 1e-2 and abs(e1 - o1) > 1e-2)
    detail = (f"(1,0,.5) avg {e0:.4f} vs GGE {ge0:.4f}; (1,1,.5) even {e1:.4f} vs {ge1:.4f}, "
              f"odd {o1:.4f} vs {go1:.4f}")
    assert acceptance_report(11, "layer average vs GGE at L=102", ok, detail, el, 60)


def _outside_cone(seeded, plain, site, buffer=4):
    j = np.arange(seeded.shape[1])
    worst = 0.0
    for t in range(seeded.shape[0]):
        out = np.abs(j - site) > 2 * t + buffer
        if out.any():
            worst = max(worst, float(np.abs(seeded[t, out] - plain[t, out]).max()))
    return worst


def test_drift_velocity(acceptance_report):
    L, T, site = 200, 40, 100
    t0 = time.perf_counter()
    out = {}
    cone = 0.0
    for g in (10.0, 0.0):
        p = GateParams(1.0, g, 1.0 if g else 0.5)
        plain = covariance_evolve(p, L, np.zeros(L, dtype=int), T, "OBC").sz
        seeded = covariance_evolve(p, L, seed_bits(L, site), T, "OBC")
        out[g] = drift_velocity(seeded, plain, method="centroid")
        cone = max(cone, _outside_cone(seeded.sz, plain, site))
    el = time.perf_counter() - t0
    ok = abs(abs(out[10.0]) - 2) < 0.05 * 2 and abs(out[0.0]) < 0.1 and cone < 1e-8
    detail = f"v_d(gamma=10) {out[10.0]:.4f}, v_d(gamma=0) {out[0.0]:.4f}, light-cone leak {cone:.1e}"
    assert acceptance_report(12, "drift velocity and light cone at L=200", ok, detail, el, 120)
