"""Acceptance criteria, one test each.

Every test records a one-line PASS/FAIL verdict (with the measured numbers
and the elapsed time) in ``RESULTS``; the lines are printed at the end of the
pytest run and when this file is executed directly.
"""
from __future__ import annotations

import time

import numpy as np
import pytest

from qbc import hull
from qbc.channels import (
    bundled,
    bundled_names,
    check_degraded,
    classical_broadcast,
    is_cptp,
    qubit_hadamard,
    random_broadcast,
)
from qbc.codesim import build_codebook, simulate_classical
from qbc.entanglement import entanglement_of_formation
from qbc.regions import (
    classical_region,
    no_conferencing_region,
    quantum_inner_region,
    quantum_outer_region_single_letter,
)
from qbc.relay import cutset, decode_forward_curve, superdense_convert, teleport_convert
from qbc.states import DensityOperator, coherent_information, maximally_entangled, mutual_information

from oracles import (
    classical_bounds,
    degraded_bsc_region,
    grid_classical_region,
    polygon_hausdorff,
    ptrace_keep,
    random_two_qubit_states,
    vn,
    wootters_eof,
)

RESULTS: dict[str, str] = {}


def _record(key, ok, elapsed, budget, detail):
    within = elapsed <= budget
    verdict = "PASS" if ok and within else "FAIL"
    RESULTS[key] = f"{key} {verdict}  {detail}  [{elapsed:.1f} s of {budget:.0f} s]"
    return ok and within


# ---------------------------------------------------------------------------

def test_c1_entropic_identities():
    t = time.perf_counter()
    phi = maximally_entangled(2).dm()
    mi = mutual_information(phi, ["A"], ["B"])
    ci = coherent_information(phi, ["A"], ["B"])
    ok = abs(mi - 2.0) <= 1e-9 and abs(ci - 1.0) <= 1e-9
    assert _record("C1", ok, time.perf_counter() - t, 1.0, f"I(A;B) = {mi:.6f}, I(A>B) = {ci:.6f}")


def test_c2_eof_matches_concurrence_oracle():
    t = time.perf_counter()
    worst = 0.0
    for i, m in enumerate(random_two_qubit_states(200, seed=2024)):
        rho = DensityOperator(m, (2, 2), ("A", "B"))
        num = entanglement_of_formation(rho, ["A"], method="numeric", seed=i)
        worst = max(worst, abs(num - wootters_eof(m)))
    ok = worst <= 1e-3
    assert _record("C2", ok, time.perf_counter() - t, 120.0,
                   f"200 random states, max |numeric - closed form| = {worst:.2e}")


def test_c3_classical_region_matches_grid_oracle():
    t = time.perf_counter()
    bc = bundled("bsc_cascade")  # X -> BSC(0.1) -> Y1 -> BSC(0.2) -> Y2
    p1, p2 = bc.params["p1"], bc.params["p2"]
    dists = []
    for c12 in (0.0, 0.25, 0.5):
        region = classical_region(bc, c12)
        grid = np.vstack([grid_classical_region(bc.kernel, c12, card0=2, resolution=40),
                          grid_classical_region(bc.kernel, c12, card0=3, resolution=16)])
        d_grid = polygon_hausdorff(region.hull, grid)
        d_exact = polygon_hausdorff(region.hull, degraded_bsc_region(p1, p2, c12))
        dists.append(max(d_grid, d_exact))
    ok = max(dists) <= 0.02
    detail = ", ".join(f"C12={c}: {d:.4f}" for c, d in zip((0, 0.25, 0.5), dists))
    assert _record("C3", ok, time.perf_counter() - t, 600.0, f"Hausdorff to grid/analytic oracle {detail}")


def test_c4_conferencing_monotone_and_intercept():
    t = time.perf_counter()
    delta = 0.25
    excesses = {}
    for name in bundled_names():
        bc = bundled(name)
        lo = classical_region(bc, 0.0)
        hi = classical_region(bc, delta)
        excesses[name] = hull.excess(lo.hull, hi.hull)
    # the R0 bound is active at the intercept of this channel
    test_channel = qubit_hadamard(0.02, 0.9)
    a = classical_region(test_channel, 0.0).max_along(0)
    b = classical_region(test_channel, delta).max_along(0)
    ok = max(excesses.values()) <= 1e-6 and abs((b - a) - delta) <= 0.01
    assert _record("C4", ok, time.perf_counter() - t, 600.0,
                   f"max inclusion excess {max(excesses.values()):.1e}; R0 intercept {a:.4f} -> {b:.4f} "
                   f"(+{b - a:.4f})")


def test_c5_zero_conferencing_recovers_superposition_region():
    t = time.perf_counter()
    dists = {}
    for name in bundled_names():
        bc = bundled(name)
        dists[name] = hull.hausdorff(classical_region(bc, 0.0).hull, no_conferencing_region(bc).hull)
    ok = max(dists.values()) <= 0.01
    assert _record("C5", ok, time.perf_counter() - t, 300.0,
                   "Hausdorff " + ", ".join(f"{k}: {v:.4f}" for k, v in dists.items()))


def _coherent_infos_dense(bc, witness):
    """I(A1>B1), I(A2>B2) of a witness through dense matrices."""
    psi = witness.vector
    rho_in = np.outer(psi, psi.conj())
    d = bc.d_in
    ra = int(np.prod(witness.ref_dims))
    out = np.zeros((ra * bc.d1 * bc.d2,) * 2, dtype=complex)
    for k in bc.channel.kraus:
        big = np.kron(np.eye(ra), k)
        out += big @ rho_in @ big.conj().T
    dims = tuple(witness.ref_dims) + (bc.d1, bc.d2)
    i1 = vn(ptrace_keep(out, dims, [2])) - vn(ptrace_keep(out, dims, [0, 2]))
    i2 = vn(ptrace_keep(out, dims, [3])) - vn(ptrace_keep(out, dims, [1, 3]))
    assert d == witness.d_in
    return i1, i2


def test_c6_corner_points_and_inner_in_outer():
    t = time.perf_counter()
    cq = 0.25
    corner_err, excess = 0.0, {}
    for name in bundled_names():
        bc = bundled(name)
        inner = quantum_inner_region(bc, cq)
        for w, corners in zip(inner.witnesses, inner.metadata["corners"]):
            i1, i2 = _coherent_infos_dense(bc, w)
            expect = [[i1, i2], [i1 - cq, i2 + cq]]
            corner_err = max(corner_err, float(np.abs(np.array(corners) - expect).max()))
        outer = quantum_outer_region_single_letter(bc, cq, warm_start=inner.witnesses)
        excess[name] = hull.excess(inner.hull, outer.hull)
    ok = corner_err <= 1e-7 and max(excess.values()) <= 0.01
    assert _record("C6", ok, time.perf_counter() - t, 900.0,
                   f"corner recomputation error {corner_err:.1e}; inner-outer excess "
                   + ", ".join(f"{k}: {v:.1e}" for k, v in excess.items()))


def test_c7_relay_ordering_and_saturation():
    t = time.perf_counter()
    grid = [0.0, 0.25, 0.5, 0.75, 1.0]
    violations, worst, sat_err = [], 0.0, 0.0
    for c in range(20):
        bc = random_broadcast(2, 2, 2, 1 + c % 2, np.random.default_rng([77, c]))
        curve = decode_forward_curve(bc, grid)
        for cq, df in zip(grid, curve):
            cs = cutset(bc, cq).value
            gap = df.value - cs
            worst = max(worst, gap)
            if gap > 1e-6:
                violations.append((c, cq))
        i1 = curve[-1].details["I1"]
        for cq, df in zip(grid, curve):
            if cq > i1 + 1e-6:
                sat_err = max(sat_err, abs(df.value - curve[-1].value))
    ok = not violations and sat_err <= 1e-6
    assert _record("C7", ok, time.perf_counter() - t, 900.0,
                   f"decode-forward above cutset at {len(violations)}/100 points (max excess {worst:.3f}); "
                   f"saturation error {sat_err:.1e}")


def test_c8_conversions_exact():
    t = time.perf_counter()
    ok = teleport_convert(1.0) == 0.5 and all(
        superdense_convert(teleport_convert(x)) == x for x in (0.0, 0.1, 0.7, 1.0, 2.5, 1 / 3))
    assert _record("C8", ok, time.perf_counter() - t, 1.0, "teleport(1.0) = 0.5, superdense o teleport = id")


def _typewriter_kernel(k=25, width=17):
    """Y1 = X noiselessly; Y2 uniform on {X, ..., X + width - 1} mod k."""
    w2 = np.zeros((k, k))
    for x in range(k):
        w2[x, (x + np.arange(width)) % k] = 1.0 / width
    return np.einsum("xa,xb->xab", np.eye(k), w2)


def test_c9_coding_simulation_trend():
    t = time.perf_counter()
    k = 25
    kernel = _typewriter_kernel(k)
    bc = classical_broadcast(kernel)
    pmf = np.eye(k) / k  # X0 = X1 uniform
    i02, _, _ = classical_bounds((np.eye(k) / k)[None], kernel.sum(axis=2), kernel.sum(axis=1))
    bob2 = float(i02[0])  # log2(25/17): the R0 bound at C12 = 0
    r0 = 0.9 * bob2
    errs = []
    for n in (6, 8, 10, 12):
        cb = build_codebook(pmf, n, r0, 0.0, 0.0, seed=0)
        errs.append(simulate_classical(bc, cb, 10_000, seed=0).empirical_error)
    drops = sum(b < a for a, b in zip(errs, errs[1:]))
    n = 12
    above = np.ceil((bob2 + 0.2) * n) / n
    cb = build_codebook(pmf, n, above, 0.0, 0.0, seed=0)
    err_above = simulate_classical(bc, cb, 10_000, seed=0).empirical_error
    ok = drops >= 3 and err_above >= 0.3
    assert _record("C9", ok, time.perf_counter() - t, 600.0,
                   f"inside (R0 = {r0:.3f}): errors {', '.join(f'{e:.4f}' for e in errs)} ({drops}/3 drops); "
                   f"R0 = {above:.3f} at n = 12: error {err_above:.3f}")


def test_c10_hadamard_degradability_certificate():
    t = time.perf_counter()
    bc = bundled("qubit_hadamard")
    res = check_degraded(bc, use_known=False)
    known = check_degraded(bc)
    ok = (res.found and res.residual <= 1e-6 and is_cptp(res.certificate, tol=1e-8)
          and known.found and known.residual <= 1e-6 and is_cptp(known.certificate, tol=1e-8))
    assert _record("C10", ok, time.perf_counter() - t, 120.0,
                   f"residual by search {res.residual:.1e}, with the builder's map {known.residual:.1e}")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
