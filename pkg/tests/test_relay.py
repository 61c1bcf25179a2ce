from fractions import Fraction

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from qbc.channels import amplitude_split, bundled, from_marginals, identity_channel
from qbc.entanglement import eof_numeric
from qbc.regions import quantum_outer_point, QuantumInputState
from qbc.relay import (
    SINGLE_LETTER_FLAG,
    ConferencingLink,
    EoFWitness,
    RelayBounds,
    _EoFProblem,
    bounds_csv,
    cutset,
    decode_forward,
    decode_forward_curve,
    decode_forward_value,
    eof_lower,
    relay_bounds_grid,
    repeater_chain,
    save_bounds,
    superdense_convert,
    teleport_convert,
)
from qbc import jsonio

from oracles import h2, ptrace_keep, vn

FAST = dict(restarts=6, maxiter=200)


def _damping_coherent_info(decay):
    """max_p h2((1-decay) p) - h2(decay p): the amplitude-damping quantum capacity."""
    res = minimize_scalar(lambda p: -(h2((1 - decay) * p) - h2(decay * p)), bounds=(0, 1), method="bounded",
                          options={"xatol": 1e-12})
    return max(-res.fun, 0.0)


def _route_to_1():
    return from_marginals(identity_channel(2), np.eye(2) / 2, receiver=1)


# ---------------------------------------------------------------------------
# conversions and chains
# ---------------------------------------------------------------------------

def test_conversions_are_exact():
    assert teleport_convert(1.0) == 0.5
    assert teleport_convert(0.0) == 0.0
    assert superdense_convert(teleport_convert(0.7)) == 0.7
    for num in range(0, 50):
        x = float(Fraction(num, 16))
        assert superdense_convert(teleport_convert(x)) == x
        assert teleport_convert(superdense_convert(x)) == x
    with pytest.raises(ValueError):
        teleport_convert(-0.1)
    with pytest.raises(ValueError):
        superdense_convert(-1.0)


def test_conferencing_link():
    link = ConferencingLink.from_classical(1.0)
    assert link.quantum_rate == 0.5 and link.entangled_decoders
    with pytest.raises(ValueError):
        ConferencingLink(1.0, 0.4, entangled_decoders=True)
    assert ConferencingLink(1.0, 0.0).to_dict()["CQ12"] == 0.0


def test_repeater_chain_examples():
    assert repeater_chain([0.7]) == 0.7
    assert repeater_chain([1.0, 1.0], [0.5]) == 0.5
    assert repeater_chain([0.8, 0.6, 0.9], [0.7, 0.5]) == 0.5
    assert repeater_chain([{"coherent_info": 0.4}, 0.9], [1.0]) == 0.4
    assert repeater_chain([-0.2, 1.0], [1.0]) == 0.0
    with pytest.raises(ValueError):
        repeater_chain([])
    with pytest.raises(ValueError):
        repeater_chain([1.0, 1.0], [])


def test_decode_forward_arithmetic():
    assert decode_forward_value(0.3, 0.2, 0.5) == 0.5
    assert decode_forward_value(0.3, 0.2, 0.1) == pytest.approx(0.3, abs=1e-15)
    assert decode_forward_value(-0.1, -0.2, 0.5) == 0.0


# ---------------------------------------------------------------------------
# decode-forward
# ---------------------------------------------------------------------------

def test_decode_forward_identity_route():
    res = decode_forward(_route_to_1(), 0.5, **FAST)
    assert abs(res.value - 0.5) < 1e-6
    assert res.details["I2"] <= 1e-9


def test_decode_forward_without_link_is_direct_capacity():
    bc = amplitude_split(0.7)  # marginal 2 is amplitude damping with decay 0.3
    res = decode_forward(bc, 0.0, **FAST)
    assert abs(res.value - _damping_coherent_info(0.3)) < 1e-6


def test_decode_forward_curve_monotone_and_saturates():
    bc = bundled("dephasing_broadcast")
    grid = [0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
    curve = decode_forward_curve(bc, grid, **FAST)
    vals = [r.value for r in curve]
    assert all(b >= a for a, b in zip(vals, vals[1:]))
    last = curve[-1]
    i1 = last.details["I1"]
    for c, r in zip(grid, curve):
        if c > i1 + 1e-6:
            assert abs(r.value - last.value) < 1e-9


# ---------------------------------------------------------------------------
# cutset (literal single-letter form)
# ---------------------------------------------------------------------------

def test_cutset_with_constant_first_output():
    bc = from_marginals(identity_channel(2), np.eye(2) / 2, receiver=2)
    res = cutset(bc, 0.0, **FAST)
    assert abs(res.value - 1.0) < 1e-6
    assert abs(res.details["cut1"] - res.details["cut2"]) < 1e-6
    assert SINGLE_LETTER_FLAG in res.details["flags"]


def test_cutset_identity_route_cuts():
    bc = _route_to_1()
    df = decode_forward(bc, 0.5, **FAST)
    # both cuts evaluated on the decode-forward witness (A = A1 A2)
    w = df.witness
    vec = np.kron(np.eye(4)[0], w.vector)
    st4 = QuantumInputState(vec, ("T", "A1", "A2"), (4, 2, 2), 2)
    out = quantum_outer_point(st4, bc, 0.5)
    assert out["bound_q2"] <= 0.5 + 1e-9
    res = cutset(bc, 0.5, **FAST)
    assert res.value <= 0.5 + 1e-6
    # The bound as stated puts T on the input side, so for this channel both
    # cuts meet at 0.25 and the value falls below the achievable 0.5.
    assert abs(res.value - 0.25) < 1e-4


# ---------------------------------------------------------------------------
# entanglement-formation lower bound
# ---------------------------------------------------------------------------

def test_eof_lower_without_link():
    bc = amplitude_split(0.7)
    res = eof_lower(bc, 0.0, restarts=4)
    assert abs(res.value - _damping_coherent_info(0.3)) < 1e-6
    assert res.details["eof"] <= 1e-6


def test_eof_lower_unconstrained_limit():
    bc = amplitude_split(0.7)
    res = eof_lower(bc, 1.0, restarts=4)
    assert res.details["unconstrained"]
    assert res.value >= 1.0 - 1e-6  # I(A>B1B2) = 1 for an isometric channel


def test_eof_witness_is_feasible_on_recheck():
    bc = bundled("dephasing_broadcast")
    cq = 0.25
    res = eof_lower(bc, cq, restarts=4)
    w = res.witness
    prob = _EoFProblem(bc, w.state.ref_dims[0], w.b1hat_dim)
    rho = prob.density(w.state.vector, w.f_isometry)
    check = eof_numeric(rho, w.b1hat_dim, rho.shape[0] // w.b1hat_dim, n_starts=64,
                        rng=np.random.default_rng(99))
    assert check.value <= cq + 1e-3
    # the coherent information reported is that of the witness
    g = prob.g
    psi = prob.tensors(w.state.vector[None], w.f_isometry[None])[2][0]  # A, B1hat, G, B2, E
    flat = psi.ravel()
    dims = psi.shape
    full = np.outer(flat, flat.conj())
    coh = vn(ptrace_keep(full, dims, [1, 3])) - vn(ptrace_keep(full, dims, [0, 1, 3]))
    assert abs(coh - res.details["coherent_info"]) < 1e-8
    assert g == bc.d1 * w.b1hat_dim
    back = EoFWitness.from_dict(w.to_dict())
    assert np.array_equal(back.f_isometry, w.f_isometry)


def test_eof_lower_comparable_to_decode_forward():
    bc = bundled("dephasing_broadcast")
    gaps = []
    for cq in (0.25, 0.5):
        ef = eof_lower(bc, cq, restarts=4).value
        df = decode_forward(bc, cq, **FAST).value
        gaps.append(ef - (df - 0.05))
    assert max(gaps) >= 0


# ---------------------------------------------------------------------------
# bundles and artifacts
# ---------------------------------------------------------------------------

def test_relay_bounds_grid_and_artifacts(tmp_path):
    bc = bundled("dephasing_broadcast")
    grid = relay_bounds_grid(bc, [0.0, 0.5], restarts=6, with_eof=False)
    assert grid[0].decode_forward <= grid[1].decode_forward + 1e-12
    assert all(b.eof_lower == 0.0 for b in grid)
    save_bounds(grid, tmp_path / "b.json", {"seed": 0})
    doc = jsonio.load(tmp_path / "b.json")
    assert doc["schema"] == jsonio.SCHEMA and len(doc["points"]) == 2
    assert bounds_csv(grid).splitlines()[0] == "cq12,cutset,decode_forward,eof_lower"
    with pytest.raises(ValueError):
        RelayBounds(0.0, 0.0, 0.0, -0.1, {})


def test_negative_link_rejected():
    with pytest.raises(ValueError):
        decode_forward(_route_to_1(), -0.1)
    with pytest.raises(ValueError):
        cutset(_route_to_1(), -0.1)
    with pytest.raises(ValueError):
        eof_lower(_route_to_1(), -0.1)
