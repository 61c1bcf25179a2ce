import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qbc import jsonio
from qbc.states import (
    DensityOperator,
    InvalidStateError,
    PureState,
    basis_state,
    coherent_information,
    conditional_mutual_information,
    entropy,
    from_matrix,
    maximally_entangled,
    maximally_mixed,
    mutual_information,
    partial_trace,
    random_density,
    random_unitary,
    tensor,
    trace_distance,
)

from oracles import ptrace_keep, shannon, vn


def _classical_pair():
    m = np.zeros((4, 4))
    m[0, 0] = m[3, 3] = 0.5
    return DensityOperator(m, (2, 2), ("A", "B"))


def test_bell_pair_identities():
    phi = maximally_entangled(2).dm()
    assert abs(mutual_information(phi, ["A"], ["B"]) - 2.0) < 1e-9
    assert abs(coherent_information(phi, ["A"], ["B"]) - 1.0) < 1e-9


@pytest.mark.parametrize("d", [2, 3, 4])
def test_maximally_entangled_scales_with_log_d(d):
    phi = maximally_entangled(d).dm()
    assert abs(mutual_information(phi, ["A"], ["B"]) - 2 * np.log2(d)) < 1e-9
    assert abs(coherent_information(phi, ["A"], ["B"]) - np.log2(d)) < 1e-9
    marg = partial_trace(phi, ["A"])
    assert np.abs(marg.matrix - np.eye(d) / d).max() < 1e-12


def test_tensor_examples():
    mm = tensor(maximally_mixed(2, "A"), maximally_mixed(2, "B"))
    assert mm.dims == (2, 2)
    assert np.abs(mm.matrix - np.eye(4) / 4).max() < 1e-15
    b = tensor(basis_state(0, 2, "A"), basis_state(1, 2, "B"))
    expected = np.zeros((4, 4))
    expected[1, 1] = 1.0
    assert np.abs(b.matrix - expected).max() == 0.0
    t = tensor(maximally_entangled(2).dm(), basis_state(0, 2, "C"))
    assert abs(np.trace(t.matrix) - 1.0) < 1e-12


def test_partial_trace_examples(rng):
    a = random_density((2,), ("A",), rng)
    b = random_density((3,), ("B",), rng)
    assert np.abs(partial_trace(tensor(a, b), ["A"]).matrix - a.matrix).max() < 1e-12
    rho = random_density((2, 3), ("A", "B"), rng)
    assert np.abs(partial_trace(rho, ["A", "B"]).matrix - rho.matrix).max() == 0.0
    with pytest.raises(KeyError):
        partial_trace(rho, ["Z"])


def test_partial_trace_matches_oracle(rng):
    rho = random_density((2, 3, 2), ("A", "B", "C"), rng)
    for keep in (["A"], ["B"], ["C"], ["A", "C"], ["B", "C"]):
        idx = [rho.labels.index(k) for k in keep]
        ref = ptrace_keep(rho.matrix, rho.dims, idx)
        assert np.abs(partial_trace(rho, keep).matrix - ref).max() < 1e-12


def test_entropy_examples():
    assert abs(entropy(maximally_mixed(2)).value - 1.0) < 1e-12
    psi = PureState(np.array([0.6, 0.8j]), (2,), ("A",))
    assert abs(entropy(psi.dm()).value) < 1e-12
    rho = DensityOperator(np.diag([0.25, 0.75]), (2,), ("A",))
    assert abs(entropy(rho).value - shannon([0.25, 0.75])) < 1e-12
    assert abs(entropy(rho).value - 0.8112781244591328) < 1e-12


def test_entropy_counts_floor_hits():
    rep = entropy(basis_state(0, 3))
    assert rep.eigen_floor_hits == 2
    assert float(rep) == 0.0


def test_classically_correlated_pair():
    rho = _classical_pair()
    assert abs(mutual_information(rho, ["A"], ["B"]) - 1.0) < 1e-12
    assert abs(coherent_information(rho, ["A"], ["B"])) < 1e-12


def test_product_state_information(rng):
    a = random_density((2,), ("A",), rng)
    b = random_density((2,), ("B",), rng)
    rho = tensor(a, b)
    assert abs(mutual_information(rho, ["A"], ["B"])) < 1e-9
    assert abs(coherent_information(rho, ["A"], ["B"]) + vn(a.matrix)) < 1e-9


def test_overlapping_parts_rejected(rng):
    rho = random_density((2, 2), ("A", "B"), rng)
    with pytest.raises(ValueError):
        mutual_information(rho, ["A"], ["A", "B"])


def test_trace_distance_examples():
    z0, z1 = basis_state(0, 2), basis_state(1, 2)
    assert trace_distance(z0, z0) == 0.0
    assert abs(trace_distance(z0, z1) - 1.0) < 1e-12
    assert abs(trace_distance(z0, maximally_mixed(2)) - 0.5) < 1e-12
    with pytest.raises(ValueError):
        trace_distance(z0, maximally_mixed(3))


@pytest.mark.parametrize(
    "matrix",
    [
        np.array([[0.5, 0.1], [0.0, 0.5]]),  # not Hermitian
        np.diag([0.5, 0.6]),  # trace
        np.diag([1.2, -0.2]),  # negative eigenvalue
    ],
)
def test_invalid_states_raise(matrix):
    with pytest.raises(InvalidStateError):
        DensityOperator(matrix, (2,), ("A",))


def test_pure_state_norm_checked():
    with pytest.raises(InvalidStateError):
        PureState(np.array([1.0, 1e-5]), (2,), ("A",))


def test_dims_must_match_matrix():
    with pytest.raises(ValueError):
        DensityOperator(np.eye(4) / 4, (2, 3), ("A", "B"))


def test_json_round_trip_exact(tmp_path, rng):
    rho = random_density((2, 3), ("A1", "B2"), rng)
    path = tmp_path / "rho.json"
    jsonio.dump(rho.to_dict(), path)
    back = DensityOperator.from_dict(jsonio.load(path))
    assert np.array_equal(back.matrix, rho.matrix)
    assert back.dims == rho.dims and back.labels == rho.labels
    psi = PureState(np.array([0.6, 0.8j]), (2,), ("A",))
    assert np.array_equal(PureState.from_dict(psi.to_dict()).vector, psi.vector)


# ---------------------------------------------------------------------------
# properties on random states
# ---------------------------------------------------------------------------

seeds = st.integers(min_value=0, max_value=2**32 - 1)
ranks = st.integers(min_value=1, max_value=6)


@settings(max_examples=40, deadline=None)
@given(seeds, ranks)
def test_entropy_bounds_and_unitary_invariance(seed, rank):
    rng = np.random.default_rng(seed)
    rho = random_density((2, 3), ("A", "B"), rng, rank=rank)
    h = entropy(rho).value
    assert -1e-9 <= h <= np.log2(6) + 1e-9
    u = random_unitary(6, rng)
    rot = from_matrix(u @ rho.matrix @ u.conj().T, (2, 3), ("A", "B"))
    assert abs(entropy(rot).value - h) < 1e-9
    assert abs(h - vn(rho.matrix)) < 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds, ranks)
def test_subadditivity_and_information_signs(seed, rank):
    rng = np.random.default_rng(seed)
    rho = random_density((2, 2, 2), ("A", "B", "C"), rng, rank=rank)
    hab = entropy(partial_trace(rho, ["A", "B"])).value
    ha = entropy(partial_trace(rho, ["A"])).value
    hb = entropy(partial_trace(rho, ["B"])).value
    assert hab <= ha + hb + 1e-9
    assert mutual_information(rho, ["A"], ["B", "C"]) >= -1e-9
    assert conditional_mutual_information(rho, ["A"], ["C"], ["B"]) >= -1e-9
    assert coherent_information(rho, ["A"], ["B"]) <= hb + 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds)
def test_trace_distance_metric(seed):
    rng = np.random.default_rng(seed)
    a, b, c = (random_density((3,), ("A",), rng) for _ in range(3))
    dab, dbc, dac = trace_distance(a, b), trace_distance(b, c), trace_distance(a, c)
    assert 0.0 <= dab <= 1.0 + 1e-12
    assert dac <= dab + dbc + 1e-9
    assert abs(dab - trace_distance(b, a)) < 1e-12
