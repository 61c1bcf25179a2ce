"""Analytic gradients against finite differences, and the fast batched
evaluators against the density-operator route."""
import numpy as np
import pytest

from qbc import _engine, _stiefel
from qbc.channels import bundled, random_broadcast, stinespring
from qbc.regions import InputEnsemble, QuantumInputState, eval_classical_point, quantum_inner_point

from oracles import ptrace_keep, vn


def _fd_check(fun, x, h=1e-6, n_dirs=4, seed=0):
    """Compare 2 Re<g, dx> with a central difference along random directions."""
    rng = np.random.default_rng(seed)
    f0, g = fun(x)
    worst = 0.0
    for _ in range(n_dirs):
        dx = rng.normal(size=x.shape) + 1j * rng.normal(size=x.shape)
        fp, _ = fun(x + h * dx)
        fm, _ = fun(x - h * dx)
        fd = (fp - fm) / (2 * h)
        an = 2 * np.real(np.sum(np.conj(g) * dx, axis=tuple(range(1, x.ndim))))
        worst = max(worst, float(np.abs(fd - an).max()))
    return worst


def test_weighted_entropy_gradient():
    rng = np.random.default_rng(1)
    a = rng.normal(size=(3, 3, 3)) + 1j * rng.normal(size=(3, 3, 3))
    w = a @ np.conj(np.swapaxes(a, 1, 2))

    def fun(m):
        h = 0.5 * (m + np.conj(np.swapaxes(m, 1, 2)))
        f, g = _engine.weighted_entropy(h)
        # dF = Tr(G dW) = 2 Re <G/2, dW> for Hermitian G
        return f, 0.5 * g

    assert _fd_check(fun, w) < 1e-6


def test_weighted_entropy_is_scaled_entropy():
    rho = np.diag([0.2, 0.3, 0.5])
    f, _ = _engine.weighted_entropy(np.array([4.0 * rho]), need_grad=False)
    assert abs(f[0] - 4.0 * vn(rho)) < 1e-12


@pytest.mark.parametrize("name", ["bsc_cascade", "qubit_hadamard", "erasure_broadcast"])
def test_ensemble_model_gradient(name):
    bc = bundled(name)
    model = _engine.EnsembleModel(bc.marginal1.kraus, bc.marginal2.kraus, 3, 2)
    rng = np.random.default_rng(2)
    vec = _stiefel.retract(rng.normal(size=(2, model.dim)) + 1j * rng.normal(size=(2, model.dim)))
    for t in range(3):
        def fun(v, t=t):
            vals, jac = model.values(v)
            return vals[:, t], jac[:, t]
        assert _fd_check(fun, vec) < 1e-6


def test_ensemble_model_matches_density_route():
    rng = np.random.default_rng(3)
    for name in ("bsc_cascade", "dephasing_broadcast", "amplitude_split"):
        bc = bundled(name)
        model = _engine.EnsembleModel(bc.marginal1.kraus, bc.marginal2.kraus, 3, 2)
        vec = _stiefel.retract(rng.normal(size=(1, model.dim)) + 1j * rng.normal(size=(1, model.dim)))
        vals, _ = model.values(vec, need_grad=False)
        ens = InputEnsemble.from_vector(vec[0], 3, 2, bc.d_in)
        ref = eval_classical_point(ens, bc, 0.0)
        got = vals[0]
        assert abs(got[0] - ref["bound_r0"]) < 1e-9
        assert abs(got[1] - ref["bound_r1"]) < 1e-9
        assert abs(got[2] - ref["bound_sum"]) < 1e-9


def _pure_model(bc, terms):
    st = stinespring(bc.channel)
    return _engine.PureModel(st.isometry, ("A1", "A2"), (2, 2), (bc.d1, bc.d2), st.env_dim, terms)


def test_pure_model_gradient_and_values():
    rng = np.random.default_rng(4)
    bc = random_broadcast(2, 2, 2, 2, rng)
    terms = (("B1",), ("A1", "B1"), ("B2",), ("A2", "B2"), ("A2", "B1", "B2"))
    model = _pure_model(bc, terms)
    vec = _stiefel.retract(rng.normal(size=(2, model.dim)) + 1j * rng.normal(size=(2, model.dim)))
    for t in range(len(terms)):
        def fun(v, t=t):
            vals, jac = model.values(v)
            return vals[:, t], jac[:, t]
        assert _fd_check(fun, vec) < 1e-6
    # values against a dense oracle
    vals, _ = model.values(vec[:1], need_grad=False)
    big = model.output(vec[:1])[0].ravel()
    rho = np.outer(big, big.conj())
    dims = model.shape
    for t, term in enumerate(terms):
        keep = [model.names.index(x) for x in term]
        assert abs(vals[0, t] - vn(ptrace_keep(rho, dims, keep))) < 1e-9


def test_coherent_informations_match_inner_point():
    bc = bundled("dephasing_broadcast")
    model = _pure_model(bc, (("B1",), ("A1", "B1"), ("B2",), ("A2", "B2")))
    rng = np.random.default_rng(5)
    vec = _stiefel.retract(rng.normal(size=(1, model.dim)) + 1j * rng.normal(size=(1, model.dim)))
    vals, _ = model.values(vec, need_grad=False)
    pt = quantum_inner_point(QuantumInputState(vec[0], ("A1", "A2"), (2, 2), 2), bc, 0.0)
    assert abs((vals[0, 0] - vals[0, 1]) - pt["I1"]) < 1e-9
    assert abs((vals[0, 2] - vals[0, 3]) - pt["I2"]) < 1e-9


def test_softmin_and_softplus_limits():
    v = np.array([[0.3, 0.1, 0.7]])
    m, w = _engine.softmin(v, 1e-4)
    assert abs(m[0] - 0.1) < 1e-3 and abs(w.sum() - 1) < 1e-12
    sp, d = _engine.softplus(np.array([-1.0, 1.0]), 1e-3)
    assert abs(sp[0]) < 1e-12 and abs(sp[1] - 1.0) < 1e-12
    assert d[0] < 1e-12 and abs(d[1] - 1) < 1e-12


def test_stiefel_minimize_finds_smallest_eigenvalue():
    a = np.diag([3.0, 1.0, -2.0, 0.5])

    def fg(u):
        # u is a stack of 4x1 isometries (unit vectors)
        f = np.real(np.einsum("sik,ij,sjk->s", u.conj(), a, u))
        return f, a @ u

    rng = np.random.default_rng(0)
    u0 = _stiefel.random_isometry((6, 4, 1), rng)
    u, f, conv = _stiefel.minimize(fg, u0, maxiter=500)
    assert np.abs(f + 2.0).max() < 1e-8
