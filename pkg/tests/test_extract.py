import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthantpop import CertificateShapeError, Polynomial, PopInstance, cover_blocks, solve
from orthantpop.extract import (
    Certificate,
    _stitch,
    assemble_gram,
    certificate_from_solution,
    extract_atoms,
    extract_from_solution,
    verify_solution,
)
from orthantpop.moment import moments_of_measure
from orthantpop.poly import monomials_up_to
from orthantpop.relax import GramKey, build_polya_dense, build_polya_sparse, build_putinar_dense

from conftest import amgm_instance


def _key(i, basis, block=0):
    n = len(basis[0])
    return GramKey("psd", i, 0, 0, block, None, tuple(basis), Polynomial.constant(n, 1))


def _cert(blocks, n, support=None):
    grams = {_key(i, basis, i): G for i, (basis, G) in enumerate(blocks)}
    covers = {}
    if support is not None:
        covers[(0, 0, None)] = support
    return Certificate(bound=0.0, grams=grams, method={}, n=n, constant_index=0, covers=covers)


def _quadratic_form(G, basis, z):
    v = np.array([np.prod(np.asarray(z) ** np.asarray(a)) for a in basis])
    return float(v @ G @ v)


class TestAssemble:
    def test_single_full_block(self):
        basis = monomials_up_to(2, 1)
        G0 = np.array([[2.0, 0.5, 0], [0.5, 1.0, 0.1], [0, 0.1, 1.0]])
        G, got = assemble_gram(_cert([(basis, G0)], 2))
        assert got == basis and np.array_equal(G, G0)

    def test_overlapping_singletons_add(self):
        G, basis = assemble_gram(_cert([([(1,)], np.array([[1.5]])), ([(1,)], np.array([[2.0]]))], 1))
        assert basis == [(1,)] and G[0, 0] == 3.5

    def test_missing_family(self):
        cert = _cert([([(0,)], np.eye(1))], 1)
        cert.constant_index = 3
        with pytest.raises(CertificateShapeError):
            assemble_gram(cert)

    def test_bad_shape(self):
        with pytest.raises(CertificateShapeError):
            assemble_gram(_cert([([(0,), (1,)], np.eye(3))], 1))

    @settings(max_examples=100, deadline=None)
    @given(st.integers(1, 3), st.integers(1, 2), st.integers(1, 4), st.integers(0, 2**31 - 1))
    def test_preserves_sos_value(self, n, d, s, seed):
        rng = np.random.default_rng(seed)
        cover = cover_blocks(n, d, s)
        blocks = []
        for _, blk in cover.nonempty():
            B = rng.normal(size=(len(blk), len(blk)))
            blocks.append((list(blk), B @ B.T))
        G, basis = assemble_gram(_cert(blocks, n, cover))
        scale = max(1.0, max(float(np.abs(b).max()) for _, b in blocks))
        for z in rng.uniform(-1.5, 1.5, size=(5, n)):
            direct = sum(_quadratic_form(B, b, z) for b, B in blocks)
            assert abs(_quadratic_form(G, basis, z) - direct) <= 1e-10 * scale * len(basis) ** 2


class TestAtoms:
    def test_univariate_square(self):
        res = extract_atoms(np.array([[1.0, -1.0], [-1.0, 1.0]]), squared=False)
        assert res.ok and len(res.atoms) == 1 and res.atoms[0][0] == pytest.approx(1)

    def test_two_atom_moment_data(self):
        y = moments_of_measure([[0.2], [0.8]], [0.5, 0.5], 4)
        M = np.array([[y.moment((i + j,)) for j in range(3)] for i in range(3)])
        res = extract_atoms(M, [(0,), (1,), (2,)], kind="range", squared=False)
        assert res.ok
        got = sorted(float(a[0]) for a in res.atoms)
        assert got == pytest.approx([0.2, 0.8], abs=1e-6)

    def test_bivariate_moment_data(self):
        pts = np.array([[0.3, 0.9], [0.7, 0.1]])
        basis = monomials_up_to(2, 2)
        y = moments_of_measure(pts, [0.4, 0.6], 4)
        M = np.array([[y.moment(tuple(a + b for a, b in zip(p, q))) for q in basis] for p in basis])
        res = extract_atoms(M, basis, kind="range", squared=False)
        assert res.ok
        got = sorted(map(tuple, np.round(res.atoms, 8)))
        assert np.allclose(got, sorted(map(tuple, pts)), atol=1e-6)

    def test_deterministic_given_seed(self):
        y = moments_of_measure([[0.2], [0.8]], [0.5, 0.5], 4)
        M = np.array([[y.moment((i + j,)) for j in range(3)] for i in range(3)])
        a = extract_atoms(M, kind="range", seed=5, squared=False)
        b = extract_atoms(M, kind="range", seed=5, squared=False)
        assert all(np.array_equal(p, q) for p, q in zip(a.atoms, b.atoms))

    def test_failure_is_a_signal(self):
        # full-rank Gram matrix: empty kernel, nothing to extract
        res = extract_atoms(np.eye(3))
        assert not res.ok and res.status == "failed"

    def test_bad_arguments(self):
        with pytest.raises(ValueError):
            extract_atoms(np.eye(2), tol=2.0)
        with pytest.raises(ValueError):
            extract_atoms(np.array([[1.0, 2.0], [0.0, 1.0]]))


class TestVerify:
    def test_amgm_optimum(self):
        rep = verify_solution(amgm_instance(), [1, 1, 1], 3.0)
        assert rep.passed and np.allclose(rep.x, 1)

    def test_infeasible_point(self):
        rep = verify_solution(amgm_instance(), [2, 0, 0], 3.0)
        assert not rep.passed and "g1" in rep.failures()

    def test_perturbed_point(self):
        z = (1 + 1e-3) * np.ones(3)
        assert verify_solution(amgm_instance(), z, 3.0, 1e-2).passed
        assert not verify_solution(amgm_instance(), z, 3.0, 1e-6).passed

    @settings(max_examples=50, deadline=None)
    @given(st.lists(st.floats(0, 1.8), min_size=3, max_size=3), st.floats(1e-6, 0.5), st.floats(1.0, 10.0))
    def test_monotone_in_epsilon(self, z, eps, factor):
        pop = amgm_instance()
        if verify_solution(pop, z, 3.0, eps).passed:
            assert verify_solution(pop, z, 3.0, eps * factor).passed

    @settings(max_examples=30, deadline=None)
    @given(st.lists(st.floats(-1.5, 1.5), min_size=3, max_size=3), st.lists(st.booleans(), min_size=3, max_size=3))
    def test_sign_invariance(self, z, flips):
        pop = amgm_instance()
        z = np.array(z)
        w = np.where(flips, -z, z)
        a, b = verify_solution(pop, z, 3.0), verify_solution(pop, w, 3.0)
        assert a.passed == b.passed
        assert a.objective_residual == b.objective_residual


class TestPipelines:
    def test_amgm_dense(self):
        pop = amgm_instance()
        P, vmap = build_polya_dense(pop, 2, 4)
        sol = solve(P)
        cert = certificate_from_solution(sol, vmap, P)
        assert cert.is_psd() and cert.identity_residual < 1e-7
        res = extract_from_solution(pop, sol, vmap, P)
        assert res.ok
        assert np.max(np.abs(res.best - 1)) <= 1e-2
        assert res.reports[0].passed

    def test_moment_side(self):
        pop = amgm_instance()
        P, vmap = build_putinar_dense(pop, 3, symmetry=True)
        res = extract_from_solution(pop, solve(P), vmap, P)
        assert res.ok and np.max(np.abs(res.best - 1)) <= 1e-2

    def test_sparse_two_cliques(self):
        n = 3
        x = [Polynomial.variable(n, j) for j in range(n)]
        f = (x[0] - 0.3) ** 2 + (x[1] - 0.4) ** 2 + (x[2] - 0.2) ** 2
        g1 = 1 - x[0] - x[1]
        g2 = 1 - x[1] - x[2]
        pop = PopInstance.create(f, [g1, g2], cliques=[(0, 1), (1, 2)])
        P, vmap = build_polya_sparse(pop, 1, d=2, s=6)
        sol = solve(P)
        assert sol.dual_objective == pytest.approx(0, abs=1e-6)
        res = extract_from_solution(pop, sol, vmap, P)
        assert res.ok, res.message
        assert np.allclose(res.best, [0.3, 0.4, 0.2], atol=1e-3)
        assert res.reports[0].passed

    def test_stitch_conflict(self):
        x, fail = _stitch(3, [(0, 1), (1, 2)], [[np.array([0.3, 0.4])], [np.array([0.5, 0.2])]], 1e-4)
        assert x is None and fail.cliques == (0, 1) and fail.variable == 1

    def test_stitch_consistent(self):
        x, fail = _stitch(3, [(0, 1), (1, 2)],
                          [[np.array([0.3, 0.9]), np.array([0.3, 0.4])], [np.array([0.4, 0.2])]], 1e-4)
        assert fail is None and np.allclose(x, [0.3, 0.4, 0.2])
