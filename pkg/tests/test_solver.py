import time

import numpy as np
import pytest

from orthantpop import ParseError, SolveSettings, export_sdpa, import_sdpa, solve
from orthantpop.conic import program_from_dense
from orthantpop.relax import build_handelman_dense, build_polya_dense, build_putinar_dense
from orthantpop.solver import read_sdpa, write_sdpa

from conftest import amgm_instance, cvxpy_value, qcqp_instance


def assert_certified(sol, tol=1e-7):
    assert sol.status == "optimal"
    assert sol.primal_residual <= tol and sol.dual_residual <= tol and sol.rel_gap <= tol


def test_scalar_lp():
    sol = solve(program_from_dense([1.0], lp=([[1.0]], [1.0])))
    assert_certified(sol)
    assert sol.primal_objective == pytest.approx(1, abs=1e-7)
    assert sol.x[0] == pytest.approx(1, abs=1e-7)


def test_two_by_two_sdp():
    F1 = np.eye(2)
    F0 = np.array([[0.0, -1.0], [-1.0, 0.0]])
    sol = solve(program_from_dense([1.0], blocks=[(F0, [F1])]))
    assert_certified(sol)
    assert sol.primal_objective == pytest.approx(1, abs=1e-7)
    # the dual matrix is the Gram matrix of the certificate and must be PSD
    assert np.linalg.eigvalsh(sol.z_blocks[0])[0] >= -1e-9


def test_equalities_and_constant():
    # min x1 + 2 x2 + 5  s.t. x1 + x2 = 1, x >= 0
    prog = program_from_dense([1.0, 2.0], A=[[1.0, 1.0]], b=[1.0], lp=(np.eye(2), [0, 0]), c0=5.0)
    sol = solve(prog)
    assert_certified(sol)
    assert sol.primal_objective == pytest.approx(6, abs=1e-7)
    assert sol.dual_objective == pytest.approx(6, abs=1e-7)


def test_primal_infeasible():
    prog = program_from_dense([1.0], lp=([[1.0], [-1.0]], [1.0, 0.0]))
    assert solve(prog).status == "primal-infeasible"


def test_infeasible_normalization():
    # y0 = 1 together with y0 <= 0
    prog = program_from_dense([0.0], A=[[1.0]], b=[1.0], lp=([[-1.0]], [0.0]))
    assert solve(prog).status == "primal-infeasible"


def test_dual_infeasible():
    prog = program_from_dense([1.0], lp=([[-1.0]], [0.0]))
    assert solve(prog).status == "dual-infeasible"


def test_settings_validation():
    with pytest.raises(ValueError):
        SolveSettings(feastol=0)
    with pytest.raises(ValueError):
        SolveSettings(step_fraction=1.0)


def test_amgm_value():
    P, _ = build_polya_dense(amgm_instance(), 2, 4)
    sol = solve(P)
    assert_certified(sol)
    assert sol.dual_objective == pytest.approx(3, abs=2e-3)


@pytest.mark.parametrize("seed", [0, 1, 2, 5])
def test_matches_external_solver(seed):
    pop = qcqp_instance(seed)
    for P in (build_polya_dense(pop, 1, 3)[0], build_handelman_dense(pop, 3, 2)[0],
              build_putinar_dense(pop, 2)[0]):
        sol = solve(P)
        assert_certified(sol)
        assert sol.dual_objective == pytest.approx(cvxpy_value(P), abs=1e-5)


def test_weak_duality_at_solution():
    for seed in range(4):
        sol = solve(build_polya_dense(qcqp_instance(seed), 1, 2)[0])
        assert sol.primal_objective >= sol.dual_objective - 1e-7


def test_deterministic():
    P, _ = build_polya_dense(amgm_instance(), 2, 3)
    a, b = solve(P), solve(P)
    assert a.iterations == b.iterations
    assert a.primal_objective == b.primal_objective and a.dual_objective == b.dual_objective
    assert np.array_equal(a.x, b.x)


def _independent_blocks(count, dim, seed=0):
    # min sum t_b  s.t.  t_b I - C_b PSD; optimum is the sum of the top eigenvalues
    rng = np.random.default_rng(seed)
    blocks, top = [], 0.0
    for b in range(count):
        C = rng.normal(size=(dim, dim))
        C = (C + C.T) / 2
        top += np.linalg.eigvalsh(C)[-1]
        Fs = [np.eye(dim) if i == b else np.zeros((dim, dim)) for i in range(count)]
        blocks.append((C, Fs))
    return program_from_dense(np.ones(count), blocks=blocks), top


def test_block_structure_value():
    prog, top = _independent_blocks(6, 4)
    sol = solve(prog)
    assert_certified(sol)
    assert sol.primal_objective == pytest.approx(top, abs=1e-6)


def test_scaling_with_block_count():
    """Doubling the number of blocks at a fixed size must not cost like one big block."""

    def per_iteration(count, dim):
        prog, _ = _independent_blocks(count, dim, seed=count)
        best = np.inf
        for _ in range(3):
            t = time.perf_counter()
            sol = solve(prog)
            best = min(best, (time.perf_counter() - t) / sol.iterations)
        return best

    small = per_iteration(20, 8)
    large = per_iteration(40, 8)
    assert large < 4 * small


class TestSdpa:
    def toy(self):
        F1 = np.array([[0.0, 1.0], [1.0, 0.0]])
        return program_from_dense([0.0], blocks=[(np.zeros((2, 2)), [F1])])

    def test_toy_body(self):
        text = export_sdpa(self.toy())
        body = [ln for ln in text.splitlines() if not ln.startswith(('"', "*"))]
        assert body == ["1", "1", "2", "0", "1 1 1 2 1"]

    def test_amgm_round_trip(self):
        P, _ = build_polya_dense(amgm_instance(), 0, 1)
        assert import_sdpa(export_sdpa(P)).structurally_equal(P)

    def test_byte_determinism(self):
        P1, _ = build_polya_dense(amgm_instance(), 2, 4)
        P2, _ = build_polya_dense(amgm_instance(), 2, 4)
        assert export_sdpa(P1) == export_sdpa(P2)

    def test_file_round_trip(self, tmp_path):
        P, _ = build_handelman_dense(qcqp_instance(3), 3, 2)
        path = tmp_path / "p.dat-s"
        write_sdpa(P, path)
        assert read_sdpa(path).structurally_equal(P)

    def test_foreign_file(self):
        text = "* plain file\n1\n2\n2 -1\n1.0\n0 1 1 2 -1\n1 1 1 1 1\n1 1 2 2 1\n1 2 1 1 1\n"
        P = import_sdpa(text)
        assert P.n_eq == 0 and P.n_lp == 1 and P.block_dims == [2]
        assert solve(P).primal_objective == pytest.approx(1, abs=1e-7)

    @pytest.mark.parametrize("text,line", [
        ("1\n1\n2\n1.0\n1 1 1 x 1\n", 5),
        ("1\n1\n0\n1.0\n", 3),
        ("1\n1\n2\n1.0\n1 3 1 1 1\n", 5),
        ('"c\n1\n1\n2\n1.0\n1 1 1 1\n', 6),
    ])
    def test_parse_errors_carry_line(self, text, line):
        with pytest.raises(ParseError) as info:
            import_sdpa(text)
        assert info.value.line == line
