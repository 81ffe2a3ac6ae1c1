import json
import random

import networkx as nx
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from orthantpop import ArgumentError, Polynomial, PopInstance
from orthantpop.cli import chain_cliques, generate, problem_from_dict
from orthantpop.relax import build_polya_dense, build_polya_sparse
from orthantpop.sparsity import (
    augment_with_clique_bounds,
    check_assumption,
    chordal_cliques,
    csp_graph,
    has_rip,
)

from conftest import amgm_instance, qcqp_instance


def chain_instance(n=5, u=2, seed=0):
    pop, _, _ = problem_from_dict(json.loads(generate("sparse_qcqp", seed=seed, n=n, u=u)))
    return pop


def test_graph_of_chain_objective():
    x = [Polynomial.variable(3, j) for j in range(3)]
    pop = PopInstance.create(x[0] * x[1] + x[1] * x[2])
    assert sorted(csp_graph(pop).edges()) == [(0, 1), (1, 2)]


def test_dense_quadratic_is_complete():
    g = csp_graph(qcqp_instance(2))
    assert g.number_of_edges() == 4 * 3 // 2


def test_path_cliques():
    assert chordal_cliques(nx.path_graph(3)).cliques == ((0, 1), (1, 2))


def test_complete_graph_single_clique():
    assert chordal_cliques(nx.complete_graph(5)).cliques == ((0, 1, 2, 3, 4),)


def test_recipe_cliques():
    assert chain_cliques(5, 2) == [(0, 1), (1, 2, 3), (3, 4)]
    detected = chordal_cliques(csp_graph(chain_instance())).cliques
    assert detected == ((0, 1), (1, 2, 3), (3, 4))


def test_recipe_instance_passes_all_items():
    pop = chain_instance(8, 3, seed=2)
    report = check_assumption(pop, pop.cliques)
    assert report.passed, report.format()


def test_missing_bound_names_clique():
    x = [Polynomial.variable(3, j) for j in range(3)]
    pop = PopInstance.create(x[0] * x[1] + x[1] * x[2], [1 - x[0] - x[1]])
    report = check_assumption(pop, [(0, 1), (1, 2)])
    assert not report.item("bound").passed
    assert "clique 1" in report.item("bound").detail


def test_crossing_monomial_named():
    x = [Polynomial.variable(3, j) for j in range(3)]
    pop = PopInstance.create(x[0] * x[2], [1 - x[0] - x[1], 1 - x[1] - x[2]])
    item = check_assumption(pop, [(0, 1), (1, 2)]).item("split")
    assert not item.passed and "(1, 0, 1)" in item.detail


def test_rip_violation():
    assert not has_rip([(0, 1), (2, 3), (1, 2)])
    assert has_rip([(0, 1), (1, 2), (2, 3)])


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 9), st.floats(0.1, 0.9), st.integers(0, 10**6))
def test_detected_cliques_always_rip(n, p, seed):
    g = nx.gnp_random_graph(n, p, seed=seed)
    st_ = chordal_cliques(g)
    assert has_rip(st_.cliques)
    assert set().union(*map(set, st_.cliques)) == set(range(n))
    for a, b in g.edges():
        assert any(a in c and b in c for c in st_.cliques)


def test_graph_invariant_under_constraint_order():
    pop = chain_instance(8, 3, seed=1)
    cons = list(pop.constraints[:-1])
    random.Random(0).shuffle(cons)
    shuffled = PopInstance.create(pop.objective, cons)
    assert sorted(csp_graph(pop).edges()) == sorted(csp_graph(shuffled).edges())


def test_augment_is_noop_when_satisfied():
    pop = chain_instance()
    assert augment_with_clique_bounds(pop, pop.cliques, 1.0) == pop


def test_augment_restores_assumption():
    pop = chain_instance()
    keep = [g for g in pop.constraints[:-1] if g.degree > 1]
    stripped = PopInstance.create(pop.objective, keep)
    assert not check_assumption(stripped, pop.cliques).passed
    assert check_assumption(augment_with_clique_bounds(stripped, pop.cliques, 1.0), pop.cliques).passed


def test_augment_amgm():
    pop = amgm_instance()
    bare = PopInstance.create(pop.objective, [pop.constraints[1]])
    out = augment_with_clique_bounds(bare, [(0, 1, 2)], 3.0)
    assert set(out.constraints) == set(pop.constraints)


def test_augment_rejects_bad_radius():
    with pytest.raises(ArgumentError):
        augment_with_clique_bounds(amgm_instance(), [(0, 1, 2)], 0.0)


def test_complete_graph_reproduces_dense_program():
    pop = qcqp_instance(4)
    cl = chordal_cliques(csp_graph(pop)).cliques
    assert cl == (tuple(range(pop.n)),)
    from orthantpop import solve

    dense = solve(build_polya_dense(pop, 1, 2)[0]).dual_objective
    sparse = solve(build_polya_sparse(pop, 1, d=pop.d_f, s=2, cliques=cl)[0]).dual_objective
    assert sparse == pytest.approx(dense, abs=1e-6)
