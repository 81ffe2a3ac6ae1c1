"""Correlative sparsity: interaction graph, chordal cliques and the clique hypotheses.

The sparse hierarchies need an ordered list of variable cliques ``I_1..I_p``
with the running intersection property (RIP), an assignment of each
constraint to a clique containing its variables, a bound constraint
``R_c - sum_{j in I_c} x_j`` (or its ball analogue) inside every clique, and a
split of the objective into clique-local pieces.  :func:`check_assumption`
reports on each of these items and :func:`augment_with_clique_bounds` adds
missing bound constraints.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import networkx as nx

from .errors import ArgumentError, AssumptionError
from .poly import Exponent, Polynomial, PopInstance, graded_lex_key

__all__ = [
    "AssumptionReport",
    "CliqueStructure",
    "augment_with_clique_bounds",
    "check_assumption",
    "chordal_cliques",
    "csp_graph",
    "has_rip",
    "resolve_cliques",
]


@dataclass(frozen=True)
class CliqueStructure:
    """Cliques with RIP order plus, once checked, constraint assignments.

    ``assignments[c]`` lists constraint indices handled by clique ``c``; the
    trailing constant constraint belongs to every clique.  ``bound_index[c]``
    is the clique's bound constraint ``i_c`` and ``radius[c]`` its ``R_c``.
    ``objective_split[c]`` is the piece ``f_c`` of the objective.
    """

    cliques: tuple[tuple[int, ...], ...]
    assignments: tuple[tuple[int, ...], ...] = ()
    bound_index: tuple[int | None, ...] = ()
    bound_kind: tuple[str | None, ...] = ()
    radius: tuple[float | None, ...] = ()
    objective_split: tuple[Polynomial, ...] = ()

    @property
    def p(self) -> int:
        return len(self.cliques)


@dataclass(frozen=True)
class AssumptionItem:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class AssumptionReport:
    items: tuple[AssumptionItem, ...]
    structure: CliqueStructure

    @property
    def passed(self) -> bool:
        return all(item.passed for item in self.items)

    def item(self, name: str) -> AssumptionItem:
        for it in self.items:
            if it.name == name:
                return it
        raise KeyError(name)

    def failures(self) -> list[AssumptionItem]:
        return [it for it in self.items if not it.passed]

    def format(self) -> str:
        lines = []
        for c, clique in enumerate(self.structure.cliques):
            asg = self.structure.assignments[c] if self.structure.assignments else ()
            lines.append(f"clique {c}: variables {list(clique)} constraints {list(asg)}")
        for it in self.items:
            lines.append(f"[{'pass' if it.passed else 'FAIL'}] {it.name}: {it.detail}")
        return "\n".join(lines)


# ---------------------------------------------------------------------------
# graph and cliques
# ---------------------------------------------------------------------------

def csp_graph(pop: PopInstance) -> nx.Graph:
    """Variables as vertices, an edge whenever two variables share a monomial."""
    g = nx.Graph()
    g.add_nodes_from(range(pop.n))
    for poly in (pop.objective,) + tuple(pop.constraints):
        for expo in poly.exponents():
            supp = [j for j, e in enumerate(expo) if e]
            for a in range(len(supp)):
                for b in range(a + 1, len(supp)):
                    g.add_edge(supp[a], supp[b])
    return g


def has_rip(cliques: Sequence[Sequence[int]]) -> bool:
    """Running intersection: each clique meets the union of its predecessors inside one of them."""
    seen: set[int] = set()
    for c, clique in enumerate(cliques):
        inter = set(clique) & seen
        if c > 0 and not any(inter <= set(cliques[prev]) for prev in range(c)):
            return False
        seen |= set(clique)
    return True


def chordal_cliques(graph: nx.Graph) -> CliqueStructure:
    """Maximal cliques of a minimum-degree chordal extension, in RIP order.

    Vertices are eliminated greedily by current degree (ties broken by the
    smallest label).  The resulting maximal cliques are ordered by a
    breadth-first walk of a maximum-weight clique tree rooted at the
    lexicographically smallest clique, which guarantees RIP.
    """
    work = {v: set(graph.neighbors(v)) for v in sorted(graph.nodes)}
    raw: list[frozenset[int]] = []
    while work:
        v = min(work, key=lambda u: (len(work[u]), u))
        nbrs = work.pop(v)
        raw.append(frozenset(nbrs | {v}))
        for a in nbrs:
            work[a].discard(v)
            work[a] |= nbrs - {a}
    maximal = [c for c in raw if not any(c < other for other in raw)]
    uniq = sorted({tuple(sorted(c)) for c in maximal})
    if len(uniq) <= 1:
        cliques = tuple(uniq)
    else:
        tree = nx.Graph()
        tree.add_nodes_from(range(len(uniq)))
        for a in range(len(uniq)):
            for b in range(a + 1, len(uniq)):
                w = len(set(uniq[a]) & set(uniq[b]))
                if w:
                    tree.add_edge(a, b, weight=w)
        forest = nx.maximum_spanning_tree(tree, algorithm="kruskal")
        order: list[int] = []
        for root in range(len(uniq)):
            if root in order:
                continue
            queue = [root]
            order.append(root)
            while queue:
                cur = queue.pop(0)
                for nxt in sorted(forest.neighbors(cur)):
                    if nxt not in order:
                        order.append(nxt)
                        queue.append(nxt)
        cliques = tuple(uniq[i] for i in order)
    if not has_rip(cliques):
        raise AssertionError(f"chordal clique ordering violates RIP: {cliques}")
    return CliqueStructure(cliques=cliques)


# ---------------------------------------------------------------------------
# hypotheses
# ---------------------------------------------------------------------------

def _bound_kind(poly: Polynomial, clique: Sequence[int]) -> tuple[str, float] | None:
    """Recognise ``R - sum_{j in I} x_j`` or ``R - sum_{j in I} x_j^2``."""
    terms = dict(poly.to_float().terms)
    n = poly.n
    zero = (0,) * n
    radius = terms.pop(zero, 0.0)
    if radius <= 0 or len(terms) != len(clique):
        return None
    for power, kind in ((1, "simplex"), (2, "ball")):
        ok = True
        for j in clique:
            e = [0] * n
            e[j] = power
            if terms.get(tuple(e)) != -1.0:
                ok = False
                break
        if ok:
            return kind, float(radius)
    return None


def check_assumption(pop: PopInstance, cliques: Sequence[Sequence[int]] | CliqueStructure,
                     allow_ball: bool = True) -> AssumptionReport:
    """Itemised check of the sparse hypotheses for the given clique order.

    Items: ``rip``, ``cover`` (cliques cover all variables), ``assignment``
    (every constraint fits a clique), ``bound`` (a bound constraint per
    clique, simplex or ball when ``allow_ball``) and ``split`` (every
    objective monomial fits a clique).  Constraints go to the first clique
    containing their variables; the trailing constant goes to all.
    """
    if isinstance(cliques, CliqueStructure):
        cliques = cliques.cliques
    cl = tuple(tuple(sorted(int(j) for j in c)) for c in cliques)
    n, m = pop.n, pop.m
    items = []
    rip = has_rip(cl)
    items.append(AssumptionItem("rip", rip, "running intersection holds" if rip else
                                f"order {list(map(list, cl))} violates running intersection"))
    covered = set().union(*map(set, cl)) if cl else set()
    missing = sorted(set(range(n)) - covered)
    items.append(AssumptionItem("cover", not missing, "all variables covered" if not missing
                                else f"variables {missing} are in no clique"))

    assignments: list[list[int]] = [[] for _ in cl]
    unassigned = []
    for i, g in enumerate(pop.constraints[:-1]):
        supp = g.support()
        home = next((c for c, clique in enumerate(cl) if supp <= set(clique)), None)
        if home is None:
            unassigned.append(i)
        else:
            assignments[home].append(i)
    for asg in assignments:
        asg.append(m - 1)
    items.append(AssumptionItem("assignment", not unassigned, "every constraint fits a clique"
                                if not unassigned else f"constraints {unassigned} span several cliques"))

    bound_index: list[int | None] = []
    bound_kind: list[str | None] = []
    radius: list[float | None] = []
    lacking = []
    kinds = ("simplex", "ball") if allow_ball else ("simplex",)
    for c, clique in enumerate(cl):
        found = None
        # prefer the instance-wide flagged bound, then any recognised constraint
        candidates = list(range(m - 1))
        if pop.bound_index is not None:
            candidates.remove(pop.bound_index)
            candidates.insert(0, pop.bound_index)
        for i in candidates:
            hit = _bound_kind(pop.constraints[i], clique)
            if hit is not None and hit[0] in kinds:
                found = (i, *hit)
                break
        if found is None:
            lacking.append(c)
            bound_index.append(None)
            bound_kind.append(None)
            radius.append(None)
        else:
            i, kind, rad = found
            bound_index.append(i)
            bound_kind.append(kind)
            radius.append(rad)
            if i not in assignments[c]:
                # a bound constraint of clique c only involves I_c, so it may be
                # reassigned here from an earlier clique containing I_c
                for other in assignments:
                    if i in other:
                        other.remove(i)
                assignments[c].insert(0, i)
    detail = "every clique has a bound constraint" if not lacking else \
        "; ".join(f"clique {c} {list(cl[c])} lacks R - sum x_j" for c in lacking)
    items.append(AssumptionItem("bound", not lacking, detail))

    pieces: list[dict[Exponent, object]] = [dict() for _ in cl]
    stray = []
    for expo, coeff in pop.objective.items():
        supp = {j for j, e in enumerate(expo) if e}
        home = next((c for c, clique in enumerate(cl) if supp <= set(clique)), None)
        if home is None:
            stray.append(expo)
        else:
            pieces[home][expo] = coeff
    items.append(AssumptionItem("split", not stray, "objective splits over cliques" if not stray
                                else f"objective monomial {stray[0]} spans several cliques"))
    structure = CliqueStructure(
        cliques=cl,
        assignments=tuple(tuple(sorted(a)) for a in assignments),
        bound_index=tuple(bound_index),
        bound_kind=tuple(bound_kind),
        radius=tuple(radius),
        objective_split=tuple(Polynomial(n, pc, exact=pop.objective.exact) for pc in pieces),
    )
    return AssumptionReport(tuple(items), structure)


def resolve_cliques(pop: PopInstance, cliques=None, require: Sequence[str] = ("rip", "cover", "assignment"),
                    allow_ball: bool = True) -> CliqueStructure:
    """Pick cliques (explicit, stored on the instance, or detected) and check them.

    Raises :class:`AssumptionError` listing every failing item among
    ``require``.
    """
    if cliques is None:
        cliques = pop.cliques
    if cliques is None:
        cliques = chordal_cliques(csp_graph(pop)).cliques
    report = check_assumption(pop, cliques, allow_ball=allow_ball)
    bad = [it for it in report.items if it.name in require and not it.passed]
    if bad:
        raise AssumptionError("; ".join(f"{it.name}: {it.detail}" for it in bad))
    return report.structure


def augment_with_clique_bounds(pop: PopInstance, cliques: Sequence[Sequence[int]] | CliqueStructure,
                               R: Sequence[float] | float) -> PopInstance:
    """Add ``R_c - sum_{j in I_c} x_j >= 0`` for each clique lacking a bound.

    Existing constraints keep their indices; new constraints are inserted
    just before the trailing constant.  The caller asserts these constraints
    are redundant for the feasible set.
    """
    if isinstance(cliques, CliqueStructure):
        cliques = cliques.cliques
    cl = [tuple(sorted(c)) for c in cliques]
    radii = [float(R)] * len(cl) if isinstance(R, (int, float)) else [float(r) for r in R]
    if len(radii) != len(cl):
        raise ArgumentError("need one radius per clique")
    if any(r <= 0 for r in radii):
        raise ArgumentError("clique radii must be positive")
    report = check_assumption(pop, cl)
    n = pop.n
    added = []
    for c, clique in enumerate(cl):
        if report.structure.bound_index[c] is not None:
            continue
        terms = {(0,) * n: radii[c]}
        for j in clique:
            e = [0] * n
            e[j] = 1
            terms[tuple(e)] = -1
        added.append(Polynomial(n, terms, exact=pop.objective.exact))
    if not added:
        return pop
    cons = tuple(pop.constraints[:-1]) + tuple(added) + (pop.constraints[-1],)
    bound_index, bound_kind, radius = pop.bound_index, pop.bound_kind, pop.radius
    if len(cl) == 1 and bound_index is None:
        bound_index, bound_kind, radius = len(pop.constraints) - 1, "simplex", radii[0]
    return PopInstance(pop.objective, cons, bound_index, bound_kind, radius, pop.equality_pairs,
                       tuple(cl), None, pop.name)
