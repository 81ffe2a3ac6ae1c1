"""Command-line front end.

Subcommands::

    orthantpop solve    PROBLEM.json --method pol --k 2 --s 4 [--extract]
    orthantpop generate FAMILY [family options] --seed 0 [-o FILE]
    orthantpop export   PROBLEM.json --method pol --k 1 -o out.dat-s
    orthantpop analyze  PROBLEM.json

Problem files are JSON documents::

    {"n": 3, "sense": "min",
     "objective": [{"coeff": 1.0, "expo": [1, 0, 0]}, ...],
     "constraints": [{"poly": [...], "kind": "ineq", "flag": "simplex", "R": 3}, ...],
     "cliques": [[0, 1], [1, 2]]}

``kind`` is ``ineq`` (``g >= 0``) or ``eq`` (``g = 0``, expanded into the pair
``g >= 0, -g >= 0``); ``flag`` marks the global bound constraint ``R - sum x_j``
(``simplex``) or ``R - sum x_j^2`` (``ball``).  Variable indices (cliques) are
0-based.  The constant constraint 1 is implicit.  ``sense: "max"`` is solved
as the minimisation of ``-f`` and reported back in the original sense.

Random generators draw from numpy's PCG64 bit generator seeded with
``--seed``; the same seed gives a byte-identical file on every platform.

Exit codes: 0 optimal, 2 infeasible, 3 unbounded, 4 numerical failure or
iteration limit, 64 usage or configuration error.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from fractions import Fraction
from typing import Sequence

import networkx as nx
import numpy as np

from . import __version__
from .errors import OrthantPopError
from .extract import extract_from_solution
from .poly import BOUND_KINDS, Polynomial, PopInstance, monomials_up_to
from .relax import (
    build_handelman_dense,
    build_handelman_sparse,
    build_polya_dense,
    build_polya_sparse,
    build_putinar_dense,
    build_putinar_sparse,
)
from .solver import SolveSettings, export_sdpa, solve
from .sparsity import check_assumption, chordal_cliques, csp_graph

__all__ = [
    "EXIT_CODES",
    "build_program",
    "generate",
    "load_problem",
    "main",
    "problem_to_json",
    "problem_from_dict",
]

EXIT_OK, EXIT_INFEASIBLE, EXIT_UNBOUNDED, EXIT_FAILURE, EXIT_USAGE = 0, 2, 3, 4, 64
EXIT_CODES = {
    "optimal": EXIT_OK,
    "primal-infeasible": EXIT_INFEASIBLE,
    "dual-infeasible": EXIT_UNBOUNDED,
    "max-iter": EXIT_FAILURE,
    "numerical-failure": EXIT_FAILURE,
}
METHODS = ("put", "pol", "han", "sppol", "sphan", "spput")
FORMAT_TAG = "orthantpop-problem"
PRNG_NAME = "numpy.PCG64"


# ---------------------------------------------------------------------------
# problem files
# ---------------------------------------------------------------------------

def _coeff(value):
    if isinstance(value, str):
        return float(Fraction(value))
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise OrthantPopError(f"bad coefficient {value!r}")
    return float(value)


def _poly_from_terms(n: int, terms, where: str) -> Polynomial:
    if not isinstance(terms, list):
        raise OrthantPopError(f"{where}: expected a list of terms")
    out: dict = {}
    for t in terms:
        try:
            expo = tuple(t["expo"])
            c = _coeff(t["coeff"])
        except (KeyError, TypeError):
            raise OrthantPopError(f"{where}: each term needs 'coeff' and 'expo'") from None
        if len(expo) != n or any(not isinstance(e, int) or isinstance(e, bool) or e < 0 for e in expo):
            raise OrthantPopError(f"{where}: exponent {list(expo)} is not {n} nonnegative integers")
        out[expo] = out.get(expo, 0.0) + c
    return Polynomial(n, out)


def _poly_to_terms(p: Polynomial) -> list[dict]:
    return [{"coeff": float(c), "expo": list(a)} for a, c in p.items()]


def problem_from_dict(doc: dict) -> tuple[PopInstance, str, dict]:
    """Parse a problem document into ``(instance, sense, metadata)``."""
    try:
        n = int(doc["n"])
    except (KeyError, TypeError, ValueError):
        raise OrthantPopError("problem file needs an integer 'n'") from None
    if n < 1:
        raise OrthantPopError("'n' must be positive")
    sense = doc.get("sense", "min")
    if sense not in ("min", "max"):
        raise OrthantPopError("'sense' must be 'min' or 'max'")
    f = _poly_from_terms(n, doc.get("objective", []), "objective")
    if sense == "max":
        f = -f
    cons: list[Polynomial] = []
    pairs: list[tuple[int, int]] = []
    bound = None
    for idx, entry in enumerate(doc.get("constraints", [])):
        where = f"constraint {idx}"
        g = _poly_from_terms(n, entry.get("poly"), where)
        kind = entry.get("kind", "ineq")
        flag = entry.get("flag", "none")
        if kind not in ("ineq", "eq"):
            raise OrthantPopError(f"{where}: kind must be 'ineq' or 'eq'")
        if flag not in ("none",) + BOUND_KINDS:
            raise OrthantPopError(f"{where}: flag must be none, simplex or ball")
        if flag != "none":
            if bound is not None:
                raise OrthantPopError(f"{where}: only one constraint may carry a bound flag")
            bound = (len(cons), flag, float(entry.get("R", 1.0)))
        if kind == "eq":
            pairs.append((len(cons), len(cons) + 1))
            cons.extend([g, -g])
        else:
            # two consecutive inequalities +h >= 0, -h >= 0 form an equality pair
            paired = {i for pr in pairs for i in pr}
            if cons and len(cons) - 1 not in paired and (cons[-1] + g).norm_max() == 0:
                pairs.append((len(cons) - 1, len(cons)))
            cons.append(g)
    cons.append(Polynomial.constant(n, 1))
    cliques = doc.get("cliques")
    if cliques is not None:
        cliques = tuple(tuple(sorted(int(j) for j in c)) for c in cliques)
    kw = dict(bound_index=None, bound_kind=None, radius=None)
    if bound is not None:
        kw = dict(bound_index=bound[0], bound_kind=bound[1], radius=bound[2])
    pop = PopInstance(f, tuple(cons), equality_pairs=tuple(pairs), cliques=cliques,
                      name=str(doc.get("name", "")), **kw)
    return pop, sense, dict(doc.get("metadata", {}))


def load_problem(path: str) -> tuple[PopInstance, str, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except OSError as exc:
        raise OrthantPopError(f"cannot read {path}: {exc.strerror}") from None
    except json.JSONDecodeError as exc:
        raise OrthantPopError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    return problem_from_dict(doc)


def problem_to_json(n: int, objective: Polynomial, constraints: Sequence[dict], sense: str = "min",
                    cliques=None, name: str = "", metadata: dict | None = None) -> str:
    """Deterministic JSON text of a problem document.

    ``constraints`` entries are ``{"poly": Polynomial, "kind": ..., "flag": ..., "R": ...}``.
    """
    doc = {
        "format": FORMAT_TAG,
        "version": 1,
        "name": name,
        "n": n,
        "sense": sense,
        "objective": _poly_to_terms(objective),
        "constraints": [
            {k: (_poly_to_terms(v) if k == "poly" else v) for k, v in c.items()} for c in constraints
        ],
    }
    if cliques is not None:
        doc["cliques"] = [list(c) for c in cliques]
    if metadata:
        doc["metadata"] = metadata
    return json.dumps(doc, sort_keys=True, indent=1) + "\n"


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def _lin(n: int, coeffs: dict[int, float], const: float = 0.0) -> Polynomial:
    terms = {(0,) * n: const}
    for j, c in coeffs.items():
        e = [0] * n
        e[j] = 1
        terms[tuple(e)] = c
    return Polynomial(n, terms)


def _quad_form(Q: np.ndarray) -> Polynomial:
    n = Q.shape[0]
    terms: dict = {}
    for i in range(n):
        for j in range(n):
            if Q[i, j] != 0:
                e = [0] * n
                e[i] += 1
                e[j] += 1
                terms[tuple(e)] = terms.get(tuple(e), 0.0) + float(Q[i, j])
    return Polynomial(n, terms)


def _simplex_equality(n: int, R: float = 1.0) -> list[dict]:
    g = _lin(n, {j: -1.0 for j in range(n)}, R)
    return [{"poly": g, "kind": "ineq", "flag": "simplex", "R": R},
            {"poly": -g, "kind": "ineq", "flag": "none"}]


def _graph(kind: str, n: int, rng: np.random.Generator, density: float, edges: str | None) -> nx.Graph:
    if edges:
        g = nx.Graph()
        g.add_nodes_from(range(n))
        for tok in edges.split(","):
            a, b = (int(v) for v in tok.split("-"))
            g.add_edge(a, b)
        return g
    if kind == "cycle":
        return nx.cycle_graph(n)
    if kind == "path":
        return nx.path_graph(n)
    if kind == "complete":
        return nx.complete_graph(n)
    if kind == "random":
        g = nx.Graph()
        g.add_nodes_from(range(n))
        for a, b in itertools.combinations(range(n), 2):
            if rng.random() < density:
                g.add_edge(a, b)
        return g
    raise OrthantPopError(f"unknown graph kind {kind!r}")


def stability_number(graph: nx.Graph) -> int:
    """Exact independence number by maximum clique search in the complement."""
    _, size = nx.max_weight_clique(nx.complement(graph), weight=None)
    return int(size)


def gen_stability(n: int, graph: str = "cycle", density: float = 0.5, edges: str | None = None,
                  seed: int = 0) -> dict:
    rng = _rng(seed)
    G = _graph(graph, n, rng, density, edges)
    A = nx.to_numpy_array(G, nodelist=range(n)) + np.eye(n)
    alpha = stability_number(G)
    anchor = [1.0 / n] * n
    return dict(n=n, objective=_quad_form(A), constraints=_simplex_equality(n),
                name=f"stability-{graph}-{n}",
                metadata={"alpha": alpha, "optimum": 1.0 / alpha, "anchor": anchor,
                          "edges": sorted([list(e) for e in G.edges()])})


def gen_maxcut(n: int, graph: str = "complete", density: float = 0.5, edges: str | None = None,
               weights: str = "random", seed: int = 0) -> dict:
    rng = _rng(seed)
    G = _graph(graph, n, rng, density, edges)
    W = np.zeros((n, n))
    for a, b in sorted(G.edges()):
        w = 1.0 if weights == "unit" else float(rng.uniform(0.0, 1.0))
        W[a, b] = W[b, a] = w
    ones = np.ones(n)
    # x^T W (e - x) = sum_ij W_ij x_i - x^T W x
    f = Polynomial(n, {}) - _quad_form(W)
    f = f + _lin(n, {i: float(W[i] @ ones) for i in range(n)})
    cons = [{"poly": _lin(n, {j: -1.0 for j in range(n)}, float(n)), "kind": "ineq",
             "flag": "simplex", "R": float(n)}]
    for j in range(n):
        xj = _lin(n, {j: 1.0})
        h = xj - xj * xj
        cons.append({"poly": h, "kind": "ineq", "flag": "none"})
        cons.append({"poly": -h, "kind": "ineq", "flag": "none"})
    best = max(float(np.array(x) @ W @ (ones - np.array(x))) for x in itertools.product((0, 1), repeat=n)) \
        if n <= 16 else None
    return dict(n=n, objective=f, constraints=cons, sense="max", name=f"maxcut-{graph}-{n}",
                metadata={"optimum": best, "anchor": [0.0] * n})


def gen_copositivity(n: int, identity: bool = False, seed: int = 0) -> dict:
    rng = _rng(seed)
    if identity:
        A = np.eye(n)
    else:
        B = rng.uniform(-1.0, 1.0, size=(n, n))
        A = 0.5 * (B + B.T)
    return dict(n=n, objective=_quad_form(A), constraints=_simplex_equality(n), name=f"copositivity-{n}",
                metadata={"matrix": A.tolist(), "anchor": [1.0 / n] * n})


def gen_form(n: int, d: int = 2, seed: int = 0) -> dict:
    rng = _rng(seed)
    terms = {a: float(rng.uniform(-1.0, 1.0)) for a in monomials_up_to(n, 2 * d) if sum(a) == 2 * d}
    return dict(n=n, objective=Polynomial(n, terms), constraints=_simplex_equality(n), name=f"form-{n}-{2 * d}",
                metadata={"anchor": [1.0 / n] * n})


def gen_boolean(n: int, d: int = 1, seed: int = 0) -> dict:
    rng = _rng(seed)
    terms = {a: float(rng.uniform(-1.0, 1.0)) for a in monomials_up_to(n, 2 * d)}
    f = Polynomial(n, terms)
    cons = [{"poly": _lin(n, {j: -1.0 for j in range(n)}, float(n)), "kind": "ineq",
             "flag": "simplex", "R": float(n)}]
    for j in range(n):
        xj = _lin(n, {j: 1.0})
        h = xj - xj * xj
        cons.append({"poly": h, "kind": "ineq", "flag": "none"})
        cons.append({"poly": -h, "kind": "ineq", "flag": "none"})
    best = min(float(f.evaluate(np.array(x, dtype=float))) for x in itertools.product((0, 1), repeat=n)) \
        if n <= 16 else None
    return dict(n=n, objective=f, constraints=cons, name=f"boolean-{n}-{2 * d}",
                metadata={"optimum": best, "anchor": [0.0] * n})


def pmsv_matrix(m: int, rng: np.random.Generator) -> np.ndarray:
    """Block lower-triangular Toeplitz matrix built from random ``A, B, C, D`` of size ``m``."""
    A, B, C, D = (rng.uniform(-1.0, 1.0, size=(m, m)) for _ in range(4))
    blocks = [D] + [C @ np.linalg.matrix_power(A, i) @ B for i in range(m - 1)]
    M = np.zeros((m * m, m * m))
    for r in range(m):
        for c in range(r + 1):
            M[r * m:(r + 1) * m, c * m:(c + 1) * m] = blocks[r - c]
    return M


def gen_pmsv(m: int, seed: int = 0) -> dict:
    rng = _rng(seed)
    M = pmsv_matrix(m, rng)
    n = m * m
    f = _quad_form(M.T @ M)
    ball = Polynomial(n, {(0,) * n: 1.0, **{tuple(2 if q == j else 0 for q in range(n)): -1.0 for j in range(n)}})
    cons = [{"poly": ball, "kind": "ineq", "flag": "ball", "R": 1.0},
            {"poly": -ball, "kind": "ineq", "flag": "none"}]
    return dict(n=n, objective=f, constraints=cons, sense="max", name=f"pmsv-{m}",
                metadata={"matrix": M.tolist(), "anchor": [1.0 / math.sqrt(n)] * n})


def _random_quadratic(n: int, support: Sequence[int], rng: np.random.Generator) -> Polynomial:
    """Random coefficients in (-1, 1) on every monomial of degree 1..2 over ``support``."""
    terms = {}
    for local in monomials_up_to(len(support), 2):
        if sum(local) == 0:
            continue
        e = [0] * n
        for pos, v in zip(support, local):
            e[pos] = v
        terms[tuple(e)] = float(rng.uniform(-1.0, 1.0))
    return Polynomial(n, terms)


def _uniform_simplex(n: int, rng: np.random.Generator) -> np.ndarray:
    # uniform on {x >= 0, sum x <= 1}: first n coordinates of a flat Dirichlet in dimension n + 1
    return rng.dirichlet(np.ones(n + 1))[:n]


def gen_dense_qcqp(n: int, m_ineq: int = 2, m_eq: int = 0, seed: int = 0) -> dict:
    """Random dense QCQP on the simplex; ``m_ineq`` counts the simplex and the constant constraint."""
    if m_ineq < 2 or m_eq < 0:
        raise OrthantPopError("dense QCQP needs m_ineq >= 2 and m_eq >= 0")
    rng = _rng(seed)
    a = _uniform_simplex(n, rng)
    full = list(range(n))
    f = _random_quadratic(n, full, rng) + float(rng.uniform(-1.0, 1.0))
    cons = [{"poly": _lin(n, {j: -1.0 for j in range(n)}, 1.0), "kind": "ineq", "flag": "simplex", "R": 1.0}]
    for _ in range(m_ineq - 2):
        g = _random_quadratic(n, full, rng)
        g = g + (0.125 - float(g.evaluate(a)))
        cons.append({"poly": g, "kind": "ineq", "flag": "none"})
    for _ in range(m_eq):
        h = _random_quadratic(n, full, rng)
        h = h - float(h.evaluate(a))
        cons.append({"poly": h, "kind": "ineq", "flag": "none"})
        cons.append({"poly": -h, "kind": "ineq", "flag": "none"})
    return dict(n=n, objective=f, constraints=cons, name=f"dense-qcqp-{n}-{m_ineq}-{m_eq}",
                metadata={"anchor": a.tolist()})


def chain_cliques(n: int, u: int) -> list[tuple[int, ...]]:
    """Overlapping chain of cliques (0-based) with width ``u``."""
    if u < 1 or n < 1:
        raise OrthantPopError("chain cliques need n >= 1 and u >= 1")
    p = n // u + 1
    out = []
    for c in range(1, p + 1):
        if c == 1:
            members = range(1, min(u, n) + 1)
        elif c < p:
            members = range(u * (c - 1), u * c + 1)
        else:
            members = range(u * (p - 1), n + 1)
        clique = tuple(j - 1 for j in members if 1 <= j <= n)
        if clique and (not out or clique != out[-1]):
            out.append(clique)
    return out


def _split_counts(total: int, p: int) -> list[int]:
    q = total // p
    counts = [q] * (p - 1) + [total - q * (p - 1)]
    return counts


def gen_sparse_qcqp(n: int, u: int = 2, m_ineq: int | None = None, m_eq: int = 0, seed: int = 0) -> dict:
    """Random QCQP with a chain clique structure and one simplex constraint per clique."""
    rng = _rng(seed)
    cliques = chain_cliques(n, u)
    p = len(cliques)
    if m_ineq is None:
        m_ineq = p
    if m_ineq < p or m_eq < 0:
        raise OrthantPopError(f"sparse QCQP needs m_ineq >= number of cliques ({p}) and m_eq >= 0")
    a = _uniform_simplex(n, rng)
    f = Polynomial(n, {})
    for clique in cliques:
        f = f + _random_quadratic(n, clique, rng) + float(rng.uniform(-1.0, 1.0))
    cons = []
    for clique, count in zip(cliques, _split_counts(m_ineq, p)):
        cons.append({"poly": _lin(n, {j: -1.0 for j in clique}, 1.0), "kind": "ineq", "flag": "none"})
        for _ in range(max(count, 1) - 1):
            g = _random_quadratic(n, clique, rng)
            g = g + (0.125 - float(g.evaluate(a)))
            cons.append({"poly": g, "kind": "ineq", "flag": "none"})
    for clique, count in zip(cliques, _split_counts(m_eq, p)):
        for _ in range(count):
            h = _random_quadratic(n, clique, rng)
            h = h - float(h.evaluate(a))
            cons.append({"poly": h, "kind": "ineq", "flag": "none"})
            cons.append({"poly": -h, "kind": "ineq", "flag": "none"})
    return dict(n=n, objective=f, constraints=cons, cliques=cliques, name=f"sparse-qcqp-{n}-{u}",
                metadata={"anchor": a.tolist()})


GENERATORS = {
    "stability": gen_stability,
    "maxcut": gen_maxcut,
    "copositivity": gen_copositivity,
    "form": gen_form,
    "boolean": gen_boolean,
    "pmsv": gen_pmsv,
    "dense_qcqp": gen_dense_qcqp,
    "sparse_qcqp": gen_sparse_qcqp,
}


def generate(family: str, seed: int = 0, **params) -> str:
    """Problem file text for ``family``; byte-identical for identical arguments."""
    try:
        fn = GENERATORS[family]
    except KeyError:
        raise OrthantPopError(f"unknown family {family!r}; choose from {sorted(GENERATORS)}") from None
    made = fn(seed=seed, **params)
    meta = dict(made.get("metadata", {}))
    meta.update(family=family, seed=seed, prng=PRNG_NAME, params={k: v for k, v in sorted(params.items())})
    return problem_to_json(made["n"], made["objective"], made["constraints"], made.get("sense", "min"),
                           made.get("cliques"), made.get("name", ""), meta)


# ---------------------------------------------------------------------------
# relaxations
# ---------------------------------------------------------------------------

def build_program(pop: PopInstance, method: str, k: int, s: int = 1, d: int | None = None,
                  eps: float = 0.0, symmetry: bool = False):
    """Dispatch ``method`` to the matching relaxation builder."""
    if method == "pol":
        return build_polya_dense(pop, k, s, eps)
    if method == "han":
        return build_handelman_dense(pop, k, s)
    if method == "put":
        return build_putinar_dense(pop, k, symmetry=symmetry)
    if method == "sppol":
        return build_polya_sparse(pop, k, d, s)
    if method == "sphan":
        return build_handelman_sparse(pop, k, s)
    if method == "spput":
        return build_putinar_sparse(pop, k)
    raise OrthantPopError(f"unknown method {method!r}")


# ---------------------------------------------------------------------------
# argument parsing
# ---------------------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _nonneg_int(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _pos_int(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_relax_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("problem", help="problem JSON file")
    p.add_argument("--method", choices=METHODS, default="pol", help="relaxation family (default pol)")
    p.add_argument("--k", type=_nonneg_int, default=1, help="hierarchy order (default 1)")
    p.add_argument("--s", type=_pos_int, default=1, help="block width; 1 gives a linear program")
    p.add_argument("--d", type=_nonneg_int, default=None, help="piece degree for sparse Polya")
    p.add_argument("--eps", type=float, default=0.0, help="perturbation for the non-compact Polya variant")
    p.add_argument("--symmetry", action="store_true", help="parity split for the standard hierarchy")


def _parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="orthantpop", description="Polynomial optimisation on the nonnegative orthant.")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True, parser_class=_Parser)

    ps = sub.add_parser("solve", help="build a relaxation, solve it and report the bound")
    _add_relax_args(ps)
    ps.add_argument("--extract", action="store_true", help="try to recover a minimiser")
    ps.add_argument("--tol", type=float, default=1e-4, help="rank tolerance for extraction")
    ps.add_argument("--verify-eps", type=float, default=1e-2, help="tolerance of the verification inequalities")
    ps.add_argument("--feastol", type=float, default=1e-8)
    ps.add_argument("--gaptol", type=float, default=1e-8)
    ps.add_argument("--max-iter", type=_pos_int, default=200)
    ps.add_argument("--json", action="store_true", help="print the report as JSON")
    ps.add_argument("--verbose", action="store_true", help="print solver iterations")

    pg = sub.add_parser("generate", help="write a benchmark problem file")
    pg.add_argument("family", choices=sorted(GENERATORS))
    pg.add_argument("--n", type=_pos_int, default=None, help="number of variables")
    pg.add_argument("--m", type=_pos_int, default=None, help="block size for pmsv (n = m^2)")
    pg.add_argument("--d", type=_pos_int, default=None, help="half degree for form and boolean")
    pg.add_argument("--u", type=_pos_int, default=None, help="clique width for sparse_qcqp")
    pg.add_argument("--m-ineq", type=_nonneg_int, default=None)
    pg.add_argument("--m-eq", type=_nonneg_int, default=None)
    pg.add_argument("--graph", choices=("cycle", "path", "complete", "random"), default=None)
    pg.add_argument("--density", type=float, default=None, help="edge probability of random graphs")
    pg.add_argument("--edges", default=None, help="explicit edge list such as 0-1,1-2")
    pg.add_argument("--weights", choices=("random", "unit"), default=None)
    pg.add_argument("--identity", action="store_true", help="copositivity with the identity matrix")
    pg.add_argument("--seed", type=_nonneg_int, default=0)
    pg.add_argument("-o", "--output", default=None, help="output path (default stdout)")

    pe = sub.add_parser("export", help="write the relaxation in SDPA sparse format")
    _add_relax_args(pe)
    pe.add_argument("-o", "--output", default=None, help="output path (default stdout)")

    pa = sub.add_parser("analyze", help="report the correlative sparsity structure")
    pa.add_argument("problem")
    return ap


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def _fmt_vec(v) -> str:
    return "[" + ", ".join(f"{float(t):.6g}" for t in v) + "]"


def cmd_solve(args) -> int:
    pop, sense, _ = load_problem(args.problem)
    program, vmap = build_program(pop, args.method, args.k, args.s, args.d, args.eps, args.symmetry)
    settings = SolveSettings(feastol=args.feastol, gaptol=args.gaptol, max_iter=args.max_iter,
                             verbose=args.verbose)
    sol = solve(program, settings)
    sign = -1.0 if sense == "max" else 1.0
    stats = program.stats()
    report = {
        "status": sol.status,
        "val": sign * sol.dual_objective if math.isfinite(sol.dual_objective) else (
            "inf" if sol.status == "primal-infeasible" else "-inf"),
        "primal_objective": sign * sol.primal_objective if math.isfinite(sol.primal_objective) else None,
        "time": round(sol.solve_time, 6),
        "iterations": sol.iterations,
        "rel_gap": sol.rel_gap,
        "primal_residual": sol.primal_residual,
        "dual_residual": sol.dual_residual,
        **stats,
        "method": args.method,
        "k": args.k,
        "s": args.s,
        "sense": sense,
        "omitted": list(vmap.omitted),
    }
    if args.extract and sol.status in ("optimal", "max-iter", "numerical-failure"):
        atoms = extract_from_solution(pop, sol, vmap, program, tol=args.tol, epsilon=args.verify_eps)
        report["extraction"] = {
            "status": atoms.status,
            "message": atoms.message,
            "rank": atoms.rank,
            "solutions": [list(map(float, x)) for x in atoms.solutions],
            "verified": [bool(r.passed) for r in atoms.reports],
            "objective_residuals": [float(r.objective_residual) for r in atoms.reports],
        }
    if args.json:
        print(json.dumps(report, sort_keys=True, indent=1, default=float))
    else:
        label = "upper bound" if sense == "max" else "lower bound"
        val = report["val"]
        print(f"status      {sol.status}")
        print(f"val         {val if isinstance(val, str) else f'{val:.10g}'}  ({label})")
        print(f"time        {sol.solve_time:.3f} s  ({sol.iterations} iterations)")
        print(f"residuals   primal {sol.primal_residual:.2e}  dual {sol.dual_residual:.2e}  gap {sol.rel_gap:.2e}")
        print(f"size        nmat {stats['nmat']}  msize {stats['msize']}  nscal {stats['nscal']}  naff {stats['naff']}")
        for note in vmap.omitted:
            print(f"note        omitted {note}")
        ext = report.get("extraction")
        if ext is not None:
            print(f"extraction  {ext['status']}" + (f" ({ext['message']})" if ext["message"] else ""))
            for x, ok, res in zip(ext["solutions"], ext["verified"], ext["objective_residuals"]):
                print(f"  x* = {_fmt_vec(x)}  verified={'yes' if ok else 'no'}  |f - val| = {res:.2e}")
    return EXIT_CODES[sol.status]


def cmd_generate(args) -> int:
    fam = args.family
    params: dict = {}
    need_n = fam != "pmsv"
    if need_n and args.n is None:
        raise OrthantPopError(f"{fam} needs --n")
    if need_n:
        params["n"] = args.n
    if fam in ("stability", "maxcut"):
        if args.graph is not None:
            params["graph"] = args.graph
        if args.density is not None:
            params["density"] = args.density
        if args.edges is not None:
            params["edges"] = args.edges
    if fam == "maxcut" and args.weights is not None:
        params["weights"] = args.weights
    if fam == "copositivity" and args.identity:
        params["identity"] = True
    if fam in ("form", "boolean") and args.d is not None:
        params["d"] = args.d
    if fam == "pmsv":
        if args.m is None:
            raise OrthantPopError("pmsv needs --m")
        params["m"] = args.m
    if fam in ("dense_qcqp", "sparse_qcqp"):
        if args.m_ineq is not None:
            params["m_ineq"] = args.m_ineq
        if args.m_eq is not None:
            params["m_eq"] = args.m_eq
    if fam == "sparse_qcqp" and args.u is not None:
        params["u"] = args.u
    text = generate(fam, seed=args.seed, **params)
    _write(args.output, text)
    return EXIT_OK


def cmd_export(args) -> int:
    pop, _, _ = load_problem(args.problem)
    program, _ = build_program(pop, args.method, args.k, args.s, args.d, args.eps, args.symmetry)
    _write(args.output, export_sdpa(program))
    return EXIT_OK


def cmd_analyze(args) -> int:
    pop, _, _ = load_problem(args.problem)
    detected = chordal_cliques(csp_graph(pop)).cliques
    cliques = pop.cliques if pop.cliques is not None else detected
    report = check_assumption(pop, cliques)
    source = "file" if pop.cliques is not None else "detected"
    print(f"variables   {pop.n}")
    print(f"constraints {pop.m} (including the constant 1)")
    print(f"cliques     {len(cliques)} ({source})")
    print(report.format())
    return EXIT_OK


def _write(path: str | None, text: str) -> None:
    if path is None:
        sys.stdout.write(text)
        return
    try:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
    except OSError as exc:
        raise OrthantPopError(f"cannot write {path}: {exc.strerror}") from None


def main(argv: Sequence[str] | None = None) -> int:
    args = _parser().parse_args(argv)
    handler = {"solve": cmd_solve, "generate": cmd_generate, "export": cmd_export, "analyze": cmd_analyze}
    try:
        return handler[args.command](args)
    except (OrthantPopError, ValueError) as exc:
        print(f"orthantpop: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
