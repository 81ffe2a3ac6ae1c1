"""Minimizer extraction from solved relaxations, and verification.

The certificate of a multiplier (or multiplier-free) relaxation is a family
of Gram matrices, one per cone block.  The family attached to the constant
constraint ``g_m = 1`` is embedded into the full monomial index set and
summed into a single Gram matrix ``G``.  At a minimizer ``z`` of the squared
problem every term of the certificate vanishes, so the monomial vector
``v(z)`` lies in the kernel of ``G``; the kernel is then turned into points
with the multiplication-matrix method (column echelon form, one operator per
variable, common eigenvectors through a random combination and an ordered
real Schur form).

Moment matrices of atomic measures are handled by the same machinery using
the range instead of the kernel.

Extraction is a heuristic.  A failure is reported through the ``status`` and
``message`` fields of the returned :class:`AtomSet` and never raises.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.linalg as la

from .errors import ArgumentError, CertificateShapeError
from .poly import Exponent, Polynomial, PopInstance, graded_lex_key, monomials_up_to, substitute_squares
from .relax import GramKey, VariableMap
from .solver import Solution

__all__ = [
    "AtomSet",
    "Certificate",
    "StitchFailure",
    "VerificationReport",
    "assemble_gram",
    "certificate_from_solution",
    "exact_identity",
    "extract_atoms",
    "extract_from_solution",
    "extract_sparse",
    "verify_solution",
]

#: Default relative eigenvalue threshold for the numerical kernel or range.
DEFAULT_TOL = 1e-4
#: Default seed of the random combination of multiplication matrices.
DEFAULT_SEED = 20230817
PSD_TOL = 1e-7


# ---------------------------------------------------------------------------
# certificates
# ---------------------------------------------------------------------------

@dataclass
class Certificate:
    """Dual side of a solved relaxation.

    ``grams`` maps each :class:`~orthantpop.relax.GramKey` to its Gram
    matrix (1x1 for LP rows).  ``bound`` is the certified value ``lambda``.
    """

    bound: float
    grams: dict[GramKey, np.ndarray]
    method: dict
    n: int
    constant_index: int
    covers: dict = field(default_factory=dict)
    orders: dict = field(default_factory=dict)
    cliques: tuple | None = None
    identity_residual: float = float("nan")

    def min_eigenvalue(self) -> float:
        vals = [float(np.linalg.eigvalsh(G)[0]) for G in self.grams.values() if G.size]
        return min(vals) if vals else float("inf")

    def is_psd(self, tol: float = PSD_TOL) -> bool:
        return self.min_eigenvalue() >= -tol

    def family(self, constraint: int, power: int = 0, clique: int | None = None) -> list[tuple[GramKey, np.ndarray]]:
        items = [(k, G) for k, G in self.grams.items()
                 if k.constraint == constraint and k.power == power and k.clique == clique]
        return sorted(items, key=lambda kg: kg[0].block)


def certificate_from_solution(solution: Solution, vmap: VariableMap, program=None) -> Certificate:
    """Collect the Gram matrices of ``solution`` through ``vmap``.

    If ``program`` is given, the sup-norm of the dual residual
    ``c + A^T y + G^T z`` is stored as the identity residual: it is the
    largest coefficient mismatch of the polynomial identity behind the bound.
    """
    grams: dict[GramKey, np.ndarray] = {}
    for key in vmap.grams:
        if key.kind == "lp":
            grams[key] = np.array([[float(solution.z_lp[key.index])]])
        else:
            grams[key] = np.array(solution.z_blocks[key.index], dtype=float)
    m = len(vmap.constraints)
    cert = Certificate(
        bound=float(solution.dual_objective),
        grams=grams,
        method=dict(vmap.params, family=vmap.method),
        n=vmap.n,
        constant_index=m - 1,
        covers=dict(vmap.covers),
        orders=dict(vmap.orders),
        cliques=vmap.cliques,
    )
    if program is not None:
        r = np.asarray(program.c, dtype=float) + program.A.T @ solution.y
        r = r - program.lp_coef.T @ solution.z_lp
        for blk, Z in zip(program.blocks, solution.z_blocks):
            r = r - blk.coef.T @ _pack_weighted(Z)
        cert.identity_residual = float(np.max(np.abs(r))) if r.size else 0.0
    return cert


def _pack_weighted(Z: np.ndarray) -> np.ndarray:
    # <F, Z> for symmetric F stored as its upper triangle: off-diagonal
    # entries appear twice in the trace inner product
    iu = np.triu_indices(Z.shape[0])
    w = np.where(iu[0] == iu[1], 1.0, 2.0)
    return w * Z[iu]


def assemble_gram(cert: Certificate, clique: int | None = None) -> tuple[np.ndarray, list[Exponent]]:
    """Sum the embedded Gram blocks of the constant-constraint family.

    Returns ``(G, basis)`` where ``basis`` lists the monomials indexing
    ``G`` in graded-lex order (restricted to the clique's variables in the
    sparse case).
    """
    fam = cert.family(cert.constant_index, 0, clique)
    if not fam:
        raise CertificateShapeError(
            f"certificate has no Gram family for the constant constraint"
            + ("" if clique is None else f" in clique {clique}"))
    cover = cert.covers.get((cert.constant_index, 0, clique))
    if cover is not None:
        basis = list(cover.support)
    else:
        seen = {a for key, _ in fam for a in key.basis}
        basis = sorted(seen, key=graded_lex_key)
    pos = {a: i for i, a in enumerate(basis)}
    G = np.zeros((len(basis), len(basis)))
    for key, blk in fam:
        try:
            idx = [pos[a] for a in key.basis]
        except KeyError as exc:
            raise CertificateShapeError(f"block {key.label()} uses monomial {exc.args[0]} outside the index set") from None
        if blk.shape != (len(idx), len(idx)):
            raise CertificateShapeError(f"block {key.label()} has shape {blk.shape}, expected {len(idx)}x{len(idx)}")
        G[np.ix_(idx, idx)] += blk
    return 0.5 * (G + G.T), basis


# ---------------------------------------------------------------------------
# atoms
# ---------------------------------------------------------------------------

@dataclass
class AtomSet:
    """Outcome of an extraction.

    ``atoms`` are points ``z`` of the squared problem (or of the original
    problem for moment-matrix input); ``solutions`` the mapped points
    ``x = z**2`` (identical to ``atoms`` when ``squared`` is false).
    """

    status: str
    atoms: list[np.ndarray] = field(default_factory=list)
    solutions: list[np.ndarray] = field(default_factory=list)
    rank: int = 0
    message: str = ""
    reports: list["VerificationReport"] = field(default_factory=list)
    squared: bool = True

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    @property
    def best(self) -> np.ndarray | None:
        """First verified solution, else the first candidate."""
        for x, rep in zip(self.solutions, self.reports):
            if rep.passed:
                return x
        return self.solutions[0] if self.solutions else None


def _rref(M: np.ndarray, tol: float) -> tuple[np.ndarray, list[int]]:
    """Reduced row echelon form with partial pivoting; returns (R, pivot columns)."""
    R = M.astype(float).copy()
    rows, cols = R.shape
    pivots: list[int] = []
    r = 0
    for c in range(cols):
        if r == rows:
            break
        p = r + int(np.argmax(np.abs(R[r:, c])))
        if abs(R[p, c]) <= tol:
            R[r:, c] = 0.0
            continue
        R[[r, p]] = R[[p, r]]
        R[r] /= R[r, c]
        others = np.arange(rows) != r
        R[others] -= np.outer(R[others, c], R[r])
        pivots.append(c)
        r += 1
    return R[:r], pivots


def _subspace(G: np.ndarray, tol: float, kind: str) -> np.ndarray:
    vals, vecs = np.linalg.eigh(0.5 * (G + G.T))
    top = max(float(np.max(np.abs(vals))), 1e-300) if vals.size else 1.0
    if kind == "kernel":
        mask = vals <= tol * top
    else:
        mask = vals > tol * top
    return vecs[:, mask]


def _atoms_from_subspace(V: np.ndarray, basis: Sequence[Exponent], tol: float, seed: int
                         ) -> tuple[str, list[np.ndarray], str]:
    r = V.shape[1]
    if r == 0:
        return "failed", [], "empty subspace: no candidate points"
    n = len(basis[0])
    R, pivots = _rref(V.T, 1e-8)
    if len(pivots) != r:
        return "failed", [], f"echelon form found {len(pivots)} pivots for rank {r}"
    U = R.T  # len(basis) x r, identity on pivot rows
    index = {a: i for i, a in enumerate(basis)}
    piv_monos = [basis[p] for p in pivots]
    mults = []
    for j in range(n):
        rows = []
        for beta in piv_monos:
            shifted = tuple(b + (1 if q == j else 0) for q, b in enumerate(beta))
            if shifted not in index:
                return "failed", [], f"monomial {shifted} needed by the multiplication matrix is outside the basis"
            rows.append(U[index[shifted]])
        mults.append(np.array(rows))
    scale = max(1.0, max(float(np.max(np.abs(N))) for N in mults))
    for a in range(n):
        for b in range(a + 1, n):
            comm = mults[a] @ mults[b] - mults[b] @ mults[a]
            if float(np.max(np.abs(comm))) > max(tol, 1e-6) * scale * scale * 10:
                return "failed", [], f"multiplication matrices of variables {a} and {b} do not commute"
    rng = np.random.default_rng(seed)
    w = rng.random(n)
    w /= w.sum()
    Nmix = sum(wj * Nj for wj, Nj in zip(w, mults))
    T, Q = la.schur(Nmix, output="real")
    if np.any(np.abs(np.diag(T, -1)) > 1e-8 * scale):
        return "failed", [], "random combination has complex eigenvalues"
    atoms = [np.array([float(Q[:, t] @ Nj @ Q[:, t]) for Nj in mults]) for t in range(r)]
    atoms.sort(key=lambda z: tuple(np.round(z, 12)))
    return "ok", atoms, ""


def extract_atoms(G: np.ndarray, basis: Sequence[Exponent] | None = None, tol: float = DEFAULT_TOL,
                  seed: int = DEFAULT_SEED, kind: str = "kernel", squared: bool = True) -> AtomSet:
    """Candidate points from a Gram matrix (``kind="kernel"``) or a moment matrix (``kind="range"``).

    ``basis`` lists the monomials indexing ``G``; for a 1-variable problem it
    may be omitted, in which case ``1, x, x^2, ...`` is assumed.  With
    ``squared`` the points are ``z`` values and ``solutions`` holds ``z**2``.
    """
    if not 0 < tol < 1:
        raise ArgumentError("tol must lie in (0, 1)")
    if kind not in ("kernel", "range"):
        raise ArgumentError("kind must be 'kernel' or 'range'")
    G = np.asarray(G, dtype=float)
    if G.ndim != 2 or G.shape[0] != G.shape[1]:
        raise ArgumentError("G must be a square matrix")
    if basis is None:
        basis = [(i,) for i in range(G.shape[0])]
    basis = [tuple(b) for b in basis]
    if len(basis) != G.shape[0]:
        raise ArgumentError(f"basis has {len(basis)} monomials but G has size {G.shape[0]}")
    if not np.allclose(G, G.T, atol=1e-9 * max(1.0, float(np.max(np.abs(G))) if G.size else 1.0)):
        raise ArgumentError("G must be symmetric")
    V = _subspace(G, tol, kind)
    status, atoms, msg = _atoms_from_subspace(V, basis, tol, seed)
    sols = [z ** 2 for z in atoms] if squared else [z.copy() for z in atoms]
    return AtomSet(status, atoms, sols, V.shape[1], msg, squared=squared)


def _dedupe(points: list[np.ndarray], tol: float = 1e-4) -> list[np.ndarray]:
    out: list[np.ndarray] = []
    for p in points:
        if not any(np.max(np.abs(p - q)) <= tol for q in out):
            out.append(p)
    return out


# ---------------------------------------------------------------------------
# verification
# ---------------------------------------------------------------------------

@dataclass
class VerificationReport:
    """Per-inequality outcome of :func:`verify_solution`."""

    passed: bool
    objective_residual: float
    objective_ok: bool
    constraint_values: list[float]
    constraint_ok: list[bool]
    x: np.ndarray | None

    def failures(self) -> list[str]:
        out = [] if self.objective_ok else ["objective"]
        out += [f"g{i}" for i, ok in enumerate(self.constraint_ok) if not ok]
        return out


def verify_solution(pop: PopInstance, z, bound: float, epsilon: float = 1e-2) -> VerificationReport:
    """Check ``|f(z^2) - bound| <= eps ||f(x^2)||_max`` and ``g_i(z^2) >= -eps ||g_i(x^2)||_max``.

    On success the report carries ``x = z**2``.
    """
    if not epsilon > 0:
        raise ArgumentError("epsilon must be positive")
    z = np.asarray(z, dtype=float)
    x = z ** 2
    f_sq = substitute_squares(pop.objective)
    res = abs(float(f_sq.evaluate(z)) - float(bound))
    obj_ok = res <= epsilon * float(f_sq.norm_max())
    vals, oks = [], []
    for g in pop.constraints:
        g_sq = substitute_squares(g)
        v = float(g_sq.evaluate(z))
        vals.append(v)
        oks.append(v >= -epsilon * float(g_sq.norm_max()))
    passed = obj_ok and all(oks)
    return VerificationReport(passed, res, obj_ok, vals, oks, x if passed else None)


def _verify_plain(pop: PopInstance, x, bound: float, epsilon: float) -> VerificationReport:
    # same checks in the original variables (for the standard hierarchy)
    x = np.asarray(x, dtype=float)
    res = abs(float(pop.objective.evaluate(x)) - float(bound))
    obj_ok = res <= epsilon * float(pop.objective.norm_max())
    vals, oks = [], []
    for g in pop.constraints:
        v = float(g.evaluate(x))
        vals.append(v)
        oks.append(v >= -epsilon * float(g.norm_max()))
    for xj in x:
        oks.append(xj >= -epsilon)
        vals.append(float(xj))
    passed = obj_ok and all(oks)
    return VerificationReport(passed, res, obj_ok, vals, oks, x if passed else None)


# ---------------------------------------------------------------------------
# sparse stitching
# ---------------------------------------------------------------------------

@dataclass
class StitchFailure:
    """Overlap disagreement between two cliques."""

    cliques: tuple[int, int]
    variable: int
    values: tuple[float, float]


def _stitch(n: int, cliques: Sequence[Sequence[int]], per_clique: list[list[np.ndarray]], tol: float):
    """Depth-first choice of one point per clique that agrees on overlaps (in x space)."""
    x = np.full(n, np.nan)
    owner = [-1] * n
    last_fail: list[StitchFailure] = []

    def place(c: int) -> bool:
        if c == len(cliques):
            return True
        for cand in per_clique[c]:
            clash = None
            for pos, j in enumerate(cliques[c]):
                if owner[j] >= 0 and abs(x[j] - cand[pos]) > tol:
                    clash = StitchFailure((owner[j], c), j, (float(x[j]), float(cand[pos])))
                    break
            if clash is not None:
                last_fail[:] = [clash]
                continue
            saved = [(j, x[j], owner[j]) for j in cliques[c]]
            for pos, j in enumerate(cliques[c]):
                if owner[j] < 0:
                    x[j], owner[j] = cand[pos], c
            if place(c + 1):
                return True
            for j, v, o in saved:
                x[j], owner[j] = v, o
        return False

    if place(0):
        return x, None
    return None, (last_fail[0] if last_fail else None)


def extract_sparse(cert: Certificate, pop: PopInstance | None = None, tol: float = DEFAULT_TOL,
                   seed: int = DEFAULT_SEED, epsilon: float = 1e-2, stitch_tol: float = 1e-4) -> AtomSet:
    """Per-clique extraction followed by stitching on overlaps.

    Points are compared after squaring, so sign flips of ``z`` are
    immaterial.  A disagreement larger than ``stitch_tol`` on a shared
    variable is reported with status ``"stitch-failed"`` and a message naming
    the clique pair.
    """
    if cert.cliques is None:
        raise CertificateShapeError("certificate has no clique structure")
    n = cert.n
    per_clique: list[list[np.ndarray]] = []
    for c, clique in enumerate(cert.cliques):
        G, basis = assemble_gram(cert, c)
        local = [tuple(a[j] for j in clique) for a in basis]
        res = extract_atoms(G, local, tol, seed)
        if not res.ok:
            return AtomSet("failed", message=f"clique {c}: {res.message}")
        per_clique.append(_dedupe(res.solutions, stitch_tol))
    x, fail = _stitch(n, cert.cliques, per_clique, stitch_tol)
    if x is None:
        if fail is None:
            return AtomSet("stitch-failed", message="no consistent choice of per-clique points")
        a, b = fail.cliques
        return AtomSet("stitch-failed", message=(
            f"cliques {a} and {b} disagree on x[{fail.variable}]: {fail.values[0]:.6g} vs {fail.values[1]:.6g}"))
    z = np.sqrt(np.maximum(x, 0.0))
    out = AtomSet("ok", [z], [x], sum(len(p) for p in per_clique))
    if pop is not None:
        out.reports = [verify_solution(pop, z, cert.bound, epsilon)]
    return out


# ---------------------------------------------------------------------------
# convenience
# ---------------------------------------------------------------------------

def extract_from_solution(pop: PopInstance, solution: Solution, vmap: VariableMap, program=None,
                          tol: float = DEFAULT_TOL, seed: int = DEFAULT_SEED, epsilon: float = 1e-2) -> AtomSet:
    """Run the extraction that matches the relaxation family of ``vmap``.

    Multiplier and multiplier-free families use the certificate kernel (dense
    or per clique).  The standard hierarchy uses the range of its moment
    matrix.
    """
    if vmap.method.startswith("putinar"):
        return _extract_moment(pop, solution, vmap, tol, seed, epsilon)
    cert = certificate_from_solution(solution, vmap, program)
    if vmap.cliques is not None:
        return extract_sparse(cert, pop, tol, seed, epsilon)
    G, basis = assemble_gram(cert)
    res = extract_atoms(G, basis, tol, seed)
    if res.ok:
        keep = _dedupe(res.solutions)
        res.solutions = keep
        res.atoms = [np.sqrt(np.maximum(x, 0.0)) for x in keep]
        res.reports = [verify_solution(pop, z, cert.bound, epsilon) for z in res.atoms]
    return res


def _extract_moment(pop, solution, vmap, tol, seed, epsilon) -> AtomSet:
    # For the squared variants the even moments y_{2 alpha} are exactly the
    # moments of the image measure in x = z^2 space, so the moment matrix is
    # built there directly: that removes the 2^n sign-flipped copies of every
    # atom and needs only half the degree.
    k = vmap.params["k"]
    n = vmap.n
    vals = vmap.moment_values(solution.x)
    method = vmap.method
    if method == "putinar":
        basis = monomials_up_to(n, k)
        lookup = lambda e: vals[e]  # noqa: E731
    else:
        basis = monomials_up_to(n, k // 2)
        if method == "putinar-symmetric":
            lookup = lambda e: vals[e]  # noqa: E731
        else:
            lookup = lambda e: vals[tuple(2 * v for v in e)]  # noqa: E731
    M = np.zeros((len(basis), len(basis)))
    try:
        for p, a in enumerate(basis):
            for q, b in enumerate(basis):
                M[p, q] = lookup(tuple(i + j for i, j in zip(a, b)))
    except KeyError as exc:
        return AtomSet("failed", message=f"moment {exc.args[0]} missing from the solution")
    res = extract_atoms(M, basis, tol, seed, kind="range", squared=False)
    if res.ok:
        res.solutions = _dedupe(res.solutions)
        if method == "putinar":
            res.atoms = [x.copy() for x in res.solutions]
            res.reports = [_verify_plain(pop, x, solution.dual_objective, epsilon) for x in res.solutions]
        else:
            res.squared = True
            res.atoms = [np.sqrt(np.maximum(x, 0.0)) for x in res.solutions]
            res.reports = [verify_solution(pop, z, solution.dual_objective, epsilon) for z in res.atoms]
    return res


def exact_identity(lhs: Polynomial, rhs: Polynomial) -> bool:
    """Zero-tolerance comparison of two polynomials in rational arithmetic."""
    return lhs.to_exact() == rhs.to_exact()
