"""Relaxation builders: from a polynomial problem to a block conic program.

Every builder returns ``(program, vmap)``.  The program is a moment
relaxation in the layout described in :mod:`orthantpop.conic`, and the
:class:`VariableMap` records which program variable is which moment and which
cone block carries which Gram matrix of the dual certificate.

Families implemented here:

* :func:`build_polya_dense` multiplies by ``theta^k = (1 + ||x||^2)^k`` and
  uses width-``s`` sums of squares on the squared problem (``s = 1`` gives a
  linear program).
* :func:`build_handelman_dense` uses products ``g_i * g_1^j`` of the squared
  constraints with the simplex constraint ``g_1``, without a multiplier.
* :func:`build_putinar_dense` is the standard moment hierarchy, used as a
  baseline.
* ``build_*_sparse`` are the clique-based variants of the three families.

The degree conventions are ``d_f = deg f + 1``, ``k_i = k + d_f - deg g_i`` for
the multiplier hierarchy and ``k_ij = k - deg g_i - j`` for the
multiplier-free one.  A constraint whose index range is empty is dropped with
an :class:`OmittedConstraintWarning`; dropping constraints weakens but never
invalidates the bound.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

from .conic import ConicProgram, ProgramAssembler, program_from_dense
from .errors import ArgumentError, ConfigurationError, OrderError
from .indexsets import BlockCover, cover_blocks, cover_blocks_clique, parity_blocks
from .moment import entry_forms
from .poly import (
    Exponent,
    Polynomial,
    PopInstance,
    graded_lex_key,
    monomials_up_to,
    substitute_squares,
    theta_pow,
)
from .sparsity import CliqueStructure, resolve_cliques

__all__ = [
    "ConicProgram",
    "GramKey",
    "MomentKey",
    "OmittedConstraintWarning",
    "VariableMap",
    "build_handelman_dense",
    "build_handelman_sparse",
    "build_polya_dense",
    "build_polya_sparse",
    "build_putinar_dense",
    "build_putinar_sparse",
    "program_from_dense",
]


class OmittedConstraintWarning(UserWarning):
    """A constraint contributes no block at the requested order."""


@dataclass(frozen=True)
class MomentKey:
    """Identity of a program variable.

    ``alpha`` is a half-index (the variable is ``y_{2 alpha}``) when
    ``even_only`` is set, otherwise a plain exponent.  ``clique`` tags the
    per-clique moment vectors of the sparse multiplier hierarchy.
    """

    alpha: Exponent
    clique: int | None = None
    even_only: bool = True

    def label(self) -> str:
        tag = "" if self.clique is None else f"c{self.clique}"
        expo = ",".join(map(str, self.alpha))
        return f"y{tag}[{'2*' if self.even_only else ''}({expo})]"


@dataclass(frozen=True)
class GramKey:
    """Identity of one cone block of the program (one Gram matrix of the certificate).

    ``constraint`` is the index ``i`` of ``g_i``, ``power`` the exponent ``j``
    of the Handelman generator (0 elsewhere), ``block`` the position of the
    block within its cover (or parity class), ``clique`` the clique index for
    sparse builds.  ``kind`` is ``"lp"`` for 1x1 blocks stored as
    nonnegative scalars and ``"psd"`` otherwise, and ``index`` the row or
    block position in the program.  ``multiplier`` is the polynomial whose
    localizing matrix the block is, and ``basis`` its monomial index list.
    """

    kind: str
    index: int
    constraint: int
    power: int
    block: int
    clique: int | None
    basis: tuple[Exponent, ...]
    multiplier: Polynomial = field(compare=False, repr=False)

    def label(self) -> str:
        c = "-" if self.clique is None else str(self.clique)
        return f"gram[i={self.constraint},j={self.power},r={self.block},c={c}]"


@dataclass
class VariableMap:
    """Two-way map between program entities and relaxation objects.

    Attributes
    ----------
    method:
        Family tag, e.g. ``"polya"`` or ``"handelman-sparse"``.
    params:
        Hierarchy parameters (``k``, ``s``, ``d``, ``epsilon``, ...).
    moments:
        One :class:`MomentKey` per program variable, in program order.
    grams:
        One :class:`GramKey` per cone block: LP rows first, then PSD blocks,
        each in program order.
    eq_rows:
        Label per equality row; ``normalization`` names the flagged one.
    orders:
        ``k_i`` (or ``(i, j) -> k_ij`` for multiplier-free families).
    covers:
        Block covers used, keyed like ``orders`` plus the clique index.
    omitted:
        Human-readable notes for constraints that were dropped.
    """

    method: str
    n: int
    params: dict
    moments: list[MomentKey] = field(default_factory=list)
    grams: list[GramKey] = field(default_factory=list)
    eq_rows: list[str] = field(default_factory=list)
    orders: dict = field(default_factory=dict)
    covers: dict = field(default_factory=dict)
    omitted: list[str] = field(default_factory=list)
    cliques: tuple[tuple[int, ...], ...] | None = None
    structure: CliqueStructure | None = None
    objective: Polynomial | None = None
    constraints: tuple[Polynomial, ...] = ()

    def __post_init__(self):
        self._var_index: dict[MomentKey, int] = {}
        self._label_index: dict[str, GramKey] = {}

    def _register_moment(self, key: MomentKey) -> None:
        self._var_index[key] = len(self.moments)
        self.moments.append(key)

    def _register_gram(self, key: GramKey) -> None:
        self.grams.append(key)
        self._label_index[key.label()] = key

    def variable_of(self, key: MomentKey) -> int:
        return self._var_index[key]

    def moment_of(self, var: int) -> MomentKey:
        return self.moments[var]

    def gram_for_label(self, label: str) -> GramKey:
        return self._label_index[label]

    def family(self, constraint: int, power: int = 0, clique: int | None = None) -> list[GramKey]:
        """All Gram blocks of one constraint family, in cover order."""
        keys = [g for g in self.grams if g.constraint == constraint and g.power == power and g.clique == clique]
        return sorted(keys, key=lambda g: g.block)

    def is_bijective(self) -> bool:
        return (len(self._var_index) == len(self.moments)
                and len(self._label_index) == len(self.grams))

    def moment_values(self, x, clique: int | None = None) -> dict[Exponent, float]:
        """Moment dictionary (keys as stored) for one moment vector of a solution."""
        return {k.alpha: float(x[i]) for i, k in enumerate(self.moments) if k.clique == clique}


# ---------------------------------------------------------------------------
# shared assembly helpers
# ---------------------------------------------------------------------------

class _Build:
    """Program assembler plus the matching variable map."""

    def __init__(self, method: str, n: int, params: dict, even_only: bool):
        self.asm = ProgramAssembler()
        self.vmap = VariableMap(method=method, n=n, params=dict(params))
        self.even_only = even_only
        self._lp_keys: list[GramKey] = []
        self._psd_keys: list[GramKey] = []

    def add_moments(self, alphas: Sequence[Exponent], clique: int | None = None) -> None:
        for a in alphas:
            key = MomentKey(tuple(a), clique, self.even_only)
            self.asm.add_variable(key, key.label())
            self.vmap._register_moment(key)

    def key(self, expo: Exponent, clique: int | None = None) -> MomentKey:
        if self.even_only:
            if any(e % 2 for e in expo):
                raise AssertionError(f"odd exponent {expo} in an even-only relaxation")
            return MomentKey(tuple(e // 2 for e in expo), clique, True)
        return MomentKey(tuple(expo), clique, False)

    def form(self, poly: Polynomial, clique: int | None = None, shift: Exponent | None = None) -> dict:
        """Riesz functional of ``poly * x^shift`` as ``{MomentKey: coeff}``."""
        out: dict = {}
        for expo, coeff in poly.terms.items():
            if shift is not None:
                expo = tuple(a + b for a, b in zip(expo, shift))
            k = self.key(expo, clique)
            out[k] = out.get(k, 0.0) + float(coeff)
        return out

    def missing(self, form: dict) -> list[MomentKey]:
        return [k for k in form if not self.asm.has_var(k)]

    def add_localizing(self, basis: Sequence[Exponent], h: Polynomial, constraint: int, power: int,
                       block: int, clique: int | None, moment_clique: int | None = None) -> None:
        """Tie a cone block to the localizing matrix of ``h`` over ``basis``."""
        entries = []
        for p, q, terms in entry_forms(basis, h):
            form: dict = {}
            for expo, coeff in terms:
                k = self.key(expo, moment_clique)
                form[k] = form.get(k, 0.0) + coeff
            entries.append((p, q, form))
        label_key = GramKey("lp" if len(basis) == 1 else "psd", 0, constraint, power, block, clique,
                            tuple(basis), h)
        label = label_key.label()
        if len(basis) == 1:
            idx = self.asm.add_lp(entries[0][2], 0.0, label)
            self._lp_keys.append(GramKey("lp", idx, constraint, power, block, clique, tuple(basis), h))
        else:
            idx = self.asm.add_block(len(basis), entries, label)
            self._psd_keys.append(GramKey("psd", idx, constraint, power, block, clique, tuple(basis), h))

    def add_cover(self, cover: BlockCover, h: Polynomial, constraint: int, power: int,
                  clique: int | None, moment_clique: int | None = None) -> None:
        for j, blk in cover.nonempty():
            self.add_localizing(blk, h, constraint, power, j, clique, moment_clique)

    def omit(self, note: str) -> None:
        self.vmap.omitted.append(note)
        self.asm.notes.append("omitted: " + note)
        warnings.warn(note, OmittedConstraintWarning, stacklevel=3)

    def finish(self) -> tuple[ConicProgram, VariableMap]:
        for key in self._lp_keys + self._psd_keys:
            self.vmap._register_gram(key)
        program = self.asm.build()
        self.vmap.eq_rows = list(program.eq_labels)
        return program, self.vmap


def _check_int(name: str, value, minimum: int) -> int:
    if not isinstance(value, int) or isinstance(value, bool) or value < minimum:
        raise ArgumentError(f"{name} must be an integer >= {minimum}, got {value!r}")
    return value


def _embed(local: Exponent, clique: Sequence[int], n: int) -> Exponent:
    full = [0] * n
    for pos, e in zip(clique, local):
        full[pos] = e
    return tuple(full)


def _clique_monomials(clique: Sequence[int], d: int, n: int) -> list[Exponent]:
    return [_embed(a, clique, n) for a in monomials_up_to(len(clique), d)]


def _union_monomials(cliques: Sequence[Sequence[int]], d: int, n: int) -> list[Exponent]:
    seen = set()
    for cl in cliques:
        seen.update(_clique_monomials(cl, d, n))
    return sorted(seen, key=graded_lex_key)


def _clique_theta_pow(clique: Sequence[int], k: int, n: int) -> Polynomial:
    local = theta_pow(len(clique), k)
    return Polynomial(n, {_embed(a, clique, n): c for a, c in local.terms.items()})


def _ceil_half(d: int) -> int:
    return (d + 1) // 2


def _record_common(vmap: VariableMap, pop: PopInstance) -> None:
    vmap.objective = pop.objective
    vmap.constraints = tuple(pop.constraints)


# ---------------------------------------------------------------------------
# dense hierarchies
# ---------------------------------------------------------------------------

def build_polya_dense(pop: PopInstance, k: int, s: int = 1, epsilon: float = 0.0
                      ) -> tuple[ConicProgram, VariableMap]:
    """Moment side of the width-``s`` hierarchy with multiplier ``theta^k``.

    Variables are the even moments ``y_{2 alpha}``, ``|alpha| <= d_f + k``.
    The program minimises ``L_y(theta^k f_sq)`` (plus
    ``epsilon * L_y(theta^(k + d_f))`` in the perturbed variant) subject to
    ``L_y(theta^k) = 1`` and, for every constraint ``i`` and every nonempty
    block ``B`` of the width-``s`` cover of ``N^n_{k_i}``, the localizing
    matrix of ``g_i(x^2)`` over ``B`` being PSD.

    With ``epsilon == 0`` the instance must carry a flagged simplex or ball
    constraint; otherwise a :class:`ConfigurationError` is raised.
    """
    _check_int("k", k, 0)
    _check_int("s", s, 1)
    if epsilon < 0:
        raise ArgumentError("epsilon must be >= 0")
    if epsilon == 0:
        pop.require_bound()
    n, d_f = pop.n, pop.d_f
    top = d_f + k
    build = _Build("polya", n, dict(k=k, s=s, epsilon=epsilon, d_f=d_f), even_only=True)
    _record_common(build.vmap, pop)
    build.add_moments(monomials_up_to(n, top))
    th_k = theta_pow(n, k)
    f_sq = substitute_squares(pop.objective)
    objective = th_k * f_sq
    if epsilon > 0:
        objective = objective + theta_pow(n, k + d_f) * epsilon
    build.asm.add_objective(build.form(objective))
    build.asm.add_equality(build.form(th_k), 1.0, "normalization", normalization=True)
    for i, g in enumerate(pop.constraints):
        k_i = k + d_f - g.degree
        build.vmap.orders[i] = k_i
        if k_i < 0:
            build.omit(f"constraint {i} has k_i = {k_i} < 0 and contributes no block")
            continue
        cover = cover_blocks(n, k_i, s)
        build.vmap.covers[(i, 0, None)] = cover
        build.add_cover(cover, substitute_squares(g), i, 0, None)
    return build.finish()


def build_handelman_dense(pop: PopInstance, k: int, s: int = 1) -> tuple[ConicProgram, VariableMap]:
    """Moment side of the multiplier-free hierarchy built on the simplex constraint.

    Variables are ``y_{2 alpha}`` with ``|alpha| <= k`` and ``y_0 = 1``; the
    objective is ``L_y(f_sq)``.  For each constraint ``i`` and
    ``j = 0..k - deg g_i``, every nonempty block of the width-``s`` cover of
    ``N^n_{k_ij}`` carries the localizing matrix of ``g_i(x^2) g_1(x^2)^j``
    where ``g_1`` is the flagged simplex constraint.
    """
    _check_int("k", k, 1)
    _check_int("s", s, 1)
    one = pop.require_bound(("simplex",))
    n = pop.n
    if pop.objective.degree > k:
        raise OrderError(f"k = {k} is below the objective degree {pop.objective.degree}")
    build = _Build("handelman", n, dict(k=k, s=s, generator=one), even_only=True)
    _record_common(build.vmap, pop)
    build.add_moments(monomials_up_to(n, k))
    build.asm.add_objective(build.form(substitute_squares(pop.objective)))
    build.asm.add_equality({build.key((0,) * n): 1.0}, 1.0, "normalization", normalization=True)
    g1_sq = substitute_squares(pop.constraints[one])
    for i, g in enumerate(pop.constraints):
        d_g = g.degree
        if k < d_g:
            build.omit(f"constraint {i} has degree {d_g} > k = {k} and contributes no block")
            continue
        g_sq = substitute_squares(g)
        power = Polynomial.constant(n, 1)
        for j in range(k - d_g + 1):
            k_ij = k - d_g - j
            build.vmap.orders[(i, j)] = k_ij
            cover = cover_blocks(n, k_ij, s)
            build.vmap.covers[(i, j, None)] = cover
            build.add_cover(cover, g_sq * power, i, j, None)
            power = power * g1_sq
    return build.finish()


def build_putinar_dense(pop: PopInstance, k: int, symmetry: bool = False, squared: bool | None = None
                        ) -> tuple[ConicProgram, VariableMap]:
    """Standard moment relaxation of order ``k``.

    By default it runs on the original problem with full moment indexing:
    ``y_alpha`` for ``|alpha| <= 2k``, ``y_0 = 1``, objective ``L_y(f)``, and
    ``M_{k - ceil(deg g/2)}(g y)`` PSD for every ``g_i`` and every
    coordinate ``x_j`` (the orthant constraints).

    With ``symmetry=True`` it runs on the squared problem ``f(x^2)``,
    ``g_i(x^2) >= 0`` (no orthant constraints are needed there).  Each
    localizing matrix is split into its parity classes, and only even moments
    remain.  ``squared=True, symmetry=False`` builds the unsplit squared
    relaxation, which has the same optimal value.
    """
    _check_int("k", k, 1)
    if squared is None:
        squared = symmetry
    if symmetry and not squared:
        raise ArgumentError("the parity split applies to the squared problem only")
    n = pop.n
    if squared:
        f = substitute_squares(pop.objective)
        gens = [(i, substitute_squares(g)) for i, g in enumerate(pop.constraints)]
    else:
        f = pop.objective
        gens = [(i, g) for i, g in enumerate(pop.constraints)]
        for j in range(n):
            gens.append((pop.m + j, Polynomial.variable(n, j)))
    if _ceil_half(f.degree) > k:
        raise OrderError(f"order k = {k} is below ceil(deg f / 2) = {_ceil_half(f.degree)}")
    for i, g in gens:
        if _ceil_half(g.degree) > k:
            raise OrderError(f"order k = {k} is below ceil(deg g_{i} / 2) = {_ceil_half(g.degree)}")
    method = "putinar-symmetric" if symmetry else ("putinar-squared" if squared else "putinar")
    build = _Build(method, n, dict(k=k, symmetry=symmetry, squared=squared), even_only=symmetry)
    _record_common(build.vmap, pop)
    build.add_moments(monomials_up_to(n, k) if symmetry else monomials_up_to(n, 2 * k))
    build.asm.add_objective(build.form(f))
    build.asm.add_equality({build.key((0,) * n): 1.0}, 1.0, "normalization", normalization=True)
    for i, g in gens:
        t = k - _ceil_half(g.degree)
        build.vmap.orders[i] = t
        if symmetry:
            for r, cls in enumerate(parity_blocks(n, t).values()):
                build.add_localizing(cls, g, i, 0, r, None)
        else:
            build.add_localizing(monomials_up_to(n, t), g, i, 0, 0, None)
    return build.finish()


# ---------------------------------------------------------------------------
# sparse hierarchies
# ---------------------------------------------------------------------------

def _clique_generator(structure: CliqueStructure, c: int) -> int:
    i_c = structure.bound_index[c]
    if i_c is None:
        raise ConfigurationError(f"clique {c} has no bound constraint")
    return i_c


def build_polya_sparse(pop: PopInstance, k: int, d: int | None = None, s: int = 1, cliques=None
                       ) -> tuple[ConicProgram, VariableMap]:
    """Clique-wise multiplier hierarchy.

    A global even moment vector ``y`` (half-degree ``<= d``) is linked to one
    vector ``y^(c)`` per clique (half-degree ``<= d + k`` on the clique's
    variables) through ``y_{2 alpha} = L_{y^(c)}(theta_c^k x^{2 alpha})`` for
    every ``alpha`` supported in the clique with ``|alpha| <= d``.  Each
    constraint assigned to clique ``c`` contributes width-``s`` localizing
    blocks on ``y^(c)`` of order ``k + d - deg g_i``.  The objective is
    ``L_y(f_sq)`` with ``y_0 = 1``.  ``d`` defaults to ``deg f``; with a single
    clique and ``d = deg f + 1`` the value equals :func:`build_polya_dense`.
    """
    _check_int("k", k, 0)
    _check_int("s", s, 1)
    n = pop.n
    if d is None:
        d = pop.objective.degree
    _check_int("d", d, 0)
    if d < pop.objective.degree:
        raise OrderError(f"d = {d} is below deg f = {pop.objective.degree}")
    st = resolve_cliques(pop, cliques, require=("rip", "cover", "assignment", "bound", "split"))
    build = _Build("polya-sparse", n, dict(k=k, s=s, d=d), even_only=True)
    _record_common(build.vmap, pop)
    build.vmap.cliques, build.vmap.structure = st.cliques, st
    build.add_moments(_union_monomials(st.cliques, d, n))
    for c, clique in enumerate(st.cliques):
        build.add_moments(_clique_monomials(clique, d + k, n), clique=c)
    build.asm.add_objective(build.form(substitute_squares(pop.objective)))
    build.asm.add_equality({build.key((0,) * n): 1.0}, 1.0, "normalization", normalization=True)
    for c, clique in enumerate(st.cliques):
        th = _clique_theta_pow(clique, k, n)
        for alpha in _clique_monomials(clique, d, n):
            form = {build.key(tuple(2 * a for a in alpha)): 1.0}
            for key, coeff in build.form(th, clique=c, shift=tuple(2 * a for a in alpha)).items():
                form[key] = form.get(key, 0.0) - coeff
            build.asm.add_equality(form, 0.0, f"link[c={c},alpha={alpha}]")
        for i in st.assignments[c]:
            g = pop.constraints[i]
            k_i = k + d - g.degree
            build.vmap.orders[(i, c)] = k_i
            if k_i < 0:
                build.omit(f"constraint {i} in clique {c} has order {k_i} < 0 and contributes no block")
                continue
            cover = cover_blocks_clique(clique, k_i, s, n)
            build.vmap.covers[(i, 0, c)] = cover
            build.add_cover(cover, substitute_squares(g), i, 0, c, moment_clique=c)
    return build.finish()


def build_handelman_sparse(pop: PopInstance, k: int, s: int = 1, cliques=None
                           ) -> tuple[ConicProgram, VariableMap]:
    """Clique-wise multiplier-free hierarchy over a single moment vector.

    For clique ``c`` with bound constraint ``g_{i_c}``, each assigned
    constraint ``i`` and ``j = 0..k - deg g_i`` contributes the width-``s``
    cover of ``N^{I_c}_{k_ij}`` tied to ``g_i(x^2) g_{i_c}(x^2)^j``.
    """
    _check_int("k", k, 1)
    _check_int("s", s, 1)
    n = pop.n
    if pop.objective.degree > k:
        raise OrderError(f"k = {k} is below the objective degree {pop.objective.degree}")
    st = resolve_cliques(pop, cliques, require=("rip", "cover", "assignment", "bound", "split"),
                         allow_ball=False)
    build = _Build("handelman-sparse", n, dict(k=k, s=s), even_only=True)
    _record_common(build.vmap, pop)
    build.vmap.cliques, build.vmap.structure = st.cliques, st
    build.add_moments(_union_monomials(st.cliques, k, n))
    build.asm.add_objective(build.form(substitute_squares(pop.objective)))
    build.asm.add_equality({build.key((0,) * n): 1.0}, 1.0, "normalization", normalization=True)
    for c, clique in enumerate(st.cliques):
        gen_sq = substitute_squares(pop.constraints[_clique_generator(st, c)])
        for i in st.assignments[c]:
            g = pop.constraints[i]
            d_g = g.degree
            if k < d_g:
                build.omit(f"constraint {i} in clique {c} has degree {d_g} > k = {k}")
                continue
            power = Polynomial.constant(n, 1)
            g_sq = substitute_squares(g)
            for j in range(k - d_g + 1):
                k_ij = k - d_g - j
                build.vmap.orders[(i, j, c)] = k_ij
                cover = cover_blocks_clique(clique, k_ij, s, n)
                build.vmap.covers[(i, j, c)] = cover
                build.add_cover(cover, g_sq * power, i, j, c)
                power = power * gen_sq
    return build.finish()


def build_putinar_sparse(pop: PopInstance, k: int, cliques=None) -> tuple[ConicProgram, VariableMap]:
    """Clique-wise standard moment relaxation on the original problem.

    Moment matrices and localizing matrices are indexed by ``N^{I_c}_t``
    only.  Each orthant constraint ``x_j`` is imposed in every clique that
    contains ``j``.
    """
    _check_int("k", k, 1)
    n = pop.n
    st = resolve_cliques(pop, cliques, require=("rip", "cover", "assignment", "split"))
    f = pop.objective
    if _ceil_half(f.degree) > k:
        raise OrderError(f"order k = {k} is below ceil(deg f / 2) = {_ceil_half(f.degree)}")
    for i, g in enumerate(pop.constraints):
        if _ceil_half(g.degree) > k:
            raise OrderError(f"order k = {k} is below ceil(deg g_{i} / 2) = {_ceil_half(g.degree)}")
    build = _Build("putinar-sparse", n, dict(k=k), even_only=False)
    _record_common(build.vmap, pop)
    build.vmap.cliques, build.vmap.structure = st.cliques, st
    build.add_moments(_union_monomials(st.cliques, 2 * k, n))
    build.asm.add_objective(build.form(f))
    build.asm.add_equality({build.key((0,) * n): 1.0}, 1.0, "normalization", normalization=True)
    for c, clique in enumerate(st.cliques):
        gens = [(i, pop.constraints[i]) for i in st.assignments[c]]
        gens += [(pop.m + j, Polynomial.variable(n, j)) for j in clique]
        for i, g in gens:
            t = k - _ceil_half(g.degree)
            build.vmap.orders[(i, c)] = t
            build.add_localizing(_clique_monomials(clique, t, n), g, i, 0, 0, c)
    return build.finish()
