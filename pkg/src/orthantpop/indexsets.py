"""Parity classes and bounded-size block covers of monomial index sets.

The block cover controls the factor width of the semidefinite relaxations.
For a degree bound ``d`` and a size bound ``s``, list ``N^n_d`` in graded-lex
order as ``alpha_1, alpha_2, ...``.  For each ``j`` let ``T_j`` be the first
``s`` exponents ``alpha_i`` with ``i >= j`` and ``alpha_i + alpha_j`` even.
Block ``A_j`` is ``T_j`` unless ``T_j`` already sits inside an earlier block,
in which case it is empty.  Empty blocks are kept so that ``blocks[j-1]``
always corresponds to ``alpha_j``; relaxation builders skip them.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .errors import ArgumentError
from .poly import Exponent, monomials_up_to

__all__ = ["BlockCover", "cover_blocks", "cover_blocks_clique", "parity_blocks", "parity_of"]


def parity_of(alpha: Sequence[int]) -> tuple[int, ...]:
    return tuple(a & 1 for a in alpha)


def parity_blocks(n: int, d: int) -> dict[tuple[int, ...], list[Exponent]]:
    """Partition ``N^n_d`` by exponent parity.

    Returns a dict from parity pattern ``gamma`` in ``{0,1}^n`` to the
    graded-lex ordered list of exponents with that parity.  Only nonempty
    classes are present; keys appear in order of first occurrence.
    """
    classes: dict[tuple[int, ...], list[Exponent]] = {}
    for alpha in monomials_up_to(n, d):
        classes.setdefault(parity_of(alpha), []).append(alpha)
    return classes


@dataclass(frozen=True)
class BlockCover:
    """Ordered block family produced by :func:`cover_blocks`.

    ``clique`` is ``None`` for the dense cover, otherwise the sorted 0-based
    variable indices the cover is restricted to.  Exponents are always stored
    with full length ``n``.
    """

    n: int
    d: int
    s: int
    clique: tuple[int, ...] | None
    blocks: tuple[tuple[Exponent, ...], ...]

    def nonempty(self) -> list[tuple[int, tuple[Exponent, ...]]]:
        """``(j, block)`` pairs for the nonempty blocks, ``j`` 0-based."""
        return [(j, b) for j, b in enumerate(self.blocks) if b]

    @property
    def support(self) -> list[Exponent]:
        """The covered index set ``N^I_d`` in graded-lex order."""
        return _index_set(self.n, self.d, self.clique)

    def __len__(self) -> int:
        return len(self.blocks)


def _index_set(n: int, d: int, clique: tuple[int, ...] | None) -> list[Exponent]:
    if clique is None:
        return monomials_up_to(n, d)
    out = []
    for local in monomials_up_to(len(clique), d):
        full = [0] * n
        for pos, e in zip(clique, local):
            full[pos] = e
        out.append(tuple(full))
    return out


def _cover(alphas: list[Exponent], s: int) -> list[tuple[Exponent, ...]]:
    # members of each parity class keep graded-lex order, so the "first s
    # members of W_j" are the next s class members starting at alpha_j itself
    by_class: dict[tuple[int, ...], list[int]] = {}
    for i, a in enumerate(alphas):
        by_class.setdefault(parity_of(a), []).append(i)
    position = {}
    for members in by_class.values():
        for q, i in enumerate(members):
            position[i] = q
    accepted: dict[tuple[int, ...], list[frozenset[int]]] = {}
    blocks: list[tuple[Exponent, ...]] = []
    for j, a in enumerate(alphas):
        cls = parity_of(a)
        members = by_class[cls]
        q = position[j]
        t_j = members[q:q + s]
        t_set = frozenset(t_j)
        # blocks from other parity classes are disjoint from T_j, so only the
        # same class can contain it
        if any(t_set <= prev for prev in accepted.get(cls, [])):
            blocks.append(())
        else:
            accepted.setdefault(cls, []).append(t_set)
            blocks.append(tuple(alphas[i] for i in t_j))
    return blocks


def cover_blocks(n: int, d: int, s: int) -> BlockCover:
    """Dense block cover of ``N^n_d`` with blocks of at most ``s`` exponents.

    >>> [list(b) for b in cover_blocks(2, 2, 2).blocks]
    [[(0, 0), (2, 0)], [(1, 0)], [(0, 1)], [(2, 0), (0, 2)], [(1, 1)], []]
    """
    if s < 1:
        raise ArgumentError(f"block size bound must be >= 1, got {s}")
    alphas = monomials_up_to(n, d)
    return BlockCover(n, d, s, None, tuple(_cover(alphas, s)))


def cover_blocks_clique(clique: Sequence[int], d: int, s: int, n: int | None = None) -> BlockCover:
    """Block cover of ``N^I_d`` for the variable subset ``I = clique``.

    The recipe runs on ``N^{|I|}_d`` and the result is embedded into
    dimension ``n`` (default ``max(I) + 1``).  With ``I = range(n)`` the output
    matches :func:`cover_blocks`.
    """
    idx = tuple(sorted(int(i) for i in clique))
    if not idx:
        raise ArgumentError("clique must be nonempty")
    if len(set(idx)) != len(idx) or idx[0] < 0:
        raise ArgumentError(f"invalid clique {clique!r}")
    if n is None:
        n = idx[-1] + 1
    if idx[-1] >= n:
        raise ArgumentError(f"clique {idx} does not fit dimension {n}")
    if s < 1:
        raise ArgumentError(f"block size bound must be >= 1, got {s}")
    alphas = _index_set(n, d, idx)
    clique_tag = None if idx == tuple(range(n)) else idx
    return BlockCover(n, d, s, clique_tag, tuple(_cover(alphas, s)))
