"""Truncated moment sequences, the Riesz functional and localizing matrices.

A :class:`MomentVector` stores either every moment ``y_alpha`` (full mode) or
only the even moments, in which case the stored key ``alpha`` stands for
``y_{2 alpha}`` (even-only mode).  Relaxations of squared problems only ever
touch even moments, so even-only storage halves the variable count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, CoverageError, EvenSymmetryError
from .poly import Exponent, Polynomial, graded_lex_key, monomials_up_to

__all__ = [
    "MomentVector",
    "entry_forms",
    "localizing_diag",
    "moment_submatrix",
    "moments_of_measure",
    "riesz",
]


@dataclass(frozen=True)
class MomentVector:
    """Finite moment sequence.

    Attributes
    ----------
    n:
        Number of variables.
    t:
        Degree bound of the stored keys (half-degree in even-only mode).
    values:
        Mapping from exponent key to value.
    even_only:
        When true, key ``alpha`` holds ``y_{2 alpha}``.
    """

    n: int
    t: int
    values: Mapping[Exponent, float] = field(default_factory=dict)
    even_only: bool = False

    @classmethod
    def from_sequence(cls, n: int, t: int, seq: Sequence[float], even_only: bool = False) -> "MomentVector":
        """Build from values listed in graded-lex order of ``N^n_t``."""
        keys = monomials_up_to(n, t)
        if len(seq) != len(keys):
            raise ArgumentError(f"expected {len(keys)} values for N^{n}_{t}, got {len(seq)}")
        return cls(n, t, dict(zip(keys, map(float, seq))), even_only)

    def moment(self, alpha: Sequence[int]) -> float:
        """The moment ``y_alpha`` for a full exponent ``alpha``."""
        alpha = tuple(alpha)
        if self.even_only:
            if any(a % 2 for a in alpha):
                raise EvenSymmetryError(alpha)
            key = tuple(a // 2 for a in alpha)
        else:
            key = alpha
        try:
            return self.values[key]
        except KeyError:
            raise CoverageError(alpha) from None

    def as_array(self) -> np.ndarray:
        keys = sorted(self.values, key=graded_lex_key)
        return np.array([self.values[k] for k in keys])


def riesz(p: Polynomial, y: MomentVector) -> float:
    """Riesz functional ``L_y(p) = sum_alpha p_alpha y_alpha``."""
    return float(sum(float(c) * y.moment(a) for a, c in p.terms.items()))


def entry_forms(
    basis: Sequence[Exponent], h: Polynomial
) -> list[tuple[int, int, list[tuple[Exponent, float]]]]:
    """Symbolic entries of the localizing matrix ``(sum_gamma h_gamma y_{gamma+a+b})_{a,b}``.

    Returns one triple ``(p, q, terms)`` per unordered pair ``p <= q`` of
    basis positions, where ``terms`` lists ``(exponent, coefficient)`` pairs
    meaning ``sum coefficient * y_exponent``.  Exponents are full (not halved).
    """
    hterms = [(g, float(c)) for g, c in h.items()]
    out = []
    for p, a in enumerate(basis):
        for q in range(p, len(basis)):
            b = basis[q]
            ab = tuple(x + y for x, y in zip(a, b))
            out.append((p, q, [(tuple(x + y for x, y in zip(g, ab)), c) for g, c in hterms]))
    return out


def moment_submatrix(basis: Sequence[Exponent], h: Polynomial, y: MomentVector) -> np.ndarray:
    """Numeric localizing matrix of ``h`` over the monomial list ``basis``.

    Each unordered pair is assembled once and mirrored, so the result is
    exactly symmetric.  For ``h = 1`` this is the moment submatrix.
    """
    size = len(basis)
    mat = np.zeros((size, size))
    for p, q, terms in entry_forms(basis, h):
        val = sum(c * y.moment(e) for e, c in terms)
        mat[p, q] = mat[q, p] = val
    return mat


def localizing_diag(t: int, h: Polynomial, y: MomentVector, clique: Iterable[int] | None = None) -> np.ndarray:
    """Diagonal of the localizing matrix over ``N^n_t`` (or ``N^I_t`` for a clique)."""
    n = h.n
    if clique is None:
        basis = monomials_up_to(n, t)
    else:
        idx = sorted(clique)
        basis = []
        for local in monomials_up_to(len(idx), t):
            full = [0] * n
            for pos, e in zip(idx, local):
                full[pos] = e
            basis.append(tuple(full))
    hterms = [(g, float(c)) for g, c in h.terms.items()]
    return np.array([
        sum(c * y.moment(tuple(gi + 2 * ai for gi, ai in zip(g, a))) for g, c in hterms)
        for a in basis
    ])


def moments_of_measure(points, weights, t: int, even_only: bool = False) -> MomentVector:
    """Moments of ``sum_i w_i delta_{x_i}``.

    In full mode keys run over ``N^n_t``.  In even-only mode the key ``alpha``
    (``|alpha| <= t``) stores ``y_{2 alpha}``.
    """
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    w = np.asarray(weights, dtype=float)
    n = pts.shape[1]
    values = {}
    for alpha in monomials_up_to(n, t):
        expo = np.array(alpha) * (2 if even_only else 1)
        values[alpha] = float(w @ np.prod(pts ** expo, axis=1))
    return MomentVector(n, t, values, even_only)
