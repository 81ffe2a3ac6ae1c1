"""Sparse multivariate polynomials over the reals.

A :class:`Polynomial` maps exponent tuples to coefficients.  Coefficients are
either binary64 floats (the default, used by every numerical pipeline) or
exact :class:`fractions.Fraction` values, selected with ``exact=True``.  Exact
mode is what the certificate checker and the identity tests rely on.

The module also fixes the single monomial order used everywhere in the
package: graded lexicographic, lower total degree first, and within one
degree the exponent whose first differing entry is larger comes first.  For
``n = 2`` this gives ``(0,0), (1,0), (0,1), (2,0), (1,1), (0,2)``.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from numbers import Rational, Real
from types import MappingProxyType
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .errors import ArgumentError, ConfigurationError, EvenSymmetryError, SizeError

Exponent = tuple[int, ...]

__all__ = [
    "Exponent",
    "Polynomial",
    "PopInstance",
    "add",
    "binomial_count",
    "evaluate",
    "even_reduction",
    "graded_lex_key",
    "is_even_in_each_variable",
    "monomials_up_to",
    "multiply",
    "norm_max",
    "scale",
    "substitute_squares",
    "theta_pow",
]


# ---------------------------------------------------------------------------
# monomial order
# ---------------------------------------------------------------------------

def graded_lex_key(alpha: Sequence[int]) -> tuple:
    """Sort key realising the package-wide graded-lex order."""
    return (sum(alpha), tuple(-a for a in alpha))


def binomial_count(n: int, d: int) -> int:
    """Return ``binom(n + d, n)``, the number of monomials of degree at most ``d``.

    Raises :class:`SizeError` when the count does not fit a platform integer.
    """
    if n < 0 or d < 0:
        raise ArgumentError(f"need n >= 0 and d >= 0, got n={n}, d={d}")
    # cheap log-size screen so absurd requests fail fast instead of building a huge int
    log_count = math.lgamma(n + d + 1) - math.lgamma(n + 1) - math.lgamma(d + 1)
    if log_count > math.log(sys.maxsize) + 1:
        raise SizeError(f"binom({n + d},{n}) exceeds the platform integer range")
    count = math.comb(n + d, n)
    if count > sys.maxsize:
        raise SizeError(f"binom({n + d},{n}) = {count} exceeds the platform integer range")
    return count


def _compositions(n: int, total: int) -> Iterator[Exponent]:
    # first entry descending, so the output is already in the in-degree order
    if n == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(n - 1, total - first):
            yield (first,) + rest


def monomials_up_to(n: int, d: int) -> list[Exponent]:
    """All exponents in ``N^n`` with total degree at most ``d``, in graded-lex order.

    >>> monomials_up_to(2, 2)
    [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
    """
    if n < 1:
        raise ArgumentError(f"dimension must be >= 1, got {n}")
    if d < 0:
        raise ArgumentError(f"degree bound must be >= 0, got {d}")
    binomial_count(n, d)
    out: list[Exponent] = []
    for t in range(d + 1):
        out.extend(_compositions(n, t))
    return out


# ---------------------------------------------------------------------------
# Polynomial
# ---------------------------------------------------------------------------

def _to_exact(c) -> Fraction:
    if isinstance(c, Fraction):
        return c
    if isinstance(c, (int, Rational)):
        return Fraction(c)
    if isinstance(c, (float, np.floating)):
        return Fraction(float(c))
    if isinstance(c, Real):
        return Fraction(float(c))
    raise TypeError(f"unsupported coefficient type {type(c).__name__}")


class Polynomial:
    """Immutable sparse polynomial in ``n`` variables.

    Parameters
    ----------
    n:
        Number of variables.
    terms:
        Mapping (or iterable of pairs) from exponent tuples to coefficients.
        Repeated exponents in an iterable are summed.
    exact:
        Store coefficients as :class:`~fractions.Fraction` instead of float.

    Zero coefficients are dropped on construction, so two polynomials are
    equal exactly when their pruned term maps coincide.
    """

    __slots__ = ("_n", "_terms", "_exact", "_hash")

    def __init__(self, n: int, terms: Mapping | Iterable = (), exact: bool = False):
        if n < 1:
            raise ArgumentError(f"dimension must be >= 1, got {n}")
        items = terms.items() if isinstance(terms, Mapping) else terms
        acc: dict[Exponent, object] = {}
        convert = _to_exact if exact else float
        for expo, coeff in items:
            key = tuple(int(e) for e in expo)
            if len(key) != n:
                raise ArgumentError(f"exponent {key} does not have length {n}")
            if any(e < 0 for e in key):
                raise ArgumentError(f"exponent {key} has a negative entry")
            value = convert(coeff)
            acc[key] = acc[key] + value if key in acc else value
        self._n = n
        self._exact = exact
        self._terms = {k: v for k, v in acc.items() if v != 0}
        self._hash = None

    # construction helpers ------------------------------------------------
    @classmethod
    def _raw(cls, n: int, terms: dict, exact: bool) -> "Polynomial":
        obj = cls.__new__(cls)
        obj._n = n
        obj._exact = exact
        obj._terms = {k: v for k, v in terms.items() if v != 0}
        obj._hash = None
        return obj

    @classmethod
    def constant(cls, n: int, c=1, exact: bool = False) -> "Polynomial":
        return cls(n, {(0,) * n: c}, exact=exact)

    @classmethod
    def variable(cls, n: int, j: int, exact: bool = False) -> "Polynomial":
        """The coordinate polynomial ``x_j`` (0-based ``j``)."""
        if not 0 <= j < n:
            raise ArgumentError(f"variable index {j} out of range for n={n}")
        expo = [0] * n
        expo[j] = 1
        return cls(n, {tuple(expo): 1}, exact=exact)

    @classmethod
    def monomial(cls, alpha: Sequence[int], c=1, exact: bool = False) -> "Polynomial":
        return cls(len(alpha), {tuple(alpha): c}, exact=exact)

    # basic properties ------------------------------------------------------
    @property
    def n(self) -> int:
        return self._n

    @property
    def exact(self) -> bool:
        return self._exact

    @property
    def terms(self) -> Mapping[Exponent, object]:
        return MappingProxyType(self._terms)

    def items(self):
        """Terms in graded-lex order."""
        return sorted(self._terms.items(), key=lambda kv: graded_lex_key(kv[0]))

    def exponents(self) -> list[Exponent]:
        return sorted(self._terms, key=graded_lex_key)

    def coefficient(self, alpha: Sequence[int]):
        return self._terms.get(tuple(alpha), Fraction(0) if self._exact else 0.0)

    @property
    def degree(self) -> int:
        """Total degree; the zero polynomial has degree 0 by convention here."""
        return max((sum(a) for a in self._terms), default=0)

    def is_zero(self) -> bool:
        return not self._terms

    def support(self) -> set[int]:
        """Indices of variables that occur with a positive exponent."""
        return {j for a in self._terms for j, e in enumerate(a) if e}

    def to_exact(self) -> "Polynomial":
        return self if self._exact else Polynomial(self._n, self._terms, exact=True)

    def to_float(self) -> "Polynomial":
        if not self._exact:
            return self
        return Polynomial._raw(self._n, {k: float(v) for k, v in self._terms.items()}, False)

    # arithmetic ------------------------------------------------------------
    def _check(self, other: "Polynomial") -> None:
        if other._n != self._n:
            raise ArgumentError(f"dimension mismatch: {self._n} vs {other._n}")

    def _coerce_scalar(self, c):
        return _to_exact(c) if self._exact else float(c)

    def __add__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            exact = self._exact and other._exact
            a, b = (self, other) if exact else (self.to_float(), other.to_float())
            out = dict(a._terms)
            for k, v in b._terms.items():
                out[k] = out[k] + v if k in out else v
            return Polynomial._raw(self._n, out, exact)
        if isinstance(other, Real):
            return self + Polynomial.constant(self._n, other, exact=self._exact)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Polynomial._raw(self._n, {k: -v for k, v in self._terms.items()}, self._exact)

    def __sub__(self, other):
        if isinstance(other, (Polynomial, Real)):
            return self + (-other)
        return NotImplemented

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, Polynomial):
            self._check(other)
            exact = self._exact and other._exact
            a, b = (self, other) if exact else (self.to_float(), other.to_float())
            out: dict[Exponent, object] = {}
            for ka, va in a._terms.items():
                for kb, vb in b._terms.items():
                    k = tuple(x + y for x, y in zip(ka, kb))
                    out[k] = out[k] + va * vb if k in out else va * vb
            return Polynomial._raw(self._n, out, exact)
        if isinstance(other, Real):
            c = self._coerce_scalar(other)
            return Polynomial._raw(self._n, {k: v * c for k, v in self._terms.items()}, self._exact)
        return NotImplemented

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int) or k < 0:
            raise ArgumentError(f"power must be a nonnegative int, got {k!r}")
        result = Polynomial.constant(self._n, 1, exact=self._exact)
        base = self
        while k:
            if k & 1:
                result = result * base
            k >>= 1
            if k:
                base = base * base
        return result

    def __eq__(self, other) -> bool:
        if not isinstance(other, Polynomial):
            return NotImplemented
        return self._n == other._n and self._terms == other._terms

    def __hash__(self) -> int:
        if self._hash is None:
            self._hash = hash((self._n, frozenset(self._terms.items())))
        return self._hash

    def __repr__(self) -> str:
        if not self._terms:
            return f"Polynomial(n={self._n}, 0)"
        parts = []
        for k, v in self.items():
            mono = "*".join(
                f"x{j}" if e == 1 else f"x{j}^{e}" for j, e in enumerate(k) if e
            )
            parts.append(f"{v}" + (f"*{mono}" if mono else ""))
        return f"Polynomial(n={self._n}, " + " + ".join(parts) + ")"

    # evaluation ------------------------------------------------------------
    def evaluate(self, x):
        """Evaluate at a point (or at each row of a 2-D array of points)."""
        if self._exact and not isinstance(x, np.ndarray):
            pt = [_to_exact(v) for v in x]
            if len(pt) != self._n:
                raise ArgumentError(f"point has length {len(pt)}, expected {self._n}")
            total = Fraction(0)
            for k, v in self._terms.items():
                term = v
                for xi, e in zip(pt, k):
                    if e:
                        term *= xi ** e
                total += term
            return total
        arr = np.asarray(x, dtype=float)
        if arr.shape[-1] != self._n:
            raise ArgumentError(f"point has length {arr.shape[-1]}, expected {self._n}")
        if not self._terms:
            return np.zeros(arr.shape[:-1]) if arr.ndim > 1 else 0.0
        expos = np.array(list(self._terms.keys()), dtype=float)
        coeffs = np.array([float(v) for v in self._terms.values()])
        powers = np.prod(arr[..., None, :] ** expos, axis=-1)
        val = powers @ coeffs
        return float(val) if arr.ndim == 1 else val

    def __call__(self, x):
        return self.evaluate(x)

    def norm_max(self):
        """Largest absolute coefficient (0 for the zero polynomial)."""
        return max((abs(v) for v in self._terms.values()), default=0)


# ---------------------------------------------------------------------------
# functional interface
# ---------------------------------------------------------------------------

def add(p: Polynomial, q: Polynomial) -> Polynomial:
    return p + q


def multiply(p: Polynomial, q: Polynomial) -> Polynomial:
    return p * q


def scale(p: Polynomial, c) -> Polynomial:
    return p * c


def evaluate(p: Polynomial, x):
    return p.evaluate(x)


def norm_max(p: Polynomial):
    return p.norm_max()


def substitute_squares(p: Polynomial) -> Polynomial:
    """Return ``p(x_1^2, ..., x_n^2)``, i.e. double every exponent."""
    return Polynomial._raw(p.n, {tuple(2 * e for e in k): v for k, v in p.terms.items()}, p.exact)


def is_even_in_each_variable(p: Polynomial) -> bool:
    return all(e % 2 == 0 for k in p.terms for e in k)


def even_reduction(p: Polynomial) -> Polynomial:
    """Inverse of :func:`substitute_squares`; halves every exponent.

    Raises :class:`EvenSymmetryError` naming the first odd exponent found.
    """
    out = {}
    for k in p.exponents():
        if any(e % 2 for e in k):
            raise EvenSymmetryError(k)
        out[tuple(e // 2 for e in k)] = p.terms[k]
    return Polynomial._raw(p.n, out, p.exact)


def theta(n: int, exact: bool = False) -> Polynomial:
    """``1 + x_1^2 + ... + x_n^2``."""
    terms = {(0,) * n: 1}
    for j in range(n):
        e = [0] * n
        e[j] = 2
        terms[tuple(e)] = 1
    return Polynomial(n, terms, exact=exact)


def theta_pow(n: int, k: int, exact: bool = False) -> Polynomial:
    """``(1 + ||x||^2)^k`` computed by the multinomial formula.

    Coefficients are integers, so the float result is exact as long as they
    stay below 2**53.
    """
    if k < 0:
        raise ArgumentError(f"power must be >= 0, got {k}")
    terms = {}
    # choose exponents (a_0; a_1..a_n) summing to k; coefficient is multinomial
    for beta in monomials_up_to(n, k):
        rest = k - sum(beta)
        coeff = math.factorial(k) // math.factorial(rest)
        for b in beta:
            coeff //= math.factorial(b)
        terms[tuple(2 * b for b in beta)] = coeff
    return Polynomial(n, terms, exact=exact)


# ---------------------------------------------------------------------------
# PopInstance
# ---------------------------------------------------------------------------

BOUND_KINDS = ("simplex", "ball")


def _bound_polynomial(n: int, kind: str, radius, exact: bool) -> Polynomial:
    terms = {(0,) * n: radius}
    power = 1 if kind == "simplex" else 2
    for j in range(n):
        e = [0] * n
        e[j] = power
        terms[tuple(e)] = -1
    return Polynomial(n, terms, exact=exact)


@dataclass(frozen=True)
class PopInstance:
    """Polynomial optimisation problem ``min f(x)`` over ``x >= 0, g_i(x) >= 0``.

    ``constraints`` always ends with the constant polynomial 1 (the trailing
    ``g_m``).  Use :meth:`create` to have it appended automatically.  An
    equality ``h = 0`` is stored as two inequalities ``h >= 0`` and ``-h >= 0``
    whose indices are listed in ``equality_pairs``.

    If ``bound_index`` is set, that constraint must be exactly
    ``R - sum_j x_j`` (``bound_kind == "simplex"``) or ``R - sum_j x_j^2``
    (``"ball"``) with ``R == radius``.  All indices are 0-based.
    """

    objective: Polynomial
    constraints: tuple[Polynomial, ...]
    bound_index: int | None = None
    bound_kind: str | None = None
    radius: float | None = None
    equality_pairs: tuple[tuple[int, int], ...] = ()
    cliques: tuple[tuple[int, ...], ...] | None = None
    assignments: tuple[tuple[int, ...], ...] | None = None
    name: str = field(default="", compare=False)

    def __post_init__(self):
        n = self.objective.n
        if not self.constraints:
            raise ArgumentError("constraint list must contain the trailing constant 1")
        for g in self.constraints:
            if g.n != n:
                raise ArgumentError("all constraints must share the objective's dimension")
        last = self.constraints[-1]
        if last != Polynomial.constant(n, 1):
            raise ArgumentError("the last constraint must be the constant polynomial 1")
        if self.bound_index is not None:
            if self.bound_kind not in BOUND_KINDS:
                raise ArgumentError(f"bound_kind must be one of {BOUND_KINDS}")
            if not 0 <= self.bound_index < len(self.constraints) - 1:
                raise ArgumentError(f"bound_index {self.bound_index} out of range")
            if self.radius is None or self.radius <= 0:
                raise ArgumentError("a flagged bound constraint needs a positive radius")
            expected = _bound_polynomial(n, self.bound_kind, self.radius, False)
            if self.constraints[self.bound_index].to_float() != expected:
                raise ArgumentError(
                    f"constraint {self.bound_index} is flagged {self.bound_kind} but is not "
                    f"R - sum x_j{'^2' if self.bound_kind == 'ball' else ''} with R={self.radius}"
                )
        for i, j in self.equality_pairs:
            gi, gj = self.constraints[i], self.constraints[j]
            if (gi + gj).to_float().norm_max() > 0:
                raise ArgumentError(f"constraints {i} and {j} are not an equality pair (+h, -h)")

    # construction ------------------------------------------------------------
    @classmethod
    def create(
        cls,
        objective: Polynomial,
        inequalities: Sequence[Polynomial] = (),
        equalities: Sequence[Polynomial] = (),
        bound: tuple[str, float] | None = None,
        cliques: Sequence[Sequence[int]] | None = None,
        name: str = "",
    ) -> "PopInstance":
        """Assemble an instance from plain constraint lists.

        ``bound=("simplex", R)`` or ``("ball", R)`` prepends the flagged bound
        constraint as ``g_1``.  Equalities become ``(+h, -h)`` pairs after the
        inequalities, and the constant 1 is appended last.
        """
        n = objective.n
        cons: list[Polynomial] = []
        bound_index = bound_kind = radius = None
        if bound is not None:
            bound_kind, radius = bound
            if bound_kind not in BOUND_KINDS:
                raise ArgumentError(f"bound kind must be one of {BOUND_KINDS}")
            cons.append(_bound_polynomial(n, bound_kind, radius, objective.exact))
            bound_index = 0
        cons.extend(inequalities)
        pairs = []
        for h in equalities:
            pairs.append((len(cons), len(cons) + 1))
            cons.extend([h, -h])
        cons.append(Polynomial.constant(n, 1, exact=objective.exact))
        cl = None if cliques is None else tuple(tuple(sorted(c)) for c in cliques)
        return cls(objective, tuple(cons), bound_index, bound_kind,
                   None if radius is None else float(radius), tuple(pairs), cl, None, name)

    # derived quantities ------------------------------------------------------
    @property
    def n(self) -> int:
        return self.objective.n

    @property
    def m(self) -> int:
        """Number of constraints including the trailing constant 1."""
        return len(self.constraints)

    @property
    def d_f(self) -> int:
        """Degree parameter of the objective, ``deg f + 1``."""
        return self.objective.degree + 1

    def constraint_degree(self, i: int) -> int:
        return self.constraints[i].degree

    def squared_objective(self) -> Polynomial:
        return substitute_squares(self.objective)

    def squared_constraints(self) -> list[Polynomial]:
        return [substitute_squares(g) for g in self.constraints]

    def require_bound(self, kinds: Sequence[str] = BOUND_KINDS) -> int:
        """Index of the flagged bound constraint or a configuration error."""
        if self.bound_index is None or self.bound_kind not in kinds:
            wanted = " or ".join(kinds)
            raise ConfigurationError(f"instance has no flagged {wanted} constraint")
        return self.bound_index

    def with_cliques(self, cliques, assignments=None) -> "PopInstance":
        cl = tuple(tuple(sorted(c)) for c in cliques)
        asg = None if assignments is None else tuple(tuple(a) for a in assignments)
        return PopInstance(self.objective, self.constraints, self.bound_index, self.bound_kind,
                           self.radius, self.equality_pairs, cl, asg, self.name)

    def is_feasible(self, x, tol: float = 1e-9) -> bool:
        x = np.asarray(x, dtype=float)
        if np.any(x < -tol):
            return False
        return all(g.evaluate(x) >= -tol for g in self.constraints)
