"""Block conic program data shared by the relaxation builders and the solver.

Programs are stored in the layout of the SDPA primal problem::

    minimize    c^T x + c0
    subject to  A x = b
                F_lp x - f_lp >= 0                    (componentwise)
                sum_i x_i F_i^(b) - F_0^(b)  PSD       for every block b

with ``x`` free.  For moment relaxations ``x`` holds the moments, each PSD
block is a localizing submatrix and the LP rows are its 1x1 instances.  The
cone duals are the Gram matrices of the weighted sum-of-squares certificate.

Symmetric block data is kept as the upper triangle in row-major order, so
entry ``(p, q)`` with ``p <= q`` of a ``r x r`` block sits at row
``p*r - p*(p-1)//2 + (q - p)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ArgumentError

__all__ = ["ConicProgram", "PSDBlock", "triu_index", "triu_pairs", "ProgramAssembler"]


def triu_pairs(r: int) -> list[tuple[int, int]]:
    return [(p, q) for p in range(r) for q in range(p, r)]


def triu_index(r: int, p: int, q: int) -> int:
    if p > q:
        p, q = q, p
    return p * r - p * (p - 1) // 2 + (q - p)


@dataclass(frozen=True, eq=False)
class PSDBlock:
    """One linear matrix inequality ``sum_i x_i F_i - F_0 PSD``.

    ``coef`` has shape ``(r(r+1)/2, n_vars)``: column ``i`` is the upper
    triangle of ``F_i``.  ``const`` is the upper triangle of ``F_0``.
    """

    dim: int
    coef: sp.csr_matrix
    const: np.ndarray

    def matrix(self, x: np.ndarray) -> np.ndarray:
        """Evaluate the block at ``x`` as a dense symmetric matrix."""
        vals = self.coef @ x - self.const
        return unpack_triu(vals, self.dim)


def unpack_triu(vals: np.ndarray, r: int) -> np.ndarray:
    mat = np.zeros((r, r))
    iu = np.triu_indices(r)
    mat[iu] = vals
    mat[(iu[1], iu[0])] = vals
    return mat


def pack_triu(mat: np.ndarray) -> np.ndarray:
    return np.asarray(mat)[np.triu_indices(mat.shape[0])]


def _sparse_equal(a: sp.spmatrix, b: sp.spmatrix) -> bool:
    if a.shape != b.shape:
        return False
    a = sp.csr_matrix(a)
    b = sp.csr_matrix(b)
    a.sum_duplicates()
    b.sum_duplicates()
    a.eliminate_zeros()
    b.eliminate_zeros()
    a.sort_indices()
    b.sort_indices()
    return (np.array_equal(a.indptr, b.indptr) and np.array_equal(a.indices, b.indices)
            and np.array_equal(a.data, b.data))


@dataclass(frozen=True, eq=False)
class ConicProgram:
    """Immutable block conic program (see module docstring for the layout).

    ``normalization_row`` flags the equality row carrying the moment
    normalization; builders always set it, imported foreign files may not.
    """

    c: np.ndarray
    A: sp.csr_matrix
    b: np.ndarray
    lp_coef: sp.csr_matrix
    lp_const: np.ndarray
    blocks: tuple[PSDBlock, ...]
    c0: float = 0.0
    normalization_row: int | None = None
    var_labels: tuple[str, ...] = ()
    eq_labels: tuple[str, ...] = ()
    lp_labels: tuple[str, ...] = ()
    block_labels: tuple[str, ...] = ()
    sense: str = "min"
    notes: tuple[str, ...] = field(default=())

    def __post_init__(self):
        n = self.c.shape[0]
        if self.A.shape[1] != n or self.lp_coef.shape[1] != n:
            raise ArgumentError("constraint matrices do not match the variable count")
        if self.A.shape[0] != self.b.shape[0]:
            raise ArgumentError("A and b disagree on the number of equality rows")
        if self.lp_coef.shape[0] != self.lp_const.shape[0]:
            raise ArgumentError("LP coefficient rows and constants disagree")
        for blk in self.blocks:
            if blk.dim < 1:
                raise ArgumentError("PSD block dimension must be >= 1")
            t = blk.dim * (blk.dim + 1) // 2
            if blk.coef.shape != (t, n) or blk.const.shape != (t,):
                raise ArgumentError("PSD block data has the wrong shape")
        if self.normalization_row is not None and not 0 <= self.normalization_row < self.A.shape[0]:
            raise ArgumentError("normalization row index out of range")
        if self.sense != "min":
            raise ArgumentError("programs are stored in minimisation form")
        for name, labels, count in (("var", self.var_labels, n), ("eq", self.eq_labels, self.A.shape[0]),
                                    ("lp", self.lp_labels, self.lp_coef.shape[0]),
                                    ("block", self.block_labels, len(self.blocks))):
            if labels and len(labels) != count:
                raise ArgumentError(f"{name} label count {len(labels)} does not match {count}")

    # sizes -------------------------------------------------------------------
    @property
    def n_vars(self) -> int:
        return int(self.c.shape[0])

    @property
    def n_eq(self) -> int:
        return int(self.A.shape[0])

    @property
    def n_lp(self) -> int:
        return int(self.lp_coef.shape[0])

    @property
    def block_dims(self) -> list[int]:
        return [b.dim for b in self.blocks]

    def stats(self) -> dict[str, int]:
        """Size summary in the style of published result tables.

        ``nmat`` counts PSD blocks of dimension at least 2, ``msize`` is the
        largest block dimension, ``nscal`` counts nonnegative scalars, and
        ``naff`` counts affine constraints of the certificate side (one per
        moment variable).
        """
        dims = self.block_dims
        return {
            "nmat": sum(1 for d in dims if d >= 2),
            "msize": max(dims + [1 if self.n_lp else 0]),
            "nscal": self.n_lp + sum(1 for d in dims if d == 1),
            "naff": self.n_vars,
        }

    def structurally_equal(self, other: "ConicProgram", labels: bool = True) -> bool:
        """Exact comparison of all problem data (and labels, optionally)."""
        if not isinstance(other, ConicProgram):
            return False
        same = (
            np.array_equal(self.c, other.c)
            and self.c0 == other.c0
            and _sparse_equal(self.A, other.A)
            and np.array_equal(self.b, other.b)
            and _sparse_equal(self.lp_coef, other.lp_coef)
            and np.array_equal(self.lp_const, other.lp_const)
            and len(self.blocks) == len(other.blocks)
            and all(x.dim == y.dim and _sparse_equal(x.coef, y.coef) and np.array_equal(x.const, y.const)
                    for x, y in zip(self.blocks, other.blocks))
            and self.normalization_row == other.normalization_row
        )
        if same and labels:
            same = (self.var_labels == other.var_labels and self.eq_labels == other.eq_labels
                    and self.lp_labels == other.lp_labels and self.block_labels == other.block_labels)
        return same

    def evaluate_constraints(self, x: np.ndarray) -> dict[str, object]:
        """Residuals of ``x``: equality error, LP slacks and block minimum eigenvalues."""
        x = np.asarray(x, dtype=float)
        return {
            "eq": self.A @ x - self.b,
            "lp": self.lp_coef @ x - self.lp_const,
            "psd_min_eig": [float(np.linalg.eigvalsh(b.matrix(x))[0]) for b in self.blocks],
        }


class ProgramAssembler:
    """Incremental builder for :class:`ConicProgram`.

    Variables are registered by hashable key.  Rows refer to variables by
    key through ``{key: coefficient}`` dictionaries.
    """

    def __init__(self):
        self._index: dict[object, int] = {}
        self._var_labels: list[str] = []
        self._objective: dict[int, float] = {}
        self.c0 = 0.0
        self._eq: list[tuple[dict[int, float], float, str]] = []
        self._lp: list[tuple[dict[int, float], float, str]] = []
        self._blocks: list[tuple[int, list[tuple[int, int, dict[int, float]]], str]] = []
        self.normalization_row: int | None = None
        self.notes: list[str] = []

    # variables ---------------------------------------------------------------
    def add_variable(self, key, label: str) -> int:
        if key in self._index:
            raise ArgumentError(f"variable {key!r} registered twice")
        self._index[key] = len(self._var_labels)
        self._var_labels.append(label)
        return self._index[key]

    def var(self, key) -> int:
        try:
            return self._index[key]
        except KeyError:
            raise ArgumentError(f"unknown program variable {key!r}") from None

    def has_var(self, key) -> bool:
        return key in self._index

    @property
    def n_vars(self) -> int:
        return len(self._var_labels)

    def _resolve(self, form: dict) -> dict[int, float]:
        out: dict[int, float] = {}
        for key, coeff in form.items():
            i = self.var(key)
            out[i] = out.get(i, 0.0) + float(coeff)
        return {i: v for i, v in out.items() if v != 0.0}

    # rows --------------------------------------------------------------------
    def add_objective(self, form: dict) -> None:
        for i, v in self._resolve(form).items():
            self._objective[i] = self._objective.get(i, 0.0) + v

    def add_equality(self, form: dict, rhs: float, label: str, normalization: bool = False) -> int:
        row = len(self._eq)
        self._eq.append((self._resolve(form), float(rhs), label))
        if normalization:
            if self.normalization_row is not None:
                raise ArgumentError("a normalization row is already flagged")
            self.normalization_row = row
        return row

    def add_lp(self, form: dict, const: float, label: str) -> int:
        self._lp.append((self._resolve(form), float(const), label))
        return len(self._lp) - 1

    def add_block(self, dim: int, entries: Sequence[tuple[int, int, dict]], label: str) -> int:
        """Add ``sum x_i F_i PSD`` given upper-triangle entries ``(p, q, form)``."""
        resolved = [(p, q, self._resolve(form)) for p, q, form in entries]
        self._blocks.append((dim, resolved, label))
        return len(self._blocks) - 1

    # finish --------------------------------------------------------------------
    def build(self) -> ConicProgram:
        n = self.n_vars
        c = np.zeros(n)
        for i, v in self._objective.items():
            c[i] = v

        def rows_to_csr(rows):
            data, ri, ci = [], [], []
            for r, (form, _, _) in enumerate(rows):
                for i in sorted(form):
                    ri.append(r)
                    ci.append(i)
                    data.append(form[i])
            return sp.csr_matrix((data, (ri, ci)), shape=(len(rows), n))

        A = rows_to_csr(self._eq)
        b = np.array([rhs for _, rhs, _ in self._eq], dtype=float)
        lp_coef = rows_to_csr(self._lp)
        lp_const = np.array([cst for _, cst, _ in self._lp], dtype=float)
        blocks = []
        for dim, entries, _ in self._blocks:
            t = dim * (dim + 1) // 2
            data, ri, ci = [], [], []
            for p, q, form in entries:
                row = triu_index(dim, p, q)
                for i in sorted(form):
                    ri.append(row)
                    ci.append(i)
                    data.append(form[i])
            coef = sp.csr_matrix((data, (ri, ci)), shape=(t, n))
            coef.sum_duplicates()
            blocks.append(PSDBlock(dim, coef, np.zeros(t)))
        return ConicProgram(
            c=c, A=A, b=b, lp_coef=lp_coef, lp_const=lp_const, blocks=tuple(blocks), c0=self.c0,
            normalization_row=self.normalization_row, var_labels=tuple(self._var_labels),
            eq_labels=tuple(lbl for _, _, lbl in self._eq), lp_labels=tuple(lbl for _, _, lbl in self._lp),
            block_labels=tuple(lbl for _, _, lbl in self._blocks), notes=tuple(self.notes),
        )


def program_from_dense(
    c,
    A=None,
    b=None,
    lp: tuple | None = None,
    blocks: Sequence[tuple] = (),
    c0: float = 0.0,
) -> ConicProgram:
    """Convenience constructor from dense data.

    ``lp`` is ``(F, f)`` meaning ``F x - f >= 0``; each entry of ``blocks`` is
    ``(F0, [F1, ..., Fn])`` meaning ``sum x_i F_i - F0 PSD``.
    """
    c = np.asarray(c, dtype=float)
    n = c.shape[0]
    if A is None:
        A, b = np.zeros((0, n)), np.zeros(0)
    A = sp.csr_matrix(np.asarray(A, dtype=float).reshape(-1, n))
    b = np.asarray(b, dtype=float).reshape(-1)
    if lp is None:
        lp_coef, lp_const = sp.csr_matrix((0, n)), np.zeros(0)
    else:
        lp_coef = sp.csr_matrix(np.asarray(lp[0], dtype=float).reshape(-1, n))
        lp_const = np.asarray(lp[1], dtype=float).reshape(-1)
    out = []
    for F0, Fs in blocks:
        F0 = np.asarray(F0, dtype=float)
        if len(Fs) != n:
            raise ArgumentError("each block needs one coefficient matrix per variable")
        cols = np.column_stack([pack_triu(np.asarray(F, dtype=float)) for F in Fs]) if n else \
            np.zeros((F0.shape[0] * (F0.shape[0] + 1) // 2, 0))
        out.append(PSDBlock(F0.shape[0], sp.csr_matrix(cols), pack_triu(F0)))
    return ConicProgram(c=c, A=A, b=b, lp_coef=lp_coef, lp_const=lp_const, blocks=tuple(out), c0=c0)
