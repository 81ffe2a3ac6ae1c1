"""Polynomial optimisation on the nonnegative orthant.

Squaring the variables turns ``min f(x)`` over ``x >= 0, g_i(x) >= 0`` into a
problem whose data are even in each variable.  This package builds
multiplier-based (``theta^k``) and multiplier-free relaxations of the squared
problem with sums of squares of bounded factor width, solves them with a
built-in interior-point method, extracts minimisers and exploits correlative
sparsity.
"""

__version__ = "0.1.0"

from .errors import (
    ArgumentError,
    AssumptionError,
    CertificateShapeError,
    ConfigurationError,
    CoverageError,
    EvenSymmetryError,
    OrderError,
    OrthantPopError,
    ParseError,
    SizeError,
)
from .poly import (
    Polynomial,
    PopInstance,
    graded_lex_key,
    is_even_in_each_variable,
    monomials_up_to,
    substitute_squares,
    theta,
    theta_pow,
)
from .indexsets import BlockCover, cover_blocks, cover_blocks_clique, parity_blocks
from .moment import MomentVector, localizing_diag, moment_submatrix, moments_of_measure, riesz
from .conic import ConicProgram, PSDBlock
from .solver import Solution, SolveSettings, export_sdpa, import_sdpa, solve
from .relax import (
    VariableMap,
    build_handelman_dense,
    build_handelman_sparse,
    build_polya_dense,
    build_polya_sparse,
    build_putinar_dense,
    build_putinar_sparse,
)
from .sparsity import (
    CliqueStructure,
    augment_with_clique_bounds,
    check_assumption,
    chordal_cliques,
    csp_graph,
)
from .extract import (
    AtomSet,
    Certificate,
    assemble_gram,
    certificate_from_solution,
    extract_atoms,
    extract_from_solution,
    extract_sparse,
    verify_solution,
)

__all__ = [name for name in dir() if not name.startswith("_")]
