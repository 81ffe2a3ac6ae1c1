"""Print the bound table of the AM-GM toy problem for orders k = 0..4 and widths s = 1..5.

    min x1 + x2 + x3   subject to   x1 x2 x3 >= 1,  x1 + x2 + x3 <= 3,  x >= 0

The minimum is 3 at (1, 1, 1).  Width 1 is a linear program; larger widths
add small semidefinite blocks.  Cells that did not reach an optimal status
are marked with an asterisk.
"""

import warnings

from orthantpop import Polynomial, PopInstance, solve
from orthantpop.relax import build_polya_dense


def main():
    f = Polynomial(3, {(1, 0, 0): 1, (0, 1, 0): 1, (0, 0, 1): 1})
    g = Polynomial(3, {(1, 1, 1): 1, (0, 0, 0): -1})
    pop = PopInstance.create(f, [g], bound=("simplex", 3))
    widths = range(1, 6)
    print("k \\ s " + "".join(f"{s:>10}" for s in widths))
    for k in range(5):
        cells = []
        for s in widths:
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                program, _ = build_polya_dense(pop, k, s)
            sol = solve(program)
            mark = "" if sol.status == "optimal" else "*"
            cells.append(f"{sol.dual_objective:>9.4f}{mark or ' '}")
        print(f"{k:>5} " + "".join(cells))


if __name__ == "__main__":
    main()
