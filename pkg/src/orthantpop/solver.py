"""Primal-dual interior-point solver for block conic programs, and SDPA I/O.

The solver treats a :class:`~orthantpop.conic.ConicProgram` as::

    minimize  c^T x   s.t.  A x = b,  G x + s = h,  s in K

where ``K`` is the product of the nonnegative orthant (LP rows) and PSD
cones, and ``-G x + h`` stacks the LP slacks and the LMI blocks.  The dual is::

    maximize  -b^T y - h^T z   s.t.  A^T y + G^T z + c = 0,  z in K.

Iterates live in the homogeneous self-dual embedding, so a run ends either
with an optimal pair, or with a certificate that the primal (moment) side is
infeasible, or that it is unbounded (the dual is infeasible).  Each iteration
uses Nesterov-Todd scaling and a Mehrotra predictor-corrector step.  All
block-local work is batched per block size and the Schur complement
``G^T W^{-1} W^{-T} G`` is formed from a sparse product, so the cost of the
block part grows with the sum of cubed block sizes.

PSD blocks are stored internally as full row-major ``r*r`` vectors; inner
products of these vectors are trace inner products.
"""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp

from .conic import ConicProgram, PSDBlock, pack_triu, triu_index, unpack_triu
from .errors import ArgumentError, ParseError

__all__ = [
    "SolveSettings",
    "Solution",
    "STATUSES",
    "export_sdpa",
    "import_sdpa",
    "solve",
]

STATUSES = ("optimal", "primal-infeasible", "dual-infeasible", "max-iter", "numerical-failure")


@dataclass(frozen=True)
class SolveSettings:
    """Interior-point parameters.

    ``deterministic`` is accepted for interface completeness: the
    implementation has no randomised component, so runs are always
    reproducible for a fixed BLAS configuration.
    """

    feastol: float = 1e-8
    gaptol: float = 1e-8
    max_iter: int = 200
    step_fraction: float = 0.98
    deterministic: bool = True
    verbose: bool = False

    def __post_init__(self):
        if self.feastol <= 0 or self.gaptol <= 0:
            raise ArgumentError("tolerances must be positive")
        if not 0 < self.step_fraction < 1:
            raise ArgumentError("step fraction must lie in (0, 1)")
        if self.max_iter < 1:
            raise ArgumentError("max_iter must be >= 1")


@dataclass
class Solution:
    """Result of :func:`solve`.

    ``x`` are the primal (moment) variables, ``y`` the multipliers of the
    equality rows, ``z_lp`` and ``z_blocks`` the cone duals (Gram data) in
    program order.  Objectives include the program's constant term.
    """

    status: str
    x: np.ndarray
    y: np.ndarray
    z_lp: np.ndarray
    z_blocks: list[np.ndarray]
    s_lp: np.ndarray
    s_blocks: list[np.ndarray]
    primal_objective: float
    dual_objective: float
    rel_gap: float
    primal_residual: float
    dual_residual: float
    iterations: int
    solve_time: float
    history: list[dict] = field(default_factory=list, repr=False)

    @property
    def optimal(self) -> bool:
        return self.status == "optimal"

    @property
    def bound(self) -> float:
        """Lower bound read from the dual (certificate) side."""
        return self.dual_objective


# ---------------------------------------------------------------------------
# cone bookkeeping
# ---------------------------------------------------------------------------

class _Cone:
    """Layout of the stacked cone vector: LP part, then PSD blocks grouped by size."""

    def __init__(self, nl: int, dims: list[int]):
        self.nl = nl
        self.dims = dims
        order = sorted(range(len(dims)), key=lambda b: (dims[b], b))
        self.groups: list[tuple[int, np.ndarray, int]] = []  # (r, program block ids, offset)
        self.block_offset = np.zeros(len(dims), dtype=int)
        off = nl
        i = 0
        while i < len(order):
            r = dims[order[i]]
            j = i
            while j < len(order) and dims[order[j]] == r:
                j += 1
            ids = np.array(order[i:j], dtype=int)
            self.groups.append((r, ids, off))
            for q, bid in enumerate(ids):
                self.block_offset[bid] = off + q * r * r
            off += len(ids) * r * r
            i = j
        self.size = off
        self.degree = nl + sum(dims)

    def views(self, v: np.ndarray):
        lp = v[:self.nl]
        mats = [v[off:off + len(ids) * r * r].reshape(len(ids), r, r) for r, ids, off in self.groups]
        return lp, mats

    def join(self, lp: np.ndarray, mats: list[np.ndarray]) -> np.ndarray:
        return np.concatenate([lp] + [m.reshape(-1) for m in mats])

    def identity(self) -> np.ndarray:
        lp = np.ones(self.nl)
        mats = [np.broadcast_to(np.eye(r), (len(ids), r, r)).copy() for r, ids, _ in self.groups]
        return self.join(lp, mats)

    def min_eig(self, v: np.ndarray) -> float:
        lp, mats = self.views(v)
        vals = [lp.min()] if self.nl else []
        for m in mats:
            vals.append(np.linalg.eigvalsh(_sym(m))[:, 0].min())
        return float(min(vals)) if vals else math.inf


def _sym(m: np.ndarray) -> np.ndarray:
    return 0.5 * (m + np.swapaxes(m, -1, -2))


class _Scaling:
    """Nesterov-Todd scaling point for the current ``(s, z)``."""

    def __init__(self, cone: _Cone, s: np.ndarray, z: np.ndarray):
        self.cone = cone
        s_lp, s_m = cone.views(s)
        z_lp, z_m = cone.views(z)
        self.w = np.sqrt(s_lp / z_lp)
        self.lam_lp = np.sqrt(s_lp * z_lp)
        self.R, self.Rinv, self.lam = [], [], []
        for S, Z in zip(s_m, z_m):
            Ls = np.linalg.cholesky(_sym(S))
            Lz = np.linalg.cholesky(_sym(Z))
            U, lam, Vt = np.linalg.svd(np.swapaxes(Lz, -1, -2) @ Ls)
            isq = 1.0 / np.sqrt(lam)
            self.R.append(Ls @ np.swapaxes(Vt, -1, -2) * isq[:, None, :])
            self.Rinv.append(isq[:, :, None] * np.swapaxes(U, -1, -2) @ np.swapaxes(Lz, -1, -2))
            self.lam.append(lam)

    # W^{-T} v : s-space -> scaled space
    def inv_t(self, v):
        lp, mats = self.cone.views(v)
        return self.cone.join(lp / self.w, [Ri @ m @ np.swapaxes(Ri, -1, -2) for Ri, m in zip(self.Rinv, mats)])

    # W v : z-space -> scaled space
    def fwd(self, v):
        lp, mats = self.cone.views(v)
        return self.cone.join(lp * self.w, [np.swapaxes(R, -1, -2) @ m @ R for R, m in zip(self.R, mats)])

    # W^T v : scaled space -> s-space
    def fwd_t(self, v):
        lp, mats = self.cone.views(v)
        return self.cone.join(lp * self.w, [R @ m @ np.swapaxes(R, -1, -2) for R, m in zip(self.R, mats)])

    # W^{-1} v : scaled space -> z-space
    def inv(self, v):
        lp, mats = self.cone.views(v)
        return self.cone.join(lp / self.w, [np.swapaxes(Ri, -1, -2) @ m @ Ri for Ri, m in zip(self.Rinv, mats)])

    def lam_vec(self) -> np.ndarray:
        mats = [np.einsum("bi,ij->bij", lam, np.eye(lam.shape[1])) for lam in self.lam]
        return self.cone.join(self.lam_lp, mats)

    def lam_div(self, d):
        """Solve ``lambda o u = d`` for ``u`` (Jordan product with diagonal lambda)."""
        lp, mats = self.cone.views(d)
        out = [2.0 * m / (lam[:, :, None] + lam[:, None, :]) for lam, m in zip(self.lam, mats)]
        return self.cone.join(lp / self.lam_lp, out)

    def kron_matrix(self) -> sp.csr_matrix:
        """Sparse block-diagonal matrix of ``W^{-T}`` acting on stacked vectors."""
        rows, cols, data = [np.arange(self.cone.nl)], [np.arange(self.cone.nl)], [1.0 / self.w]
        for (r, ids, off), Ri in zip(self.cone.groups, self.Rinv):
            nb = len(ids)
            K = np.einsum("bik,bjl->bijkl", Ri, Ri).reshape(nb, r * r, r * r)
            base = off + np.arange(nb)[:, None, None] * r * r
            rr = base + np.arange(r * r)[None, :, None]
            cc = base + np.arange(r * r)[None, None, :]
            rows.append(np.broadcast_to(rr, K.shape).ravel())
            cols.append(np.broadcast_to(cc, K.shape).ravel())
            data.append(K.ravel())
        N = self.cone.size
        return sp.csr_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))), shape=(N, N))


def _jordan(cone: _Cone, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    a_lp, a_m = cone.views(a)
    b_lp, b_m = cone.views(b)
    return cone.join(a_lp * b_lp, [0.5 * (x @ y + y @ x) for x, y in zip(a_m, b_m)])


def _max_step(cone: _Cone, lam_lp, lams, d: np.ndarray) -> float:
    """Largest ``alpha`` with ``diag(lambda) + alpha d`` in the cone."""
    d_lp, d_m = cone.views(d)
    worst = 0.0
    if cone.nl:
        worst = max(worst, float(np.max(-d_lp / lam_lp)))
    for lam, m in zip(lams, d_m):
        isq = 1.0 / np.sqrt(lam)
        scaled = isq[:, :, None] * _sym(m) * isq[:, None, :]
        worst = max(worst, float(-np.linalg.eigvalsh(scaled)[:, 0].min()))
    return math.inf if worst <= 0 else 1.0 / worst


# ---------------------------------------------------------------------------
# problem data in solver form
# ---------------------------------------------------------------------------

def _full_vec_expander(r: int) -> sp.csr_matrix:
    """Map upper-triangle vectors to full row-major ``r*r`` vectors."""
    rows, cols = [], []
    for p in range(r):
        for q in range(r):
            rows.append(p * r + q)
            cols.append(triu_index(r, p, q))
    return sp.csr_matrix((np.ones(len(rows)), (rows, cols)), shape=(r * r, r * (r + 1) // 2))


def _stack(program: ConicProgram, cone: _Cone):
    n = program.n_vars
    G_parts = [None] * (1 + len(program.blocks))
    h_parts = [None] * (1 + len(program.blocks))
    G_parts[0] = -program.lp_coef
    h_parts[0] = -program.lp_const
    expanders: dict[int, sp.csr_matrix] = {}
    order = [0]
    for r, ids, _ in cone.groups:
        E = expanders.setdefault(r, _full_vec_expander(r))
        for bid in ids:
            blk = program.blocks[bid]
            G_parts[1 + bid] = -(E @ blk.coef)
            h_parts[1 + bid] = -(E @ blk.const)
            order.append(1 + bid)
    G = sp.vstack([G_parts[i] for i in order], format="csr") if order else sp.csr_matrix((0, n))
    h = np.concatenate([h_parts[i] for i in order])
    return G, h


class _KKT:
    """Factorised reduced KKT system for one scaling point."""

    def __init__(self, G, A, Gs, scaling: _Scaling | None, refine: int = 2):
        self.G, self.A, self.Gs, self.scaling = G, A, Gs, scaling
        n, p = G.shape[1], A.shape[0]
        self.n, self.p = n, p
        H = (Gs.T @ Gs).toarray()
        self.H = H
        Ad = A.toarray()
        self.Ad = Ad
        scale = max(1.0, float(np.max(np.abs(H))) if H.size else 1.0)
        delta = 1e-13 * scale
        K = np.zeros((n + p, n + p))
        K[:n, :n] = H + delta * np.eye(n)
        K[:n, n:] = Ad.T
        K[n:, :n] = Ad
        K[n:, n:] = -delta * np.eye(p)
        self.K0 = K.copy()
        self.K0[:n, :n] = H
        self.K0[n:, n:] = 0.0
        self.lu = la.lu_factor(K, check_finite=True)
        self.refine = refine

    def _solve_reduced(self, rhs):
        sol = la.lu_solve(self.lu, rhs)
        for _ in range(self.refine):
            res = rhs - self.K0 @ sol
            sol = sol + la.lu_solve(self.lu, res)
        return sol

    def solve(self, r1, r2, r3, refine: int = 2):
        """Solve ``A^T dy + G^T dz = r1``, ``-A dx = r2``, ``-G dx + W^T W dz = r3``.

        The reduced solve is followed by refinement against the unreduced
        system, which removes the error introduced by forming ``G^T W^-1 W^-T G``.
        """
        dx, dy, dz = self._solve_once(r1, r2, r3)
        for _ in range(refine):
            e1, e2, e3 = self.residual(r1, r2, r3, dx, dy, dz)
            cx, cy, cz = self._solve_once(e1, e2, e3)
            dx, dy, dz = dx + cx, dy + cy, dz + cz
        return dx, dy, dz

    def residual(self, r1, r2, r3, dx, dy, dz):
        sc = self.scaling
        wz = sc.fwd_t(sc.fwd(dz)) if sc is not None else dz
        return (r1 - self.A.T @ dy - self.G.T @ dz,
                r2 + self.A @ dx,
                r3 + self.G @ dx - wz)

    def _solve_once(self, r1, r2, r3):
        sc = self.scaling
        t = sc.inv_t(r3) if sc is not None else r3
        rhs = np.concatenate([r1 - self.Gs.T @ t, -r2])
        sol = self._solve_reduced(rhs)
        dx, dy = sol[:self.n], sol[self.n:]
        u = t + self.Gs @ dx
        dz = sc.inv(u) if sc is not None else u
        return dx, dy, dz


# ---------------------------------------------------------------------------
# the solver
# ---------------------------------------------------------------------------

def solve(program: ConicProgram, settings: SolveSettings | None = None) -> Solution:
    """Solve ``program`` with a homogeneous self-dual interior-point method."""
    settings = settings or SolveSettings()
    t0 = time.perf_counter()
    cone = _Cone(program.n_lp, program.block_dims)
    G, h = _stack(program, cone)
    A = sp.csr_matrix(program.A)
    b = np.asarray(program.b, dtype=float)
    c = np.asarray(program.c, dtype=float)
    n, p = c.shape[0], b.shape[0]
    history: list[dict] = []

    resx0 = max(1.0, float(np.linalg.norm(c)))
    resy0 = max(1.0, float(np.linalg.norm(b)))
    resz0 = max(1.0, float(np.linalg.norm(h)))

    def finish(status, x, y, z, s, tau, kappa, it, metrics):
        scale = tau if status in ("optimal", "max-iter", "numerical-failure") and tau > 0 else 1.0
        xv, yv, zv, sv = x / scale, y / scale, z / scale, s / scale
        pobj = metrics.get("pcost", math.nan)
        dobj = metrics.get("dcost", math.nan)
        if status == "primal-infeasible":
            pobj, dobj = math.inf, math.inf
        elif status == "dual-infeasible":
            pobj, dobj = -math.inf, -math.inf
        z_lp, z_m = cone.views(zv)
        s_lp, s_m = cone.views(sv)
        zb: list = [None] * len(program.blocks)
        sb: list = [None] * len(program.blocks)
        for (r, ids, _), zm, smat in zip(cone.groups, z_m, s_m):
            for q, bid in enumerate(ids):
                zb[bid] = _sym(zm[q]).copy()
                sb[bid] = _sym(smat[q]).copy()
        return Solution(
            status=status, x=xv, y=yv, z_lp=z_lp.copy(), z_blocks=zb, s_lp=s_lp.copy(), s_blocks=sb,
            primal_objective=pobj + program.c0 if math.isfinite(pobj) else pobj,
            dual_objective=dobj + program.c0 if math.isfinite(dobj) else dobj,
            rel_gap=metrics.get("relgap", math.nan), primal_residual=metrics.get("pres", math.nan),
            dual_residual=metrics.get("dres", math.nan), iterations=it,
            solve_time=time.perf_counter() - t0, history=history,
        )

    nan_metrics: dict = {}
    empty = np.zeros(0)

    # ---- starting point ------------------------------------------------------
    try:
        kkt0 = _KKT(G, A, G, None)
        # least-squares primal start: min ||G x - h|| subject to A x = b
        x, _, _ = kkt0.solve(np.zeros(n), -b, -h)
        s = h - G @ x
        dx, dy, dz = kkt0.solve(-c, np.zeros(p), np.zeros(cone.size))
        y, z = dy, dz
    except (la.LinAlgError, ValueError, np.linalg.LinAlgError):
        return finish("numerical-failure", np.zeros(n), np.zeros(p), np.zeros(cone.size),
                      np.zeros(cone.size), 1.0, 1.0, 0, nan_metrics)
    e = cone.identity()
    if cone.size:
        a_s = cone.min_eig(s)
        if a_s < 1e-8 * max(1.0, float(np.linalg.norm(s))):
            s = s + (1.0 + max(0.0, -a_s)) * e
        a_z = cone.min_eig(z)
        if a_z < 1e-8 * max(1.0, float(np.linalg.norm(z))):
            z = z + (1.0 + max(0.0, -a_z)) * e
    tau, kappa = 1.0, 1.0

    metrics: dict = {}
    # Best iterate by the larger of the three stopping measures.  Degenerate
    # programs (no interior point on one side) can lose accuracy late in the
    # run; in that case the best iterate is reported instead of the last one.
    best: tuple | None = None
    best_merit = math.inf
    since_best = 0

    def fallback(status, it):
        if best is not None and best_merit < max(metrics.get("pres", math.inf), metrics.get("dres", math.inf),
                                                 metrics.get("relgap", math.inf)):
            bx, by_, bz, bs, bt, bk, bm = best
            return finish(status, bx, by_, bz, bs, bt, bk, it, bm)
        return finish(status, x, y, z, s, tau, kappa, it, metrics)

    for it in range(settings.max_iter + 1):
        # ---- residuals and termination tests -----------------------------
        r_x = A.T @ y + G.T @ z + c * tau
        r_y = -(A @ x) + b * tau
        r_z = s + G @ x - h * tau
        cx, by, hz = float(c @ x), float(b @ y), float(h @ z)
        r_tau = kappa + cx + by + hz
        gap = float(s @ z)
        mu = (gap + tau * kappa) / (cone.degree + 1)
        pcost, dcost = cx / tau, -(by + hz) / tau
        pres = max(float(np.linalg.norm(A @ x / tau - b)) / resy0,
                   float(np.linalg.norm((G @ x + s) / tau - h)) / resz0)
        dres = float(np.linalg.norm((A.T @ y + G.T @ z) / tau + c)) / resx0
        relgap = max(abs(pcost - dcost), gap / tau ** 2) / max(1.0, abs(pcost), abs(dcost))
        metrics = dict(pcost=pcost, dcost=dcost, pres=pres, dres=dres, relgap=relgap, tau=tau, kappa=kappa, mu=mu)
        history.append(dict(metrics, iteration=it))
        if settings.verbose:
            print(f"{it:3d} pcost={pcost: .9e} dcost={dcost: .9e} pres={pres:.1e} dres={dres:.1e} "
                  f"gap={relgap:.1e} tau={tau:.1e} kappa={kappa:.1e}")
        if not all(map(math.isfinite, (pcost, dcost, pres, dres, relgap))):
            return fallback("numerical-failure", it)
        if pres <= settings.feastol and dres <= settings.feastol and relgap <= settings.gaptol:
            return finish("optimal", x, y, z, s, tau, kappa, it, metrics)
        if by + hz < 0:
            pinf = float(np.linalg.norm(A.T @ y + G.T @ z)) / resx0 / (-(by + hz))
            if pinf <= settings.feastol:
                metrics["certificate"] = pinf
                return finish("primal-infeasible", x, y, z, s, tau, kappa, it, metrics)
        if cx < 0:
            dinf = max(float(np.linalg.norm(A @ x)) / resy0, float(np.linalg.norm(G @ x + s)) / resz0) / (-cx)
            if dinf <= settings.feastol:
                metrics["certificate"] = dinf
                return finish("dual-infeasible", x, y, z, s, tau, kappa, it, metrics)
        merit = max(pres, dres, relgap)
        if merit < best_merit:
            best_merit, since_best = merit, 0
            best = (x.copy(), y.copy(), z.copy(), s.copy(), tau, kappa, dict(metrics))
        else:
            since_best += 1
            if since_best >= 15 and merit > 100.0 * best_merit:
                return fallback("numerical-failure", it)
        if it == settings.max_iter:
            break

        # ---- Newton system ---------------------------------------------------
        try:
            W = _Scaling(cone, s, z)
            Gs = W.kron_matrix() @ G if cone.size else G
            kkt = _KKT(G, A, Gs, W)
        except (np.linalg.LinAlgError, la.LinAlgError, ValueError, FloatingPointError):
            return fallback("numerical-failure", it)
        lam = W.lam_vec()
        lam_sq = _jordan(cone, lam, lam)
        u2x, u2y, u2z = kkt.solve(-c, -b, -h)
        q2 = float(c @ u2x + b @ u2y + h @ u2z)

        def direction(ds, dk, eta):
            r3 = W.fwd_t(W.lam_div(ds)) + eta * r_z
            u1x, u1y, u1z = kkt.solve(-eta * r_x, -eta * r_y, r3)
            q1 = float(c @ u1x + b @ u1y + h @ u1z)
            dtau = (-eta * r_tau - dk / tau - q1) / (q2 - kappa / tau)
            dx = u1x + dtau * u2x
            dy = u1y + dtau * u2y
            dz = u1z + dtau * u2z
            dkappa = (dk - kappa * dtau) / tau
            dz_sc = W.fwd(dz)
            ds_sc = W.lam_div(ds) - dz_sc
            return dx, dy, dz, ds_sc, dz_sc, dtau, dkappa

        def max_step(ds_sc, dz_sc, dtau, dkappa):
            alpha = min(_max_step(cone, W.lam_lp, W.lam, ds_sc), _max_step(cone, W.lam_lp, W.lam, dz_sc))
            if dtau < 0:
                alpha = min(alpha, -tau / dtau)
            if dkappa < 0:
                alpha = min(alpha, -kappa / dkappa)
            return alpha

        try:
            aff = direction(-lam_sq, -tau * kappa, 1.0)
            alpha_aff = min(1.0, max_step(*aff[3:]))
            sigma = (1.0 - alpha_aff) ** 3
            corr = _jordan(cone, aff[3], aff[4])
            ds = -lam_sq - corr + sigma * mu * e
            dk = -tau * kappa - aff[5] * aff[6] + sigma * mu
            dx, dy, dz, ds_sc, dz_sc, dtau, dkappa = direction(ds, dk, 1.0 - sigma)
            alpha = min(1.0, settings.step_fraction * max_step(ds_sc, dz_sc, dtau, dkappa))
        except (np.linalg.LinAlgError, la.LinAlgError, ValueError, FloatingPointError):
            return fallback("numerical-failure", it)
        if not math.isfinite(alpha) or alpha < 1e-12:
            return fallback("numerical-failure", it)
        x = x + alpha * dx
        y = y + alpha * dy
        z = z + alpha * dz
        s = s + alpha * W.fwd_t(ds_sc)
        tau = tau + alpha * dtau
        kappa = kappa + alpha * dkappa

    return fallback("max-iter", settings.max_iter)


# ---------------------------------------------------------------------------
# SDPA sparse format
# ---------------------------------------------------------------------------

_META_TAG = "* orthantpop-meta "


def _fmt(v: float) -> str:
    # shortest round-trip text; integral values are written without ".0"
    v = float(v)
    if v.is_integer() and abs(v) < 2**53:
        return str(int(v))
    return repr(v)


def export_sdpa(program: ConicProgram) -> str:
    """Serialise ``program`` in SDPA sparse (``.dat-s``) format.

    The variable vector ``x`` of a program is already free, which is what the
    SDPA primal expects.  Equality rows are written as a diagonal block of
    opposite inequality pairs; a comment line records which block that is,
    together with labels and the objective constant, so that
    :func:`import_sdpa` restores the program exactly.  Output is
    deterministic: entries are sorted and floats use shortest round-trip
    formatting.
    """
    n = program.n_vars
    blocks_struct: list[int] = []
    entries: list[tuple[int, int, int, int, float]] = []
    blk = 0
    lp_block = eq_block = None
    if program.n_lp:
        blk += 1
        lp_block = blk
        blocks_struct.append(-program.n_lp)
        coo = program.lp_coef.tocoo()
        for r, i, v in zip(coo.row, coo.col, coo.data):
            if v != 0:
                entries.append((int(i) + 1, blk, int(r) + 1, int(r) + 1, float(v)))
        for r, v in enumerate(program.lp_const):
            if v != 0:
                entries.append((0, blk, r + 1, r + 1, float(v)))
    for b in program.blocks:
        blk += 1
        blocks_struct.append(b.dim)
        iu = np.triu_indices(b.dim)
        coo = b.coef.tocoo()
        for t, i, v in zip(coo.row, coo.col, coo.data):
            if v != 0:
                entries.append((int(i) + 1, blk, int(iu[0][t]) + 1, int(iu[1][t]) + 1, float(v)))
        for t, v in enumerate(b.const):
            if v != 0:
                entries.append((0, blk, int(iu[0][t]) + 1, int(iu[1][t]) + 1, float(v)))
    if program.n_eq:
        blk += 1
        eq_block = blk
        blocks_struct.append(-2 * program.n_eq)
        coo = program.A.tocoo()
        for r, i, v in zip(coo.row, coo.col, coo.data):
            if v != 0:
                entries.append((int(i) + 1, blk, 2 * int(r) + 1, 2 * int(r) + 1, float(v)))
                entries.append((int(i) + 1, blk, 2 * int(r) + 2, 2 * int(r) + 2, -float(v)))
        for r, v in enumerate(program.b):
            if v != 0:
                entries.append((0, blk, 2 * r + 1, 2 * r + 1, float(v)))
                entries.append((0, blk, 2 * r + 2, 2 * r + 2, -float(v)))
    entries.sort(key=lambda e: e[:4])
    meta = {
        "lp_block": lp_block,
        "equality_block": eq_block,
        "normalization_row": program.normalization_row,
        "c0": _fmt(program.c0),
        "var_labels": list(program.var_labels),
        "eq_labels": list(program.eq_labels),
        "lp_labels": list(program.lp_labels),
        "block_labels": list(program.block_labels),
        "notes": list(program.notes),
    }
    lines = [
        '"orthantpop conic program: minimize c^T x s.t. sum_i x_i F_i - F_0 PSD',
        "* equality rows a^T x = b are stored as the pairs a^T x - b >= 0, -a^T x + b >= 0 in the equality block",
        _META_TAG + json.dumps(meta, sort_keys=True, separators=(",", ":"), ensure_ascii=True),
        str(n),
        str(len(blocks_struct)),
        " ".join(str(d) for d in blocks_struct) if blocks_struct else "0",
        " ".join(_fmt(v) for v in program.c) if n else "",
    ]
    lines.extend(f"{m} {bk} {i} {j} {_fmt(v)}" for m, bk, i, j, v in entries)
    return "\n".join(lines) + "\n"


def _numbers(line: str) -> list[str]:
    for ch in "{}(),":
        line = line.replace(ch, " ")
    return line.split()


def import_sdpa(text: str) -> ConicProgram:
    """Parse SDPA sparse text produced by :func:`export_sdpa` or another tool.

    Foreign files (no metadata comment) map every diagonal block to LP rows
    and have no equality rows.  Malformed input raises :class:`ParseError`
    with the offending line number.
    """
    meta = {}
    body: list[tuple[int, str]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if raw.startswith(_META_TAG):
            try:
                meta = json.loads(raw[len(_META_TAG):])
            except json.JSONDecodeError as exc:
                raise ParseError(f"bad metadata comment: {exc.msg}", lineno) from None
            continue
        if line.startswith('"') or line.startswith("*"):
            continue
        if not line and len(body) != 3:
            continue
        body.append((lineno, line))
    if len(body) < 3:
        raise ParseError("file ends before the block structure", body[-1][0] if body else None)

    def as_int(tok: str, lineno: int) -> int:
        try:
            return int(tok)
        except ValueError:
            raise ParseError(f"expected an integer, got {tok!r}", lineno) from None

    def as_float(tok: str, lineno: int) -> float:
        try:
            return float(tok)
        except ValueError:
            raise ParseError(f"expected a number, got {tok!r}", lineno) from None

    ln, line = body[0]
    toks = _numbers(line)
    if len(toks) < 1:
        raise ParseError("missing number of variables", ln)
    m = as_int(toks[0], ln)
    ln, line = body[1]
    toks = _numbers(line)
    if not toks:
        raise ParseError("missing number of blocks", ln)
    nblocks = as_int(toks[0], ln)
    ln, line = body[2]
    struct = [as_int(t, ln) for t in _numbers(line)][:nblocks] if nblocks else []
    if len(struct) != nblocks or any(d == 0 for d in struct):
        raise ParseError(f"block structure should list {nblocks} nonzero sizes", ln)
    idx = 3
    cvals: list[float] = []
    while len(cvals) < m:
        if idx >= len(body):
            raise ParseError("objective vector is incomplete", body[-1][0])
        ln, line = body[idx]
        cvals.extend(as_float(t, ln) for t in _numbers(line))
        idx += 1
    if len(cvals) != m:
        raise ParseError(f"objective vector has {len(cvals)} entries, expected {m}", ln)

    lp_block = meta.get("lp_block")
    eq_block = meta.get("equality_block")
    # per block: dict (matno, i, j) -> value
    data: list[dict[tuple[int, int, int], float]] = [dict() for _ in struct]
    for ln, line in body[idx:]:
        if not line:
            continue
        toks = _numbers(line)
        if len(toks) != 5:
            raise ParseError("entry lines need five fields: matno blkno i j value", ln)
        matno, bk, i, j = (as_int(t, ln) for t in toks[:4])
        val = as_float(toks[4], ln)
        if not 0 <= matno <= m:
            raise ParseError(f"matrix number {matno} out of range", ln)
        if not 1 <= bk <= nblocks:
            raise ParseError(f"block number {bk} out of range", ln)
        size = abs(struct[bk - 1])
        if not (1 <= i <= size and 1 <= j <= size):
            raise ParseError(f"entry ({i},{j}) outside block of size {size}", ln)
        if struct[bk - 1] < 0 and i != j:
            raise ParseError("off-diagonal entry in a diagonal block", ln)
        if i > j:
            i, j = j, i
        key = (matno, i - 1, j - 1)
        data[bk - 1][key] = data[bk - 1].get(key, 0.0) + val

    c = np.array(cvals, dtype=float)
    lp_rows: list[tuple[dict[int, float], float]] = []
    eq_rows: list[tuple[dict[int, float], float]] = []
    blocks: list[PSDBlock] = []
    for bidx, (size, entries) in enumerate(zip(struct, data), start=1):
        if size < 0 and bidx == eq_block:
            nrows = -size // 2
            rows = [({}, 0.0) for _ in range(nrows)]
            for (matno, i, _), v in entries.items():
                if i % 2:
                    continue
                form, rhs = rows[i // 2]
                if matno == 0:
                    rows[i // 2] = (form, v)
                else:
                    form[matno - 1] = v
            eq_rows.extend(rows)
        elif size < 0:
            rows = [({}, 0.0) for _ in range(-size)]
            for (matno, i, _), v in entries.items():
                form, const = rows[i]
                if matno == 0:
                    rows[i] = (form, v)
                else:
                    form[matno - 1] = v
            lp_rows.extend(rows)
        else:
            t = size * (size + 1) // 2
            ri, ci, dv = [], [], []
            const = np.zeros(t)
            for (matno, i, j), v in sorted(entries.items()):
                row = triu_index(size, i, j)
                if matno == 0:
                    const[row] = v
                else:
                    ri.append(row)
                    ci.append(matno - 1)
                    dv.append(v)
            coef = sp.csr_matrix((dv, (ri, ci)), shape=(t, m))
            blocks.append(PSDBlock(size, coef, const))
    del lp_block

    def to_csr(rows):
        ri, ci, dv = [], [], []
        for r, (form, _) in enumerate(rows):
            for i in sorted(form):
                ri.append(r)
                ci.append(i)
                dv.append(form[i])
        return sp.csr_matrix((dv, (ri, ci)), shape=(len(rows), m))

    return ConicProgram(
        c=c,
        A=to_csr(eq_rows),
        b=np.array([v for _, v in eq_rows], dtype=float),
        lp_coef=to_csr(lp_rows),
        lp_const=np.array([v for _, v in lp_rows], dtype=float),
        blocks=tuple(blocks),
        c0=float(meta.get("c0", "0.0")),
        normalization_row=meta.get("normalization_row"),
        var_labels=tuple(meta.get("var_labels", ())),
        eq_labels=tuple(meta.get("eq_labels", ())),
        lp_labels=tuple(meta.get("lp_labels", ())),
        block_labels=tuple(meta.get("block_labels", ())),
        notes=tuple(meta.get("notes", ())),
    )


def write_sdpa(program: ConicProgram, path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(export_sdpa(program))


def read_sdpa(path) -> ConicProgram:
    with open(path, encoding="utf-8") as fh:
        return import_sdpa(fh.read())
