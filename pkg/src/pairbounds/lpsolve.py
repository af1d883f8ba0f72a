"""Dense two-phase revised simplex for small-row standard-form programs.

Solves ``min c @ x  s.t.  A @ x = b, x >= 0``. The programs built by this
package have at most a few dozen rows and possibly tens of thousands of
columns, so the basis is refactorised from scratch each iteration and pricing
is a single dense matrix-vector product.

The optimal basis is exposed so callers can revalue it at a different
right-hand side, which is what the basis bootstrap needs.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp

DEFAULT_TOL = 1e-9
EMPIRICAL_TOL = 1e-7


class Status(str, enum.Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    NUMERICAL_FAILURE = "numerical_failure"


class SingularBasis(RuntimeError):
    """Raised when a stored basis factor cannot be applied."""


@dataclass(frozen=True)
class StandardLP:
    """``min c @ x`` subject to ``A @ x = b`` and ``x >= 0``."""

    A: np.ndarray
    b: np.ndarray
    c: np.ndarray
    _cache: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        A = self.A.toarray() if sp.issparse(self.A) else np.asarray(self.A, dtype=float)
        b = np.asarray(self.b, dtype=float).ravel()
        c = np.asarray(self.c, dtype=float).ravel()
        if A.ndim != 2 or A.shape != (b.size, c.size):
            raise ValueError(f"shape mismatch: A {A.shape}, b {b.shape}, c {c.shape}")
        if not (np.isfinite(A).all() and np.isfinite(b).all() and np.isfinite(c).all()):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        object.__setattr__(self, "c", c)

    @property
    def shape(self):
        return self.A.shape

    def signed_rows(self, signs: np.ndarray, rows: np.ndarray) -> np.ndarray:
        """``(A * signs[:, None])[rows]``, cached for repeated warm starts."""
        key = (signs.tobytes(), rows.tobytes())
        hit = self._cache.get("signed")
        if hit is None or hit[0] != key:
            hit = (key, np.ascontiguousarray((self.A * signs[:, None])[rows]))
            self._cache["signed"] = hit
        return hit[1]


@dataclass(frozen=True)
class BasicSolution:
    """An optimal basic solution together with its factorised basis.

    ``rows`` lists the constraint rows kept after phase 1 (redundant rows are
    dropped) and ``row_signs`` records rows negated to make ``b`` nonnegative.
    """

    basis: np.ndarray
    rows: np.ndarray
    row_signs: np.ndarray
    x: np.ndarray
    value: float
    duals: np.ndarray
    reduced_costs: np.ndarray
    c_basis: np.ndarray
    basis_factor: tuple = field(repr=False)
    degenerate: bool = False
    iterations: int = 0

    def basic_values(self, new_b) -> np.ndarray:
        """``B^-1 b`` for a full-length right-hand side."""
        rhs = (self.row_signs * np.asarray(new_b, dtype=float))[self.rows]
        try:
            out = sla.lu_solve(self.basis_factor, rhs)
        except Exception as exc:  # pragma: no cover - defensive
            raise SingularBasis(str(exc)) from exc
        if not np.isfinite(out).all():
            raise SingularBasis("basis solve produced non-finite values")
        return out


@dataclass(frozen=True)
class SolveOutcome:
    status: Status
    solution: BasicSolution | None = None
    message: str = ""
    phase1_value: float = 0.0

    @property
    def ok(self) -> bool:
        return self.status is Status.OPTIMAL

    @property
    def value(self) -> float:
        return self.solution.value if self.solution is not None else np.nan


def revalue_basis(solution: BasicSolution, new_b) -> float:
    """Objective of the stored basis at another right-hand side, without re-solving."""
    return float(solution.c_basis @ solution.basic_values(new_b))


def basis_feasible(solution: BasicSolution, new_b, tol: float = DEFAULT_TOL) -> bool:
    return bool(solution.basic_values(new_b).min(initial=0.0) >= -tol)


REFACTOR_EVERY = 40


class _Basis:
    """Explicit basis inverse with rank-one pivot updates and periodic refactorisation."""

    def __init__(self, A, basis):
        self.A = A
        self.basis = np.array(basis, dtype=np.int64)
        self.refactor()

    def refactor(self):
        self.inv = np.linalg.inv(self.A[:, self.basis])
        self.since = 0

    def pivot(self, r, j, u):
        row = self.inv[r] / u[r]
        self.inv -= np.outer(u, row)
        self.inv[r] = row
        self.basis[r] = j
        self.since += 1
        if self.since >= REFACTOR_EVERY:
            self.refactor()
            return True
        return False


class _Simplex:
    """Primal revised simplex on a fixed matrix with a given starting basis."""

    def __init__(self, A, b, c, basis, allowed, tol, max_iter):
        self.A, self.b, self.c = A, b, c
        self.m, self.n = A.shape
        self.B = _Basis(A, basis)
        self.allowed = allowed
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0
        self.degenerate_run = 0
        scale = np.abs(c[allowed]).max(initial=1.0) if allowed.any() else 1.0
        self.opt_tol = 1e-11 * max(1.0, scale)

    @property
    def basis(self):
        return self.B.basis

    def factor(self):
        return sla.lu_factor(self.A[:, self.basis], check_finite=False)

    def _fresh(self):
        inv = self.B.inv
        xb = inv @ self.b
        d = self.c - (self.c[self.basis] @ inv) @ self.A
        d[self.basis] = 0.0
        d[~self.allowed] = 0.0
        return xb, d

    def run(self) -> str:
        m = self.m
        xb, d = self._fresh()
        while True:
            candidates = np.flatnonzero(d < -self.opt_tol)
            if candidates.size == 0:
                if self.B.since == 0:
                    return "optimal"
                # confirm optimality on a fresh factorisation
                self.B.refactor()
                xb, d = self._fresh()
                continue
            if self.iterations >= self.max_iter:
                return "iteration_limit"
            if self.degenerate_run >= 10 * m:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmin(d[candidates])])
            u = self.B.inv @ self.A[:, j]
            pos = u > 1e-11
            if not pos.any():
                if self.B.since:
                    self.B.refactor()
                    xb, d = self._fresh()
                    continue
                return "unbounded"
            xpos = np.maximum(xb[pos], 0.0)
            ratios = xpos / u[pos]
            tmin = ratios.min()
            rows = np.flatnonzero(pos)
            ties = rows[ratios <= tmin + 1e-12 * max(1.0, tmin)]
            r = int(ties[np.argmin(self.basis[ties])])
            self.degenerate_run = self.degenerate_run + 1 if tmin <= 1e-12 else 0
            alpha = self.B.inv[r] @ self.A
            step = d[j] / u[r]
            theta = xb[r] / u[r]
            xb = xb - theta * u
            xb[r] = theta
            d = d - step * alpha
            self.iterations += 1
            if self.B.pivot(r, j, u):
                xb, d = self._fresh()
            else:
                d[self.basis] = 0.0
                d[~self.allowed] = 0.0


def solve(lp: StandardLP, tol: float = DEFAULT_TOL, max_iter: int | None = None, cond_limit: float = 1e12) -> SolveOutcome:
    """Two-phase revised simplex.

    Parameters
    ----------
    lp : StandardLP
    tol : float
        Feasibility tolerance, scaled by ``max(1, |b|_inf)``. Phase 1 values above
        it are reported infeasible.
    max_iter : int, optional
        Pivot cap per phase; defaults to ``50 * (rows + columns)``.
    cond_limit : float
        Largest accepted condition number of the final basis.

    Returns
    -------
    SolveOutcome
    """
    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    max_iter = max_iter or 50 * (m + n)
    if m == 0:
        if (c < 0).any():
            return SolveOutcome(Status.UNBOUNDED, message="no constraints")
        sol = BasicSolution(np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0), np.zeros(n), 0.0,
                            np.zeros(0), c.copy(), np.zeros(0), (np.zeros((0, 0)), np.zeros(0, np.int32)))
        return SolveOutcome(Status.OPTIMAL, sol)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    signs = np.where(b < 0, -1.0, 1.0)
    As = A * signs[:, None]
    bs = b * signs

    # phase 1 with one artificial per row
    A1 = np.hstack([As, np.eye(m)])
    c1 = np.concatenate([np.zeros(n), np.ones(m)])
    allowed = np.ones(n + m, dtype=bool)
    ph1 = _Simplex(A1, bs, c1, np.arange(n, n + m), allowed, tol, max_iter)
    status = ph1.run()
    if status == "iteration_limit":
        return SolveOutcome(Status.NUMERICAL_FAILURE, message="phase 1 iteration limit")
    lu = ph1.factor()
    xb = sla.lu_solve(lu, bs, check_finite=False)
    p1 = float(xb[ph1.basis >= n].sum())
    if p1 > tol * scale:
        return SolveOutcome(Status.INFEASIBLE, message=f"phase 1 value {p1:.3e}", phase1_value=p1)

    # pivot artificials out of the basis, dropping redundant rows
    # (an artificial in basis position r is the unit column of row basis[r] - n)
    basis = ph1.basis.copy()
    keep_rows = np.ones(m, dtype=bool)
    keep_pos = np.ones(m, dtype=bool)
    for r in range(m):
        if basis[r] < n:
            continue
        lu = sla.lu_factor(A1[:, basis], check_finite=False)
        e_r = np.zeros(m)
        e_r[r] = 1.0
        row = sla.lu_solve(lu, e_r, trans=1, check_finite=False) @ As
        row[basis[basis < n]] = 0.0
        j = int(np.argmax(np.abs(row)))
        if abs(row[j]) > 1e-9:
            basis[r] = j
        else:
            keep_rows[basis[r] - n] = False
            keep_pos[r] = False
    rows = np.flatnonzero(keep_rows)
    basis = basis[keep_pos]
    A2, b2 = As[rows], bs[rows]

    ph2 = _Simplex(A2, b2, c, basis, np.ones(n, dtype=bool), tol, max_iter)
    status = ph2.run()
    if status == "unbounded":
        return SolveOutcome(Status.UNBOUNDED, message="objective unbounded below")
    if status == "iteration_limit":
        return SolveOutcome(Status.NUMERICAL_FAILURE, message="phase 2 iteration limit")
    return _finish(A, b, c, A2, b2, rows, signs, ph2.basis, ph1.iterations + ph2.iterations, tol, cond_limit)


def _finish(A, b, c, A2, b2, rows, signs, basis, iterations, tol, cond_limit) -> SolveOutcome:
    B = A2[:, basis]
    if B.size and np.linalg.cond(B) > cond_limit:
        return SolveOutcome(Status.NUMERICAL_FAILURE, message="ill-conditioned basis")
    lu = sla.lu_factor(B, check_finite=False)
    xb = sla.lu_solve(lu, b2, check_finite=False)
    x = np.zeros(A.shape[1])
    x[basis] = np.maximum(xb, 0.0)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if xb.min(initial=0.0) < -1e3 * tol * scale or np.abs(A @ x - b).max(initial=0.0) > 1e3 * tol * scale:
        return SolveOutcome(Status.NUMERICAL_FAILURE, message="residual check failed")
    cb = c[basis]
    y = sla.lu_solve(lu, cb, trans=1, check_finite=False)
    d = c - A2.T @ y
    d[basis] = 0.0
    duals = np.zeros(A.shape[0])
    duals[rows] = y * signs[rows]
    sol = BasicSolution(
        basis=basis.copy(),
        rows=rows,
        row_signs=signs,
        x=x,
        value=float(cb @ xb),
        duals=duals,
        reduced_costs=d,
        c_basis=cb.copy(),
        basis_factor=lu,
        degenerate=bool((np.abs(xb) <= tol * scale).any()),
        iterations=iterations,
    )
    return SolveOutcome(Status.OPTIMAL, sol)


def resolve_rhs(lp: StandardLP, warm: BasicSolution, new_b, tol: float = DEFAULT_TOL, max_iter: int | None = None) -> SolveOutcome:
    """Re-solve ``lp`` at right-hand side ``new_b`` starting from ``warm``'s basis.

    The warm basis stays dual feasible when only ``b`` changes, so a dual
    simplex restores primal feasibility. Falls back to a cold solve when the
    dropped redundant rows are inconsistent at ``new_b`` or pivoting stalls.
    """
    new_b = np.asarray(new_b, dtype=float)
    A, c = lp.A, lp.c
    if np.any(np.sign(new_b) * warm.row_signs < 0):
        return solve(StandardLP(A, new_b, c), tol=tol, max_iter=max_iter)
    signs = warm.row_signs
    rows = warm.rows
    A2 = lp.signed_rows(signs, rows)
    b2 = (new_b * signs)[rows]
    m, n = A2.shape
    max_iter = max_iter or 50 * (m + n)
    scale = max(1.0, float(np.abs(new_b).max(initial=0.0)))
    B = _Basis(A2, warm.basis)

    def fresh():
        xb = B.inv @ b2
        d = np.maximum(c - (c[B.basis] @ B.inv) @ A2, 0.0)
        d[B.basis] = 0.0
        return xb, d

    xb, d = fresh()
    it = 0
    while True:
        r_candidates = np.flatnonzero(xb < -tol * scale)
        if r_candidates.size == 0:
            if B.since == 0:
                break
            B.refactor()
            xb, d = fresh()
            continue
        if it >= max_iter:
            return solve(StandardLP(A, new_b, c), tol=tol, max_iter=max_iter)
        r = int(r_candidates[np.argmin(xb[r_candidates])])
        alpha = B.inv[r] @ A2
        eligible = alpha < -1e-11
        eligible[B.basis] = False
        cand = np.flatnonzero(eligible)
        if cand.size == 0:
            if B.since:
                B.refactor()
                xb, d = fresh()
                continue
            return SolveOutcome(Status.INFEASIBLE, message="dual simplex: primal infeasible")
        ratios = d[cand] / -alpha[cand]
        tmin = ratios.min()
        ties = cand[ratios <= tmin + 1e-12 * max(1.0, tmin)]
        # largest pivot among ties keeps the update stable and avoids stalling
        q = int(ties[np.argmax(-alpha[ties])])
        u = B.inv @ A2[:, q]
        theta = xb[r] / u[r]
        xb = xb - theta * u
        xb[r] = theta
        d = np.maximum(d - (d[q] / alpha[q]) * alpha, 0.0)
        it += 1
        if B.pivot(r, q, u):
            xb, d = fresh()
        else:
            d[B.basis] = 0.0
    basis = B.basis
    ph2 = _Simplex(A2, b2, c, basis, np.ones(n, dtype=bool), tol, max_iter)
    status = ph2.run()
    if status != "optimal":
        return solve(StandardLP(A, new_b, c), tol=tol, max_iter=max_iter)
    out = _finish(A, new_b, c, A2, b2, rows, signs, ph2.basis, warm.iterations + it + ph2.iterations, tol, 1e12)
    if out.status is not Status.OPTIMAL:
        return solve(StandardLP(A, new_b, c), tol=tol, max_iter=max_iter)
    return out


def to_standard_form(c, A_eq=None, b_eq=None, A_ub=None, b_ub=None) -> tuple[StandardLP, int]:
    """Append one slack per inequality row.

    Returns the standard-form program and the number of original variables;
    the first ``n`` entries of a solution are the original ``x``.
    """
    c = np.asarray(c, dtype=float)
    n = c.size
    blocks, rhs = [], []
    if A_eq is not None and np.shape(A_eq)[0]:
        Ae = A_eq.toarray() if sp.issparse(A_eq) else np.asarray(A_eq, dtype=float)
        blocks.append(np.hstack([Ae, np.zeros((Ae.shape[0], 0))]))
        rhs.append(np.asarray(b_eq, dtype=float))
    k = 0
    if A_ub is not None and np.shape(A_ub)[0]:
        Au = A_ub.toarray() if sp.issparse(A_ub) else np.asarray(A_ub, dtype=float)
        k = Au.shape[0]
    rows = []
    for blk in blocks:
        rows.append(np.hstack([blk, np.zeros((blk.shape[0], k))]))
    if k:
        rows.append(np.hstack([Au, np.eye(k)]))
        rhs.append(np.asarray(b_ub, dtype=float))
    A = np.vstack(rows) if rows else np.zeros((0, n + k))
    b = np.concatenate(rhs) if rhs else np.zeros(0)
    return StandardLP(A, b, np.concatenate([c, np.zeros(k)])), n


def vertex_enumeration(lp: StandardLP, tol: float = 1e-9) -> float:
    """Brute-force optimum over all basic feasible solutions (reference oracle).

    Returns ``inf`` when no feasible vertex exists. Only for tiny programs.
    """
    import itertools

    A, b, c = lp.A, lp.b, lp.c
    m, n = A.shape
    rank = np.linalg.matrix_rank(A) if m else 0
    if rank < m:
        # keep a maximal independent set of rows; consistency is checked per vertex
        q, r, piv = sla.qr(A.T, pivoting=True)
        idx = np.sort(piv[:rank])
    else:
        idx = np.arange(m)
    Ar, br = A[idx], b[idx]
    best = np.inf
    for cols in itertools.combinations(range(n), rank):
        B = Ar[:, cols]
        if abs(np.linalg.det(B)) < 1e-12:
            continue
        xb = np.linalg.solve(B, br)
        if xb.min(initial=0.0) < -tol:
            continue
        x = np.zeros(n)
        x[list(cols)] = xb
        if np.abs(A @ x - b).max(initial=0.0) > 1e-7:
            continue
        best = min(best, float(c @ x))
    return best
