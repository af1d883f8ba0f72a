"""Confidence intervals for the endpoints of an identified interval.

Three methods are available:

``relaxed_box``
    Replace the observed cells by a box around the estimate and optimise over
    both the type distribution and the cells in the box.
``basis_bootstrap``
    Bootstrap the value of each near-optimal basis and use the maximum of the
    centred replicate values over that set.
``numerical_delta``
    Bootstrap a finite-difference directional derivative of the value function.

Endpoint CIs are one-sided and pointwise: ``lower_ci`` is a lower confidence
limit for the lower bound and ``upper_ci`` an upper confidence limit for the
upper bound.
"""
from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla

from . import lpsolve
from .data import ObservedDistribution, empirical_cells, records_to_array
from .program import IdentifiedInterval, LinearProgramSpec, bounds

METHODS = ("relaxed_box", "basis_bootstrap", "numerical_delta")


class InferenceError(ValueError):
    pass


@dataclass(frozen=True)
class InferenceConfig:
    """Settings shared by the three methods.

    Parameters
    ----------
    method : {"relaxed_box", "basis_bootstrap", "numerical_delta"}
    alpha : float
        One-sided level for each endpoint.
    reps : int
        Bootstrap replicates (at least 100 for the bootstrap methods).
    seed : int
        Replicate ``r`` uses ``np.random.default_rng([seed, r])``.
    e_n_rule : float
        Step size ``e_n = n ** -e_n_rule`` for the numerical delta method.
    c_n_rule : float
        Near-optimality tolerance ``c_n = n ** -c_n_rule`` for the basis bootstrap.
    kappa_rule : {"analytic", "bootstrap"}
        How the relaxed box radius constant is chosen.
    kappa : float, optional
        Fixed radius constant overriding ``kappa_rule``.
    n_entries : int
        Linearly independent cells per block in the analytic constant.
    upsilon : {"identity", "regularized"}
        Weight matrix of the bootstrapped quadratic form.
    upsilon_ridge : float
        Ridge added to the block covariance for ``"regularized"``.
    threads : int
        Worker threads for replicates; results do not depend on it.
    tol : float
        Feasibility tolerance for solves at empirical cells.
    keep_draws : bool
        Store the per-replicate statistics in the report diagnostics.
    """

    method: str = "basis_bootstrap"
    alpha: float = 0.05
    reps: int = 200
    seed: int = 0
    e_n_rule: float = 1.0 / 3.0
    c_n_rule: float = 1.0 / 3.0
    kappa_rule: str = "analytic"
    kappa: float | None = None
    n_entries: int = 15
    upsilon: str = "identity"
    upsilon_ridge: float = 1e-3
    threads: int = 1
    tol: float = lpsolve.EMPIRICAL_TOL
    keep_draws: bool = False

    def __post_init__(self):
        if self.method not in METHODS:
            raise InferenceError(f"method must be one of {METHODS}")
        if not 0 < self.alpha < 1:
            raise InferenceError("alpha must lie in (0, 1)")
        needs_reps = self.method != "relaxed_box" or (self.kappa_rule == "bootstrap" and self.kappa is None)
        if needs_reps and self.reps < 100:
            raise InferenceError("bootstrap methods need reps >= 100")
        if self.kappa_rule not in ("analytic", "bootstrap"):
            raise InferenceError("kappa_rule must be 'analytic' or 'bootstrap'")
        if self.upsilon not in ("identity", "regularized"):
            raise InferenceError("upsilon must be 'identity' or 'regularized'")
        if self.kappa is not None and self.kappa < 0:
            raise InferenceError("kappa must be nonnegative")


@dataclass
class ConfidenceReport:
    method: str
    lower_ci: float
    upper_ci: float
    point_bounds: IdentifiedInterval
    alpha: float
    diagnostics: dict = field(default_factory=dict)

    @property
    def is_empty(self) -> bool:
        return not np.isfinite(self.lower_ci) or not np.isfinite(self.upper_ci)

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "alpha": self.alpha,
            "lower_ci": None if not np.isfinite(self.lower_ci) else float(self.lower_ci),
            "upper_ci": None if not np.isfinite(self.upper_ci) else float(self.upper_ci),
            "point_bounds": self.point_bounds.to_dict(),
            "diagnostics": _jsonable(self.diagnostics),
        }


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not np.isfinite(obj):
        return None
    return obj


# --- helpers -----------------------------------------------------------------

def _bootstrap_cells(arr: np.ndarray, reps: int, seed: int, threads: int = 1):
    """Household-level resamples; yields ``(r, ObservedDistribution or None)``."""
    n = arr.shape[0]

    def one(r):
        rng = np.random.default_rng([seed, r])
        idx = rng.integers(0, n, size=n)
        return empirical_cells(arr[idx])

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as ex:
            return list(ex.map(one, range(reps)))
    return [one(r) for r in range(reps)]


def _check_blocks(spec: LinearProgramSpec, obs: ObservedDistribution):
    if tuple(obs.active_blocks) != tuple(spec.blocks):
        raise InferenceError(f"data blocks {obs.active_blocks} differ from program blocks {spec.blocks}")


def _project_simplex(v: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto the probability simplex."""
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    ind = np.arange(1, v.size + 1)
    rho = np.nonzero(u - css / ind > 0)[0][-1]
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def _quantile(x, q):
    return float(np.quantile(np.asarray(x, dtype=float), q, method="inverted_cdf"))


# --- relaxed box -------------------------------------------------------------

def box_radius(obs: ObservedDistribution, config: InferenceConfig, records=None) -> tuple[np.ndarray, dict]:
    """Per-cell half-widths ``sqrt(kappa_z / n_z * Upsilon^-1_jj)`` and the per-block ``kappa``.

    Inactive blocks get radius zero.
    """
    radius = np.zeros(64)
    kappas = {}
    if config.kappa is not None:
        kappas = {k: config.kappa for k in obs.active_blocks}
    elif config.kappa_rule == "analytic":
        m = config.n_entries
        for k in obs.active_blocks:
            pz = obs.block(k)
            sigma2 = float(np.max(pz * (1 - pz)))
            kappas[k] = sigma2 * 2 * m * np.log(2 * m / config.alpha)
    else:
        if records is None:
            raise InferenceError("bootstrap kappa needs household records")
        arr = records_to_array(records)
        boots = _bootstrap_cells(arr, config.reps, config.seed, config.threads)
        for k in obs.active_blocks:
            pz = obs.block(k)
            ups = _upsilon(pz, obs.n_z[k], config)
            stats = []
            for b in boots:
                if b.n_z[k] == 0:
                    continue
                dlt = b.block(k) - pz
                stats.append(obs.n_z[k] * dlt @ ups @ dlt)
            kappas[k] = _quantile(stats, 1 - config.alpha)
    for k in obs.active_blocks:
        pz = obs.block(k)
        ups_inv_diag = np.diag(np.linalg.inv(_upsilon(pz, obs.n_z[k], config)))
        radius[16 * k: 16 * k + 16] = np.sqrt(kappas[k] / obs.n_z[k] * ups_inv_diag)
    return radius, kappas


def _upsilon(pz, n_z, config):
    if config.upsilon == "identity":
        return np.eye(16)
    cov = np.diag(pz) - np.outer(pz, pz)
    return np.linalg.inv(cov + config.upsilon_ridge * np.eye(16))


def relaxed_program(spec: LinearProgramSpec, lo: np.ndarray, hi: np.ndarray, sense: str) -> lpsolve.StandardLP:
    """Standard form of the program with cells free inside ``[lo, hi]``.

    Variables are the presolved type masses, mass-bound slacks, cell offsets
    ``q = p - lo`` and box slacks ``t = hi - lo - q``.
    """
    cols, bound_rows = spec._presolved()
    blocks = spec.blocks
    nb = len(blocks)
    n_mu = cols.size
    n_s = bound_rows.size
    n_q = 16 * nb
    sig = spec.signature[cols]
    m = n_q + 1 + n_s + n_q
    N = n_mu + n_s + 2 * n_q
    A = np.zeros((m, N))
    b = np.zeros(m)
    for j, k in enumerate(blocks):
        A[16 * j + sig[:, j], np.arange(n_mu)] = 1.0
        A[16 * j + np.arange(16), n_mu + n_s + 16 * j + np.arange(16)] = -1.0
        b[16 * j: 16 * j + 16] = lo[16 * k: 16 * k + 16]
    A[n_q, :n_mu] = 1.0
    b[n_q] = 1.0
    for i, r in enumerate(bound_rows):
        A[n_q + 1 + i, :n_mu] = spec.weights[cols, r]
        A[n_q + 1 + i, n_mu + i] = 1.0
        b[n_q + 1 + i] = spec.eps[r]
    base = n_q + 1 + n_s
    for j, k in enumerate(blocks):
        rows = base + 16 * j + np.arange(16)
        A[rows, n_mu + n_s + 16 * j + np.arange(16)] = 1.0
        A[rows, n_mu + n_s + n_q + 16 * j + np.arange(16)] = 1.0
        b[rows] = hi[16 * k: 16 * k + 16] - lo[16 * k: 16 * k + 16]
    c = np.zeros(N)
    c[:n_mu] = spec.objective[cols]
    return lpsolve.StandardLP(A, b, c if sense == "min" else -c)


def relaxed_box_ci(spec: LinearProgramSpec, observed, config: InferenceConfig | None = None, records=None) -> ConfidenceReport:
    """Bounds of the program relaxed to a box of cells around the estimate.

    ``observed`` may be an :class:`ObservedDistribution` or household records
    (which are then also used for a bootstrap ``kappa``).
    """
    config = config or InferenceConfig(method="relaxed_box")
    t0 = time.perf_counter()
    if not isinstance(observed, ObservedDistribution):
        records = observed if records is None else records
        observed = empirical_cells(records)
    _check_blocks(spec, observed)
    point = bounds(spec, observed, tol=config.tol)
    radius, kappas = box_radius(observed, config, records)
    lo = np.clip(observed.cells - radius, 0.0, 1.0)
    hi = np.clip(observed.cells + radius, 0.0, 1.0)
    out = {}
    for sense in ("min", "max"):
        res = lpsolve.solve(relaxed_program(spec, lo, hi, sense), tol=config.tol)
        if res.status is lpsolve.Status.NUMERICAL_FAILURE:
            raise InferenceError(res.message)
        out[sense] = res
    if not out["min"].ok or not out["max"].ok:
        lower, upper = np.nan, np.nan
    else:
        lower, upper = out["min"].value, -out["max"].value
    diag = {
        "kappa": {str(k): float(v) for k, v in kappas.items()},
        "radius": {str(k): float(radius[16 * k]) if np.ptp(radius[16 * k:16 * k + 16]) == 0
                   else radius[16 * k:16 * k + 16].tolist() for k in observed.active_blocks},
        "status": "empty" if not np.isfinite(lower) else "interval",
        "seconds": time.perf_counter() - t0,
    }
    return ConfidenceReport("relaxed_box", lower, upper, point, config.alpha, diag)


# --- basis bootstrap ---------------------------------------------------------

def _basis_key(sol):
    return tuple(int(v) for v in sol.basis)


def dual_vertex(solution: lpsolve.BasicSolution, m: int) -> np.ndarray:
    """``y`` with ``b @ y == c_B @ B^-1 b`` for every right-hand side ``b`` of length ``m``."""
    y_kept = sla.lu_solve(solution.basis_factor, solution.c_basis, trans=1)
    y = np.zeros(m)
    y[solution.rows] = y_kept * solution.row_signs[solution.rows]
    return y


def basis_bootstrap_ci(spec: LinearProgramSpec, records, config: InferenceConfig | None = None) -> ConfidenceReport:
    """Bootstrap over near-optimal bases of each endpoint program.

    Each endpoint is the value of a minimisation (the upper bound via the
    negated objective). That value equals the largest ``b @ y`` over the dual
    vertices ``y`` of the optimal bases, so its bootstrap law is approximated
    by the largest replicate deviation ``sqrt(n) * (b* - b_hat) @ y`` over the
    bases whose value at ``b_hat`` is within ``c_n`` of the optimum. Candidate
    bases are the optimal bases of the estimate and of every replicate.
    """
    config = config or InferenceConfig(method="basis_bootstrap")
    t0 = time.perf_counter()
    arr = records_to_array(records)
    obs = empirical_cells(arr)
    _check_blocks(spec, obs)
    n = arr.shape[0]
    point = bounds(spec, obs, tol=config.tol, drop_zero_cells=False)
    c_n = n ** -config.c_n_rule
    diag = {"replicates": config.reps, "c_n": c_n}
    if point.is_empty:
        diag.update(status="empty", infeasible_replicates=None)
        return ConfidenceReport("basis_bootstrap", np.nan, np.nan, point, config.alpha, diag)
    boots = _bootstrap_cells(arr, config.reps, config.seed, config.threads)
    b_hat = spec.rhs(obs)
    m = b_hat.size
    ends = {}
    for sense, sol in (("min", point.solution_lower), ("max", point.solution_upper)):
        lp_hat = spec.standard_lp(obs, sense)
        v_hat = sol.value
        candidates = {_basis_key(sol): sol}
        rep_b = []
        infeasible = 0
        for bo in boots:
            if tuple(bo.active_blocks) != tuple(spec.blocks):
                infeasible += 1
                continue
            b_r = spec.rhs(bo)
            res = lpsolve.resolve_rhs(lp_hat, sol, b_r, tol=config.tol)
            if not res.ok:
                infeasible += 1
                continue
            candidates.setdefault(_basis_key(res.solution), res.solution)
            rep_b.append(b_r)
        Y = []
        for s in candidates.values():
            try:
                y = dual_vertex(s, m)
            except (ValueError, np.linalg.LinAlgError):  # pragma: no cover - factor is valid
                continue
            if np.isfinite(y).all() and b_hat @ y >= v_hat - c_n:
                Y.append(y)
        Y = np.array(Y)
        if not rep_b:
            ends[sense] = (np.nan, infeasible, len(Y), [])
            continue
        stats = (np.sqrt(n) * (np.array(rep_b) - b_hat) @ Y.T).max(axis=1)
        q = _quantile(stats, 1 - config.alpha)
        ends[sense] = (v_hat - q / np.sqrt(n), infeasible, len(Y), stats.tolist())
    lower = ends["min"][0]
    upper = -ends["max"][0]
    diag.update(
        infeasible_replicates={"lower": ends["min"][1], "upper": ends["max"][1]},
        near_optimal_bases={"lower": ends["min"][2], "upper": ends["max"][2]},
        degenerate={"lower": bool(point.solution_lower.degenerate), "upper": bool(point.solution_upper.degenerate)},
        status="interval",
        seconds=time.perf_counter() - t0,
    )
    if config.keep_draws:
        diag["draws"] = {"lower": ends["min"][3], "upper": ends["max"][3]}
    return ConfidenceReport("basis_bootstrap", lower, upper, point, config.alpha, diag)


# --- numerical delta ---------------------------------------------------------

def numerical_delta_ci(spec: LinearProgramSpec, records, config: InferenceConfig | None = None) -> ConfidenceReport:
    """Finite-difference bootstrap of the value function at each endpoint."""
    config = config or InferenceConfig(method="numerical_delta")
    t0 = time.perf_counter()
    arr = records_to_array(records)
    obs = empirical_cells(arr)
    _check_blocks(spec, obs)
    n = arr.shape[0]
    point = bounds(spec, obs, tol=config.tol, drop_zero_cells=False)
    e_n = n ** -config.e_n_rule
    diag = {"replicates": config.reps, "e_n": e_n}
    if point.is_empty:
        diag.update(status="empty")
        return ConfidenceReport("numerical_delta", np.nan, np.nan, point, config.alpha, diag)
    boots = _bootstrap_cells(arr, config.reps, config.seed, config.threads)
    projected = 0
    perturbed = []
    for bo in boots:
        w = np.sqrt(n) * (bo.cells - obs.cells)
        p = obs.cells + e_n * w
        if (p < 0).any():
            projected += 1
            for k in spec.blocks:
                p[16 * k: 16 * k + 16] = _project_simplex(p[16 * k: 16 * k + 16])
        perturbed.append(p)
    ends = {}
    for sense, sol, v_hat in (("min", point.solution_lower, point.lower), ("max", point.solution_upper, point.upper)):
        deriv = []
        infeasible = 0
        lp_hat = spec.standard_lp(obs, sense)
        for p in perturbed:
            res = lpsolve.resolve_rhs(lp_hat, sol, spec.rhs(p), tol=config.tol)
            if not res.ok:
                infeasible += 1
                continue
            v = res.value if sense == "min" else -res.value
            deriv.append((v - v_hat) / e_n)
        c = _quantile(np.abs(deriv), 1 - config.alpha) if deriv else np.nan
        ends[sense] = (c, infeasible, deriv)
    if config.keep_draws:
        diag["draws"] = {"lower": ends["min"][2], "upper": ends["max"][2]}
    lower = point.lower - ends["min"][0] / np.sqrt(n)
    upper = point.upper + ends["max"][0] / np.sqrt(n)
    diag.update(
        projected_replicates=projected,
        infeasible_replicates={"lower": ends["min"][1], "upper": ends["max"][1]},
        status="interval",
        seconds=time.perf_counter() - t0,
    )
    return ConfidenceReport("numerical_delta", lower, upper, point, config.alpha, diag)


def confidence_interval(spec: LinearProgramSpec, records, config: InferenceConfig) -> ConfidenceReport:
    """Dispatch on ``config.method``."""
    if config.method == "relaxed_box":
        return relaxed_box_ci(spec, records, config)
    if config.method == "basis_bootstrap":
        return basis_bootstrap_ci(spec, records, config)
    return numerical_delta_ci(spec, records, config)
