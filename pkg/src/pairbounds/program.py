"""Linear programs over pair-type distributions and the identified intervals they give.

Each admissible pair type lands in exactly one observable cell per active offer
block, so the observed distribution is a linear image ``p = A @ mu`` of the
type distribution ``mu``. Bounds on a linear estimand are the minimum and
maximum of its objective over ``mu >= 0`` with ``A @ mu = p``, ``sum(mu) = 1``
and any mass-bound inequalities.

Types that share a column of ``A``, an objective coefficient and a
mass-bound weight vector are interchangeable, so the builder merges them and
keeps a multiplicity plus one representative.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from . import lpsolve
from .restrictions import HardFilter, MassBound, Restriction, compile_restriction
from .typespace import (
    PairType,
    TypeSpaceConfig,
    brf_table,
    iter_pair_arrays,
    po_table,
    selection_at,
)

N_CELLS = 64


class EmptyTypeSpace(ValueError):
    """Every pair type was removed by the hard filters."""


class SolverFailure(RuntimeError):
    """The LP solver reported a numerical failure."""


# --- estimands ---------------------------------------------------------------

@dataclass(frozen=True)
class FixedAllocation:
    """Mean outcome of one member at ``alloc1`` minus at ``alloc2``.

    Allocations are ``(own treatment, partner treatment)`` from the scoped
    member's point of view. ``alloc2=None`` gives the mean level at ``alloc1``.
    """

    member: int = 1
    alloc1: tuple[int, int] = (1, 0)
    alloc2: tuple[int, int] | None = (0, 0)

    def __post_init__(self):
        _check_member(self.member)
        for a in (self.alloc1, self.alloc2):
            if a is not None and (len(a) != 2 or any(v not in (0, 1) for v in a)):
                raise ValueError(f"allocation must be a pair of binaries, got {a}")
        object.__setattr__(self, "alloc1", tuple(int(v) for v in self.alloc1))
        if self.alloc2 is not None:
            object.__setattr__(self, "alloc2", tuple(int(v) for v in self.alloc2))

    @property
    def extra_profiles(self) -> tuple:
        return ()

    def objective(self, s, s_other, e):
        own = s if self.member == 1 else s_other
        d, do = self.alloc1
        val = (own >> (2 * d + do)) & 1
        if self.alloc2 is not None:
            d, do = self.alloc2
            val = val - ((own >> (2 * d + do)) & 1)
        return np.asarray(val, dtype=np.int64)

    def brf_feature(self, s, s_other):
        return np.zeros(np.shape(s), dtype=np.int64)

    def to_dict(self) -> dict:
        return {"kind": "fixed_allocation", "member": self.member, "alloc1": list(self.alloc1),
                "alloc2": None if self.alloc2 is None else list(self.alloc2)}


def ADE(member: int = 1) -> FixedAllocation:
    """Own treatment on versus off, partner untreated."""
    return FixedAllocation(member, (1, 0), (0, 0))


def ASE(member: int = 1) -> FixedAllocation:
    """Partner treatment on versus off, own treatment off."""
    return FixedAllocation(member, (0, 1), (0, 0))


@dataclass(frozen=True)
class PolicyTarget:
    """Mean outcome of a member forced to ``d_forced`` while the partner best-responds.

    ``offers = (target offer, partner offer)``. The partner's take-up is
    ``D_partner(partner offer, target offer, d_forced)``. ``contrast`` is an
    optional ``(d_forced, offers)`` pair whose value is subtracted.
    """

    member: int = 1
    d_forced: int = 1
    offers: tuple[int, int] = (0, 0)
    contrast: tuple | None = None

    def __post_init__(self):
        _check_member(self.member)
        if self.d_forced not in (0, 1) or any(v not in (0, 1) for v in self.offers):
            raise ValueError("d_forced and offers must be binary")
        object.__setattr__(self, "offers", tuple(int(v) for v in self.offers))
        if self.contrast is not None:
            d, offers = self.contrast
            if d not in (0, 1) or any(v not in (0, 1) for v in offers):
                raise ValueError("contrast must be (d_forced, (target offer, partner offer))")
            object.__setattr__(self, "contrast", (int(d), tuple(int(v) for v in offers)))

    def _terms(self):
        out = [(1, self.d_forced, self.offers)]
        if self.contrast is not None:
            out.append((-1, self.contrast[0], self.contrast[1]))
        return out

    @property
    def extra_profiles(self) -> tuple:
        return tuple(2 * zp + zt for _, _, (zt, zp) in self._terms())

    def _partner_bits(self, s, s_other):
        partner = s_other if self.member == 1 else s
        bits = []
        for _, d, (zt, zp) in self._terms():
            bits.append((partner >> (4 + 2 * (2 * zp + zt) + d)) & 1)
        return bits

    def objective(self, s, s_other, e):
        own = s if self.member == 1 else s_other
        val = np.zeros(np.shape(s), dtype=np.int64)
        for (sign, d, _), b in zip(self._terms(), self._partner_bits(s, s_other)):
            val = val + sign * ((own >> (2 * d + b)) & 1)
        return val

    def brf_feature(self, s, s_other):
        bits = self._partner_bits(s, s_other)
        out = np.zeros(np.shape(s), dtype=np.int64)
        for i, b in enumerate(bits):
            out |= np.asarray(b, dtype=np.int64) << i
        return out

    def to_dict(self) -> dict:
        d = {"kind": "policy_target", "member": self.member, "d_forced": self.d_forced, "offers": list(self.offers)}
        if self.contrast is not None:
            d["contrast"] = {"d_forced": self.contrast[0], "offers": list(self.contrast[1])}
        return d


Estimand = FixedAllocation | PolicyTarget


def _check_member(member):
    if member not in (1, 2):
        raise ValueError(f"member must be 1 or 2, got {member}")


def objective_theta(pair: PairType, estimand: FixedAllocation) -> int:
    return int(estimand.objective(np.int64(pair.s), np.int64(pair.s_other), np.int64(pair.e_code)))


def objective_gamma(pair: PairType, estimand: PolicyTarget) -> int:
    return int(estimand.objective(np.int64(pair.s), np.int64(pair.s_other), np.int64(pair.e_code)))


# --- columns -----------------------------------------------------------------

def signature_array(s, s_other, e, blocks: Sequence[int]) -> np.ndarray:
    """Within-block cell ``8y + 4y' + 2d + d'`` for each active block, shape ``(n, len(blocks))``."""
    s, s_other, e = (np.atleast_1d(np.asarray(a, dtype=np.int64)) for a in (s, s_other, e))
    out = np.empty((s.size, len(blocks)), dtype=np.int64)
    for j, k in enumerate(blocks):
        v = selection_at(e, k)
        d, do = v >> 1, v & 1
        y = (s >> (2 * d + do)) & 1
        y2 = (s_other >> (2 * do + d)) & 1
        out[:, j] = 8 * y + 4 * y2 + 2 * d + do
    return out


def column_of(pair: PairType, config: TypeSpaceConfig | None = None) -> tuple[int, ...]:
    """Global cell rows ``16*block + within`` hit by ``pair`` on each active block."""
    config = config or TypeSpaceConfig()
    sig = signature_array(pair.s, pair.s_other, pair.e_code, config.active_profiles)[0]
    return tuple(int(16 * k + c) for k, c in zip(config.active_profiles, sig))


def cell_vector(s, s_other, e, masses, blocks: Sequence[int] = (0, 1, 2, 3)) -> np.ndarray:
    """``A @ mu`` over the 64 cells for a distribution on raw pair types."""
    sig = signature_array(s, s_other, e, blocks)
    p = np.zeros(N_CELLS)
    masses = np.asarray(masses, dtype=float)
    for j, k in enumerate(blocks):
        p += np.bincount(16 * k + sig[:, j], weights=masses, minlength=N_CELLS)
    return p


# --- program -----------------------------------------------------------------

@dataclass
class LinearProgramSpec:
    """Deduplicated column set with everything needed to solve for bounds.

    Attributes
    ----------
    signature : (n_col, n_blocks) int array of within-block cells
    objective : (n_col,) int array
    weights : (n_col, n_bounds) int array of mass-bound violation counts
    multiplicity : (n_col,) number of raw pair types merged into each column
    representative : (n_col, 3) raw ``(s, s_other, e_code)`` of one merged type
    """

    config: TypeSpaceConfig
    estimand: object
    constraints: list
    signature: np.ndarray
    objective: np.ndarray
    weights: np.ndarray
    multiplicity: np.ndarray
    representative: np.ndarray
    eps: np.ndarray
    p: np.ndarray | None = None
    build_seconds: float = 0.0
    _cache: dict = field(default_factory=dict, repr=False)

    @property
    def blocks(self) -> tuple[int, ...]:
        return self.config.active_profiles

    @property
    def n_columns(self) -> int:
        return int(self.objective.size)

    @property
    def raw_count(self) -> int:
        return int(self.multiplicity.sum())

    def with_p(self, p) -> "LinearProgramSpec":
        out = LinearProgramSpec(**{k: getattr(self, k) for k in (
            "config", "estimand", "constraints", "signature", "objective", "weights",
            "multiplicity", "representative", "eps")}, build_seconds=self.build_seconds)
        out.p = _as_cells(p)
        out._cache = self._cache
        return out

    # standard form ---------------------------------------------------------
    def _presolved(self):
        """Columns kept after removing zero-budget violators, and the kept bound rows."""
        if "presolve" not in self._cache:
            keep = np.ones(self.n_columns, dtype=bool)
            bound_rows = []
            for i, eps in enumerate(self.eps):
                if eps == 0.0:
                    keep &= self.weights[:, i] == 0
                else:
                    bound_rows.append(i)
            self._cache["presolve"] = (np.flatnonzero(keep), np.array(bound_rows, dtype=np.int64))
        return self._cache["presolve"]

    def equality_matrix(self) -> np.ndarray:
        """Cell rows (last cell of each block dropped), the ones row and mass-bound rows with slacks."""
        if "matrix" not in self._cache:
            cols, bound_rows = self._presolved()
            nb = len(self.blocks)
            n = cols.size
            m = 15 * nb + 1 + bound_rows.size
            A = np.zeros((m, n + bound_rows.size))
            sig = self.signature[cols]
            for j in range(nb):
                hit = sig[:, j] < 15
                A[15 * j + sig[hit, j], np.flatnonzero(hit)] = 1.0
            A[15 * nb, :n] = 1.0
            for i, r in enumerate(bound_rows):
                A[15 * nb + 1 + i, :n] = self.weights[cols, r]
                A[15 * nb + 1 + i, n + i] = 1.0
            self._cache["matrix"] = A
        return self._cache["matrix"]

    def rhs(self, p=None) -> np.ndarray:
        p = _as_cells(self.p if p is None else p)
        if p is None:
            raise ValueError("no observed distribution supplied")
        _, bound_rows = self._presolved()
        parts = [p[16 * k: 16 * k + 15] for k in self.blocks]
        return np.concatenate(parts + [[1.0], self.eps[bound_rows]])

    def cost(self, sense: str = "min") -> np.ndarray:
        cols, bound_rows = self._presolved()
        c = np.concatenate([self.objective[cols].astype(float), np.zeros(bound_rows.size)])
        return c if sense == "min" else -c

    def standard_lp(self, p=None, sense: str = "min") -> lpsolve.StandardLP:
        return lpsolve.StandardLP(self.equality_matrix(), self.rhs(p), self.cost(sense))

    def column_mass(self, x: np.ndarray) -> np.ndarray:
        """Map a standard-form solution back to masses on all columns."""
        cols, _ = self._presolved()
        mu = np.zeros(self.n_columns)
        mu[cols] = x[: cols.size]
        return mu

    def full_matrix(self) -> np.ndarray:
        """The (64 x n_col) cell incidence matrix including inactive-block zero rows."""
        A = np.zeros((N_CELLS, self.n_columns))
        for j, k in enumerate(self.blocks):
            A[16 * k + self.signature[:, j], np.arange(self.n_columns)] = 1.0
        return A

    def write_triplets(self, path) -> None:
        """Write the standard-form matrix as ``row col value`` lines."""
        A = self.equality_matrix()
        r, c = np.nonzero(A)
        with open(path, "w") as fh:
            fh.write(f"# rows={A.shape[0]} cols={A.shape[1]}\n")
            for i, j in zip(r, c):
                fh.write(f"{i} {j} {A[i, j]:.17g}\n")

    def stats(self) -> dict:
        A = self.equality_matrix()
        return {
            "raw_pair_types": self.raw_count,
            "columns": self.n_columns,
            "dedup_ratio": self.raw_count / max(1, self.n_columns),
            "rows": int(A.shape[0]),
            "rank": int(np.linalg.matrix_rank(A[:, : self._presolved()[0].size])) if A.size else 0,
            "active_blocks": list(self.blocks),
            "build_seconds": self.build_seconds,
        }


def _as_cells(p):
    if p is None:
        return None
    cells = getattr(p, "cells", p)
    cells = np.asarray(cells, dtype=float).ravel()
    if cells.size != N_CELLS:
        raise ValueError(f"observed distribution must have 64 cells, got {cells.size}")
    return cells


def _normalise_constraints(constraints):
    out = []
    for c in constraints or ():
        if isinstance(c, Restriction):
            c = compile_restriction(c)
        elif isinstance(c, str):
            c = compile_restriction(Restriction.parse(c))
        out.append(c)
    return out


def build_program(
    config: TypeSpaceConfig | None = None,
    constraints: Sequence = (),
    estimand=None,
    observed=None,
    dedup: bool = True,
    extra_filters: Sequence = (),
    type_set=None,
) -> LinearProgramSpec:
    """Enumerate the admissible type space and assemble its deduplicated LP.

    Parameters
    ----------
    config : TypeSpaceConfig, optional
        Active offer blocks and class pre-filter. If ``observed`` is given and
        ``config`` is omitted, the active blocks are taken from the data.
    constraints : sequence of Restriction, compiled constraints, or strings
    estimand : FixedAllocation or PolicyTarget, default ADE for member 1
    observed : ObservedDistribution or 64-array, optional
    dedup : bool
        Merge interchangeable types; ``False`` keeps one column per raw type.
    extra_filters : sequence of callables
        Additional hard filters ``f(s, s_other, e, config) -> bool array``
        evaluated on raw types (forces the slower raw enumeration).
    type_set : tuple of three int arrays, optional
        Explicit universe ``(s, s_other, e_code)`` of Nash-admissible pair
        types to use in place of the enumerated space. Hard filters still
        apply.

    Raises
    ------
    EmptyTypeSpace
        If no pair type survives the hard filters.
    """
    t0 = time.perf_counter()
    estimand = estimand if estimand is not None else ADE()
    if config is None:
        blocks = tuple(getattr(observed, "active_blocks", (0, 1, 2, 3)))
        config = TypeSpaceConfig(active_profiles=blocks)
    needed = set(estimand.extra_profiles) - set(config.relevant_profiles)
    if needed:
        config = TypeSpaceConfig(config.active_profiles, config.class_filter,
                                 tuple(sorted(set(config.extra_profiles) | needed)))
    if observed is not None and hasattr(observed, "active_blocks"):
        if tuple(observed.active_blocks) != tuple(config.active_profiles):
            raise ValueError(
                f"observed active blocks {tuple(observed.active_blocks)} differ from config {config.active_profiles}")
    compiled = _normalise_constraints(constraints)
    hard = [c for c in compiled if isinstance(c, HardFilter)]
    bounds = [c for c in compiled if isinstance(c, MassBound)]
    if len(bounds) > 10:
        raise ValueError("at most 10 mass bounds are supported")
    blocks = config.active_profiles

    fast = type_set is None and dedup and not extra_filters and all(c.level in ("brf", "po") for c in compiled)
    if fast:
        cols = _columns_factored(config, hard, bounds, estimand)
    else:
        cols = _columns_raw(config, hard, bounds, estimand, dedup, extra_filters, type_set)
    if cols is None:
        raise EmptyTypeSpace("no admissible pair type survives the restrictions")
    sig, obj, w, mult, rep = cols
    spec = LinearProgramSpec(
        config=config,
        estimand=estimand,
        constraints=compiled,
        signature=sig,
        objective=obj,
        weights=w,
        multiplicity=mult,
        representative=rep,
        eps=np.array([b.eps for b in bounds], dtype=float),
        p=_as_cells(observed),
    )
    spec.build_seconds = time.perf_counter() - t0
    return spec


def _pack_keys(sig, obj, w):
    key = np.zeros(sig.shape[0], dtype=np.int64)
    for j in range(sig.shape[1]):
        key = key << 4 | sig[:, j]
    key = key << 2 | (obj + 1)
    for i in range(w.shape[1]):
        if w[:, i].max(initial=0) > 15:
            raise ValueError("mass-bound weight exceeds packing width")
        key = key << 4 | w[:, i]
    return key


def _columns_factored(config, hard, bounds, estimand):
    brf_hard = [h.mask for h in hard if h.level == "brf"]
    po_hard = [h.mask for h in hard if h.level == "po"]
    b1, b2, e = brf_table(config, brf_hard)
    p1, p2 = po_table(po_hard, config)
    if b1.size == 0 or p1.size == 0:
        return None
    s_b, s2_b = b1 << 4, b2 << 4
    zero = np.zeros_like(e)
    brf_w = np.stack([b.weight(s_b, s2_b, e, config) if b.level == "brf" else zero for b in bounds], axis=1) \
        if bounds else np.zeros((e.size, 0), dtype=np.int64)
    feat = estimand.brf_feature(s_b, s2_b)
    bkey = np.stack([e, feat] + [brf_w[:, i] for i in range(brf_w.shape[1])], axis=1)
    _, first, counts = np.unique(bkey, axis=0, return_index=True, return_counts=True)
    rb1, rb2, re_ = b1[first], b2[first], e[first]
    rw = brf_w[first]

    po_zero = np.zeros_like(p1)
    po_w = np.stack([b.weight(p1, p2, po_zero, config) if b.level == "po" else po_zero for b in bounds], axis=1) \
        if bounds else np.zeros((p1.size, 0), dtype=np.int64)

    nc, npo = rb1.size, p1.size
    s = (np.repeat(rb1, npo) << 4) | np.tile(p1, nc)
    s2 = (np.repeat(rb2, npo) << 4) | np.tile(p2, nc)
    ee = np.repeat(re_, npo)
    cnt = np.repeat(counts, npo)
    w = np.repeat(rw, npo, axis=0) + np.tile(po_w, (nc, 1))
    return _merge(s, s2, ee, cnt, w, config, estimand)


def _merge(s, s2, e, cnt, w, config, estimand):
    sig = signature_array(s, s2, e, config.active_profiles)
    obj = estimand.objective(s, s2, e)
    key = _pack_keys(sig, obj, w)
    # representative = smallest raw (s, s_other, e) within each key
    order = np.lexsort((e, s2, s, key))
    key_sorted = key[order]
    start = np.concatenate([[True], key_sorted[1:] != key_sorted[:-1]])
    first = order[start]
    group = np.cumsum(start) - 1
    mult = np.bincount(group, weights=cnt[order]).astype(np.int64)
    rep = np.stack([s[first], s2[first], e[first]], axis=1)
    return sig[first], obj[first], w[first], mult, rep


def _explicit_types(config, type_set, filters):
    s, s2, e = (np.atleast_1d(np.asarray(a, dtype=np.int64)) for a in type_set)
    for i in range(s.size):
        if not PairType.from_codes(int(s[i]), int(s2[i]), int(e[i]), config.active_profiles).is_admissible():
            raise ValueError(f"type_set entry {i} is not Nash-admissible on the active blocks")
    for f in filters:
        keep = np.asarray(f(s, s2, e, config), dtype=bool)
        s, s2, e = s[keep], s2[keep], e[keep]
    if s.size:
        yield s, s2, e


def _columns_raw(config, hard, bounds, estimand, dedup, extra_filters, type_set=None):
    filters = [h.mask for h in hard] + list(extra_filters)
    parts = []
    source = iter_pair_arrays(config, filters, chunk=1 << 19) if type_set is None \
        else _explicit_types(config, type_set, filters)
    for s, s2, e in source:
        w = np.stack([b.weight(s, s2, e, config) for b in bounds], axis=1) if bounds \
            else np.zeros((s.size, 0), dtype=np.int64)
        cnt = np.ones(s.size, dtype=np.int64)
        if dedup:
            sig, obj, ww, mult, rep = _merge(s, s2, e, cnt, w, config, estimand)
            parts.append((rep[:, 0], rep[:, 1], rep[:, 2], mult, ww))
        else:
            parts.append((s, s2, e, cnt, w))
    if not parts:
        return None
    s, s2, e, cnt, w = (np.concatenate([p[i] for p in parts]) for i in range(5))
    if dedup:
        return _merge(s, s2, e, cnt, w, config, estimand)
    order = np.lexsort((e, s2, s))
    s, s2, e, cnt, w = s[order], s2[order], e[order], cnt[order], w[order]
    sig = signature_array(s, s2, e, config.active_profiles)
    obj = estimand.objective(s, s2, e)
    return sig, obj, w, cnt, np.stack([s, s2, e], axis=1)


def admissible_arrays(config: TypeSpaceConfig, constraints: Sequence = ()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """All raw ``(s, s_other, e_code)`` surviving the hard filters among ``constraints``."""
    hard = [c for c in _normalise_constraints(constraints) if isinstance(c, HardFilter)]
    chunks = list(iter_pair_arrays(
        config,
        [h.mask for h in hard if h.level == "pair"],
        brf_filters=[h.mask for h in hard if h.level == "brf"],
        po_filters=[h.mask for h in hard if h.level == "po"],
    ))
    if not chunks:
        empty = np.zeros(0, dtype=np.int64)
        return empty, empty, empty
    s, s2, e = (np.concatenate([c[i] for c in chunks]) for i in range(3))
    order = np.lexsort((e, s2, s))
    return s[order], s2[order], e[order]


# --- bounds ------------------------------------------------------------------

@dataclass
class IdentifiedInterval:
    """Sharp bounds, or ``status == "empty"`` when no distribution fits the data."""

    lower: float
    upper: float
    status: str
    witness_lower: np.ndarray | None = None
    witness_upper: np.ndarray | None = None
    solution_lower: object = None
    solution_upper: object = None
    message: str = ""

    @property
    def is_empty(self) -> bool:
        return self.status == "empty"

    @property
    def width(self) -> float:
        return self.upper - self.lower if not self.is_empty else np.nan

    def contains(self, value: float, tol: float = 1e-9) -> bool:
        return (not self.is_empty) and self.lower - tol <= value <= self.upper + tol

    def to_dict(self) -> dict:
        if self.is_empty:
            return {"status": "empty", "lower": None, "upper": None}
        return {"status": "interval", "lower": float(self.lower), "upper": float(self.upper)}


def zero_cell_columns(spec: LinearProgramSpec, p) -> np.ndarray:
    """Standard-form columns that may stay positive when ``p`` has empty cells.

    A column hitting a cell with zero probability must carry zero mass, so it
    can be removed before solving. Slack columns are always kept.
    """
    p = _as_cells(p)
    cols, bound_rows = spec._presolved()
    ok = np.ones(cols.size, dtype=bool)
    sig = spec.signature[cols]
    for j, k in enumerate(spec.blocks):
        ok &= p[16 * k + sig[:, j]] > 0
    return np.concatenate([np.flatnonzero(ok), cols.size + np.arange(bound_rows.size)])


def bounds(spec: LinearProgramSpec, p=None, tol: float = lpsolve.DEFAULT_TOL, drop_zero_cells: bool = True) -> IdentifiedInterval:
    """Minimise and maximise the estimand over the feasible type distributions.

    With ``drop_zero_cells`` the columns ruled out by empty cells are removed
    first, which avoids long degenerate pivoting sequences on sparse data. The
    returned :class:`~pairbounds.lpsolve.BasicSolution` objects then refer to
    the reduced program, so callers that warm-start from them pass ``False``.
    """
    A = spec.equality_matrix()
    b = spec.rhs(p)
    keep = None
    if drop_zero_cells:
        keep = zero_cell_columns(spec, spec.p if p is None else p)
        if keep.size == A.shape[1]:
            keep = None
        else:
            A = A[:, keep]
    out = []
    for sense in ("min", "max"):
        c = spec.cost(sense)
        res = lpsolve.solve(lpsolve.StandardLP(A, b, c if keep is None else c[keep]), tol=tol)
        if res.status is lpsolve.Status.NUMERICAL_FAILURE:
            raise SolverFailure(res.message)
        if res.status is lpsolve.Status.UNBOUNDED:  # pragma: no cover - region is bounded
            raise SolverFailure("unexpected unbounded program")
        out.append(res)
    lo, hi = out
    if lo.status is lpsolve.Status.INFEASIBLE or hi.status is lpsolve.Status.INFEASIBLE:
        if lo.status is not hi.status:
            raise SolverFailure("min and max solves disagree on feasibility")
        return IdentifiedInterval(np.nan, np.nan, "empty", message=lo.message)

    def lift(x):
        if keep is None:
            return x
        full = np.zeros(spec.equality_matrix().shape[1])
        full[keep] = x
        return full

    return IdentifiedInterval(
        lower=lo.value,
        upper=-hi.value,
        status="interval",
        witness_lower=spec.column_mass(lift(lo.solution.x)),
        witness_upper=spec.column_mass(lift(hi.solution.x)),
        solution_lower=lo.solution,
        solution_upper=hi.solution,
    )


def identified_interval(config, constraints, estimand, observed, tol: float = lpsolve.DEFAULT_TOL) -> IdentifiedInterval:
    """Build the program and solve it in one call."""
    spec = build_program(config, constraints, estimand, observed)
    return bounds(spec, tol=tol)


def witness_summary(spec: LinearProgramSpec, mu: np.ndarray, top: int = 5) -> list[dict]:
    """Largest-mass columns with a representative raw type each."""
    if mu is None:
        return []
    idx = np.argsort(-mu, kind="stable")[:top]
    out = []
    for i in idx:
        if mu[i] <= 0:
            break
        s, s2, e = (int(v) for v in spec.representative[i])
        out.append({"mass": float(mu[i]), "s": s, "s_other": s2, "e_code": e,
                    "merged_types": int(spec.multiplicity[i]), "objective": int(spec.objective[i])})
    return out
