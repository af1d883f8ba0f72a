"""Executable checks of the structural results on random feasible data.

Each check returns a :class:`TheoremCheckResult`. All randomness flows from the
``seed`` argument, so results are reproducible.
"""
from __future__ import annotations

import copy
import functools
import itertools
import time
from dataclasses import dataclass, field

import numpy as np

from . import lpsolve
from .program import (
    ADE,
    ASE,
    EmptyTypeSpace,
    FixedAllocation,
    PolicyTarget,
    bounds,
    build_program,
    cell_vector,
    signature_array,
)
from .simulate import random_type_dgp
from .typespace import (
    PROFILES,
    TypeSpaceConfig,
    encode_type,
    nash_mask,
    pack_selection,
)

EQUIVALENCE_TOL = 1e-7
MIXTURE_TOL = 1e-9
EXACT_TOL = 1e-12


@dataclass
class TheoremCheckResult:
    name: str
    passed: bool
    max_discrepancy: float
    tolerance: float
    details: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "passed": bool(self.passed),
            "max_discrepancy": float(self.max_discrepancy),
            "tolerance": float(self.tolerance),
            "wall_time": float(self.wall_time),
            "details": self.details,
        }


# --- random instances ----------------------------------------------------------

def random_config(rng: np.random.Generator, scale: str) -> TypeSpaceConfig:
    """One random active offer block at reduced scale, all four otherwise."""
    if scale == "reduced":
        return TypeSpaceConfig(active_profiles=(int(rng.integers(4)),))
    if scale == "full":
        return TypeSpaceConfig()
    raise ValueError(f"scale must be 'reduced' or 'full', got {scale!r}")


def random_theta(rng: np.random.Generator) -> FixedAllocation:
    allocs = [(0, 0), (0, 1), (1, 0), (1, 1)]
    i, j = rng.choice(4, size=2, replace=False)
    return FixedAllocation(int(rng.integers(1, 3)), allocs[i], allocs[j])


def random_feasible_cells(config: TypeSpaceConfig, rng: np.random.Generator, size: int = 30, filters=()) -> np.ndarray:
    """``p = A @ mu`` for Dirichlet masses on random admissible pair types."""
    dgp = random_type_dgp(rng, config, size=size, filters=filters)
    return cell_vector(dgp.s, dgp.s_other, dgp.e_code, dgp.masses, config.active_profiles)


def _endpoint_gap(a, b) -> float:
    if a.is_empty or b.is_empty:
        return 0.0 if a.is_empty and b.is_empty else np.inf
    return max(abs(a.lower - b.lower), abs(a.upper - b.upper))


def _interval(iv):
    return None if iv.is_empty else [float(iv.lower) + 0.0, float(iv.upper) + 0.0]


# --- subspace equivalences --------------------------------------------------

def _subspace_check(name, subspaces, trials, scale, seed, tol=EQUIVALENCE_TOL):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    details, worst = [], 0.0
    for t in range(trials):
        config = random_config(rng, scale)
        estimand = random_theta(rng)
        p = random_feasible_cells(config, rng)
        ref = bounds(build_program(config, [], estimand, p))
        rec = {"trial": t, "blocks": list(config.active_profiles), "estimand": estimand.to_dict(),
               "full": _interval(ref)}
        gap = 0.0
        for sub in subspaces:
            cfg = TypeSpaceConfig(config.active_profiles, class_filter=sub)
            iv = bounds(build_program(cfg, [], estimand, p))
            rec[sub] = _interval(iv)
            gap = max(gap, _endpoint_gap(ref, iv))
        rec["discrepancy"] = gap
        worst = max(worst, gap)
        details.append(rec)
    return TheoremCheckResult(name, worst <= tol, worst, tol, details, time.perf_counter() - t0)


def check_dominance_equivalence(trials: int = 50, scale: str = "reduced", seed: int = 0) -> TheoremCheckResult:
    """Fixed-allocation bounds over the full space equal those over dominant-only types.

    The details also carry the policy-targeting contrast on the counterexample
    space, where the two spaces differ by design.
    """
    res = _subspace_check("dominance_equivalence", ["dominant"], trials, scale, seed)
    res.details.append({"policy_target_contrast": copy.deepcopy(_counterexample_intervals())})
    return res


def check_symmetry_equivalence(trials: int = 50, scale: str = "reduced", seed: int = 0) -> TheoremCheckResult:
    """Fixed-allocation bounds over the full space equal those over symmetric-only types."""
    res = _subspace_check("symmetry_equivalence", ["symmetric"], trials, scale, seed)
    res.details.append({"policy_target_contrast": copy.deepcopy(_counterexample_intervals())})
    return res


def check_sandwich(trials: int = 20, scale: str = "reduced", seed: int = 0) -> TheoremCheckResult:
    """Supermodular-only, submodular-only and dominant-only bounds coincide."""
    return _subspace_check("super_submodular_sandwich", ["supermodular", "submodular", "dominant"], trials, scale, seed)


# --- deterministic selections suffice -------------------------------------------

def _selection_options(s, s2, blocks):
    per = []
    for k in blocks:
        m = int(nash_mask(s, s2, k))
        per.append([(k, (v >> 1, v & 1)) for v in range(4) if (m >> v) & 1])
    return [pack_selection(dict(choice)) for choice in itertools.product(*per)]


def check_deterministic_closure(trials: int = 20, seed: int = 0, scale: str = "reduced") -> TheoremCheckResult:
    """Adding stochastic-selection columns never moves the bounds.

    A stochastic selection rule for a fixed ``(s, s_other)`` produces a column
    that is a convex combination of that pair's deterministic-selection
    columns. Mixtures across different ``(s, s_other)`` are not formed.
    """
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    details, worst = [], 0.0
    for t in range(trials):
        config = random_config(rng, scale)
        blocks = config.active_profiles
        estimand = random_theta(rng)
        p = random_feasible_cells(config, rng)
        spec = build_program(config, [], estimand, p)
        base = bounds(spec)
        A = spec.equality_matrix()
        extra_cols, extra_obj = [], []
        tries = 0
        while len(extra_cols) < 40 and tries < 5000:
            tries += 1
            codes = config.individual_codes()
            s, s2 = (int(v) for v in rng.choice(codes, size=2))
            opts = _selection_options(s, s2, blocks)
            if len(opts) < 2:
                continue
            w = rng.dirichlet(np.ones(len(opts)))
            sig = signature_array(np.full(len(opts), s), np.full(len(opts), s2), np.array(opts), blocks)
            col = np.zeros(A.shape[0])
            for j in range(len(blocks)):
                for i in range(len(opts)):
                    if sig[i, j] < 15:
                        col[15 * j + sig[i, j]] += w[i]
            col[15 * len(blocks)] = 1.0
            obj = estimand.objective(np.full(len(opts), s), np.full(len(opts), s2), np.array(opts))
            extra_cols.append(col)
            extra_obj.append(float(np.dot(w, obj)))
        A_aug = np.hstack([A, np.array(extra_cols).T])
        b = spec.rhs()
        vals = []
        for sign in (1.0, -1.0):
            c = np.concatenate([spec.cost("min"), np.array(extra_obj)]) * sign
            res = lpsolve.solve(lpsolve.StandardLP(A_aug, b, c))
            vals.append(sign * res.value)
        gap = max(abs(vals[0] - base.lower), abs(vals[1] - base.upper))
        worst = max(worst, gap)
        details.append({"trial": t, "blocks": list(blocks), "mixture_columns": len(extra_cols),
                        "deterministic": _interval(base), "augmented": vals, "discrepancy": gap})
    return TheoremCheckResult("deterministic_closure", worst <= MIXTURE_TOL, worst, MIXTURE_TOL, details,
                              time.perf_counter() - t0)


# --- counterexample -------------------------------------------------------------

def counterexample_types() -> dict:
    """The two-pair counterexample space for policy targeting.

    Member 1 never takes up at offers ``(0, 0)``; member 2 takes up there only
    if member 1 does. At every other offer profile each member follows their
    own offer. Outcomes are 1 only under joint treatment. The variant partner
    ``s_tilde`` never takes up at ``(0, 0)`` either, which makes it identical to
    member 1's type, so the pair ``(s, s_tilde)`` is dominant.
    """
    outcomes = [0, 0, 0, 1]  # index 2d + d'
    resp_s, resp_partner = [], []
    for k, (z, _) in enumerate(PROFILES):
        for do in (0, 1):
            resp_s.append(0 if k == 0 else z)
            resp_partner.append(do if k == 0 else z)
    s = encode_type(outcomes, resp_s)
    partner = encode_type(outcomes, resp_partner)
    e = pack_selection({k: PROFILES[k] for k in range(4)})
    return {"s": s, "s_other": partner, "s_other_dominant": s, "e_code": e}


def counterexample_estimand() -> PolicyTarget:
    """Member 1 forced into treatment at offers ``(0, 0)``, partner best-responds."""
    return PolicyTarget(member=1, d_forced=1, offers=(0, 0))


def counterexample_type_set(config: TypeSpaceConfig | None = None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Both counterexample pairs, with response bits outside the relevant profiles cleared."""
    t = counterexample_types()
    keep = 0xF
    for k in (config or TypeSpaceConfig()).relevant_profiles:
        keep |= 0b11 << (4 + 2 * k)
    s = np.array([t["s"], t["s"]]) & keep
    s2 = np.array([t["s_other"], t["s_other_dominant"]]) & keep
    return s, s2, np.array([t["e_code"], t["e_code"]])


def _counterexample_interval(config, restrictions) -> dict:
    s, s2, e = counterexample_type_set(config)
    p = cell_vector(s[:1], s2[:1], e[:1], [1.0], blocks=config.active_profiles)
    try:
        spec = build_program(config, restrictions, counterexample_estimand(), p, type_set=(s, s2, e))
    except EmptyTypeSpace:
        return {"interval": None, "columns": 0}
    return {"interval": _interval(bounds(spec)), "columns": spec.n_columns}


@functools.lru_cache(maxsize=1)
def _counterexample_intervals() -> dict:
    """Policy-targeting intervals on the counterexample space under each restriction.

    The symmetric subspace is empty with all four offer profiles observed, since
    following one's own offer is asymmetric at ``(0, 1)``. The symmetry contrast is
    therefore also reported with only the diagonal profiles ``(0, 0)`` and ``(1, 1)``
    observed, where the dominant pair is symmetric.
    """
    full = TypeSpaceConfig()
    out = {}
    for label, cons in (("full", []), ("dominance", ["dominance"]), ("submodular", ["submodular"]),
                        ("supermodular", ["supermodular"]), ("symmetry", ["symmetry"])):
        out[label] = _counterexample_interval(full, cons)
    diagonal = TypeSpaceConfig(active_profiles=(0, 3))
    out["diagonal_full"] = _counterexample_interval(diagonal, [])
    out["diagonal_symmetry"] = _counterexample_interval(diagonal, ["symmetry"])
    return out


def check_counterexample() -> TheoremCheckResult:
    """Policy-targeting bounds shrink to ``[0, 0]`` under dominance or submodularity only."""
    t0 = time.perf_counter()
    got = copy.deepcopy(_counterexample_intervals())
    expected = {"full": [0.0, 1.0], "supermodular": [0.0, 1.0], "dominance": [0.0, 0.0],
                "submodular": [0.0, 0.0]}
    worst = 0.0
    for k, v in expected.items():
        iv = got[k]["interval"]
        worst = max(worst, np.inf if iv is None else max(abs(iv[0] - v[0]), abs(iv[1] - v[1])))
    spec = build_program(TypeSpaceConfig(), [], counterexample_estimand(), type_set=counterexample_type_set())
    same_signature = spec.n_columns == 2 and bool((spec.signature[0] == spec.signature[1]).all())
    objectives = sorted(int(v) for v in spec.objective)
    passed = worst <= EXACT_TOL and same_signature and objectives == [0, 1]
    details = [{"intervals": got, "expected": expected, "columns_share_signature": same_signature,
                "objectives": objectives}]
    return TheoremCheckResult("counterexample", passed, worst, EXACT_TOL, details, time.perf_counter() - t0)


# --- emptiness ------------------------------------------------------------------

def _asymmetric_filter(s, s2, e, config):
    """Pair types selecting (0,1) or (1,0) on some active block."""
    hit = np.zeros(np.shape(s), dtype=bool)
    for k in config.active_profiles:
        v = (e >> (2 * (3 - k))) & 3
        hit |= (v == 1) | (v == 2)
    return hit


def check_emptiness(seed: int = 0) -> TheoremCheckResult:
    """Dominance with symmetry is falsified by any asymmetric take-up mass."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    config = TypeSpaceConfig()
    asym = random_type_dgp(rng, config, size=10, filters=[_asymmetric_filter])
    rest = random_type_dgp(rng, config, size=20)
    s = np.concatenate([asym.s, rest.s])
    s2 = np.concatenate([asym.s_other, rest.s_other])
    e = np.concatenate([asym.e_code, rest.e_code])
    mu = np.concatenate([0.5 * asym.masses, 0.5 * rest.masses])
    p_asym = cell_vector(s, s2, e, mu)

    from .restrictions import Restriction, compile_restriction

    both = [compile_restriction(Restriction("dominance")), compile_restriction(Restriction("symmetry"))]
    sym_only = random_type_dgp(rng, config, size=20, filters=[m.mask for m in both])
    p_sym = cell_vector(sym_only.s, sym_only.s_other, sym_only.e_code, sym_only.masses)

    cases = []
    for est in (ADE(), counterexample_estimand()):
        for label, cons, p, want_empty in (
            ("dominance+symmetry, asymmetric cells", ["dominance", "symmetry"], p_asym, True),
            ("dominance only, asymmetric cells", ["dominance"], p_asym, False),
            ("symmetry only, asymmetric cells", ["symmetry"], p_asym, False),
            ("dominance+symmetry, symmetric cells", ["dominance", "symmetry"], p_sym, False),
        ):
            iv = bounds(build_program(config, cons, est, p))
            cases.append({"case": label, "estimand": est.to_dict(), "empty": iv.is_empty,
                          "expected_empty": want_empty, "interval": _interval(iv)})
    passed = all(c["empty"] == c["expected_empty"] for c in cases)
    asym_mass = float(sum(p_asym[16 * k + np.array([j for j in range(16) if (j & 3) in (1, 2)])].sum()
                          for k in range(4)))
    cases.append({"asymmetric_cell_mass": asym_mass})
    return TheoremCheckResult("emptiness", passed, 0.0 if passed else 1.0, 0.0, cases, time.perf_counter() - t0)


CHECKS = {
    "counterexample": lambda trials, seed, scale: check_counterexample(),
    "dominance": lambda trials, seed, scale: check_dominance_equivalence(trials, scale, seed),
    "symmetry": lambda trials, seed, scale: check_symmetry_equivalence(trials, scale, seed),
    "sandwich": lambda trials, seed, scale: check_sandwich(trials, scale, seed),
    "closure": lambda trials, seed, scale: check_deterministic_closure(trials, seed, scale),
    "emptiness": lambda trials, seed, scale: check_emptiness(seed),
}


def run_checks(names=None, trials: int = 20, seed: int = 0, scale: str = "reduced") -> list[TheoremCheckResult]:
    names = list(CHECKS) if not names else list(names)
    unknown = [n for n in names if n not in CHECKS]
    if unknown:
        raise ValueError(f"unknown checks {unknown}; choose from {sorted(CHECKS)}")
    return [CHECKS[n](trials, seed, scale) for n in names]
