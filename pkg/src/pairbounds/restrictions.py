"""Behavioural restrictions compiled into type filters and mass bounds.

A restriction either removes pair types outright (:class:`HardFilter`) or caps
the total mass of violating types (:class:`MassBound`), giving the linear
inequality ``sum_t mu_t * w(t) <= eps`` where ``w`` counts violations.

Every compiled constraint carries a vectorised ``mask``/``weight`` callable
``f(s, s_other, e, config)`` over integer code arrays and a ``level`` tag:
``"brf"`` when it reads only best-response bits, ``"po"`` when it reads only
potential-outcome bits, ``"pair"`` otherwise. The level lets the program
builder push the constraint into the smaller factor tables.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .typespace import PROFILES, PairType, TypeSpaceConfig, mirror

HARD_KINDS = (
    "dominance",
    "symmetry",
    "supermodular",
    "submodular",
    "monotone_ia",
    "vb_monotone",
    "ior",
    "one_sided_nc",
    "strategic_substitutes",
    "strategic_complements",
    "monotone_treatment_response",
    "no_outcome_spillover",
)
EPS_KINDS = (
    "eps_vb_monotone",
    "eps_strategic_neutrality",
    "eps_outcome_assort",
    "eps_treatment_assort",
)
NONLINEAR_KINDS = ("monotone_treatment_selection", "mts", "stochastic_dominance")
SCOPES = ("member1", "member2", "both")

_ALIASES = {
    "strategic_neutrality": ("eps_strategic_neutrality", 0.0),
    "neutrality": ("eps_strategic_neutrality", 0.0),
}


class UnsupportedNonlinear(ValueError):
    """Restriction is nonlinear in the type distribution and cannot be an LP constraint."""


class RestrictionError(ValueError):
    pass


@dataclass(frozen=True)
class Restriction:
    """A requested restriction.

    Parameters
    ----------
    kind : str
        Lowercase snake-case name from ``HARD_KINDS`` or ``EPS_KINDS``.
    eps : float, optional
        Mass bound in ``[0, 1]`` for ``eps_*`` kinds; defaults to 0.
    scope : {"member1", "member2", "both"}
    """

    kind: str
    eps: float | None = None
    scope: str = "both"

    def __post_init__(self):
        kind = str(self.kind).strip().lower()
        eps = self.eps
        if kind in _ALIASES:
            kind, default = _ALIASES[kind]
            eps = default if eps is None else eps
        object.__setattr__(self, "kind", kind)
        if self.scope not in SCOPES:
            raise RestrictionError(f"scope must be one of {SCOPES}, got {self.scope!r}")
        if kind in EPS_KINDS:
            eps = 0.0 if eps is None else float(eps)
            if not 0.0 <= eps <= 1.0 or not np.isfinite(eps):
                raise RestrictionError(f"eps must lie in [0, 1], got {eps}")
        elif kind in HARD_KINDS:
            if eps is not None:
                raise RestrictionError(f"{kind} takes no eps")
        elif kind not in NONLINEAR_KINDS:
            raise RestrictionError(f"unknown restriction kind {kind!r}")
        object.__setattr__(self, "eps", eps)

    @classmethod
    def parse(cls, text: str) -> "Restriction":
        """Parse ``kind[:eps][:scope]``, e.g. ``eps_vb_monotone:0.02:member2``."""
        parts = [p.strip() for p in text.split(":") if p.strip()]
        if not parts:
            raise RestrictionError("empty restriction")
        kind, eps, scope = parts[0], None, "both"
        for p in parts[1:]:
            if p in SCOPES:
                scope = p
            else:
                try:
                    eps = float(p)
                except ValueError:
                    raise RestrictionError(f"cannot parse {p!r} in {text!r}") from None
        return cls(kind, eps, scope)

    def to_dict(self) -> dict:
        d = {"kind": self.kind, "scope": self.scope}
        if self.eps is not None:
            d["eps"] = self.eps
        return d


ArrayFn = Callable[[np.ndarray, np.ndarray, np.ndarray, TypeSpaceConfig], np.ndarray]


@dataclass(frozen=True)
class HardFilter:
    kind: str
    scope: str
    level: str
    mask: ArrayFn = field(repr=False, compare=False)

    def accepts(self, pair: PairType, config: TypeSpaceConfig | None = None) -> bool:
        config = config or TypeSpaceConfig()
        a = np.array([pair.s]), np.array([pair.s_other]), np.array([pair.e_code])
        return bool(self.mask(*a, config)[0])

    def to_dict(self) -> dict:
        return {"type": "hard_filter", "kind": self.kind, "scope": self.scope, "level": self.level}


@dataclass(frozen=True)
class MassBound:
    kind: str
    scope: str
    level: str
    eps: float
    weight: ArrayFn = field(repr=False, compare=False)

    def weight_of(self, pair: PairType, config: TypeSpaceConfig | None = None) -> int:
        config = config or TypeSpaceConfig()
        a = np.array([pair.s]), np.array([pair.s_other]), np.array([pair.e_code])
        return int(self.weight(*a, config)[0])

    def to_dict(self) -> dict:
        return {"type": "mass_bound", "kind": self.kind, "scope": self.scope, "level": self.level, "eps": self.eps}


CompiledConstraint = HardFilter | MassBound


# --- individual predicates over code arrays --------------------------------

def _resp(s, k):
    return (s >> (4 + 2 * k)) & 3


def _bit(s, k, d_other):
    return (s >> (4 + 2 * k + d_other)) & 1


def _dominant(s, config):
    ok = np.ones(np.shape(s), dtype=bool)
    for k in config.relevant_profiles:
        r = _resp(s, k)
        ok &= (r == 0) | (r == 3)
    return ok


def _not_pattern(pattern):
    def f(s, config):
        ok = np.ones(np.shape(s), dtype=bool)
        for k in config.relevant_profiles:
            ok &= _resp(s, k) != pattern
        return ok

    return f


def _monotone_ia(s, config):
    rel = set(config.relevant_profiles)
    ok = np.ones(np.shape(s), dtype=bool)
    for z_other in (0, 1):
        lo, hi = 2 * 0 + z_other, 2 * 1 + z_other
        if lo in rel and hi in rel:
            for do in (0, 1):
                ok &= _bit(s, lo, do) <= _bit(s, hi, do)
    return ok


def _vb_monotone(s, config):
    chain = [k for k in range(4) if k in set(config.relevant_profiles)]
    ok = np.ones(np.shape(s), dtype=bool)
    for a, b in zip(chain, chain[1:]):
        for do in (0, 1):
            ok &= _bit(s, a, do) <= _bit(s, b, do)
    return ok


def _vb_violation(s, config):
    return ~_vb_monotone(s, config)


def _ior(s, config):
    ok = _dominant(s, config)
    for z in (0, 1):
        ks = [k for k in config.relevant_profiles if PROFILES[k][0] == z]
        for a, b in zip(ks, ks[1:]):
            ok &= _resp(s, a) == _resp(s, b)
    return ok


def _one_sided(s, config):
    ok = _dominant(s, config)
    for k in config.relevant_profiles:
        if PROFILES[k][0] == 0:
            ok &= _resp(s, k) == 0
    return ok


def _mtr(s, config):
    y = [(s >> i) & 1 for i in range(4)]  # index 2d + d'
    return (y[0] <= y[2]) & (y[1] <= y[3]) & (y[0] <= y[1]) & (y[2] <= y[3])


def _no_outcome_spillover(s, config):
    return (((s >> 0) & 1) == ((s >> 1) & 1)) & (((s >> 2) & 1) == ((s >> 3) & 1))


def _non_dominant_count(s, config):
    w = np.zeros(np.shape(s), dtype=np.int64)
    for k in config.relevant_profiles:
        r = _resp(s, k)
        w += ((r == 1) | (r == 2)).astype(np.int64)
    return w


_INDIVIDUAL = {
    "dominance": (_dominant, "brf"),
    "supermodular": (_not_pattern(1), "brf"),
    "submodular": (_not_pattern(2), "brf"),
    "strategic_complements": (_not_pattern(1), "brf"),
    "strategic_substitutes": (_not_pattern(2), "brf"),
    "monotone_ia": (_monotone_ia, "brf"),
    "vb_monotone": (_vb_monotone, "brf"),
    "ior": (_ior, "brf"),
    "one_sided_nc": (_one_sided, "brf"),
    "monotone_treatment_response": (_mtr, "po"),
    "no_outcome_spillover": (_no_outcome_spillover, "po"),
}


def _scoped_mask(pred, scope):
    def mask(s, s2, e, config):
        ok = np.ones(np.shape(s), dtype=bool)
        if scope in ("member1", "both"):
            ok &= pred(s, config)
        if scope in ("member2", "both"):
            ok &= pred(s2, config)
        return ok

    return mask


def _symmetric(s, s2, e, config):
    ok = np.ones(np.shape(s), dtype=bool)
    for k in config.relevant_profiles:
        ok &= _resp(s, k) == _resp(s2, mirror(k))
    return ok


_POPCOUNT = np.array([bin(i).count("1") for i in range(256)], dtype=np.int64)


def _outcome_assort(s, s2, e, config):
    return _POPCOUNT[(s ^ s2) & 0xF]


def _treatment_assort(s, s2, e, config):
    return _POPCOUNT[((s ^ s2) >> 4) & 0xFF]


def compile_restriction(restriction: Restriction) -> CompiledConstraint:
    """Turn a :class:`Restriction` into a hard filter or a mass bound."""
    kind, scope = restriction.kind, restriction.scope
    if kind in NONLINEAR_KINDS:
        raise UnsupportedNonlinear(f"{kind} is nonlinear in the type distribution and is not supported")
    if kind == "symmetry":
        return HardFilter(kind, scope, "brf", _symmetric)
    if kind in _INDIVIDUAL:
        pred, level = _INDIVIDUAL[kind]
        return HardFilter(kind, scope, level, _scoped_mask(pred, scope))
    eps = float(restriction.eps)
    if kind == "eps_vb_monotone":
        def weight(s, s2, e, config, _scope=scope):
            w = np.zeros(np.shape(s), dtype=bool)
            if _scope in ("member1", "both"):
                w |= _vb_violation(s, config)
            if _scope in ("member2", "both"):
                w |= _vb_violation(s2, config)
            return w.astype(np.int64)

        return MassBound(kind, scope, "brf", eps, weight)
    if kind == "eps_strategic_neutrality":

        def weight(s, s2, e, config, _scope=scope):
            w = np.zeros(np.shape(s), dtype=np.int64)
            if _scope in ("member1", "both"):
                w += _non_dominant_count(s, config)
            if _scope in ("member2", "both"):
                w += _non_dominant_count(s2, config)
            return w

        return MassBound(kind, scope, "brf", eps, weight)
    if kind == "eps_outcome_assort":
        return MassBound(kind, scope, "po", eps, _outcome_assort)
    if kind == "eps_treatment_assort":
        return MassBound(kind, scope, "brf", eps, _treatment_assort)
    raise RestrictionError(f"unhandled kind {kind!r}")  # pragma: no cover


compile = compile_restriction  # noqa: A001 - public name matches the operation


def compile_all(restrictions: Sequence[Restriction]) -> list[CompiledConstraint]:
    return [compile_restriction(r) for r in restrictions]


def serialize(constraints: Sequence[CompiledConstraint]) -> str:
    """Deterministic JSON rendering of compiled constraints."""
    return json.dumps([c.to_dict() for c in constraints], sort_keys=True, separators=(",", ":"))


_DOMINANCE_LIKE = ("dominance", "ior", "one_sided_nc")


def falsifiable_combination_check(constraints: Sequence[CompiledConstraint]) -> list[str]:
    """Warn when dominant-only and symmetric-only responses are jointly imposed.

    That combination rules out every type that can generate asymmetric take-up
    ``(0, 1)`` or ``(1, 0)``, so any such observed mass empties the identified set.
    """
    dominance = any(
        (isinstance(c, HardFilter) and c.kind in _DOMINANCE_LIKE and c.scope == "both")
        or (isinstance(c, MassBound) and c.kind == "eps_strategic_neutrality" and c.eps == 0.0 and c.scope == "both")
        for c in constraints
    )
    symmetry = any(isinstance(c, HardFilter) and c.kind == "symmetry" for c in constraints)
    if dominance and symmetry:
        msg = (
            "dominance combined with symmetry excludes asymmetric take-up (0,1) and (1,0); "
            "the identified set is empty whenever those cells carry positive mass"
        )
        return [msg]
    return []


def warn_falsifiable(constraints: Sequence[CompiledConstraint]) -> list[str]:
    out = falsifiable_combination_check(constraints)
    for msg in out:
        warnings.warn(msg, stacklevel=2)
    return out
