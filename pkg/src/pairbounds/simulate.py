"""Synthetic households from type distributions and threshold-crossing models.

Two generators are provided:

* :class:`TypeDgp` puts explicit masses on pair types, so population cells and
  true estimand values are exact.
* :class:`StructuralDgp` draws correlated latent normals per household, maps
  them through threshold-crossing outcome and take-up equations to a pair of
  12-bit types, and resolves multiple equilibria with a fixed selection rule.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np
from scipy.stats import norm

from .data import ObservedDistribution, array_to_records
from .program import admissible_arrays, cell_vector
from .typespace import PROFILES, PairType, TypeSpaceConfig, mirror, nash_mask, random_admissible_pairs, selection_at

UNIFORM_OFFERS = (0.25, 0.25, 0.25, 0.25)


def _offer_probs(p):
    p = np.asarray(p, dtype=float)
    if p.shape != (4,) or (p < 0).any() or abs(p.sum() - 1) > 1e-12:
        raise ValueError("offer_probs must be 4 nonnegative numbers summing to 1")
    return p


@dataclass(frozen=True)
class TypeDgp:
    """Explicit distribution over pair types.

    Parameters
    ----------
    s, s_other, e_code : int arrays
        Raw pair types. ``e_code`` must select a Nash profile on every offer
        block with positive probability.
    masses : float array summing to one
    offer_probs : probabilities of offer blocks in canonical order
    """

    s: np.ndarray
    s_other: np.ndarray
    e_code: np.ndarray
    masses: np.ndarray
    offer_probs: tuple = UNIFORM_OFFERS

    def __post_init__(self):
        s, s2, e = (np.atleast_1d(np.asarray(a, dtype=np.int64)) for a in (self.s, self.s_other, self.e_code))
        m = np.atleast_1d(np.asarray(self.masses, dtype=float))
        if not (s.shape == s2.shape == e.shape == m.shape):
            raise ValueError("support arrays and masses must align")
        if (m < 0).any() or abs(m.sum() - 1) > 1e-9:
            raise ValueError("masses must be nonnegative and sum to one")
        probs = _offer_probs(self.offer_probs)
        for k in np.flatnonzero(probs > 0):
            sel = 1 << selection_at(e, k)
            if ((nash_mask(s, s2, k) & sel) == 0).any():
                raise ValueError(f"selection is not a Nash profile at offer block {k}")
        object.__setattr__(self, "s", s)
        object.__setattr__(self, "s_other", s2)
        object.__setattr__(self, "e_code", e)
        object.__setattr__(self, "masses", m / m.sum())
        object.__setattr__(self, "offer_probs", tuple(float(v) for v in probs))

    @classmethod
    def from_pairs(cls, support: Sequence[PairType], masses, offer_probs=UNIFORM_OFFERS) -> "TypeDgp":
        return cls(
            np.array([p.s for p in support]),
            np.array([p.s_other for p in support]),
            np.array([p.e_code for p in support]),
            masses,
            offer_probs,
        )

    @property
    def active_blocks(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(np.asarray(self.offer_probs) > 0))

    @property
    def support(self) -> list[PairType]:
        act = self.active_blocks
        return [PairType.from_codes(a, b, c, act) for a, b, c in zip(self.s, self.s_other, self.e_code)]


def random_type_dgp(rng: np.random.Generator, config: TypeSpaceConfig | None = None, size: int = 5,
                    concentration: float = 1.0, offer_probs=None, filters=()) -> TypeDgp:
    """Dirichlet masses over ``size`` admissible pair types drawn by rejection.

    ``filters`` are array masks ``f(s, s_other, e, config)``; draws failing
    any of them are discarded.
    """
    config = config or TypeSpaceConfig()
    if offer_probs is None:
        offer_probs = np.zeros(4)
        offer_probs[list(config.active_profiles)] = 1.0 / len(config.active_profiles)
    chunks = [[], [], []]
    have = 0
    while have < size:
        s, s2, e = random_admissible_pairs(config, 4 * size, rng)
        keep = np.ones(s.size, dtype=bool)
        for f in filters:
            keep &= np.asarray(f(s, s2, e, config), dtype=bool)
        for c, a in zip(chunks, (s, s2, e)):
            c.append(a[keep])
        have += int(keep.sum())
    s, s2, e = (np.concatenate(c)[:size] for c in chunks)
    masses = rng.dirichlet(np.full(size, concentration))
    return TypeDgp(s, s2, e, masses, offer_probs)


# --- structural model --------------------------------------------------------

@dataclass(frozen=True)
class MemberParams:
    """Threshold-crossing coefficients for one household member.

    Outcome: ``Y(d, d') = 1{baseline + own_effect*d + spillover*d' + outcome_scale*u > 0}``.
    Take-up: ``D(z, z', d') = 1{takeup_intercept + own_offer*z + other_offer*z' + strategic*d' > takeup_scale*v}``.
    """

    baseline: float = -0.3
    own_effect: float = 0.6
    spillover: float = 0.2
    outcome_scale: float = 1.0
    takeup_intercept: float = -1.0
    own_offer: float = 1.5
    other_offer: float = 0.2
    strategic: float = 0.0
    takeup_scale: float = 1.0

    def __post_init__(self):
        if self.outcome_scale <= 0 or self.takeup_scale <= 0:
            raise ValueError("noise scales must be positive")


@dataclass(frozen=True)
class StructuralDgp:
    """Correlated threshold-crossing model for both household members.

    ``rho`` correlates the two members' outcome shocks and, separately, their
    take-up shocks. ``selection`` picks among multiple equilibria: ``"lowest"``
    and ``"highest"`` use the order of ``2*d + d'``; ``"random"`` draws
    uniformly per household and offer block.
    """

    member1: MemberParams = field(default_factory=MemberParams)
    member2: MemberParams = field(default_factory=MemberParams)
    rho: float = 0.3
    offer_probs: tuple = UNIFORM_OFFERS
    selection: str = "lowest"

    def __post_init__(self):
        if not -1 < self.rho < 1:
            raise ValueError("rho must lie in (-1, 1)")
        if self.selection not in ("lowest", "highest", "random"):
            raise ValueError(f"unknown selection rule {self.selection!r}")
        object.__setattr__(self, "offer_probs", tuple(float(v) for v in _offer_probs(self.offer_probs)))

    @property
    def active_blocks(self) -> tuple[int, ...]:
        return tuple(int(k) for k in np.flatnonzero(np.asarray(self.offer_probs) > 0))

    def draw_types(self, n: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Draw ``n`` admissible pair types; households without equilibria are redrawn."""
        out = [[], [], []]
        have = 0
        act = self.active_blocks
        while have < n:
            m = max(16, int(1.2 * (n - have)))
            s, s2 = self._individual_codes(m, rng)
            masks = np.stack([nash_mask(s, s2, k) for k in act], axis=1)
            ok = (masks > 0).all(axis=1)
            s, s2, masks = s[ok], s2[ok], masks[ok]
            e = np.zeros(s.size, dtype=np.int64)
            for j, k in enumerate(act):
                e |= _pick(masks[:, j], self.selection, rng) << (2 * (3 - k))
            for c, a in zip(out, (s, s2, e)):
                c.append(a)
            have += s.size
        return tuple(np.concatenate(c)[:n] for c in out)

    def _individual_codes(self, m, rng):
        cov = np.array([[1.0, self.rho], [self.rho, 1.0]])
        u = rng.multivariate_normal(np.zeros(2), cov, size=m)
        v = rng.multivariate_normal(np.zeros(2), cov, size=m)
        codes = []
        for i, par in enumerate((self.member1, self.member2)):
            code = np.zeros(m, dtype=np.int64)
            for d in (0, 1):
                for do in (0, 1):
                    y = par.baseline + par.own_effect * d + par.spillover * do + par.outcome_scale * u[:, i] > 0
                    code |= y.astype(np.int64) << (2 * d + do)
            for k, (z, zo) in enumerate(PROFILES):
                for do in (0, 1):
                    idx = par.takeup_intercept + par.own_offer * z + par.other_offer * zo + par.strategic * do
                    take = idx > par.takeup_scale * v[:, i]
                    code |= take.astype(np.int64) << (4 + 2 * k + do)
            codes.append(code)
        return codes[0], codes[1]

    def to_type_dgp(self, draws: int = 2_000_000, seed: int = 0) -> TypeDgp:
        """Empirical type distribution from ``draws`` Monte Carlo households."""
        rng = np.random.default_rng(seed)
        s, s2, e = self.draw_types(draws, rng)
        key = (s << 20) | (s2 << 8) | e
        uniq, counts = np.unique(key, return_counts=True)
        return TypeDgp(uniq >> 20, (uniq >> 8) & 0xFFF, uniq & 0xFF, counts / draws, self.offer_probs)


def _pick(mask, rule, rng):
    bits = (mask[:, None] >> np.arange(4)[None, :]) & 1
    if rule == "lowest":
        return np.argmax(bits, axis=1).astype(np.int64)
    if rule == "highest":
        return (3 - np.argmax(bits[:, ::-1], axis=1)).astype(np.int64)
    score = rng.random(bits.shape) * bits
    return np.argmax(score, axis=1).astype(np.int64)


def vb_violation_preset(target: float = 0.65, gap: float = 0.01, rho: float = 0.3) -> StructuralDgp:
    """Structural model whose second member takes up slightly less when both are offered.

    Member 2's take-up probability is ``target`` when only they are offered and
    ``target - gap`` when both are. Nobody responds to the partner's take-up,
    so all responses are dominant. The share of member-2 types that break the
    ordering of offer blocks equals ``gap``.
    """
    scale = 1.0
    own = norm.ppf(target) + 1.0
    other = norm.ppf(target - gap) - norm.ppf(target)
    m1 = MemberParams(baseline=-0.2, own_effect=0.8, spillover=0.3, takeup_intercept=-1.0,
                      own_offer=1.6, other_offer=0.1, strategic=0.0, takeup_scale=scale)
    m2 = MemberParams(baseline=-0.4, own_effect=0.5, spillover=0.4, takeup_intercept=-1.0,
                      own_offer=own, other_offer=other, strategic=0.0, takeup_scale=scale)
    return StructuralDgp(m1, m2, rho=rho)


PRESETS = {
    "default": lambda: StructuralDgp(),
    "vb_violation": vb_violation_preset,
    "full_compliance": lambda: StructuralDgp(
        MemberParams(takeup_intercept=-0.5, own_offer=1.0, other_offer=0.0, takeup_scale=1e-9),
        MemberParams(takeup_intercept=-0.5, own_offer=1.0, other_offer=0.0, takeup_scale=1e-9),
    ),
}


# --- sampling and population quantities ---------------------------------------

def sample_dataset(dgp, n: int, seed: int = 0, as_records: bool = False):
    """Draw ``n`` i.i.d. households.

    Returns an ``(n, 6)`` int array with columns ``y1, d1, z1, y2, d2, z2``, or
    a list of :class:`~pairbounds.data.HouseholdRecord` when ``as_records``.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    rng = np.random.default_rng(seed)
    if isinstance(dgp, StructuralDgp):
        s, s2, e = dgp.draw_types(n, rng)
    else:
        idx = rng.choice(dgp.masses.size, size=n, p=dgp.masses)
        s, s2, e = dgp.s[idx], dgp.s_other[idx], dgp.e_code[idx]
    k = rng.choice(4, size=n, p=np.asarray(dgp.offer_probs))
    z1, z2 = k >> 1, k & 1
    v = selection_at(e, k)
    d1, d2 = v >> 1, v & 1
    y1 = (s >> (2 * d1 + d2)) & 1
    y2 = (s2 >> (2 * d2 + d1)) & 1
    arr = np.stack([y1, d1, z1, y2, d2, z2], axis=1).astype(np.int64)
    return array_to_records(arr) if as_records else arr


def population_cells(dgp, draws: int = 2_000_000, seed: int = 0) -> ObservedDistribution:
    """Population cell probabilities.

    Exact ``A @ mu`` for a :class:`TypeDgp`; for a :class:`StructuralDgp`, the
    same map applied to an empirical type distribution from ``draws`` Monte
    Carlo households (see :func:`mc_standard_error`).
    """
    if isinstance(dgp, StructuralDgp):
        dgp = dgp.to_type_dgp(draws, seed)
    blocks = dgp.active_blocks
    cells = cell_vector(dgp.s, dgp.s_other, dgp.e_code, dgp.masses, blocks)
    n_z = np.array([1 if k in blocks else 0 for k in range(4)])
    return ObservedDistribution(cells, n_z, np.zeros(64, dtype=np.int64))


def mc_standard_error(cells: np.ndarray, draws: int) -> np.ndarray:
    """Per-cell binomial standard error of Monte Carlo population cells."""
    cells = np.asarray(cells, dtype=float)
    return np.sqrt(cells * (1 - cells) / draws)


def true_estimand(dgp, estimand, draws: int = 2_000_000, seed: int = 0) -> float:
    """Mass-weighted objective; Monte Carlo for structural models."""
    if isinstance(dgp, StructuralDgp):
        dgp = dgp.to_type_dgp(draws, seed)
    vals = estimand.objective(dgp.s, dgp.s_other, dgp.e_code)
    return float(np.dot(dgp.masses, vals))


BENCHMARK_RESTRICTIONS = ("dominance", "no_outcome_spillover", "monotone_treatment_response")


def benchmark_dgp(seed: int = 12345) -> tuple[TypeSpaceConfig, tuple[str, ...], TypeDgp]:
    """Reference design for coverage studies.

    Dirichlet(1) masses over every admissible pair type under dominant take-up,
    no outcome spillover and monotone outcomes, with all four offer blocks
    equally likely. Returns the type-space configuration, the restrictions and
    the distribution.
    """
    config = TypeSpaceConfig()
    s, s2, e = admissible_arrays(config, BENCHMARK_RESTRICTIONS)
    rng = np.random.default_rng(seed)
    return config, BENCHMARK_RESTRICTIONS, TypeDgp(s, s2, e, rng.dirichlet(np.ones(s.size)))


def with_selection(dgp: StructuralDgp, rule: str) -> StructuralDgp:
    return replace(dgp, selection=rule)
