"""Latent individual and pair types for two-person encouragement designs.

An individual type is a 12-bit integer. Bits 0-3 hold the potential outcomes
``Y(d, d_other)`` at position ``2*d + d_other``; bits 4-11 hold the
best-response function ``D(z, z_other, d_other)`` at position
``4 + 2*(2*z + z_other) + d_other``. Every argument list is own-first: member 2
is evaluated as ``D_{s'}(z', z, d)`` and ``Y_{s'}(d', d)``.

A pair type is ``(s, s_other, e)`` where ``e`` picks one pure-strategy Nash
profile per active offer profile. Selections are packed into an 8-bit code,
two bits per offer profile with profile ``(0, 0)`` in the most significant
position, so numeric order of the code is lexicographic order of the tuple.

All helpers accept Python ints or integer numpy arrays.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, Iterator, Sequence

import numpy as np

PROFILES: tuple[tuple[int, int], ...] = ((0, 0), (0, 1), (1, 0), (1, 1))
N_CODES = 1 << 12
PO_MASK = 0xF

DOMINANT = "dominant"
SUPERMODULAR = "strictly_supermodular"
SUBMODULAR = "strictly_submodular"


def profile_index(z: int, z_other: int) -> int:
    return 2 * z + z_other


def mirror(k: int) -> int:
    """Index of the same offer profile seen from the partner's side."""
    z, z_other = PROFILES[k]
    return 2 * z_other + z


def _brf_shift(k, d_other):
    return 4 + 2 * k + d_other


def best_response(s, profile, d_other):
    """Take-up of type ``s`` at offers ``profile = (own, other)`` when the partner plays ``d_other``."""
    z, z_other = profile
    return (s >> _brf_shift(2 * z + z_other, d_other)) & 1


def potential_outcome(s, d, d_other):
    """Outcome of type ``s`` at own treatment ``d`` and partner treatment ``d_other``.

    Offers never enter: the exclusion restriction holds by construction.
    """
    return (s >> (2 * d + d_other)) & 1


def response_vector(s, k):
    """Packed best-response vector ``D(.,.,0) | D(.,.,1) << 1`` at profile index ``k``."""
    return (s >> (4 + 2 * k)) & 3


def encode_type(outcomes: dict | Sequence[int], responses: dict | Sequence[int]) -> int:
    """Build a type code.

    ``outcomes`` maps ``(d, d_other) -> y`` or is a length-4 sequence indexed by
    ``2*d + d_other``; ``responses`` maps ``(z, z_other, d_other) -> d`` or is a
    length-8 sequence indexed by ``2*(2*z + z_other) + d_other``.
    """
    code = 0
    if isinstance(outcomes, dict):
        for (d, do), y in outcomes.items():
            code |= (int(y) & 1) << (2 * d + do)
    else:
        for i, y in enumerate(outcomes):
            code |= (int(y) & 1) << i
    if isinstance(responses, dict):
        for (z, zo, do), d in responses.items():
            code |= (int(d) & 1) << _brf_shift(2 * z + zo, do)
    else:
        for i, d in enumerate(responses):
            code |= (int(d) & 1) << (4 + i)
    return code


def decode_type(code: int) -> tuple[dict, dict]:
    """Inverse of :func:`encode_type` returning the two dict views."""
    if not 0 <= code < N_CODES:
        raise ValueError(f"type code {code} outside [0, 4096)")
    outcomes = {(d, do): potential_outcome(code, d, do) for d in (0, 1) for do in (0, 1)}
    responses = {
        (z, zo, do): best_response(code, (z, zo), do)
        for (z, zo) in PROFILES
        for do in (0, 1)
    }
    return outcomes, responses


def _brute_nash(delta_s: int, delta_o: int) -> int:
    mask = 0
    for d, do in itertools.product((0, 1), repeat=2):
        if (delta_s >> do) & 1 == d and (delta_o >> d) & 1 == do:
            mask |= 1 << (2 * d + do)
    return mask


# NASH_MASK[delta_s, delta_other] -> bitmask over take-up profiles 2*d + d'
NASH_MASK = np.array([[_brute_nash(a, b) for b in range(4)] for a in range(4)], dtype=np.int64)
_POPCOUNT4 = np.array([bin(i).count("1") for i in range(16)], dtype=np.int64)
# _NTH_BIT[mask, j] -> position of the j-th set bit of a 4-bit mask
_NTH_BIT = np.zeros((16, 4), dtype=np.int64)
for _m in range(16):
    for _j, _b in enumerate(b for b in range(4) if (_m >> b) & 1):
        _NTH_BIT[_m, _j] = _b


def nash_mask(s, s_other, k):
    """Bitmask of pure Nash take-up profiles at offer profile index ``k``."""
    return NASH_MASK[response_vector(s, k), response_vector(s_other, mirror(k))]


def nash_set(s: int, s_other: int, profile: tuple[int, int]) -> frozenset[tuple[int, int]]:
    """Pure-strategy Nash equilibria ``(d, d_other)`` of the game induced by ``profile``."""
    z, z_other = profile
    out = set()
    for d, do in itertools.product((0, 1), repeat=2):
        if best_response(s, (z, z_other), do) == d and best_response(s_other, (z_other, z), d) == do:
            out.add((d, do))
    return frozenset(out)


def classify(s, profile) -> str:
    """Strategic class of the response vector of ``s`` at ``profile``."""
    delta = response_vector(s, profile_index(*profile))
    if delta in (0, 3):
        return DOMINANT
    return SUPERMODULAR if delta == 2 else SUBMODULAR


def is_symmetric(pair: "PairType", profile) -> bool:
    k = profile_index(*profile)
    return response_vector(pair.s, k) == response_vector(pair.s_other, mirror(k))


def pack_selection(choices: dict[int, tuple[int, int]]) -> int:
    code = 0
    for k, (d, do) in choices.items():
        code |= (2 * d + do) << (2 * (3 - k))
    return code


def selection_at(e_code, k):
    """Packed take-up index ``2*d + d_other`` chosen at profile ``k``."""
    return (e_code >> (2 * (3 - k))) & 3


@dataclass(frozen=True)
class PairType:
    """A latent pair ``(s, s_other, e)``.

    ``e`` is a 4-tuple indexed by offer profile; entries are ``(d, d_other)``
    for active profiles and ``None`` elsewhere.
    """

    s: int
    s_other: int
    e: tuple

    @property
    def e_code(self) -> int:
        return pack_selection({k: de for k, de in enumerate(self.e) if de is not None})

    def selected(self, profile) -> tuple[int, int] | None:
        return self.e[profile_index(*profile)]

    def is_admissible(self) -> bool:
        for k, de in enumerate(self.e):
            if de is not None and de not in nash_set(self.s, self.s_other, PROFILES[k]):
                return False
        return True

    @classmethod
    def from_codes(cls, s: int, s_other: int, e_code: int, active: Iterable[int]) -> "PairType":
        e = [None] * 4
        for k in active:
            v = selection_at(e_code, k)
            e[k] = (v >> 1, v & 1)
        return cls(int(s), int(s_other), tuple(e))


@dataclass(frozen=True)
class TypeSpaceConfig:
    """Which offer profiles are observed, plus an optional class pre-filter.

    Individual types carry best-response bits only for the relevant profiles
    (active profiles, ``extra_profiles`` and their mirrors); other response bits
    are fixed at 0. ``extra_profiles`` adds profiles that are not observed but
    enter an objective. With a single self-mirrored active profile each
    individual has 6 free bits.
    """

    active_profiles: tuple[int, ...] = (0, 1, 2, 3)
    class_filter: str | None = None
    extra_profiles: tuple[int, ...] = ()

    def __post_init__(self):
        act = tuple(sorted(set(int(k) for k in self.active_profiles)))
        if not act:
            raise ValueError("active_profiles must be nonempty")
        if any(k not in range(4) for k in act):
            raise ValueError(f"profile indices must be in 0..3, got {act}")
        if self.class_filter not in (None, "dominant", "supermodular", "submodular", "symmetric"):
            raise ValueError(f"unknown class_filter {self.class_filter!r}")
        object.__setattr__(self, "active_profiles", act)
        object.__setattr__(self, "extra_profiles", tuple(sorted(set(int(k) for k in self.extra_profiles))))

    @property
    def relevant_profiles(self) -> tuple[int, ...]:
        base = set(self.active_profiles) | set(self.extra_profiles)
        return tuple(sorted(base | {mirror(k) for k in base}))

    def brf_codes(self) -> np.ndarray:
        """All best-response parts (code >> 4) spanned by the relevant profiles."""
        rel = self.relevant_profiles
        out = []
        for bits in itertools.product(range(4), repeat=len(rel)):
            out.append(sum(v << (2 * k) for v, k in zip(bits, rel)))
        return np.array(sorted(out), dtype=np.int64)

    def individual_codes(self) -> np.ndarray:
        b = self.brf_codes()
        return np.sort((b[:, None] << 4 | np.arange(16)[None, :]).ravel())


# --- vectorised enumeration -------------------------------------------------

ArrayFilter = Callable[[np.ndarray, np.ndarray, np.ndarray, TypeSpaceConfig], np.ndarray]


def _class_mask(name, s, s2, e, config):
    rel = config.relevant_profiles
    ok = np.ones(np.shape(s), dtype=bool)
    for k in rel:
        a, b = response_vector(s, k), response_vector(s2, k)
        if name == "dominant":
            ok &= ((a == 0) | (a == 3)) & ((b == 0) | (b == 3))
        elif name == "supermodular":
            ok &= (a != 1) & (b != 1)
        elif name == "submodular":
            ok &= (a != 2) & (b != 2)
        elif name == "symmetric":
            ok &= response_vector(s, k) == response_vector(s2, mirror(k))
    return ok


def brf_table(config: TypeSpaceConfig, filters: Sequence[ArrayFilter] = ()) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Best-response level enumeration ``(b, b_other, e_code)``.

    Rows are every pair of response parts with a nonempty Nash set on each
    active profile, expanded over the Cartesian product of Nash choices, sorted
    lexicographically. ``filters`` receive shifted codes (outcome bits zero) and
    must therefore depend on response bits only.
    """
    codes = config.brf_codes()
    b1 = np.repeat(codes, codes.size)
    b2 = np.tile(codes, codes.size)
    act = config.active_profiles
    masks = np.stack([NASH_MASK[(b1 >> 2 * k) & 3, (b2 >> 2 * mirror(k)) & 3] for k in act], axis=1)
    counts = _POPCOUNT4[masks]
    total = counts.prod(axis=1)
    keep = total > 0
    b1, b2, masks, counts, total = b1[keep], b2[keep], masks[keep], counts[keep], total[keep]

    rows = np.repeat(np.arange(b1.size), total)
    starts = np.concatenate([[0], np.cumsum(total)[:-1]])
    idx = np.arange(rows.size) - starts[rows]
    e = np.zeros(rows.size, dtype=np.int64)
    for j in range(len(act) - 1, -1, -1):
        c = counts[rows, j]
        digit = idx % c
        idx = idx // c
        e |= _NTH_BIT[masks[rows, j], digit] << (2 * (3 - act[j]))
    b1, b2 = b1[rows], b2[rows]

    if config.class_filter is not None:
        keep = _class_mask(config.class_filter, b1 << 4, b2 << 4, e, config)
        b1, b2, e = b1[keep], b2[keep], e[keep]
    for f in filters:
        keep = np.asarray(f(b1 << 4, b2 << 4, e, config), dtype=bool)
        b1, b2, e = b1[keep], b2[keep], e[keep]
    order = np.lexsort((e, b2, b1))
    return b1[order], b2[order], e[order]


def po_table(filters: Sequence[ArrayFilter] = (), config: TypeSpaceConfig | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Outcome-part pairs ``(po, po_other)`` surviving outcome-only filters."""
    config = config or TypeSpaceConfig()
    p1 = np.repeat(np.arange(16), 16)
    p2 = np.tile(np.arange(16), 16)
    zero = np.zeros_like(p1)
    for f in filters:
        keep = np.asarray(f(p1, p2, zero, config), dtype=bool)
        p1, p2, zero = p1[keep], p2[keep], zero[keep]
    return p1, p2


def iter_pair_arrays(
    config: TypeSpaceConfig,
    hard_filters: Sequence[ArrayFilter] = (),
    chunk: int = 1 << 20,
    brf_filters: Sequence[ArrayFilter] = (),
    po_filters: Sequence[ArrayFilter] = (),
) -> Iterator[tuple[np.ndarray, np.ndarray, np.ndarray]]:
    """Yield raw ``(s, s_other, e)`` arrays in chunks of roughly ``chunk`` rows.

    ``hard_filters`` are evaluated on full codes; ``brf_filters`` and
    ``po_filters`` are pushed down to the factor tables. Chunks are emitted in
    ascending best-response order but rows are not globally lexicographic; use
    :func:`enumerate_pair_types` when order matters.
    """
    b1, b2, e = brf_table(config, brf_filters)
    p1, p2 = po_table(po_filters, config)
    step = max(1, chunk // max(1, p1.size))
    for lo in range(0, b1.size, step):
        sl = slice(lo, lo + step)
        s = (b1[sl, None] << 4 | p1[None, :]).ravel()
        s2 = (b2[sl, None] << 4 | p2[None, :]).ravel()
        ee = np.repeat(e[sl], p1.size)
        for f in hard_filters:
            keep = np.asarray(f(s, s2, ee, config), dtype=bool)
            s, s2, ee = s[keep], s2[keep], ee[keep]
        if s.size:
            yield s, s2, ee


def count_pair_types(config: TypeSpaceConfig, hard_filters: Sequence[ArrayFilter] = ()) -> int:
    return sum(s.size for s, _, _ in iter_pair_arrays(config, hard_filters))


def enumerate_pair_types(
    config: TypeSpaceConfig, hard_filters: Sequence[ArrayFilter | Callable[[PairType], bool]] = ()
) -> Iterator[PairType]:
    """Stream every admissible pair type in lexicographic ``(s, s_other, e)`` order.

    Filters may be vectorised array filters or plain predicates over
    :class:`PairType`; anything exposing a ``mask`` attribute is treated as
    vectorised.
    """
    array_filters = [f for f in hard_filters if _is_array_filter(f)]
    object_filters = [f for f in hard_filters if not _is_array_filter(f)]
    b1, b2, e = brf_table(config)
    act = config.active_profiles
    bounds = np.searchsorted(b1, np.unique(b1))
    bounds = np.append(bounds, b1.size)
    for i in range(bounds.size - 1):
        lo, hi = bounds[i], bounds[i + 1]
        rb2, re = b2[lo:hi], e[lo:hi]
        base = int(b1[lo]) << 4
        for po in range(16):
            s2 = (rb2[:, None] << 4 | np.arange(16)[None, :]).ravel()
            ee = np.repeat(re, 16)
            s = np.full(s2.size, base | po, dtype=np.int64)
            order = np.lexsort((ee, s2))
            s, s2, ee = s[order], s2[order], ee[order]
            for f in array_filters:
                keep = np.asarray(_mask_of(f)(s, s2, ee, config), dtype=bool)
                s, s2, ee = s[keep], s2[keep], ee[keep]
            for a, b, c in zip(s.tolist(), s2.tolist(), ee.tolist()):
                pair = PairType.from_codes(a, b, c, act)
                if all(f(pair) for f in object_filters):
                    yield pair


def _is_array_filter(f) -> bool:
    return hasattr(f, "mask") or getattr(f, "vectorized", False)


def _mask_of(f):
    return f.mask if hasattr(f, "mask") else f


def random_admissible_pairs(config: TypeSpaceConfig, size: int, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Draw admissible pair types by rejection sampling over individual codes.

    Independent of :func:`brf_table`: codes are drawn uniformly from the
    individual space and a Nash choice is drawn uniformly per active profile.
    """
    codes = config.individual_codes()
    act = config.active_profiles
    out_s, out_s2, out_e = [], [], []
    have = 0
    while have < size:
        s = rng.choice(codes, size=2 * size)
        s2 = rng.choice(codes, size=2 * size)
        masks = np.stack([nash_mask(s, s2, k) for k in act], axis=1)
        ok = (masks > 0).all(axis=1)
        s, s2, masks = s[ok], s2[ok], masks[ok]
        e = np.zeros(s.size, dtype=np.int64)
        for j, k in enumerate(act):
            c = _POPCOUNT4[masks[:, j]]
            pick = (rng.random(s.size) * c).astype(np.int64)
            e |= _NTH_BIT[masks[:, j], pick] << (2 * (3 - k))
        out_s.append(s)
        out_s2.append(s2)
        out_e.append(e)
        have += s.size
    return (np.concatenate(out_s)[:size], np.concatenate(out_s2)[:size], np.concatenate(out_e)[:size])
