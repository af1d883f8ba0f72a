import itertools

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import RESPONSES, TAKEUP_EQUILIBRIA, nash_profiles
from pairbounds.typespace import (
    DOMINANT,
    NASH_MASK,
    PROFILES,
    SUBMODULAR,
    SUPERMODULAR,
    PairType,
    TypeSpaceConfig,
    best_response,
    classify,
    count_pair_types,
    decode_type,
    encode_type,
    enumerate_pair_types,
    is_symmetric,
    mirror,
    nash_set,
    pack_selection,
    potential_outcome,
    random_admissible_pairs,
    response_vector,
    selection_at,
)

codes = st.integers(0, 4095)

# Participates only at offers (1, 1) when the partner participates.
JOINT_ONLY = encode_type([0, 0, 0, 0], {(1, 1, 1): 1})


def with_responses(delta_by_profile):
    """Type with response vector ``(D(0), D(1))`` per profile index."""
    resp = []
    for k in range(4):
        d0, d1 = delta_by_profile.get(k, (0, 0))
        resp += [d0, d1]
    return encode_type([0, 0, 0, 0], resp)


class TestBits:
    def test_joint_only_type(self):
        assert best_response(JOINT_ONLY, (1, 1), 1) == 1
        assert best_response(JOINT_ONLY, (1, 1), 0) == 0
        assert best_response(JOINT_ONLY, (0, 1), 1) == 0

    @pytest.mark.parametrize("profile,d_other", list(itertools.product(PROFILES, (0, 1))))
    def test_zero_and_saturated_responses(self, profile, d_other):
        assert best_response(0, profile, d_other) == 0
        assert best_response(0xFF0, profile, d_other) == 1

    def test_outcome_bits(self):
        s = encode_type([0, 1, 0, 1], [0] * 8)
        assert s == 0b1010
        assert [potential_outcome(s, d, do) for d, do in PROFILES] == [0, 1, 0, 1]
        assert all(potential_outcome(0, d, do) == 0 for d, do in PROFILES)

    def test_joint_treatment_outcome(self):
        s = encode_type({(1, 1): 1}, [0] * 8)
        assert potential_outcome(s, 1, 1) == 1
        assert potential_outcome(s, 1, 0) == 0

    @given(codes)
    def test_decode_encode_roundtrip(self, code):
        outcomes, responses = decode_type(code)
        assert encode_type(outcomes, responses) == code

    def test_decode_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            decode_type(4096)

    def test_vectorised_lookup_matches_scalar(self):
        arr = np.arange(4096)
        for k, (z, zo) in enumerate(PROFILES):
            for do in (0, 1):
                vec = best_response(arr, (z, zo), do)
                assert all(vec[c] == best_response(int(c), (z, zo), do) for c in range(0, 4096, 97))

    def test_mirror_is_involution(self):
        assert [mirror(k) for k in range(4)] == [0, 2, 1, 3]
        assert all(mirror(mirror(k)) == k for k in range(4))


class TestNash:
    @pytest.mark.parametrize("r1,r2", list(itertools.product(RESPONSES, RESPONSES)))
    def test_equilibrium_table(self, r1, r2):
        expected = TAKEUP_EQUILIBRIA[(r1, r2)]
        assert nash_profiles(r1, r2) == expected
        # encode at profile (0, 1) for member 1; member 2 sees (1, 0)
        s = with_responses({1: r1})
        s2 = with_responses({2: r2})
        assert nash_set(s, s2, (0, 1)) == expected
        a = r1[0] | r1[1] << 1
        b = r2[0] | r2[1] << 1
        mask = NASH_MASK[a, b]
        assert {(i >> 1, i & 1) for i in range(4) if mask >> i & 1} == expected

    def test_joint_only_pair(self):
        assert nash_set(JOINT_ONLY, JOINT_ONLY, (1, 1)) == {(0, 0), (1, 1)}
        assert nash_set(JOINT_ONLY, JOINT_ONLY, (0, 0)) == {(0, 0)}

    def test_incompatible_responses_have_no_equilibrium(self):
        s = with_responses({0: (0, 1)})
        s2 = with_responses({0: (1, 0)})
        assert nash_set(s, s2, (0, 0)) == frozenset()

    @given(codes, codes, st.sampled_from(PROFILES))
    def test_nash_set_matches_brute_force(self, s, s2, profile):
        z, zo = profile
        r1 = (best_response(s, (z, zo), 0), best_response(s, (z, zo), 1))
        r2 = (best_response(s2, (zo, z), 0), best_response(s2, (zo, z), 1))
        assert nash_set(s, s2, profile) == nash_profiles(r1, r2)

    @given(codes, codes)
    def test_dominant_pairs_have_unique_equilibrium(self, s, s2):
        for k, prof in enumerate(PROFILES):
            if classify(s, prof) == DOMINANT and classify(s2, PROFILES[mirror(k)]) == DOMINANT:
                assert len(nash_set(s, s2, prof)) == 1


class TestClassify:
    def test_labels(self):
        assert classify(with_responses({0: (0, 0)}), (0, 0)) == DOMINANT
        assert classify(with_responses({0: (1, 1)}), (0, 0)) == DOMINANT
        assert classify(with_responses({0: (0, 1)}), (0, 0)) == SUPERMODULAR
        assert classify(with_responses({0: (1, 0)}), (0, 0)) == SUBMODULAR

    def test_symmetric_pair(self):
        s = with_responses({1: (0, 1)})
        s2 = with_responses({2: (0, 1)})
        pair = PairType(s, s2, ((0, 0), (0, 0), None, None))
        assert is_symmetric(pair, (0, 1))

    @given(codes, codes)
    def test_symmetry_uses_mirrored_profiles(self, s, s2):
        pair = PairType(s, s2, (None,) * 4)
        for k, prof in enumerate(PROFILES):
            assert is_symmetric(pair, prof) == (response_vector(s, k) == response_vector(s2, mirror(k)))


class TestSelection:
    @given(st.lists(st.sampled_from(PROFILES), min_size=4, max_size=4))
    def test_pack_roundtrip(self, choices):
        code = pack_selection(dict(enumerate(choices)))
        assert [selection_at(code, k) for k in range(4)] == [2 * d + do for d, do in choices]

    def test_code_order_is_lexicographic(self):
        tuples = list(itertools.product(PROFILES, repeat=4))
        codes_ = [pack_selection(dict(enumerate(t))) for t in tuples]
        assert codes_ == sorted(codes_)


def brute_pairs(config):
    codes_ = config.individual_codes()
    out = []
    for s in codes_:
        for s2 in codes_:
            sets = [sorted(nash_set(int(s), int(s2), PROFILES[k])) for k in config.active_profiles]
            for choice in itertools.product(*sets):
                e = pack_selection(dict(zip(config.active_profiles, choice)))
                out.append((int(s), int(s2), e))
    return out


class TestEnumeration:
    def test_dominant_space_size(self):
        config = TypeSpaceConfig(class_filter="dominant")
        assert count_pair_types(config) == 65_536

    def test_single_profile_count(self):
        config = TypeSpaceConfig(active_profiles=(0,))
        assert config.individual_codes().size == 64
        assert count_pair_types(config) == len(brute_pairs(config))

    def test_stream_is_sorted_and_complete(self):
        config = TypeSpaceConfig(active_profiles=(3,))
        streamed = [(p.s, p.s_other, p.e_code) for p in enumerate_pair_types(config)]
        assert streamed == sorted(brute_pairs(config))

    def test_two_block_count(self):
        config = TypeSpaceConfig(active_profiles=(0, 3))
        assert count_pair_types(config) == len(brute_pairs(config))

    def test_reject_all_filter_yields_nothing(self):
        config = TypeSpaceConfig()
        none = lambda s, s2, e, cfg: np.zeros(np.shape(s), dtype=bool)
        assert count_pair_types(config, [none]) == 0

    def test_stream_accepts_object_predicates(self):
        config = TypeSpaceConfig(active_profiles=(0,))
        pairs = list(enumerate_pair_types(config, [lambda p: p.s == p.s_other]))
        assert pairs and all(p.s == p.s_other for p in pairs)

    def test_inactive_response_bits_fixed(self):
        config = TypeSpaceConfig(active_profiles=(0,))
        assert (config.individual_codes() >> 6 == 0).all()

    @pytest.mark.parametrize("bad", [(), (4,)])
    def test_config_validation(self, bad):
        with pytest.raises(ValueError):
            TypeSpaceConfig(active_profiles=bad)

    def test_random_pairs_are_admissible(self):
        config = TypeSpaceConfig()
        s, s2, e = random_admissible_pairs(config, 200, np.random.default_rng(1))
        for a, b, c in zip(s, s2, e):
            assert PairType.from_codes(a, b, c, config.active_profiles).is_admissible()
