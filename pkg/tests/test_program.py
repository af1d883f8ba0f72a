import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairbounds.program import (
    ADE,
    ASE,
    EmptyTypeSpace,
    FixedAllocation,
    PolicyTarget,
    bounds,
    build_program,
    cell_vector,
    column_of,
    objective_gamma,
    objective_theta,
    signature_array,
    witness_summary,
)
from pairbounds.simulate import population_cells, random_type_dgp, true_estimand
from pairbounds.typespace import PROFILES, PairType, TypeSpaceConfig, encode_type, potential_outcome, random_admissible_pairs
from pairbounds.verify import counterexample_estimand, counterexample_type_set, counterexample_types, random_feasible_cells

seeds = st.integers(0, 2**31 - 1)
FULL = TypeSpaceConfig()


def cx_pair(partner_key):
    t = counterexample_types()
    return PairType.from_codes(t["s"], t[partner_key], t["e_code"], range(4))


class TestColumns:
    def test_counterexample_full_compliance_cell(self):
        cells = column_of(cx_pair("s_other"))
        assert cells[3] == 16 * 3 + 15
        assert cells[0] == 0

    def test_zero_pair(self):
        pair = PairType(0, 0, ((0, 0),) * 4)
        assert column_of(pair) == (0, 16, 32, 48)

    @given(seeds)
    def test_signature_matches_outcome_oracle(self, seed):
        rng = np.random.default_rng(seed)
        s, s2, e = random_admissible_pairs(FULL, 5, rng)
        sig = signature_array(s, s2, e, (0, 1, 2, 3))
        for i in range(5):
            pair = PairType.from_codes(s[i], s2[i], e[i], range(4))
            for k, prof in enumerate(PROFILES):
                d, do = pair.selected(prof)
                y = potential_outcome(int(s[i]), d, do)
                y2 = potential_outcome(int(s2[i]), do, d)
                assert sig[i, k] == 8 * y + 4 * y2 + 2 * d + do

    def test_cell_vector_is_mixture(self):
        rng = np.random.default_rng(0)
        s, s2, e = random_admissible_pairs(FULL, 2, rng)
        a = cell_vector(s[:1], s2[:1], e[:1], [1.0])
        b = cell_vector(s[1:], s2[1:], e[1:], [1.0])
        np.testing.assert_allclose(cell_vector(s, s2, e, [0.5, 0.5]), 0.5 * a + 0.5 * b)
        for k in range(4):
            assert cell_vector(s, s2, e, [0.5, 0.5])[16 * k:16 * k + 16].sum() == pytest.approx(1.0)


class TestObjectives:
    def test_counterexample_joint_treatment_effect(self):
        assert objective_theta(cx_pair("s_other"), FixedAllocation(1, (1, 1), (0, 0))) == 1

    @given(st.integers(0, 4095), st.integers(0, 4095), st.sampled_from(PROFILES))
    def test_identical_allocations_vanish(self, s, s2, alloc):
        assert objective_theta(PairType(s, s2, (None,) * 4), FixedAllocation(1, alloc, alloc)) == 0

    @given(st.integers(0, 4095), st.integers(0, 4095), st.integers(1, 2))
    def test_fixed_allocation_oracle(self, s, s2, member):
        own, other = (s, s2) if member == 1 else (s2, s)
        pair = PairType(s, s2, (None,) * 4)
        assert objective_theta(pair, ADE(member)) == potential_outcome(own, 1, 0) - potential_outcome(own, 0, 0)
        assert objective_theta(pair, ASE(member)) == potential_outcome(own, 0, 1) - potential_outcome(own, 0, 0)
        swapped = FixedAllocation(member, (0, 0), (1, 0))
        assert objective_theta(pair, swapped) == -objective_theta(pair, ADE(member))

    def test_policy_target_on_counterexample(self):
        est = counterexample_estimand()
        assert objective_gamma(cx_pair("s_other_dominant"), est) == 0
        assert objective_gamma(cx_pair("s_other"), est) == 1

    @given(st.integers(0, 15), st.integers(0, 1), st.sampled_from(PROFILES))
    def test_always_participating_partner(self, po, d, offers):
        s = po
        s2 = encode_type([0] * 4, [1] * 8)
        est = PolicyTarget(member=1, d_forced=d, offers=offers)
        assert objective_gamma(PairType(s, s2, (None,) * 4), est) == potential_outcome(s, d, 1)


class TestBuild:
    def test_dominant_column_counts(self):
        spec = build_program(TypeSpaceConfig(class_filter="dominant"), [], ADE())
        assert spec.raw_count == 65_536
        assert spec.n_columns <= 65_536 and spec.n_columns <= 16**4 * 3

    def test_single_block_column_count(self):
        spec = build_program(TypeSpaceConfig(active_profiles=(2,)), [], ADE())
        assert spec.n_columns <= 16 * 3

    def test_counterexample_space(self):
        spec = build_program(FULL, [], counterexample_estimand(), type_set=counterexample_type_set())
        assert spec.n_columns == 2
        assert (spec.signature[0] == spec.signature[1]).all()
        assert sorted(spec.objective.tolist()) == [0, 1]

    def test_counterexample_bounds(self):
        s, s2, e = counterexample_type_set()
        p = cell_vector(s[:1], s2[:1], e[:1], [1.0])
        full = bounds(build_program(FULL, [], counterexample_estimand(), p, type_set=(s, s2, e)))
        dom = bounds(build_program(FULL, ["dominance"], counterexample_estimand(), p, type_set=(s, s2, e)))
        assert (full.lower, full.upper) == (0.0, 1.0)
        assert (dom.lower, dom.upper) == (0.0, 0.0)

    def test_empty_space_raises(self):
        with pytest.raises(EmptyTypeSpace):
            build_program(FULL, ["dominance"], ADE(), type_set=([0b100000], [0], [0]))

    def test_observed_blocks_must_match(self):
        rng = np.random.default_rng(0)
        obs = population_cells(random_type_dgp(rng, TypeSpaceConfig(active_profiles=(0, 1))))
        with pytest.raises(ValueError):
            build_program(TypeSpaceConfig(active_profiles=(0,)), [], ADE(), obs)

    def test_stats(self):
        st_ = build_program(TypeSpaceConfig(active_profiles=(0,)), [], ADE()).stats()
        assert st_["rows"] == 16 and st_["rank"] <= 16 and st_["columns"] > 0


class TestBounds:
    @given(seeds)
    def test_true_value_contained(self, seed):
        rng = np.random.default_rng(seed)
        config = TypeSpaceConfig(active_profiles=tuple(sorted(rng.choice(4, size=2, replace=False))))
        dgp = random_type_dgp(rng, config, size=6)
        est = ADE(int(rng.integers(1, 3)))
        iv = bounds(build_program(config, [], est, population_cells(dgp)))
        assert iv.contains(true_estimand(dgp, est), tol=1e-9)

    @given(seeds)
    def test_dedup_preserves_bounds(self, seed):
        rng = np.random.default_rng(seed)
        config = TypeSpaceConfig(active_profiles=(int(rng.integers(0, 4)),))
        p = random_feasible_cells(config, rng)
        a = bounds(build_program(config, [], ADE(), p))
        b = bounds(build_program(config, [], ADE(), p, dedup=False))
        assert a.lower == pytest.approx(b.lower, abs=1e-9) and a.upper == pytest.approx(b.upper, abs=1e-9)

    @given(seeds)
    def test_swapping_allocations_negates(self, seed):
        rng = np.random.default_rng(seed)
        config = TypeSpaceConfig(active_profiles=(0, 3))
        p = random_feasible_cells(config, rng)
        a = bounds(build_program(config, [], ADE(), p))
        b = bounds(build_program(config, [], FixedAllocation(1, (0, 0), (1, 0)), p))
        assert a.lower == pytest.approx(-b.upper, abs=1e-9) and a.upper == pytest.approx(-b.lower, abs=1e-9)

    @given(seeds)
    def test_restrictions_shrink_intervals(self, seed):
        rng = np.random.default_rng(seed)
        config = TypeSpaceConfig(active_profiles=(1, 2))
        p = random_feasible_cells(config, rng, filters=[lambda s, s2, e, c: (s & 0xF) == (s & 0xF)])
        wide = bounds(build_program(config, [], ADE(), p))
        narrow = bounds(build_program(config, ["monotone_treatment_response"], ADE(), p))
        if not narrow.is_empty:
            assert wide.lower <= narrow.lower + 1e-9 and narrow.upper <= wide.upper + 1e-9

    @given(seeds)
    def test_zero_cell_presolve_is_exact(self, seed):
        rng = np.random.default_rng(seed)
        config = TypeSpaceConfig(active_profiles=(0, 2))
        p = random_feasible_cells(config, rng, size=4)
        spec = build_program(config, [], ASE(), p)
        a, b = bounds(spec), bounds(spec, drop_zero_cells=False)
        assert a.lower == pytest.approx(b.lower, abs=1e-9) and a.upper == pytest.approx(b.upper, abs=1e-9)

    def test_witnesses_reproduce_cells(self):
        rng = np.random.default_rng(5)
        config = TypeSpaceConfig(active_profiles=(1, 3))
        p = random_feasible_cells(config, rng)
        spec = build_program(config, [], ADE(), p)
        iv = bounds(spec)
        for mu in (iv.witness_lower, iv.witness_upper):
            np.testing.assert_allclose(spec.full_matrix() @ mu, p, atol=1e-9)
        assert float(spec.objective @ iv.witness_lower) == pytest.approx(iv.lower)
        summary = witness_summary(spec, iv.witness_lower, top=3)
        assert 1 <= len(summary) <= 3

    def test_infeasible_cells_are_empty(self):
        config = TypeSpaceConfig(active_profiles=(0,))
        p = np.zeros(64)
        p[1] = 1.0  # partner alone takes up
        iv = bounds(build_program(config, ["dominance", "symmetry"], ADE(), p))
        assert iv.is_empty and iv.to_dict()["status"] == "empty"
