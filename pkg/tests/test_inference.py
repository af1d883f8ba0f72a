import json

import numpy as np
import pytest
from scipy.stats import kstest, norm

from pairbounds.inference import (
    InferenceConfig,
    InferenceError,
    basis_bootstrap_ci,
    confidence_interval,
    numerical_delta_ci,
    relaxed_box_ci,
)
from pairbounds.program import ADE, build_program
from pairbounds.simulate import TypeDgp, benchmark_dgp, sample_dataset
from pairbounds.typespace import PROFILES, TypeSpaceConfig, encode_type, pack_selection

SINGLE = TypeSpaceConfig(active_profiles=(0,))
# member 1 untreated with Y(0,0) = 1, and with Y(0,0) = 0 but Y(1,0) = 1
ALWAYS = encode_type([1, 0, 1, 0], [0] * 8)
RESPONDER = encode_type([0, 0, 1, 0], [0] * 8)


def two_type_instance(p_responder=0.7):
    """Point-identified program whose value is the share of cell 0 in block (0, 0)."""
    s = np.array([ALWAYS, RESPONDER])
    s2 = np.zeros(2, dtype=np.int64)
    e = np.zeros(2, dtype=np.int64)
    spec = build_program(SINGLE, [], ADE(), type_set=(s, s2, e))
    dgp = TypeDgp(s, s2, e, [1 - p_responder, p_responder], offer_probs=(1, 0, 0, 0))
    return spec, dgp


def compliance_instance():
    resp = [z for z, _ in PROFILES for _ in (0, 1)]
    s = encode_type([0, 0, 0, 0], resp)
    e = pack_selection({k: PROFILES[k] for k in range(4)})
    return TypeDgp([s], [s], [e], [1.0])


@pytest.fixture(scope="module")
def benchmark():
    config, cons, dgp = benchmark_dgp()
    return build_program(config, cons, ADE()), dgp


class TestConfig:
    @pytest.mark.parametrize("kw", [dict(alpha=0.0), dict(alpha=1.0), dict(method="nope"), dict(reps=50)])
    def test_validation(self, kw):
        with pytest.raises(InferenceError):
            InferenceConfig(**kw)


class TestRelaxedBox:
    def test_contains_point_bounds(self, benchmark):
        spec, dgp = benchmark
        rep = relaxed_box_ci(spec, sample_dataset(dgp, 2000, seed=0), InferenceConfig(method="relaxed_box"))
        pb = rep.point_bounds
        assert rep.lower_ci <= pb.lower + 1e-9 and rep.upper_ci >= pb.upper - 1e-9

    def test_zero_radius_reproduces_point_bounds(self, benchmark):
        spec, dgp = benchmark
        rep = relaxed_box_ci(spec, sample_dataset(dgp, 2000, seed=1), InferenceConfig(method="relaxed_box", kappa=0.0))
        assert rep.lower_ci == pytest.approx(rep.point_bounds.lower, abs=1e-6)
        assert rep.upper_ci == pytest.approx(rep.point_bounds.upper, abs=1e-6)

    def test_alpha_monotonicity(self, benchmark):
        spec, dgp = benchmark
        arr = sample_dataset(dgp, 20_000, seed=2)
        wide = relaxed_box_ci(spec, arr, InferenceConfig(method="relaxed_box", alpha=0.01))
        narrow = relaxed_box_ci(spec, arr, InferenceConfig(method="relaxed_box", alpha=0.2))
        assert wide.lower_ci <= narrow.lower_ci + 1e-9 and wide.upper_ci >= narrow.upper_ci - 1e-9

    def test_width_shrinks_with_sample_size(self, benchmark):
        spec, dgp = benchmark
        widths = []
        for n in (10_000, 100_000, 1_000_000):
            rep = relaxed_box_ci(spec, sample_dataset(dgp, n, seed=3), InferenceConfig(method="relaxed_box"))
            widths.append(rep.upper_ci - rep.lower_ci)
        assert widths[0] >= widths[1] - 1e-9 and widths[1] >= widths[2] - 1e-9
        assert widths[2] < widths[0]

    def test_bootstrap_kappa(self, benchmark):
        spec, dgp = benchmark
        cfg = InferenceConfig(method="relaxed_box", kappa_rule="bootstrap", reps=100)
        rep = relaxed_box_ci(spec, sample_dataset(dgp, 5000, seed=4), cfg)
        assert rep.lower_ci <= rep.point_bounds.lower + 1e-9


class TestBootstraps:
    @pytest.mark.parametrize("method", ["basis_bootstrap", "numerical_delta"])
    def test_degenerate_data_gives_point_bounds(self, method):
        config = TypeSpaceConfig()
        spec = build_program(config, ["dominance"], ADE())
        arr = sample_dataset(compliance_instance(), 800, seed=0)
        rep = confidence_interval(spec, arr, InferenceConfig(method=method, reps=100, keep_draws=True))
        assert rep.lower_ci == pytest.approx(rep.point_bounds.lower, abs=1e-12)
        assert rep.upper_ci == pytest.approx(rep.point_bounds.upper, abs=1e-12)
        assert np.allclose(rep.diagnostics["draws"]["lower"], 0.0)

    @pytest.mark.parametrize("method", ["basis_bootstrap", "numerical_delta", "relaxed_box"])
    def test_seed_determinism(self, benchmark, method):
        spec, dgp = benchmark
        arr = sample_dataset(dgp, 1000, seed=5)
        cfg = InferenceConfig(method=method, reps=100, seed=11)
        a = json.dumps(confidence_interval(spec, arr, cfg).to_dict(), sort_keys=True, default=str)
        b = json.dumps(confidence_interval(spec, arr, cfg).to_dict(), sort_keys=True, default=str)
        strip = lambda s: {k: v for k, v in json.loads(s)["diagnostics"].items() if k != "seconds"}
        assert strip(a) == strip(b)
        assert json.loads(a)["lower_ci"] == json.loads(b)["lower_ci"]

    def test_thread_count_does_not_change_results(self, benchmark):
        spec, dgp = benchmark
        arr = sample_dataset(dgp, 1000, seed=6)
        one = basis_bootstrap_ci(spec, arr, InferenceConfig(reps=100, threads=1))
        two = basis_bootstrap_ci(spec, arr, InferenceConfig(reps=100, threads=2))
        assert (one.lower_ci, one.upper_ci) == (two.lower_ci, two.upper_ci)

    def test_delta_draws_match_analytic_gradient(self):
        spec, dgp = two_type_instance(0.7)
        n, reps = 5000, 400
        rep = numerical_delta_ci(spec, sample_dataset(dgp, n, seed=7),
                                 InferenceConfig(method="numerical_delta", reps=reps, keep_draws=True))
        draws = np.array(rep.diagnostics["draws"]["lower"])
        sd = np.sqrt(0.7 * 0.3)
        assert abs(draws.mean()) <= 2 * sd / np.sqrt(reps)
        assert draws.std() == pytest.approx(sd, rel=0.15)

    def test_basis_bootstrap_matches_normal_approximation(self):
        spec, dgp = two_type_instance(0.7)
        n, reps = 5000, 500
        rep = basis_bootstrap_ci(spec, sample_dataset(dgp, n, seed=8), InferenceConfig(reps=reps, keep_draws=True))
        boot = np.array(rep.diagnostics["draws"]["lower"])
        assert kstest(boot, norm(scale=np.sqrt(0.7 * 0.3)).cdf).statistic < 0.1

    def test_step_size_sensitivity(self, benchmark):
        spec, dgp = benchmark
        arr = sample_dataset(dgp, 5000, seed=9)
        widths = []
        for rule in (1 / 3, 1 / 6):
            rep = numerical_delta_ci(spec, arr, InferenceConfig(method="numerical_delta", e_n_rule=rule))
            widths.append(rep.upper_ci - rep.lower_ci)
        assert abs(widths[0] - widths[1]) / widths[0] < 0.2

    @pytest.mark.parametrize("method", ["basis_bootstrap", "numerical_delta"])
    def test_contains_point_bounds(self, benchmark, method):
        spec, dgp = benchmark
        rep = confidence_interval(spec, sample_dataset(dgp, 2000, seed=12), InferenceConfig(method=method))
        assert rep.lower_ci <= rep.point_bounds.lower + 1e-9
        assert rep.upper_ci >= rep.point_bounds.upper - 1e-9

    def test_block_mismatch(self, benchmark):
        spec, _ = benchmark
        arr = sample_dataset(two_type_instance()[1], 100, seed=0)
        with pytest.raises(InferenceError):
            basis_bootstrap_ci(spec, arr)
