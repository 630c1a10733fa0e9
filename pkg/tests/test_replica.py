"""Population-dynamics tests against the closed-form fixed points."""
import numpy as np
import pytest

from specdetect.ema import ncut_ema, ratiocut_ema, regular_solution
from specdetect.errors import InvalidSpec, UnstableField
from specdetect.graphs import Bimodal, Poisson, Regular
from specdetect.replica import (
    Model,
    PdConfig,
    Population,
    cavity_sweep,
    element_distribution,
    evaluate_lambda2,
    mixing_probability,
    run_population_dynamics,
)


def _config(**kw):
    base = dict(
        model=Model.REGULAR_L,
        spec=Regular(3),
        p1=0.5,
        gamma=0.1,
        seed=5,
        population_size=15000,
        equilibration_sweeps=40,
        measurement_sweeps=20,
        phi_bisection_tolerance=1e-4,
    )
    base.update(kw)
    return PdConfig(**base)


@pytest.fixture(scope="module")
def regular_detectable():
    return run_population_dynamics(_config())


@pytest.fixture(scope="module")
def regular_plateau():
    return run_population_dynamics(_config(gamma=0.3, seed=3))


class TestRegularFixedPoint:
    def test_lambda2_anchor(self, regular_detectable):
        assert regular_detectable.lambda2 == pytest.approx(0.112821, abs=1e-3)

    def test_A_concentrates_on_analytic_value(self, regular_detectable):
        a_exact = regular_solution(3, 0.5, 0.1).a
        for A in regular_detectable.population.A:
            assert abs(A.std() / A.mean()) < 1e-2
            assert A.mean() == pytest.approx(a_exact, rel=5e-3)

    def test_constraint_residuals(self, regular_detectable):
        assert regular_detectable.residual_orthogonality < 1e-3
        assert regular_detectable.residual_normalization < 1e-3

    def test_modules_have_opposite_means(self, regular_detectable):
        m1 = regular_detectable.m1
        assert m1[0] > 0.1 and m1[1] < -0.1
        assert regular_detectable.fraction_correct > 0.85

    def test_psi_small(self, regular_detectable):
        assert abs(regular_detectable.psi) < 0.05


class TestPlateau:
    def test_lambda2_is_band_edge(self, regular_plateau):
        assert regular_plateau.lambda2 == pytest.approx(0.171573, abs=2e-3)

    def test_m1_hat_vanishes(self, regular_plateau):
        assert np.abs(regular_plateau.m1_hat).max() < 0.02

    def test_fraction_correct_is_half(self, regular_plateau):
        assert regular_plateau.fraction_correct == pytest.approx(0.5, abs=0.03)


class TestEvaluateLambda2:
    def test_regular_detectable(self, regular_detectable):
        lam, err = evaluate_lambda2(regular_detectable, n_pairs=10**6)
        assert err < 0.01
        assert lam == pytest.approx(0.112821, abs=max(4 * err, 0.005))

    def test_regular_plateau(self, regular_plateau):
        lam, err = evaluate_lambda2(regular_plateau, n_pairs=10**6)
        assert lam == pytest.approx(0.171573, abs=0.01)

    def test_sign_flip_invariance(self, regular_detectable):
        lam, _ = evaluate_lambda2(regular_detectable, n_pairs=10**5, seed=2)
        res = regular_detectable
        for pop in (res.population, res.conjugate_population):
            for h in pop.H:
                h *= -1.0
        res.psi = -res.psi
        try:
            flipped, _ = evaluate_lambda2(res, n_pairs=10**5, seed=2)
        finally:
            for pop in (res.population, res.conjugate_population):
                for h in pop.H:
                    h *= -1.0
            res.psi = -res.psi
        assert flipped == pytest.approx(lam, abs=1e-12)

    def test_gamma_zero(self):
        res = run_population_dynamics(_config(gamma=0.0, seed=9))
        assert res.lambda2 < 1e-3
        lam, err = evaluate_lambda2(res, n_pairs=10**5)
        assert lam == pytest.approx(0.0, abs=0.01)


class TestGeneralModels:
    def test_bimodal_L_close_to_ema(self):
        spec = Bimodal(3, 6, 0.5)
        res = run_population_dynamics(
            _config(model=Model.GENERAL_L, spec=spec, p1=0.6, seed=7)
        )
        sol, _ = ratiocut_ema(spec, 0.6, 0.1)
        assert res.lambda2 == pytest.approx(sol.lambda2, abs=0.01)
        assert res.residual_orthogonality < 1e-3
        assert res.residual_normalization < 1e-3
        lam, err = evaluate_lambda2(res, n_pairs=10**6)
        assert lam == pytest.approx(res.lambda2, abs=0.015)

    def test_ncut_regular_matches_closed_form(self):
        # the effective-medium solution is exact on regular graphs
        res = run_population_dynamics(
            _config(model=Model.GENERAL_NCUT, spec=Regular(6), gamma=0.2, seed=4)
        )
        ref = ncut_ema(6.0, 0.5, 0.2)
        assert res.lambda2 == pytest.approx(ref.lambda2, abs=2e-3)

    def test_ncut_poisson_runs(self):
        res = run_population_dynamics(
            _config(model=Model.GENERAL_NCUT, spec=Poisson(6.0), gamma=0.2, seed=11)
        )
        assert res.fraction_correct > 0.9
        assert res.residual_normalization < 1e-3
        # deep detectable regime: close to the effective-medium curve
        assert res.lambda2 == pytest.approx(
            ncut_ema(Poisson(6.0), 0.5, 0.2).lambda2, abs=0.01
        )


class TestSweepMechanics:
    def test_mixing_probability(self):
        assert mixing_probability(3.0, 0.5, 0.0) == 0.0
        assert mixing_probability(3.0, 0.5, 0.15) == pytest.approx(0.1)

    def test_excess_degree_frequencies(self):
        # bimodal {3,6} at b1=0.5: excess draws 3 w.p. 1/3 and 6 w.p. 2/3
        from specdetect.replica import _Engine

        eng = _Engine(_config(model=Model.GENERAL_L, spec=Bimodal(3, 6, 0.5)))
        np.testing.assert_allclose(eng.excess, [1 / 3, 2 / 3])

    def test_gamma_zero_module_independence(self):
        cfg = _config(gamma=0.0, population_size=2000)
        P = cfg.population_size
        rng_a = np.random.default_rng(1)
        rng_b = np.random.default_rng(1)
        pop_a = Population(
            [np.full(P, 3.0), np.full(P, 3.0)], [np.ones(P), -np.ones(P)]
        )
        pop_b = Population(
            [np.full(P, 3.0), np.full(P, 3.0)], [np.ones(P), 5.0 * np.ones(P)]
        )
        out_a = cavity_sweep(pop_a, cfg, -0.1, rng_a)
        out_b = cavity_sweep(pop_b, cfg, -0.1, rng_b)
        np.testing.assert_array_equal(out_a.H[0], out_b.H[0])
        np.testing.assert_array_equal(out_a.A[0], out_b.A[0])

    def test_unstable_field(self):
        cfg = _config(population_size=1000)
        P = 1000
        pop = Population(
            [np.full(P, -1.5), np.full(P, 3.0)], [np.ones(P), -np.ones(P)]
        )
        with pytest.raises(UnstableField):
            cavity_sweep(pop, cfg, -0.1, np.random.default_rng(0))


class TestElementDistribution:
    def test_histograms_and_fraction(self, regular_detectable):
        out = element_distribution(regular_detectable, bins=80)
        for key in ("module_1", "module_2"):
            centers, dens = out[key]
            width = centers[1] - centers[0]
            assert np.sum(dens) * width == pytest.approx(1.0, abs=1e-6)
        assert out["fraction_correct"] == pytest.approx(
            regular_detectable.fraction_correct, abs=0.02
        )

    def test_first_moment_orthogonality(self, regular_detectable):
        p1 = regular_detectable.config.p1
        m1 = regular_detectable.m1
        assert abs(p1 * m1[0] + (1 - p1) * m1[1]) < 1e-3


def test_config_validation():
    with pytest.raises(InvalidSpec):
        _config(population_size=100)
    with pytest.raises(InvalidSpec):
        _config(phi_bisection_tolerance=0.0)
    with pytest.raises(InvalidSpec):
        _config(p1=0.0)
    with pytest.raises(InvalidSpec):
        _config(init="weird")


@pytest.mark.slow
def test_doubling_invariance():
    a = run_population_dynamics(_config(seed=21))
    b = run_population_dynamics(
        _config(
            seed=22,
            population_size=30000,
            equilibration_sweeps=80,
            measurement_sweeps=40,
        )
    )
    assert a.lambda2 == pytest.approx(b.lambda2, abs=3e-3)
