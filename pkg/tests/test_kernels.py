import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fmbo.graphs import complete_graph
from fmbo.kernels import (
    KERNEL_NAMES,
    FmFunction,
    Hyperparams,
    KernelSpec,
    ShapeError,
    baseline_kernel_eval,
    continuous_rbf,
    cross_gram,
    default_family,
    default_hyperparams,
    diag_gram,
    discrete_gram,
    fm_family,
    fm_function_eval,
    fm_kernel_eval,
    fm_lap,
    fm_nn,
    gram,
    kernel_eval,
    kernel_spec_from_name,
    nn_kernel_eval,
    weighted_sq_dist,
)
from fmbo.space import MixedPoint, SearchSpace, points_to_arrays

from conftest import oracle_kernel, oracle_nn, random_hp, random_space


class TestHyperparams:
    def test_validate_accepts_positive(self):
        Hyperparams([1.0], [0.0], [0.5], 1.0, 1e-2).validate()

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(theta=[0.0], alpha=[1.0], beta=[1.0], sigma_f2=1.0, sigma_n2=1e-2),
            dict(theta=[1.0], alpha=[-0.1], beta=[1.0], sigma_f2=1.0, sigma_n2=1e-2),
            dict(theta=[1.0], alpha=[1.0], beta=[-1.0], sigma_f2=1.0, sigma_n2=1e-2),
            dict(theta=[1.0], alpha=[1.0], beta=[1.0], sigma_f2=0.0, sigma_n2=1e-2),
            dict(theta=[1.0], alpha=[1.0], beta=[1.0], sigma_f2=1.0, sigma_n2=0.0),
            dict(theta=[math.nan], alpha=[1.0], beta=[1.0], sigma_f2=1.0, sigma_n2=1e-2),
        ],
    )
    def test_validate_rejects(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparams(**kwargs).validate()


class TestFmFunctionValidation:
    def test_unknown_variant(self):
        with pytest.raises(ValueError):
            FmFunction("sqexp")

    def test_family_weight_constraints(self):
        with pytest.raises(ValueError):
            fm_family([-0.1, 0.5], [1.0, 1.0], [1, 1])
        with pytest.raises(ValueError):
            fm_family([0.0, 0.0], [1.0, 1.0], [1, 1])

    def test_family_exponent_range(self):
        with pytest.raises(ValueError):
            fm_family([1.0], [0.0], [1])
        with pytest.raises(ValueError):
            fm_family([1.0], [2.5], [1])
        fm_family([1.0], [2.0], [1])  # boundary tau = 2 is admissible

    def test_family_power_positive(self):
        with pytest.raises(ValueError):
            fm_family([1.0], [1.0], [0])

    def test_family_shape_mismatch(self):
        with pytest.raises(ShapeError):
            fm_family([1.0, 1.0], [1.0], [1])

    def test_nn_sigma_constraints(self):
        with pytest.raises(ShapeError):
            fm_nn(np.ones((2, 3)))
        with pytest.raises(ValueError):
            fm_nn(np.array([[1.0, 0.5], [0.2, 1.0]]))
        with pytest.raises(ValueError):
            fm_nn(np.array([[1.0, 0.0], [0.0, -1.0]]))


class TestSpecConstruction:
    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_all_names_build(self, name, rng):
        spec = kernel_spec_from_name(name, random_space(rng))
        assert spec.form in ("modfm", "prod", "add")

    def test_unknown_name(self, rng):
        with pytest.raises(ValueError):
            kernel_spec_from_name("rbf", random_space(rng))

    def test_modfm_requires_fm(self, rng):
        with pytest.raises(ValueError):
            KernelSpec("modfm", random_space(rng))

    def test_hyperparam_shape_checks(self, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name("modlap", space)
        hp = Hyperparams([1.0], np.ones(2), np.ones(2), 1.0, 1e-2)  # theta too short
        with pytest.raises(ShapeError):
            spec.validate_hyperparams(hp)


class TestWeightedSqDist:
    def test_matches_loop(self, rng):
        for _ in range(20):
            c = rng.normal(size=3)
            c2 = rng.normal(size=3)
            theta = rng.uniform(0.3, 2.0, size=3)
            expected = sum((c[d] - c2[d]) ** 2 / theta[d] ** 2 for d in range(3))
            assert weighted_sq_dist(c, c2, theta) == pytest.approx(expected, rel=1e-12)

    def test_shape_mismatch(self):
        with pytest.raises(ShapeError):
            weighted_sq_dist([1.0], [1.0, 2.0], [1.0])


class TestNnKernel:
    def test_matches_scalar_oracle(self, rng):
        sigma = np.array([[1.5, 0.3], [0.3, 0.8]])
        for _ in range(30):
            c = rng.normal(size=2)
            c2 = rng.normal(size=2)
            assert nn_kernel_eval(c, c2, sigma) == pytest.approx(
                oracle_nn(c, c2, sigma), abs=1e-12
            )

    def test_bounded(self, rng):
        sigma = np.eye(3)
        for _ in range(100):
            c = rng.normal(scale=5.0, size=3)
            c2 = rng.normal(scale=5.0, size=3)
            assert -1.0 <= nn_kernel_eval(c, c2, sigma) <= 1.0

    def test_self_value_below_one(self, rng):
        sigma = np.eye(2)
        for _ in range(20):
            c = rng.normal(size=2)
            assert nn_kernel_eval(c, c, sigma) <= 1.0


class TestAgainstOracle:
    """Vectorized kernels against the double-loop oracle in conftest."""

    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_cross_gram_matches_oracle(self, name, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name(name, space)
        hp = random_hp(rng, space)
        pts1 = space.sample_many(6, rng)
        pts2 = space.sample_many(5, rng)
        k = cross_gram(spec, hp, pts1, pts2)
        for i, x in enumerate(pts1):
            for j, x2 in enumerate(pts2):
                assert k[i, j] == pytest.approx(oracle_kernel(spec, hp, x, x2), rel=1e-10)

    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_scalar_eval_matches_oracle(self, name, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name(name, space)
        hp = random_hp(rng, space)
        for _ in range(10):
            x, x2 = space.sample(rng), space.sample(rng)
            assert kernel_eval(spec, hp, x, x2) == pytest.approx(
                oracle_kernel(spec, hp, x, x2), rel=1e-10
            )

    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_diag_matches_gram_diagonal(self, name, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name(name, space)
        hp = random_hp(rng, space)
        pts = space.sample_many(8, rng)
        assert np.allclose(diag_gram(spec, hp, pts), np.diag(gram(spec, hp, pts)),
                           rtol=1e-12)


class TestSymmetry:
    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_gram_exactly_symmetric(self, name, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name(name, space)
        hp = random_hp(rng, space)
        k = gram(spec, hp, space.sample_many(9, rng))
        assert np.array_equal(k, k.T)

    @pytest.mark.parametrize("name", KERNEL_NAMES)
    def test_scalar_eval_exactly_symmetric(self, name, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name(name, space)
        hp = random_hp(rng, space)
        for _ in range(10):
            x, x2 = space.sample(rng), space.sample(rng)
            assert kernel_eval(spec, hp, x, x2) == kernel_eval(spec, hp, x2, x)

    def test_eval_form_guards(self, rng):
        space = random_space(rng)
        x, x2 = space.sample(rng), space.sample(rng)
        hp = random_hp(rng, space)
        with pytest.raises(ValueError):
            fm_kernel_eval(kernel_spec_from_name("addlap", space), hp, x, x2)
        with pytest.raises(ValueError):
            baseline_kernel_eval(kernel_spec_from_name("modlap", space), hp, x, x2)


class TestCompleteGraphClosedForm:
    @pytest.mark.parametrize("n", range(2, 11))
    def test_single_factor_modlap(self, n):
        # A single K_n factor with the regularized-inverse modulating function:
        # same-vertex (h(0) + (n-1) h(n))/n, distinct (h(0) - h(n))/n.
        space = SearchSpace(np.array([-1.0]), np.array([1.0]), (complete_graph(n),))
        spec = kernel_spec_from_name("modlap", space)
        hp = Hyperparams([0.8], [0.9], [0.6], 1.3, 1e-2)
        x = MixedPoint.make([0.3], [0])
        same = MixedPoint.make([-0.2], [0])
        other = MixedPoint.make([-0.2], [1])
        d2 = (0.3 + 0.2) ** 2 / 0.8**2
        h = lambda lam: 1.0 / (1.0 + 0.6 * lam + 0.9 * d2)
        off = 1.3 * (h(0.0) - h(float(n))) / n
        diag = 1.3 * (h(0.0) + (n - 1) * h(float(n))) / n
        assert abs(fm_kernel_eval(spec, hp, x, other) - off) < 1e-10
        assert abs(fm_kernel_eval(spec, hp, x, same) - diag) < 1e-10


class TestBaselineStructure:
    def test_add_is_average_of_exposed_parts(self, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name("addlap", space)
        hp = random_hp(rng, space)
        pts = space.sample_many(6, rng)
        c, v = points_to_arrays(pts)
        k = cross_gram(spec, hp, pts, pts)
        plain_sum = continuous_rbf(hp, c, c) + discrete_gram(spec, hp, v, v)
        assert np.allclose(k, hp.sigma_f2 * plain_sum / 2.0, rtol=1e-12)

    def test_prod_factorizes(self, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name("proddif", space)
        hp = random_hp(rng, space)
        pts = space.sample_many(6, rng)
        c, v = points_to_arrays(pts)
        k = cross_gram(spec, hp, pts, pts)
        expected = hp.sigma_f2 * continuous_rbf(hp, c, c) * discrete_gram(spec, hp, v, v)
        assert np.allclose(k, expected, rtol=1e-12)

    def test_rbf_has_no_half_factor(self):
        hp = Hyperparams([1.0], [1.0], [1.0], 1.0, 1e-2)
        c1 = np.array([[0.0]])
        c2 = np.array([[1.0]])
        assert continuous_rbf(hp, c1, c2)[0, 0] == pytest.approx(math.exp(-1.0))


class TestFmFunctionEval:
    def test_lap_closed_form(self):
        val = fm_function_eval(fm_lap(), 2.0, 0.5, 0.7, 0.3)
        assert val == pytest.approx(1.0 / (1.0 + 0.3 * 2.0 + 0.7 * 0.5), rel=1e-14)

    def test_family_exponent_applies_to_distance(self):
        fm = fm_family([1.0], [1.0], [2])
        d2 = 4.0  # distance 2, so tau = 1 contributes d2**0.5 = 2
        val = fm_function_eval(fm, 1.0, d2, 0.5, 0.25)
        assert val == pytest.approx(1.0 / (1.0 + 0.25 + 0.5 * 2.0) ** 2, rel=1e-14)

    def test_default_family_is_convex_combination_at_zero(self):
        fm = default_family()
        assert fm_function_eval(fm, 0.0, 0.0, 1.0, 1.0) == pytest.approx(1.0)


class TestDefaultHyperparams:
    def test_matches_spec_shapes(self, rng):
        space = random_space(rng)
        spec = kernel_spec_from_name("modlap", space)
        hp = default_hyperparams(spec)
        spec.validate_hyperparams(hp)


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 100_000), name=st.sampled_from(KERNEL_NAMES))
def test_gram_psd_property(seed, name):
    rng = np.random.default_rng(seed)
    space = random_space(rng, d_c=int(rng.integers(1, 3)),
                         sizes=tuple(int(rng.integers(2, 7)) for _ in range(2)))
    spec = kernel_spec_from_name(name, space)
    hp = random_hp(rng, space)
    k = gram(spec, hp, space.sample_many(int(rng.integers(2, 10)), rng))
    scale = max(np.trace(k) / k.shape[0], 1e-300)
    assert np.linalg.eigvalsh(k).min() / scale >= -1e-8


@settings(max_examples=25, deadline=None)
@given(
    lam=st.floats(0.0, 20.0),
    d2a=st.floats(0.0, 9.0),
    d2b=st.floats(0.0, 9.0),
    alpha=st.floats(0.1, 2.0),
    beta=st.floats(0.1, 2.0),
)
def test_lap_modulating_function_decreasing_in_distance(lam, d2a, d2b, alpha, beta):
    lo, hi = sorted([d2a, d2b])
    f_lo = fm_function_eval(fm_lap(), lam, lo, alpha, beta)
    f_hi = fm_function_eval(fm_lap(), lam, hi, alpha, beta)
    assert f_hi <= f_lo + 1e-12
