"""Catalog: densities, schemes, closed forms, special constants, windows."""

import json
import math

import numpy as np
import pytest
from scipy import integrate, stats

from steinbounds import catalog as cat
from steinbounds import closedform as cf
from steinbounds.engine import NormSymbol, mixed_coupled_bound, value_coupled_bound, deriv_coupled_bound
from steinbounds.errors import ValidityError
from steinbounds.special import log_gamma

ALL_SOLVABLE = [
    ("normal", {}),
    ("gamma", {"r": 2.0, "lam": 1.0}),
    ("gamma", {"r": 0.7, "lam": 2.5}),
    ("exponential", {"lam": 1.0}),
    ("beta", {"alpha": 2.0, "beta": 3.0}),
    ("beta", {"alpha": 0.6, "beta": 1.4}),
    ("arcsine", {}),
    ("student_t", {"d": 9.0, "delta": 3.0}),
    ("inverse_gamma", {"alpha": 9.0, "beta": 2.0}),
    ("prr", {"s": 0.5}),
    ("prr", {"s": 1.0}),
    ("prr", {"s": 2.5}),
    ("vg", {"r": 3.0, "theta": 0.0, "sigma": 1.0}),
    ("vg", {"r": 3.0, "theta": 0.5, "sigma": 1.0}),
    ("vg", {"r": 1.5, "theta": -0.4, "sigma": 0.8}),
    ("quartic", {}),
]


class TestRegistry:
    def test_unknown_family(self):
        with pytest.raises(ValueError):
            cat.make_spec("cauchy")

    def test_unknown_and_missing_params(self):
        with pytest.raises(ValueError):
            cat.make_spec("normal", r=1.0)
        with pytest.raises(ValueError):
            cat.make_spec("gamma", r=1.0)

    def test_invalid_values(self):
        with pytest.raises(ValueError):
            cat.make_spec("gamma", r=-1.0, lam=1.0)
        with pytest.raises(ValueError):
            cat.make_spec("prr", s=0.7)
        with pytest.raises(ValueError):
            cat.make_spec("vg", r=1.0, theta=0.0, sigma=0.0)


class TestDensities:
    @pytest.mark.parametrize("family,params", ALL_SOLVABLE)
    def test_normalization(self, family, params):
        spec = cat.make_spec(family, **params)
        lo, hi = spec.support
        pts = [p for p in spec.delicate_points if lo < p < hi]
        sections = [lo, *pts, hi]
        total = 0.0
        for a, b in zip(sections[:-1], sections[1:]):
            val, _ = integrate.quad(lambda t: float(spec.density(t)), a, b, limit=300)
            total += val
        assert total == pytest.approx(1.0, abs=1e-8)

    def test_scalar_and_vector_agree(self):
        spec = cat.make_spec("vg", r=3.0, theta=0.5, sigma=1.0)
        xs = np.array([-2.0, -0.3, 0.4, 5.0])
        vec = spec.density(xs)
        for x, v in zip(xs, vec):
            assert spec.density(float(x)) == pytest.approx(v, rel=1e-13)


class TestSchemes:
    def test_normal_scheme_values(self):
        spec = cat.make_spec("normal")
        sch = spec.scheme()
        assert [sch.a(j) for j in range(4)] == [1.0, 2.0, 3.0, 4.0]
        assert sch.c_level(0) == pytest.approx(1.2533141373155003, rel=1e-12)
        assert sch.d_level(5) == 2.0

    def test_student_t_level_zero(self):
        spec = cat.make_spec("student_t", d=9.0, delta=3.0)
        sch = spec.scheme()
        assert sch.a(0) == pytest.approx(8.0)
        # sqrt(pi) Gamma(4.5) / (2 * 3 * Gamma(5)); mpmath 0.14317154020266
        assert sch.c_level(0) == pytest.approx(0.1431715402026598, rel=1e-12)

    def test_vg_symmetric_first_derivative_constant(self):
        spec = cat.make_spec("vg", r=3.0, theta=0.0, sigma=1.0)
        assert spec.scheme().d_level(0) == pytest.approx(2.0 / 3.0, rel=1e-14)

    def test_gamma_order_zero_constant(self):
        assert cat.gamma_solution_constant(1.0) == pytest.approx(math.e, rel=1e-13)

    def test_beta_cumulative_coupling(self):
        spec = cat.make_spec("beta", alpha=2.0, beta=3.0)
        sch = spec.scheme()
        # cumulative sums of the per-level increments alpha + beta + 2i
        for j in range(6):
            assert sch.a(j) == pytest.approx(sum(5.0 + 2.0 * i for i in range(j + 1)))
            assert sch.a(j) == pytest.approx((j + 1) * (5.0 + j))


class TestWindows:
    def test_student_t_windows(self):
        spec = cat.make_spec("student_t", d=9.0, delta=3.0)
        assert spec.max_order("lemma23i") == 4
        assert spec.max_order("lemma23ii") == 5
        with pytest.raises(ValidityError):
            spec.check_order(5, "lemma23i")

    def test_inverse_gamma_window(self):
        spec = cat.make_spec("inverse_gamma", alpha=9.0, beta=2.0)
        assert spec.max_order("lemma23i") == 3
        with pytest.raises(ValidityError):
            cf.bound_for(spec, 4, "lemma23i")

    def test_level_constant_raises_outside_window(self):
        spec = cat.make_spec("student_t", d=5.0, delta=1.0)
        with pytest.raises(ValidityError):
            spec.scheme().c_level(3)


class TestQuantiles:
    def test_normal_median(self):
        spec = cat.make_spec("normal")
        assert cat.quantile(spec, 0.5) == pytest.approx(0.0, abs=1e-8)

    def test_gamma_quantiles_vs_scipy(self):
        spec = cat.make_spec("gamma", r=2.0, lam=1.0)
        for p in (1e-6, 0.25, 0.9):
            assert cat.quantile(spec, p) == pytest.approx(stats.gamma.ppf(p, 2.0), rel=1e-7, abs=1e-9)

    def test_beta_median_vs_scipy(self):
        assert cat.beta_median(2.0, 3.0) == pytest.approx(stats.beta.median(2.0, 3.0), abs=1e-10)
        assert cat.beta_median(0.5, 0.5) == pytest.approx(0.5, abs=1e-10)


class TestVgConstants:
    def test_symmetric_upper_branch(self):
        f_coef, fp_coef = cat.vg_base_constants(3.0, 0.0, 1.0)
        # (2/3 + pi/2); mpmath 2.237462993461563
        assert f_coef == pytest.approx(2.2374629934615633, rel=1e-12)
        assert fp_coef == pytest.approx(f_coef, rel=1e-12)  # sigma = root = 1

    def test_lower_branch_value(self):
        # 6 Gamma(1/2) (1 - 1/sqrt(2))^(-1/2); mpmath 19.65040602206902
        c = cat.vg_scale_constant(1.0, 1.0, 1.0)
        assert c == pytest.approx(19.650406022069017, rel=1e-12)

    def test_theta_zero_limit_of_upper_branch(self):
        for r in (2.0, 3.5, 7.0):
            want = math.sqrt(math.pi) * math.exp(log_gamma(r / 2.0) - log_gamma((r + 1.0) / 2.0))
            assert cat.vg_scale_constant(r, 0.0, 1.0) == pytest.approx(want, rel=1e-13)

    def test_bessel_tail_constant_branches(self):
        want = math.sqrt(math.pi) * math.exp(log_gamma(1.5) - log_gamma(2.0))
        assert cat.bessel_tail_constant(1.0, 0.0) == pytest.approx(want, rel=1e-13)
        low = cat.bessel_tail_constant(0.25, 0.5)
        assert low == pytest.approx(6.0 * math.exp(log_gamma(0.75)) / 0.5, rel=1e-13)
        with pytest.raises(ValueError):
            cat.bessel_tail_constant(-0.6, 0.0)


class TestQuarticCoefficients:
    def test_order_zero(self):
        assert cat.quartic_a_coeffs(0) == (1.0,)

    def test_order_one(self):
        a0, a1 = cat.quartic_a_coeffs(1)
        assert a1 == 1.0
        # 3/(6 c1)^(1/3); mpmath 2.476203320048301
        assert a0 == pytest.approx(2.4762033200483013, rel=1e-12)

    def test_order_three_recursion_hand_unrolled(self):
        c1 = cat.quartic_normalizer()
        u1, u2, u3 = (6 * c1) ** (1 / 3), (6 * c1) ** (2 / 3), 6 * c1
        rows = [cat.quartic_a_coeffs(n) for n in range(4)]
        expect = 9.0 / u1 * rows[2][0] + 18.0 / u2 * rows[1][0] + 6.0 / u3 * rows[0][0]
        assert rows[3][0] == pytest.approx(expect, rel=1e-13)

    def test_recursion_reproduces_seeds(self):
        c1 = cat.quartic_normalizer()
        u1, u2 = (6 * c1) ** (1 / 3), (6 * c1) ** (2 / 3)
        for n in range(3, 9):
            row = cat.quartic_a_coeffs(n)
            assert row[n] == 1.0
            assert row[n - 1] == pytest.approx(3.0 * n / u1, rel=1e-13)
            assert row[n - 2] == pytest.approx(12.0 * n * (n - 1) / u2, rel=1e-13)
            # the three-term recursion applied at the seed positions gives
            # the same values back
            prev1, prev2 = cat.quartic_a_coeffs(n - 1), cat.quartic_a_coeffs(n - 2)
            assert row[n - 1] == pytest.approx(3.0 * n / u1 * prev1[n - 1], rel=1e-13)
            assert row[n - 2] == pytest.approx(
                3.0 * n / u1 * prev1[n - 2] + 3.0 * n * (n - 1) / u2 * prev2[n - 2], rel=1e-13
            )


class TestQuarticBounds:
    def test_bounded_order_zero(self):
        bc = cf.quartic_bounds(0, "bounded")
        assert bc.get(NormSymbol.centered()) == pytest.approx(1.6870050989000126, rel=1e-12)

    def test_iterated_order_zero_falls_back(self):
        bc = cf.quartic_bounds(0, "iterated")
        assert bc.get(NormSymbol.centered()) == pytest.approx(1.6870050989000126, rel=1e-12)

    def test_iterated_order_one(self):
        bc = cf.quartic_bounds(1, "iterated")
        assert bc.items() == [(NormSymbol.centered(), pytest.approx(2.0))]

    def test_lipschitz_table(self):
        assert cf.quartic_bounds(2, "lipschitz").get(NormSymbol.test_deriv(1)) == 4.0
        assert cf.quartic_bounds(2, "lipschitz_iterated").get(NormSymbol.test_deriv(1)) == 8.0
        with pytest.raises(ValidityError):
            cf.quartic_bounds(3, "lipschitz")


class TestMvnBounds:
    def test_flat_partial(self):
        bc = cf.mvn_bounds(2, [1.0, 1.0], "partial")
        assert bc.items() == [(NormSymbol.test_deriv(2), pytest.approx(0.5))]

    def test_first_derivative(self):
        bc = cf.mvn_bounds(1, [2.0, 1.0], "first")
        assert bc.get(NormSymbol.centered()) == pytest.approx(2.0 * math.sqrt(math.pi / 2.0), rel=1e-13)

    def test_derivative_trading(self):
        bc = cf.mvn_bounds(2, [1.0, 1.0], "lower")
        # Gamma(1)/(sqrt(2) Gamma(1.5)) = sqrt(2/pi)
        assert bc.get(NormSymbol.test_deriv(1)) == pytest.approx(0.7978845608028654, rel=1e-12)

    def test_iterated_identity_covariance(self):
        bc = cf.mvn_bounds(2, [1.0, 1.0, 1.0], "iterated")
        assert bc.get(NormSymbol.test_deriv(1)) == pytest.approx(1.2533141373155003, rel=1e-12)
        assert bc.get(NormSymbol.centered()) == pytest.approx(math.pi / 2.0, rel=1e-12)
        with pytest.raises(ValidityError):
            cf.mvn_bounds(2, [2.0, 1.0], "iterated")

    def test_order_zero_unsupported(self):
        with pytest.raises(ValidityError):
            cf.mvn_bounds(0, [1.0], "partial")


class TestRefinedConstants:
    def test_exponential(self):
        table = cat.refined_small_case_constants("exponential", lam=2.0)
        assert table["f"].get(NormSymbol.test_deriv(1)) == pytest.approx(0.5)
        assert table["f'"].get(NormSymbol.test_deriv(1)) == pytest.approx(1.0)
        assert table["f''"].get(NormSymbol.test_deriv(1)) == pytest.approx(4.0 / 3.0)
        assert table["f''"].get(NormSymbol.test_deriv(2)) == pytest.approx(2.0 / 3.0)

    def test_beta_lipschitz_table_branches(self):
        assert cat.beta_lipschitz_constant(1.0, 1.0) == pytest.approx(4.0, rel=1e-12)
        assert cat.beta_lipschitz_constant(0.5, 0.5) == pytest.approx(4.0)
        b = math.exp(log_gamma(0.5) + log_gamma(0.8) - log_gamma(1.3))
        assert cat.beta_lipschitz_constant(0.5, 0.8) == pytest.approx(2.0 * 1.3 * b, rel=1e-12)
        assert cat.beta_lipschitz_constant(0.5, 2.0) == pytest.approx(2.0 * 2.5 / 0.5, rel=1e-12)
        assert cat.beta_lipschitz_constant(2.0, 0.5) == pytest.approx(2.0 * 2.5 / 0.5, rel=1e-12)
        assert cat.beta_lipschitz_constant(2.0, 2.0) == pytest.approx(
            2.0 * 2.0 * math.sqrt(math.pi) * math.exp(log_gamma(2.0) - log_gamma(2.5)), rel=1e-12
        )

    def test_arcsine_table(self):
        table = cat.refined_small_case_constants("arcsine")
        assert table["f'"].get(NormSymbol.test_deriv(1)) == pytest.approx(4.0)
        assert table["f''"].get(NormSymbol.test_deriv(1)) == pytest.approx(6.0 * math.pi, rel=1e-13)
        assert table["f''"].get(NormSymbol.test_deriv(2)) == pytest.approx(1.5 * math.pi, rel=1e-13)
        alts = table["as_printed"]["f'_min"]
        assert alts[0].get(NormSymbol.test_deriv(1)) == pytest.approx(1.0)
        assert alts[1].get(NormSymbol.centered()) == pytest.approx(1.0 / math.pi, rel=1e-13)

    def test_beta_median_bound(self):
        table = cat.refined_small_case_constants("beta", alpha=2.0, beta=3.0)
        m = cat.beta_median(2.0, 3.0)
        p_m = float(cat.make_spec("beta", alpha=2.0, beta=3.0).density(m))
        assert table["f"].get(NormSymbol.centered()) == pytest.approx(
            1.0 / (2.0 * m * (1.0 - m) * p_m), rel=1e-10
        )


class TestLangevinExponents:
    def test_examples(self):
        assert cat.langevin_exponents(0.1, 1.0, 2.0, 3.0) == pytest.approx((0.1, 0.1, 0.5, 1.0, 1.5))
        assert cat.langevin_exponents(0.1, 0.0, 0.0, 0.0) == pytest.approx((0.1,) * 5)
        assert cat.langevin_exponents(2.0, 1.0, 2.0, 3.0) == pytest.approx((2.0,) * 5)

    def test_requires_positive_eps(self):
        with pytest.raises(ValueError):
            cat.langevin_exponents(0.0, 1.0, 1.0, 1.0)


class TestGammaOneStep:
    def test_reference_values(self):
        bc = cf.gamma_onestep_bound(1, 1.0)
        assert bc.get(NormSymbol.test_deriv(1)) == pytest.approx(math.e ** 2 / 2.0, rel=1e-12)
        bc = cf.gamma_onestep_bound(1, 2.0)
        # 2 e^3 Gamma(3) / 27; mpmath 2.975635099731506
        assert bc.get(NormSymbol.test_deriv(1)) == pytest.approx(2.9756350997315063, rel=1e-12)

    def test_starts_at_order_one(self):
        with pytest.raises(ValidityError):
            cf.gamma_onestep_bound(0, 1.0)


class TestEngineAgainstClosedForms:
    @pytest.mark.parametrize(
        "family,params,mode,n_lo",
        [
            ("normal", {}, "i", 0),
            ("normal", {}, "ii", 0),
            ("gamma", {"r": 1.7, "lam": 0.8}, "i", 0),
            ("beta", {"alpha": 1.2, "beta": 2.4}, "i", 0),
            ("beta", {"alpha": 1.2, "beta": 2.4}, "iii", 1),
            ("arcsine", {}, "i", 0),
            ("student_t", {"d": 19.0, "delta": 2.0}, "i", 0),
            ("student_t", {"d": 19.0, "delta": 2.0}, "ii", 1),
            ("inverse_gamma", {"alpha": 18.0, "beta": 1.5}, "i", 0),
            ("prr", {"s": 3.0}, "i", 1),
            ("prr", {"s": 3.0}, "ii", 1),
            ("prr", {"s": 0.5}, "ii", 1),
            ("vg", {"r": 2.2, "theta": 0.0, "sigma": 1.4}, "ii", 0),
        ],
    )
    def test_agreement(self, family, params, mode, n_lo):
        spec = cat.make_spec(family, **params)
        for n in range(n_lo, 9):
            closed = cf.closed_form_bound(spec, n, mode)
            if spec.coupling_kind == "value":
                engine = value_coupled_bound(spec.scheme(), mode, n)
            else:
                engine = deriv_coupled_bound(spec.scheme(), mode, n)
            assert engine.allclose(closed, rtol=1e-10), (family, mode, n)

    def test_vg_general_display_matches_mixed_chain(self):
        spec = cat.make_spec("vg", r=2.5, theta=0.7, sigma=1.1)
        for n in range(2, 8):
            closed = cf.closed_form_bound(spec, n, "mixed")
            engine = mixed_coupled_bound(spec.scheme(), n - 1)
            assert engine.allclose(closed, rtol=1e-10), n

    def test_vg_symmetric_chain_recovers_first_derivative_base(self):
        spec = cat.make_spec("vg", r=3.0, theta=0.0, sigma=1.0)
        closed = cf.closed_form_bound(spec, 1, "ii")
        assert closed.items() == [(NormSymbol.centered(), pytest.approx(2.0 / 3.0, rel=1e-13))]


class TestCatalogJson:
    def test_quartic_contains_normalizer(self):
        doc = cat.catalog_json(cat.make_spec("quartic"))
        assert doc["c1"] == pytest.approx(0.29638321800332305, rel=1e-12)
        json.dumps(doc)  # serializable

    def test_vg_base_bounds_included(self):
        doc = cat.catalog_json(cat.make_spec("vg", r=3.0, theta=0.0, sigma=1.0))
        assert doc["base_bounds"]["f"] == pytest.approx(2.2374629934615633, rel=1e-12)
        assert doc["level_constants"]["D"][0] == pytest.approx(2.0 / 3.0)

    def test_window_serialized(self):
        doc = cat.catalog_json(cat.make_spec("inverse_gamma", alpha=9.0, beta=2.0))
        assert doc["max_order"] == 3
