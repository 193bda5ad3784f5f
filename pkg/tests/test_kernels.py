import math

import numpy as np
import pytest
from scipy.optimize import minimize_scalar

from limitlab.geometry import sphere_quadrature
from limitlab.kernels import (
    HomogeneousKernel,
    RadialProfile,
    dini_integral,
    dini_modulus,
    eval_dilate,
    heat_critical_radius,
    heat_sup_constant,
    mean_zero_defect,
    poisson_critical_radius,
    poisson_normalizer,
    poisson_sup_constant,
    sphere_norm,
    sup_dilate,
)

RULE2 = sphere_quadrature(2, 512)
RULE1 = sphere_quadrature(1, 1)


def golden_oracle(f, lo=1e-4, hi=1e4):
    """Independent maximizer of f over r > 0 (scipy, log axis)."""
    res = minimize_scalar(lambda u: -f(math.exp(u)), bounds=(math.log(lo), math.log(hi)),
                          method="bounded", options={"xatol": 1e-13})
    return math.exp(res.x), -res.fun


class TestDilation:
    def test_indicator_examples(self):
        ind2 = RadialProfile.indicator(2)
        assert eval_dilate(ind2, 0.0, 2.0, [1.0, 0.0]) == 0.25
        assert eval_dilate(ind2, 0.0, 0.5, [1.0, 0.0]) == 0.0
        assert eval_dilate(RadialProfile.heat(1), 0.0, 1.0, [0.0]) == 1.0

    def test_rejects_nonpositive_radius(self):
        with pytest.raises(ValueError):
            eval_dilate(RadialProfile.indicator(2), 0.0, 0.0, [1.0, 0.0])

    def test_sup_indicator(self):
        ind2 = RadialProfile.indicator(2)
        for alpha in (0.0, 0.5, 1.5):
            assert sup_dilate(ind2, alpha, [1.0, 0.0]) == 1.0
            assert sup_dilate(ind2, alpha, [2.0, 0.0]) == pytest.approx(
                2.0 ** -(2 - alpha), rel=1e-14
            )

    def test_sup_rejects_origin(self):
        with pytest.raises(ValueError):
            sup_dilate(RadialProfile.indicator(2), 0.0, [0.0, 0.0])

    def test_sup_scaling_law(self):
        rng = np.random.default_rng(3)
        for profile in (RadialProfile.poisson(2), RadialProfile.heat(2),
                        RadialProfile.table(2, [0.0, 0.5, 1.0], [2.0, 1.0])):
            for alpha in (0.0, 0.7):
                vals = []
                for _ in range(8):
                    x = rng.normal(size=2)
                    while np.linalg.norm(x) < 1e-3:
                        x = rng.normal(size=2)
                    vals.append(sup_dilate(profile, alpha, x) * np.linalg.norm(x) ** (2 - alpha))
                assert np.ptp(vals) / np.mean(vals) < 1e-10


class TestClosedFormConstants:
    def test_poisson_n1(self):
        assert poisson_normalizer(1) == pytest.approx(1 / math.pi, rel=1e-14)
        assert poisson_sup_constant(1) == pytest.approx(1 / (2 * math.pi), rel=1e-13)

    def test_poisson_n2_value(self):
        # c_2 * 2 / 3^(3/2) = 1 / (3 sqrt(3) pi)
        assert poisson_sup_constant(2) == pytest.approx(1 / (3 * math.sqrt(3) * math.pi), rel=1e-13)

    def test_heat_values(self):
        assert heat_sup_constant(1) == pytest.approx((2 * math.pi * math.e) ** -0.5, rel=1e-14)
        assert heat_sup_constant(2) == pytest.approx(1 / (math.pi * math.e), rel=1e-14)
        assert heat_sup_constant(3) == pytest.approx((3 / (2 * math.pi * math.e)) ** 1.5, rel=1e-14)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_optimizer_agreement(self, n):
        poisson = RadialProfile.poisson(n)
        heat = RadialProfile.heat(n)
        r_p, v_p = golden_oracle(lambda r: r**-n * poisson(1.0 / r))
        r_h, v_h = golden_oracle(lambda r: r**-n * heat(1.0 / r))
        assert v_p == pytest.approx(poisson_sup_constant(n), abs=1e-8)
        assert v_h == pytest.approx(heat_sup_constant(n), abs=1e-8)
        assert r_p == pytest.approx(poisson_critical_radius(n), abs=1e-6)
        assert r_h == pytest.approx(heat_critical_radius(n), abs=1e-6)

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_critical_radius_sign_change(self, n):
        poisson = RadialProfile.poisson(n)
        r = poisson_critical_radius(n)
        f = lambda rr: rr**-n * float(poisson(1.0 / rr))
        assert f(r) > f(r * (1 + 1e-4))
        assert f(r) > f(r * (1 - 1e-4))

    def test_poisson_integrates_to_one(self):
        from scipy.integrate import quad
        from limitlab.geometry import sphere_surface_area

        for n in (1, 2, 3):
            poisson = RadialProfile.poisson(n)
            val, _ = quad(lambda s: float(poisson(s)) * s ** (n - 1), 0, np.inf)
            assert sphere_surface_area(n) * val == pytest.approx(1.0, abs=1e-10)

    def test_general_alpha_sup_matches_optimizer(self):
        for alpha in (0.3, 1.1):
            poisson = RadialProfile.poisson(2)
            s, r_star = poisson.sup_constant(alpha), None
            _, oracle = golden_oracle(lambda r: r ** -(2 - alpha) * poisson(1.0 / r))
            assert s[0] == pytest.approx(oracle, abs=1e-9)

    def test_table_sup_via_search(self):
        table = RadialProfile.table(1, [0.0, 1.0], [1.0])
        s, _ = table.sup_constant(0.0)
        assert s == pytest.approx(1.0, abs=1e-8)

    def test_profiles_nonincreasing_on_grid(self):
        grid = np.linspace(0.0, 6.0, 400)
        profiles = [
            RadialProfile.indicator(2),
            RadialProfile.poisson(2),
            RadialProfile.heat(3),
            RadialProfile.table(2, [0.0, 0.5, 1.0, 2.0], [3.0, 1.0, 0.25]),
        ]
        for profile in profiles:
            vals = profile(grid)
            assert np.all(np.diff(vals) <= 1e-15)
            assert np.all(vals >= 0.0)

    def test_table_rejects_increasing_values(self):
        with pytest.raises(ValueError):
            RadialProfile.table(1, [0.0, 1.0, 2.0], [1.0, 2.0])


class TestHomogeneousKernels:
    def test_degree_zero_homogeneity(self):
        # dyadic scalings leave the rounded input direction untouched, so
        # equality is exact; lam = 10 perturbs the components of lam*x by
        # an ulp before the kernel ever sees them, so continuous-valued
        # kernels can only match to rounding.
        rng = np.random.default_rng(5)
        kernels = [
            HomogeneousKernel.constant(3, 2.5),
            HomogeneousKernel.component(3, 1),
            HomogeneousKernel.signed_cap(3),
            HomogeneousKernel.angular_trig([1.0, 0.5], [0.2]),
            HomogeneousKernel.table(sphere_quadrature(2, 16), np.arange(16.0)),
        ]
        for kern in kernels:
            n = kern.dimension
            for _ in range(10):
                x = rng.normal(size=n)
                while np.linalg.norm(x) < 1e-6:
                    x = rng.normal(size=n)
                base = kern(x)
                for lam in (0.5, 2.0, 8.0):
                    assert kern(lam * x) == base
                assert kern(10.0 * x) == pytest.approx(base, rel=1e-12, abs=1e-12)

    def test_rejects_origin(self):
        with pytest.raises(ValueError):
            HomogeneousKernel.constant(2)(np.zeros(2))

    def test_sign_kernel(self):
        sign = HomogeneousKernel.sign(1)
        assert sign(np.array([3.0])) == 1.0
        assert sign(np.array([-0.2])) == -1.0

    def test_mean_zero_defect(self):
        assert mean_zero_defect(HomogeneousKernel.constant(2), RULE2) == pytest.approx(
            2 * math.pi, rel=1e-12
        )
        assert mean_zero_defect(HomogeneousKernel.component(2, 0), RULE2) < 1e-12
        assert mean_zero_defect(HomogeneousKernel.angular_trig([0.0, 0.0, 1.0]), RULE2) < 1e-12

    def test_sphere_norm_values(self):
        assert sphere_norm(HomogeneousKernel.constant(2), 2.0, RULE2) == pytest.approx(
            math.sqrt(2 * math.pi), rel=1e-12
        )
        cos_kernel = HomogeneousKernel.angular_trig([0.0, 1.0])
        assert sphere_norm(cos_kernel, 2.0, RULE2) == pytest.approx(math.sqrt(math.pi), rel=1e-10)
        assert sphere_norm(HomogeneousKernel.constant(1), 1.0, RULE1) == pytest.approx(2.0)

    def test_sphere_norm_rejects_small_q(self):
        with pytest.raises(ValueError):
            sphere_norm(HomogeneousKernel.constant(2), 0.5, RULE2)


class TestDini:
    def test_constant_kernel_zero(self):
        kern = HomogeneousKernel.constant(2, 3.0)
        assert dini_modulus(kern, 1.0, 0.1, RULE2) == 0.0
        result = dini_integral(kern, 1.0, 0.0, rule=RULE2, blocks=10)
        assert result.value == 0.0
        assert not result.divergence_suspected

    def test_cos_against_brute_force(self):
        kern = HomogeneousKernel.angular_trig([0.0, 1.0])
        lib = dini_modulus(kern, 1.0, 0.1, RULE2, shift_budget=512)
        # brute force: 10^4 shifts of norm <= t, dense directions and radii
        rng = np.random.default_rng(11)
        best = 0.0
        base = kern.on_sphere(RULE2.nodes)
        dirs = rng.normal(size=(2500, 2))
        dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
        for scale in (1.0, 0.75, 0.5, 0.25):
            shifts = 0.1 * scale * dirs
            for h in shifts:
                moved = RULE2.nodes + h
                moved /= np.linalg.norm(moved, axis=1, keepdims=True)
                val = float(np.dot(RULE2.weights, np.abs(kern.on_sphere(moved) - base)))
                best = max(best, val)
        assert lib == pytest.approx(best, rel=0.01)

    def test_monotone_in_scale(self):
        kernels = [
            HomogeneousKernel.angular_trig([0.0, 1.0]),
            HomogeneousKernel.signed_cap(2),
            HomogeneousKernel.component(2, 0),
        ]
        for kern in kernels:
            small = dini_modulus(kern, 1.0, 0.05, RULE2, shift_budget=96)
            large = dini_modulus(kern, 1.0, 0.1, RULE2, shift_budget=96)
            assert small <= large + 1e-12

    def test_monotone_in_budget(self):
        kern = HomogeneousKernel.angular_trig([0.0, 1.0], [0.3])
        a = dini_modulus(kern, 2.0, 0.2, RULE2, shift_budget=24)
        b = dini_modulus(kern, 2.0, 0.2, RULE2, shift_budget=96)
        assert a <= b + 1e-15

    def test_triangle_bound(self):
        for kern in (HomogeneousKernel.angular_trig([0.0, 1.0]), HomogeneousKernel.signed_cap(2)):
            for t in (0.05, 0.3, 1.0):
                val = dini_modulus(kern, 2.0, t, RULE2, shift_budget=64)
                assert val <= 2 * sphere_norm(kern, 2.0, RULE2) + 1e-12

    def test_rejects_bad_scale(self):
        with pytest.raises(ValueError):
            dini_modulus(HomogeneousKernel.constant(2), 1.0, 0.0, RULE2)

    def test_lipschitz_integral_bound(self):
        # |cos a - cos b| <= |a - b| and the angle moves by at most pi/2*|h|
        # for |h| <= 1, so the modulus is below 2 * t * sigma(S^1).
        kern = HomogeneousKernel.angular_trig([0.0, 1.0])
        result = dini_integral(kern, 1.0, 0.0, t_max=1.0, rule=RULE2, blocks=14)
        assert result.value <= 2.0 * 2 * math.pi * 1.0
        assert not result.divergence_suspected

    def test_cos_fractional_order_finite(self):
        kern = HomogeneousKernel.angular_trig([0.0, 1.0])
        result = dini_integral(kern, 1.0, 0.5, rule=RULE2, blocks=14)
        assert math.isfinite(result.value)
        assert not result.divergence_suspected

    def test_jump_kernel_supercritical_divergence(self):
        # the cap kernel jumps, so the modulus scales like t and the
        # integrand like t^(-s); at s = 1.5 the dyadic blocks grow.  Stay
        # above the rule's angular resolution (shifts below the node
        # spacing resolve to a zero modulus).
        kern = HomogeneousKernel.signed_cap(2)
        result = dini_integral(kern, 1.0, 1.5, rule=RULE2, blocks=6)
        assert result.divergence_suspected
