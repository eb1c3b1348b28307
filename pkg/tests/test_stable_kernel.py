"""Kernel engine checks: closed forms, bounds, sensitivities, samplers."""

import numpy as np
import pytest
from scipy import integrate, special

from sbe import stable_kernel as sk


def test_cauchy_closed_form(law_cauchy):
    z = np.linspace(-10, 10, 801)
    for t in (0.1, 1.0):
        got = sk.evaluate_density(law_cauchy, t, z)
        want = t / (np.pi * (t * t + z * z))
        assert np.max(np.abs(got - want) / want) < 1e-6


def test_gaussian_closed_form(law_gauss):
    z = np.linspace(-10, 10, 801)
    for t in (0.1, 1.0):
        got = sk.evaluate_density(law_gauss, t, z)
        want = np.exp(-(z**2) / (4 * t)) / np.sqrt(4 * np.pi * t)
        assert np.max(np.abs(got - want) / want) < 1e-6


def test_density_at_origin_closed_form(law15):
    # p_alpha(t, 0) = Gamma(1 + 1/alpha) / (pi t^(1/alpha)) in d = 1
    want = special.gamma(1 + 1 / 1.5) / np.pi
    assert abs(sk.evaluate_density(law15, 1.0, 0.0) - want) < 1e-8
    got = sk.evaluate_density(law15, 0.3, 0.0)
    assert abs(got - want / 0.3 ** (1 / 1.5)) < 1e-7


def test_self_similarity_exact(law15):
    # one profile table serves all t; the reduction is exact up to the
    # power-function ulp (numpy vs libm pow may differ in the last bit)
    z = np.array([0.0, 0.4, 2.0, 7.7])
    t = 0.37
    lhs = sk.evaluate_density(law15, t, z)
    rhs = t ** (-1 / 1.5) * sk.evaluate_density(law15, 1.0, z * t ** (-1 / 1.5))
    np.testing.assert_allclose(lhs, rhs, rtol=5e-16)


def test_d2_density_against_hankel_quadrature(law15_d2):
    # direct Fourier-Bessel inversion at spot radii, independent of the table
    for r in (0.0, 0.7, 3.0, 20.0):
        oracle = integrate.quad(
            lambda rho: rho * np.exp(-(rho**1.5)) * special.j0(rho * r),
            0.0, 40.0, limit=2000,
        )[0] / (2 * np.pi)
        got = float(law15_d2.profile(r)[0])
        assert abs(got - oracle) <= 2e-6 * abs(oracle) + 1e-12
    # spec example: value within a bounded factor of the bound kernel
    val = sk.evaluate_density(law15_d2, 1.0, np.array([3.0, 0.0]))
    pbar = sk.bound_kernel(law15_d2, 1.0, np.array([3.0, 0.0]))
    assert 0.01 < val / pbar < 100.0


@pytest.mark.parametrize("alpha,dim", [(1.2, 1), (1.5, 1), (1.8, 1),
                                       (1.5, 2), (1.5, 3)])
def test_normalization(alpha, dim):
    law = sk.StableLaw(alpha, dim)
    assert sk.normalization_error(law) < 1e-4


def test_profile_positive_and_nonincreasing(law15):
    r, phi = law15.profile_table
    assert np.all(phi > 0)
    assert np.all(np.diff(phi) <= phi[:-1] * 1e-9)


def test_gradient_closed_forms(law_cauchy, law15):
    assert sk.evaluate_gradient(law_cauchy, 1.0, 0.0) == 0.0
    got = sk.evaluate_gradient(law_cauchy, 1.0, 1.0)
    assert abs(got - (-2 / (np.pi * 4))) < 1e-9
    # finite-difference oracle
    z0, dz = 0.7, 1e-5
    fd = (sk.evaluate_density(law15, 1.0, z0 + dz)
          - sk.evaluate_density(law15, 1.0, z0 - dz)) / (2 * dz)
    gr = sk.evaluate_gradient(law15, 1.0, z0)
    assert abs(fd - gr) / abs(fd) < 1e-5


def test_gradient_envelope(law15):
    # |grad p(t, z)| <= C t^(-1/alpha) pbar(t, z) with a moderate constant
    z = np.linspace(-30, 30, 1201)
    for t in (0.05, 1.0):
        g = np.abs(sk.evaluate_gradient(law15, t, z))
        env = t ** (-1 / 1.5) * sk.bound_kernel(law15, t, z)
        assert np.max(g / env) < 100.0


def test_bound_kernel_values(law15):
    assert sk.bound_kernel(law15, 1.0, 0.0) == pytest.approx(0.75, abs=1e-14)
    assert sk.bound_kernel(law15, 1.0, 1.0) == pytest.approx(
        0.75 * 2.0**-2.5, abs=1e-14
    )


def test_bound_kernel_constant_by_quadrature():
    # radial quadrature oracle for the d = 2 normalisation
    law = sk.StableLaw(1.5, 2)
    mass = integrate.quad(
        lambda r: 2 * np.pi * r * law.c_alpha_bar * (1 + r) ** -3.5, 0, np.inf,
        limit=400,
    )[0]
    assert abs(mass - 1.0) < 1e-8


@pytest.mark.parametrize("alpha,dim", [(1.2, 1), (1.5, 1), (1.8, 1),
                                       (1.2, 2), (1.5, 2), (1.8, 2)])
def test_aronson_sandwich(alpha, dim):
    law = sk.StableLaw(alpha, dim)
    r = np.linspace(0.0, 50.0, 2001)
    ratio = law.profile(r) / (law.c_alpha_bar * (1 + r) ** -(dim + alpha))
    fitted = max(float(ratio.max()), float(1.0 / ratio.min()))
    assert fitted < 100.0


def test_semigroup_convolution(law15):
    s, t = 0.4, 0.9
    z = np.linspace(-400, 400, 1 << 16, endpoint=False)
    dz = z[1] - z[0]
    ps = sk.evaluate_density(law15, s, z)
    pt = sk.evaluate_density(law15, t, z)
    conv = np.fft.irfft(np.fft.rfft(ps) * np.fft.rfft(pt), z.size) * dz
    conv = np.fft.fftshift(conv)
    pst = sk.evaluate_density(law15, s + t, z)
    mid = slice(z.size // 4, 3 * z.size // 4)
    assert np.max(np.abs(conv[mid] - pst[mid])) < 1e-4


def test_spatial_moments_scale(law15):
    alpha = law15.alpha
    for delta in (0.0, 0.5, alpha - 0.1):
        vals = []
        for v in (0.03, 0.3, 1.0):
            mom = integrate.quad(
                lambda z: 2 * z**delta * sk.bound_kernel(law15, v, z),
                0, np.inf, limit=400,
            )[0]
            vals.append(mom / v ** (delta / alpha))
        vals = np.array(vals)
        assert np.max(np.abs(vals / vals[0] - 1.0)) < 1e-6


def test_time_holder_regularity(law15):
    # |p(u,z) - p(u',z)| <= C (|u-u'|/u)^theta (pbar(u,z) + pbar(u',z))
    rng = np.random.default_rng(0)
    worst = 0.0
    for theta in (0.25, 0.5):
        for u in (0.05, 0.3, 1.0):
            up = u * (1 + theta)
            z = rng.uniform(-5, 5, 200)
            lhs = np.abs(sk.evaluate_density(law15, u, z)
                         - sk.evaluate_density(law15, up, z))
            rhs = ((up - u) / u) ** theta * (
                sk.bound_kernel(law15, u, z) + sk.bound_kernel(law15, up, z)
            )
            worst = max(worst, float(np.max(lhs / rhs)))
    assert worst < 100.0


def test_space_holder_regularity(law15):
    rng = np.random.default_rng(1)
    worst = 0.0
    for theta in (0.5, 1.0):
        for u in (0.05, 0.5):
            z = rng.uniform(-3, 3, 200)
            dz = rng.uniform(-1, 1, 200) * u ** (1 / 1.5)
            lhs = np.abs(sk.evaluate_density(law15, u, z)
                         - sk.evaluate_density(law15, u, z + dz))
            rhs = (np.abs(dz) / u ** (1 / 1.5)) ** theta * (
                sk.bound_kernel(law15, u, z) + sk.bound_kernel(law15, u, z + dz)
            )
            ok = np.abs(dz) > 0
            worst = max(worst, float(np.max(lhs[ok] / rhs[ok])))
    assert worst < 100.0


def test_lebesgue_convolution_bound(law15):
    # || pbar(t-u, . - y) pbar(u-s, x - .) ||_{L^2} against the scaled bound
    ell = 2.0
    for (s, u, t, x, y) in ((0.0, 0.3, 1.0, 0.0, 1.0),
                            (0.1, 0.2, 0.5, -0.5, 0.7),
                            (0.0, 0.8, 1.0, 2.0, -1.0)):
        val = integrate.quad(
            lambda z: (sk.bound_kernel(law15, t - u, z - y)
                       * sk.bound_kernel(law15, u - s, x - z)) ** ell,
            -60, 60, points=[x, y], limit=800,
        )[0] ** (1 / ell)
        bound = (
            (t - u) ** (-1 / (1.5 * ell)) + (u - s) ** (-1 / (1.5 * ell))
        ) * sk.bound_kernel(law15, t - s, x - y)
        assert val / bound < 100.0


def test_convolution_property(law15):
    # fitted constant of the approximate convolution identity
    worst = 0.0
    for (u, v) in ((0.5, 0.5), (0.2, 1.0), (0.05, 0.1)):
        for gap in (0.0, 1.0, 4.0):
            got = sk.convolve_bound_kernels(law15, u, v, 0.0, gap)
            worst = max(worst, got / sk.bound_kernel(law15, u + v, gap))
    assert worst <= 10.0


def test_convolution_symmetry_and_monotonicity(law15):
    a = sk.convolve_bound_kernels(law15, 0.5, 0.5, 0.0, 0.0)
    assert a > 0 and np.isfinite(a)
    b = sk.convolve_bound_kernels(law15, 0.3, 0.7, 0.2, 1.0)
    c = sk.convolve_bound_kernels(law15, 0.7, 0.3, 1.0, 0.2)
    assert b == pytest.approx(c, rel=1e-7)
    vals = [sk.convolve_bound_kernels(law15, 0.5, 0.5, 0.0, g)
            for g in (0.0, 0.5, 1.0, 2.0, 4.0)]
    assert np.all(np.diff(vals) < 0)


def test_convolution_d2(law15_d2):
    got = sk.convolve_bound_kernels(law15_d2, 0.5, 0.5, np.zeros(2), np.zeros(2))
    assert got <= 10.0 * sk.bound_kernel(law15_d2, 1.0, np.zeros(2))


def test_errors():
    law = sk.StableLaw(1.5, 1)
    with pytest.raises(ValueError):
        sk.evaluate_density(law, -1.0, 0.0)
    with pytest.raises(ValueError):
        sk.evaluate_density(law, 1.0, np.nan)
    with pytest.raises(ValueError):
        sk.bound_kernel(law, 0.0, 0.0)
    with pytest.raises(ValueError):
        sk.StableLaw(2.5, 1)
    with pytest.raises(ValueError):
        sk.StableLaw(1.5, 4)


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------


def test_gaussian_increment_variance(law_gauss):
    sampler = sk.IncrementSampler(law_gauss, 11)
    z = sampler.chunk_increments(0, 1_000_000, np.array([1.0]))[:, 0]
    var = z.var()
    se = np.sqrt(2.0) * 2.0 / np.sqrt(z.size)  # var of sample variance, ~N
    assert abs(var - 2.0) < 3 * se


def test_fractional_moment_matches_quadrature(law15):
    sampler = sk.IncrementSampler(law15, 12)
    z = sampler.chunk_increments(0, 400_000, np.array([1.0]))[:, 0]
    m = np.abs(z) ** 0.5
    want = 2 * integrate.quad(
        lambda x: x**0.5 * sk.evaluate_density(law15, 1.0, x), 0, np.inf,
        limit=400,
    )[0]
    assert abs(m.mean() - want) < 3 * m.std() / np.sqrt(m.size)


def test_ks_against_numeric_cdf(law15):
    sampler = sk.IncrementSampler(law15, 13)
    z = np.sort(sampler.chunk_increments(0, 100_000, np.array([1.0]))[:, 0])
    cdf = sk.density_cdf_1d(law15, 1.0, z)
    n = z.size
    d = max(np.max(np.abs(np.arange(1, n + 1) / n - cdf)),
            np.max(np.abs(np.arange(n) / n - cdf)))
    assert d < 1.628 / np.sqrt(n)  # 1% critical value


def test_d2_isotropy_and_radius(law15_d2):
    sampler = sk.IncrementSampler(law15_d2, 14)
    z = sampler.chunk_increments(0, 100_000, np.array([1.0]))[:, 0, :]
    angles = np.arctan2(z[:, 1], z[:, 0])
    counts, _ = np.histogram(angles, bins=36, range=(-np.pi, np.pi))
    expected = z.shape[0] / 36
    chi2 = np.sum((counts - expected) ** 2 / expected)
    # chi2 with 35 dof, 1% critical value
    assert chi2 < 57.34
    r = np.sort(np.hypot(z[:, 0], z[:, 1]))
    cdf = sk.radial_cdf(law15_d2, 1.0, r)
    n = r.size
    d = max(np.max(np.abs(np.arange(1, n + 1) / n - cdf)),
            np.max(np.abs(np.arange(n) / n - cdf)))
    assert d < 1.628 / np.sqrt(n)


def test_alpha2_d2_subordination_degenerates_to_gauss():
    law = sk.StableLaw(2.0, 2)
    sampler = sk.IncrementSampler(law, 15)
    z = sampler.chunk_increments(0, 200_000, np.array([0.5]))[:, 0, :]
    assert abs(z[:, 0].var() - 1.0) < 0.02
    assert abs(z[:, 1].var() - 1.0) < 0.02
    assert abs(np.mean(z[:, 0] * z[:, 1])) < 0.01


def test_sampler_determinism(law15):
    s1 = sk.IncrementSampler(law15, 42)
    s2 = sk.IncrementSampler(law15, 42)
    dur = np.full(7, 0.1)
    np.testing.assert_array_equal(s1.path_increments(9, dur),
                                  s2.path_increments(9, dur))
    # block reads agree with single-path reads across block boundaries
    chunk = s1.chunk_increments(4090, 4105, dur)
    for i, p in enumerate(range(4090, 4105)):
        np.testing.assert_array_equal(chunk[i], s1.path_increments(p, dur))
    # different streams decorrelate
    s3 = sk.IncrementSampler(law15, 42, stream=1)
    assert not np.allclose(s1.path_increments(0, dur), s3.path_increments(0, dur))


def test_sample_increment_single(law15):
    sampler = sk.IncrementSampler(law15, 7)
    a = sk.sample_increment(sampler, 0.5, path=3, step=2)
    b = sk.sample_increment(sampler, 0.5, path=3, step=2)
    assert a == b
    with pytest.raises(ValueError):
        sk.sample_increment(sampler, 0.0)


def test_table_cache_round_trip(tmp_path, monkeypatch):
    monkeypatch.setenv("SBE_CACHE_DIR", str(tmp_path))
    law_a = sk.StableLaw(1.3, 1)
    files = list(tmp_path.iterdir())
    assert files, "cache files were not written"
    with open(sorted(files)[0].as_posix(), "rb") as fh:
        assert fh.read(4) == b"STBL"
    law_b = sk.StableLaw(1.3, 1)  # loaded from cache
    z = np.linspace(-5, 5, 101)
    np.testing.assert_array_equal(
        sk.evaluate_density(law_a, 1.0, z), sk.evaluate_density(law_b, 1.0, z)
    )
