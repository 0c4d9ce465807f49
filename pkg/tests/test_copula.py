"""Tests of the copula object: density, sampler, cdf, derivatives, transforms."""

import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate, stats

from wrapcop.copula import CopulaModel, Signature, linear_wrap, wrapped_sum
from wrapcop.exceptions import (
    BoundaryError,
    DomainError,
    ShapeError,
    UnsupportedDimensionError,
)
from wrapcop.generator import Beta, Triangular, Uniform, VonMises, reflect

from conftest import BATTERY, SIGNATURES_2D

CRIT_01 = 1.628  # asymptotic KS critical value sqrt(n) D at alpha = 0.01


# ---------------------------------------------------------------------------
# signatures
# ---------------------------------------------------------------------------
def test_signature_canonical_and_candidates():
    assert Signature((1, 0, 1)).canonical() == Signature((0, 1, 0))
    cands = Signature.candidates(3)
    assert [c.bits for c in cands] == [(0, 0, 0), (0, 0, 1), (0, 1, 0), (0, 1, 1)]
    assert all(c.is_canonical for c in cands)


@pytest.mark.parametrize("bits", [(0,), (0, 2), ()])
def test_signature_validation(bits):
    with pytest.raises((ShapeError, DomainError)):
        Signature(bits)


def test_model_canonicalises_signature_and_reflects_generator():
    gen = Beta(0.5, 1.5)
    model = CopulaModel(gen, (1, 0))
    assert model.signature.bits == (0, 1)
    assert model.generator == reflect(gen)
    u = np.array([[0.2, 0.7], [0.55, 0.05]])
    direct = gen.pdf(wrapped_sum(u, (1, 0)))
    np.testing.assert_allclose(model.density(u), direct, rtol=1e-12)


# ---------------------------------------------------------------------------
# density
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("sig", SIGNATURES_2D)
def test_density_uniform_generator_is_independence(sig):
    assert CopulaModel(Uniform(), sig).density([0.13, 0.87]) == 1.0


def test_density_triangular_examples():
    tri = Triangular(1.0, 1.0)
    assert CopulaModel(tri, (0, 0)).density([0.3, 0.9]) == pytest.approx(0.4, abs=1e-12)
    assert CopulaModel(tri, (0, 1)).density([0.3, 0.9]) == pytest.approx(0.8, abs=1e-12)


def test_density_dimension_mismatch():
    with pytest.raises(ShapeError):
        CopulaModel(Uniform(), (0, 0)).density([0.1, 0.2, 0.3])


@pytest.mark.parametrize("name", list(BATTERY))
def test_density_has_uniform_margins(name):
    rng = np.random.default_rng(1)
    for sig in ((0, 0), (0, 1)):
        model = CopulaModel(BATTERY[name], sig)
        for u1 in rng.random(5):
            val, _ = integrate.quad(lambda v: model.density([u1, v]), 0, 1, limit=400,
                                    points=[0.5], epsabs=1e-11)
            assert val == pytest.approx(1.0, abs=1e-6)


def test_density_exchangeable_for_constant_signature():
    rng = np.random.default_rng(2)
    for bits in ((0, 0, 0, 0), (1, 1, 1, 1)):
        model = CopulaModel(Beta(2.0, 5.0), bits)
        u = rng.random((50, 4))
        base = model.density(u)
        for perm in itertools.permutations(range(4)):
            np.testing.assert_allclose(model.density(u[:, perm]), base, rtol=1e-12)


@settings(max_examples=50, deadline=None)
@given(u=st.lists(st.floats(0.0, 1.0), min_size=3, max_size=3),
       bits=st.lists(st.integers(0, 1), min_size=3, max_size=3))
def test_wrapped_sum_in_unit_interval_property(u, bits):
    y = wrapped_sum(np.array(u), bits)
    assert 0.0 <= float(y) < 1.0


# ---------------------------------------------------------------------------
# sampling
# ---------------------------------------------------------------------------
def test_sampler_last_coordinate_formula():
    model = CopulaModel(Uniform(), (0, 1))
    out = model._assemble(np.array([[0.3]]), np.array([0.7]))
    np.testing.assert_allclose(out, [[0.3, 0.6]], atol=1e-15)


def test_sample_uniform_generator_is_independent():
    u = CopulaModel(Uniform(), (0, 1)).sample(0, 100_000)
    assert abs(stats.kendalltau(u[:, 0], u[:, 1]).statistic) < 0.01


def test_sample_deterministic():
    model = CopulaModel(VonMises(2.0, 1.0), (0, 1, 1))
    np.testing.assert_array_equal(model.sample(5, 100), model.sample(5, 100))


@pytest.mark.parametrize("name", list(BATTERY))
@pytest.mark.parametrize("sig", [(0, 1), (0, 0, 1)])
def test_sample_wrapped_sum_has_generator_law_and_uniform_margins(name, sig):
    gen = BATTERY[name]
    u = CopulaModel(gen, sig).sample(7, 100_000)
    assert stats.kstest(wrapped_sum(u, sig), gen.cdf).pvalue > 0.01
    for col in u.T:
        assert stats.kstest(col, "uniform").pvalue > 0.01


def test_sample_wrong_signature_wrapped_sum_is_uniform():
    u = CopulaModel(Beta(2.0, 5.0), (0, 1, 0)).sample(9, 50_000)
    for t in Signature.candidates(3):
        if t.bits == (0, 1, 0):
            continue
        assert stats.kstest(wrapped_sum(u, t), "uniform").pvalue > 0.01


def test_linear_wrap_preserves_uniformity():
    rng = np.random.default_rng(3)
    u = rng.random((20_000, 4))
    for _ in range(5):
        while True:
            a = rng.integers(-2, 3, size=(2, 4))
            if np.linalg.matrix_rank(a) == 2:
                break
        out = linear_wrap(a, rng.random(2), u)
        for col in out.T:
            assert math.sqrt(len(col)) * stats.kstest(col, "uniform").statistic < CRIT_01


# ---------------------------------------------------------------------------
# cdf
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("sig", [(0, 0), (0, 1), (0, 1, 1)])
def test_cdf_grounded_and_normalised(sig):
    model = CopulaModel(VonMises(2.0, 1.0), sig)
    d = len(sig)
    pt = np.full(d, 0.4)
    pt[0] = 0.0
    assert model.cdf(pt) == 0.0
    assert model.cdf(np.ones(d)) == pytest.approx(1.0)


@pytest.mark.parametrize("name", list(BATTERY))
def test_cdf_bivariate_margins(name):
    for sig in ((0, 0), (0, 1)):
        model = CopulaModel(BATTERY[name], sig)
        for u1 in (0.1, 0.45, 0.8):
            assert model.cdf([u1, 1.0]) == pytest.approx(u1, abs=1e-8)
            assert model.cdf([1.0, u1]) == pytest.approx(u1, abs=1e-8)


def test_cdf_uniform_generator_is_product():
    model = CopulaModel(Uniform(), (0, 1))
    assert model.cdf([0.3, 0.6]) == pytest.approx(0.18, abs=1e-10)


def test_cdf_triangular_closed_form_example():
    # C(u1, u2) = int_0^{u1} [F(v + u2 mod 1) + 1{v + u2 > 1} - F(v)] dv with F(x) = x^2
    model = CopulaModel(Triangular(1.0, 1.0), (0, 0))
    u1, u2 = 0.3, 0.4
    ref, _ = integrate.quad(lambda v: (v + u2) ** 2 - v**2, 0, u1)
    assert model.cdf([u1, u2]) == pytest.approx(ref, abs=1e-10)


@pytest.mark.parametrize("sig", SIGNATURES_2D)
@pytest.mark.parametrize("gen", [VonMises(2.0, 1.0), Beta(2.0, 5.0), Beta(0.5, 1.0)],
                         ids=repr)
def test_cdf_fixed_rule_matches_adaptive_quadrature(gen, sig, monkeypatch):
    model = CopulaModel(gen, sig)
    points = np.random.default_rng(9).random((15, 2))
    fast = [model.cdf(p) for p in points]
    monkeypatch.setattr(CopulaModel, "_segment_gauss", lambda *args: None)
    adaptive = [model.cdf(p) for p in points]
    np.testing.assert_allclose(fast, adaptive, rtol=0, atol=1e-12)


def test_cdf_trivariate_against_monte_carlo():
    model = CopulaModel(Beta(2.0, 5.0), (0, 1, 1))
    u = model.sample(4, 400_000)
    pt = np.array([0.6, 0.5, 0.7])
    mc = np.mean(np.all(u <= pt, axis=1))
    mc_se = math.sqrt(mc * (1 - mc) / len(u))
    val, err = model.cdf_with_error(pt)
    assert err < 1e-3
    assert abs(val - mc) < 4 * math.hypot(mc_se, err)


def test_cdf_dimension_guard():
    with pytest.raises(UnsupportedDimensionError):
        CopulaModel(Uniform(), (0,) * 7).cdf(np.full(7, 0.5))


def test_survival_against_monte_carlo():
    model = CopulaModel(VonMises(2.0, 1.0), (0, 1))
    u = model.sample(6, 400_000)
    pt = np.array([0.3, 0.6])
    mc = np.mean(np.all(u > pt, axis=1))
    assert model.survival(pt) == pytest.approx(mc, abs=4 * math.sqrt(mc * (1 - mc) / len(u)))


# ---------------------------------------------------------------------------
# partial derivatives
# ---------------------------------------------------------------------------
def test_partial_derivative_uniform_generator():
    model = CopulaModel(Uniform(), (0, 0))
    for u in ([0.2, 0.3], [0.9, 0.05], [0.5, 0.77]):
        assert model.partial_derivative(0, u) == pytest.approx(u[1], abs=1e-12)


def test_partial_derivative_triangular_example():
    model = CopulaModel(Triangular(1.0, 1.0), (0, 0))
    assert model.partial_derivative(0, [0.3, 0.4]) == pytest.approx(0.40, abs=1e-12)


@pytest.mark.parametrize("name", list(BATTERY))
def test_partial_derivative_within_unit_interval(name):
    grid = (np.arange(50) + 0.5) / 50
    for sig in SIGNATURES_2D:
        model = CopulaModel(BATTERY[name], sig)
        vals = [model.partial_derivative(j, [a, b]) for a in grid[::5] for b in grid for j in (0, 1)]
        assert min(vals) >= 0.0 and max(vals) <= 1.0


@pytest.mark.parametrize("sig", SIGNATURES_2D)
def test_partial_derivative_matches_finite_differences(sig):
    model = CopulaModel(Beta(2.0, 5.0), sig)
    h = 1e-4
    for u1, u2 in ((0.2, 0.3), (0.55, 0.8), (0.9, 0.15)):
        fd1 = (model.cdf([u1 + h, u2]) - model.cdf([u1 - h, u2])) / (2 * h)
        fd2 = (model.cdf([u1, u2 + h]) - model.cdf([u1, u2 - h])) / (2 * h)
        assert model.partial_derivative(0, [u1, u2]) == pytest.approx(fd1, abs=1e-4)
        assert model.partial_derivative(1, [u1, u2]) == pytest.approx(fd2, abs=1e-4)


def test_partial_derivative_trivariate_against_finite_differences():
    model = CopulaModel(VonMises(2.0, 1.0), (0, 1, 0))
    u = np.array([0.4, 0.7, 0.5])
    pd = model.partial_derivative(1, u)
    # d C / d u_2 = P(U_1 <= u_1, U_3 <= u_3 | U_2 = u_2), checked by conditional sampling
    rng = np.random.default_rng(8)
    n = 400_000
    u1 = rng.random(n)
    x = model.generator.sample(rng, n)
    u3 = model._assemble(np.column_stack([u1, np.full(n, u[1])]), x)[:, 2]
    mc = np.mean((u1 <= u[0]) & (u3 <= u[2]))
    assert pd == pytest.approx(mc, abs=4 * math.sqrt(mc * (1 - mc) / n))


def test_partial_derivative_boundary_error():
    with pytest.raises(BoundaryError):
        CopulaModel(Uniform(), (0, 0)).partial_derivative(0, [0.0, 0.5])


# ---------------------------------------------------------------------------
# characteristic function
# ---------------------------------------------------------------------------
@pytest.mark.parametrize("K", [0, 5, 64])
def test_char_function_at_zero(K):
    assert CopulaModel(Beta(2.0, 5.0), (0, 1)).char_function([0.0, 0.0], K=K) == pytest.approx(1.0)


def test_char_function_uniform_generator_is_product():
    model = CopulaModel(Uniform(), (0, 1))
    t = np.array([1.3, -2.1])
    expected = np.prod((np.exp(1j * t) - 1) / (1j * t))
    assert model.char_function(t, K=8) == pytest.approx(expected, abs=1e-14)


def test_char_function_beta_against_monte_carlo():
    model = CopulaModel(Beta(1.5, 1.5), (0, 0))
    t = np.array([1.0, 1.0])
    u = model.sample(10, 1_000_000)
    z = np.exp(1j * u @ t)
    se = math.sqrt(np.var(z.real) / len(z) + np.var(z.imag) / len(z))
    assert abs(model.char_function(t, K=64) - z.mean()) < 3 * se


def test_char_function_k_guard():
    with pytest.raises(DomainError):
        CopulaModel(Uniform(), (0, 0)).char_function([1.0, 1.0], K=257)


# ---------------------------------------------------------------------------
# tails
# ---------------------------------------------------------------------------
def test_tail_ratio_uniform():
    lower, upper = CopulaModel(Uniform(), (0, 0)).tail_ratio(0.01)
    assert lower == pytest.approx(0.01, abs=1e-10)
    assert upper == pytest.approx(0.01, abs=1e-10)


@pytest.mark.parametrize("gen", [Beta(1.5, 1.5), VonMises(2.0, 1.0)], ids=["Beta", "VonMises"])
def test_tail_ratios_decay(gen):
    model = CopulaModel(gen, (0, 0))
    lo2, up2 = model.tail_ratio(1e-2)
    lo3, up3 = model.tail_ratio(1e-3)
    assert lo3 < lo2 and up3 < up2


def test_tail_ratio_trivariate_bound():
    model = CopulaModel(VonMises(2.0, 1.0), (0, 1, 1))
    for t in (0.05, 0.2):
        lower, _ = model.tail_ratio(t)
        assert lower <= t + 1e-3


def test_upper_tail_ratio_agrees_with_survival():
    model = CopulaModel(Beta(2.0, 5.0), (0, 1))
    t = 0.2
    _, upper = model.tail_ratio(t)
    assert upper == pytest.approx(model.survival([1 - t, 1 - t]) / t, abs=1e-8)


# ---------------------------------------------------------------------------
# serialisation
# ---------------------------------------------------------------------------
def test_model_dict_round_trip():
    model = CopulaModel(VonMises(-17.19, -0.8), (0, 1))
    back = CopulaModel.from_dict(model.to_dict())
    assert back == model
    assert model.to_dict() == {"d": 2, "signature": [0, 1],
                               "generator": {"family": "VonMises",
                                             "params": {"phi1": -17.19, "phi2": -0.8}}}


def test_model_from_dict_rejects_inconsistent_dimension():
    with pytest.raises(ShapeError):
        CopulaModel.from_dict({"d": 3, "signature": [0, 1],
                               "generator": {"family": "Uniform", "params": {}}})
