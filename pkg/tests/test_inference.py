"""Tests for pseudo-observations, signature selection, MLE, KDE and empirical copulas."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from conftest import BATTERY
from wrapcop.copula import CopulaModel, Signature
from wrapcop.exceptions import (
    DegenerateMarginError,
    DomainError,
    ShapeError,
    TiesWarning,
    UnsupportedDimensionError,
    UnsupportedInputError,
)
from wrapcop.generator import Beta, Mixture, TruncNormal, VonMises
from wrapcop.inference import (
    PseudoObservations,
    cvm_statistic,
    empirical_beta_density,
    empirical_copula,
    fit_kde,
    fit_parametric,
    ks_statistic,
    pseudo_observations,
    select_signature,
    silverman_bandwidth,
    wrapped_sums,
)

MIXTURE = Mixture(0.25, TruncNormal(0.25, 0.1), TruncNormal(0.75, 0.1))


# --------------------------------------------------------------------------
# pseudo-observations and wrapped sums
# --------------------------------------------------------------------------

def test_pseudo_observations_example():
    u = pseudo_observations([[3.2], [1.1], [7.7]])
    np.testing.assert_allclose(u.values.ravel(), [2 / 4, 1 / 4, 3 / 4])
    assert u.provenance == "rank_based"


def test_pseudo_observations_increasing_column():
    n = 17
    u = pseudo_observations(np.arange(n, dtype=float) ** 3)
    np.testing.assert_allclose(u.values.ravel(), np.arange(1, n + 1) / (n + 1))


@settings(max_examples=40, deadline=None)
@given(st.integers(2, 60), st.integers(0, 2**32 - 1))
def test_pseudo_observations_rank_invariance(n, seed):
    x = np.random.default_rng(seed).normal(size=(n, 2))
    a = pseudo_observations(x).values
    b = pseudo_observations(np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3 + 2])).values
    np.testing.assert_array_equal(a, b)
    for col in a.T:
        np.testing.assert_allclose(np.sort(col), np.arange(1, n + 1) / (n + 1))


def test_pseudo_observations_errors_and_ties():
    with pytest.raises(DegenerateMarginError):
        pseudo_observations([[1.0, 2.0], [1.0, 3.0], [1.0, 4.0]])
    with pytest.raises(DomainError):
        pseudo_observations([[1.0]])
    with pytest.warns(TiesWarning):
        u = pseudo_observations([[1.0], [2.0], [2.0], [3.0]])
    np.testing.assert_allclose(u.values.ravel(), [1 / 5, 2.5 / 5, 2.5 / 5, 4 / 5])


def test_pseudo_observations_rejects_bad_provenance():
    with pytest.raises(DomainError):
        PseudoObservations(np.full((3, 2), 0.5), "made_up")


@pytest.mark.parametrize("row, t, expected", [
    ((0.6, 0.7), (0, 0), 0.3),
    ((0.6, 0.7), (0, 1), 0.9),
    ((0.5, 0.5, 0.5), (0, 1, 1), 0.5),
])
def test_wrapped_sums_examples(row, t, expected):
    assert wrapped_sums(np.array([row]), t)[0] == pytest.approx(expected, abs=1e-12)


# --------------------------------------------------------------------------
# KS and CvM statistics
# --------------------------------------------------------------------------

def test_ks_examples():
    assert ks_statistic([0.5]) == pytest.approx(0.5)
    assert ks_statistic(np.arange(1, 10) / 10) == pytest.approx(0.1)
    assert ks_statistic([0.99, 0.995]) == pytest.approx(0.99)


def test_ks_matches_scipy():
    y = np.random.default_rng(3).beta(2, 3, 200)
    assert ks_statistic(y) == pytest.approx(stats.kstest(y, "uniform").statistic, abs=1e-12)


def test_cvm_examples():
    assert cvm_statistic([0.5]) == pytest.approx(1 / 12)
    n = 9
    i = np.arange(1, n + 1)
    expected = np.sum((i / 10 - i / 9 + 1 / 18) ** 2) / 9 + 1 / 972
    assert cvm_statistic(i / (n + 1)) == pytest.approx(expected, abs=1e-15)
    assert cvm_statistic(np.zeros(10_000)) == pytest.approx(1 / 3, abs=1e-3)


def test_cvm_matches_scipy_scaled():
    y = np.random.default_rng(4).beta(2, 3, 300)
    assert cvm_statistic(y) == pytest.approx(stats.cramervonmises(y, "uniform").statistic / 300)


def test_statistics_reject_empty():
    with pytest.raises(DomainError):
        ks_statistic([])
    with pytest.raises(DomainError):
        cvm_statistic([])


# --------------------------------------------------------------------------
# signature selection
# --------------------------------------------------------------------------

def test_select_signature_von_mises_recovery():
    model = CopulaModel(VonMises(5.0, 0.0), (0, 1))
    hits = 0
    for rep in range(100):
        u = pseudo_observations(model.sample(rep, 500))
        hits += select_signature(u, "KS").chosen.bits == (0, 1)
    assert hits >= 99


def test_select_signature_null_below_critical_value():
    n = 500
    below = 0
    for rep in range(100):
        u = pseudo_observations(np.random.default_rng(rep).random((n, 2)))
        table = select_signature(u, "KS").statistic_per_candidate
        below += all(v["KS"] < 1.63 / math.sqrt(n) for v in table.values())
    assert below >= 95


def test_select_signature_countermonotone():
    x = np.linspace(0.01, 0.99, 50)
    report = select_signature(np.column_stack([x, 1 - x]), "CvM")
    assert report.chosen.bits == (0, 0)


def test_select_signature_report_structure():
    u = pseudo_observations(CopulaModel(VonMises(3.0, 1.0), (0, 1, 1)).sample(1, 200))
    report = select_signature(u, "cvm")
    assert report.method == "CvM"
    assert set(report.statistic_per_candidate) == {s.bits for s in Signature.candidates(3)}
    best = max(v["CvM"] for v in report.statistic_per_candidate.values())
    assert report.statistic_per_candidate[report.chosen.bits]["CvM"] == best
    assert report.to_dict()["chosen"] == list(report.chosen.bits)


def test_select_signature_tie_break_lexicographic():
    report = select_signature(np.full((20, 3), 0.5), lambda y: 1.0)
    assert report.chosen.bits == (0, 0, 0)
    assert report.method == "custom"


def test_select_signature_errors():
    with pytest.raises(DomainError):
        select_signature(np.random.default_rng(0).random((5, 2)))
    with pytest.raises(ShapeError):
        select_signature(np.random.default_rng(0).random((20, 1)))
    with pytest.raises(UnsupportedDimensionError):
        select_signature(np.random.default_rng(0).random((20, 21)))
    with pytest.raises(DomainError):
        select_signature(np.random.default_rng(0).random((20, 2)), "AD")


def test_ks_and_cvm_agree():
    model = CopulaModel(Beta(2.0, 5.0), (0, 1))
    agree = 0
    for rep in range(100):
        u = pseudo_observations(model.sample(rep, 500))
        agree += select_signature(u, "KS").chosen == select_signature(u, "CvM").chosen
    assert agree >= 90


@pytest.mark.slow
@pytest.mark.parametrize("name", [k for k in BATTERY if k != "Uniform"])
def test_selection_recovery_non_decreasing(name):
    model = CopulaModel(BATTERY[name], (0, 1, 0))
    rates = []
    for n in (50, 100, 200, 500):
        hits = sum(select_signature(pseudo_observations(model.sample(rep, n))).chosen.bits
                   == (0, 1, 0) for rep in range(100))
        rates.append(hits / 100)
    assert all(b >= a - 0.05 for a, b in zip(rates, rates[1:]))


# --------------------------------------------------------------------------
# parametric fitting
# --------------------------------------------------------------------------

def test_fit_beta_consistency():
    hits = 0
    for rep in range(20):
        y = np.random.default_rng(rep).beta(3, 3, 5000)
        fit = fit_parametric(y, "Beta", seed=rep)
        a, b = fit.params["alpha"], fit.params["beta"]
        hits += abs(a - 3) < 0.3 and abs(b - 3) < 0.3
    assert hits >= 18


def test_fit_von_mises_to_uniform_collapses():
    y = np.random.default_rng(1).random(10_000)
    fit = fit_parametric(y, "VonMises")
    assert math.hypot(fit.params["phi1"], fit.params["phi2"]) < 0.1


def test_fit_aic_recomputation():
    y = np.random.default_rng(2).beta(2, 5, 400)
    for family in ("Beta", "TruncNormal", ("Mixture", "TruncNormal", "TruncNormal"), "Uniform"):
        fit = fit_parametric(y, family, n_starts=4)
        assert fit.aic == 2 * fit.n_params - 2 * fit.log_likelihood


def test_fit_not_worse_than_truth():
    truth = Beta(2.0, 5.0)
    y = np.random.default_rng(6).beta(2, 5, 1000)
    fit = fit_parametric(y, "Beta", initial=(truth,))
    assert fit.log_likelihood >= float(np.sum(truth.logpdf(y))) - y.size * 1e-6


def test_fit_plug_in_concordance_uses_signature_and_shift():
    y = CopulaModel(VonMises(17.19, 0.80), (0, 1)).sample(3, 2000)
    from wrapcop.generator import frac
    shifted = frac(y[:, 0] - y[:, 1] + 0.5)
    fit = fit_parametric(shifted, "VonMises", signature=(0, 1), shift=0.5)
    assert fit.params["phi1"] == pytest.approx(-17.19, rel=0.15)
    assert fit.rho == pytest.approx(0.82, abs=0.03)


def test_fit_mixture_components_ordered():
    y = MIXTURE.sample(np.random.default_rng(4), 3000)
    fit = fit_parametric(y, ("Mixture", "TruncNormal", "TruncNormal"))
    assert fit.params["first.mu"] < fit.params["second.mu"]
    assert fit.params["weight"] == pytest.approx(0.25, abs=0.05)
    assert fit.to_dict()["family"] == fit.family


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_parametric(np.full(5, 0.5), "Beta")
    with pytest.raises(DomainError):
        fit_parametric(np.linspace(-0.5, 0.5, 20), "Beta")


# --------------------------------------------------------------------------
# KDE
# --------------------------------------------------------------------------

def test_kde_uniform_flat():
    y = np.random.default_rng(8).random(10_000)
    kde = fit_kde(y, circular=True)
    assert np.max(np.abs(kde.values - 1.0)) < 0.1
    assert kde.grid.size == 200


def test_kde_plain_integral_in_range():
    y = np.random.default_rng(8).random(2000)
    assert 0.9 <= fit_kde(y).integral() <= 1.1


def test_kde_mixture_modes():
    y = MIXTURE.sample(np.random.default_rng(9), 5000)
    modes = fit_kde(y).modes()
    assert modes.size == 2
    np.testing.assert_allclose(np.sort(modes), [0.25, 0.75], atol=0.03)


def test_kde_known_margins_mise():
    for name in ("Beta(2,5)", "TruncNormal(0.5,0.1)", "Mixture(1/4,3/4)"):
        gen = BATTERY[name]
        y = gen.sample(np.random.default_rng(10), 100_000)
        kde = fit_kde(y)
        mise = float(np.trapezoid((kde.values - gen.pdf(kde.grid)) ** 2, kde.grid))
        assert mise < 1e-2


def test_kde_bandwidth():
    y = np.random.default_rng(0).random(500)
    assert fit_kde(y).bandwidth == pytest.approx(silverman_bandwidth(y))
    assert fit_kde(y, bandwidth=0.05).bandwidth == 0.05
    with pytest.raises(DomainError):
        fit_kde(y, bandwidth=0.0)
    with pytest.raises(DomainError):
        fit_kde(y[:5])


def test_kde_to_generator():
    y = MIXTURE.sample(np.random.default_rng(1), 2000)
    gen = fit_kde(y, circular=True).to_generator(128)
    assert gen.m == 128
    assert float(np.mean(gen.values)) == pytest.approx(1.0)


# --------------------------------------------------------------------------
# empirical copulas
# --------------------------------------------------------------------------

def test_empirical_copula_examples():
    u = np.array([[1 / 3, 1 / 3], [2 / 3, 2 / 3]])
    assert empirical_copula(u, (1.0, 1.0)) == 1.0
    assert empirical_copula(u, (0.0, 0.0)) == 0.0
    assert empirical_copula(u, (0.5, 0.5)) == 0.5
    np.testing.assert_allclose(empirical_copula(u, [[0.5, 0.5], [1, 1]]), [0.5, 1.0])


def test_empirical_beta_single_observation():
    u = PseudoObservations(np.array([[0.5, 0.5]]), "rank_based", np.array([[1.0, 1.0]]))
    assert empirical_beta_density(u, (0.5, 0.5)) == pytest.approx(1.0)


def test_empirical_beta_integrates_to_one():
    u = pseudo_observations(np.random.default_rng(2).normal(size=(50, 2)))
    m = 256
    mid = (np.arange(m) + 0.5) / m
    g1, g2 = np.meshgrid(mid, mid, indexing="ij")
    dens = empirical_beta_density(u, np.column_stack([g1.ravel(), g2.ravel()]))
    assert dens.mean() == pytest.approx(1.0, abs=1e-3)


def test_empirical_beta_ridge():
    rng = np.random.default_rng(3)
    x = rng.normal(size=200)
    u = pseudo_observations(np.column_stack([x, x + 0.1 * rng.normal(size=200)]))
    assert empirical_beta_density(u, (0.5, 0.5)) > empirical_beta_density(u, (0.1, 0.9))


def test_empirical_beta_requires_ranks():
    u = PseudoObservations(np.full((3, 2), 0.5), "known_margins")
    with pytest.raises(UnsupportedInputError):
        empirical_beta_density(u, (0.5, 0.5))
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TiesWarning)
        r = pseudo_observations(np.random.default_rng(0).random((10, 2)))
    with pytest.raises(DomainError):
        empirical_beta_density(r, (0.0, 0.5))
