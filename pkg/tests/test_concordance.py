"""Tests for closed-form, oracle and sample concordance measures."""

import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import BATTERY, SIGNATURES_2D
from wrapcop.concordance import (
    ConcordanceReport,
    chatterjee_xi,
    closed_form_concordance,
    dss_xi,
    kendall_tau,
    oracle_concordance,
    sample_concordance,
    spearman_rho,
)
from wrapcop.copula import CopulaModel
from wrapcop.exceptions import ShapeError, SingularGeneratorError, TiesWarning
from wrapcop.generator import Beta, Tabulated, Triangular, TruncNormal, Uniform, VonMises, rotate

UNIF_QUARTERS = Tabulated((0.0, 1.0, 1.0, 0.0))


# --------------------------------------------------------------------------
# closed forms: worked examples
# --------------------------------------------------------------------------

def test_uniform_generator_has_zero_concordance():
    report = closed_form_concordance(CopulaModel(Uniform(), (0, 0)))
    assert report.rho == pytest.approx(0.0, abs=1e-12)
    assert report.tau == pytest.approx(0.0, abs=1e-12)
    assert report.xi == pytest.approx(0.0, abs=1e-12)


def test_triangular_examples():
    model = CopulaModel(Triangular(1.0, 1.0), (0, 0))
    assert spearman_rho(model) == pytest.approx(0.0, abs=1e-12)
    assert kendall_tau(model) == pytest.approx(-1.0 / 45.0, abs=1e-12)
    assert dss_xi(model) == pytest.approx(1.0 / 15.0, abs=1e-12)


def test_beta_three_halves_spearman():
    assert spearman_rho(CopulaModel(Beta(1.5, 1.5), (0, 0))) == pytest.approx(0.125, abs=1e-12)


def test_kendall_maximiser_uniform_on_middle_half():
    assert kendall_tau(CopulaModel(UNIF_QUARTERS, (0, 0))) == pytest.approx(1.0 / 6.0, abs=1e-12)


@pytest.mark.parametrize("name", [k for k in BATTERY])
def test_kendall_maximiser_beats_battery(name):
    tau = kendall_tau(CopulaModel(BATTERY[name], (0, 0)))
    assert tau < 1.0 / 6.0 - 1e-3


def test_near_point_mass_drives_xi_towards_one():
    # xi = 1 + 12 sigma^2 - 12 sigma / sqrt(pi) + O(sigma^3) for a narrow
    # normal; sigma = 0.01 gives about 0.933, sigma = 0.001 exceeds 0.99.
    narrow = dss_xi(CopulaModel(TruncNormal(0.5, 0.01), (0, 0)))
    narrower = dss_xi(CopulaModel(TruncNormal(0.5, 0.001), (0, 0)))
    sigma = 0.01
    assert narrow == pytest.approx(1 + 12 * sigma**2 - 12 * sigma / math.sqrt(math.pi), abs=1e-5)
    assert narrower >= 0.99
    assert narrow < narrower


def test_dimension_error():
    with pytest.raises(ShapeError):
        spearman_rho(CopulaModel(Uniform(), (0, 0, 0)))
    with pytest.raises(ShapeError):
        oracle_concordance(CopulaModel(Uniform(), (0, 1, 0)))


# --------------------------------------------------------------------------
# invariants
# --------------------------------------------------------------------------

@pytest.mark.parametrize("signature", SIGNATURES_2D)
def test_xi_identity(battery_generator, signature):
    r = closed_form_concordance(CopulaModel(battery_generator, signature))
    assert r.xi == pytest.approx(r.sign_factor * (2 * r.rho - 3 * r.tau), abs=1e-12)


def test_signature_flip_negates_rho_and_tau(battery_generator):
    a = closed_form_concordance(CopulaModel(battery_generator, (0, 0)))
    b = closed_form_concordance(CopulaModel(battery_generator, (0, 1)))
    assert b.sign_factor == -a.sign_factor
    assert b.rho == -a.rho and b.tau == -a.tau and b.xi == a.xi


@pytest.mark.parametrize("signature", SIGNATURES_2D)
def test_ranges(battery_generator, signature):
    r = closed_form_concordance(CopulaModel(battery_generator, signature))
    rho, tau = r.sign_factor * r.rho, r.sign_factor * r.tau
    assert -1.0 < rho < 0.5
    assert -1.0 < tau <= 1.0 / 6.0 + 1e-9
    assert 0.0 <= r.xi <= 1.0


@settings(max_examples=60, deadline=None)
@given(st.lists(st.floats(0.0, 10.0), min_size=1, max_size=40).filter(lambda v: sum(v) > 1e-3))
def test_ranges_for_random_histograms(values):
    r = closed_form_concordance(CopulaModel(Tabulated(tuple(values)), (0, 0)))
    assert -1.0 - 1e-12 <= r.rho <= 0.5 + 1e-12
    assert -1.0 - 1e-12 <= r.tau <= 1.0 / 6.0 + 1e-9
    assert -1e-12 <= r.xi <= 1.0 + 1e-12


@pytest.mark.parametrize("signature", [(0, 0), (1, 0)])
def test_rho_range_attainable(signature):
    middle = Tabulated((0.0,) * 49 + (1.0,) + (0.0,) * 50)
    edges = Tabulated((1.0,) + (0.0,) * 98 + (1.0,))
    sign = closed_form_concordance(CopulaModel(middle, signature)).sign_factor
    assert spearman_rho(CopulaModel(middle, signature)) == pytest.approx(0.5 * sign, abs=1e-2)
    assert spearman_rho(CopulaModel(edges, signature)) == pytest.approx(-1.0 * sign, abs=3e-2)


# --------------------------------------------------------------------------
# oracle
# --------------------------------------------------------------------------

def test_oracle_uniform_is_zero():
    r = oracle_concordance(CopulaModel(Uniform(), (0, 1)))
    assert r.source == "oracle"
    assert max(abs(r.rho), abs(r.tau), abs(r.xi)) < 1e-6


def test_oracle_beta_three_halves():
    assert oracle_concordance(CopulaModel(Beta(1.5, 1.5), (0, 0))).rho == pytest.approx(0.125, abs=1e-4)


@pytest.mark.parametrize("signature", SIGNATURES_2D)
def test_oracle_agrees_with_closed_form(battery_generator, signature):
    model = CopulaModel(battery_generator, signature)
    a = closed_form_concordance(model)
    b = oracle_concordance(model)
    assert abs(a.rho - b.rho) < 1e-4
    assert abs(a.tau - b.tau) < 1e-4
    assert abs(a.xi - b.xi) < 1e-4


def test_oracle_handles_jumps():
    model = CopulaModel(UNIF_QUARTERS, (0, 0))
    b = oracle_concordance(model)
    assert b.tau == pytest.approx(1.0 / 6.0, abs=1e-4)


def test_oracle_rejects_singular_generator():
    with pytest.raises(SingularGeneratorError):
        oracle_concordance(CopulaModel(Beta(0.5, 0.5), (0, 0)))


def test_oracle_deterministic():
    model = CopulaModel(VonMises(2.0, 1.0), (1, 0))
    assert oracle_concordance(model, 256) == oracle_concordance(model, 256)


# --------------------------------------------------------------------------
# sample estimators
# --------------------------------------------------------------------------

def test_sample_comonotone():
    u = np.linspace(0.01, 0.99, 100)
    r = sample_concordance(np.column_stack([u, u]))
    assert r.rho == pytest.approx(1.0) and r.tau == pytest.approx(1.0)
    assert r.source == "sample"


def test_sample_independent():
    u = np.random.default_rng(5).random((10_000, 2))
    r = sample_concordance(u)
    assert max(abs(r.rho), abs(r.tau), abs(r.xi)) < 0.05


def test_sample_pair_two_model():
    # The fitted generator refers to the half-shifted differences; the
    # copula generator is that fit rotated back by one half.
    gen = rotate(VonMises(-17.19, -0.80), 0.5)
    model = CopulaModel(gen, (0, 1))
    data = model.sample(11, 100_000)
    r = sample_concordance(data)
    assert r.rho == pytest.approx(0.82, abs=0.02)
    closed = closed_form_concordance(model)
    assert abs(r.rho - closed.rho) < 0.02
    assert abs(r.tau - closed.tau) < 0.02
    assert abs(r.xi - closed.xi) < 0.02


def test_chatterjee_known_value():
    # y = x: consecutive ranks differ by one.
    n = 50
    x = np.arange(n, dtype=float)
    assert chatterjee_xi(x, x) == pytest.approx(1 - 3 * (n - 1) / (n * n - 1))


def test_chatterjee_warns_on_ties():
    x = np.array([0.1, 0.2, 0.2, 0.4, 0.5])
    with pytest.warns(TiesWarning):
        chatterjee_xi(x, x[::-1])


def test_sample_kendall_tau_b_under_ties():
    x = np.array([1, 2, 2, 3, 4, 5], dtype=float)
    y = np.array([1, 3, 2, 4, 4, 6], dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TiesWarning)
        r = sample_concordance(np.column_stack([x, y]))
    from scipy import stats
    assert r.tau == pytest.approx(stats.kendalltau(x, y, variant="b").statistic)


def test_sample_shape_errors():
    with pytest.raises(ShapeError):
        sample_concordance(np.zeros((10, 3)))


def test_report_serialises():
    r = closed_form_concordance(CopulaModel(Beta(2.0, 5.0), (1, 0)))
    d = r.to_dict()
    assert set(d) == {"rho", "tau", "xi", "sign_factor", "source"}
    assert ConcordanceReport(**d) == r
