"""Tests for residual distribution fitting, scoring, selection and sampling."""

from pathlib import Path

import numpy as np
import pytest
from scipy import stats
from scipy.integrate import trapezoid

from forecast_impact.errors import AllFitsFailedError, DegenerateSampleError, UnsupportedFamilyError
from forecast_impact.residuals import (
    FAMILIES,
    FAMILY_NAMES,
    ResidualDistribution,
    dump_distribution,
    fit_distribution,
    freedman_diaconis_bins,
    load_distribution,
    rank_families,
    sample,
    score_sse,
    select_best,
)


EXAMPLE_PARAMS = {
    "normal": (0.0, 1000.0),
    "laplace": (0.0, 1000.0),
    "logistic": (0.0, 1000.0),
    "student_t": (10.0, 0.0, 1000.0),
    "cauchy": (0.0, 1000.0),
    "gumbel": (0.0, 1000.0),
    "uniform": (-3000.0, 10000.0),
    "gamma_shifted": (4.0, -4000.0, 1000.0),
    "skew_normal": (4.0, 0.0, 1000.0),
    "johnson_sb": (0.5, 0.6, -5000.0, 10000.0),
    "johnson_su": (0.5, 1.5, 0.0, 1000.0),
}


def example(family: str) -> ResidualDistribution:
    return ResidualDistribution(family=family, params=EXAMPLE_PARAMS[family])


def gaussian(n: int, sd: float = 1500.0, seed: int = 0) -> np.ndarray:
    return np.random.default_rng(seed).normal(0.0, sd, n)


class Mixture:
    """Two equally weighted normals."""

    def __init__(self, centre: float, sd: float) -> None:
        """Place components at -centre and +centre."""
        self.centre = centre
        self.sd = sd

    def pdf(self, x: np.ndarray) -> np.ndarray:
        """Mixture density."""
        return 0.5 * (stats.norm.pdf(x, -self.centre, self.sd) + stats.norm.pdf(x, self.centre, self.sd))


############
# Families #
############
def test_every_family_has_example_parameters():
    assert set(EXAMPLE_PARAMS) == set(FAMILY_NAMES)
    for name, family in FAMILIES.items():
        assert len(EXAMPLE_PARAMS[name]) == family.n_params


@pytest.mark.parametrize("family", FAMILY_NAMES)
def test_pdf_integrates_to_one(family: str):
    dist = example(family)
    lower, upper = dist.support
    x = np.linspace(max(lower, -1e6), min(upper, 1e6), 400_001)
    assert trapezoid(dist.pdf(x), x) == pytest.approx(1.0, abs=1e-3)


@pytest.mark.parametrize("family", FAMILY_NAMES)
def test_cdf_monotone_and_pdf_non_negative(family: str):
    dist = example(family)
    lower, upper = dist.support
    x = np.linspace(max(lower, -50_000.0), min(upper, 50_000.0), 1000)
    assert np.all(np.diff(dist.cdf(x)) >= -1e-12)
    assert np.all(dist.pdf(x) >= 0)


@pytest.mark.parametrize("family", FAMILY_NAMES)
def test_draws_stay_in_support(family: str):
    dist = example(family)
    lower, upper = dist.support
    draws = dist.sample(20_000, seed=3)
    assert np.all(np.isfinite(draws))
    assert np.all((draws >= lower) & (draws <= upper))


@pytest.mark.parametrize("family", [name for name in FAMILY_NAMES if name != "cauchy"])
def test_sample_moments(family: str):
    dist = example(family)
    n = 100_000
    draws = dist.sample(n, seed=11)
    mean, var, kurtosis = (float(m) for m in dist.scipy_dist.stats(moments="mvk"))
    assert abs(draws.mean() - mean) <= 4.0 * np.sqrt(var / n)
    assert abs(draws.var() - var) <= 4.0 * var * np.sqrt((kurtosis + 2.0) / n)


def test_unknown_family():
    with pytest.raises(UnsupportedFamilyError):
        fit_distribution(gaussian(100), "pareto")
    with pytest.raises(UnsupportedFamilyError):
        ResidualDistribution(family="pareto", params=(1.0,))


###########
# Fitting #
###########
def test_normal_fit_recovers_parameters():
    fit = fit_distribution(gaussian(100_000), "normal")
    mu, sigma = fit.params
    assert abs(mu) < 30
    assert abs(sigma - 1500) < 30
    assert fit.converged
    assert fit.n == 100_000
    assert fit.bin_rule == "freedman-diaconis"


def test_uniform_fit_uses_sample_endpoints():
    rng = np.random.default_rng(1)
    residuals = np.concatenate([[-3.0, 7.0], rng.uniform(-3.0, 7.0, 98)])
    assert fit_distribution(residuals, "uniform").support == (-3.0, 7.0)


def test_laplace_fit_is_median_and_mean_deviation():
    residuals = np.random.default_rng(2).laplace(100.0, 800.0, 5000)
    loc, scale = fit_distribution(residuals, "laplace").params
    assert loc == pytest.approx(np.median(residuals))
    assert scale == pytest.approx(np.mean(np.abs(residuals - np.median(residuals))))


def test_degenerate_samples():
    with pytest.raises(DegenerateSampleError):
        fit_distribution(np.full(500, 250.0), "normal")
    with pytest.raises(DegenerateSampleError):
        fit_distribution(gaussian(49), "normal")


@pytest.mark.parametrize(
    ("family", "tolerance"),
    [
        ("normal", 0.05),
        ("laplace", 0.05),
        ("logistic", 0.05),
        ("gumbel", 0.05),
        ("uniform", 0.05),
        ("cauchy", 0.05),
        ("student_t", 0.05),
        ("skew_normal", 0.1),
    ],
)
def test_refit_recovers_location_and_scale(family: str, tolerance: float):
    truth = example(family)
    fit = fit_distribution(truth.sample(100_000, seed=5), family)
    *_, true_loc, true_scale = truth.params
    *_, loc, scale = fit.params
    assert abs(loc - true_loc) <= tolerance * true_scale
    assert abs(scale - true_scale) <= tolerance * true_scale


def test_refit_recovers_skew_normal_shape():
    fit = fit_distribution(example("skew_normal").sample(100_000, seed=5), "skew_normal")
    assert fit.params[0] == pytest.approx(4.0, rel=0.2)


@pytest.mark.parametrize("family", ["logistic", "student_t", "cauchy", "gumbel", "gamma_shifted", "skew_normal"])
def test_simplex_fit_reaches_the_likelihood_of_the_truth(family: str):
    truth = example(family)
    draws = truth.sample(5000, seed=8)
    fit = fit_distribution(draws, family)
    fitted = np.mean(fit.scipy_dist.logpdf(draws))
    true = np.mean(truth.scipy_dist.logpdf(draws))
    assert fitted >= true - 1e-4


def test_johnson_su_fit_reaches_the_likelihood_of_the_truth():
    truth = example("johnson_su")
    draws = truth.sample(5000, seed=8)
    fit = fit_distribution(draws, "johnson_su")
    assert np.mean(fit.scipy_dist.logpdf(draws)) >= np.mean(truth.scipy_dist.logpdf(draws)) - 1e-3


###########
# Scoring #
###########
def test_bin_count_limits():
    assert freedman_diaconis_bins(gaussian(60)) == 10
    assert freedman_diaconis_bins(np.random.default_rng(0).standard_cauchy(100_000)) == 200
    assert 10 <= freedman_diaconis_bins(gaussian(10_000)) <= 200


def test_exact_distribution_scores_near_zero():
    residuals = gaussian(100_000)
    bins = freedman_diaconis_bins(residuals)
    assert score_sse(ResidualDistribution.normal(0.0, 1500.0), residuals) / bins < 1e-8


def test_normal_scores_worse_than_mixture_on_bimodal_sample():
    rng = np.random.default_rng(4)
    residuals = np.concatenate([rng.normal(-3000.0, 500.0, 10_000), rng.normal(3000.0, 500.0, 10_000)])
    normal = fit_distribution(residuals, "normal")
    assert normal.sse > score_sse(Mixture(3000.0, 500.0), residuals)


def test_scores_are_deterministic():
    residuals = gaussian(5000, seed=9)
    dist = ResidualDistribution.normal(10.0, 1400.0)
    assert score_sse(dist, residuals, 40) == score_sse(dist, residuals, 40)


def test_too_few_bins():
    with pytest.raises(DegenerateSampleError):
        score_sse(ResidualDistribution.normal(0.0, 1.0), gaussian(100), n_bins=5)


#############
# Selection #
#############
def test_single_family_selection():
    best = select_best(gaussian(2000), ["normal"])
    assert best.family == "normal"


def test_gaussian_sample_selects_normal():
    assert select_best(gaussian(20_000), ["normal", "uniform", "cauchy"]).family == "normal"


def test_bounded_sample_selects_johnson_sb():
    residuals = example("johnson_sb").sample(20_000, seed=6)
    assert select_best(residuals, ["normal", "johnson_sb"]).family == "johnson_sb"


def test_best_has_lowest_sse():
    residuals = np.random.default_rng(12).laplace(0.0, 900.0, 50_000)
    ranked = rank_families(residuals, ["normal", "laplace", "logistic", "uniform"])
    assert ranked[0].family == "laplace"
    assert all(ranked[0].sse <= fit.sse for fit in ranked)
    assert [fit.sse for fit in ranked] == sorted(fit.sse for fit in ranked)


def test_ranking_does_not_depend_on_jobs():
    residuals = gaussian(3000, seed=13)
    families = ["normal", "laplace", "logistic"]
    serial = rank_families(residuals, families)
    parallel = rank_families(residuals, families, jobs=2)
    assert [fit.family for fit in serial] == [fit.family for fit in parallel]
    assert [fit.sse for fit in serial] == [fit.sse for fit in parallel]


def test_empty_family_list():
    with pytest.raises(AllFitsFailedError):
        select_best(gaussian(100), [])


############
# Sampling #
############
def test_no_draws():
    assert sample(ResidualDistribution.normal(0.0, 2000.0), 1, 0).shape == (0,)


def test_draws_are_seeded():
    dist = ResidualDistribution.normal(0.0, 2000.0)
    assert sample(dist, 42, 1000).tolist() == sample(dist, 42, 1000).tolist()
    assert sample(dist, 42, 1000).tolist() != sample(dist, 43, 1000).tolist()


def test_uniform_sample_mean():
    dist = ResidualDistribution(family="uniform", params=(-3.0, 10.0))
    assert sample(dist, 0, 100_000).mean() == pytest.approx(2.0, abs=0.03)


def test_point_mass_controls():
    assert sample(ResidualDistribution.point_mass(), 0, 5).tolist() == [0.0] * 5
    assert ResidualDistribution.normal(250.0, 0.0) == ResidualDistribution.point_mass(250.0)
    assert ResidualDistribution.point_mass(3.0).support == (3.0, 3.0)


def test_document_reproduces_the_sampler(tmp_path: Path):
    fit = fit_distribution(gaussian(500, seed=14), "logistic")
    dump_distribution(fit, tmp_path / "distribution.json")
    loaded = load_distribution(tmp_path / "distribution.json")
    assert loaded == fit
    assert sample(loaded, 7, 100).tolist() == sample(fit, 7, 100).tolist()
