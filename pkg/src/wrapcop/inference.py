"""Rank-based inference for wrapped-sum copulas.

The workflow mirrors the structure of the model: under the correct
signature the wrapped sums ``Y = sum_j U~_j mod 1`` are draws from the
generator, while under any other canonical signature they are uniform.

* :func:`pseudo_observations` turns raw data into scaled ranks,
* :func:`select_signature` picks the candidate whose wrapped sums deviate
  most from uniformity (Kolmogorov-Smirnov or Cramer-von Mises distance),
* :func:`fit_parametric` maximises ``sum_i log f_theta(Y_i)`` over a family,
* :func:`fit_kde` estimates the generator nonparametrically,
* :func:`empirical_copula` and :func:`empirical_beta_density` give
  model-free references.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Callable, Literal, Sequence

import numpy as np
import numpy.typing as npt
from scipy import optimize, special, stats
from scipy.signal import find_peaks
from scipy.stats import qmc

from wrapcop.concordance import closed_form_concordance
from wrapcop.copula import CopulaModel, Signature, wrapped_sum
from wrapcop.exceptions import (
    BoundaryWarning,
    DegenerateMarginError,
    DomainError,
    InvalidParameterError,
    NumericError,
    ShapeError,
    TiesWarning,
    UnsupportedDimensionError,
    UnsupportedInputError,
)
from wrapcop.generator import (
    Beta,
    GeneratorSpec,
    Kumaraswamy,
    LogitNormal,
    Mixture,
    Tabulated,
    Triangular,
    TruncNormal,
    Uniform,
    VonMises,
    rotate,
)

__all__ = [
    "PseudoObservations",
    "SignatureSelectionReport",
    "FitReport",
    "KdeEstimate",
    "pseudo_observations",
    "wrapped_sums",
    "ks_statistic",
    "cvm_statistic",
    "select_signature",
    "family_of",
    "UNIMODAL_FAMILIES",
    "fit_parametric",
    "silverman_bandwidth",
    "fit_kde",
    "empirical_copula",
    "empirical_beta_density",
]

Provenance = Literal["rank_based", "parametric_margins", "known_margins"]


# ---------------------------------------------------------------------------
# Pseudo-observations and wrapped sums
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class PseudoObservations:
    """Observations on the copula scale.

    Parameters
    ----------
    values : ndarray of shape (n, d)
        Entries in ``(0, 1)``.
    provenance : {"rank_based", "parametric_margins", "known_margins"}
        How the values were obtained.  Only rank-based values carry the
        ranks needed by :func:`empirical_beta_density`.
    """

    values: np.ndarray
    provenance: Provenance = "rank_based"
    ranks: np.ndarray | None = field(default=None, repr=False)

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        if v.ndim != 2 or v.shape[1] < 1:
            raise ShapeError("pseudo-observations must be an (n, d) array")
        if self.provenance not in ("rank_based", "parametric_margins", "known_margins"):
            raise DomainError(f"unknown provenance {self.provenance!r}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        if self.provenance == "rank_based" and self.ranks is None:
            object.__setattr__(self, "ranks", v * (v.shape[0] + 1))

    @property
    def n(self) -> int:
        """Number of observations."""
        return self.values.shape[0]

    @property
    def d(self) -> int:
        """Dimension."""
        return self.values.shape[1]


def _as_values(u: PseudoObservations | npt.ArrayLike) -> np.ndarray:
    return u.values if isinstance(u, PseudoObservations) else np.asarray(u, dtype=float)


def pseudo_observations(x: npt.ArrayLike) -> PseudoObservations:
    """Column-wise ranks divided by ``n + 1``.

    Ties receive average ranks and trigger a :class:`TiesWarning`.

    Parameters
    ----------
    x : array-like of shape (n, d)
        Raw observations.

    Raises
    ------
    DegenerateMarginError
        If a column is constant.

    Examples
    --------
    >>> pseudo_observations([[3.2], [1.1], [7.7]]).values.ravel()
    array([0.5 , 0.25, 0.75])
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    if x.ndim != 2:
        raise ShapeError("data must be a two-dimensional array")
    n = x.shape[0]
    if n < 2:
        raise DomainError("at least two observations are required")
    if not np.all(np.isfinite(x)):
        raise DomainError("data contain non-finite values")
    if np.any(np.ptp(x, axis=0) == 0.0):
        raise DegenerateMarginError("a column is constant")
    ranks = stats.rankdata(x, axis=0, method="average")
    if any(np.unique(col).size < n for col in x.T):
        warnings.warn("ties resolved by average ranks", TiesWarning, stacklevel=2)
    return PseudoObservations(ranks / (n + 1.0), "rank_based", ranks)


def wrapped_sums(u: PseudoObservations | npt.ArrayLike,
                 t: Signature | Sequence[int]) -> np.ndarray:
    """Row-wise wrapped sums of the observations under candidate signature ``t``."""
    values = _as_values(u)
    if values.ndim != 2:
        raise ShapeError("expected an (n, d) array")
    return wrapped_sum(values, t)


def _sorted_sample(y: npt.ArrayLike) -> np.ndarray:
    y = np.sort(np.asarray(y, dtype=float).ravel())
    if y.size == 0:
        raise DomainError("statistic of an empty sample")
    return y


def ks_statistic(y: npt.ArrayLike) -> float:
    """Kolmogorov-Smirnov distance of the empirical cdf from ``Unif(0, 1)``.

    ``max_i max(|(i-1)/n - y_(i)|, |i/n - y_(i)|)`` over the order statistics.
    """
    y = _sorted_sample(y)
    n = y.size
    i = np.arange(1, n + 1)
    return float(np.max(np.maximum(np.abs((i - 1) / n - y), np.abs(i / n - y))))


def cvm_statistic(y: npt.ArrayLike) -> float:
    """Cramer-von Mises distance ``(1/n) sum (y_(i) - i/n + 1/(2n))^2 + 1/(12 n^2)``.

    This is the usual statistic divided by ``n``, so that it converges to a
    population distance rather than growing with the sample size.
    """
    y = _sorted_sample(y)
    n = y.size
    i = np.arange(1, n + 1)
    return float(np.mean((y - i / n + 0.5 / n) ** 2) + 1.0 / (12.0 * n * n))


_STATISTICS: dict[str, Callable[[np.ndarray], float]] = {"KS": ks_statistic, "CvM": cvm_statistic}


@dataclass(frozen=True)
class SignatureSelectionReport:
    """Outcome of :func:`select_signature`.

    Attributes
    ----------
    chosen : Signature
        Canonical signature with the largest statistic.
    statistic_per_candidate : dict
        Maps each canonical candidate's bit tuple to ``{"KS": ..., "CvM": ...}``.
    method : str
        Statistic that drove the choice.
    """

    chosen: Signature
    statistic_per_candidate: dict[tuple[int, ...], dict[str, float]]
    method: str

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible dictionary."""
        return {
            "chosen": list(self.chosen.bits),
            "method": self.method,
            "statistics": [
                {"signature": list(k), **v} for k, v in self.statistic_per_candidate.items()
            ],
        }


def select_signature(
    u: PseudoObservations | npt.ArrayLike,
    method: str | Callable[[np.ndarray], float] = "KS",
) -> SignatureSelectionReport:
    """Choose the canonical signature whose wrapped sums look least uniform.

    All ``2^(d-1)`` canonical candidates are scored.  Ties are broken in
    favour of the lexicographically smallest bit string.

    Parameters
    ----------
    u : PseudoObservations or array-like of shape (n, d)
    method : {"KS", "CvM"} or callable
        Distance from uniformity.  A callable mapping a sample in ``[0, 1)``
        to a non-negative number may be supplied, for instance an
        Anderson-Darling statistic.

    Returns
    -------
    SignatureSelectionReport
    """
    values = _as_values(u)
    if values.ndim != 2:
        raise ShapeError("expected an (n, d) array")
    n, d = values.shape
    if d < 2:
        raise ShapeError("signature selection needs d >= 2")
    if d > 20:
        raise UnsupportedDimensionError("exhaustive signature search is limited to d <= 20")
    if n < 10:
        raise DomainError("signature selection needs at least 10 observations")
    if callable(method):
        stats_fns = dict(_STATISTICS, custom=method)
        key = "custom"
    else:
        lookup = {"ks": "KS", "cvm": "CvM"}
        key = lookup.get(str(method).lower())
        if key is None:
            raise DomainError(f"unknown selection method {method!r}")
        stats_fns = _STATISTICS
    table: dict[tuple[int, ...], dict[str, float]] = {}
    best, best_val = None, -np.inf
    for cand in Signature.candidates(d):
        y = wrapped_sum(values, cand)
        scores = {name: fn(y) for name, fn in stats_fns.items()}
        table[cand.bits] = scores
        if scores[key] > best_val:
            best, best_val = cand, scores[key]
    return SignatureSelectionReport(best, table, key if key != "custom" else "custom")


# ---------------------------------------------------------------------------
# Parametric families for maximum likelihood
# ---------------------------------------------------------------------------
def _logit(p):
    return math.log(p) - math.log1p(-p)


def _clip01(y, eps=1e-6):
    return np.clip(y, eps, 1.0 - eps)


def _circular_start(y: np.ndarray) -> tuple[float, float]:
    c, s = np.mean(np.cos(2 * np.pi * y)), np.mean(np.sin(2 * np.pi * y))
    r = min(math.hypot(c, s), 0.999)
    # Best and Fisher's approximation to the inverse of I1/I0.
    if r < 0.53:
        kappa = 2 * r + r**3 + 5 * r**5 / 6
    elif r < 0.85:
        kappa = -0.4 + 1.39 * r + 0.43 / (1 - r)
    else:
        kappa = 1 / (r**3 - 4 * r**2 + 3 * r)
    if r < 1e-12:
        return 0.0, 0.0
    return kappa * c / r, kappa * s / r


@dataclass(frozen=True)
class _Family:
    """Unconstrained parameterisation of a generator family."""

    name: str
    n_params: int
    build: Callable[[np.ndarray], GeneratorSpec]
    encode: Callable[[GeneratorSpec], np.ndarray]
    start: Callable[[np.ndarray], np.ndarray]
    diffuse: Callable[[np.ndarray], np.ndarray]
    location: Callable[[GeneratorSpec], float] = lambda g: g.moments().mean
    alt_start: Callable[[np.ndarray], np.ndarray] | None = None
    split_starts: Callable[[np.ndarray], list[np.ndarray]] | None = None
    # Coordinates that are logs or logits of constrained parameters; a large
    # value there means the estimate sits at the edge of the parameter space.
    transformed: tuple[bool, ...] = ()


def _beta_start(y):
    m, v = float(np.mean(y)), float(np.var(y))
    common = max(m * (1 - m) / max(v, 1e-8) - 1.0, 0.1)
    return np.log([max(m * common, 0.05), max((1 - m) * common, 0.05)])


def _kumaraswamy_start(y):
    y = _clip01(y)
    med = float(np.median(y))
    best, best_ll = np.array([0.0, 0.0]), -np.inf
    for a in np.logspace(-1, 2.5, 36):
        b = -math.log(2.0) / math.log1p(-(med**a)) if med**a < 1 else 1.0
        if not np.isfinite(b) or b <= 0:
            continue
        ll = float(np.sum(Kumaraswamy(a, b)._logpdf(y)))
        if ll > best_ll:
            best, best_ll = np.log([a, b]), ll
    return best


def _triangular_start(y):
    b = min(1.0, float(np.max(y)) * (1 + 1e-3) + 1e-6)
    m = min(max(3 * float(np.mean(y)) - b, 0.05 * b), 0.95 * b)
    return np.array([_logit(min(b, 1 - 1e-6)), _logit(m / b)])


def _logitnormal_start(y):
    z = special.logit(_clip01(y))
    return np.array([float(np.mean(z)), math.log(max(float(np.std(z)), 1e-3))])


def _vm_build(th):
    return VonMises(float(th[0]), float(th[1]))


def _vm_diffuse(y):
    phi = np.asarray(_circular_start(y))
    k = float(np.hypot(*phi))
    return phi * (0.5 / k) if k > 0 else np.zeros(2)


_FAMILIES: dict[str, _Family] = {
    "Uniform": _Family(
        "Uniform", 0, lambda th: Uniform(), lambda g: np.zeros(0),
        lambda y: np.zeros(0), lambda y: np.zeros(0), transformed=()),
    "Beta": _Family(
        "Beta", 2, lambda th: Beta(float(np.exp(th[0])), float(np.exp(th[1]))),
        lambda g: np.log([g.alpha, g.beta]), _beta_start,
        lambda y: np.log([2 * float(np.mean(y)) + 0.2, 2 * (1 - float(np.mean(y))) + 0.2]),
        transformed=(True, True)),
    "TruncNormal": _Family(
        "TruncNormal", 2, lambda th: TruncNormal(float(th[0]), float(np.exp(th[1]))),
        lambda g: np.array([g.mu, math.log(g.sigma)]),
        lambda y: np.array([float(np.mean(y)), math.log(max(float(np.std(y)), 1e-3))]),
        lambda y: np.array([float(np.mean(y)), math.log(0.5)]),
        lambda g: g.mu, transformed=(False, True)),
    "LogitNormal": _Family(
        "LogitNormal", 2, lambda th: LogitNormal(float(th[0]), float(np.exp(th[1]))),
        lambda g: np.array([g.mu, math.log(g.sigma)]), _logitnormal_start,
        lambda y: np.array([_logitnormal_start(y)[0], math.log(1.5)]),
        transformed=(False, True)),
    "Kumaraswamy": _Family(
        "Kumaraswamy", 2, lambda th: Kumaraswamy(float(np.exp(th[0])), float(np.exp(th[1]))),
        lambda g: np.log([g.a, g.b]), _kumaraswamy_start, lambda y: np.zeros(2),
        transformed=(True, True)),
    "VonMises": _Family(
        "VonMises", 2, _vm_build, lambda g: np.array([g.phi1, g.phi2]),
        lambda y: np.asarray(_circular_start(y)), _vm_diffuse, lambda g: g.loc,
        transformed=(False, False)),
    "Triangular": _Family(
        "Triangular", 2,
        lambda th: Triangular(float(special.expit(th[0])),
                              float(special.expit(th[0]) * special.expit(th[1]))),
        lambda g: np.array([_logit(min(g.b, 1 - 1e-12)),
                            _logit(min(max(g.m / g.b, 1e-12), 1 - 1e-12))]),
        _triangular_start, lambda y: np.array([_logit(1 - 1e-6), 0.0]),
        transformed=(True, True)),
}

UNIMODAL_FAMILIES = ("Beta", "VonMises", "TruncNormal", "LogitNormal", "Kumaraswamy")


def _mixture_family(first: _Family, second: _Family) -> _Family:
    k1 = first.n_params

    def build(th):
        w = float(special.expit(th[0]))
        return Mixture(w, first.build(th[1:1 + k1]), second.build(th[1 + k1:]))

    def encode(g):
        w = min(max(g.weight, 1e-12), 1 - 1e-12)
        return np.concatenate([[_logit(w)], first.encode(g.first), second.encode(g.second)])

    def start(y):
        return np.concatenate([[_logit(0.7)], first.start(y), second.diffuse(y)])

    def diffuse(y):
        return np.concatenate([[0.0], first.diffuse(y), second.diffuse(y)])

    def alt_start(y):
        return np.concatenate([[_logit(0.3)], first.diffuse(y), second.start(y)])

    def split_starts(y):
        # Component guesses from the lower and upper part of the sorted
        # sample, so that separated modes are found without relying on the
        # simplex to pull one component across the other.
        ys = np.sort(y)
        out = []
        for q in (0.25, 0.5, 0.75):
            cut = int(round(q * ys.size))
            low, high = ys[:cut], ys[cut:]
            if min(low.size, high.size) < 5:
                continue
            for (a, wa), (b, _) in (((low, q), (high, 1 - q)), ((high, 1 - q), (low, q))):
                try:
                    out.append(np.concatenate([[_logit(wa)], first.start(a), second.start(b)]))
                except (ValueError, ZeroDivisionError, OverflowError):
                    continue
        return [v for v in out if np.all(np.isfinite(v))]

    return _Family(f"Mixture({first.name},{second.name})", 1 + k1 + second.n_params,
                   build, encode, start, diffuse, alt_start=alt_start,
                   split_starts=split_starts,
                   transformed=(True, *first.transformed, *second.transformed))


def family_of(spec: str | Sequence[str] | GeneratorSpec) -> _Family:
    """Resolve a family description for :func:`fit_parametric`.

    Accepts a family name such as ``"Beta"``, a mixture written as
    ``"Mixture(Beta,VonMises)"`` or ``("Mixture", "Beta", "VonMises")``, or
    a generator instance whose family is used.
    """
    if isinstance(spec, GeneratorSpec):
        if isinstance(spec, Mixture):
            return _mixture_family(family_of(spec.first), family_of(spec.second))
        spec = spec.family
    if isinstance(spec, str):
        s = spec.replace(" ", "")
        if s.startswith("Mixture(") and s.endswith(")"):
            parts = s[len("Mixture("):-1].split(",")
            spec = ("Mixture", *parts)
        else:
            if s not in _FAMILIES:
                raise InvalidParameterError(f"unknown family {spec!r}")
            return _FAMILIES[s]
    spec = tuple(spec)
    if len(spec) == 3 and spec[0] == "Mixture":
        return _mixture_family(family_of(spec[1]), family_of(spec[2]))
    raise InvalidParameterError(f"cannot interpret family {spec!r}")


@dataclass(frozen=True)
class FitReport:
    """Maximum-likelihood fit of one generator family.

    Attributes
    ----------
    family : str
    params : dict of str to float
        Named estimates; mixture components are prefixed ``first.`` and
        ``second.`` and ordered by location when both share a family.
    log_likelihood : float
    aic : float
        ``2 k - 2 log_likelihood`` with ``k`` the nominal parameter count.
    rho, tau, xi : float
        Plug-in concordance of the fitted copula.
    converged : bool
    iterations : int
        Simplex iterations summed over all starts.
    n_params : int
    generator : GeneratorSpec
        Fitted generator on the scale of the data passed in.
    """

    family: str
    params: dict[str, float]
    log_likelihood: float
    aic: float
    rho: float
    tau: float
    xi: float
    converged: bool
    iterations: int
    n_params: int
    generator: GeneratorSpec = field(repr=False)

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible dictionary."""
        return {
            "family": self.family,
            "params": dict(self.params),
            "log_likelihood": self.log_likelihood,
            "aic": self.aic,
            "rho": self.rho,
            "tau": self.tau,
            "xi": self.xi,
            "converged": self.converged,
            "iterations": self.iterations,
            "n_params": self.n_params,
            "generator": self.generator.to_dict(),
        }


def _named_params(gen: GeneratorSpec) -> dict[str, float]:
    if isinstance(gen, Mixture):
        out = {"weight": float(gen.weight)}
        for prefix, comp in (("first", gen.first), ("second", gen.second)):
            out.update({f"{prefix}.{k}": float(v) for k, v in comp.params.items()})
        return out
    return {k: float(v) for k, v in gen.params.items()}


def _order_components(gen: GeneratorSpec, fam: _Family) -> GeneratorSpec:
    if isinstance(gen, Mixture) and type(gen.first) is type(gen.second):
        base = _FAMILIES[gen.first.family]
        if base.location(gen.second) < base.location(gen.first):
            return Mixture(1.0 - gen.weight, gen.second, gen.first)
    return gen


def _boundary_clip(y: np.ndarray) -> np.ndarray:
    # Rank-based wrapped sums can equal 0 exactly, where densities such as
    # Beta(1/2, 1) are infinite; nudge such points half a rank step inside.
    n = y.size
    eps = 0.5 / (n + 1.0)
    return np.where(y <= 0.0, eps, np.where(y >= 1.0, 1.0 - eps, y))


_SCREEN_ITER = 60
_REFINE = 2


def fit_parametric(
    y: npt.ArrayLike,
    family: str | Sequence[str] | GeneratorSpec,
    *,
    signature: Signature | Sequence[int] = (0, 0),
    shift: float = 0.0,
    n_starts: int = 8,
    max_iter: int = 2000,
    xatol: float = 1e-8,
    initial: Sequence[GeneratorSpec] = (),
    seed: int = 0,
) -> FitReport:
    """Maximum-likelihood fit of a generator family to wrapped sums.

    The log-likelihood ``sum_i log f_theta(y_i)`` is maximised by
    Nelder-Mead in an unconstrained parameterisation (logarithms of
    positive parameters, logits of weights and bounded parameters).  Starts
    are data-driven guesses (for mixtures also component guesses from the
    lower and upper parts of the sorted sample), filled up with scrambled
    Sobol perturbations.  Every start is screened by a short simplex run;
    the two best are refined to convergence and the winner is polished by
    one restart.

    Parameters
    ----------
    y : array-like
        Wrapped sums in ``[0, 1]``.
    family : str, tuple or GeneratorSpec
        See :func:`family_of`.
    signature : Signature or sequence of int
        Signature used for the plug-in concordance measures.
    shift : float
        When ``y`` are wrapped sums shifted by ``shift`` (mod 1), the copula
        generator is the fitted density rotated back by ``-shift``; plug-in
        measures use that generator.
    n_starts : int
        Number of starting points besides ``initial``.
    max_iter : int
        Iteration cap per simplex run.
    xatol : float
        Simplex diameter at which a run stops.
    initial : sequence of GeneratorSpec
        Extra starting points of the same family, for example the truth in
        a simulation.
    seed : int
        Seed of the scrambled Sobol sequence.

    Returns
    -------
    FitReport
        ``converged`` is ``False`` when no start improves on the uniform
        log-likelihood of zero.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 10:
        raise DomainError("fit_parametric needs at least 10 observations")
    if np.any(~np.isfinite(y)) or np.any(y < 0) or np.any(y > 1):
        raise DomainError("wrapped sums must lie in [0, 1]")
    fam = family_of(family)
    if fam.n_params > 5:
        raise UnsupportedInputError("families with more than 5 parameters are not supported")
    y = _boundary_clip(y)

    def negloglik(theta):
        try:
            with np.errstate(all="ignore"):
                gen = fam.build(theta)
                val = -float(np.sum(gen._logpdf(y)))
        except (InvalidParameterError, ValueError, OverflowError, ZeroDivisionError):
            return 1e300
        return val if np.isfinite(val) else 1e300

    k = fam.n_params
    total_iter = 0
    if k == 0:
        gen = fam.build(np.zeros(0))
        best_theta, best_val, success = np.zeros(0), negloglik(np.zeros(0)), True
    else:
        centers = [fam.start(y)]
        if fam.alt_start is not None:
            centers.append(fam.alt_start(y))
        if fam.split_starts is not None:
            centers.extend(fam.split_starts(y))
        n_extra = max(int(n_starts) - len(centers), 0)
        starts = list(centers[:max(int(n_starts), 1)])
        if n_extra:
            sobol = qmc.Sobol(k, scramble=True, seed=np.random.default_rng(seed))
            m = max(int(math.ceil(math.log2(n_extra))), 0)
            perturb = (sobol.random_base2(m) - 0.5) * 3.0
            for i in range(n_extra):
                starts.append(centers[i % len(centers)] + perturb[i])
        starts += [fam.encode(g) for g in initial]
        opts = {"xatol": xatol, "fatol": 1e-10, "maxiter": int(max_iter),
                "maxfev": 4 * int(max_iter)}
        # Screen every start with a short simplex run, then refine the most
        # promising ones to convergence and polish the winner by a restart.
        screen = dict(opts, maxiter=min(_SCREEN_ITER * k, int(max_iter)),
                      maxfev=min(2 * _SCREEN_ITER * k, 4 * int(max_iter)))
        screened = []
        for x0 in starts:
            res = optimize.minimize(negloglik, x0, method="Nelder-Mead", options=screen)
            total_iter += int(res.nit)
            screened.append(res)
        screened.sort(key=lambda r: r.fun)
        runs = []
        for res in screened[:_REFINE]:
            if res.success:
                runs.append(res)
                continue
            ref = optimize.minimize(negloglik, res.x, method="Nelder-Mead", options=opts)
            total_iter += int(ref.nit)
            runs.append(ref)
        best = min(runs, key=lambda r: r.fun)
        polish = optimize.minimize(negloglik, best.x, method="Nelder-Mead", options=opts)
        total_iter += int(polish.nit)
        if polish.fun <= best.fun:
            best = polish
        best_theta, best_val, success = best.x, float(best.fun), bool(best.success)
        edge = np.abs(best_theta) > 15.0
        if np.any(edge & np.asarray(fam.transformed, dtype=bool)):
            warnings.warn(f"{fam.name} fit reached the edge of the parameter space",
                          BoundaryWarning, stacklevel=2)
        gen = fam.build(best_theta)

    loglik = -best_val if best_val < 1e299 else -np.inf
    gen = _order_components(gen, fam)
    converged = bool(success and loglik > 0.0) or k == 0
    aic = 2.0 * k - 2.0 * loglik
    try:
        model = CopulaModel(rotate(gen, -shift), Signature.coerce(signature))
        conc = closed_form_concordance(model)
        rho, tau, xi = conc.rho, conc.tau, conc.xi
    except (NumericError, ShapeError):
        rho = tau = xi = float("nan")
    return FitReport(
        family=fam.name, params=_named_params(gen), log_likelihood=float(loglik),
        aic=float(aic), rho=float(rho), tau=float(tau), xi=float(xi),
        converged=converged, iterations=total_iter, n_params=k, generator=gen,
    )


# ---------------------------------------------------------------------------
# Kernel density estimation
# ---------------------------------------------------------------------------
@dataclass(frozen=True, eq=False)
class KdeEstimate:
    """Gaussian kernel density estimate of the generator on a grid.

    Attributes
    ----------
    grid : ndarray of shape (m,)
        Equispaced points on ``[0, 1]``.
    values : ndarray of shape (m,)
        Estimated density at the grid points.
    bandwidth : float
    kernel : str
        ``"gaussian"`` or ``"gaussian-circular"``.
    sample : ndarray
        Data the estimate was built from.
    """

    grid: np.ndarray
    values: np.ndarray
    bandwidth: float
    kernel: str
    sample: np.ndarray = field(repr=False)

    @property
    def circular(self) -> bool:
        """Whether kernel images at ``y - 1`` and ``y + 1`` are included."""
        return self.kernel == "gaussian-circular"

    def evaluate(self, x: npt.ArrayLike) -> np.ndarray:
        """Estimated density at arbitrary points."""
        return _kde_values(self.sample, np.asarray(x, dtype=float), self.bandwidth, self.circular)

    def integral(self) -> float:
        """Trapezoid integral of ``values`` over the grid."""
        return float(np.trapezoid(self.values, self.grid))

    def mode_count(self, min_prominence: float = 0.05) -> int:
        """Number of local maxima whose prominence exceeds a fraction of the peak."""
        return len(self.modes(min_prominence))

    def modes(self, min_prominence: float = 0.05) -> np.ndarray:
        """Grid locations of prominent local maxima."""
        v = np.concatenate([[-np.inf], self.values, [-np.inf]])
        peaks, _ = find_peaks(v, prominence=min_prominence * float(np.max(self.values)))
        return self.grid[peaks - 1]

    def to_generator(self, bins: int = 512) -> Tabulated:
        """Histogram generator from the estimate evaluated at bin midpoints."""
        mid = (np.arange(bins) + 0.5) / bins
        return Tabulated(tuple(np.maximum(self.evaluate(mid), 0.0)))


def silverman_bandwidth(y: npt.ArrayLike) -> float:
    """Silverman's rule ``0.9 min(sd, IQR / 1.34) n^(-1/5)``."""
    y = np.asarray(y, dtype=float).ravel()
    sd = float(np.std(y, ddof=1))
    q75, q25 = np.percentile(y, [75, 25])
    spread = min(sd, (q75 - q25) / 1.34) if q75 > q25 else sd
    if spread <= 0:
        raise DomainError("bandwidth undefined for a constant sample")
    return 0.9 * spread * y.size ** (-0.2)


def _kde_values(y, x, h, circular):
    shifts = (-1.0, 0.0, 1.0) if circular else (0.0,)
    out = np.zeros(np.shape(x))
    for c in shifts:
        z = (np.asarray(x)[..., None] - (y + c)) / h
        out = out + np.exp(-0.5 * z * z).sum(axis=-1)
    return out / (y.size * h * math.sqrt(2.0 * math.pi))


def fit_kde(
    y: npt.ArrayLike,
    bandwidth: float | str = "auto",
    grid_size: int = 200,
    circular: bool = False,
) -> KdeEstimate:
    """Gaussian kernel density estimate of the generator.

    Parameters
    ----------
    y : array-like
        Wrapped sums.
    bandwidth : float or "auto"
        ``"auto"`` applies :func:`silverman_bandwidth`.
    grid_size : int
        Number of equispaced evaluation points on ``[0, 1]``.
    circular : bool
        Add kernel images at ``y - 1`` and ``y + 1`` so that no mass leaks
        past the boundary.  The plain kernel is the default.
    """
    y = np.asarray(y, dtype=float).ravel()
    if y.size < 10:
        raise DomainError("fit_kde needs at least 10 observations")
    h = silverman_bandwidth(y) if bandwidth == "auto" else float(bandwidth)
    if not h > 0:
        raise DomainError("bandwidth must be positive")
    grid = np.linspace(0.0, 1.0, int(grid_size))
    values = _kde_values(y, grid, h, circular)
    kernel = "gaussian-circular" if circular else "gaussian"
    return KdeEstimate(grid, values, float(h), kernel, y.copy())


# ---------------------------------------------------------------------------
# Empirical copulas
# ---------------------------------------------------------------------------
def empirical_copula(u: PseudoObservations | npt.ArrayLike, point: npt.ArrayLike):
    """Empirical copula ``(1/n) sum_i 1{U_i <= u}``.

    Parameters
    ----------
    u : PseudoObservations or array-like of shape (n, d)
    point : array-like of shape (d,) or (m, d)
    """
    values = _as_values(u)
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != values.shape[1]:
        raise ShapeError("point dimension does not match the data")
    inside = np.all(values[None, :, :] <= np.atleast_2d(p)[:, None, :], axis=-1)
    out = inside.mean(axis=1)
    return float(out[0]) if p.ndim == 1 else out


def empirical_beta_density(u: PseudoObservations, point: npt.ArrayLike):
    """Density of the empirical beta copula.

    ``(1/n) sum_i prod_j betapdf(u_j; R_ij, n + 1 - R_ij)`` with ``R`` the
    ranks behind rank-based pseudo-observations.

    Raises
    ------
    UnsupportedInputError
        If ``u`` is not rank based.
    """
    if not isinstance(u, PseudoObservations) or u.provenance != "rank_based":
        raise UnsupportedInputError("the empirical beta copula needs rank-based observations")
    p = np.asarray(point, dtype=float)
    if p.shape[-1] != u.d:
        raise ShapeError("point dimension does not match the data")
    pts = np.atleast_2d(p)
    if np.any(pts <= 0) or np.any(pts >= 1):
        raise DomainError("points must lie in the open unit cube")
    r = u.ranks
    n = u.n
    a, b = r, n + 1.0 - r
    log_norm = special.betaln(a, b)  # (n, d)
    out = np.empty(pts.shape[0])
    chunk = max(1, 2_000_000 // max(n * u.d, 1))
    for start in range(0, pts.shape[0], chunk):
        x = pts[start:start + chunk, None, :]
        logs = special.xlogy(a - 1.0, x) + special.xlog1py(b - 1.0, -x) - log_norm
        out[start:start + chunk] = np.exp(logs.sum(axis=-1)).mean(axis=1)
    return float(out[0]) if p.ndim == 1 else out
