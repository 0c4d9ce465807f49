"""Wrapped-sum copulas ``C_f^s``.

For a generator density ``f`` on ``[0, 1]`` and a signature
``s in {0, 1}^d`` the copula density is

.. math::

    c_f^s(u) = f\\left(\\bigoplus_{j=1}^d \\tilde u_j\\right), \\qquad
    \\tilde u_j = u_j \\text{ if } s_j = 0, \\quad 1 - u_j \\text{ if } s_j = 1,

where ``\\oplus`` is addition modulo one.  Every margin is uniform because
adding an independent uniform variate on the circle yields a uniform
variate.
"""

from __future__ import annotations

import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Any, Sequence

import numpy as np
import numpy.typing as npt
from scipy import integrate
from scipy.stats import qmc

from wrapcop.exceptions import (
    BoundaryError,
    DomainError,
    NumericError,
    ShapeError,
    UnsupportedDimensionError,
)
from wrapcop.generator import (
    GeneratorSpec,
    _wrapped_interval_mass,
    as_rng,
    frac,
    generator_from_dict,
    generator_to_dict,
)

__all__ = [
    "Signature",
    "CopulaModel",
    "wrapped_sum",
    "linear_wrap",
]

_MAX_CDF_DIM = 6
_MAX_SURVIVAL_DIM = 4
_MAX_FOURIER_K = 256
_QMC_POINTS = 2**16
# Paired Gauss-Legendre rules for the bivariate distribution function.
_GAUSS_RULES = tuple(np.polynomial.legendre.leggauss(k) for k in (24, 48))
_QMC_REPLICATES = 16


@dataclass(frozen=True)
class Signature:
    """Bit vector selecting, per axis, identity (0) or reflection ``u -> 1 - u`` (1).

    Parameters
    ----------
    bits : sequence of int
        Entries in ``{0, 1}``; at least two of them.
    """

    bits: tuple[int, ...]

    def __post_init__(self):
        bits = tuple(int(b) for b in self.bits)
        if len(bits) < 2:
            raise ShapeError("a signature needs at least two bits")
        if any(b not in (0, 1) for b in bits):
            raise DomainError("signature bits must be 0 or 1")
        object.__setattr__(self, "bits", bits)

    @classmethod
    def coerce(cls, value: Signature | Sequence[int]) -> Signature:
        """Accept either a :class:`Signature` or a bit sequence."""
        return value if isinstance(value, Signature) else cls(tuple(value))

    @classmethod
    def candidates(cls, d: int) -> list[Signature]:
        """All ``2^(d-1)`` canonical signatures in lexicographic order."""
        return [cls((0,) + rest) for rest in itertools.product((0, 1), repeat=d - 1)]

    @property
    def d(self) -> int:
        """Dimension."""
        return len(self.bits)

    @property
    def is_canonical(self) -> bool:
        """Whether the first bit is zero."""
        return self.bits[0] == 0

    @property
    def signs(self) -> np.ndarray:
        """The vector ``(-1)^s``."""
        return 1.0 - 2.0 * np.asarray(self.bits, dtype=float)

    def complement(self) -> Signature:
        """The signature ``1 - s``."""
        return Signature(tuple(1 - b for b in self.bits))

    def canonical(self) -> Signature:
        """Representative of ``{s, 1 - s}`` whose first bit is zero."""
        return self if self.is_canonical else self.complement()

    def __iter__(self):
        return iter(self.bits)

    def __len__(self):
        return len(self.bits)

    def __str__(self):
        return "(" + ",".join(str(b) for b in self.bits) + ")"


def wrapped_sum(u: npt.ArrayLike, signature: Signature | Sequence[int]) -> np.ndarray:
    """Row-wise wrapped sum ``frac(sum_j u~_j)`` under ``signature``.

    Parameters
    ----------
    u : array-like of shape (..., d)
    signature : Signature or sequence of int

    Returns
    -------
    ndarray of shape (...)
        Values in ``[0, 1)``.
    """
    sig = Signature.coerce(signature)
    u = np.asarray(u, dtype=float)
    if u.shape[-1:] != (sig.d,):
        raise ShapeError(f"expected trailing dimension {sig.d}, got shape {u.shape}")
    bits = np.asarray(sig.bits, dtype=bool)
    tilde = np.where(bits, 1.0 - u, u)
    return frac(np.sum(tilde, axis=-1))


def linear_wrap(a: npt.ArrayLike, b: npt.ArrayLike, u: npt.ArrayLike) -> np.ndarray:
    """The circle-group map ``u -> (A u + b) mod 1`` applied row-wise.

    For an integer matrix ``A`` of full row rank and ``U`` uniform on the
    torus, the image is again uniform.
    """
    a = np.atleast_2d(np.asarray(a))
    u = np.atleast_2d(np.asarray(u, dtype=float))
    return frac(u @ a.T + np.asarray(b, dtype=float))


def _phi_uniform(t: np.ndarray) -> np.ndarray:
    """Characteristic function ``(exp(i t) - 1) / (i t)`` of ``Unif(0, 1)``."""
    t = np.asarray(t, dtype=float)
    safe = np.where(t == 0.0, 1.0, t)
    val = (np.exp(1j * safe) - 1.0) / (1j * safe)
    return np.where(t == 0.0, 1.0 + 0.0j, val)


@dataclass(frozen=True)
class CopulaModel:
    """The wrapped-sum copula generated by ``generator`` under ``signature``.

    A signature with leading bit one is replaced at construction by its
    complement together with the reflected generator; the two describe the
    same copula.

    Parameters
    ----------
    generator : GeneratorSpec
        Density on ``[0, 1]``.
    signature : Signature or sequence of int
        Length-``d`` bit vector, ``d >= 2``.

    Examples
    --------
    >>> from wrapcop.generator import Triangular
    >>> model = CopulaModel(Triangular(1.0, 1.0), (0, 1))
    >>> round(model.density([0.3, 0.9]), 12)
    0.8
    """

    generator: GeneratorSpec
    signature: Signature
    _fourier_cache: dict = field(default_factory=dict, init=False, repr=False, compare=False)

    def __post_init__(self):
        if not isinstance(self.generator, GeneratorSpec):
            raise TypeError("generator must be a GeneratorSpec")
        sig = Signature.coerce(self.signature)
        gen = self.generator
        if not sig.is_canonical:
            sig, gen = sig.complement(), gen.reflect()
        object.__setattr__(self, "signature", sig)
        object.__setattr__(self, "generator", gen)

    @property
    def d(self) -> int:
        """Dimension."""
        return self.signature.d

    # ------------------------------------------------------------------
    def _points(self, u: npt.ArrayLike) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        if u.ndim == 0 or u.shape[-1] != self.d:
            raise ShapeError(f"expected points of dimension {self.d}, got shape {u.shape}")
        if np.any(np.isnan(u)) or np.any(u < 0.0) or np.any(u > 1.0):
            raise DomainError("points must lie in [0, 1]^d")
        return u

    def density(self, u: npt.ArrayLike):
        """Copula density ``f(wrapped sum of u~)``.

        Parameters
        ----------
        u : array-like of shape (d,) or (n, d)

        Returns
        -------
        float or ndarray of shape (n,)
        """
        u = self._points(u)
        val = self.generator.pdf(wrapped_sum(u, self.signature))
        return float(val) if u.ndim == 1 else np.asarray(val)

    # ------------------------------------------------------------------
    def sample(self, seed: Any, n: int) -> np.ndarray:
        """Draw ``n`` rows from the copula.

        The first ``d - 1`` coordinates are iid uniform, ``X ~ f`` is drawn
        independently and the last coordinate is set to
        ``(-1)^{s_d} (X - sum_{j<d} u~_j) mod 1``.

        Returns
        -------
        ndarray of shape (n, d)
        """
        n = int(n)
        if n < 1:
            raise DomainError("n must be a positive integer")
        rng = as_rng(seed)
        first = rng.random((n, self.d - 1))
        x = self.generator.sample(rng, n)
        return self._assemble(first, x)

    def _assemble(self, first: np.ndarray, x: np.ndarray) -> np.ndarray:
        bits = np.asarray(self.signature.bits[:-1], dtype=bool)
        partial = np.sum(np.where(bits, 1.0 - first, first), axis=-1)
        last = frac(self.signature.signs[-1] * (np.asarray(x) - partial))
        return np.column_stack([first, last])

    # ------------------------------------------------------------------
    def _last_mass(self, start: np.ndarray, upper: float, bit: int) -> np.ndarray:
        """``int_0^upper f(start + v~) dv`` for one coordinate with bit ``bit``."""
        start = np.asarray(start, dtype=float)
        if bit == 0:
            return _wrapped_interval_mass(self.generator, start, upper)
        return _wrapped_interval_mass(self.generator, start - upper, upper)

    def _segment_gauss(self, base, sign, edges, last_u, last_b):
        """Gauss-Legendre integral over kink-free segments, or ``None``.

        Each segment is integrated at two orders; the result is accepted
        only when they agree to the tolerance of the adaptive fallback.
        """
        edges = np.asarray(edges, dtype=float)
        lo, half = edges[:-1, None], 0.5 * np.diff(edges)[:, None]
        totals = []
        for nodes, weights in _GAUSS_RULES:
            v = (lo + half * (nodes + 1.0)).ravel()
            with np.errstate(all="ignore"):
                vals = self._last_mass(base + sign * v, last_u, last_b)
            totals.append(float(np.sum((half * weights).ravel() * vals)))
        coarse, fine = totals
        if np.isfinite(fine) and abs(fine - coarse) <= max(1e-13, 1e-12 * abs(fine)):
            return fine
        return None

    def _box_integral(self, base: float, uppers: Sequence[float], bits: Sequence[int],
                      n_points: int = _QMC_POINTS) -> tuple[float, float]:
        """Integral of ``f(base + sum_k v~_k)`` over the box ``prod_k [0, upper_k]``.

        The innermost coordinate is integrated in closed form through the
        cdf; one remaining coordinate is handled by adaptive quadrature and
        more by randomised quasi-Monte Carlo.  Returns ``(value, stderr)``.
        """
        uppers = [float(x) for x in uppers]
        bits = [int(b) for b in bits]
        if any(x == 0.0 for x in uppers):
            return 0.0, 0.0
        last_u, last_b = uppers[-1], bits[-1]
        outer_u, outer_b = uppers[:-1], bits[:-1]
        if not outer_u:
            return float(self._last_mass(np.asarray(base), last_u, last_b)), 0.0

        if len(outer_u) == 1:
            upper, sign = outer_u[0], 1.0 - 2.0 * outer_b[0]

            def integrand(v):
                return float(self._last_mass(np.asarray(base + sign * v), last_u, last_b))

            kinks = []
            for shift in (0.0, last_u, -last_u):
                for target in (base + shift,) + tuple(base + shift - p for p in
                                                      self.generator._breakpoints()):
                    kinks.append(float(frac(-sign * target)))
            pts = sorted({p for p in kinks if 0.0 < p < upper})
            fast = self._segment_gauss(base, sign, [0.0, *pts, upper], last_u, last_b)
            if fast is not None:
                return fast, 0.0
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", integrate.IntegrationWarning)
                val, err = integrate.quad(integrand, 0.0, upper, points=pts or None,
                                          epsabs=1e-13, epsrel=1e-12, limit=500)
            if err > 1e-8:
                raise NumericError("cdf quadrature did not converge", achieved=err)
            return float(val), 0.0

        dim = len(outer_u)
        scale = np.asarray(outer_u)
        signs = 1.0 - 2.0 * np.asarray(outer_b, dtype=float)
        log2_rep = max(int(math.log2(max(n_points // _QMC_REPLICATES, 16))), 4)
        estimates = []
        for rep in range(_QMC_REPLICATES):
            sobol = qmc.Sobol(dim, scramble=True, seed=np.random.default_rng([dim, rep]))
            v = sobol.random_base2(log2_rep) * scale
            s = base + v @ signs
            estimates.append(np.mean(self._last_mass(s, last_u, last_b)))
        vol = float(np.prod(scale))
        est = np.asarray(estimates) * vol
        return float(est.mean()), float(est.std(ddof=1) / math.sqrt(len(est)))

    def cdf_with_error(self, u: npt.ArrayLike) -> tuple[float, float]:
        """Copula cdf together with a standard-error estimate.

        The error is zero for the deterministic quadrature used when
        ``d = 2`` and a randomised quasi-Monte Carlo standard error otherwise.

        Raises
        ------
        UnsupportedDimensionError
            If ``d > 6``.
        """
        if self.d > _MAX_CDF_DIM:
            raise UnsupportedDimensionError(f"cdf is limited to d <= {_MAX_CDF_DIM}")
        u = self._points(u)
        if u.ndim != 1:
            raise ShapeError("cdf expects a single point")
        if np.any(u == 0.0):
            return 0.0, 0.0
        keep = u < 1.0
        if keep.sum() <= 1:
            # Any d - 1 coordinates are independent uniforms.
            return float(np.prod(u)), 0.0
        if not np.all(keep):
            return float(np.prod(u[keep])), 0.0
        val, err = self._box_integral(0.0, u, self.signature.bits)
        return float(min(max(val, 0.0), float(u.min()))), err

    def cdf(self, u: npt.ArrayLike) -> float:
        """Copula distribution function ``C_f^s(u)``.

        For ``d = 2`` this is ``int_0^{u_1} d_1 C(v, u_2) dv`` over the
        closed-form partial derivative, split at its kinks: paired
        Gauss-Legendre rules when they agree, adaptive quadrature otherwise.  Higher dimensions
        integrate the closed-form innermost mass over the remaining box.
        """
        return self.cdf_with_error(u)[0]

    def survival(self, u: npt.ArrayLike) -> float:
        """Joint survival function ``P(U > u)`` by inclusion-exclusion, ``d <= 4``."""
        if self.d > _MAX_SURVIVAL_DIM:
            raise UnsupportedDimensionError(f"survival is limited to d <= {_MAX_SURVIVAL_DIM}")
        u = self._points(u)
        total = 0.0
        for mask in itertools.product((0, 1), repeat=self.d):
            corner = np.where(np.asarray(mask, dtype=bool), u, 1.0)
            total += (-1) ** sum(mask) * self.cdf(corner)
        return float(total)

    def partial_derivative(self, j: int, u: npt.ArrayLike) -> float:
        """Partial derivative ``dC/du_j`` at an interior point.

        For ``d = 2`` this equals the ``f``-probability of a wrapped interval
        of length ``u_{-j}`` anchored at ``u~_j``; for ``s = (0, 0)`` it is
        ``F(u_1 + u_2 mod 1) + 1{u_1 + u_2 > 1} - F(u_j)``.

        Parameters
        ----------
        j : int
            Zero-based coordinate index.
        u : array-like of shape (d,)

        Raises
        ------
        BoundaryError
            If ``u_j`` is 0 or 1.
        """
        u = self._points(u)
        if u.ndim != 1:
            raise ShapeError("partial_derivative expects a single point")
        j = int(j)
        if not 0 <= j < self.d:
            raise DomainError("coordinate index out of range")
        if not 0.0 < u[j] < 1.0:
            raise BoundaryError("partial derivative requires 0 < u_j < 1")
        bits = self.signature.bits
        anchor = u[j] if bits[j] == 0 else 1.0 - u[j]
        others = [k for k in range(self.d) if k != j]
        val, _ = self._box_integral(anchor, [u[k] for k in others], [bits[k] for k in others])
        return float(min(max(val, 0.0), 1.0))

    # ------------------------------------------------------------------
    def _fourier(self, k_max: int) -> np.ndarray:
        """Coefficients ``E[exp(-2 pi i k X)]`` for ``k = 0..k_max`` (cached)."""
        cached = self._fourier_cache.get("coef")
        if cached is None or cached.size <= k_max:
            cached = np.array([self.generator.fourier_coefficient(k) for k in range(k_max + 1)])
            self._fourier_cache["coef"] = cached
        return cached[: k_max + 1]

    def char_function(self, t: npt.ArrayLike, K: int = 64):
        """Characteristic function ``E[exp(i t . U)]`` by a truncated series.

        .. math::

            \\varphi_U(t) = \\sum_{k=-K}^{K} \\varphi_f(-2\\pi k)
            \\prod_j \\varphi_1(t_j + (-1)^{s_j} 2 \\pi k)

        Parameters
        ----------
        t : array-like of shape (d,) or (n, d)
        K : int
            Truncation order, ``0 <= K <= 256``.
        """
        K = int(K)
        if not 0 <= K <= _MAX_FOURIER_K:
            raise DomainError(f"K must lie in [0, {_MAX_FOURIER_K}]")
        t = np.asarray(t, dtype=float)
        if t.shape[-1:] != (self.d,):
            raise ShapeError(f"expected t of dimension {self.d}")
        coef = self._fourier(K)
        ks = np.arange(-K, K + 1)
        c = np.where(ks >= 0, coef[np.abs(ks)], np.conj(coef[np.abs(ks)]))
        args = t[..., None, :] + np.outer(ks, self.signature.signs) * 2.0 * math.pi
        val = np.sum(c * np.prod(_phi_uniform(args), axis=-1), axis=-1)
        return complex(val) if t.ndim == 1 else val

    # ------------------------------------------------------------------
    def tail_ratio(self, t: float) -> tuple[float, float]:
        """Lower and upper diagonal tail ratios at level ``t``.

        Returns ``C(t, ..., t) / t`` and ``P(U > 1 - t, ..., 1 - t) / t``.
        The survival probability is evaluated as the lower-orthant
        probability of the copula with reflected generator and the same
        signature, the law of ``1 - U``; this avoids the cancellation of
        inclusion-exclusion near the upper corner.
        """
        t = float(t)
        if not 0.0 < t < 0.5:
            raise DomainError("t must lie in (0, 1/2)")
        if self.d > _MAX_SURVIVAL_DIM:
            raise UnsupportedDimensionError(f"tail ratios are limited to d <= {_MAX_SURVIVAL_DIM}")
        point = np.full(self.d, t)
        lower = self.cdf(point) / t
        mirrored = CopulaModel(self.generator.reflect(), self.signature)
        upper = mirrored.cdf(point) / t
        return lower, upper

    # ------------------------------------------------------------------
    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible ``{"d", "signature", "generator"}``."""
        return {
            "d": self.d,
            "signature": list(self.signature.bits),
            "generator": generator_to_dict(self.generator),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> CopulaModel:
        """Inverse of :meth:`to_dict`."""
        try:
            sig = Signature(tuple(data["signature"]))
            gen = generator_from_dict(data["generator"])
            d = int(data.get("d", sig.d))
        except (KeyError, TypeError) as exc:
            raise DomainError(f"malformed model description: {exc}") from exc
        if d != sig.d:
            raise ShapeError("signature length does not match d")
        return cls(gen, sig)
