"""Seeded simulation studies and the bivariate angular-data pipeline.

Three Monte Carlo studies measure how the inference tools behave as the
sample size grows:

* :func:`run_signature_study` -- error rate of KS/CvM signature selection,
* :func:`run_rmse_study` -- RMSE of maximum-likelihood generator estimates,
* :func:`run_kde_mise_study` -- mean integrated squared error of the KDE.

Every replicate draws from its own :class:`numpy.random.SeedSequence`, keyed
by the study seed, the cell index and the replicate index, so results do
not depend on the number of worker threads or on scheduling.  Results are
long-format tables that serialise to CSV, plus a JSON manifest.

:func:`run_data_pipeline` fits the bivariate model to a pair of angular
variables: shifted wrapped differences ``(u_1 - u_2 + 1/2) mod 1`` are fitted
by every unimodal family and every two-component mixture of them, and by a
kernel density estimate.
"""

from __future__ import annotations

import csv
import hashlib
import io
import itertools
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Literal, Sequence

import numpy as np
import numpy.typing as npt
from scipy import special

from wrapcop.concordance import ConcordanceReport, closed_form_concordance, sample_concordance
from wrapcop.copula import CopulaModel, Signature
from wrapcop.exceptions import (
    BoundaryWarning,
    DataError,
    DomainError,
    SchemaError,
    TiesWarning,
)
from wrapcop.generator import (
    GeneratorSpec,
    Mixture,
    TruncNormal,
    VonMises,
    frac,
    generator_from_dict,
    generator_to_dict,
    rotate,
)
from wrapcop.inference import (
    UNIMODAL_FAMILIES,
    FitReport,
    KdeEstimate,
    empirical_beta_density,
    fit_kde,
    fit_parametric,
    pseudo_observations,
    select_signature,
    wrapped_sums,
)

__all__ = [
    "StudyConfig",
    "StudyResult",
    "PipelineResult",
    "alternating_signature",
    "generator_label",
    "quarter_mixture",
    "run_study",
    "run_signature_study",
    "run_rmse_study",
    "run_kde_mise_study",
    "run_data_pipeline",
    "read_numeric_csv",
    "read_angle_csv",
    "rescale_angles",
    "pipeline_families",
    "git_blob_hash",
    "format_number",
]

StudyTag = Literal["signature_recovery", "rmse", "kde_mise", "data_pipeline"]
MarginsMode = Literal["none", "normal_parametric", "rank_based"]

_STUDY_CODES = {"signature_recovery": 1, "rmse": 2, "kde_mise": 3, "data_pipeline": 4}
_CSV_COLUMNS = ("study", "d", "n", "generator", "method", "metric", "value", "mc_stderr")


def quarter_mixture() -> Mixture:
    """The asymmetric mixture ``1/4 TN(1/4, 0.1^2) + 3/4 TN(3/4, 0.1^2)``."""
    return Mixture(0.25, TruncNormal(0.25, 0.1), TruncNormal(0.75, 0.1))


def alternating_signature(d: int) -> Signature:
    """The signature ``(0, 1, 0, 1, ...)`` of length ``d``."""
    if d < 2:
        raise DomainError("d must be at least 2")
    return Signature(tuple(j % 2 for j in range(d)))


def format_number(x: float) -> str:
    """Shortest decimal string that round-trips to the same double."""
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if x == int(x) and abs(x) < 1e16:
        return str(int(x))
    return repr(x)


def generator_label(gen: GeneratorSpec) -> str:
    """Compact human-readable name such as ``"Beta(0.5,1)"``."""
    if isinstance(gen, Mixture):
        return (f"Mixture({format_number(gen.weight)};"
                f"{generator_label(gen.first)};{generator_label(gen.second)})")
    params = ",".join(format_number(v) for v in gen.params.values())
    return f"{gen.family}({params})"


def git_blob_hash(data: bytes) -> str:
    """Content hash computed the way git names blob objects."""
    return hashlib.sha1(b"blob %d\0" % len(data) + data).hexdigest()


def _stderr(values: npt.ArrayLike) -> float:
    v = np.asarray(values, dtype=float)
    if v.size < 2:
        return 0.0
    return float(np.std(v, ddof=1) / math.sqrt(v.size))


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------
@dataclass(frozen=True)
class StudyConfig:
    """Settings of one simulation study.

    Parameters
    ----------
    study : {"signature_recovery", "rmse", "kde_mise", "data_pipeline"}
    dimensions : sequence of int
        Copula dimensions ``d``.
    sample_sizes : sequence of int
        Sample sizes ``n``; at most 5000 unless ``allow_large`` is set.
    generators : sequence of GeneratorSpec
        True generators.
    replicates : int
        Monte Carlo replicates per cell.
    seed : int
        Root seed.
    margins : {"none", "normal_parametric", "rank_based"}
        How copula-scale observations are recovered.  ``"none"`` uses the
        simulated copula sample directly (known margins);
        ``"normal_parametric"`` simulates ``N(j, j)`` margins and applies
        fitted normal cdfs; ``"rank_based"`` uses pseudo-observations.
        Signature studies always use pseudo-observations.
    methods : sequence of str
        Selection statistics of the signature study.
    allow_large : bool
        Permit sample sizes above 5000.
    """

    study: StudyTag
    dimensions: tuple[int, ...] = (2,)
    sample_sizes: tuple[int, ...] = (100,)
    generators: tuple[GeneratorSpec, ...] = field(default_factory=lambda: (VonMises(5.0, 0.0),))
    replicates: int = 100
    seed: int = 0
    margins: MarginsMode = "rank_based"
    methods: tuple[str, ...] = ("KS", "CvM")
    allow_large: bool = False

    def __post_init__(self):
        if self.study not in _STUDY_CODES:
            raise DomainError(f"unknown study {self.study!r}")
        for name in ("dimensions", "sample_sizes", "generators", "methods"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if int(self.replicates) < 1:
            raise DomainError("replicates must be at least 1")
        if any(int(d) < 2 for d in self.dimensions):
            raise DomainError("dimensions must be at least 2")
        if any(int(n) < 10 for n in self.sample_sizes):
            raise DomainError("sample sizes must be at least 10")
        if not self.allow_large and any(int(n) > 5000 for n in self.sample_sizes):
            raise DomainError("sample sizes above 5000 need allow_large=True")
        if self.margins not in ("none", "normal_parametric", "rank_based"):
            raise DomainError(f"unknown margins mode {self.margins!r}")
        if not self.generators:
            raise DomainError("at least one generator is required")

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible echo of the configuration."""
        return {
            "study": self.study,
            "dimensions": [int(d) for d in self.dimensions],
            "sample_sizes": [int(n) for n in self.sample_sizes],
            "generators": [generator_to_dict(g) for g in self.generators],
            "replicates": int(self.replicates),
            "seed": int(self.seed),
            "margins": self.margins,
            "methods": list(self.methods),
            "allow_large": bool(self.allow_large),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> StudyConfig:
        """Inverse of :meth:`to_dict`."""
        data = dict(data)
        if "generators" in data:
            data["generators"] = tuple(generator_from_dict(g) for g in data["generators"])
        try:
            return cls(**data)
        except TypeError as exc:
            raise DomainError(f"malformed study configuration: {exc}") from exc

    def cell_seed(self, cell: int, replicate: int) -> np.random.SeedSequence:
        """Seed sequence of one replicate, independent of scheduling."""
        return np.random.SeedSequence(
            int(self.seed), spawn_key=(_STUDY_CODES[self.study], int(cell), int(replicate)))


@dataclass(frozen=True, eq=False)
class StudyResult:
    """Long-format table of study metrics.

    Attributes
    ----------
    config : StudyConfig
    rows : tuple of dict
        Each row has keys ``study, d, n, generator, method, metric, value,
        mc_stderr``.
    wall_time : float
        Seconds spent; excluded from the CSV so that reruns are identical.
    """

    config: StudyConfig
    rows: tuple[dict[str, Any], ...]
    wall_time: float = 0.0

    def to_csv(self) -> str:
        """CSV text with shortest round-trip number formatting."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(_CSV_COLUMNS)
        for row in self.rows:
            writer.writerow([
                row["study"], row["d"], row["n"], row["generator"], row["method"],
                row["metric"], format_number(row["value"]), format_number(row["mc_stderr"]),
            ])
        return buf.getvalue()

    def manifest(self) -> dict[str, Any]:
        """Configuration echo, git-style hash of the configuration and CSV, wall time."""
        config_bytes = json.dumps(self.config.to_dict(), sort_keys=True).encode()
        return {
            "config": self.config.to_dict(),
            "config_hash": git_blob_hash(config_bytes),
            "result_hash": git_blob_hash(self.to_csv().encode()),
            "wall_time": self.wall_time,
            "rows": len(self.rows),
        }

    def value(self, *, metric: str, **match: Any) -> float:
        """Value of the unique row with the given metric and column values."""
        hits = [r for r in self.rows
                if r["metric"] == metric and all(r[k] == v for k, v in match.items())]
        if len(hits) != 1:
            raise KeyError(f"{len(hits)} rows match metric={metric!r}, {match}")
        return float(hits[0]["value"])

    def select(self, **match: Any) -> list[dict[str, Any]]:
        """Rows whose columns equal the given values."""
        return [r for r in self.rows if all(r[k] == v for k, v in match.items())]

    def write(self, directory: str | Path, stem: str | None = None) -> tuple[Path, Path]:
        """Write ``<stem>.csv`` and ``<stem>.json`` into ``directory``."""
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        stem = stem or self.config.study
        csv_path = directory / f"{stem}.csv"
        json_path = directory / f"{stem}.json"
        csv_path.write_text(self.to_csv())
        json_path.write_text(json.dumps(self.manifest(), indent=2, sort_keys=True) + "\n")
        return csv_path, json_path


def _row(cfg, d, n, gen, method, metric, value, stderr) -> dict[str, Any]:
    return {
        "study": cfg.study, "d": int(d), "n": int(n), "generator": generator_label(gen),
        "method": method, "metric": metric, "value": float(value), "mc_stderr": float(stderr),
    }


def _cells(cfg: StudyConfig):
    cells = itertools.product(cfg.dimensions, cfg.sample_sizes, cfg.generators)
    return [(i, int(d), int(n), g) for i, (d, n, g) in enumerate(cells)]


def _map(fn: Callable, tasks: Sequence, threads: int) -> list:
    if threads <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ThreadPoolExecutor(max_workers=int(threads)) as pool:
        return list(pool.map(fn, tasks))


def _require(cfg: StudyConfig, tag: str) -> None:
    if cfg.study != tag:
        raise DomainError(f"configuration is for study {cfg.study!r}, not {tag!r}")


# ---------------------------------------------------------------------------
# Signature recovery
# ---------------------------------------------------------------------------
def run_signature_study(cfg: StudyConfig, threads: int = 1) -> StudyResult:
    """Error rate of signature selection from pseudo-observations.

    In replicate ``r`` the true signature is the ``r``-th canonical
    candidate (cyclically), so every candidate is exercised.  A selection is
    correct when it equals the truth or its complement, which describe the
    same copula.

    Rows carry the metric ``error_rate`` per selection method, with
    ``mc_stderr`` the binomial standard error.
    """
    _require(cfg, "signature_recovery")
    start = time.perf_counter()
    tasks = [(cell, rep) for cell in _cells(cfg) for rep in range(cfg.replicates)]

    def one(task):
        (cell, d, n, gen), rep = task
        cands = Signature.candidates(d)
        truth = cands[rep % len(cands)]
        u = CopulaModel(gen, truth).sample(cfg.cell_seed(cell, rep), n)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TiesWarning)
            pobs = pseudo_observations(u)
        errors = {}
        for method in cfg.methods:
            chosen = select_signature(pobs, method).chosen
            errors[method] = float(chosen.canonical() != truth.canonical())
        return errors

    outcomes = _map(one, tasks, threads)
    rows = []
    per_cell = cfg.replicates
    for c, (cell, d, n, gen) in enumerate(_cells(cfg)):
        block = outcomes[c * per_cell:(c + 1) * per_cell]
        for method in cfg.methods:
            err = np.array([b[method] for b in block])
            rows.append(_row(cfg, d, n, gen, method, "error_rate", err.mean(), _stderr(err)))
    return StudyResult(cfg, tuple(rows), time.perf_counter() - start)


# ---------------------------------------------------------------------------
# RMSE of maximum likelihood
# ---------------------------------------------------------------------------
def _copula_scale(cfg: StudyConfig, u: np.ndarray, rng: np.random.Generator):
    """Simulated copula sample -> observations on the copula scale."""
    if cfg.margins == "none":
        return u
    d = u.shape[1]
    means = np.arange(1, d + 1, dtype=float)
    x = means + np.sqrt(means) * special.ndtri(u)
    if cfg.margins == "rank_based":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", TiesWarning)
            return pseudo_observations(x).values
    mu = x.mean(axis=0)
    sd = x.std(axis=0)
    return special.ndtr((x - mu) / sd)


def _flat_params(gen: GeneratorSpec) -> dict[str, float]:
    if isinstance(gen, Mixture):
        out = {"weight": float(gen.weight)}
        for prefix, comp in (("first", gen.first), ("second", gen.second)):
            out.update({f"{prefix}.{k}": float(v) for k, v in comp.params.items()})
        return out
    return {k: float(v) for k, v in gen.params.items()}


def run_rmse_study(cfg: StudyConfig, threads: int = 1) -> StudyResult:
    """Root mean squared error of the generator MLE.

    Data are simulated from ``C_f^s`` with the alternating signature
    ``(0, 1, 0, ...)``, given ``N(j, j)`` margins, mapped back to the copula
    scale according to ``cfg.margins`` and reduced to wrapped sums under the
    true signature; the true family is then fitted by maximum likelihood
    with the truth among the starting points.

    Rows carry ``rmse_<param>`` per parameter, with ``mc_stderr`` the
    standard error of the absolute errors, and ``excluded`` -- the number of
    non-converged fits left out of the RMSE.
    """
    _require(cfg, "rmse")
    if cfg.margins not in ("normal_parametric", "rank_based"):
        raise DomainError("the RMSE study needs margins 'normal_parametric' or 'rank_based'")
    start = time.perf_counter()
    tasks = [(cell, rep) for cell in _cells(cfg) for rep in range(cfg.replicates)]

    def one(task):
        (cell, d, n, gen), rep = task
        rng = np.random.default_rng(cfg.cell_seed(cell, rep))
        sig = alternating_signature(d)
        u = _copula_scale(cfg, CopulaModel(gen, sig).sample(rng, n), rng)
        y = wrapped_sums(u, sig)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            fit = fit_parametric(y, gen, signature=sig, initial=(gen,), seed=rep)
        return fit.converged, _flat_params(fit.generator)

    outcomes = _map(one, tasks, threads)
    rows = []
    per_cell = cfg.replicates
    for c, (cell, d, n, gen) in enumerate(_cells(cfg)):
        block = outcomes[c * per_cell:(c + 1) * per_cell]
        truth = _flat_params(gen)
        kept = [p for ok, p in block if ok]
        excluded = len(block) - len(kept)
        method = cfg.margins
        for name, true_value in truth.items():
            if not kept:
                continue
            abs_err = np.abs(np.array([p[name] for p in kept]) - true_value)
            rmse = math.sqrt(float(np.mean(abs_err**2)))
            rows.append(_row(cfg, d, n, gen, method, f"rmse_{name}", rmse, _stderr(abs_err)))
        rows.append(_row(cfg, d, n, gen, method, "excluded", excluded, 0.0))
    return StudyResult(cfg, tuple(rows), time.perf_counter() - start)


# ---------------------------------------------------------------------------
# KDE mean integrated squared error
# ---------------------------------------------------------------------------
def run_kde_mise_study(
    cfg: StudyConfig, threads: int = 1, *, grid_size: int = 200, circular: bool = False,
) -> StudyResult:
    """Mean integrated squared error of the generator KDE.

    Data are simulated with the alternating signature, mapped to the copula
    scale according to ``cfg.margins`` and reduced to wrapped sums.  The
    squared error against the true generator density is integrated by the
    trapezoid rule on the ``grid_size`` evaluation grid.

    Rows carry ``mise``, ``two_modes`` (the share of replicates in which
    exactly two prominent modes are detected) and ``integral`` (grid
    integral of the estimate), each averaged over replicates.
    """
    _require(cfg, "kde_mise")
    start = time.perf_counter()
    tasks = [(cell, rep) for cell in _cells(cfg) for rep in range(cfg.replicates)]

    def one(task):
        (cell, d, n, gen), rep = task
        rng = np.random.default_rng(cfg.cell_seed(cell, rep))
        sig = alternating_signature(d)
        u = _copula_scale(cfg, CopulaModel(gen, sig).sample(rng, n), rng)
        kde = fit_kde(wrapped_sums(u, sig), grid_size=grid_size, circular=circular)
        err = float(np.trapezoid((kde.values - gen.pdf(kde.grid)) ** 2, kde.grid))
        return err, float(kde.mode_count() == 2), kde.integral()

    outcomes = _map(one, tasks, threads)
    rows = []
    per_cell = cfg.replicates
    method = "known_margins" if cfg.margins == "none" else cfg.margins
    for c, (cell, d, n, gen) in enumerate(_cells(cfg)):
        block = np.array(outcomes[c * per_cell:(c + 1) * per_cell])
        for k, metric in enumerate(("mise", "two_modes", "integral")):
            col = block[:, k]
            rows.append(_row(cfg, d, n, gen, method, metric, col.mean(), _stderr(col)))
    return StudyResult(cfg, tuple(rows), time.perf_counter() - start)


def run_study(cfg: StudyConfig, threads: int = 1) -> StudyResult:
    """Dispatch on ``cfg.study``."""
    runners = {
        "signature_recovery": run_signature_study,
        "rmse": run_rmse_study,
        "kde_mise": run_kde_mise_study,
    }
    if cfg.study not in runners:
        raise DomainError("use run_data_pipeline for the data pipeline")
    return runners[cfg.study](cfg, threads)


# ---------------------------------------------------------------------------
# Data pipeline
# ---------------------------------------------------------------------------
AngleUnit = Literal["radians_pm_pi", "radians_0_2pi", "unit_interval"]


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_numeric_csv(
    path: str | Path,
    columns: Sequence[int | str] | None = None,
    delimiter: str | None = None,
    min_columns: int = 1,
) -> tuple[np.ndarray, list[str]]:
    """Read numeric columns from a CSV file.

    A header is recognised when the first row contains a non-numeric cell.
    The delimiter is sniffed from ``,``, ``;``, tab and space unless given.

    Parameters
    ----------
    path : str or Path
    columns : sequence of int or str, optional
        Columns to keep, as indices or header names; all by default.
    delimiter : str, optional
    min_columns : int
        Minimum width of the table.

    Returns
    -------
    data : ndarray of shape (n, k)
    names : list of str
        Column names (header entries or ``"x<index>"``).

    Raises
    ------
    SchemaError
        Too few columns, or requested columns missing.
    DataError
        Unreadable file or non-numeric cells (the message names the
        one-based line number).
    """
    try:
        text = Path(path).read_text()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise DataError("the file is empty")
    if delimiter is None:
        try:
            delimiter = csv.Sniffer().sniff(lines[0], delimiters=",;\t ").delimiter
        except csv.Error:
            delimiter = ","
    rows = [[c.strip() for c in r] for r in csv.reader(lines, delimiter=delimiter)]
    width = len(rows[0])
    if width < min_columns:
        raise SchemaError(f"the table needs at least {min_columns} columns, found {width}")
    has_header = not all(_is_number(c) for c in rows[0])
    names = rows[0] if has_header else [f"x{j}" for j in range(width)]
    body = rows[1:] if has_header else rows
    if columns is None:
        idx = list(range(width))
    else:
        idx = []
        for c in columns:
            if isinstance(c, str) and not c.lstrip("-").isdigit():
                if c not in names:
                    raise SchemaError(f"column {c!r} not found")
                idx.append(names.index(c))
            else:
                j = int(c)
                if not 0 <= j < width:
                    raise SchemaError(f"column index {j} out of range")
                idx.append(j)
    data = np.empty((len(body), len(idx)))
    first_row = 2 if has_header else 1
    for i, r in enumerate(body):
        if len(r) != width:
            raise DataError(f"row {i + first_row}: expected {width} cells, found {len(r)}")
        for k, j in enumerate(idx):
            try:
                data[i, k] = float(r[j])
            except ValueError as exc:
                raise DataError(f"row {i + first_row}: non-numeric cell {r[j]!r}") from exc
    if not np.all(np.isfinite(data)):
        bad = int(np.argmax(~np.all(np.isfinite(data), axis=1)))
        raise DataError(f"row {bad + first_row}: non-finite value")
    return data, [names[j] for j in idx]


def read_angle_csv(
    path: str | Path,
    columns: Sequence[int | str] = (0, 1),
    delimiter: str | None = None,
) -> tuple[np.ndarray, list[str]]:
    """Read the two angle columns used by :func:`run_data_pipeline`.

    See :func:`read_numeric_csv`; the table must have at least two columns
    and exactly two must be selected.
    """
    if len(columns) != 2:
        raise SchemaError("exactly two columns must be selected")
    return read_numeric_csv(path, columns, delimiter, min_columns=2)


def rescale_angles(x: npt.ArrayLike, unit: AngleUnit) -> np.ndarray:
    """Map angles to ``[0, 1]``: ``(x + pi) / 2 pi``, ``x / 2 pi`` or unchanged."""
    x = np.asarray(x, dtype=float)
    if unit == "radians_pm_pi":
        lo, hi, out = -math.pi, math.pi, (x + math.pi) / (2 * math.pi)
    elif unit == "radians_0_2pi":
        lo, hi, out = 0.0, 2 * math.pi, x / (2 * math.pi)
    elif unit == "unit_interval":
        lo, hi, out = 0.0, 1.0, x.copy()
    else:
        raise DomainError(f"unknown angle unit {unit!r}")
    tol = 1e-9 * (hi - lo)
    if np.any(x < lo - tol) or np.any(x > hi + tol):
        raise DataError(f"values outside [{lo:g}, {hi:g}] for angle unit {unit!r}")
    return np.clip(out, 0.0, 1.0)


@dataclass(frozen=True, eq=False)
class PipelineResult:
    """Everything the bivariate pipeline produces.

    Attributes
    ----------
    n : int
    columns : list of str
    shifted : ndarray
        Shifted wrapped differences ``(u_1 - u_2 + 1/2) mod 1``.
    histogram : dict
        ``{"edges", "density"}`` of ``shifted``.
    fits : list of FitReport
        Sorted by increasing AIC.
    kde : KdeEstimate
    kde_concordance : ConcordanceReport
        Plug-in measures of the KDE generator.
    sample : ConcordanceReport
        Rank-based sample measures.
    beta_grid : ndarray of shape (64,)
        Midpoints of the empirical-beta evaluation grid.
    beta_density : ndarray of shape (64, 64)
        Empirical beta copula density at ``(beta_grid[i], beta_grid[j])``.
    input_hash : str
        Git-style hash of the input file.
    """

    n: int
    columns: list[str]
    shifted: np.ndarray
    histogram: dict[str, list[float]]
    fits: list[FitReport]
    kde: KdeEstimate
    kde_concordance: ConcordanceReport
    sample: ConcordanceReport
    beta_grid: np.ndarray
    beta_density: np.ndarray
    input_hash: str
    wall_time: float = 0.0

    @property
    def best(self) -> FitReport:
        """Fit with the smallest AIC."""
        return self.fits[0]

    def best_single(self) -> FitReport:
        """Single-family fit with the smallest AIC."""
        return next(f for f in self.fits if not f.family.startswith("Mixture"))

    def fits_csv(self) -> str:
        """Table of fits: generator, parameters, rho, tau, xi, AIC."""
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["generator", "parameters", "rho", "tau", "xi", "aic", "converged"])
        for f in self.fits:
            params = ";".join(f"{k}={format_number(v)}" for k, v in f.params.items())
            writer.writerow([f.family, params, format_number(f.rho), format_number(f.tau),
                             format_number(f.xi), format_number(f.aic), int(f.converged)])
        return buf.getvalue()

    def to_dict(self) -> dict[str, Any]:
        """JSON-compatible summary (the raw data are omitted)."""
        return {
            "n": self.n,
            "columns": list(self.columns),
            "input_hash": self.input_hash,
            "wall_time": self.wall_time,
            "sample": self.sample.to_dict(),
            "kde": {"bandwidth": self.kde.bandwidth, "kernel": self.kde.kernel,
                    "grid": self.kde.grid.tolist(), "values": self.kde.values.tolist(),
                    "concordance": self.kde_concordance.to_dict()},
            "fits": [f.to_dict() for f in self.fits],
            "histogram": self.histogram,
            "beta_grid": self.beta_grid.tolist(),
            "beta_density": self.beta_density.tolist(),
        }


def pipeline_families() -> list[str | tuple[str, str, str]]:
    """The five unimodal families followed by all 15 unordered pairs of them."""
    pairs = itertools.combinations_with_replacement(UNIMODAL_FAMILIES, 2)
    return list(UNIMODAL_FAMILIES) + [("Mixture", a, b) for a, b in pairs]


def run_data_pipeline(
    source: str | Path | npt.ArrayLike,
    angle_unit: AngleUnit = "radians_pm_pi",
    columns: Sequence[int | str] = (0, 1),
    *,
    delimiter: str | None = None,
    families: Sequence[str | tuple[str, str, str]] | None = None,
    kde_bins: int = 512,
    beta_grid_size: int = 64,
    histogram_bins: int = 30,
    threads: int = 1,
    seed: int = 0,
) -> PipelineResult:
    """Fit the bivariate model to a pair of angular variables.

    Steps: rescale the angles to ``[0, 1]``, take pseudo-observations, form
    the shifted wrapped differences ``(u_1 - u_2 + 1/2) mod 1`` (signature
    ``(0, 1)``), fit every family by maximum likelihood, fit a KDE, compute
    sample and plug-in concordance and tabulate the empirical beta copula
    density.  Plug-in measures use the fitted density rotated back by
    ``-1/2``, which is the generator of ``C^(0,1)``.

    Parameters
    ----------
    source : path or array-like of shape (n, 2)
        CSV file or data already in memory.
    angle_unit : {"radians_pm_pi", "radians_0_2pi", "unit_interval"}
    columns : pair of int or str
        Columns to use (indices or header names) when reading a file.
    delimiter : str, optional
        CSV delimiter; sniffed when omitted.
    families : sequence, optional
        Families to fit; defaults to :func:`pipeline_families`.
    threads : int
        Worker threads for the fits.

    Raises
    ------
    DataError, SchemaError
        Malformed input or fewer than 50 rows.
    """
    start = time.perf_counter()
    if isinstance(source, (str, Path)):
        raw_bytes = Path(source).read_bytes() if Path(source).exists() else b""
        data, names = read_angle_csv(source, columns, delimiter)
    else:
        data = np.asarray(source, dtype=float)
        if data.ndim != 2 or data.shape[1] < 2:
            raise SchemaError("data must have at least two columns")
        data = data[:, :2]
        names = ["x0", "x1"]
        raw_bytes = np.ascontiguousarray(data).tobytes()
    if data.shape[0] < 50:
        raise DataError("the pipeline needs at least 50 rows")
    x = rescale_angles(data, angle_unit)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", TiesWarning)
        pobs = pseudo_observations(x)
    sig = Signature((0, 1))
    shifted = frac(wrapped_sums(pobs, sig) + 0.5)

    fam_list = pipeline_families() if families is None else list(families)

    def fit(fam):
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", BoundaryWarning)
            return fit_parametric(shifted, fam, signature=sig, shift=0.5, seed=seed)

    fits = sorted(_map(fit, fam_list, threads), key=lambda f: f.aic)

    kde = fit_kde(shifted)
    kde_gen = rotate(kde.to_generator(kde_bins), -0.5)
    kde_conc = closed_form_concordance(CopulaModel(kde_gen, sig))

    density, edges = np.histogram(shifted, bins=histogram_bins, range=(0.0, 1.0), density=True)
    mid = (np.arange(beta_grid_size) + 0.5) / beta_grid_size
    g1, g2 = np.meshgrid(mid, mid, indexing="ij")
    beta = empirical_beta_density(pobs, np.column_stack([g1.ravel(), g2.ravel()]))
    return PipelineResult(
        n=int(data.shape[0]), columns=list(names), shifted=shifted,
        histogram={"edges": edges.tolist(), "density": density.tolist()},
        fits=fits, kde=kde, kde_concordance=kde_conc,
        sample=sample_concordance(pobs.values), beta_grid=mid,
        beta_density=beta.reshape(beta_grid_size, beta_grid_size),
        input_hash=git_blob_hash(raw_bytes), wall_time=time.perf_counter() - start,
    )
