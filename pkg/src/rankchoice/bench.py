"""Experiment drivers: the synthetic revenue study and k-fold cross-validation.

The study draws ground-truth parametric models, hands the robust method
exact censored-comparison marginals, and scores its lower bound against the
true revenue of random assortments with ``eps = (R_true - R_min) / R_min``.
Cross-validation splits the offered assortments of a sales-count data set
into folds and compares the robust interval LP with a fitted MNL at
predicting held-out conversion rates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .core import Assortment, ChoiceError
from .models import FAMILIES, MC_DRAWS, Transactions, family_prices, fit_mnl, make_family_model, simulate_pairwise_marginals
from .pool import map_ordered
from .robust import (
    ConstraintMode,
    RobustQuery,
    find_min_feasible_z,
    robust_bruteforce,
    robust_censored_comparison,
    robust_conversion_interval,
    robust_cutting_plane,
    robust_sampled_dual,
)

STUDY_METHODS = ("brute", "censored", "cut", "sampled")
BIN_WIDTH = 0.05
R_MIN_FLOOR = 1e-12


@dataclass(frozen=True)
class ExperimentSpec:
    family: str
    n: int = 6
    instances: int = 10
    assortments: int = 10
    min_size: int = 1
    max_size: int | None = None
    seed: int = 0
    method: str = "brute"
    s: float = 0.25
    rounds: int = 1
    samples: int = 10_000
    mmnl_draws: int = MC_DRAWS

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.method not in STUDY_METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {STUDY_METHODS}")
        if self.instances < 1 or self.assortments < 1:
            raise ValueError("instance and assortment counts must be >= 1")
        hi = self.size_range[1]
        if not 1 <= self.min_size <= hi <= self.n - 1:
            raise ValueError(f"assortment sizes must satisfy 1 <= min <= max <= N-1 = {self.n - 1}")

    @property
    def size_range(self) -> tuple[int, int]:
        hi = min(7, self.n - 1) if self.max_size is None else self.max_size
        return self.min_size, hi


@dataclass(frozen=True)
class ErrorRecord:
    instance: int
    assortment: Assortment
    r_true: float
    r_min: float
    status: str = "optimal"

    @property
    def error(self) -> float:
        """``(R_true - R_min) / R_min``; NaN when the bound is unusable."""
        if not math.isfinite(self.r_min) or self.r_min <= R_MIN_FLOOR:
            return math.nan
        return (self.r_true - self.r_min) / self.r_min

    @property
    def excluded(self) -> bool:
        return math.isnan(self.error)


@dataclass(frozen=True)
class StudyResult:
    spec: ExperimentSpec
    records: tuple[ErrorRecord, ...]

    @property
    def included(self) -> list[ErrorRecord]:
        return [r for r in self.records if not r.excluded]

    @property
    def excluded_count(self) -> int:
        return sum(r.excluded for r in self.records)

    @property
    def mean_error(self) -> float:
        errs = [r.error for r in self.included]
        return float(np.mean(errs)) if errs else math.nan

    def histogram(self, width: float = BIN_WIDTH) -> list[tuple[float, float, int]]:
        return histogram([r.error for r in self.included], width)


def histogram(errors: Sequence[float], width: float = BIN_WIDTH) -> list[tuple[float, float, int]]:
    """Fixed-width bins from 0; negative errors (solver round-off) go to the first bin."""
    errs = np.asarray([e for e in errors if not math.isnan(e)], dtype=float)
    if errs.size == 0:
        return []
    idx = np.floor(np.clip(errs, 0.0, None) / width + 1e-9).astype(int)
    counts = np.bincount(idx)
    return [(k * width, (k + 1) * width, int(c)) for k, c in enumerate(counts)]


def _solve(spec: ExperimentSpec, y, m: Assortment, prices) -> tuple[float, str]:
    if spec.method == "brute":
        res = robust_bruteforce(RobustQuery(y, m, prices))
    elif spec.method == "censored":
        res = robust_censored_comparison(RobustQuery(y, m, prices, mode=ConstraintMode.GE))
    elif spec.method == "cut":
        res = robust_cutting_plane(RobustQuery(y, m, prices), spec.rounds)
    else:
        res = robust_sampled_dual(RobustQuery(y, m, prices), spec.samples, seed=spec.seed)
    return res.bound, res.status


def _instance(args: tuple[ExperimentSpec, int]) -> list[ErrorRecord]:
    spec, inst = args
    rng = np.random.default_rng([spec.seed, inst])
    model = make_family_model(spec.family, spec.n, rng, s=spec.s, mmnl_draws=spec.mmnl_draws)
    prices = family_prices(spec.family, spec.n)
    y = simulate_pairwise_marginals(model)
    lo, hi = spec.size_range
    out = []
    for _ in range(spec.assortments):
        size = int(rng.integers(lo, hi + 1))
        m = Assortment.of(rng.choice(np.arange(1, spec.n), size=size, replace=False))
        out.append(evaluate_assortment(spec, model, y, m, prices, inst))
    return out


def evaluate_assortment(spec: ExperimentSpec, model, y, m: Assortment, prices, instance: int = 0) -> ErrorRecord:
    """True revenue of ``m`` under ``model`` against the robust bound from ``y``."""
    p = prices.as_array()[list(m.members)]
    r_true = float(p @ model.choice_probs(m))
    bound, status = _solve(spec, y, m, prices)
    return ErrorRecord(instance, m, r_true, bound, status)


def run_simulation_study(spec: ExperimentSpec, workers: int | None = None) -> StudyResult:
    """Run every (instance, assortment) cell; output order is independent of ``workers``."""
    chunks = map_ordered(_instance, [(spec, i) for i in range(spec.instances)], workers)
    return StudyResult(spec, tuple(r for chunk in chunks for r in chunk))


STUDY_HEADER = ("instance", "assortment", "size", "r_true", "r_min", "error", "status")


def study_rows(result: StudyResult) -> list[tuple]:
    return [(r.instance, r.assortment.label(), len(r.assortment) - 1, r.r_true, r.r_min, r.error, r.status)
            for r in result.records]


def mmnl_complexity_sweep(s_values: Sequence[float], **kw) -> list[tuple[float, float]]:
    """Mean relative error of the MMNL-Rand study for each coefficient spread ``s``, at fixed data draws."""
    base = ExperimentSpec("mmnl-rand", **kw)
    return [(s, run_simulation_study(replace(base, s=s)).mean_error) for s in s_values]


# ---------------------------------------------------------------------------
# k-fold cross-validation


@dataclass(frozen=True)
class CvRecord:
    method: str
    fold: int
    assortment: Assortment
    predicted: float
    actual: float
    z: float | None = None

    @property
    def relative_error(self) -> float:
        return abs(self.predicted - self.actual) / self.actual


@dataclass(frozen=True)
class CvResult:
    k: int
    records: tuple[CvRecord, ...]
    folds: tuple[tuple[int, ...], ...]
    skipped: tuple[int, ...] = ()

    def mean_error(self, method: str) -> float:
        errs = [r.relative_error for r in self.records if r.method == method and math.isfinite(r.predicted)]
        return float(np.mean(errs)) if errs else math.nan


CV_METHODS = ("robust", "mnl")


def fold_partition(n_assortments: int, k: int, seed: int) -> list[list[int]]:
    """Seeded shuffle of assortment indices cut into ``k`` contiguous near-equal chunks."""
    if not 2 <= k <= n_assortments:
        raise ValueError(f"need 2 <= k <= number of assortments ({n_assortments})")
    perm = np.random.default_rng(seed).permutation(n_assortments)
    return [sorted(int(i) for i in chunk) for chunk in np.array_split(perm, k)]


def with_arrival_proxy(data: Transactions, factor: float) -> Transactions:
    """Replace each true arrival count by ``factor`` times itself, absorbing the change in no-purchases.

    Real sales records lack no-purchase counts, so arrivals must be guessed;
    in synthetic data the truth is known and ``factor != 1`` models a wrong
    guess.  No-purchase counts are floored at zero.
    """
    if factor <= 0:
        raise ValueError("arrival factor must be positive")
    counts = []
    for c in data.counts:
        sales = sum(c[1:])
        counts.append((max(0, int(round(factor * sum(c))) - sales),) + tuple(c[1:]))
    return Transactions(data.n, data.assortments, tuple(counts), data.censor_at)


def run_kfold_cv(data: Transactions, k: int, *, methods: Sequence[str] = CV_METHODS, z: float | None = None,
                 seed: int = 0, arrival_factor: float = 1.0) -> CvResult:
    """Predict each held-out assortment's conversion rate from the other folds.

    The robust prediction is the minimum conversion rate under interval
    data at width ``z`` (``None``: the smallest feasible ``z`` of each
    training set).  The MNL prediction comes from :func:`fit_mnl` on the
    training counts.  Error is ``|predicted - actual| / actual`` with the
    actual rate taken from the held-out counts.  ``arrival_factor`` distorts
    the training arrivals only (see :func:`with_arrival_proxy`).
    """
    for m in methods:
        if m not in CV_METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {CV_METHODS}")
    folds = fold_partition(len(data.assortments), k, seed)
    records: list[CvRecord] = []
    skipped = []
    for f, test in enumerate(folds):
        train = [i for g, fold in enumerate(folds) if g != f for i in fold]
        assert not set(train) & set(test)
        usable = [i for i in test if data.arrivals(i) > 0 and data.conversion(i) > 0]
        if not usable:
            warnings.warn(f"fold {f}: no held-out assortment with usable counts; skipped")
            skipped.append(f)
            continue
        training = data.subset(train)
        if arrival_factor != 1.0:
            training = with_arrival_proxy(training, arrival_factor)
        fz = None
        if "robust" in methods:
            fz = find_min_feasible_z(training) if z is None else z
        fit = fit_mnl(training) if "mnl" in methods else None
        for i in usable:
            m = data.assortments[i]
            actual = data.conversion(i)
            for method in methods:
                if method == "robust":
                    pred = robust_conversion_interval(training, m, fz).bound
                else:
                    pred = 1.0 - float(fit.model.choice_probs(m)[0])
                records.append(CvRecord(method, f, m, pred, actual, fz if method == "robust" else None))
    return CvResult(k, tuple(records), tuple(tuple(f) for f in folds), tuple(skipped))


CV_HEADER = ("method", "fold", "assortment", "predicted", "actual", "relative_error")


def cv_rows(result: CvResult, methods: Sequence[str] = CV_METHODS) -> list[tuple]:
    rows: list[tuple] = [(r.method, r.fold, r.assortment.label(), r.predicted, r.actual, r.relative_error)
                         for r in result.records]
    for m in methods:
        rows.append((m, "all", "mean", math.nan, math.nan, result.mean_error(m)))
    return rows


__all__ = [
    "ExperimentSpec", "ErrorRecord", "StudyResult", "histogram", "run_simulation_study", "evaluate_assortment", "study_rows",
    "mmnl_complexity_sweep", "CvRecord", "CvResult", "fold_partition", "with_arrival_proxy", "run_kfold_cv", "cv_rows",
    "STUDY_METHODS", "CV_METHODS", "ChoiceError",
]
