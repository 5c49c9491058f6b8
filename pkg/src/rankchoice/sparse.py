"""Sparsest consistent choice models.

``sparsest_fit`` reads a sparse model straight off exact marginals: sorted
ascending, each value is either a subset sum of atoms found so far or the
mass of a new atom.  This recovers the generating model whenever every atom
owns a row nobody else touches (signature condition) and no small integer
combination of the masses vanishes (linear independence); both conditions
have checkers here.  Also: a phase-diagram driver for recovery rates,
sample-based sparsification, and the support-size audit comparing the
robust LP's basic solution with the sparsest fit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import (
    ChoiceError,
    DataVector,
    ObservationScheme,
    PriceVector,
    RankList,
    SchemeKind,
    SparseChoiceModel,
    a_matrix,
    all_rankings,
    exact_marginals,
)
from .pool import map_ordered

SUM_TOL = 1e-9
MAX_ATOMS = 22
LI_TOL = 1e-9
MITM_LIMIT = 2_000_000
RANDOM_PROBES = 200_000


# ---------------------------------------------------------------------------
# Sparsest fit


@dataclass(frozen=True)
class SparsestFitOutput:
    """Result of :func:`sparsest_fit`.

    ``signature_rows[i]`` is the data row that created atom ``i`` (its
    signature row); ``columns`` holds the recovered 0/1 columns, one row
    per atom.  On failure ``model`` is None and ``reason`` / ``row`` say
    where the procedure stopped.
    """

    status: str
    model: SparseChoiceModel | None
    masses: tuple[float, ...]
    signature_rows: tuple[int, ...]
    columns: np.ndarray | None = None
    reason: str = ""
    row: int | None = None

    @property
    def recovered(self) -> bool:
        return self.status == "recovered"


def _violated(reason: str, masses=(), rows=(), cols=None, row=None) -> SparsestFitOutput:
    return SparsestFitOutput("condition-violated", None, tuple(masses), tuple(rows), cols, reason, row)


class _SubsetSums:
    """All subset sums of the atoms so far, searchable with a tolerance."""

    def __init__(self) -> None:
        self.sums = np.zeros(1)
        self.masks = np.zeros(1, dtype=np.int64)
        self._order = np.zeros(1, dtype=np.int64)

    def add(self, mass: float) -> None:
        bit = np.int64(1) << np.int64(len(self.masks).bit_length() - 1)
        self.sums = np.concatenate([self.sums, self.sums + mass])
        self.masks = np.concatenate([self.masks, self.masks | bit])
        self._order = np.argsort(self.sums, kind="stable")

    def find(self, value: float) -> np.ndarray:
        s = self.sums[self._order]
        lo = np.searchsorted(s, value - SUM_TOL, side="left")
        hi = np.searchsorted(s, value + SUM_TOL, side="right")
        return self.masks[self._order[lo:hi]]


def sparsest_fit(y: DataVector) -> SparsestFitOutput:
    """Recover a sparse model from exact point data.

    Distinct values are visited in ascending order; rows sharing a value
    share its outcome, and the lowest such row index is reported.  A
    zero row is the empty subset sum.  A value matching exactly one subset
    of current atoms (tolerance 1e-9) marks those atoms' columns; a value
    matching none opens a new atom; a value matching several subsets is
    ambiguous and stops the procedure.  The columns are then decoded into
    rank lists for the scheme and the result is re-encoded and compared
    with ``y``.
    """
    if not y.is_point:
        raise ValueError("sparsest_fit needs exact point data, not intervals")
    vals = y.y
    m = vals.size
    uniq, first, inverse = np.unique(vals, return_index=True, return_inverse=True)
    table = _SubsetSums()
    masses: list[float] = []
    sig_rows: list[int] = []
    value_masks = np.zeros(uniq.size, dtype=np.int64)
    for u, v in enumerate(uniq.tolist()):
        d = int(first[u])
        if v <= SUM_TOL:
            continue
        hits = table.find(v)
        if hits.size > 1:
            return _violated("ambiguous subset sum (linear independence fails)", masses, sig_rows, row=d)
        if hits.size == 1:
            value_masks[u] = hits[0]
            continue
        if len(masses) >= MAX_ATOMS:
            return _violated(f"more than {MAX_ATOMS} atoms", masses, sig_rows, row=d)
        if sum(masses) + v > 1.0 + SUM_TOL * (len(masses) + 1):
            return _violated("atom masses would exceed 1", masses, sig_rows, row=d)
        value_masks[u] = np.int64(1) << np.int64(len(masses))
        masses.append(v)
        sig_rows.append(d)
        table.add(v)
    row_masks = value_masks[inverse.ravel()]
    k = len(masses)
    cols = ((row_masks[None, :] >> np.arange(k, dtype=np.int64)[:, None]) & 1).astype(np.uint8)
    if k == 0 or abs(sum(masses) - 1.0) > SUM_TOL * max(1, k):
        return _violated(f"atom masses sum to {sum(masses):.12g}, not 1", masses, sig_rows, cols)
    ranks = []
    for i in range(k):
        sigma = decode_column(cols[i], y.scheme)
        if sigma is None:
            return _violated(f"column of atom {i} is not the column of a unique rank list",
                             masses, sig_rows, cols, sig_rows[i])
        ranks.append(sigma.ranks)
    if len(set(ranks)) < k:
        return _violated("two atoms decode to the same rank list", masses, sig_rows, cols)
    model = SparseChoiceModel.from_weights(ranks, masses)
    recon = np.asarray(exact_marginals(model, y.scheme).values)
    bad = np.flatnonzero(np.abs(recon - vals) > SUM_TOL)
    if bad.size:
        return _violated("re-encoded model does not reproduce the data", masses, sig_rows, cols, int(bad[0]))
    return SparsestFitOutput("recovered", model, tuple(masses), tuple(sig_rows), cols)


def decode_column(col: np.ndarray, scheme: ObservationScheme) -> RankList | None:
    """The rank list whose column is ``col``, or None if there is no unique one.

    Ranking columns are permutation matrices; comparison (and the
    comparison block of top-set) columns are tournaments sorted by
    out-degree.  Other schemes are matched against every rank list when
    ``N <= 8``.  Every decoded answer is re-encoded and checked.
    """
    n = scheme.n
    col = np.asarray(col, dtype=np.uint8)
    sigma = None
    if scheme.kind is SchemeKind.RANKING:
        mat = col.reshape(n, n)
        if np.all(mat.sum(axis=0) == 1) and np.all(mat.sum(axis=1) == 1):
            sigma = RankList(tuple(int(r) + 1 for r in np.argmax(mat, axis=0)))
    elif scheme.kind in (SchemeKind.COMPARISON, SchemeKind.TOPSET):
        first = np.repeat(np.arange(n), n - 1)
        wins = np.bincount(first, weights=col[: n * (n - 1)], minlength=n).astype(int)
        if sorted(wins.tolist()) == list(range(n)):
            sigma = RankList(tuple(int(n - w) for w in wins))
    elif n <= 8:
        ranks = all_rankings(n)
        match = np.flatnonzero(np.all(a_matrix(ranks, scheme).T == col[None, :], axis=1))
        if match.size == 1:
            sigma = RankList(tuple(int(r) for r in ranks[match[0]]))
    if sigma is None:
        return None
    return sigma if np.array_equal(a_matrix(np.array([sigma.ranks]), scheme)[:, 0], col) else None


# ---------------------------------------------------------------------------
# Identifiability conditions


@dataclass(frozen=True)
class ConditionReport:
    """Signature and linear-independence checks for one model under one scheme.

    ``signature_rows[i]`` is a row where only atom ``i`` has a 1 (None if
    there is none).  ``li_status`` is ``satisfied`` (exhaustive search found
    nothing), ``not-falsified`` (random probing found nothing) or
    ``violated`` with the offending integer vector in ``li_witness``.
    """

    signature_rows: tuple[int | None, ...]
    li_status: str
    li_witness: tuple[int, ...] | None
    C: int

    @property
    def signature_ok(self) -> bool:
        return all(r is not None for r in self.signature_rows)

    @property
    def linear_independence_ok(self) -> bool:
        return self.li_status != "violated"

    @property
    def ok(self) -> bool:
        return self.signature_ok and self.linear_independence_ok


def check_signature(model: SparseChoiceModel, scheme: ObservationScheme) -> tuple[int | None, ...]:
    """For each atom, the first row where its column is 1 and every other atom's is 0."""
    A = a_matrix(model.ranks_array(), scheme).astype(np.int64)
    alone = A.sum(axis=1) == 1
    out = []
    for i in range(model.k):
        rows = np.flatnonzero(alone & (A[:, i] == 1))
        out.append(int(rows[0]) if rows.size else None)
    return tuple(out)


def _half_table(lam: np.ndarray, C: int) -> tuple[np.ndarray, np.ndarray]:
    rows = list(itertools.product(range(-C, C + 1), repeat=lam.size))
    coeffs = np.array(rows, dtype=np.int64).reshape(len(rows), lam.size)
    return coeffs, coeffs @ lam


def check_linear_independence(probs: Sequence[float], C: int | None = None, *, seed: int = 0,
                              tol: float = LI_TOL) -> tuple[str, tuple[int, ...] | None]:
    """Search for integer ``c != 0`` with ``|c_i| <= C`` and ``|sum c_i lambda_i| <= tol``.

    Exhaustive by meet-in-the-middle while each half table has at most
    ``MITM_LIMIT`` entries; beyond that, random probing, whose clean
    outcome is reported as ``not-falsified``.  ``C`` defaults to ``K``.
    """
    lam = np.asarray(probs, dtype=float)
    k = lam.size
    C = k if C is None else int(C)
    if C < 1 or k == 0:
        return "satisfied", None
    h = k // 2
    if (2 * C + 1) ** (k - h) <= MITM_LIMIT:
        left_c, left_s = _half_table(lam[:h], C)
        right_c, right_s = _half_table(lam[h:], C)
        order = np.argsort(left_s)
        ls = left_s[order]
        lo = np.searchsorted(ls, -right_s - tol, side="left")
        hi = np.searchsorted(ls, -right_s + tol, side="right")
        for r in np.flatnonzero(hi > lo):
            for pos in range(lo[r], hi[r]):
                c = np.concatenate([left_c[order[pos]], right_c[r]])
                if np.any(c != 0):
                    return "violated", tuple(int(v) for v in c)
        return "satisfied", None
    rng = np.random.default_rng(seed)
    for _ in range(RANDOM_PROBES // 1000):
        c = rng.integers(-C, C + 1, size=(1000, k))
        hit = np.flatnonzero((np.abs(c @ lam) <= tol) & np.any(c != 0, axis=1))
        if hit.size:
            return "violated", tuple(int(v) for v in c[hit[0]])
    return "not-falsified", None


def check_conditions(model: SparseChoiceModel, scheme: ObservationScheme, C: int | None = None) -> ConditionReport:
    sig = check_signature(model, scheme)
    C = model.k if C is None else C
    status, witness = check_linear_independence(model.probs_array(), C)
    return ConditionReport(sig, status, witness, C)


# ---------------------------------------------------------------------------
# Recovery phase diagram


def _scheme_for(kind: SchemeKind | str, n: int) -> ObservationScheme:
    kind = SchemeKind(kind)
    makers = {SchemeKind.COMPARISON: ObservationScheme.comparison, SchemeKind.RANKING: ObservationScheme.ranking,
              SchemeKind.TOPSET: ObservationScheme.topset, SchemeKind.CENSORED: ObservationScheme.censored}
    if kind not in makers:
        raise ValueError(f"phase diagrams need a scheme defined by N alone, not {kind.value}")
    return makers[kind](n)


def same_model(a: SparseChoiceModel, b: SparseChoiceModel, tol: float = SUM_TOL) -> bool:
    """Equal supports and probabilities within ``tol``."""
    da = {r.ranks: p for r, p in a.support}
    db = {r.ranks: p for r, p in b.support}
    return da.keys() == db.keys() and all(abs(da[k] - db[k]) <= tol for k in da)


def recovery_trial(kind: str, n: int, k: int, seed: int, trial: int) -> bool:
    """One draw from the generative model (weights on ``[1, 2]``) and one recovery attempt."""
    from .models import GenerativeSpec, generate_random_model

    rng = np.random.default_rng([seed, n, k, trial])
    truth = generate_random_model(GenerativeSpec(k), n, rng)
    out = sparsest_fit(exact_marginals(truth, _scheme_for(kind, n)))
    return out.recovered and same_model(out.model, truth)


def _trial_star(args) -> bool:
    return recovery_trial(*args)


@dataclass(frozen=True)
class PhaseCell:
    scheme: str
    n: int
    k: int
    trials: int
    recovered: int

    @property
    def rate(self) -> float:
        return self.recovered / self.trials if self.trials else math.nan


def recovery_phase_diagram(kind: SchemeKind | str, n_values: Sequence[int], k_values: Sequence[int],
                           trials: int, seed: int = 0, workers: int | None = None) -> list[PhaseCell]:
    """Exact-recovery rate of :func:`sparsest_fit` on generated models, per ``(N, K)``."""
    kind = SchemeKind(kind).value
    _scheme_for(kind, 2)
    cells = [(n, k) for n in n_values for k in k_values]
    jobs = [(kind, n, k, seed, t) for n, k in cells for t in range(trials)]
    hits = map_ordered(_trial_star, jobs, workers)
    out = []
    for c, (n, k) in enumerate(cells):
        out.append(PhaseCell(kind, n, k, trials, int(sum(hits[c * trials:(c + 1) * trials]))))
    return out


# ---------------------------------------------------------------------------
# Sparsification by sampling


def sparsify_sample_size(epsilon: float, c_max: int, p_max: float, n: int) -> int:
    """``ceil((2 C^2 p_max^2 / eps^2) (log 2C + C log N))``."""
    if epsilon <= 0 or c_max < 1 or n < 2:
        raise ValueError("need epsilon > 0, C >= 1, N >= 2")
    return int(math.ceil(2 * c_max**2 * p_max**2 / epsilon**2 * (math.log(2 * c_max) + c_max * math.log(n))))


def sparsify(model, epsilon: float, c_max: int, prices: PriceVector, rng: np.random.Generator) -> SparseChoiceModel:
    """Empirical distribution of ``M`` rank lists drawn from ``model``.

    ``model`` is a :class:`SparseChoiceModel` or anything with a
    ``sample_rankings(size, rng)`` method.  With ``M`` from
    :func:`sparsify_sample_size`, revenues of all assortments of at most
    ``c_max`` products are within ``epsilon`` with high probability.
    """
    from .models import sample_rankings

    size = sparsify_sample_size(epsilon, c_max, max(prices.max, 1e-12), model.n)
    draws = np.asarray(sample_rankings(model, size, rng))
    uniq, counts = np.unique(draws, axis=0, return_counts=True)
    return SparseChoiceModel.from_weights(uniq, counts.astype(float))


# ---------------------------------------------------------------------------
# Support-size audit


@dataclass(frozen=True)
class SparsityAudit:
    """Support of the robust LP's basic solution against the sparsest fit.

    ``sparse_support`` is the recovered support when :func:`sparsest_fit`
    succeeds.  Otherwise the comparison uses ``generic_bound = rank [A; 1]``,
    the support every representation of a generic data vector needs; it is
    a lower bound only for data in general position.
    """

    min_support: int
    sparse_support: int | None
    generic_bound: int
    m: int
    bound: float

    @property
    def reference(self) -> int:
        return self.sparse_support if self.sparse_support is not None else self.generic_bound

    @property
    def gap(self) -> int:
        return self.min_support - self.reference

    @property
    def within_bfs_bound(self) -> bool:
        return self.min_support <= self.m + 1


def augmented_rank(scheme: ObservationScheme) -> int:
    A = a_matrix(all_rankings(scheme.n), scheme).astype(float)
    return int(np.linalg.matrix_rank(np.vstack([A, np.ones(A.shape[1])])))


def bfs_sparsity_audit(y: DataVector, target, prices: PriceVector) -> SparsityAudit:
    from .robust import RobustQuery, robust_bruteforce

    res = robust_bruteforce(RobustQuery(y, target, prices))
    if not res.ok:
        raise ChoiceError("data vector is inconsistent; nothing to audit")
    fit = sparsest_fit(y)
    return SparsityAudit(res.certificate["support"], fit.model.k if fit.recovered else None,
                         augmented_rank(y.scheme), y.scheme.m, res.bound)


__all__ = [
    "SparsestFitOutput", "ConditionReport", "PhaseCell", "SparsityAudit", "sparsest_fit", "decode_column",
    "check_signature", "check_linear_independence", "check_conditions", "recovery_phase_diagram",
    "recovery_trial", "same_model", "sparsify", "sparsify_sample_size", "bfs_sparsity_audit", "augmented_rank",
]
