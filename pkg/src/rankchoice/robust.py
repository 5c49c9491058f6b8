"""Worst-case revenue over all choice models consistent with observed marginals.

Every estimator here answers the same question: given data ``y`` about a
distribution ``lambda`` over rank lists, how low (or high) can the expected
revenue of a target assortment be?  They differ in how the space of rank
lists is handled:

* ``robust_bruteforce`` enumerates all ``N!`` rank lists (small ``N`` only).
* ``robust_sampled_dual`` keeps the dual constraints of a random sample of
  rank lists; its value bounds the true optimum from above.
* ``robust_ranking_exact`` replaces the enumeration by an assignment-problem
  dual; exact for ranking data.
* ``robust_cutting_plane`` relaxes the set of rank lists to a pairwise-order
  polytope and refines it by splitting on fractional coordinates; each round
  gives a lower bound.
* ``robust_censored_comparison`` is the one-shot relaxation for censored
  comparison data with ``A lambda >= y`` constraints.
* ``robust_conversion_interval`` handles interval data built from sales
  counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np

from . import lp as lpmod
from .core import (
    Assortment,
    ChoiceError,
    DataVector,
    DimensionError,
    ObservationScheme,
    PriceVector,
    SchemeKind,
    SparseChoiceModel,
    a_matrix,
    all_rankings,
    purchases,
)
from .lp import LpBuilder, LpStatus

EQ_BAND = 1e-9
INTEGRAL_TOL = 1e-7
SUPPORT_TOL = 1e-8
MAX_ENUM_N = 8


class ConstraintMode(str, Enum):
    """How the data enter the feasible set: ``A l = y``, ``A l >= y`` or ``a <= A l <= b``."""

    EQ = "eq"
    GE = "ge"
    INTERVAL = "interval"


@dataclass(frozen=True)
class RobustQuery:
    data: DataVector
    target: Assortment
    prices: PriceVector
    sense: str = "min"
    mode: ConstraintMode = ConstraintMode.EQ

    def __post_init__(self) -> None:
        n = self.data.scheme.n
        self.target.check(n)
        if self.prices.n != n:
            raise DimensionError(f"prices on {self.prices.n} products, data on {n}")
        if self.sense not in ("min", "max"):
            raise ValueError("sense must be 'min' or 'max'")
        mode = ConstraintMode(self.mode)
        object.__setattr__(self, "mode", mode)
        if mode is ConstraintMode.INTERVAL and self.data.intervals is None:
            raise ValueError("interval mode needs a data vector with intervals")
        if mode is not ConstraintMode.INTERVAL and self.data.intervals is not None:
            raise ValueError("interval data given; use mode='interval'")

    @property
    def n(self) -> int:
        return self.data.scheme.n

    def signed_prices(self) -> np.ndarray:
        """Prices as seen by a minimization: negated for ``sense='max'``."""
        p = self.prices.as_array()
        return p if self.sense == "min" else -p


@dataclass(frozen=True)
class RobustResult:
    """Outcome of a robust estimator.

    ``status`` is ``optimal`` for exact methods, ``bound`` for relaxations
    that stopped with a valid but possibly loose bound, and ``infeasible`` /
    ``unbounded`` when the LP says so (``bound`` is then NaN).
    """

    bound: float
    method: str
    status: str
    witness: SparseChoiceModel | None = None
    certificate: dict | None = None
    rounds: tuple[float, ...] = ()
    certified: bool = False
    log: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.status in ("optimal", "bound")

    def to_json(self) -> dict:
        out: dict = {"bound": None if math.isnan(self.bound) else self.bound,
                     "method": self.method, "status": self.status}
        if self.certificate is not None:
            out["certificate"] = self.certificate
        if self.rounds:
            out["rounds"] = list(self.rounds)
        return out


def _failed(method: str, status: LpStatus, *log: str) -> RobustResult:
    return RobustResult(math.nan, method, status.value, log=tuple(log))


def _finish(q: RobustQuery, method: str, value: float, **kw) -> RobustResult:
    bound = value if q.sense == "min" else -value
    return RobustResult(float(bound), method, kw.pop("status", "optimal"), **kw)


# ---------------------------------------------------------------------------
# Dual variables of the data constraints


@dataclass
class _DataDuals:
    """``alpha_t`` written as a signed sum of LP variables, per data row."""

    terms: list[list[tuple[int, float]]]

    def value(self, x: np.ndarray) -> np.ndarray:
        return np.array([sum(c * x[v] for v, c in row) for row in self.terms])


def _add_data_duals(lp: LpBuilder, data: DataVector, mode: ConstraintMode) -> _DataDuals:
    """Add dual variables for the data rows with their objective coefficients.

    Equality rows give a free ``alpha_t`` with cost ``y_t``; ``>=`` rows a
    nonnegative one.  An interval row splits into a nonnegative multiplier
    for ``a_t`` (dropped when ``a_t <= 0``) and one for ``b_t`` (dropped
    when ``b_t >= 1``), since bounds outside ``[0, 1]`` cannot bind.
    """
    terms: list[list[tuple[int, float]]] = []
    if mode is ConstraintMode.INTERVAL:
        for a, b in data.intervals:
            row = []
            if a > 0:
                row.append((int(lp.add_vars(1, cost=a)[0]), 1.0))
            if b < 1:
                row.append((int(lp.add_vars(1, cost=-b)[0]), -1.0))
            terms.append(row)
        return _DataDuals(terms)
    lower = -math.inf if mode is ConstraintMode.EQ else 0.0
    idx = lp.add_vars(len(data.values), lower=lower, cost=data.y)
    return _DataDuals([[(int(v), 1.0)] for v in idx])


def _expand(duals: _DataDuals, coef: dict[int, float]) -> tuple[list[int], list[float]]:
    """Turn ``sum_t coef[t] * alpha_t`` into LP variable indices and coefficients."""
    acc: dict[int, float] = {}
    for t, c in coef.items():
        for v, s in duals.terms[t]:
            acc[v] = acc.get(v, 0.0) + c * s
    return list(acc), list(acc.values())


# ---------------------------------------------------------------------------
# Brute force over all rank lists


def _check_enumerable(n: int) -> None:
    if n > MAX_ENUM_N:
        raise ChoiceError(f"explicit enumeration of {n}! rank lists refused (limit {MAX_ENUM_N} products)")


def _primal_rows(lp: LpBuilder, A: np.ndarray, data: DataVector, mode: ConstraintMode) -> None:
    for t in range(A.shape[0]):
        cols = np.flatnonzero(A[t])
        if mode is ConstraintMode.INTERVAL:
            a, b = data.intervals[t]
            if a > 0:
                lp.add_row(cols, 1.0, ">=", a)
            if b < 1:
                lp.add_row(cols, 1.0, "<=", b)
        elif mode is ConstraintMode.GE:
            lp.add_row(cols, 1.0, ">=", data.values[t])
        else:
            lp.add_row(cols, 1.0, "<=", data.values[t] + EQ_BAND)
            lp.add_row(cols, 1.0, ">=", data.values[t] - EQ_BAND)


def robust_bruteforce(q: RobustQuery) -> RobustResult:
    """Solve the robust program literally, one variable per rank list.

    Equality rows carry a ``+-1e-9`` band so that marginals computed in
    floating point stay feasible.  The witness is the optimal basic
    solution; ``certificate['support']`` is its number of atoms above
    ``1e-8`` (band artefacts live at the ``1e-9`` scale).
    """
    _check_enumerable(q.n)
    ranks = all_rankings(q.n)
    A = a_matrix(ranks, q.data.scheme)
    rev = q.signed_prices()[purchases(ranks, q.target)]
    lp = LpBuilder()
    lam = lp.add_vars(len(ranks), cost=rev)
    _primal_rows(lp, A, q.data, q.mode)
    lp.add_row(lam, 1.0, "=", 1.0)
    sol = lpmod.solve(lp.build("min"))
    if not sol.ok:
        return _failed("brute", sol.status, "data inconsistent with every distribution over rank lists")
    x = np.clip(sol.x, 0.0, None)
    keep = np.flatnonzero(x > SUPPORT_TOL)
    witness = SparseChoiceModel.from_weights(ranks[keep], x[keep])
    cert = {"support": int(keep.size), "rows": int(A.shape[0])}
    return _finish(q, "brute", sol.objective, witness=witness, certificate=cert, certified=True)


# ---------------------------------------------------------------------------
# Sampled dual


def uniform_sampler(n: int) -> Callable[[np.random.Generator, int], np.ndarray]:
    """Uniform rank lists; a larger draw from the same seed extends a smaller one."""

    def draw(rng: np.random.Generator, size: int) -> np.ndarray:
        return np.argsort(rng.random((size, n)), axis=1) + 1

    return draw


def robust_sampled_dual(q: RobustQuery, n_samples: int = 1000, *, seed: int = 0,
                        sampler: Callable[[np.random.Generator, int], np.ndarray] | None = None,
                        rank_lists: np.ndarray | None = None) -> RobustResult:
    """Dual LP keeping only the constraints of sampled rank lists.

    Each distinct sampled ``sigma`` contributes ``alpha . A(sigma) + nu <= p_j``
    where ``j`` is the product ``sigma`` buys from the target.  Dropping
    constraints can only raise the maximum, so the value is an upper bound
    on the minimum revenue.  ``rank_lists`` bypasses sampling.
    """
    if q.sense != "min":
        raise ValueError("the sampled dual bounds the minimum revenue; use sense='min'")
    if rank_lists is None:
        draw = sampler or uniform_sampler(q.n)
        rank_lists = draw(np.random.default_rng(seed), n_samples) if n_samples > 0 else np.zeros((0, q.n), int)
    ranks = np.unique(np.asarray(rank_lists, dtype=int).reshape(-1, q.n), axis=0)
    lp = LpBuilder()
    duals = _add_data_duals(lp, q.data, q.mode)
    nu = int(lp.add_vars(1, lower=-math.inf, cost=1.0)[0])
    p = q.signed_prices()
    if len(ranks):
        A = a_matrix(ranks, q.data.scheme)
        chosen = purchases(ranks, q.target)
        for s in range(len(ranks)):
            idx, coef = _expand(duals, {int(t): 1.0 for t in np.flatnonzero(A[:, s])})
            lp.add_row(idx + [nu], coef + [1.0], "<=", p[chosen[s]])
    sol = lpmod.solve(lp.build("max"))
    if not sol.ok:
        advice = "too few sampled constraints; raise n_samples" if sol.status is LpStatus.UNBOUNDED else ""
        return _failed("sampled", sol.status, advice)
    alpha = duals.value(sol.x)
    cert = {"alpha": alpha.tolist(), "nu": float(sol.x[nu]), "constraints": int(len(ranks))}
    return _finish(q, "sampled", sol.objective, status="bound", certificate=cert)


# ---------------------------------------------------------------------------
# Ranking data: exact dual through assignment polytopes


def robust_ranking_exact(q: RobustQuery) -> RobustResult:
    """Exact robust value for ranking data.

    Rank lists buying ``j`` at rank ``d`` are the perfect matchings of
    ranks to products with cell ``(d, j)`` fixed and cells ``(r, i)`` with
    ``i`` offered and ``r < d`` removed.  The matching polytope is integral,
    so its LP dual (one potential per product and per rank) gives an exact,
    polynomial-size description of ``max alpha . A(sigma)`` over that set.
    """
    scheme = q.data.scheme
    if scheme.kind is not SchemeKind.RANKING:
        raise ValueError("robust_ranking_exact needs ranking data")
    n = q.n
    lp = LpBuilder()
    duals = _add_data_duals(lp, q.data, q.mode)
    nu = int(lp.add_vars(1, lower=-math.inf, cost=1.0)[0])
    p = q.signed_prices()
    members = q.target.members

    def cell(r: int, i: int) -> int:
        return (r - 1) * n + i

    blocks = []
    for j in members:
        others = set(members) - {j}
        for d in range(1, n - len(members) + 2):
            gamma = lp.add_vars(2 * n, lower=-math.inf)
            used = [int(gamma[i]) for i in range(n) if i != j] + [int(gamma[n + r - 1]) for r in range(1, n + 1) if r != d]
            idx, coef = _expand(duals, {cell(d, j): 1.0})
            lp.add_row(used + [nu] + idx, [1.0] * len(used) + [1.0] + coef, "<=", p[j])
            for r in range(1, n + 1):
                if r == d:
                    continue
                for i in range(n):
                    if i == j or (i in others and r < d):
                        continue
                    idx, coef = _expand(duals, {cell(r, i): -1.0})
                    lp.add_row([int(gamma[i]), int(gamma[n + r - 1])] + idx, [1.0, 1.0] + coef, ">=", 0.0)
            blocks.append((j, d))
    sol = lpmod.solve(lp.build("max"))
    if not sol.ok:
        status = LpStatus.INFEASIBLE if sol.status is LpStatus.UNBOUNDED else sol.status
        return _failed("ranking", status, "ranking data inconsistent with every distribution")
    alpha = duals.value(sol.x)
    cert = {"alpha": alpha.tolist(), "nu": float(sol.x[nu]), "blocks": [list(b) for b in blocks]}
    return _finish(q, "ranking", sol.objective, certificate=cert, certified=True)


# ---------------------------------------------------------------------------
# Pairwise-order relaxation shared by the cutting plane and censored LPs


def _literals(scheme: ObservationScheme) -> list[tuple[tuple[int, int], ...]]:
    """Each data row as an AND of pairwise preferences ``(i, k)`` meaning ``i`` before ``k``."""
    out = []
    for row in scheme.rows:
        tag = row[0]
        if tag == "pref":
            out.append(((row[1], row[2]),))
        elif tag == "cpref":
            i, j = row[1], row[2]
            out.append(((0, j),) if i == 0 else tuple(dict.fromkeys([(i, j), (i, 0)])))
        elif tag == "top":
            i = row[1]
            out.append(tuple((i, k) for k in range(scheme.n) if k != i))
        elif tag == "sale":
            i, m = row[1], scheme.assortments[row[2]]
            out.append(tuple((i, k) for k in m.members if k != i))
        else:
            raise ValueError(f"row {row} is not a conjunction of pairwise preferences")
    return out


@dataclass
class _Relaxation:
    """Linear relaxation of ``{A(sigma)}`` in pairwise-order coordinates.

    Coordinates ``w = (x, z)``: ``x_ik`` for ordered pairs in lexicographic
    order, then one ``z`` per data row that needs an auxiliary variable.
    Base rows (equalities and ``<=`` only) are stored with a block name so
    that duals can be reported per block.
    """

    n: int
    literals: list[tuple[tuple[int, int], ...]]
    upper_only: bool
    aux_always: bool
    pairs: list[tuple[int, int]] = field(init=False)
    row_map: list[tuple] = field(init=False)
    rows: list[tuple[str, list[int], list[float], str, float]] = field(init=False)

    def __post_init__(self) -> None:
        n = self.n
        self.pairs = [(i, k) for i in range(n) for k in range(n) if i != k]
        pid = {e: c for c, e in enumerate(self.pairs)}
        self.pid = pid
        nx = len(self.pairs)
        self.row_map = []
        rows: list = []
        nz = 0
        for lits in self.literals:
            if not lits:
                self.row_map.append(("const",))
            elif len(lits) == 1 and not self.aux_always:
                self.row_map.append(("x", pid[lits[0]]))
            else:
                z = nx + nz
                nz += 1
                self.row_map.append(("z", z))
                for e in lits:
                    name = "omega2" if e[1] == 0 and e[0] != 0 else "omega1"
                    rows.append((name, [z, pid[e]], [1.0, -1.0], "<=", 0.0))
                if not self.upper_only:
                    rows.append(("link_lower", [pid[e] for e in lits] + [z],
                                 [1.0] * len(lits) + [-1.0], "<=", len(lits) - 1.0))
        for i in range(n):
            for k in range(n):
                for l in range(n):
                    if len({i, k, l}) == 3:
                        rows.append(("gamma", [pid[(i, k)], pid[(k, l)], pid[(i, l)]], [1.0, 1.0, -1.0], "<=", 1.0))
        for i in range(n):
            for k in range(i + 1, n):
                rows.append(("delta", [pid[(i, k)], pid[(k, i)]], [1.0, 1.0], "=", 1.0))
        self.rows = rows
        self.nw = nx + nz

    def region_rows(self, j: int, target: Assortment, fixes: tuple[tuple[int, int], ...]) -> list:
        rows = list(self.rows)
        for i in target.members:
            if i != j:
                rows.append(("theta", [self.pid[(j, i)]], [1.0], "=", 1.0))
        for c, v in fixes:
            rows.append(("branch", [c], [1.0], "=", float(v)))
        return rows

    def objective_map(self) -> tuple[list[list[int]], list[int]]:
        """Data rows feeding each coordinate, and rows that are constant 1."""
        feeds: list[list[int]] = [[] for _ in range(self.nw)]
        const = []
        for t, m in enumerate(self.row_map):
            if m[0] == "const":
                const.append(t)
            else:
                feeds[m[1]].append(t)
        return feeds, const

    def separate(self, rows: list, g: np.ndarray) -> lpmod.LpSolution:
        lp = LpBuilder()
        w = lp.add_vars(self.nw, cost=g)
        for _, idx, coef, rel, rhs in rows:
            lp.add_row(w[idx], coef, rel, rhs)
        return lpmod.solve(lp.build("max"))


@dataclass(frozen=True)
class _Region:
    j: int
    fixes: tuple[tuple[int, int], ...] = ()


def _master(q: RobustQuery, relax: _Relaxation, regions: list[_Region], mode: ConstraintMode):
    """The dual LP with each region's ``max alpha . w`` replaced by its LP dual."""
    lp = LpBuilder()
    duals = _add_data_duals(lp, q.data, mode)
    nu = int(lp.add_vars(1, lower=-math.inf, cost=1.0)[0])
    p = q.signed_prices()
    feeds, const = relax.objective_map()
    region_vars = []
    for reg in regions:
        rows = relax.region_rows(reg.j, q.target, reg.fixes)
        dv = [int(lp.add_vars(1, lower=-math.inf if rel == "=" else 0.0)[0]) for _, _, _, rel, _ in rows]
        idx, coef = _expand(duals, {t: 1.0 for t in const})
        cap_idx = dv + [nu] + idx
        cap_coef = [r[4] for r in rows] + [1.0] + coef
        lp.add_row(cap_idx, cap_coef, "<=", p[reg.j])
        cols: list[dict[int, float]] = [dict() for _ in range(relax.nw)]
        for r, (_, idx_r, coef_r, _, _) in enumerate(rows):
            for c, a in zip(idx_r, coef_r):
                cols[c][dv[r]] = cols[c].get(dv[r], 0.0) + a
        for c in range(relax.nw):
            idx, coef = _expand(duals, {t: -1.0 for t in feeds[c]})
            lp.add_row(list(cols[c]) + idx, list(cols[c].values()) + coef, ">=", 0.0)
        region_vars.append((rows, dv))
    sol = lpmod.solve(lp.build("max"))
    return sol, duals, nu, region_vars


def _data_mode_for_cut(q: RobustQuery) -> tuple[bool, ConstraintMode]:
    """Upper-only linking is valid exactly when every ``alpha_t`` is nonnegative."""
    return q.mode is ConstraintMode.GE, q.mode


def robust_cutting_plane(q: RobustQuery, max_rounds: int = 10) -> RobustResult:
    """Lower bounds from pairwise-order relaxations refined by splitting.

    Round ``k`` solves the dual with every region relaxed to its linear
    description (antisymmetry, transitivity, linking of conjunctive data
    rows, fixings).  It then maximizes ``alpha . w`` over each region; if
    every maximizer is integral the procedure stops (``certified``).
    Otherwise the fractional region with the largest ``alpha . w + nu - p_j``
    is split on its coordinate closest to 0.5 (ties to the lowest index).
    """
    scheme = q.data.scheme
    if scheme.kind is SchemeKind.RANKING:
        raise ValueError("ranking data: use robust_ranking_exact")
    if max_rounds < 1:
        raise ValueError("max_rounds must be >= 1")
    upper_only, mode = _data_mode_for_cut(q)
    relax = _Relaxation(q.n, _literals(scheme), upper_only=upper_only, aux_always=False)
    regions = [_Region(j) for j in q.target.members]
    p = q.signed_prices()
    bounds: list[float] = []
    log: list[str] = []
    certified = False
    feeds, const = relax.objective_map()
    sol = duals = nu = None
    for rnd in range(1, max_rounds + 1):
        sol, duals, nu, _ = _master(q, relax, regions, mode)
        if not sol.ok:
            status = LpStatus.INFEASIBLE if sol.status is LpStatus.UNBOUNDED else sol.status
            return _failed("cut", status, f"round {rnd}: master LP {sol.status.value}")
        bounds.append(sol.objective if q.sense == "min" else -sol.objective)
        alpha = duals.value(sol.x)
        g = np.array([alpha[f].sum() for f in feeds])
        slack_const = float(alpha[const].sum()) + float(sol.x[nu])
        worst = None
        for r, reg in enumerate(regions):
            sep = relax.separate(relax.region_rows(reg.j, q.target, reg.fixes), g)
            if not sep.ok:
                continue
            w = sep.x
            frac = np.minimum(np.abs(w), np.abs(w - 1.0))
            if np.all(frac <= INTEGRAL_TOL):
                continue
            viol = sep.objective + slack_const - p[reg.j]
            if worst is None or viol > worst[0] + 1e-12:
                worst = (viol, r, w)
        if worst is None:
            certified = True
            log.append(f"round {rnd}: all separation maximizers integral")
            break
        if rnd == max_rounds:
            log.append(f"round {rnd}: round limit reached with fractional maximizers")
            break
        _, r, w = worst
        c = int(np.argmin(np.abs(w - 0.5)))
        parent = regions.pop(r)
        children = []
        for v in (0, 1):
            child = _Region(parent.j, parent.fixes + ((c, v),))
            test = relax.separate(relax.region_rows(child.j, q.target, child.fixes), np.zeros(relax.nw))
            if test.ok:
                children.append(child)
        regions[r:r] = children
        log.append(f"round {rnd}: split region of product {parent.j} on coordinate {c}, kept {len(children)}")
    alpha = duals.value(sol.x)
    cert = {"alpha": alpha.tolist(), "nu": float(sol.x[nu]), "regions": len(regions)}
    return RobustResult(float(bounds[-1]), "cut", "optimal" if certified else "bound", certificate=cert,
                        rounds=tuple(float(b) for b in bounds), certified=certified, log=tuple(log))


def robust_censored_comparison(q: RobustQuery) -> RobustResult:
    """One-shot lower bound for censored comparison data.

    Data enter as ``A lambda >= y`` so ``alpha >= 0``, which lets each
    censored row be linked to its pairwise literals from above only
    (``z <= x_ik`` and ``z <= x_i0``).  The certificate lists the dual
    values of each constraint block per offered product: ``omega1``,
    ``omega2`` (linking), ``gamma`` (transitivity), ``delta``
    (antisymmetry), ``theta`` (the offered product is bought).
    """
    scheme = q.data.scheme
    if scheme.kind is not SchemeKind.CENSORED:
        raise ValueError("robust_censored_comparison needs censored comparison data")
    if q.sense != "min":
        raise ValueError("the censored comparison LP bounds the minimum revenue")
    if q.mode is not ConstraintMode.GE:
        raise ValueError("the censored comparison LP uses A lambda >= y; set mode='ge'")
    relax = _Relaxation(q.n, _literals(scheme), upper_only=True, aux_always=True)
    regions = [_Region(j) for j in q.target.members]
    sol, duals, nu, region_vars = _master(q, relax, regions, ConstraintMode.GE)
    if not sol.ok:
        return _failed("censored", sol.status)
    blocks = {}
    for reg, (rows, dv) in zip(regions, region_vars):
        per: dict[str, list[float]] = {}
        for (name, *_), v in zip(rows, dv):
            per.setdefault(name, []).append(float(sol.x[v]))
        blocks[str(reg.j)] = per
    cert = {"alpha": duals.value(sol.x).tolist(), "nu": float(sol.x[nu]), "blocks": blocks}
    return _finish(q, "censored", sol.objective, status="bound", certificate=cert)


# ---------------------------------------------------------------------------
# Interval data from sales counts


DEFAULT_Z = 3.15


def intervals_from_counts(data, z: float = DEFAULT_Z) -> DataVector:
    """Confidence intervals ``yhat (1 +- z eps)`` for every (product, assortment) tuple.

    ``yhat = C_i / sum_k C_k`` and ``eps = sqrt((1 - yhat) / C_i)``.  Tuples
    whose count is unusable (zero or censored) get the vacuous ``[0, 1]``.
    The no-purchase tuple of each assortment is kept like any other.
    """
    if z < 0:
        raise ValueError("z must be >= 0")
    scheme = ObservationScheme.transaction(data.n, data.assortments)
    values, intervals = [], []
    for a in range(len(data.assortments)):
        total = data.arrivals(a)
        for k, c in enumerate(data.counts[a]):
            yhat = c / total if total else 0.0
            values.append(yhat)
            if total == 0 or not data.usable(a, k) or c == 0:
                intervals.append((0.0, 1.0))
                continue
            eps = math.sqrt(max(1.0 - yhat, 0.0) / c)
            intervals.append((yhat * (1 - z * eps), yhat * (1 + z * eps)))
    return DataVector(scheme, tuple(values), tuple(intervals))


def robust_conversion_interval(data, target: Assortment, z: float = DEFAULT_Z, *,
                               prices: PriceVector | None = None, sense: str = "min") -> RobustResult:
    """Minimum conversion rate (or revenue, given prices) under interval data from counts."""
    _check_enumerable(data.n)
    dv = intervals_from_counts(data, z)
    prices = PriceVector.unit(data.n) if prices is None else prices
    res = robust_bruteforce(RobustQuery(dv, target, prices, sense, ConstraintMode.INTERVAL))
    if not res.ok:
        return RobustResult(math.nan, "interval", res.status,
                            log=(f"infeasible at z={z}; find_min_feasible_z gives the smallest feasible width",))
    cert = dict(res.certificate or {}, z=z)
    return RobustResult(res.bound, "interval", res.status, witness=res.witness, certificate=cert, certified=True)


def interval_feasible(data, z: float) -> bool:
    _check_enumerable(data.n)
    dv = intervals_from_counts(data, z)
    ranks = all_rankings(data.n)
    A = a_matrix(ranks, dv.scheme)
    lp = LpBuilder()
    lam = lp.add_vars(len(ranks))
    _primal_rows(lp, A, dv, ConstraintMode.INTERVAL)
    lp.add_row(lam, 1.0, "=", 1.0)
    return lpmod.solve(lp.build("min")).ok


def find_min_feasible_z(data, *, tol: float = 1e-3, z_max: float = 1e6) -> float:
    """Smallest ``z`` (to within ``tol``) whose interval data admit a distribution.

    Feasibility is monotone in ``z`` because the intervals are nested.
    """
    if interval_feasible(data, 0.0):
        return 0.0
    hi = 1.0
    while not interval_feasible(data, hi):
        hi *= 2.0
        if hi > z_max:
            raise ChoiceError("interval data infeasible for every z")
    lo = hi / 2.0 if hi > 1.0 else 0.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if interval_feasible(data, mid):
            hi = mid
        else:
            lo = mid
    return hi


METHODS = ("brute", "sampled", "ranking", "cut", "censored", "interval")


__all__ = [
    "ConstraintMode", "RobustQuery", "RobustResult", "robust_bruteforce", "robust_sampled_dual",
    "robust_ranking_exact", "robust_cutting_plane", "robust_censored_comparison", "robust_conversion_interval",
    "intervals_from_counts", "find_min_feasible_z", "interval_feasible", "uniform_sampler", "METHODS",
]
