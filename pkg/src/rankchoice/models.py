"""Parametric ground-truth choice models and data simulation.

These are the random-utility families used to generate synthetic data and
to score robust estimates: MNL, nested / cross-nested logit, and mixed MNL.
Also here: the random sparse-model generator, the AMZN presets, transaction
simulation, and a plain MNL maximum-likelihood fit used as a baseline.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from typing import Protocol, Sequence

import numpy as np

from .core import (
    Assortment,
    ChoiceError,
    DataVector,
    DimensionError,
    ObservationScheme,
    PriceVector,
    RankList,
    SchemeKind,
    SparseChoiceModel,
    all_rankings,
)

GH_ORDER = 32
MC_DRAWS = 100_000
V_CLAMP = 30.0
STEP_TOL = 1e-4


class ChoiceModel(Protocol):
    n: int

    def choice_probs(self, m: Assortment) -> np.ndarray: ...


def _check_member(j: int, m: Assortment) -> int:
    if j not in m:
        raise ValueError(f"product {j} not in assortment {m.members}")
    return m.members.index(j)


@dataclass(frozen=True)
class MnlModel:
    """``P(j|M) = w_j / sum_{i in M} w_i``."""

    weights: tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(x) for x in self.weights)
        if len(w) < 2 or any(not (x > 0 and math.isfinite(x)) for x in w):
            raise ValueError("MNL weights must be positive and finite")
        object.__setattr__(self, "weights", w)

    @classmethod
    def from_utilities(cls, utilities: Sequence[float]) -> "MnlModel":
        """Mean utilities of products ``1..N-1``; the no-purchase utility is 0."""
        return cls((1.0,) + tuple(math.exp(v) for v in utilities))

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def utilities(self) -> np.ndarray:
        return np.log(self.weights)

    def choice_probs(self, m: Assortment) -> np.ndarray:
        m.check(self.n)
        w = np.asarray(self.weights)[list(m.members)]
        return w / w.sum()

    def prob(self, j: int, m: Assortment) -> float:
        return mnl_prob(self, j, m)

    def sample_rankings(self, size: int, rng: np.random.Generator) -> np.ndarray:
        """Draw rank vectors by the Gumbel-max construction of the logit model."""
        util = np.log(self.weights) + rng.gumbel(size=(size, self.n))
        order = np.argsort(-util, axis=1)
        ranks = np.empty_like(order)
        np.put_along_axis(ranks, order, np.arange(1, self.n + 1)[None, :], axis=1)
        return ranks


def mnl_prob(model: MnlModel, j: int, m: Assortment) -> float:
    return float(model.choice_probs(m)[_check_member(j, m)])


@dataclass(frozen=True)
class NestedLogitModel:
    """Nested logit with the no-purchase option spread across nests.

    ``alpha[l]`` is the membership of product 0 in nest ``l``.  An indicator
    ``alpha`` gives the classical nested logit; fractional memberships give
    the cross-nested variant.  Nests partition products ``1..N-1`` (a nest
    may be empty, holding only its share of the no-purchase option).
    """

    weights: tuple[float, ...]
    nests: tuple[tuple[int, ...], ...]
    rho: float
    alpha: tuple[float, ...]

    def __post_init__(self) -> None:
        w = tuple(float(x) for x in self.weights)
        if any(not x > 0 for x in w):
            raise ValueError("weights must be positive")
        nests = tuple(tuple(int(i) for i in nest) for nest in self.nests)
        flat = sorted(i for nest in nests for i in nest)
        if flat != list(range(1, len(w))):
            raise ValueError("nests must partition products 1..N-1")
        alpha = tuple(float(a) for a in self.alpha)
        if len(alpha) != len(nests) or any(a < 0 for a in alpha):
            raise ValueError("one nonnegative alpha per nest required")
        if not 0 < self.rho <= 1:
            raise ValueError("rho must lie in (0, 1]")
        if abs(sum(a ** self.rho for a in alpha) - 1.0) > 1e-9:
            raise ValueError("alpha_l ** rho must sum to 1")
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "nests", nests)
        object.__setattr__(self, "alpha", alpha)

    @property
    def n(self) -> int:
        return len(self.weights)

    @property
    def is_cross_nested(self) -> bool:
        return any(0 < a < 1 for a in self.alpha)

    def choice_probs(self, m: Assortment) -> np.ndarray:
        m.check(self.n)
        w = np.asarray(self.weights)
        offered = set(m.products)
        out = np.zeros(len(m))
        nest_w = []
        for nest, a in zip(self.nests, self.alpha):
            members = [i for i in nest if i in offered]
            nest_w.append((members, a * w[0] + sum(w[i] for i in members)))
        denom = sum(tot ** self.rho for _, tot in nest_w if tot > 0)
        for members, tot in nest_w:
            if tot <= 0:
                continue
            share = tot ** self.rho / denom
            for i in members:
                out[m.members.index(i)] = share * w[i] / tot
        out[0] = 1.0 - out[1:].sum()
        return out

    def prob(self, j: int, m: Assortment) -> float:
        return nl_prob(self, j, m)


def nl_prob(model: NestedLogitModel, j: int, m: Assortment) -> float:
    return float(model.choice_probs(m)[_check_member(j, m)])


@dataclass(frozen=True)
class MmnlModel:
    """Mixed logit with independent normal coefficients.

    Utility of product ``j`` is ``offsets[j] + beta . features[j]`` with
    ``beta_i ~ Normal(mean[i], sd[i]**2)``.  The mixing integral is taken by
    Gauss-Hermite quadrature when exactly one coefficient is random and by
    seeded Monte Carlo otherwise, so the model is deterministic either way.
    """

    features: np.ndarray
    mean: np.ndarray
    sd: np.ndarray
    offsets: np.ndarray | None = None
    n_draws: int = MC_DRAWS
    seed: int = 0
    quad_order: int = GH_ORDER
    _nodes: np.ndarray = field(init=False, repr=False, compare=False)
    _node_w: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        x = np.atleast_2d(np.asarray(self.features, dtype=float))
        mean = np.asarray(self.mean, dtype=float).ravel()
        sd = np.asarray(self.sd, dtype=float).ravel()
        off = np.zeros(x.shape[0]) if self.offsets is None else np.asarray(self.offsets, dtype=float).ravel()
        if mean.size != x.shape[1] or sd.size != x.shape[1] or off.size != x.shape[0]:
            raise DimensionError("features, mean, sd and offsets disagree")
        if np.any(sd < 0):
            raise ValueError("coefficient standard deviations must be >= 0")
        if np.any(x[0] != 0) or off[0] != 0:
            raise ValueError("the no-purchase option must have zero utility")
        for name, val in (("features", x), ("mean", mean), ("sd", sd), ("offsets", off)):
            object.__setattr__(self, name, val)
        random = np.flatnonzero(sd > 0)
        if random.size == 0:
            nodes, wts = mean[None, :], np.ones(1)
        elif random.size == 1:
            z, wts = np.polynomial.hermite_e.hermegauss(self.quad_order)
            wts = wts / wts.sum()
            nodes = np.repeat(mean[None, :], z.size, axis=0)
            nodes[:, random[0]] += sd[random[0]] * z
        else:
            z = np.random.default_rng(self.seed).standard_normal((self.n_draws, random.size))
            nodes = np.repeat(mean[None, :], self.n_draws, axis=0)
            nodes[:, random] += z * sd[random]
            wts = np.full(self.n_draws, 1.0 / self.n_draws)
        object.__setattr__(self, "_nodes", nodes)
        object.__setattr__(self, "_node_w", wts)

    @classmethod
    def relative(cls, features, theta, mu, s: float, **kw) -> "MmnlModel":
        """``beta_i = (1 + eta_i) theta_i`` with ``eta_i ~ Normal(mu_i, s**2)``."""
        theta = np.asarray(theta, dtype=float)
        mu = np.broadcast_to(np.asarray(mu, dtype=float), theta.shape)
        return cls(features, theta * (1.0 + mu), np.abs(theta) * s, **kw)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def integration(self) -> str:
        k = int(np.count_nonzero(self.sd))
        return "exact" if k == 0 else "gauss-hermite" if k == 1 else "monte-carlo"

    def choice_probs(self, m: Assortment) -> np.ndarray:
        m.check(self.n)
        idx = list(m.members)
        util = self.offsets[idx][None, :] + self._nodes @ self.features[idx].T
        util -= util.max(axis=1, keepdims=True)
        e = np.exp(util)
        p = e / e.sum(axis=1, keepdims=True)
        return self._node_w @ p

    def prob(self, j: int, m: Assortment) -> float:
        return mmnl_prob(self, j, m)

    def mean_mnl(self) -> MnlModel:
        """The MNL obtained by freezing every coefficient at its mean."""
        return MnlModel(tuple(np.exp(self.offsets + self.features @ self.mean)))


def mmnl_prob(model: MmnlModel, j: int, m: Assortment) -> float:
    return float(model.choice_probs(m)[_check_member(j, m)])


def to_rank_distribution(model: MnlModel) -> SparseChoiceModel:
    """The rank-list distribution whose choice probabilities are the MNL's.

    Uses the sequential (Plackett-Luce) construction: pick the top product
    with probability proportional to weight, then the next among the rest.
    """
    if model.n > 8:
        raise ChoiceError(f"refusing to enumerate {model.n}! rank lists (limit 8 products)")
    ranks = all_rankings(model.n).astype(int)
    w = np.asarray(model.weights)
    order = np.argsort(ranks, axis=1)
    ws = w[order]
    tail = np.cumsum(ws[:, ::-1], axis=1)[:, ::-1]
    probs = np.prod(ws / tail, axis=1)
    return SparseChoiceModel.from_weights(ranks, probs)


# ---------------------------------------------------------------------------
# Data generation


def simulate_pairwise_marginals(model: ChoiceModel) -> DataVector:
    """Exact censored-comparison data from a parametric model.

    Row ``(i, j)`` with ``i != 0`` holds ``P(i | {0, i, j})``; row ``(0, j)``
    holds ``P(0 | {0, j})``.
    """
    scheme = ObservationScheme.censored(model.n)
    values = []
    for _, i, j in scheme.rows:
        m = Assortment.of((i, j))
        values.append(float(model.choice_probs(m)[m.members.index(i)]))
    return DataVector(scheme, tuple(np.clip(values, 0.0, 1.0)))


def transaction_marginals(model: ChoiceModel, assortments: Sequence[Assortment]) -> DataVector:
    """Exact sales fractions ``P(i | M)`` for every member of every assortment."""
    scheme = ObservationScheme.transaction(model.n, assortments)
    values = np.concatenate([model.choice_probs(a) for a in scheme.assortments])
    return DataVector(scheme, tuple(np.clip(values, 0.0, 1.0)))


@dataclass(frozen=True)
class Transactions:
    """Sales counts per offered assortment.

    ``counts[a][k]`` is the number of arrivals that bought ``assortments[a].members[k]``
    (``k == 0`` is the no-purchase count).  ``censor_at`` marks product counts
    at or below the threshold as unusable, the way sparse sales cells are
    dropped in practice; the raw counts are kept.
    """

    n: int
    assortments: tuple[Assortment, ...]
    counts: tuple[tuple[int, ...], ...]
    censor_at: int | None = None

    def __post_init__(self) -> None:
        if len(self.assortments) != len(self.counts):
            raise DimensionError("one count row per assortment required")
        for a, c in zip(self.assortments, self.counts):
            a.check(self.n)
            if len(c) != len(a):
                raise DimensionError(f"{len(c)} counts for assortment {a.members}")
            if any(v < 0 for v in c):
                raise ValueError("negative count")

    def arrivals(self, a: int) -> int:
        return int(sum(self.counts[a]))

    def usable(self, a: int, k: int) -> bool:
        """Whether the count of member ``k`` of assortment ``a`` counts as observed."""
        c = self.counts[a][k]
        if k == 0:
            return True
        return c > 0 and (self.censor_at is None or c > self.censor_at)

    def conversion(self, a: int) -> float:
        total = self.arrivals(a)
        return (total - self.counts[a][0]) / total if total else math.nan

    def subset(self, idx: Sequence[int]) -> "Transactions":
        return Transactions(self.n, tuple(self.assortments[i] for i in idx),
                            tuple(self.counts[i] for i in idx), self.censor_at)

    def with_censoring(self, threshold: int | None) -> "Transactions":
        return Transactions(self.n, self.assortments, self.counts, threshold)


def simulate_transactions(model: ChoiceModel, assortments: Sequence[Assortment], arrivals: int | Sequence[int],
                          rng: np.random.Generator, censor_at: int | None = None) -> Transactions:
    """Multinomial sales draws, one independent batch of arrivals per assortment."""
    if np.isscalar(arrivals):
        arrivals = [int(arrivals)] * len(assortments)
    counts = []
    for a, count in zip(assortments, arrivals):
        p = model.choice_probs(a)
        p = np.clip(p, 0.0, None)
        counts.append(tuple(int(v) for v in rng.multinomial(int(count), p / p.sum())))
    return Transactions(model.n, tuple(assortments), tuple(counts), censor_at)


@dataclass(frozen=True)
class GenerativeSpec:
    """Random sparse model: ``k`` uniform rank lists with weights uniform on ``[a, b]``."""

    k: int
    a: float = 1.0
    b: float = 2.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be >= 1")
        if not 0 < self.a <= self.b:
            raise ValueError("need 0 < a <= b")


def generate_random_model(spec: GenerativeSpec, n: int, rng: np.random.Generator | None = None) -> SparseChoiceModel:
    """Draw a sparse model; repeated rank lists are merged by adding their mass."""
    rng = np.random.default_rng(spec.seed) if rng is None else rng
    ranks = np.array([rng.permutation(n) + 1 for _ in range(spec.k)])
    weights = rng.uniform(spec.a, spec.b, size=spec.k)
    return SparseChoiceModel.from_weights(ranks, weights)


# ---------------------------------------------------------------------------
# MNL maximum likelihood


@dataclass(frozen=True)
class MnlFit:
    model: MnlModel
    log_likelihood: float
    converged: bool
    iterations: int
    clamped: tuple[int, ...]
    unobserved: tuple[int, ...]


def fit_mnl(data: Transactions, *, tol: float = 1e-6, max_iter: int = 500) -> MnlFit:
    """Maximum-likelihood MNL utilities with ``V_0 = 0`` pinned.

    Damped Newton ascent on the per-arrival log-likelihood.  Utilities are
    boxed to ``[-30, 30]``; products whose estimate runs into the box (never
    bought, or always bought) are reported in ``clamped``, and products never
    offered in ``unobserved``.  Converges when the projected gradient has
    infinity-norm at most ``tol`` and the Newton step is below ``STEP_TOL``.
    """
    n = data.n
    total = float(sum(data.arrivals(a) for a in range(len(data.assortments))))
    if total <= 0:
        raise ChoiceError("no arrivals to fit")
    offered = sorted({i for a in data.assortments for i in a.products})
    unobserved = tuple(i for i in range(1, n) if i not in offered)
    idx = [np.asarray(a.members) for a in data.assortments]
    cnt = [np.asarray(c, dtype=float) for c in data.counts]

    def evaluate(v: np.ndarray):
        ll, g, h = 0.0, np.zeros(n), np.zeros((n, n))
        for members, c in zip(idx, cnt):
            u = v[members]
            lse = np.logaddexp.reduce(u)
            p = np.exp(u - lse)
            tot = c.sum()
            ll += float(c @ (u - lse))
            g[members] += c - tot * p
            h[np.ix_(members, members)] -= tot * (np.diag(p) - np.outer(p, p))
        return ll / total, g / total, h / total

    v = np.zeros(n)
    v[list(unobserved)] = -V_CLAMP
    free_mask = np.ones(n, dtype=bool)
    free_mask[0] = False
    free_mask[list(unobserved)] = False
    ll, g, h = evaluate(v)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        at_low = (v <= -V_CLAMP + 1e-12) & (g <= tol)
        at_high = (v >= V_CLAMP - 1e-12) & (g >= -tol)
        active = free_mask & ~at_low & ~at_high
        f = np.flatnonzero(active)
        hf = h[np.ix_(f, f)]
        try:
            step = np.linalg.solve(hf - 1e-10 * np.eye(f.size), -g[f])
        except np.linalg.LinAlgError:
            step = g[f]
        if g[f] @ step <= 0:
            step = g[f]
        # a vanishing gradient alone is not enough: along a separating direction the
        # gradient decays like exp(-v) while Newton keeps proposing unit steps
        if np.max(np.abs(g[f]), initial=0.0) <= tol:
            if np.max(np.abs(step), initial=0.0) <= STEP_TOL:
                converged = True
                break
            # flat tail of a separated direction: jump to the box instead of crawling there
            room = np.where(step > 0, V_CLAMP - v[f], -V_CLAMP - v[f]) / np.where(step == 0, np.inf, step)
            cand = v.copy()
            cand[f] = np.clip(v[f] + np.min(room) * step, -V_CLAMP, V_CLAMP)
            ll_new, g_new, h_new = evaluate(cand)
            if np.min(room) > 0 and ll_new >= ll - 1e-12:
                v, ll, g, h = cand, ll_new, g_new, h_new
                continue
        t = 1.0
        while True:
            cand = v.copy()
            cand[f] = np.clip(v[f] + t * step, -V_CLAMP, V_CLAMP)
            ll_new, g_new, h_new = evaluate(cand)
            if ll_new >= ll - 1e-15 or t < 1e-12:
                break
            t *= 0.5
        v, ll, g, h = cand, ll_new, g_new, h_new
    clamped = tuple(int(i) for i in np.flatnonzero(free_mask & (np.abs(v) >= V_CLAMP - 1e-6)))
    return MnlFit(MnlModel(tuple(np.exp(v))), ll, converged, it, clamped, unobserved)


# ---------------------------------------------------------------------------
# Presets and stress-test families


@lru_cache(maxsize=1)
def _amzn_table() -> dict:
    with resources.files("rankchoice").joinpath("data/amzn.json").open() as fh:
        return json.load(fh)


def amzn_table() -> dict:
    """The AMZN preset file: attributes of 15 DVDs, fitted coefficients, CNL/MMNL settings."""
    return json.loads(json.dumps(_amzn_table()))


def amzn_features(n: int = 16) -> np.ndarray:
    """Attribute rows ``(1, price per disc, helpful votes)``; row 0 is the zero no-purchase row."""
    rows = _amzn_table()["products"][: n - 1]
    x = np.zeros((len(rows) + 1, 3))
    for k, r in enumerate(rows, start=1):
        x[k] = (1.0, r[3], r[4])
    return x


def amzn_utilities(n: int = 16) -> np.ndarray:
    """Mean utilities ``theta . x_j`` for products ``1..n-1``."""
    return (amzn_features(n) @ np.asarray(_amzn_table()["theta"]))[1:]


def amzn_prices(n: int = 16) -> PriceVector:
    rows = _amzn_table()["products"][: n - 1]
    return PriceVector((0.0,) + tuple(r[2] for r in rows))


def _check_amzn_n(n: int) -> None:
    if not 2 <= n <= 16:
        raise ValueError("AMZN presets cover at most 15 products (n <= 16)")


def amzn(n: int = 16) -> MnlModel:
    _check_amzn_n(n)
    return MnlModel.from_utilities(amzn_utilities(n))


def cnl_nests(n: int) -> tuple[tuple[int, ...], ...]:
    """AMZN nests at full size; contiguous near-equal blocks (at most 4) otherwise."""
    if n == 16:
        return tuple(tuple(nest) for nest in _amzn_table()["cnl"]["nests"])
    blocks = np.array_split(np.arange(1, n), min(4, n - 1))
    return tuple(tuple(int(i) for i in b) for b in blocks if b.size)


def cnl_from_weights(weights: Sequence[float], rho: float = 0.5) -> NestedLogitModel:
    nests = cnl_nests(len(weights))
    alpha = (1.0 / len(nests)) ** (1.0 / rho)
    return NestedLogitModel(tuple(weights), nests, rho, (alpha,) * len(nests))


def amzn_cnl(n: int = 16) -> NestedLogitModel:
    _check_amzn_n(n)
    return cnl_from_weights(amzn(n).weights, _amzn_table()["cnl"]["rho"])


def amzn_mmnl(n: int = 16, s: float | None = None, mu=0.0, *, n_draws: int = MC_DRAWS, seed: int = 0) -> MmnlModel:
    _check_amzn_n(n)
    s = _amzn_table()["mmnl"]["sd"] if s is None else s
    return MmnlModel.relative(amzn_features(n), _amzn_table()["theta"], mu, s, n_draws=n_draws, seed=seed)


FAMILIES = ("mnl-rand", "cnl-rand", "mmnl-rand", "amzn", "amzn-cnl", "amzn-mmnl")


def make_family_model(family: str, n: int, rng: np.random.Generator, *, s: float = 0.25,
                      mmnl_draws: int = MC_DRAWS) -> ChoiceModel:
    """One ground-truth model from a named family on ``n`` products.

    Random families draw ``ln w_j ~ U[-5, 5]`` (MNL, CNL) or coefficient
    shifts ``mu_i ~ U[-1, 1]`` (MMNL, relative sd ``s``).
    """
    if family == "mnl-rand":
        return MnlModel.from_utilities(rng.uniform(-5, 5, size=n - 1))
    if family == "cnl-rand":
        return cnl_from_weights(MnlModel.from_utilities(rng.uniform(-5, 5, size=n - 1)).weights)
    if family == "mmnl-rand":
        mu = rng.uniform(-1, 1, size=3)
        seed = int(rng.integers(2**31))
        return amzn_mmnl(n, s=s, mu=mu, n_draws=mmnl_draws, seed=seed)
    if family == "amzn":
        return amzn(n)
    if family == "amzn-cnl":
        return amzn_cnl(n)
    if family == "amzn-mmnl":
        return amzn_mmnl(n, s=s, n_draws=mmnl_draws, seed=int(rng.integers(2**31)))
    raise ValueError(f"unknown family {family!r}; expected one of {FAMILIES}")


def family_prices(family: str, n: int) -> PriceVector:
    """Prices used with every family: the AMZN list prices of the first ``n-1`` DVDs."""
    return amzn_prices(n)


def sample_rankings(model, size: int, rng: np.random.Generator) -> np.ndarray:
    """Draw rank vectors from a sparse model or anything with ``sample_rankings``."""
    if isinstance(model, SparseChoiceModel):
        pick = rng.choice(model.k, size=size, p=model.probs_array())
        return model.ranks_array()[pick]
    return model.sample_rankings(size, rng)


def is_rank_list_model(model) -> bool:
    return isinstance(model, SparseChoiceModel)


def scheme_supports_parametric(kind: SchemeKind) -> bool:
    """Schemes whose rows are choice probabilities a parametric model can evaluate exactly."""
    return kind in (SchemeKind.CENSORED, SchemeKind.TRANSACTION)


__all__ = [
    "ChoiceModel", "MnlModel", "NestedLogitModel", "MmnlModel", "MnlFit", "Transactions", "GenerativeSpec",
    "mnl_prob", "nl_prob", "mmnl_prob", "to_rank_distribution", "simulate_pairwise_marginals",
    "transaction_marginals", "simulate_transactions", "generate_random_model", "fit_mnl", "amzn", "amzn_cnl",
    "amzn_mmnl", "amzn_prices", "amzn_utilities", "amzn_features", "amzn_table", "make_family_model",
    "family_prices", "FAMILIES", "sample_rankings", "RankList",
]
