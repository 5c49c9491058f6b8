"""Domain types for the rank-list view of customer choice.

A customer type is a strict preference order over products ``0..N-1``
(product 0 is the no-purchase option).  A choice model is a finitely
supported distribution over such orders.  Observed data are linear
functionals of that distribution, described by an :class:`ObservationScheme`
which fixes the 0/1 matrix ``A`` implicitly: one row per observed quantity,
one column per rank list.

Ranks are 1-based throughout: ``ranks[i] == 1`` means product ``i`` is the
most preferred.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

PROB_TOL = 1e-12


class ChoiceError(Exception):
    """Base class for domain errors raised by this package."""


class DimensionError(ChoiceError, ValueError):
    """Objects disagree on the number of products."""


@dataclass(frozen=True)
class ProductUniverse:
    n: int

    def __post_init__(self) -> None:
        if self.n < 2:
            raise ValueError(f"need at least 2 products (including no-purchase), got {self.n}")

    @property
    def products(self) -> range:
        return range(self.n)


@dataclass(frozen=True)
class RankList:
    """A strict preference order.  ``ranks[i]`` is the position of product ``i``."""

    ranks: tuple[int, ...]

    def __post_init__(self) -> None:
        ranks = tuple(int(r) for r in self.ranks)
        if sorted(ranks) != list(range(1, len(ranks) + 1)):
            raise ValueError(f"ranks must be a permutation of 1..{len(ranks)}: {ranks}")
        object.__setattr__(self, "ranks", ranks)

    @classmethod
    def from_order(cls, order: Sequence[int]) -> "RankList":
        """Build from products listed most-preferred first."""
        ranks = [0] * len(order)
        for pos, product in enumerate(order):
            ranks[product] = pos + 1
        return cls(tuple(ranks))

    @property
    def n(self) -> int:
        return len(self.ranks)

    def order(self) -> tuple[int, ...]:
        """Products sorted most-preferred first."""
        return tuple(sorted(range(self.n), key=self.ranks.__getitem__))

    def prefers(self, i: int, j: int) -> bool:
        return self.ranks[i] < self.ranks[j]

    def choose(self, assortment: "Assortment") -> int:
        """The product this customer buys from ``assortment``."""
        return min(assortment.members, key=self.ranks.__getitem__)

    def __str__(self) -> str:
        return ">".join(str(i) for i in self.order())


@dataclass(frozen=True)
class Assortment:
    """An offer set.  Product 0 is always a member."""

    members: tuple[int, ...]

    def __post_init__(self) -> None:
        members = tuple(sorted(set(int(i) for i in self.members) | {0}))
        if members[0] < 0:
            raise ValueError(f"negative product id in {members}")
        object.__setattr__(self, "members", members)

    @classmethod
    def of(cls, products: Iterable[int]) -> "Assortment":
        return cls(tuple(products))

    @classmethod
    def parse(cls, text: str) -> "Assortment":
        """Parse ``"0,3,7"`` (product 0 is added if missing)."""
        text = text.strip()
        if not text:
            return cls(())
        return cls(tuple(int(tok) for tok in text.split(",")))

    def __contains__(self, j: object) -> bool:
        return j in self.members

    def __len__(self) -> int:
        return len(self.members)

    def __iter__(self):
        return iter(self.members)

    @property
    def products(self) -> tuple[int, ...]:
        """Members other than the no-purchase option."""
        return self.members[1:]

    def check(self, n: int) -> None:
        if self.members[-1] >= n:
            raise DimensionError(f"assortment {self.members} not within products 0..{n - 1}")

    def label(self) -> str:
        return "{" + ",".join(str(i) for i in self.members) + "}"


@dataclass(frozen=True)
class PriceVector:
    prices: tuple[float, ...]

    def __post_init__(self) -> None:
        prices = tuple(float(p) for p in self.prices)
        if not prices or prices[0] != 0.0:
            raise ValueError("price of the no-purchase option must be 0")
        if any(p < 0 or not math.isfinite(p) for p in prices):
            raise ValueError("prices must be finite and nonnegative")
        object.__setattr__(self, "prices", prices)

    @classmethod
    def unit(cls, n: int) -> "PriceVector":
        """Unit prices: revenue becomes the conversion rate."""
        return cls((0.0,) + (1.0,) * (n - 1))

    @property
    def n(self) -> int:
        return len(self.prices)

    @property
    def max(self) -> float:
        return max(self.prices)

    def as_array(self) -> np.ndarray:
        return np.asarray(self.prices, dtype=float)


@dataclass(frozen=True)
class SparseChoiceModel:
    """Finitely supported distribution over rank lists."""

    support: tuple[tuple[RankList, float], ...]

    def __post_init__(self) -> None:
        support = tuple((rl, float(p)) for rl, p in self.support)
        if not support:
            raise ValueError("empty support")
        n = support[0][0].n
        if any(rl.n != n for rl, _ in support):
            raise DimensionError("rank lists of different lengths in one model")
        if any(not p > 0 for _, p in support):
            raise ValueError("support probabilities must be strictly positive")
        total = math.fsum(p for _, p in support)
        if abs(total - 1.0) > PROB_TOL:
            raise ValueError(f"probabilities sum to {total!r}, not 1")
        if len({rl.ranks for rl, _ in support}) != len(support):
            raise ValueError("duplicate rank lists in support")
        object.__setattr__(self, "support", support)

    @classmethod
    def from_weights(cls, ranks: np.ndarray | Sequence[Sequence[int]], weights: Sequence[float]) -> "SparseChoiceModel":
        """Normalize nonnegative weights; zero weights are dropped, duplicates merged."""
        ranks = np.asarray(ranks, dtype=int)
        weights = np.asarray(weights, dtype=float)
        mass: dict[tuple[int, ...], float] = {}
        for row, w in zip(ranks, weights):
            if w < 0:
                raise ValueError("negative weight")
            if w > 0:
                key = tuple(int(r) for r in row)
                mass[key] = mass.get(key, 0.0) + float(w)
        total = math.fsum(mass.values())
        if total <= 0:
            raise ValueError("weights sum to zero")
        keys = list(mass)
        probs = [mass[k] / total for k in keys]
        # push the rounding residue onto the largest atom so the sum is 1 to the ulp
        big = int(np.argmax(probs))
        probs[big] += 1.0 - math.fsum(probs)
        return cls(tuple((RankList(k), p) for k, p in zip(keys, probs)))

    @classmethod
    def deterministic(cls, rank_list: RankList) -> "SparseChoiceModel":
        return cls(((rank_list, 1.0),))

    @classmethod
    def uniform(cls, n: int) -> "SparseChoiceModel":
        perms = all_rankings(n)
        return cls.from_weights(perms, np.ones(len(perms)))

    @property
    def n(self) -> int:
        return self.support[0][0].n

    @property
    def k(self) -> int:
        """Support size."""
        return len(self.support)

    def ranks_array(self) -> np.ndarray:
        return np.array([rl.ranks for rl, _ in self.support], dtype=int)

    def probs_array(self) -> np.ndarray:
        return np.array([p for _, p in self.support], dtype=float)

    def choice_probs(self, m: Assortment) -> np.ndarray:
        """Purchase probabilities aligned with ``m.members``."""
        m.check(self.n)
        chosen = purchases(self.ranks_array(), m)
        out = np.zeros(len(m))
        np.add.at(out, np.searchsorted(m.members, chosen), self.probs_array())
        return out

    def prob(self, j: int, m: Assortment) -> float:
        return choice_prob(self, j, m)

    def sorted(self) -> "SparseChoiceModel":
        """Same distribution with atoms in lexicographic rank order."""
        return SparseChoiceModel(tuple(sorted(self.support, key=lambda a: a[0].ranks)))


class SchemeKind(str, Enum):
    COMPARISON = "comparison"
    RANKING = "ranking"
    TOPSET = "topset"
    TRANSACTION = "transaction"
    CENSORED = "censored"


@dataclass(frozen=True)
class ObservationScheme:
    """What is observed about the distribution: fixes the rows of ``A``.

    Row order is lexicographic in the row's index tuple:

    * comparison ``pref(i,j)``: pairs ``(i, j)``, ``i != j``
    * ranking ``rank(r,i)``: pairs ``(r, i)``, ``r`` in ``1..N``
    * topset: the comparison rows followed by ``top(i)`` for each ``i``
    * transaction ``sale(i,{...})``: assortments in the given order, members ascending
    * censored ``cpref(i,j)``: pairs ``(i, j)``, ``i != j``
    """

    kind: SchemeKind
    n: int
    assortments: tuple[Assortment, ...] = ()
    _rows: tuple = field(default=(), init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        kind = SchemeKind(self.kind)
        object.__setattr__(self, "kind", kind)
        ProductUniverse(self.n)
        if kind is SchemeKind.TRANSACTION:
            if not self.assortments:
                raise ValueError("transaction scheme needs at least one assortment")
            assortments = tuple(a if isinstance(a, Assortment) else Assortment.of(a) for a in self.assortments)
            for a in assortments:
                a.check(self.n)
            object.__setattr__(self, "assortments", assortments)
        elif self.assortments:
            raise ValueError(f"{kind.value} scheme takes no assortments")
        object.__setattr__(self, "_rows", tuple(_row_index(kind, self.n, self.assortments)))

    @classmethod
    def comparison(cls, n: int) -> "ObservationScheme":
        return cls(SchemeKind.COMPARISON, n)

    @classmethod
    def ranking(cls, n: int) -> "ObservationScheme":
        return cls(SchemeKind.RANKING, n)

    @classmethod
    def topset(cls, n: int) -> "ObservationScheme":
        return cls(SchemeKind.TOPSET, n)

    @classmethod
    def censored(cls, n: int) -> "ObservationScheme":
        return cls(SchemeKind.CENSORED, n)

    @classmethod
    def transaction(cls, n: int, assortments: Iterable[Assortment | Iterable[int]]) -> "ObservationScheme":
        return cls(SchemeKind.TRANSACTION, n, tuple(assortments))

    @property
    def m(self) -> int:
        return len(self._rows)

    @property
    def rows(self) -> tuple:
        """Index tuples, one per row.

        Shapes per kind: ``("pref", i, j)``, ``("rank", r, i)``, ``("top", i)``,
        ``("sale", i, a)`` with ``a`` the assortment position, ``("cpref", i, j)``.
        """
        return self._rows

    def labels(self) -> list[str]:
        out = []
        for row in self._rows:
            if row[0] == "sale":
                out.append(f"sale({row[1]},{self.assortments[row[2]].label()})")
            else:
                out.append(f"{row[0]}({','.join(str(v) for v in row[1:])})")
        return out

    def row_of(self, label: tuple) -> int:
        return self._rows.index(label)


def _pairs(n: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(n) for j in range(n) if i != j]


def _row_index(kind: SchemeKind, n: int, assortments: tuple[Assortment, ...]) -> list[tuple]:
    if kind is SchemeKind.COMPARISON:
        return [("pref", i, j) for i, j in _pairs(n)]
    if kind is SchemeKind.CENSORED:
        return [("cpref", i, j) for i, j in _pairs(n)]
    if kind is SchemeKind.RANKING:
        return [("rank", r, i) for r in range(1, n + 1) for i in range(n)]
    if kind is SchemeKind.TOPSET:
        return [("pref", i, j) for i, j in _pairs(n)] + [("top", i) for i in range(n)]
    return [("sale", i, a) for a, m in enumerate(assortments) for i in m.members]


@dataclass(frozen=True)
class DataVector:
    """Observed marginals ``y`` for a scheme, optionally as intervals ``[a_t, b_t]``."""

    scheme: ObservationScheme
    values: tuple[float, ...]
    intervals: tuple[tuple[float, float], ...] | None = None

    def __post_init__(self) -> None:
        values = tuple(float(v) for v in self.values)
        if len(values) != self.scheme.m:
            raise DimensionError(f"{len(values)} values for a scheme with {self.scheme.m} rows")
        object.__setattr__(self, "values", values)
        if self.intervals is None:
            if any(not (0.0 <= v <= 1.0) for v in values):
                raise ValueError("point data must lie in [0, 1]")
        else:
            intervals = tuple((float(a), float(b)) for a, b in self.intervals)
            if len(intervals) != self.scheme.m:
                raise DimensionError("one interval per row required")
            if any(a > b for a, b in intervals):
                raise ValueError("interval with a > b")
            object.__setattr__(self, "intervals", intervals)

    @property
    def y(self) -> np.ndarray:
        return np.asarray(self.values, dtype=float)

    @property
    def is_point(self) -> bool:
        return self.intervals is None

    def labels(self) -> list[str]:
        return self.scheme.labels()


# ---------------------------------------------------------------------------
# Operations


@lru_cache(maxsize=16)
def _all_rankings(n: int) -> np.ndarray:
    perms = np.array(list(itertools.permutations(range(1, n + 1))), dtype=np.int16)
    perms.setflags(write=False)
    return perms


def all_rankings(n: int) -> np.ndarray:
    """Every rank vector on ``n`` products, shape ``(n!, n)``, lexicographic."""
    if n > 10:
        raise ValueError(f"refusing to enumerate {n}! rankings")
    return _all_rankings(n)


def purchases(ranks: np.ndarray, m: Assortment) -> np.ndarray:
    """Product bought from ``m`` by each row of a ``(P, N)`` rank array."""
    members = np.asarray(m.members)
    return members[np.argmin(ranks[:, members], axis=1)]


def a_matrix(ranks: np.ndarray, scheme: ObservationScheme) -> np.ndarray:
    """Columns ``A(sigma)`` for every row of ``ranks``; returns shape ``(m, P)`` uint8."""
    ranks = np.atleast_2d(np.asarray(ranks))
    if ranks.shape[1] != scheme.n:
        raise DimensionError(f"rank lists on {ranks.shape[1]} products, scheme on {scheme.n}")
    n = scheme.n
    kind = scheme.kind
    if kind in (SchemeKind.COMPARISON, SchemeKind.TOPSET, SchemeKind.CENSORED):
        ii, jj = np.array(_pairs(n)).T
        better = ranks[:, ii] < ranks[:, jj]
        if kind is SchemeKind.CENSORED:
            above_zero = ranks[:, ii] < ranks[:, [0]]
            better = np.where(ii == 0, better, better & above_zero)
        if kind is SchemeKind.TOPSET:
            better = np.hstack([better, ranks == 1])
        return better.T.astype(np.uint8)
    if kind is SchemeKind.RANKING:
        onehot = ranks[:, None, :] == np.arange(1, n + 1)[None, :, None]
        return onehot.reshape(len(ranks), n * n).T.astype(np.uint8)
    blocks = []
    for m in scheme.assortments:
        chosen = purchases(ranks, m)
        blocks.append(chosen[None, :] == np.asarray(m.members)[:, None])
    return np.vstack(blocks).astype(np.uint8)


def a_column(sigma: RankList, scheme: ObservationScheme) -> np.ndarray:
    """The column ``A(sigma)`` of the scheme, as a 0/1 vector of length ``m``."""
    if sigma.n != scheme.n:
        raise DimensionError(f"rank list on {sigma.n} products, scheme on {scheme.n}")
    return a_matrix(np.array([sigma.ranks]), scheme)[:, 0]


def choice_prob(model: SparseChoiceModel, j: int, m: Assortment) -> float:
    """Probability that a random customer buys ``j`` when ``m`` is offered."""
    if j not in m:
        raise ValueError(f"product {j} not in assortment {m.members}")
    return float(model.choice_probs(m)[m.members.index(j)])


def revenue(model, m: Assortment, p: PriceVector) -> float:
    """Expected revenue of offering ``m``.  Works for any model with ``choice_probs``."""
    if p.n != model.n:
        raise DimensionError(f"{p.n} prices for {model.n} products")
    probs = model.choice_probs(m)
    return float(np.dot(probs, p.as_array()[list(m.members)]))


def exact_marginals(model: SparseChoiceModel, scheme: ObservationScheme) -> DataVector:
    """``y = A lambda`` computed atom by atom."""
    if model.n != scheme.n:
        raise DimensionError(f"model on {model.n} products, scheme on {scheme.n}")
    cols = a_matrix(model.ranks_array(), scheme).astype(float)
    y = cols @ model.probs_array()
    return DataVector(scheme, tuple(np.clip(y, 0.0, 1.0)))
