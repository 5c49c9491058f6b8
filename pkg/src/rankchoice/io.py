"""File formats: JSON for models, schemes, data vectors and prices; CSV for sales counts.

Model JSON::

    {"type": "sparse", "n": 3, "support": [{"ranks": [3, 1, 2], "prob": 1.0}]}
    {"type": "mnl", "weights": [1.0, 2.0, 0.5]}
    {"type": "nl", "weights": [...], "nests": [[1, 2], [3]], "rho": 0.5, "alpha": [0.25, 0.25]}
    {"type": "mmnl", "features": [[0, 0], ...], "mean": [...], "sd": [...],
     "offsets": [...], "draws": 100000, "seed": 0}

Scheme JSON: ``{"kind": "transaction", "n": 4, "assortments": [[0, 1, 2], [0, 3]]}``
(``assortments`` only for transaction data).

Data vector JSON: ``{"scheme": {...}, "labels": [...], "values": [...],
"intervals": [[a, b], ...]}`` with ``intervals`` optional; labels must match
the scheme's own row labels.

Prices JSON: ``{"prices": [0, 10, 5]}`` or a bare list.

Transactions CSV: header ``assortment_id,product_id,count``; one row per
member of each assortment, the no-purchase option included.

Data files keep full float precision (Python's shortest round-trip repr).
Result tables and predictions are printed with 12 significant digits.
"""

from __future__ import annotations

import csv
import io as _io
import json
import math
from pathlib import Path
from typing import Any, Iterable

import numpy as np

from .core import Assortment, DataVector, ObservationScheme, PriceVector, SchemeKind, SparseChoiceModel
from .models import MmnlModel, MnlModel, NestedLogitModel, Transactions, amzn, amzn_cnl, amzn_mmnl

PRESETS = {"amzn": amzn, "amzn-cnl": amzn_cnl, "amzn-mmnl": amzn_mmnl}
CSV_HEADER = ("assortment_id", "product_id", "count")


def fmt(x: float) -> str:
    """Twelve significant digits."""
    return "nan" if isinstance(x, float) and math.isnan(x) else format(float(x), ".12g")


def round12(obj: Any) -> Any:
    """Recursively round floats to 12 significant digits for printed output."""
    if isinstance(obj, float):
        return obj if not math.isfinite(obj) else float(format(obj, ".12g"))
    if isinstance(obj, dict):
        return {k: round12(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [round12(v) for v in obj]
    return obj


def _read_json(path) -> Any:
    with open(path) as fh:
        return json.load(fh)


def write_json(obj: Any, path=None) -> str:
    text = json.dumps(obj, indent=2, sort_keys=False) + "\n"
    if path is not None:
        Path(path).write_text(text)
    return text


# -- models ------------------------------------------------------------------


def model_to_json(model) -> dict:
    if isinstance(model, SparseChoiceModel):
        return {"type": "sparse", "n": model.n,
                "support": [{"ranks": list(r.ranks), "prob": p} for r, p in model.support]}
    if isinstance(model, MnlModel):
        return {"type": "mnl", "weights": list(model.weights)}
    if isinstance(model, NestedLogitModel):
        return {"type": "nl", "weights": list(model.weights), "nests": [list(n) for n in model.nests],
                "rho": model.rho, "alpha": list(model.alpha)}
    if isinstance(model, MmnlModel):
        return {"type": "mmnl", "features": model.features.tolist(), "mean": model.mean.tolist(),
                "sd": model.sd.tolist(), "offsets": model.offsets.tolist(), "draws": model.n_draws,
                "seed": model.seed}
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_json(obj: dict):
    kind = obj.get("type")
    if kind == "sparse":
        support = tuple((tuple(a["ranks"]), float(a["prob"])) for a in obj["support"])
        from .core import RankList

        model = SparseChoiceModel(tuple((RankList(r), p) for r, p in support))
        if "n" in obj and obj["n"] != model.n:
            raise ValueError(f"model says n={obj['n']} but rank lists have {model.n} entries")
        return model
    if kind == "mnl":
        return MnlModel(tuple(obj["weights"]))
    if kind == "nl":
        return NestedLogitModel(tuple(obj["weights"]), tuple(tuple(n) for n in obj["nests"]),
                                float(obj["rho"]), tuple(obj["alpha"]))
    if kind == "mmnl":
        return MmnlModel(np.array(obj["features"], dtype=float), np.array(obj["mean"]), np.array(obj["sd"]),
                         np.array(obj["offsets"]) if obj.get("offsets") is not None else None,
                         n_draws=int(obj.get("draws", 100_000)), seed=int(obj.get("seed", 0)))
    raise ValueError(f"unknown model type {kind!r}")


def load_model(source: str, n: int | None = None):
    """A model file, or one of the preset names ``amzn``, ``amzn-cnl``, ``amzn-mmnl``."""
    if source in PRESETS:
        return PRESETS[source](16 if n is None else n)
    return model_from_json(_read_json(source))


# -- schemes and data --------------------------------------------------------


def scheme_to_json(scheme: ObservationScheme) -> dict:
    out: dict = {"kind": scheme.kind.value, "n": scheme.n}
    if scheme.kind is SchemeKind.TRANSACTION:
        out["assortments"] = [list(a.members) for a in scheme.assortments]
    return out


def scheme_from_json(obj: dict) -> ObservationScheme:
    return make_scheme(obj["kind"], int(obj["n"]), obj.get("assortments"))


def make_scheme(kind: str, n: int, assortments: Iterable[Iterable[int]] | None = None) -> ObservationScheme:
    kind = SchemeKind(kind)
    if kind is SchemeKind.TRANSACTION:
        if not assortments:
            raise ValueError("transaction data needs a list of assortments")
        return ObservationScheme.transaction(n, [Assortment.of(a) for a in assortments])
    if assortments:
        raise ValueError(f"{kind.value} data takes no assortment list")
    return getattr(ObservationScheme, kind.value)(n)


def data_to_json(data: DataVector) -> dict:
    out: dict = {"scheme": scheme_to_json(data.scheme), "labels": data.labels(), "values": list(data.values)}
    if data.intervals is not None:
        out["intervals"] = [list(ab) for ab in data.intervals]
    return out


def data_from_json(obj: dict) -> DataVector:
    scheme = scheme_from_json(obj["scheme"])
    labels = obj.get("labels")
    if labels is not None and list(labels) != scheme.labels():
        raise ValueError("data labels do not match the scheme's row order")
    intervals = obj.get("intervals")
    return DataVector(scheme, tuple(obj["values"]),
                      None if intervals is None else tuple(tuple(ab) for ab in intervals))


def load_data(path) -> DataVector:
    return data_from_json(_read_json(path))


def load_prices(path) -> PriceVector:
    obj = _read_json(path)
    return PriceVector(tuple(obj["prices"] if isinstance(obj, dict) else obj))


# -- transactions ------------------------------------------------------------


def transactions_to_csv(t: Transactions) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for a, (m, counts) in enumerate(zip(t.assortments, t.counts)):
        for j, c in zip(m.members, counts):
            w.writerow((a, j, c))
    return buf.getvalue()


def transactions_from_csv(text: str, n: int | None = None, censor_at: int | None = None) -> Transactions:
    rows = list(csv.reader(_io.StringIO(text)))
    if not rows or tuple(h.strip() for h in rows[0]) != CSV_HEADER:
        raise ValueError(f"transactions CSV must start with header {','.join(CSV_HEADER)}")
    groups: dict[int, dict[int, int]] = {}
    for line, row in enumerate(rows[1:], start=2):
        if not row:
            continue
        try:
            a, j, c = (int(v) for v in row)
        except ValueError:
            raise ValueError(f"line {line}: expected three integers") from None
        if j in groups.setdefault(a, {}):
            raise ValueError(f"line {line}: product {j} listed twice for assortment {a}")
        groups[a][j] = c
    ids = sorted(groups)
    if ids != list(range(len(ids))):
        raise ValueError("assortment ids must be 0..K-1")
    top = max(j for g in groups.values() for j in g)
    n = top + 1 if n is None else n
    assortments, counts = [], []
    for a in ids:
        if 0 not in groups[a]:
            raise ValueError(f"assortment {a} has no no-purchase (product 0) row")
        members = sorted(groups[a])
        assortments.append(Assortment(tuple(members)))
        counts.append(tuple(groups[a][j] for j in members))
    return Transactions(max(n, 2), tuple(assortments), tuple(counts), censor_at)


def load_transactions(path, n: int | None = None, censor_at: int | None = None) -> Transactions:
    return transactions_from_csv(Path(path).read_text(), n, censor_at)


def parse_assortments(text: str) -> list[Assortment]:
    """``"1,2;0,3"`` -> two assortments (product 0 added to each)."""
    return [Assortment.parse(part) for part in text.split(";") if part.strip()]


def table_to_csv(header: Iterable[str], rows: Iterable[Iterable[Any]]) -> str:
    buf = _io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(list(header))
    for row in rows:
        w.writerow([fmt(v) if isinstance(v, float) else v for v in row])
    return buf.getvalue()
