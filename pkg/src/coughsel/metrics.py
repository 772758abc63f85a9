"""Classification metrics and the comparison report.

Cough is always the positive class. Ratios with a zero denominator are NaN,
printed as ``n/a``.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

from .errors import EmptyInput, LengthMismatch

POSITIVE = "cough"
NEGATIVE = "non-cough"
METHOD_ORDER = ("pca", "random_frog", "uve", "vip")
METHOD_TITLES = {"pca": "PCA", "random_frog": "Random Frog", "uve": "UVE", "vip": "VIP"}
CSV_HEADER = ["method", "k", "accuracy", "recall", "precision", "f1"]


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fn: int
    fp: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fn, self.fp, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fn + self.fp + self.tn

    def to_dict(self):
        return {"tp": self.tp, "fn": self.fn, "fp": self.fp, "tn": self.tn}


@dataclass(frozen=True)
class MetricsRow:
    method: str
    k: int
    accuracy: float
    recall: float
    precision: float
    f1: float
    error: str | None = None

    @property
    def failed(self):
        return self.error is not None


def _label(v):
    if v in (1, True) or v == POSITIVE:
        return POSITIVE
    if v in (-1, 0, False) or v == NEGATIVE:
        return NEGATIVE
    raise ValueError(f"unrecognized label {v!r}")


def confusion(pred, truth) -> ConfusionMatrix:
    """Count TP/FN/FP/TN. Labels may be 'cough'/'non-cough' or +1/-1."""
    pred, truth = list(pred), list(truth)
    if len(pred) != len(truth):
        raise LengthMismatch(f"{len(pred)} predictions for {len(truth)} labels")
    if not pred:
        raise EmptyInput("no predictions")
    tp = fn = fp = tn = 0
    for p, t in zip(pred, truth):
        p, t = _label(p), _label(t)
        if t == POSITIVE:
            tp += p == POSITIVE
            fn += p != POSITIVE
        else:
            fp += p == POSITIVE
            tn += p != POSITIVE
    return ConfusionMatrix(tp, fn, fp, tn)


def _ratio(num, den):
    return num / den if den else math.nan


def compute_metrics(cm: ConfusionMatrix, method="", k=0) -> MetricsRow:
    """Ratios in percent except F1, which stays in [0, 1]."""
    if cm.total < 1:
        raise EmptyInput("confusion matrix is empty")
    accuracy = 100.0 * (cm.tp + cm.tn) / cm.total
    precision = _ratio(cm.tp, cm.tp + cm.fp)
    recall = _ratio(cm.tp, cm.tp + cm.fn)
    if math.isnan(precision) or math.isnan(recall) or precision + recall == 0:
        f1 = math.nan
    else:
        f1 = 2 * precision * recall / (precision + recall)
    return MetricsRow(method, k, accuracy, 100.0 * recall, 100.0 * precision, f1)


def failed_row(method, k, error) -> MetricsRow:
    return MetricsRow(method, k, math.nan, math.nan, math.nan, math.nan, str(error))


def _fmt(v, digits=2):
    return "n/a" if math.isnan(v) else f"{v:.{digits}f}"


def _method_rank(rows):
    seen = [m for m in METHOD_ORDER]
    for r in rows:
        if r.method not in seen:
            seen.append(r.method)
    return {m: i for i, m in enumerate(seen)}


def best_row(rows):
    """Highest accuracy, then highest F1, then fewest features."""
    ok = [r for r in rows if not r.failed and not math.isnan(r.accuracy)]
    if not ok:
        return None
    def key(r):
        f1 = -math.inf if math.isnan(r.f1) else r.f1
        return (-r.accuracy, -f1, r.k)
    return min(ok, key=key)


def render_report(rows):
    """Return ``(text_table, csv_text)`` with rows grouped by method and sorted by k."""
    rows = list(rows)
    if not rows:
        raise EmptyInput("no rows to report")
    rank = _method_rank(rows)
    ordered = sorted(rows, key=lambda r: (rank[r.method], r.k))
    best = best_row(rows)

    header = ["Feature selection method", "Feature number", "Accuracy (%)",
              "Sensitivity/Recall (%)", "Precision (%)", "F1-Score", ""]
    body = []
    prev = None
    for r in ordered:
        name = METHOD_TITLES.get(r.method, r.method) if r.method != prev else ""
        prev = r.method
        if r.failed:
            cells = [name, str(r.k), "FAILED", "", "", "", r.error]
        else:
            cells = [name, str(r.k), _fmt(r.accuracy), _fmt(r.recall), _fmt(r.precision),
                     _fmt(r.f1), "<- best" if r is best else ""]
        body.append(cells)
    widths = [max(len(h), *(len(c[i]) for c in body)) for i, h in enumerate(header)]
    def join(cells):
        return " | ".join(c.ljust(w) for c, w in zip(cells, widths)).rstrip(" |")

    lines = [join(header), "-+-".join("-" * w for w in widths[:-1])]
    lines += [join(cells) for cells in body]
    text = "\n".join(lines) + "\n"

    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    for r in ordered:
        w.writerow([r.method, r.k, repr(r.accuracy), repr(r.recall), repr(r.precision), repr(r.f1)])
    return text, buf.getvalue()


def read_report_csv(path):
    rows = []
    with open(path, newline="", encoding="utf-8") as fh:
        for rec in csv.DictReader(fh):
            acc = float(rec["accuracy"])
            rows.append(MetricsRow(rec["method"], int(rec["k"]), acc, float(rec["recall"]),
                                   float(rec["precision"]), float(rec["f1"]),
                                   "run failed" if math.isnan(acc) else None))
    return rows
