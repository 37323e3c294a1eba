"""Empirical attack evaluation.

Two attacks are measured.  Visual re-identification: an examiner classifier
trained on original images tries to classify disguised ones; visual privacy
is one minus its accuracy.  Class membership: feed a model probe images one
class at a time and compare the dispersion (Fano factor) of its predicted
label histograms between classes that were and were not in the training
data; peaked histograms betray in-training classes.

The examiner and the probed model are pixel-space nearest-neighbor
classifiers, a deliberately simple stand-in that keeps the harness free of
any learning framework.  External models can be attacked through the
prediction CSV interchange format instead.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np

from .data import LabeledDataset
from .errors import FormatError, GeometryMismatchError, InvariantError
from .keys import rng_stream

DISTINGUISHABLE = "distinguishable"
INDISTINGUISHABLE = "indistinguishable"

_SUBSAMPLE_STREAM = 4

PREDICTIONS_HEADER = ("true_class", "predicted_class")


# -- histogram statistics ----------------------------------------------------


def class_histogram(predicted_labels, class_count: int) -> np.ndarray:
    """Count predictions per class: counts[j] = multiplicity of label j."""
    labels = np.asarray(predicted_labels, dtype=np.int64)
    if class_count < 1:
        raise InvariantError("class_count must be >= 1")
    if labels.size and (labels.min() < 0 or labels.max() >= class_count):
        raise InvariantError(
            f"labels must lie in [0, {class_count}), found "
            f"[{labels.min()}, {labels.max()}]"
        )
    return np.bincount(labels, minlength=class_count).astype(np.int64)


def fano_factor(histogram) -> float:
    """Variance-to-mean ratio of a class histogram.

    Mean and variance both divide by the class count k (population form):
    mu = (sum of counts) / k, var = (sum of squared deviations) / k.
    Zero for a uniform histogram, large for a peaked one.
    """
    counts = np.asarray(histogram, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise InvariantError("dispersion is undefined for an empty histogram")
    mu = total / counts.size
    var = np.mean((counts - mu) ** 2)
    return float(var / mu)


def label_entropy(histogram) -> float:
    """Shannon entropy of the normalized histogram, in bits."""
    counts = np.asarray(histogram, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        raise InvariantError("entropy is undefined for an empty histogram")
    p = counts[counts > 0] / total
    return float(-np.sum(p * np.log2(p)))


# -- Welch's t test ----------------------------------------------------------


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for it in range(1, 300):
        m2 = 2 * it
        aa = it * (b - it) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + it) * (qab + it) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def _reg_inc_beta(a: float, b: float, x: float) -> float:
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def welch_t_test(a, b) -> tuple[float, float]:
    """Welch's unequal-variance t test, two-sided.

    Returns ``(statistic, p_value)``.  The p value comes from the Student-t
    survival function expressed through the regularized incomplete beta.
    Degenerate samples (both variances zero) short-circuit to p = 1 for
    equal means and p = 0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.size < 2 or b.size < 2:
        raise InvariantError("each sample needs at least two values")
    ma, mb = a.mean(), b.mean()
    va, vb = a.var(ddof=1), b.var(ddof=1)
    if va == 0.0 and vb == 0.0:
        if ma == mb:
            return 0.0, 1.0
        return math.copysign(math.inf, ma - mb), 0.0
    sa, sb = va / a.size, vb / b.size
    t = (ma - mb) / math.sqrt(sa + sb)
    df = (sa + sb) ** 2 / (sa**2 / (a.size - 1) + sb**2 / (b.size - 1))
    p = _reg_inc_beta(df / 2.0, 0.5, df / (t * t + df))
    return float(t), float(p)


# -- nearest-neighbor examiner -----------------------------------------------


@dataclass
class Examiner:
    """Pixel-space nearest-neighbor classifier.

    Stands in for a strong visual attacker: it knows the original training
    images and votes among the ``neighbor_count`` nearest (by Euclidean
    distance on raw pixels) stored images.
    """

    train: np.ndarray  # (n, d) flattened float64
    labels: np.ndarray  # (n,)
    class_count: int
    neighbor_count: int
    geometry: tuple[int, int, int]
    _train_sq: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        self._train_sq = np.einsum("nd,nd->n", self.train, self.train)


def train_examiner(
    train: LabeledDataset,
    neighbor_count: int = 1,
    subsample: int | None = None,
    seed: int = 0,
) -> Examiner:
    """Build an examiner, optionally on a random training subsample.

    ``neighbor_count`` must be odd so two-class vote ties stay rare; the
    remaining ties are broken deterministically (see :func:`predict`).
    """
    if len(train) == 0:
        raise InvariantError("examiner needs a non-empty training set")
    if neighbor_count < 1 or neighbor_count % 2 == 0:
        raise InvariantError(
            f"neighbor count must be odd and >= 1, got {neighbor_count}"
        )
    images, labels = train.images, train.labels
    if subsample is not None and subsample < len(train):
        if subsample < 1:
            raise InvariantError("subsample must be >= 1")
        idx = rng_stream(seed, _SUBSAMPLE_STREAM).choice(
            len(train), size=subsample, replace=False
        )
        idx.sort()
        images, labels = images[idx], labels[idx]
    if neighbor_count > len(images):
        raise InvariantError(
            f"neighbor count {neighbor_count} exceeds training size {len(images)}"
        )
    return Examiner(
        train=images.reshape(len(images), -1),
        labels=labels.copy(),
        class_count=train.class_count,
        neighbor_count=neighbor_count,
        geometry=train.geometry,
    )


def predict(examiner: Examiner, images: np.ndarray, chunk: int = 256) -> np.ndarray:
    """Predict a label for each (channels, height, width) image.

    Distance ties resolve toward the lowest stored index, vote ties toward
    the lowest class label, so predictions are fully deterministic.
    """
    arr = np.ascontiguousarray(images, dtype=np.float64)
    if arr.ndim == 3:
        arr = arr[None]
    if tuple(arr.shape[1:]) != examiner.geometry:
        raise GeometryMismatchError(
            f"query geometry {tuple(arr.shape[1:])} does not match examiner "
            f"geometry {examiner.geometry}"
        )
    queries = arr.reshape(len(arr), -1)
    k = examiner.neighbor_count
    out = np.empty(len(queries), dtype=np.int64)
    for start in range(0, len(queries), chunk):
        q = queries[start : start + chunk]
        d2 = (
            np.einsum("md,md->m", q, q)[:, None]
            - 2.0 * (q @ examiner.train.T)
            + examiner._train_sq[None, :]
        )
        if k == 1:
            out[start : start + chunk] = examiner.labels[np.argmin(d2, axis=1)]
        else:
            order = np.argsort(d2, axis=1, kind="stable")[:, :k]
            votes = examiner.labels[order]
            for row, vote_row in enumerate(votes):
                counts = np.bincount(vote_row, minlength=examiner.class_count)
                out[start + row] = int(counts.argmax())
    return out


def examiner_accuracy(examiner: Examiner, test: LabeledDataset) -> float:
    """Fraction of test images the examiner classifies correctly.

    Label comparison happens in the examiner's own label space; when the
    test set carries permuted labels, undo the mapping first.
    """
    if len(test) == 0:
        raise InvariantError("accuracy is undefined on an empty test set")
    return float(np.mean(predict(examiner, test.images) == test.labels))


def visual_privacy(accuracy: float) -> float:
    """One minus the examiner's accuracy on the protected images."""
    if not 0.0 <= accuracy <= 1.0:
        raise InvariantError(f"accuracy must lie in [0, 1], got {accuracy}")
    return 1.0 - accuracy


# -- membership attack report -------------------------------------------------


@dataclass
class AttackReport:
    """Outcome of the class-membership attack.

    Per-class Fano factors and entropies for the in-training and
    out-training probe populations, the Welch test over the two Fano
    samples, and the verdict at significance level alpha.
    """

    in_fano: dict[int, float]
    out_fano: dict[int, float]
    in_entropy: dict[int, float]
    out_entropy: dict[int, float]
    statistic: float
    p_value: float
    alpha: float
    verdict: str

    @property
    def in_mean_fano(self) -> float:
        return float(np.mean(list(self.in_fano.values())))

    @property
    def out_mean_fano(self) -> float:
        return float(np.mean(list(self.out_fano.values())))


def _population_stats(groups, class_count, name):
    if len(groups) < 2:
        raise InvariantError(f"{name} population needs at least two classes")
    fanos, entropies = {}, {}
    for cls in sorted(groups):
        preds = np.asarray(groups[cls], dtype=np.int64)
        if preds.size == 0:
            raise InvariantError(f"{name} population has no predictions for class {cls}")
        hist = class_histogram(preds, class_count)
        fanos[int(cls)] = fano_factor(hist)
        entropies[int(cls)] = label_entropy(hist)
    return fanos, entropies


def membership_attack_report(
    in_groups, out_groups, class_count: int, alpha: float = 0.01
) -> AttackReport:
    """Compare prediction dispersion between probe populations.

    ``in_groups`` and ``out_groups`` map each probe class to the model's
    predicted labels for that class.  The populations are declared
    distinguishable when the Welch p value is at most ``alpha`` and the
    in-training classes show the higher mean Fano factor.
    """
    if not 0.0 < alpha < 1.0:
        raise InvariantError(f"alpha must lie in (0, 1), got {alpha}")
    in_fano, in_entropy = _population_stats(in_groups, class_count, "in-training")
    out_fano, out_entropy = _population_stats(out_groups, class_count, "out-training")
    stat, p = welch_t_test(list(in_fano.values()), list(out_fano.values()))
    mean_in = float(np.mean(list(in_fano.values())))
    mean_out = float(np.mean(list(out_fano.values())))
    verdict = (
        DISTINGUISHABLE if (p <= alpha and mean_in > mean_out) else INDISTINGUISHABLE
    )
    return AttackReport(
        in_fano=in_fano,
        out_fano=out_fano,
        in_entropy=in_entropy,
        out_entropy=out_entropy,
        statistic=stat,
        p_value=p,
        alpha=alpha,
        verdict=verdict,
    )


def render_report(report: AttackReport) -> str:
    """Human-readable report followed by a machine-readable key=value block."""
    lines = [
        "Class-membership attack report",
        f"  in-training classes probed:  {len(report.in_fano)}",
        f"  out-training classes probed: {len(report.out_fano)}",
        f"  mean Fano factor (in / out): "
        f"{report.in_mean_fano:.4f} / {report.out_mean_fano:.4f}",
        f"  Welch t = {report.statistic:.4f}, p = {report.p_value:.6g} "
        f"(alpha = {report.alpha})",
        f"  verdict: populations are {report.verdict}",
        "",
    ]
    for cls, value in report.in_fano.items():
        lines.append(f"in_fano_{cls}={value:.6g}")
    for cls, value in report.out_fano.items():
        lines.append(f"out_fano_{cls}={value:.6g}")
    for cls, value in report.in_entropy.items():
        lines.append(f"in_entropy_{cls}={value:.6g}")
    for cls, value in report.out_entropy.items():
        lines.append(f"out_entropy_{cls}={value:.6g}")
    lines += [
        f"in_mean_fano={report.in_mean_fano:.6g}",
        f"out_mean_fano={report.out_mean_fano:.6g}",
        f"t_statistic={report.statistic:.6g}",
        f"p_value={report.p_value:.6g}",
        f"alpha={report.alpha:.6g}",
        f"verdict={report.verdict}",
    ]
    return "\n".join(lines)


# -- prediction interchange ----------------------------------------------------


def write_predictions_csv(true_labels, predicted_labels) -> str:
    """Serialize (true, predicted) label pairs for external-model attacks."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise InvariantError("true and predicted label arrays must match in length")
    buf = io.StringIO()
    writer = csv.writer(buf)
    writer.writerow(PREDICTIONS_HEADER)
    for t, p in zip(true_labels, predicted_labels):
        writer.writerow((int(t), int(p)))
    return buf.getvalue()


def read_predictions_csv(text: str) -> tuple[np.ndarray, np.ndarray]:
    """Parse a prediction CSV back into (true, predicted) label arrays."""
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or tuple(rows[0]) != PREDICTIONS_HEADER:
        raise FormatError(
            f"expected header {','.join(PREDICTIONS_HEADER)!r}, got "
            f"{','.join(rows[0]) if rows else '<empty file>'!r}"
        )
    body = [row for row in rows[1:] if row]
    if not body:
        raise InvariantError("prediction file contains a header but no rows")
    try:
        true_labels = np.array([int(row[0]) for row in body], dtype=np.int64)
        predicted = np.array([int(row[1]) for row in body], dtype=np.int64)
    except (ValueError, IndexError) as exc:
        raise FormatError(f"malformed prediction row: {exc}") from None
    return true_labels, predicted


def group_predictions(true_labels, predicted_labels) -> dict[int, np.ndarray]:
    """Group predicted labels by the probes' true class."""
    true_labels = np.asarray(true_labels, dtype=np.int64)
    predicted_labels = np.asarray(predicted_labels, dtype=np.int64)
    if true_labels.shape != predicted_labels.shape:
        raise InvariantError("true and predicted label arrays must match in length")
    return {
        int(cls): predicted_labels[true_labels == cls] for cls in np.unique(true_labels)
    }
