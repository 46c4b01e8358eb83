"""Monte-Carlo smoothed prediction over random camera motions.

The smoothed classifier predicts the class the base classifier picks most
often across renders under Gaussian camera perturbations. Counting is
hard-vote: each sample contributes one count to the base argmax. Prediction
follows the two-sided exact binomial test convention: the top class is
returned only when its count is significantly above half of the samples,
otherwise the prediction abstains.

Per-sample noise comes from the counter-based scheme in ``motion``, so a
count over n samples is a pure function of (frame, spec, n, seed) no
matter how the samples are scheduled across workers.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .certify import binomial_tail_probability
from .geometry import CameraIntrinsics, MotionParams
from .motion import SeedSpec, SmoothingSpec, sample_gaussian
from .renderer import SceneFrame, render


@dataclass(frozen=True, eq=False)
class SampleCounts:
    """Per-class prediction counts from one Monte-Carlo run."""

    counts: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.counts, dtype=np.int64)
        if arr.ndim != 1 or arr.size < 1:
            raise ValueError(f"counts must be a per-class vector, got shape {arr.shape}")
        if arr.min() < 0:
            raise ValueError("counts must be nonnegative")
        if arr.sum() < 1:
            raise ValueError("counts must cover at least one sample")
        arr.setflags(write=False)
        object.__setattr__(self, "counts", arr)

    @property
    def n(self) -> int:
        return int(self.counts.sum())

    def top_two(self) -> tuple[int, int]:
        """(top, runner-up) class indices, ties toward the lower index."""
        if self.counts.size < 2:
            raise ValueError("top-2 selection needs at least two classes")
        top = int(np.argmax(self.counts))
        rest = self.counts.copy()
        rest[top] = -1
        return top, int(np.argmax(rest))


@dataclass(frozen=True, eq=False)
class SmoothedPrediction:
    """Outcome of the smoothed prediction protocol on one view."""

    top_class: int
    runner_up_class: int
    counts: SampleCounts
    abstained: bool

    def __post_init__(self):
        if not self.abstained and self.top_class == self.runner_up_class:
            raise ValueError("top and runner-up must differ when not abstaining")


def _count_chunk(predict_motion, spec, seed, start, stop, num_classes):
    local = np.zeros(num_classes, dtype=np.int64)
    for i in range(start, stop):
        label = predict_motion(sample_gaussian(spec, seed, i))
        if not 0 <= label < num_classes:
            raise ValueError(f"classifier produced label {label} outside [0, {num_classes})")
        local[label] += 1
    return local


def sample_counts_from_fn(
    predict_motion: Callable[[MotionParams], int],
    num_classes: int,
    spec: SmoothingSpec,
    n: int,
    seed: SeedSpec,
    workers: int = 1,
) -> SampleCounts:
    """Count argmax outcomes of ``predict_motion`` over n Gaussian draws.

    The sample index alone determines each draw, and worker results merge
    by addition, so any worker count produces identical counts. A failure
    in the classifier aborts the whole count.
    """
    if n < 1:
        raise ValueError(f"sample count must be >= 1, got {n}")
    if num_classes < 1:
        raise ValueError(f"need at least one class, got {num_classes}")
    if workers <= 1 or n < 4:
        return SampleCounts(_count_chunk(predict_motion, spec, seed, 0, n, num_classes))
    bounds = np.linspace(0, n, workers + 1, dtype=np.int64)
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(_count_chunk, predict_motion, spec, seed, int(a), int(b), num_classes)
            for a, b in zip(bounds[:-1], bounds[1:])
            if a < b
        ]
        totals = sum(f.result() for f in futures)
    return SampleCounts(totals)


def _frame_predictor(frame: SceneFrame, classifier, intrinsics: CameraIntrinsics):
    def predict_motion(eps: MotionParams) -> int:
        label, _ = classifier.predict(render(frame, eps, intrinsics))
        return label

    return predict_motion


def _classifier_classes(classifier, fallback: int | None = None) -> int:
    num = getattr(classifier, "num_classes", None)
    if num is None:
        if fallback is None:
            raise ValueError(
                "classifier does not expose num_classes yet; run one prediction first"
            )
        return fallback
    return int(num)


def sample_counts(
    frame: SceneFrame,
    classifier,
    spec: SmoothingSpec,
    n: int,
    seed: SeedSpec,
    intrinsics: CameraIntrinsics,
    workers: int = 1,
) -> SampleCounts:
    """Render n perturbed views of the frame and count base predictions."""
    predict_motion = _frame_predictor(frame, classifier, intrinsics)
    num_classes = getattr(classifier, "num_classes", None)
    if num_classes is None:
        # external classifiers reveal their class count on first contact;
        # this handshake prediction is not part of the count
        predict_motion(sample_gaussian(spec, seed, 0))
        num_classes = _classifier_classes(classifier)
    return sample_counts_from_fn(predict_motion, int(num_classes), spec, n, seed, workers)


def majority_pvalue(k: int, n: int) -> float:
    """Two-sided exact binomial test p-value of k successes against p = 1/2.

    For the symmetric null this is min(1, 2 * P[X >= k]); it is only small
    when k is a clear majority, so testing it against alpha asks whether
    p <= 1/2 can be rejected.
    """
    if not 0 <= k <= n:
        raise ValueError(f"need 0 <= k <= n, got k={k}, n={n}")
    return min(1.0, 2.0 * binomial_tail_probability(k, n, 0.5))


def smoothed_predict(
    frame: SceneFrame,
    classifier,
    spec: SmoothingSpec,
    n0: int,
    alpha_conf: float,
    seed: SeedSpec,
    intrinsics: CameraIntrinsics,
    workers: int = 1,
) -> SmoothedPrediction:
    """Smoothed prediction with abstention at confidence 1 - alpha_conf."""
    if not 0.0 < alpha_conf < 1.0:
        raise ValueError(f"alpha_conf must lie in (0, 1), got {alpha_conf}")
    counts = sample_counts(frame, classifier, spec, n0, seed, intrinsics, workers)
    return prediction_from_counts(counts, alpha_conf)


def prediction_from_counts(counts: SampleCounts, alpha_conf: float) -> SmoothedPrediction:
    """Apply the two-sided binomial abstention rule to finished counts."""
    top, runner = counts.top_two()
    abstain = majority_pvalue(int(counts.counts[top]), counts.n) > alpha_conf
    return SmoothedPrediction(
        top_class=top, runner_up_class=runner, counts=counts, abstained=abstain
    )
