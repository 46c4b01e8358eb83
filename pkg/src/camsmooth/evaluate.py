"""Accuracy metrics over a test pose set.

Three metrics, all counting abstention as a miss:

* benign accuracy — correct predictions on unperturbed views;
* k-perturbed empirical robust accuracy — a pose counts only if every
  classification across a k-point attack grid on one motion axis is
  correct (grids for k above the base size include the base grid's points,
  so a larger attack set is provably at least as strong);
* certified accuracy at radius r — the pose's smoothed prediction is
  correct, did not abstain, and carries a certified radius above r.

Metric functions operate on plain records so they can be driven by the
real pipeline or by synthetic fixtures alike.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

from .certify import Certificate
from .geometry import MotionParams
from .motion import MotionAxis, axis_motion
from .renderer import SceneFrame

BASE_ATTACK_K = 5
ABSTAIN = -1


@dataclass(frozen=True, eq=False)
class EvalRecord:
    """Everything measured for one (pose, axis) pair."""

    pose_id: str
    true_label: int
    benign_pred: int
    smoothed_pred: int = ABSTAIN
    abstained: bool = True
    axis: MotionAxis | None = None
    empirical_robust: dict = field(default_factory=dict)  # k -> bool
    certificate: Certificate | None = None

    @property
    def certified_radius(self) -> float:
        if self.certificate is None or self.certificate.abstained:
            return 0.0
        return float(self.certificate.radius)


def benign_accuracy(records: list[EvalRecord], use_smoothed: bool = False) -> float:
    """Fraction of correct unperturbed predictions.

    With ``use_smoothed`` the smoothed prediction is scored instead of the
    base one, and abstention counts as wrong.
    """
    if not records:
        raise ValueError("no records to score")
    if use_smoothed:
        hits = sum(
            1 for r in records if not r.abstained and r.smoothed_pred == r.true_label
        )
    else:
        hits = sum(1 for r in records if r.benign_pred == r.true_label)
    return hits / len(records)


def attack_values(radius: float, k: int, base_k: int = BASE_ATTACK_K) -> np.ndarray:
    """Signed magnitudes of the k-point attack grid on one axis.

    Evenly spaced over [-radius, radius] with endpoints; for k > base_k the
    base grid's points are merged in (deduplicated), so the k-point attack
    evaluates a superset of the base attack.
    """
    if k < 1:
        raise ValueError(f"attack grid size must be >= 1, got {k}")
    if not (np.isfinite(radius) and radius >= 0):
        raise ValueError(f"attack radius must be finite and >= 0, got {radius}")
    grid = np.array([0.0]) if k == 1 else np.linspace(-radius, radius, k)
    if k > base_k:
        base = np.array([0.0]) if base_k == 1 else np.linspace(-radius, radius, base_k)
        grid = np.union1d(grid, base)
    return grid


def attack_grid(axis: MotionAxis, radius: float, k: int) -> list[MotionParams]:
    return [axis_motion(axis, float(v)) for v in attack_values(radius, k)]


def empirical_robust_flags(
    frames: list[SceneFrame],
    labels: list[int],
    predict_fn,
    axis: MotionAxis,
    radius: float,
    k: int,
) -> list[bool]:
    """Per-pose flags: True when every grid attack is classified correctly.

    ``predict_fn(frame, motion) -> label`` runs the model under test
    (base or smoothed); ABSTAIN (or any wrong label) breaks robustness.
    """
    if len(frames) != len(labels) or not frames:
        raise ValueError("need equally many frames and labels, at least one each")
    motions = attack_grid(axis, radius, k)
    flags = []
    for frame, label in zip(frames, labels):
        flags.append(all(predict_fn(frame, m) == label for m in motions))
    return flags


def empirical_robust_accuracy(
    frames: list[SceneFrame],
    labels: list[int],
    predict_fn,
    axis: MotionAxis,
    radius: float,
    k: int,
) -> float:
    flags = empirical_robust_flags(frames, labels, predict_fn, axis, radius, k)
    return sum(flags) / len(flags)


def certified_accuracy(
    records: list[EvalRecord], target_radius: float, axis: MotionAxis
) -> float:
    """Fraction of poses whose smoothed prediction is correct, confident,
    and certified beyond ``target_radius`` on ``axis``."""
    if not records:
        raise ValueError("no records to score")
    hits = 0
    for r in records:
        if r.axis is not axis or r.certificate is None:
            continue
        if (
            not r.abstained
            and r.smoothed_pred == r.true_label
            and not r.certificate.abstained
            and r.certificate.radius > target_radius
        ):
            hits += 1
    return hits / len(records)


def radius_sweep(
    records: list[EvalRecord], axis: MotionAxis, radii
) -> list[tuple[float, float]]:
    """(radius, certified accuracy) rows; nonincreasing for ascending radii."""
    return [(float(r), certified_accuracy(records, float(r), axis)) for r in radii]


# ---------------------------------------------------------------------------
# CSV reports


def records_csv(records: list[EvalRecord]) -> str:
    """One row per (pose, axis) with every recorded field."""
    ks = sorted({k for r in records for k in r.empirical_robust})
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(
        ["pose_id", "axis", "true_label", "benign_pred", "smoothed_pred", "abstained"]
        + [f"emp_robust_k{k}" for k in ks]
        + ["pA_lower", "pB_upper", "radius", "sigma", "confidence"]
    )
    for r in records:
        cert = r.certificate
        if cert is not None:
            sigma = cert.sigma_used.sigma_for(r.axis) if r.axis else ""
            cert_cols = [
                repr(cert.pA_lower),
                repr(cert.pB_upper),
                "" if cert.radius is None else repr(cert.radius),
                repr(sigma),
                repr(cert.confidence),
            ]
        else:
            cert_cols = ["", "", "", "", ""]
        writer.writerow(
            [
                r.pose_id,
                r.axis.value if r.axis else "",
                r.true_label,
                r.benign_pred,
                r.smoothed_pred,
                int(r.abstained),
            ]
            + [int(r.empirical_robust[k]) for k in ks]
            + cert_cols
        )
    return buf.getvalue()


def summary_csv(rows: list[dict]) -> str:
    """Benign / empirical / certified summary, one row per evaluated axis."""
    k_cols = sorted(
        {c for row in rows for c in row if c.startswith("emp_robust_acc_k")},
        key=lambda c: int(c.rsplit("k", 1)[1]),
    )
    columns = (
        ["axis", "radius", "sigma", "benign_acc_base", "benign_acc_smoothed"]
        + k_cols
        + ["certified_acc"]
    )
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({c: row.get(c, "") for c in columns})
    return buf.getvalue()


def sweep_csv(rows: list[tuple[float, float]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["radius", "certified_accuracy"])
    for radius, acc in rows:
        writer.writerow([repr(float(radius)), repr(float(acc))])
    return buf.getvalue()
