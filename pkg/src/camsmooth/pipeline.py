"""End-to-end runs: scene datasets, training, certification, evaluation.

This module glues the library layers together behind the CLI: it owns the
scene-manifest and run-config JSON schemas, derives deterministic random
streams for every stage, and assembles per-pose records and reports.

Random streams: every Monte-Carlo stage draws from the run's master seed
under a purpose-tagged stream id (purpose << 32 | global pose index), so
any stage can be recomputed in isolation and no stage's draws depend on
another stage having run.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import evaluate as ev
from .certify import Certificate, certify_one_axis
from .classifier import CentroidModel, ExternalClassifier, FeatureSpec, train_centroid
from .geometry import CameraIntrinsics, MotionParams
from .motion import MotionAxis, SeedSpec, SmoothingSpec, sample_gaussian
from .pointcloud import (
    ColoredPointCloud,
    parse_ply,
    uniform_downsample,
    voxel_downsample,
    write_ply,
)
from .renderer import SceneFrame, render
from .scene import (
    DEFAULT_SHELL_RADIUS_FACTOR,
    PoseSample,
    SceneSpec,
    generate_scene,
    sample_poses,
)
from .smoothing import (
    prediction_from_counts,
    sample_counts,
    smoothed_predict,
)

log = logging.getLogger("camsmooth")

MANIFEST_SCHEMA = "camsmooth-manifest-v1"

# purpose tags for stream ids (purpose << 32 | global pose index)
STREAM_SELECTION = 1
STREAM_ESTIMATION = 2
STREAM_ATTACK = 3
STREAM_TRAIN_AUG = 4


class ConfigError(ValueError):
    """A run-config field failed validation; carries the field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


# ---------------------------------------------------------------------------
# run configuration

DEFAULT_INTRINSICS = dict(
    fx=386.274, fy=386.274, cx=80.0, cy=45.0, width=160, height=90
)


@dataclass
class RunConfig:
    """Validated run parameters (see README for the JSON schema)."""

    manifest: Path
    output_dir: Path
    intrinsics: CameraIntrinsics
    axis: MotionAxis
    target_radius: float
    smoothing: SmoothingSpec
    n0: int = 100
    n: int = 1000
    alpha_conf: float = 0.01
    attack_k: tuple[int, ...] = (5, 100)
    master_seed: int = 0
    workers: int = 1
    classifier_kind: str = "builtin"
    model_path: Path | None = None
    external_command: list[str] = field(default_factory=list)
    feature_block: int = 10
    temperature: float = 1.0
    augment_training: bool = False
    uniform_every_k: int = 1
    voxel_size: float = 0.0
    sweep_radii: list[float] | None = None
    scene: dict = field(default_factory=dict)
    raw: dict = field(default_factory=dict)


def _require(cfg: dict, key: str, kind, path: str):
    if key not in cfg:
        raise ConfigError(f"{path}.{key}", "missing required field")
    val = cfg[key]
    if kind is float and isinstance(val, int) and not isinstance(val, bool):
        val = float(val)
    if not isinstance(val, kind):
        raise ConfigError(
            f"{path}.{key}", f"expected {getattr(kind, '__name__', kind)}, got {type(val).__name__}"
        )
    return val


def _optional(cfg: dict, key: str, kind, default, path: str):
    if key not in cfg or cfg[key] is None:
        return default
    return _require(cfg, key, kind, path)


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Parse, override, and validate a run-config JSON file."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text())
    except FileNotFoundError:
        raise ConfigError("config", f"file not found: {path}") from None
    except json.JSONDecodeError as exc:
        raise ConfigError("config", f"invalid JSON: {exc}") from None
    if overrides:
        raw = _apply_overrides(raw, overrides)
    return validate_config(raw, base_dir=path.parent)


def _apply_overrides(raw: dict, overrides: dict) -> dict:
    raw = json.loads(json.dumps(raw))  # deep copy
    for key, value in overrides.items():
        if value is None:
            continue
        if key == "sigma":
            axis = MotionAxis.parse(overrides.get("axis") or raw.get("axis", "Tz"))
            smoothing = raw.setdefault("smoothing", {})
            if axis.is_rotation:
                smoothing["sigma_theta_rad"] = value
            else:
                smoothing[f"sigma_{axis.value[1]}_m"] = value
        elif key == "radius":
            axis = MotionAxis.parse(overrides.get("axis") or raw.get("axis", "Tz"))
            raw.pop("radius_m", None)
            raw.pop("radius_rad", None)
            raw["radius_rad" if axis.is_rotation else "radius_m"] = value
        elif key == "seed":
            raw["master_seed"] = value
        elif key == "out":
            raw["output_dir"] = value
        else:
            raw[key] = value
    return raw


def validate_config(raw: dict, base_dir: Path | None = None) -> RunConfig:
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be a JSON object")
    base = base_dir or Path(".")

    manifest = Path(_require(raw, "manifest", str, "config"))
    if not manifest.is_absolute():
        manifest = base / manifest
    output_dir = Path(_optional(raw, "output_dir", str, "out", "config"))
    if not output_dir.is_absolute():
        output_dir = base / output_dir

    intr_cfg = {**DEFAULT_INTRINSICS, **_optional(raw, "intrinsics", dict, {}, "config")}
    try:
        intrinsics = CameraIntrinsics(
            fx=float(intr_cfg["fx"]), fy=float(intr_cfg["fy"]),
            cx=float(intr_cfg["cx"]), cy=float(intr_cfg["cy"]),
            width=int(intr_cfg["width"]), height=int(intr_cfg["height"]),
        )
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError("config.intrinsics", str(exc)) from None

    try:
        axis = MotionAxis.parse(_require(raw, "axis", str, "config"))
    except ValueError as exc:
        raise ConfigError("config.axis", str(exc)) from None

    radius_key = "radius_rad" if axis.is_rotation else "radius_m"
    wrong_key = "radius_m" if axis.is_rotation else "radius_rad"
    if wrong_key in raw:
        raise ConfigError(
            f"config.{wrong_key}",
            f"axis {axis.value} takes {radius_key} (units matter)",
        )
    target_radius = _require(raw, radius_key, float, "config")
    if not (np.isfinite(target_radius) and target_radius >= 0):
        raise ConfigError(f"config.{radius_key}", "must be finite and >= 0")

    smoothing_cfg = _optional(raw, "smoothing", dict, {}, "config")
    sigma_kwargs = {}
    for json_key, attr in (
        ("sigma_x_m", "sigma_x"), ("sigma_y_m", "sigma_y"),
        ("sigma_z_m", "sigma_z"), ("sigma_theta_rad", "sigma_theta"),
    ):
        val = _optional(smoothing_cfg, json_key, float, 0.0, "config.smoothing")
        if not (np.isfinite(val) and val >= 0):
            raise ConfigError(f"config.smoothing.{json_key}", "must be finite and >= 0")
        sigma_kwargs[attr] = val
    rotation_axis = smoothing_cfg.get("rotation_axis")
    if rotation_axis is None and sigma_kwargs["sigma_theta"] > 0:
        if not axis.is_rotation:
            raise ConfigError(
                "config.smoothing.rotation_axis",
                "required when sigma_theta_rad > 0 and the run axis is a translation",
            )
        rotation_axis = axis.unit_vector.tolist()
    try:
        smoothing = SmoothingSpec(fixed_axis=rotation_axis, **sigma_kwargs)
    except ValueError as exc:
        raise ConfigError("config.smoothing", str(exc)) from None

    n0 = _optional(raw, "n0", int, 100, "config")
    n = _optional(raw, "n", int, 1000, "config")
    if n0 < 1:
        raise ConfigError("config.n0", f"must be >= 1, got {n0}")
    if n < 1:
        raise ConfigError("config.n", f"must be >= 1, got {n}")
    alpha_conf = _optional(raw, "alpha_conf", float, 0.01, "config")
    if not 0.0 < alpha_conf < 1.0:
        raise ConfigError("config.alpha_conf", f"must lie in (0, 1), got {alpha_conf}")

    attack_k = _optional(raw, "attack_k", list, [5, 100], "config")
    for i, k in enumerate(attack_k):
        if not isinstance(k, int) or k < 1:
            raise ConfigError(f"config.attack_k[{i}]", f"must be a positive integer, got {k!r}")

    master_seed = _optional(raw, "master_seed", int, 0, "config")
    if not 0 <= master_seed < 2**64:
        raise ConfigError("config.master_seed", "must be an unsigned 64-bit integer")
    workers = _optional(raw, "workers", int, 1, "config")
    if workers < 1:
        raise ConfigError("config.workers", f"must be >= 1, got {workers}")

    clf_cfg = _optional(raw, "classifier", dict, {}, "config")
    kind = _optional(clf_cfg, "kind", str, "builtin", "config.classifier")
    if kind not in ("builtin", "external"):
        raise ConfigError("config.classifier.kind", f"must be 'builtin' or 'external', got {kind!r}")
    model_path = _optional(clf_cfg, "model_path", str, "model.npz", "config.classifier")
    model_path = Path(model_path)
    if not model_path.is_absolute():
        model_path = base / model_path
    command = _optional(clf_cfg, "command", list, [], "config.classifier")
    if kind == "external":
        if not command or not all(isinstance(c, str) for c in command):
            raise ConfigError("config.classifier.command", "external classifier needs a command list")
    feature_block = _optional(clf_cfg, "feature_block", int, 10, "config.classifier")
    if feature_block < 1:
        raise ConfigError("config.classifier.feature_block", "must be >= 1")
    temperature = _optional(clf_cfg, "temperature", float, 1.0, "config.classifier")
    if not temperature > 0:
        raise ConfigError("config.classifier.temperature", "must be > 0")

    train_cfg = _optional(raw, "train", dict, {}, "config")
    augment = bool(_optional(train_cfg, "augment", bool, False, "config.train"))

    ds_cfg = _optional(raw, "downsample", dict, {}, "config")
    uniform_every_k = _optional(ds_cfg, "uniform_every_k", int, 1, "config.downsample")
    if uniform_every_k < 1:
        raise ConfigError("config.downsample.uniform_every_k", "must be >= 1")
    voxel_size = _optional(ds_cfg, "voxel_size_m", float, 0.0, "config.downsample")
    if voxel_size < 0:
        raise ConfigError("config.downsample.voxel_size_m", "must be >= 0")

    sweep_radii = raw.get("sweep_radii")
    if sweep_radii is not None:
        if not isinstance(sweep_radii, list) or not all(
            isinstance(r, (int, float)) and np.isfinite(r) and r >= 0 for r in sweep_radii
        ):
            raise ConfigError("config.sweep_radii", "must be a list of radii >= 0")
        sweep_radii = [float(r) for r in sweep_radii]

    scene_cfg = _optional(raw, "scene", dict, {}, "config")

    return RunConfig(
        manifest=manifest, output_dir=output_dir, intrinsics=intrinsics,
        axis=axis, target_radius=float(target_radius), smoothing=smoothing,
        n0=n0, n=n, alpha_conf=alpha_conf, attack_k=tuple(attack_k),
        master_seed=master_seed, workers=workers, classifier_kind=kind,
        model_path=model_path, external_command=list(command),
        feature_block=feature_block, temperature=temperature,
        augment_training=augment, uniform_every_k=uniform_every_k,
        voxel_size=voxel_size, sweep_radii=sweep_radii, scene=scene_cfg,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# scene dataset generation and loading


def generate_dataset(config: RunConfig) -> Path:
    """Write per-class PLY clouds and the manifest; returns the manifest path."""
    sc = config.scene
    classes = int(sc.get("classes", 5))
    train_poses = int(sc.get("train_poses", 50))
    test_poses = int(sc.get("test_poses", 12))
    gap_degrees = float(sc.get("gap_degrees", 10.0))
    half_extent = float(sc.get("room_half_extent_m", 0.6))
    density = float(sc.get("point_density_m", 0.02))
    shell = float(sc.get("shell_radius_m", DEFAULT_SHELL_RADIUS_FACTOR * half_extent))
    scene_seed = int(sc.get("scene_seed", 0))

    out = config.manifest.parent
    out.mkdir(parents=True, exist_ok=True)
    entries = []
    for class_id in range(classes):
        spec = SceneSpec.for_class(
            class_id,
            room_half_extent=half_extent,
            point_density=density,
            rng_seed=scene_seed * 1000 + class_id,
        )
        cloud = generate_scene(spec)
        ply_name = f"class{class_id}_{spec.shape.value}.ply"
        (out / ply_name).write_bytes(write_ply(cloud))
        test = sample_poses(
            "test", test_poses, gap_degrees,
            rng_seed=scene_seed * 1000 + 500 + class_id, shell_radius=shell,
        )
        train = sample_poses(
            "train", train_poses, gap_degrees,
            rng_seed=scene_seed * 1000 + 700 + class_id, shell_radius=shell,
            reference=test,
        )
        entries.append(
            {
                "class_id": class_id,
                "shape": spec.shape.value,
                "object_color": list(spec.object_color),
                "rng_seed": spec.rng_seed,
                "ply_path": ply_name,
                "point_count": len(cloud),
                "poses": {
                    "train": [_pose_json(p) for p in train],
                    "test": [_pose_json(p) for p in test],
                },
            }
        )
        log.info("generated class %d (%s): %d points", class_id, spec.shape.value, len(cloud))
    manifest = {
        "schema": MANIFEST_SCHEMA,
        "room_half_extent_m": half_extent,
        "point_density_m": density,
        "shell_radius_m": shell,
        "gap_degrees": gap_degrees,
        "classes": entries,
    }
    config.manifest.write_text(json.dumps(manifest, indent=2))
    return config.manifest


def _pose_json(p: PoseSample) -> dict:
    return {
        "yaw_deg": p.yaw_deg,
        "pitch_deg": p.pitch_deg,
        "roll_deg": p.roll_deg,
        "radius_m": p.radius_m,
        "rotvec": p.pose.rotvec.tolist(),
        "translation": p.pose.translation.tolist(),
    }


def _pose_from_json(entry: dict) -> MotionParams:
    return MotionParams(np.array(entry["rotvec"]), np.array(entry["translation"]))


@dataclass(frozen=True, eq=False)
class PoseCase:
    """One evaluation unit: a pose of one labeled scene."""

    pose_id: str
    class_id: int
    global_index: int
    frame: SceneFrame


@dataclass(frozen=True, eq=False)
class Dataset:
    manifest: dict
    clouds: dict  # class_id -> ColoredPointCloud

    def cases(self, split: str) -> list[PoseCase]:
        out = []
        counter = 0
        for entry in self.manifest["classes"]:
            class_id = int(entry["class_id"])
            cloud = self.clouds[class_id]
            for j, pose_entry in enumerate(entry["poses"][split]):
                out.append(
                    PoseCase(
                        pose_id=f"class{class_id}_{split}{j}",
                        class_id=class_id,
                        global_index=counter,
                        frame=SceneFrame(cloud, _pose_from_json(pose_entry)),
                    )
                )
                counter += 1
        return out


def load_dataset(config: RunConfig) -> Dataset:
    """Load the manifest and clouds, applying the configured downsampling."""
    path = config.manifest
    if not path.exists():
        raise ConfigError("config.manifest", f"file not found: {path}")
    manifest = json.loads(path.read_text())
    if manifest.get("schema") != MANIFEST_SCHEMA:
        raise ConfigError("config.manifest", f"unrecognized manifest schema {manifest.get('schema')!r}")
    clouds = {}
    for i, entry in enumerate(manifest.get("classes", [])):
        ply_path = Path(entry.get("ply_path", ""))
        if not ply_path.is_absolute():
            ply_path = path.parent / ply_path
        if not ply_path.exists():
            raise ConfigError(f"config.manifest.classes[{i}].ply_path", f"file not found: {ply_path}")
        cloud = parse_ply(ply_path.read_bytes())
        if config.uniform_every_k > 1:
            cloud = uniform_downsample(cloud, config.uniform_every_k)
        if config.voxel_size > 0:
            cloud = voxel_downsample(cloud, config.voxel_size)
        clouds[int(entry["class_id"])] = cloud
    return Dataset(manifest=manifest, clouds=clouds)


# ---------------------------------------------------------------------------
# model training and loading


def train_model(config: RunConfig, dataset: Dataset) -> CentroidModel:
    """Fit the built-in centroid classifier on the train split.

    With ``config.augment_training`` each training view renders under one
    Gaussian motion draw (same distribution the smoothed classifier uses).
    """
    cases = dataset.cases("train")
    if not cases:
        raise ValueError("manifest has no training poses")
    seed = SeedSpec(config.master_seed, STREAM_TRAIN_AUG << 32)
    images, labels = [], []
    for case in cases:
        motion = MotionParams.identity()
        if config.augment_training:
            motion = sample_gaussian(
                config.smoothing,
                seed.with_stream((STREAM_TRAIN_AUG << 32) | case.global_index),
                0,
            )
        images.append(render(case.frame, motion, config.intrinsics))
        labels.append(case.class_id)
    num_classes = len(dataset.manifest["classes"])
    return train_centroid(
        images, labels, num_classes,
        feature_spec=FeatureSpec(block=config.feature_block),
        temperature=config.temperature,
    )


def load_classifier(config: RunConfig):
    if config.classifier_kind == "external":
        return ExternalClassifier(config.external_command)
    if not config.model_path.exists():
        raise ConfigError("config.classifier.model_path", f"file not found: {config.model_path}")
    return CentroidModel.load(config.model_path)


# ---------------------------------------------------------------------------
# certification and evaluation runs


def _selection_seed(config: RunConfig, case: PoseCase) -> SeedSpec:
    return SeedSpec(config.master_seed, (STREAM_SELECTION << 32) | case.global_index)


def _estimation_seed(config: RunConfig, case: PoseCase) -> SeedSpec:
    return SeedSpec(config.master_seed, (STREAM_ESTIMATION << 32) | case.global_index)


def _attack_seed(config: RunConfig, case: PoseCase) -> SeedSpec:
    return SeedSpec(config.master_seed, (STREAM_ATTACK << 32) | case.global_index)


def certify_case(config: RunConfig, classifier, case: PoseCase):
    """Two-run certification of one pose: select top-2 with n0 fresh samples,
    then bound both probabilities from n disjoint samples."""
    selection = smoothed_predict(
        case.frame, classifier, config.smoothing, config.n0, config.alpha_conf,
        _selection_seed(config, case), config.intrinsics, config.workers,
    )
    estimation = sample_counts(
        case.frame, classifier, config.smoothing, config.n,
        _estimation_seed(config, case), config.intrinsics, config.workers,
    )
    cert = certify_one_axis(
        estimation, (selection.top_class, selection.runner_up_class),
        config.axis, config.smoothing, config.alpha_conf,
    )
    return selection, cert


def certificate_record(case: PoseCase, selection, cert: Certificate, config: RunConfig) -> dict:
    abstained = bool(selection.abstained or cert.abstained)
    return {
        "pose_id": case.pose_id,
        "true_label": case.class_id,
        "benign_pred": None,  # filled by callers that also run the base model
        "smoothed_pred": int(selection.top_class),
        "abstained": abstained,
        "pA_lower": cert.pA_lower,
        "pB_upper": cert.pB_upper,
        "radius": cert.radius,
        "axis": config.axis.value,
        "sigma": config.smoothing.sigma_for(config.axis),
        "confidence": cert.confidence,
    }


def run_certify(config: RunConfig, dataset: Dataset, classifier) -> list[dict]:
    """Certificates for every test pose, as JSON-ready records."""
    records = []
    for case in dataset.cases("test"):
        benign_label, _ = classifier.predict(
            render(case.frame, MotionParams.identity(), config.intrinsics)
        )
        selection, cert = certify_case(config, classifier, case)
        record = certificate_record(case, selection, cert, config)
        record["benign_pred"] = int(benign_label)
        records.append(record)
        log.info(
            "certified %s: pred=%s abstain=%s radius=%s",
            case.pose_id, record["smoothed_pred"], record["abstained"], record["radius"],
        )
    return records


def smoothed_attack_predictor(config: RunConfig, classifier, case: PoseCase):
    """Smoothed prediction under an attack motion, reusing one smoothing seed
    per pose across all grid points."""
    seed = _attack_seed(config, case)

    def predict(frame: SceneFrame, motion: MotionParams) -> int:
        pred = smoothed_predict(
            frame.perturbed(motion), classifier, config.smoothing, config.n0,
            config.alpha_conf, seed, config.intrinsics, config.workers,
        )
        return ev.ABSTAIN if pred.abstained else pred.top_class

    return predict


def run_evaluate(config: RunConfig, dataset: Dataset, classifier):
    """Full metric run over the test split.

    Returns (records, summary_rows, sweep_rows, certificate_records).
    """
    cases = dataset.cases("test")
    if not cases:
        raise ValueError("manifest has no test poses")
    sigma = config.smoothing.sigma_for(config.axis)
    records: list[ev.EvalRecord] = []
    cert_records: list[dict] = []
    for case in cases:
        benign_label, _ = classifier.predict(
            render(case.frame, MotionParams.identity(), config.intrinsics)
        )
        seln = smoothed_predict(
            case.frame, classifier, config.smoothing, config.n0, config.alpha_conf,
            _selection_seed(config, case), config.intrinsics, config.workers,
        )
        certificate = None
        abstained = seln.abstained
        if sigma > 0:
            estimation = sample_counts(
                case.frame, classifier, config.smoothing, config.n,
                _estimation_seed(config, case), config.intrinsics, config.workers,
            )
            certificate = certify_one_axis(
                estimation, (seln.top_class, seln.runner_up_class),
                config.axis, config.smoothing, config.alpha_conf,
            )
            cert_rec = certificate_record(case, seln, certificate, config)
            cert_rec["benign_pred"] = int(benign_label)
            cert_records.append(cert_rec)
            abstained = bool(seln.abstained or certificate.abstained)
        attack_predict = smoothed_attack_predictor(config, classifier, case)
        # grids for different k overlap; predictions are deterministic per
        # (pose, magnitude), so cache by magnitude
        pred_cache: dict[float, int] = {}

        def cached_attack(frame, value):
            if value not in pred_cache:
                pred_cache[value] = attack_predict(
                    frame, axis_motion_for(config.axis, value)
                )
            return pred_cache[value]

        emp = {
            k: all(
                cached_attack(case.frame, float(v)) == case.class_id
                for v in ev.attack_values(config.target_radius, k)
            )
            for k in config.attack_k
        }
        records.append(
            ev.EvalRecord(
                pose_id=case.pose_id,
                true_label=case.class_id,
                benign_pred=int(benign_label),
                smoothed_pred=int(seln.top_class),
                abstained=bool(seln.abstained),
                axis=config.axis,
                empirical_robust=emp,
                certificate=certificate,
            )
        )
        log.info("evaluated %s", case.pose_id)

    summary_row = {
        "axis": config.axis.value,
        "radius": config.target_radius,
        "sigma": sigma,
        "benign_acc_base": ev.benign_accuracy(records, use_smoothed=False),
        "benign_acc_smoothed": ev.benign_accuracy(records, use_smoothed=True),
        "certified_acc": (
            ev.certified_accuracy(records, config.target_radius, config.axis)
            if sigma > 0 else ""
        ),
    }
    for k in config.attack_k:
        frac = sum(r.empirical_robust[k] for r in records) / len(records)
        summary_row[f"emp_robust_acc_k{k}"] = frac

    if sigma > 0:
        radii = config.sweep_radii
        if radii is None:
            radii = np.linspace(0.0, 2.5 * sigma, 26).tolist()
        sweep_rows = ev.radius_sweep(records, config.axis, radii)
    else:
        sweep_rows = []
    return records, [summary_row], sweep_rows, cert_records


# ---------------------------------------------------------------------------
# artifact writing


def resolved_config_json(config: RunConfig) -> str:
    """The fully resolved run config, embedded next to every artifact."""
    doc = dict(config.raw)
    doc["_resolved"] = {
        "manifest": str(config.manifest),
        "output_dir": str(config.output_dir),
        "axis": config.axis.value,
        "target_radius": config.target_radius,
        "sigma": config.smoothing.sigma_for(config.axis),
        "n0": config.n0,
        "n": config.n,
        "alpha_conf": config.alpha_conf,
        "attack_k": list(config.attack_k),
        "master_seed": config.master_seed,
        "workers": config.workers,
        "backend": _active_backend_name(),
    }
    return json.dumps(doc, indent=2, sort_keys=True)


def _active_backend_name() -> str:
    from ._backend import active_backend

    return active_backend()


def write_artifact(path: Path, content: str, config: RunConfig) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content)
    sidecar = path.with_name(path.name + ".config.json")
    sidecar.write_text(resolved_config_json(config))
