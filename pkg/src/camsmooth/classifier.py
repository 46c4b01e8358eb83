"""Base classifiers for rendered views.

Two interchangeable kinds sit behind the same ``predict(image)`` surface:

* ``CentroidModel`` — nearest-centroid over hole-aware block-pooled color
  features, with a softmax over negative squared distances. Trains in
  seconds, fully deterministic, and strong enough to separate the synthetic
  shape/color classes.
* ``ExternalClassifier`` — any black-box model driven over a child
  process's stdin/stdout with a fixed little-endian framing (see
  ``REQUEST_MAGIC`` below). One request is in flight per connection; each
  worker thread gets its own child process.

Rendered images are mostly holes at desk-scale point densities, so pooling
averages covered pixels only; a block nothing projects into contributes 0.
"""

from __future__ import annotations

import struct
import subprocess
import threading
from dataclasses import dataclass

import numpy as np

from .renderer import ProjectedImage

REQUEST_MAGIC = b"CMSCLS01"


class ClassifierIOError(RuntimeError):
    """The external classifier process broke the request/response protocol."""


@dataclass(frozen=True)
class FeatureSpec:
    """Block-pooling parameters: pixels pool in blocks of ``block`` x ``block``."""

    block: int = 10

    def __post_init__(self):
        if self.block < 1:
            raise ValueError(f"block size must be >= 1, got {self.block}")


def featurize(image: ProjectedImage, spec: FeatureSpec) -> np.ndarray:
    """Hole-aware block-mean feature vector.

    Each block of ``spec.block`` x ``spec.block`` pixels (ragged blocks at
    the right/bottom edges) contributes per-channel means over its covered
    pixels; blocks with no covered pixel contribute exactly 0.
    """
    h, w, c = image.pixels.shape
    cov = image.coverage.astype(np.float64)
    weighted = image.pixels.astype(np.float64) * cov[:, :, None]
    row_idx = np.arange(0, h, spec.block)
    col_idx = np.arange(0, w, spec.block)
    # sum over blocks in two reduceat passes, then normalize by coverage
    sums = np.add.reduceat(np.add.reduceat(weighted, row_idx, axis=0), col_idx, axis=1)
    counts = np.add.reduceat(np.add.reduceat(cov, row_idx, axis=0), col_idx, axis=1)
    feats = np.zeros_like(sums)
    covered = counts > 0
    feats[covered] = sums[covered] / counts[covered][:, None]
    return feats.ravel()


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max()
    e = np.exp(shifted)
    return e / e.sum()


@dataclass(frozen=True, eq=False)
class CentroidModel:
    """Per-class mean feature vectors plus the spec that produced them."""

    centroids: np.ndarray
    feature_spec: FeatureSpec
    temperature: float = 1.0

    def __post_init__(self):
        cen = np.asarray(self.centroids, dtype=np.float64)
        if cen.ndim != 2 or cen.shape[0] < 1:
            raise ValueError(f"centroids must be (classes, dim), got {cen.shape}")
        if not np.all(np.isfinite(cen)):
            raise ValueError("centroids must be finite")
        if not (np.isfinite(self.temperature) and self.temperature > 0):
            raise ValueError(f"temperature must be > 0, got {self.temperature}")
        cen.setflags(write=False)
        object.__setattr__(self, "centroids", cen)

    @property
    def num_classes(self) -> int:
        return self.centroids.shape[0]

    def predict(self, image: ProjectedImage) -> tuple[int, np.ndarray]:
        """(argmax class, per-class probabilities).

        Probabilities are softmax(-squared distance / temperature); argmax
        ties resolve to the lowest class index (np.argmax convention).
        """
        feats = featurize(image, self.feature_spec)
        if feats.shape[0] != self.centroids.shape[1]:
            raise ValueError(
                f"image featurizes to {feats.shape[0]} dims, model expects "
                f"{self.centroids.shape[1]}"
            )
        d2 = np.sum((self.centroids - feats) ** 2, axis=1)
        probs = _softmax(-d2 / self.temperature)
        return int(np.argmax(probs)), probs

    def save(self, path) -> None:
        np.savez(
            path,
            centroids=self.centroids,
            block=np.int64(self.feature_spec.block),
            temperature=np.float64(self.temperature),
        )

    @classmethod
    def load(cls, path) -> "CentroidModel":
        with np.load(path) as data:
            return cls(
                centroids=data["centroids"],
                feature_spec=FeatureSpec(block=int(data["block"])),
                temperature=float(data["temperature"]),
            )


def train_centroid(
    images,
    labels,
    num_classes: int,
    feature_spec: FeatureSpec = FeatureSpec(),
    temperature: float = 1.0,
) -> CentroidModel:
    """Fit per-class mean features. Every class needs at least one example."""
    labels = np.asarray(labels, dtype=np.int64)
    if len(images) != len(labels) or len(images) == 0:
        raise ValueError("need equally many images and labels, at least one each")
    if labels.min() < 0 or labels.max() >= num_classes:
        raise ValueError("labels must lie in [0, num_classes)")
    feats = np.stack([featurize(img, feature_spec) for img in images])
    centroids = np.zeros((num_classes, feats.shape[1]))
    for cls_id in range(num_classes):
        member = labels == cls_id
        if not member.any():
            raise ValueError(f"training set has no examples of class {cls_id}")
        centroids[cls_id] = feats[member].mean(axis=0)
    return CentroidModel(centroids, feature_spec, temperature)


class ExternalClassifier:
    """Black-box classifier spoken to over a child process's std streams.

    Request: 8-byte magic ``CMSCLS01``, u32 height, u32 width, u32
    channels, then H*W*C little-endian float32 pixels. Response: u32 class
    count, then that many little-endian float32 probabilities. The child
    must answer requests in order, one at a time; each worker thread gets
    its own child process (lazily started).
    """

    def __init__(self, command: list[str]):
        if not command:
            raise ValueError("external classifier needs a command line")
        self._command = list(command)
        self._local = threading.local()
        self._lock = threading.Lock()
        self._procs: list[subprocess.Popen] = []
        self.num_classes: int | None = None

    def _process(self) -> subprocess.Popen:
        proc = getattr(self._local, "proc", None)
        if proc is None or proc.poll() is not None:
            proc = subprocess.Popen(
                self._command,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
            )
            self._local.proc = proc
            with self._lock:
                self._procs.append(proc)
        return proc

    def _read_exact(self, proc: subprocess.Popen, n: int) -> bytes:
        buf = proc.stdout.read(n)
        if buf is None or len(buf) != n:
            raise ClassifierIOError(
                f"external classifier closed its stream mid-response "
                f"(wanted {n} bytes, got {0 if buf is None else len(buf)})"
            )
        return buf

    def predict(self, image: ProjectedImage) -> tuple[int, np.ndarray]:
        h, w, c = image.pixels.shape
        payload = np.ascontiguousarray(image.pixels, dtype="<f4").tobytes()
        proc = self._process()
        try:
            proc.stdin.write(REQUEST_MAGIC + struct.pack("<III", h, w, c) + payload)
            proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise ClassifierIOError(f"external classifier rejected the request: {exc}") from exc
        (count,) = struct.unpack("<I", self._read_exact(proc, 4))
        if count == 0 or count > 1_000_000:
            raise ClassifierIOError(f"implausible class count {count}")
        probs = np.frombuffer(self._read_exact(proc, 4 * count), dtype="<f4").astype(np.float64)
        if self.num_classes is None:
            self.num_classes = count
        elif self.num_classes != count:
            raise ClassifierIOError(
                f"class count changed mid-run: {self.num_classes} -> {count}"
            )
        return int(np.argmax(probs)), probs

    def close(self) -> None:
        with self._lock:
            procs, self._procs = self._procs, []
        for proc in procs:
            if proc.poll() is None:
                proc.stdin.close()
                proc.wait(timeout=10)

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()
