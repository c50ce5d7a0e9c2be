"""Pluggable detectors and the precomputed oracle table.

A detector scores an image with class probabilities. Two implementations:

* SurrogateDetector — deterministic stand-in whose true-class probability
  decays exponentially with the RMSE between the scored image and the
  registered original. Desk-scale runs use this.
* RemoteDetector — HTTP client for a detector service (POST /infer with PPM
  bytes, JSON probabilities back).

Both expose ``infer(img, image_name)`` and ``true_class(image_name,
original)``; the environment only consumes that interface.
"""

from __future__ import annotations

import hashlib
import json
import math
import threading
import urllib.error
import urllib.request
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .raster import Raster, mean_gray, rmse, write_ppm


class DetectorError(Exception):
    """Base class for detector failures."""


class UnknownImageError(DetectorError):
    """Surrogate asked about an image name with no registered original."""


class DetectorTransportError(DetectorError):
    """Remote detector unreachable or HTTP-level failure."""


class DetectorProtocolError(DetectorError):
    """Remote detector answered with an invalid or out-of-contract payload."""


class ProbVector:
    """Class-probability vector: C >= 2 entries in [0,1] summing to 1."""

    __slots__ = ("_probs",)

    def __init__(self, probs, sum_atol: float = 1e-9) -> None:
        arr = np.asarray(probs, dtype=np.float64)
        if arr.ndim != 1 or arr.shape[0] < 2:
            raise ValueError(f"need at least 2 class probabilities, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("probabilities must be finite")
        if arr.min() < 0.0 or arr.max() > 1.0:
            raise ValueError("probabilities must lie in [0, 1]")
        total = float(arr.sum())
        if abs(total - 1.0) > sum_atol:
            raise ValueError(f"probabilities sum to {total!r}, not 1 within {sum_atol}")
        arr = arr.copy()
        arr.setflags(write=False)
        self._probs = arr

    @property
    def probs(self) -> np.ndarray:
        return self._probs

    @property
    def class_count(self) -> int:
        return int(self._probs.shape[0])

    def __repr__(self) -> str:
        return f"ProbVector(C={self.class_count})"


def correct_prob(p: ProbVector, true_class: int) -> float:
    """Probability mass the detector puts on the ground-truth class."""
    if not 0 <= true_class < p.class_count:
        raise IndexError(f"true_class {true_class} out of range for C={p.class_count}")
    return float(p.probs[true_class])


def stable_true_class(image_name: str, class_count: int) -> int:
    """Deterministic class id for an image name (sha256, platform-stable)."""
    digest = hashlib.sha256(image_name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big") % class_count


@dataclass(frozen=True)
class SurrogateConfig:
    """Constants of the deterministic surrogate detector."""

    class_count: int = 10
    p_oracle: float = 0.68
    decay: float = 12.0

    def __post_init__(self) -> None:
        if self.class_count < 2:
            raise ValueError(f"class_count must be >= 2, got {self.class_count}")
        if not 1.0 / self.class_count < self.p_oracle <= 1.0:
            raise ValueError(
                f"p_oracle must be in (1/C, 1], got {self.p_oracle} with C={self.class_count}"
            )
        if not (math.isfinite(self.decay) and self.decay > 0):
            raise ValueError(f"decay must be finite and positive, got {self.decay}")


class SurrogateDetector:
    """Deterministic detector: true-class probability decays with RMSE.

    p_true = 1/C + (p_oracle - 1/C) * exp(-decay * rmse(img, original) / 255),
    remaining mass spread uniformly over the other C - 1 classes. Pure and
    thread-safe.
    """

    def __init__(self, references: Mapping[str, Raster], config: SurrogateConfig = SurrogateConfig()) -> None:
        self.config = config
        self._references = dict(references)

    def infer(self, img: Raster, image_name: str) -> ProbVector:
        original = self._references.get(image_name)
        if original is None:
            raise UnknownImageError(f"no registered original named {image_name!r}")
        if original.pixels.shape != img.pixels.shape:
            raise DetectorError(
                f"{image_name!r}: dimensions {img.width}x{img.height} do not match "
                f"the registered original {original.width}x{original.height}"
            )
        cfg = self.config
        uniform = 1.0 / cfg.class_count
        p_true = uniform + (cfg.p_oracle - uniform) * math.exp(
            -cfg.decay * rmse(img, original) / 255.0
        )
        rest = (1.0 - p_true) / (cfg.class_count - 1)
        probs = np.full(cfg.class_count, rest, dtype=np.float64)
        probs[stable_true_class(image_name, cfg.class_count)] = p_true
        return ProbVector(probs)

    def true_class(self, image_name: str, original: Raster | None = None) -> int:
        return stable_true_class(image_name, self.config.class_count)


class RemoteDetector:
    """HTTP client for a detector service exposing POST /infer and GET /health.

    Sends canonical PPM bytes, validates the JSON reply against the
    probability-vector contract (sum within 1e-6), and never renormalizes.
    Thread-safe: one request per call, cached true classes behind a lock.
    """

    def __init__(self, base_url: str, timeout: float = 30.0) -> None:
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._true_classes: dict[str, int] = {}
        self._lock = threading.Lock()

    def _post_infer(self, body: bytes) -> dict:
        req = urllib.request.Request(
            self.base_url + "/infer",
            data=body,
            headers={"Content-Type": "image/x-portable-pixmap"},
            method="POST",
        )
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                payload = resp.read()
        except urllib.error.HTTPError as exc:
            detail = exc.read().decode("utf-8", "replace")[:200]
            raise DetectorTransportError(f"/infer returned HTTP {exc.code}: {detail}") from exc
        except (urllib.error.URLError, OSError, TimeoutError) as exc:
            raise DetectorTransportError(f"/infer request failed: {exc}") from exc
        try:
            return json.loads(payload)
        except json.JSONDecodeError as exc:
            raise DetectorProtocolError(f"/infer returned non-JSON body: {exc}") from exc

    def infer(self, img: Raster, image_name: str) -> ProbVector:
        reply = self._post_infer(write_ppm(img))
        if not isinstance(reply, dict) or "probs" not in reply:
            raise DetectorProtocolError(f"/infer reply missing 'probs': {reply!r:.200}")
        probs = reply["probs"]
        declared = reply.get("class_count")
        if declared is not None and declared != len(probs):
            raise DetectorProtocolError(
                f"class_count {declared} does not match {len(probs)} probabilities"
            )
        try:
            return ProbVector(probs, sum_atol=1e-6)
        except ValueError as exc:
            raise DetectorProtocolError(f"invalid probability vector: {exc}") from exc

    def true_class(self, image_name: str, original: Raster) -> int:
        with self._lock:
            cached = self._true_classes.get(image_name)
        if cached is not None:
            return cached
        probs = self.infer(original, image_name).probs
        cls = int(np.argmax(probs))
        with self._lock:
            self._true_classes[image_name] = cls
        return cls

    def health(self) -> dict:
        try:
            with urllib.request.urlopen(self.base_url + "/health", timeout=self.timeout) as resp:
                return json.loads(resp.read())
        except (urllib.error.URLError, OSError, json.JSONDecodeError) as exc:
            raise DetectorTransportError(f"/health request failed: {exc}") from exc


@dataclass
class OracleTable:
    """Per-image correct-class probability on the un-noised originals."""

    entries: dict[str, float] = field(default_factory=dict)
    brightness_ref: float = 128.0

    def __post_init__(self) -> None:
        for name, pr in self.entries.items():
            _validate_entry(name, pr)
        if not (math.isfinite(self.brightness_ref) and 0 <= self.brightness_ref <= 255):
            raise ValueError(f"brightness_ref must be in [0, 255], got {self.brightness_ref}")

    def to_csv(self) -> bytes:
        lines = [f"#brightness_ref={self.brightness_ref!r}"]
        for name, pr in self.entries.items():
            lines.append(f"{name},{pr!r}")
        return ("\n".join(lines) + "\n").encode("utf-8")

    @classmethod
    def from_csv(cls, data: bytes) -> "OracleTable":
        text = data.decode("utf-8")
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not lines[0].startswith("#brightness_ref="):
            raise ValueError("oracle table must start with a #brightness_ref= line")
        try:
            ref = float(lines[0].split("=", 1)[1])
        except ValueError as exc:
            raise ValueError(f"bad brightness_ref value: {lines[0]!r}") from exc
        entries: dict[str, float] = {}
        for lineno, line in enumerate(lines[1:], start=2):
            name, sep, raw = line.rpartition(",")
            if not sep or not name:
                raise ValueError(f"oracle table line {lineno}: expected 'name,prob', got {line!r}")
            if name in entries:
                raise ValueError(f"oracle table line {lineno}: duplicate image name {name!r}")
            try:
                pr = float(raw)
            except ValueError as exc:
                raise ValueError(f"oracle table line {lineno}: bad probability {raw!r}") from exc
            entries[name] = pr
        return cls(entries=entries, brightness_ref=ref)

    def save(self, path) -> None:
        with open(path, "wb") as fh:
            fh.write(self.to_csv())

    @classmethod
    def load(cls, path) -> "OracleTable":
        with open(path, "rb") as fh:
            return cls.from_csv(fh.read())


def _validate_entry(name: str, pr: float) -> None:
    if "," in name or "\n" in name or not name:
        raise ValueError(f"image name not representable in CSV: {name!r}")
    if not (math.isfinite(pr) and 0.0 <= pr <= 1.0):
        raise ValueError(f"oracle_pr for {name!r} must be in [0, 1], got {pr}")


def build_oracle_table(
    originals: Sequence[tuple[str, Raster]], detector, jobs: int = 1
) -> OracleTable:
    """Score every original with the detector; record its true-class probability.

    brightness_ref is the mean over originals of mean_gray. Detector failures
    are re-raised annotated with the failing image name.
    """
    items = list(originals)
    if not items:
        raise ValueError("cannot build an oracle table from zero originals")

    def score(item: tuple[str, Raster]) -> float:
        name, img = item
        try:
            return correct_prob(detector.infer(img, name), detector.true_class(name, img))
        except DetectorError as exc:
            raise type(exc)(f"{name}: {exc}") from exc

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(score, items))
    else:
        scores = [score(item) for item in items]
    entries = {name: pr for (name, _), pr in zip(items, scores)}
    if len(entries) != len(items):
        raise ValueError("duplicate image names in originals")
    ref = float(np.mean([mean_gray(img) for _, img in items]))
    return OracleTable(entries=entries, brightness_ref=ref)
