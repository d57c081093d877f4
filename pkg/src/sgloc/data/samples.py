from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np


class SampleError(ValueError):
    pass


@dataclass
class VideoSample:
    """One video with its query and frame-level supervision.

    Shapes: X [n, L_patch, d_v], S [n, k_sg, d_s], Q [n_q, d_t], f and s [n].
    ``S_valid`` flags real (non-padding) scene-graph rows; ``None`` means all
    rows are real.
    """

    video_id: str
    X: np.ndarray
    S: np.ndarray
    Q: np.ndarray
    f: np.ndarray
    s: np.ndarray
    intervals: list
    S_valid: Optional[np.ndarray] = None
    question: str = ""
    answer: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=np.float64)
        self.S = np.asarray(self.S, dtype=np.float64)
        self.Q = np.asarray(self.Q, dtype=np.float64)
        self.f = np.asarray(self.f, dtype=np.float64)
        self.s = np.asarray(self.s, dtype=np.float64)
        self.intervals = [(int(a), int(b)) for a, b in self.intervals]
        if self.S_valid is not None:
            self.S_valid = np.asarray(self.S_valid, dtype=bool)
        self.validate()

    def _fail(self, name, why):
        raise SampleError(f"video {self.video_id!r}: field {name!r} {why}")

    def validate(self):
        n = self.f.shape[0] if self.f.ndim == 1 else -1
        if n < 1:
            self._fail("f", "must be a non-empty vector")
        for name, arr, rank in (("X", self.X, 3), ("S", self.S, 3), ("Q", self.Q, 2)):
            if arr.ndim != rank or 0 in arr.shape:
                self._fail(name, f"must be a non-empty rank-{rank} array, got shape {arr.shape}")
            if not np.isfinite(arr).all():
                self._fail(name, "contains NaN or Inf")
        if self.X.shape[0] != n or self.S.shape[0] != n or self.s.shape != (n,):
            self._fail("frames", f"X, S, f and s disagree on frame count ({self.X.shape[0]}, "
                                 f"{self.S.shape[0]}, {n}, {self.s.shape})")
        if self.S_valid is not None and self.S_valid.shape != self.S.shape[:2]:
            self._fail("S_valid", f"shape {self.S_valid.shape} does not match S rows {self.S.shape[:2]}")
        if not np.all((self.f == 0.0) | (self.f == 1.0)):
            self._fail("f", "must contain only 0 and 1")
        if not np.isfinite(self.s).all() or np.any(np.abs(self.s) > 1.0):
            self._fail("saliency", "must lie within [-1, 1]")
        inside = np.zeros(n)
        for a, b in self.intervals:
            if not 0 <= a < b <= n:
                self._fail("intervals", f"({a}, {b}) outside 0 <= start < end <= {n}")
            inside[a:b] = 1.0
        if not np.array_equal(inside, self.f):
            self._fail("f", "must be 1 exactly on frames covered by an interval")

    @property
    def n_frames(self) -> int:
        return self.f.shape[0]

    @property
    def shape_key(self) -> tuple:
        """Samples sharing this key can be stacked into one batch tensor."""
        return (self.n_frames, self.X.shape[1], self.X.shape[2], self.S.shape[1], self.S.shape[2],
                self.Q.shape[0], self.Q.shape[1])

    def valid_mask(self) -> np.ndarray:
        return np.ones(self.S.shape[:2], dtype=bool) if self.S_valid is None else self.S_valid

    def to_json(self) -> dict:
        doc = {
            "video_id": self.video_id,
            "frames": self.n_frames,
            "X": self.X.tolist(),
            "S": self.S.tolist(),
            "Q": self.Q.tolist(),
            "f": [int(v) for v in self.f],
            "s": self.s.tolist(),
            "intervals": [list(iv) for iv in self.intervals],
            "question": self.question,
            "answer": self.answer,
        }
        if self.S_valid is not None:
            doc["S_valid"] = self.S_valid.astype(int).tolist()
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "VideoSample":
        vid = doc.get("video_id", "?")
        for key in ("video_id", "X", "S", "Q", "f", "s", "intervals"):
            if key not in doc:
                raise SampleError(f"video {vid!r}: missing field {key!r}")
        sample = cls(
            video_id=str(doc["video_id"]), X=doc["X"], S=doc["S"], Q=doc["Q"], f=doc["f"], s=doc["s"],
            intervals=doc["intervals"], S_valid=doc.get("S_valid"),
            question=doc.get("question", ""), answer=doc.get("answer", ""),
        )
        if "frames" in doc and int(doc["frames"]) != sample.n_frames:
            raise SampleError(f"video {vid!r}: field 'frames' says {doc['frames']}, arrays have {sample.n_frames}")
        return sample


def saliency_to_rating(s: np.ndarray) -> np.ndarray:
    """Map saliency in [-1, 1] onto the 0-4 clip rating scale (1.0 -> 4)."""
    return np.clip(np.rint(2.0 * (np.asarray(s) + 1.0)), 0, 4).astype(int)


def load_dataset(path) -> list[VideoSample]:
    samples = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise SampleError(f"{path}:{lineno}: malformed JSON ({exc.msg})") from exc
            if not isinstance(doc, dict):
                raise SampleError(f"{path}:{lineno}: expected a JSON object")
            samples.append(VideoSample.from_json(doc))
    return samples


def save_dataset(path, samples) -> None:
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w") as fh:
        for sample in samples:
            fh.write(json.dumps(sample.to_json(), sort_keys=True) + "\n")
