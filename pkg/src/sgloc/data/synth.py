"""Planted-segment synthetic corpus.

Each video hides one interval whose frame and scene-graph tokens carry a
query-correlated signal; everything else is noise. A localizer that reads
the query can find the interval, one that ignores it cannot.
"""
from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np

from .questions import Entity, FrameGraph, Span, ToySceneGraph, generate_questions
from .samples import VideoSample

PEOPLE = ("basketball player", "referee", "coach", "child", "man", "woman")
OBJECTS = ("basketball", "chair", "table", "phone", "cup")
PREDICATES = ("looking at", "holding", "talking to", "standing next to", "touching")
ACTIVITIES = (
    "the players are passing the basketball for the {nth} time",
    "the {who} is walking across the court",
    "the {who} is talking to the crowd",
    "the players are shooting for the {nth} time",
)


class CorpusSpecError(ValueError):
    pass


@dataclass(frozen=True)
class CorpusSpec:
    n_videos: int = 64
    min_frames: int = 32
    max_frames: int = 32
    d_v: int = 16
    d_s: int = 16
    d_t: int = 16
    l_patch: int = 8
    k_sg: int = 8
    n_q: int = 4
    min_interval: int = 6
    max_interval: int = 12
    snr: float = 4.0
    query_noise: float = 0.05
    seed: int = 0

    def validate(self):
        for name in ("n_videos", "min_frames", "d_v", "d_s", "d_t", "l_patch", "k_sg", "n_q", "min_interval"):
            if getattr(self, name) < 1:
                raise CorpusSpecError(f"{name} must be positive")
        if self.max_frames < self.min_frames or self.max_interval < self.min_interval:
            raise CorpusSpecError("frame and interval ranges must be non-empty")
        if self.min_interval > self.min_frames:
            raise CorpusSpecError(
                f"planted interval length {self.min_interval} exceeds the shortest video ({self.min_frames} frames)")
        if not self.snr >= 0 or math.isnan(self.snr):
            raise CorpusSpecError("snr must be non-negative")


@dataclass
class Corpus:
    spec: CorpusSpec
    samples: list
    latents: np.ndarray      # [n_videos, d_t] unit query vectors
    mix_v: np.ndarray        # [d_t, d_v] latent -> frame feature space
    mix_s: np.ndarray        # [d_t, d_s] latent -> scene-graph feature space

    def query_embedding(self, i: int):
        """Noise-free frame and scene-graph signal vectors for video ``i``."""
        return self.latents[i] @ self.mix_v, self.latents[i] @ self.mix_s


def _unit(v):
    return v / np.linalg.norm(v)


def _ordinal(k):
    return {1: "1st", 2: "2nd", 3: "3rd"}.get(k, f"{k}th")


def toy_scene_graph(rng: np.random.Generator, n_frames: int, start: int, end: int) -> ToySceneGraph:
    """A small scene graph with a single annotated span at ``[start, end)``."""
    n_people = int(rng.integers(2, 5))
    people = [Entity(i, PEOPLE[int(rng.integers(len(PEOPLE)))], "standing") for i in range(n_people)]
    thing = Entity(n_people, OBJECTS[int(rng.integers(len(OBJECTS)))], "standing", kind="object")
    frames = []
    for t in range(n_frames):
        ents = [Entity(p.id, p.name, "running" if start <= t < end and p.id == 0 else
                       ("walking" if t % 2 else "standing")) for p in people] + [thing]
        edges = []
        if start <= t < end:
            pred = PREDICATES[(start + end) % len(PREDICATES)]
            edges.append((0, pred, 1 if n_people > 1 else thing.id))
            edges.append((1, "holding", thing.id))
        frames.append(FrameGraph(ents, edges))
    text = ACTIVITIES[int(rng.integers(len(ACTIVITIES)))].format(nth=_ordinal(int(rng.integers(1, 5))),
                                                                  who=people[0].name)
    return ToySceneGraph(frames, [Span(start, end, text)])


def synthesize_corpus(spec: CorpusSpec) -> Corpus:
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    mix_v = rng.normal(size=(spec.d_t, spec.d_v)) / math.sqrt(spec.d_t)
    mix_s = rng.normal(size=(spec.d_t, spec.d_s)) / math.sqrt(spec.d_t)
    # snr = 0 means infinitely loud noise: nothing is planted
    noise_scale = 0.0 if math.isinf(spec.snr) else (1.0 / spec.snr if spec.snr > 0 else None)
    samples, latents = [], []
    for i in range(spec.n_videos):
        n = int(rng.integers(spec.min_frames, spec.max_frames + 1))
        length = int(rng.integers(spec.min_interval, min(spec.max_interval, n) + 1))
        start = int(rng.integers(0, n - length + 1))
        end = start + length
        q = _unit(rng.normal(size=spec.d_t))
        sig_v, sig_s = _unit(q @ mix_v), _unit(q @ mix_s)
        # per-element std 1/sqrt(d) gives noise vectors of roughly unit norm
        X = rng.normal(size=(n, spec.l_patch, spec.d_v)) / math.sqrt(spec.d_v)
        S = rng.normal(size=(n, spec.k_sg, spec.d_s)) / math.sqrt(spec.d_s)
        if noise_scale is not None:
            X[start:end] = sig_v + X[start:end] * noise_scale
            S[start:end] = sig_s + S[start:end] * noise_scale
        Q = q + rng.normal(size=(spec.n_q, spec.d_t)) * (spec.query_noise / math.sqrt(spec.d_t))
        f = np.zeros(n)
        f[start:end] = 1.0
        s = -rng.uniform(0.0, 1.0, size=n)
        s[start:end] = 1.0
        graph = toy_scene_graph(rng, n, start, end)
        qa = generate_questions(graph)[0]
        samples.append(VideoSample(f"synth-{spec.seed}-{i:04d}", X, S, Q, f, s, [(start, end)],
                                   question=qa.question, answer=qa.answer))
        latents.append(q)
    return Corpus(spec, samples, np.array(latents), mix_v, mix_s)


def split_corpus(samples: list, test_fraction: float):
    """Deterministic train/test split: the trailing fraction becomes the test set."""
    if not 0.0 <= test_fraction < 1.0:
        raise CorpusSpecError("test_fraction must be in [0, 1)")
    n_test = int(round(len(samples) * test_fraction))
    cut = len(samples) - n_test
    return samples[:cut], samples[cut:]


def spec_dict(spec: CorpusSpec) -> dict:
    return asdict(spec)
