"""Open-ended answer scoring: positional token accuracy and WUPS."""
from __future__ import annotations

from importlib import resources
from pathlib import Path

DOWNWEIGHT = 0.1


class TaxonomyError(ValueError):
    pass


def tokenize(answer) -> list[str]:
    """Lowercase whitespace tokens; token lists are lowercased as given."""
    if isinstance(answer, str):
        return answer.lower().split()
    return [str(t).lower() for t in answer]


class Taxonomy:
    """Single-rooted hypernym tree with depth(root) = 1."""

    def __init__(self, parents: dict[str, str]):
        roots = [c for c, p in parents.items() if c == p]
        if len(roots) != 1:
            raise TaxonomyError(f"taxonomy needs exactly one self-parented root, found {len(roots)}")
        self.root = roots[0]
        self.parents = dict(parents)
        self._paths: dict[str, list[str]] = {}
        for node in self.parents:
            self._paths[node] = self._path(node)

    def _path(self, node: str) -> list[str]:
        path, seen = [node], {node}
        while node != self.root:
            node = self.parents.get(node)
            if node is None:
                raise TaxonomyError(f"{path[0]!r} has an ancestor without a parent entry ({path[-1]!r})")
            if node in seen:
                raise TaxonomyError(f"cycle through {node!r}")
            path.append(node)
            seen.add(node)
        return path[::-1]   # root first

    @classmethod
    def from_lines(cls, lines, source: str = "<taxonomy>") -> "Taxonomy":
        parents = {}
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 2:
                raise TaxonomyError(f"{source}:{lineno}: expected 'child parent', got {raw.strip()!r}")
            child, parent = (p.lower() for p in parts)
            if child in parents and parents[child] != parent:
                raise TaxonomyError(f"{source}:{lineno}: {child!r} already has parent {parents[child]!r}")
            parents[child] = parent
        return cls(parents)

    @classmethod
    def load(cls, path) -> "Taxonomy":
        return cls.from_lines(Path(path).read_text().splitlines(), str(path))

    @classmethod
    def bundled(cls) -> "Taxonomy":
        text = resources.files("sgloc.resources").joinpath("taxonomy.txt").read_text()
        return cls.from_lines(text.splitlines(), "taxonomy.txt")

    def __contains__(self, token: str) -> bool:
        return token in self._paths

    def __len__(self):
        return len(self._paths)

    def depth(self, token: str) -> int:
        return len(self._paths[token])

    def lcs(self, a: str, b: str) -> str:
        common = None
        for x, y in zip(self._paths[a], self._paths[b]):
            if x != y:
                break
            common = x
        return common


def wup_similarity(taxonomy: Taxonomy, a: str, b: str) -> float:
    """Wu-Palmer similarity; tokens outside the taxonomy score 1 if equal, else 0."""
    if a not in taxonomy or b not in taxonomy:
        return 1.0 if a == b else 0.0
    return 2.0 * taxonomy.depth(taxonomy.lcs(a, b)) / (taxonomy.depth(a) + taxonomy.depth(b))


def thresholded(w: float, gamma: float) -> float:
    return w if w >= gamma else DOWNWEIGHT * w


def _directed(src, dst, taxonomy, gamma) -> float:
    prod = 1.0
    for a in src:
        prod *= max((thresholded(wup_similarity(taxonomy, a, b), gamma) for b in dst), default=0.0)
    return prod


def wups_score(prediction, truth, taxonomy: Taxonomy, gamma: float = 0.9) -> float:
    """WUPS for one answer pair; an empty prediction scores 0."""
    pred, gt = tokenize(prediction), tokenize(truth)
    if not pred or not gt:
        return 0.0
    return min(_directed(pred, gt, taxonomy, gamma), _directed(gt, pred, taxonomy, gamma))


def wups_at(pairs, taxonomy: Taxonomy | None = None, gamma: float = 0.9) -> float:
    """Mean WUPS@gamma over ``(prediction, ground truth)`` pairs."""
    if not 0.0 < gamma <= 1.0:
        raise ValueError("gamma must lie in (0, 1]")
    taxonomy = Taxonomy.bundled() if taxonomy is None else taxonomy
    pairs = list(pairs)
    if not pairs:
        return 0.0
    return sum(wups_score(p, t, taxonomy, gamma) for p, t in pairs) / len(pairs)


def pair_accuracy(prediction, truth) -> float:
    pred, gt = tokenize(prediction), tokenize(truth)
    if not gt:
        raise ValueError("ground-truth answer is empty")
    return sum(p == g for p, g in zip(pred, gt)) / len(gt)


def token_accuracy(pairs) -> float:
    """Mean over pairs of the fraction of ground-truth positions matched by the prediction."""
    pairs = list(pairs)
    if not pairs:
        return 0.0
    scores = []
    for i, (pred, gt) in enumerate(pairs):
        try:
            scores.append(pair_accuracy(pred, gt))
        except ValueError as exc:
            raise ValueError(f"pair {i}: {exc}") from None
    return sum(scores) / len(scores)
