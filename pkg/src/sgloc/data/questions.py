"""Relationship, motion and description questions over toy scene graphs."""
from __future__ import annotations

from dataclasses import dataclass, field

MOTIONS = ("standing", "walking", "running")
OUTLINED = "the outlined person"


@dataclass(frozen=True)
class Entity:
    id: int
    name: str
    attribute: str
    kind: str = "person"


@dataclass
class FrameGraph:
    entities: list
    edges: list = field(default_factory=list)  # (source id, predicate, target id)


@dataclass(frozen=True)
class Span:
    start: int
    end: int
    description: str


@dataclass
class ToySceneGraph:
    frames: list
    spans: list

    def __post_init__(self):
        for i, frame in enumerate(self.frames):
            ids = {e.id for e in frame.entities}
            for e in frame.entities:
                if e.attribute not in MOTIONS:
                    raise ValueError(f"frame {i}: entity {e.id} has attribute {e.attribute!r}")
            for src, _, tgt in frame.edges:
                if src not in ids or tgt not in ids:
                    raise ValueError(f"frame {i}: edge endpoint missing ({src} -> {tgt})")
        last = 0
        for sp in self.spans:
            if not (last <= sp.start < sp.end <= len(self.frames)):
                raise ValueError(f"span ({sp.start}, {sp.end}) is out of order, overlapping or out of range")
            last = sp.end


@dataclass(frozen=True)
class QARecord:
    category: str
    question: str
    answer: str
    interval: tuple


def pluralize(name: str) -> str:
    head, _, last = name.rpartition(" ")
    if last == "person":
        word = "people"
    elif last.endswith(("s", "x", "ch", "sh")):
        word = last + "es"
    elif last.endswith("y") and last[-2:-1] not in "aeiou":
        word = last[:-1] + "ies"
    else:
        word = last + "s"
    return f"{head} {word}" if head else word


def _title(name: str) -> str:
    return " ".join(w.capitalize() for w in name.split())


def _span_items(graph: ToySceneGraph, span: Span):
    entities, edges, counts = {}, {}, {}
    for frame in graph.frames[span.start:span.end]:
        by_id = {e.id: e for e in frame.entities}
        for e in frame.entities:
            entities.setdefault(e.id, e)
        for src, pred, tgt in frame.edges:
            edges.setdefault((src, pred, tgt), (by_id[src], pred, by_id[tgt]))
        frame_counts = {}
        for e in frame.entities:
            frame_counts[e.name] = frame_counts.get(e.name, 0) + 1
        for name, c in frame_counts.items():
            counts[name] = max(counts.get(name, 0), c)
    return entities, edges, counts


def generate_questions(graph: ToySceneGraph, outline: bool = True) -> list[QARecord]:
    """One relationship question per (span, edge), one motion question per
    (span, entity) and one counting question per (span, identity).

    With ``outline`` the queried entity is referred to as "the outlined person",
    as in box-augmented videos.
    """
    records = []
    for span in graph.spans:
        when = f"When {span.description},"
        interval = (span.start, span.end)
        entities, edges, counts = _span_items(graph, span)
        for src, pred, tgt in edges.values():
            subject = OUTLINED if outline else f"the {src.name}"
            wh = "Who" if tgt.kind == "person" else "What"
            records.append(QARecord("relationship", f"{when} {wh} is {subject} {pred}?", _title(tgt.name), interval))
        for ent in entities.values():
            subject = OUTLINED if outline else f"the {ent.name}"
            records.append(QARecord("motion", f"{when} is {subject} standing, walking, or running?",
                                    ent.attribute.capitalize(), interval))
        for name, count in counts.items():
            records.append(QARecord("description", f"{when} how many {pluralize(name)} are in the scene?",
                                    str(count), interval))
    return records
