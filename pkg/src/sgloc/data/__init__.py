from .questions import Entity, FrameGraph, QARecord, Span, ToySceneGraph, generate_questions, pluralize
from .samples import SampleError, VideoSample, load_dataset, saliency_to_rating, save_dataset
from .synth import Corpus, CorpusSpec, CorpusSpecError, split_corpus, synthesize_corpus, toy_scene_graph

__all__ = [
    "Entity", "FrameGraph", "QARecord", "Span", "ToySceneGraph", "generate_questions", "pluralize",
    "SampleError", "VideoSample", "load_dataset", "save_dataset", "saliency_to_rating",
    "Corpus", "CorpusSpec", "CorpusSpecError", "split_corpus", "synthesize_corpus", "toy_scene_graph",
]
