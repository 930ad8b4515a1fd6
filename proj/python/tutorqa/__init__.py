"""Knowledge-grounded question answering over screencast tutorials."""

from ._tutorqa import (
    CueCatalog,
    Dataset,
    Graph,
    KnowledgeBase,
    Model,
    SynthData,
    TutorqaError,
    WordVectors,
    answer_pool,
    bag_similarity,
    build_model,
    deepwalk_embeddings,
    evaluate_model,
    gradient_check,
    predict_and_score_cues,
    recognize,
    split_synth,
    synth_dataset,
    to_graph,
    train_model,
)

__all__ = [
    "CueCatalog",
    "Dataset",
    "Graph",
    "KnowledgeBase",
    "Model",
    "SynthData",
    "TutorqaError",
    "WordVectors",
    "answer_pool",
    "bag_similarity",
    "build_model",
    "deepwalk_embeddings",
    "evaluate_model",
    "gradient_check",
    "predict_and_score_cues",
    "recognize",
    "split_synth",
    "synth_dataset",
    "to_graph",
    "train_model",
]
