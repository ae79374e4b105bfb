"""Retrieval-augmented aviation-training QA engine.

The package pairs a preference-optimization core (pairwise losses,
gradients, and a deterministic full-batch trainer over categorical
policies) with a retrieval pipeline (hash or remote embeddings, exact
top-k cosine search, templated prompt augmentation, cited answers), plus
an evaluation harness, an HTTP service, and a CLI.
"""

__version__ = "0.1.0"

from .embedding import HashEmbedder, RemoteEmbedder, embed_hash
from .pipeline import Answer, PromptTemplate, RemoteGenerator, StubGenerator, answer_question
from .preference import (
    CategoricalPolicy,
    DpoConfig,
    PreferenceDataset,
    PreferencePair,
    TrainReport,
    dpo_gradient,
    dpo_loss,
    load_preference_dataset,
    preference_probability,
    reward_margin,
    sft_loss,
    train,
)
from .vectorstore import VectorIndex, chunk_document, cosine_similarity

__all__ = [
    "__version__",
    "Answer",
    "CategoricalPolicy",
    "DpoConfig",
    "HashEmbedder",
    "PreferenceDataset",
    "PreferencePair",
    "PromptTemplate",
    "RemoteEmbedder",
    "RemoteGenerator",
    "StubGenerator",
    "TrainReport",
    "VectorIndex",
    "answer_question",
    "chunk_document",
    "cosine_similarity",
    "dpo_gradient",
    "dpo_loss",
    "embed_hash",
    "load_preference_dataset",
    "preference_probability",
    "reward_margin",
    "sft_loss",
    "train",
]
