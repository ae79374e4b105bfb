"""Pairwise preference optimization over categorical policies."""

from .loader import load_preference_dataset, parse_preference_records, save_preference_dataset
from .objectives import (
    dpo_gradient,
    dpo_loss,
    mean_preference_probability,
    neg_log_sigmoid,
    preference_probability,
    reward_margin,
    sft_gradient,
    sft_loss,
)
from .trainer import OBJECTIVES, train
from .types import CategoricalPolicy, DpoConfig, PreferenceDataset, PreferencePair, TrainReport

__all__ = [
    "CategoricalPolicy",
    "DpoConfig",
    "OBJECTIVES",
    "PreferenceDataset",
    "PreferencePair",
    "TrainReport",
    "dpo_gradient",
    "dpo_loss",
    "load_preference_dataset",
    "mean_preference_probability",
    "neg_log_sigmoid",
    "parse_preference_records",
    "preference_probability",
    "reward_margin",
    "save_preference_dataset",
    "sft_gradient",
    "sft_loss",
    "train",
]
