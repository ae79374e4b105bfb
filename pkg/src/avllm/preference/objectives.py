"""Pairwise preference objectives: margins, probabilities, losses, gradients.

The Bradley-Terry probability that the preferred response beats the
dispreferred one is the logistic sigmoid of an implicit reward margin

    u = beta * [(log pi(y_w|x) - log pi_ref(y_w|x))
                - (log pi(y_l|x) - log pi_ref(y_l|x))]

and the training loss is the mean over pairs of -log sigmoid(u). The
per-prompt normalizer inside each reward cancels in the margin and is never
materialized. For a categorical policy the logsumexp terms cancel as well,
so u is affine in the logits and the analytic gradient touches only the
preferred and dispreferred entries of each pair:

    dL/du = -sigmoid(-u)        (per pair, before the 1/N of the mean)
    dL/d theta_w = -beta * sigmoid(-u) / N
    dL/d theta_l = +beta * sigmoid(-u) / N

The supervised baseline keeps only the preferred response: the mean negative
log-likelihood -log pi(y_w|x), with no reference policy.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyDataset
from .types import CategoricalPolicy, PreferenceDataset, PreferencePair

__all__ = [
    "preference_probability",
    "neg_log_sigmoid",
    "reward_margin",
    "dpo_loss",
    "dpo_gradient",
    "sft_loss",
    "sft_gradient",
    "mean_preference_probability",
]


def preference_probability(margin: float) -> float:
    """Logistic sigmoid of the reward margin, overflow-safe on both tails.

    For margin >= 0 computes 1 / (1 + exp(-margin)); for margin < 0 computes
    exp(margin) / (1 + exp(margin)). Neither branch exponentiates a positive
    argument, so the result never overflows and never underflows to exactly
    0 or 1 for |margin| up to around 700.
    """
    if margin >= 0.0:
        return 1.0 / (1.0 + math.exp(-margin))
    e = math.exp(margin)
    return e / (1.0 + e)


def neg_log_sigmoid(margin: float) -> float:
    """-log sigmoid(margin) via log1p, avoiding the sigmoid's saturation."""
    if margin >= 0.0:
        return math.log1p(math.exp(-margin))
    return -margin + math.log1p(math.exp(margin))


def reward_margin(
    pair: PreferencePair,
    policy: CategoricalPolicy,
    reference: CategoricalPolicy,
    beta: float,
) -> float:
    """Scaled difference of policy/reference log-ratios between the two responses.

    Antisymmetric under swapping the responses and linear in beta, both
    exactly in floating point (the margin is beta times a single subtraction).
    """
    ratio_w = policy.log_prob(pair.prompt_id, pair.preferred) - reference.log_prob(
        pair.prompt_id, pair.preferred
    )
    ratio_l = policy.log_prob(pair.prompt_id, pair.dispreferred) - reference.log_prob(
        pair.prompt_id, pair.dispreferred
    )
    return beta * (ratio_w - ratio_l)


def _require_pairs(dataset: PreferenceDataset) -> list[PreferencePair]:
    if not dataset.pairs:
        raise EmptyDataset("preference dataset contains no pairs")
    return dataset.pairs


def dpo_loss(
    dataset: PreferenceDataset,
    policy: CategoricalPolicy,
    reference: CategoricalPolicy,
    beta: float,
) -> float:
    """Mean over pairs of -log sigmoid(margin). Equals ln 2 when policy == reference."""
    pairs = _require_pairs(dataset)
    total = 0.0
    for pair in pairs:
        total += neg_log_sigmoid(reward_margin(pair, policy, reference, beta))
    return total / len(pairs)


def dpo_gradient(
    dataset: PreferenceDataset,
    policy: CategoricalPolicy,
    reference: CategoricalPolicy,
    beta: float,
) -> dict[str, np.ndarray]:
    """Exact gradient of ``dpo_loss`` with respect to the policy logits.

    Returns a table shaped like ``policy.logits``; prompts untouched by any
    pair get zero vectors.
    """
    pairs = _require_pairs(dataset)
    grad = {p: np.zeros_like(v) for p, v in policy.logits.items()}
    n = len(pairs)
    for pair in pairs:
        u = reward_margin(pair, policy, reference, beta)
        coeff = preference_probability(-u) * beta / n
        iw = policy.candidate_index(pair.prompt_id, pair.preferred)
        il = policy.candidate_index(pair.prompt_id, pair.dispreferred)
        grad[pair.prompt_id][iw] -= coeff
        grad[pair.prompt_id][il] += coeff
    return grad


def sft_loss(dataset: PreferenceDataset, policy: CategoricalPolicy) -> float:
    """Mean negative log-likelihood of the preferred responses only."""
    pairs = _require_pairs(dataset)
    total = 0.0
    for pair in pairs:
        total -= policy.log_prob(pair.prompt_id, pair.preferred)
    return total / len(pairs)


def sft_gradient(dataset: PreferenceDataset, policy: CategoricalPolicy) -> dict[str, np.ndarray]:
    """Gradient of ``sft_loss``: per pair, softmax(theta) minus the preferred one-hot."""
    pairs = _require_pairs(dataset)
    grad = {p: np.zeros_like(v) for p, v in policy.logits.items()}
    n = len(pairs)
    for pair in pairs:
        probs = policy.probabilities(pair.prompt_id)
        iw = policy.candidate_index(pair.prompt_id, pair.preferred)
        grad[pair.prompt_id] += probs / n
        grad[pair.prompt_id][iw] -= 1.0 / n
    return grad


def mean_preference_probability(
    dataset: PreferenceDataset,
    policy: CategoricalPolicy,
    reference: CategoricalPolicy,
    beta: float,
) -> float:
    """Mean sigmoid(margin) over the dataset, the headline alignment metric."""
    pairs = _require_pairs(dataset)
    total = 0.0
    for pair in pairs:
        total += preference_probability(reward_margin(pair, policy, reference, beta))
    return total / len(pairs)
