"""Full-batch gradient-descent trainer for categorical policies.

The policy starts as an exact copy of the reference, so the step-0 loss of
the pairwise objective is the analytically known ln 2. Training is
deterministic given (dataset, reference, config): there is no sampling and
no minibatching. The loss recorded at step t is evaluated before that
step's parameter update.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import EmptyDataset, NonFiniteLoss
from .objectives import (
    dpo_gradient,
    dpo_loss,
    mean_preference_probability,
    sft_gradient,
    sft_loss,
)
from .types import CategoricalPolicy, DpoConfig, PreferenceDataset, TrainReport

__all__ = ["train", "OBJECTIVES"]

OBJECTIVES = ("dpo", "sft")


def train(
    dataset: PreferenceDataset,
    reference: CategoricalPolicy,
    config: DpoConfig,
    objective: str = "dpo",
) -> tuple[CategoricalPolicy, TrainReport]:
    """Run full-batch descent and return the trained policy with its report.

    Stops after ``config.max_steps`` steps, or earlier once the absolute
    loss change between consecutive steps drops below
    ``config.convergence_tol``.
    """
    if objective not in OBJECTIVES:
        raise ValueError(f"objective must be one of {OBJECTIVES}, got {objective!r}")
    if not dataset.pairs:
        raise EmptyDataset("cannot train on an empty preference dataset")
    if not reference.covers(dataset):
        raise ValueError("reference policy does not cover the dataset's prompts and responses")

    if objective == "dpo":
        loss_fn = lambda pol: dpo_loss(dataset, pol, reference, config.beta)
        grad_fn = lambda pol: dpo_gradient(dataset, pol, reference, config.beta)
    else:
        loss_fn = lambda pol: sft_loss(dataset, pol)
        grad_fn = lambda pol: sft_gradient(dataset, pol)

    policy = reference.copy()
    report = TrainReport()
    previous_loss: float | None = None

    for step in range(1, config.max_steps + 1):
        loss = loss_fn(policy)
        if not math.isfinite(loss):
            raise NonFiniteLoss(
                f"loss became non-finite at step {step}; lower the learning rate"
            )
        report.loss_trace.append((step, loss))
        report.steps_taken = step
        if previous_loss is not None and abs(loss - previous_loss) < config.convergence_tol:
            report.stopped_reason = "converged"
            break
        gradient = grad_fn(policy)
        for prompt_id, g in gradient.items():
            policy.logits[prompt_id] -= config.learning_rate * g
        if not all(np.all(np.isfinite(v)) for v in policy.logits.values()):
            raise NonFiniteLoss(
                f"policy logits became non-finite at step {step}; lower the learning rate"
            )
        previous_loss = loss
    else:
        report.stopped_reason = "max_steps"

    report.final_mean_preference_probability = mean_preference_probability(
        dataset, policy, reference, config.beta
    )
    return policy, report
