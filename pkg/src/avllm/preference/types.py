"""Domain types for pairwise preference optimization over categorical policies.

The policy here is a plain table of logits, one vector per prompt over that
prompt's enumerated candidate responses. It is the smallest policy class in
which every quantity of the preference-optimization objective (log-ratios,
margins, losses, gradients) is exactly computable, which makes it the right
stand-in for a large generative model when the goal is to exercise the math.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import UnknownPrompt, UnknownResponse

__all__ = [
    "PreferencePair",
    "PreferenceDataset",
    "CategoricalPolicy",
    "DpoConfig",
    "TrainReport",
]


@dataclass(frozen=True)
class PreferencePair:
    """One prompt with a preferred and a dispreferred response."""

    prompt_id: str
    prompt_text: str
    preferred: str
    dispreferred: str

    def __post_init__(self) -> None:
        if self.preferred == self.dispreferred:
            raise ValueError(
                f"prompt {self.prompt_id!r}: preferred and dispreferred responses are identical"
            )

    def swapped(self) -> "PreferencePair":
        """The same comparison with the preference direction reversed."""
        return PreferencePair(self.prompt_id, self.prompt_text, self.dispreferred, self.preferred)


@dataclass
class PreferenceDataset:
    """An ordered list of preference pairs plus per-prompt candidate sets.

    Order of pairs is stable; full-batch gradients do not depend on it but
    reporting does. Duplicate pairs are allowed and reweight the mean.
    """

    pairs: list[PreferencePair]
    candidate_sets: dict[str, tuple[str, ...]]

    def __post_init__(self) -> None:
        for pair in self.pairs:
            candidates = self.candidate_sets.get(pair.prompt_id)
            if candidates is None:
                raise UnknownPrompt(f"pair references unknown prompt {pair.prompt_id!r}")
            if len(candidates) < 2:
                raise ValueError(
                    f"prompt {pair.prompt_id!r} has fewer than 2 candidate responses"
                )
            for response in (pair.preferred, pair.dispreferred):
                if response not in candidates:
                    raise UnknownResponse(
                        f"response {response!r} is not a candidate of prompt {pair.prompt_id!r}"
                    )

    def __len__(self) -> int:
        return len(self.pairs)


class CategoricalPolicy:
    """Softmax policy over enumerated candidate responses, one logit vector per prompt.

    ``log_prob`` is logit minus logsumexp, so probabilities per prompt sum
    to one and shifting a prompt's logits by a constant changes nothing
    observable. A frozen copy of an instance serves as the reference policy.
    """

    def __init__(self, candidates: dict[str, tuple[str, ...]], logits: dict[str, np.ndarray]):
        if set(candidates) != set(logits):
            raise ValueError("candidate table and logit table cover different prompts")
        self.candidates = {p: tuple(c) for p, c in candidates.items()}
        self.logits = {}
        for prompt_id, vec in logits.items():
            arr = np.asarray(vec, dtype=np.float64).copy()
            if arr.ndim != 1 or arr.shape[0] != len(self.candidates[prompt_id]):
                raise ValueError(f"logit vector shape mismatch for prompt {prompt_id!r}")
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"non-finite logits for prompt {prompt_id!r}")
            self.logits[prompt_id] = arr

    @classmethod
    def uniform(cls, candidate_sets: dict[str, tuple[str, ...]]) -> "CategoricalPolicy":
        """All-zero logits: the uniform distribution over each candidate set."""
        return cls(
            dict(candidate_sets),
            {p: np.zeros(len(c)) for p, c in candidate_sets.items()},
        )

    def copy(self) -> "CategoricalPolicy":
        return CategoricalPolicy(self.candidates, {p: v.copy() for p, v in self.logits.items()})

    def candidate_index(self, prompt_id: str, response: str) -> int:
        candidates = self.candidates.get(prompt_id)
        if candidates is None:
            raise UnknownPrompt(f"unknown prompt {prompt_id!r}")
        try:
            return candidates.index(response)
        except ValueError:
            raise UnknownResponse(
                f"response {response!r} is not a candidate of prompt {prompt_id!r}"
            ) from None

    def log_probs(self, prompt_id: str) -> np.ndarray:
        """Log-probability vector for one prompt: logits minus logsumexp."""
        if prompt_id not in self.logits:
            raise UnknownPrompt(f"unknown prompt {prompt_id!r}")
        theta = self.logits[prompt_id]
        m = float(np.max(theta))
        lse = m + math.log(float(np.sum(np.exp(theta - m))))
        return theta - lse

    def log_prob(self, prompt_id: str, response: str) -> float:
        return float(self.log_probs(prompt_id)[self.candidate_index(prompt_id, response)])

    def probabilities(self, prompt_id: str) -> np.ndarray:
        return np.exp(self.log_probs(prompt_id))

    def covers(self, dataset: PreferenceDataset) -> bool:
        """Whether every pair's prompt and responses exist in this table."""
        for pair in dataset.pairs:
            if pair.prompt_id not in self.candidates:
                return False
            candidates = self.candidates[pair.prompt_id]
            if pair.preferred not in candidates or pair.dispreferred not in candidates:
                return False
        return True


@dataclass(frozen=True)
class DpoConfig:
    """Hyperparameters for the full-batch trainer.

    ``seed`` has no stochastic role in full-batch training; it is echoed into
    reports so runs remain attributable.
    """

    beta: float = 1.0
    learning_rate: float = 0.1
    max_steps: int = 500
    seed: int = 0
    convergence_tol: float = 1e-9

    def __post_init__(self) -> None:
        if not (self.beta > 0 and math.isfinite(self.beta)):
            raise ValueError("beta must be positive and finite")
        if not (self.learning_rate > 0 and math.isfinite(self.learning_rate)):
            raise ValueError("learning_rate must be positive and finite")
        if self.max_steps < 1:
            raise ValueError("max_steps must be at least 1")
        if self.convergence_tol < 0:
            raise ValueError("convergence_tol must be nonnegative")


@dataclass
class TrainReport:
    """Outcome of one training run."""

    loss_trace: list[tuple[int, float]] = field(default_factory=list)
    final_mean_preference_probability: float = 0.0
    steps_taken: int = 0
    stopped_reason: str = "max_steps"  # or "converged"

    @property
    def initial_loss(self) -> float:
        return self.loss_trace[0][1]

    @property
    def final_loss(self) -> float:
        return self.loss_trace[-1][1]

    def to_dict(self) -> dict:
        return {
            "steps_taken": self.steps_taken,
            "stopped_reason": self.stopped_reason,
            "initial_loss": self.initial_loss,
            "final_loss": self.final_loss,
            "final_mean_preference_probability": self.final_mean_preference_probability,
            "loss_trace": [[step, loss] for step, loss in self.loss_trace],
        }
