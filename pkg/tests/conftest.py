"""Shared fixtures and the acceptance-criteria result banner."""

from __future__ import annotations

import numpy as np
import pytest

from avllm.preference import CategoricalPolicy, PreferenceDataset, PreferencePair


def make_random_setup(rng: np.random.Generator, max_prompts=5, max_candidates=4):
    """Random (dataset, policy, reference) triple over small categorical tables."""
    n_prompts = int(rng.integers(1, max_prompts + 1))
    candidate_sets = {}
    for p in range(n_prompts):
        n_cands = int(rng.integers(2, max_candidates + 1))
        candidate_sets[f"p{p}"] = tuple(f"resp_{p}_{c}" for c in range(n_cands))

    pairs = []
    n_pairs = int(rng.integers(1, 7))
    prompt_ids = list(candidate_sets)
    for _ in range(n_pairs):
        pid = prompt_ids[int(rng.integers(0, len(prompt_ids)))]
        cands = candidate_sets[pid]
        iw, il = rng.choice(len(cands), size=2, replace=False)
        pairs.append(PreferencePair(pid, f"question {pid}", cands[iw], cands[il]))
    dataset = PreferenceDataset(pairs, candidate_sets)

    def random_policy():
        return CategoricalPolicy(
            candidate_sets,
            {p: rng.normal(0, 1.5, size=len(c)) for p, c in candidate_sets.items()},
        )

    return dataset, random_policy(), random_policy()


@pytest.fixture
def rng():
    return np.random.default_rng(20260808)


# -- acceptance banner --------------------------------------------------------

_ACCEPTANCE_RESULTS: list[tuple[str, str]] = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    report = outcome.get_result()
    if report.when != "call" or "test_acceptance" not in item.nodeid:
        return
    label = item.function.__doc__ or item.name
    label = label.strip().splitlines()[0]
    _ACCEPTANCE_RESULTS.append((label, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for label, status in _ACCEPTANCE_RESULTS:
        terminalreporter.write_line(f"[{status}] {label}")
