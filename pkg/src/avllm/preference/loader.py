"""Preference dataset file loading.

The on-disk format is UTF-8 newline-delimited JSON, one object per line with
four string fields: prompt_id, prompt_text, preferred_text, dispreferred_text.
Candidate sets are not stored; they are the union of response texts seen per
prompt, ordered by first appearance (preferred before dispreferred within a
line). Lines missing fields, carrying non-string fields, or pairing a
response with itself are rejected with their line number.
"""

from __future__ import annotations

import json
from pathlib import Path

from ..errors import EmptyDataset, FormatError
from .types import PreferenceDataset, PreferencePair

__all__ = ["load_preference_dataset", "parse_preference_records", "save_preference_dataset"]

_FIELDS = ("prompt_id", "prompt_text", "preferred_text", "dispreferred_text")


def parse_preference_records(lines, source: str = "<memory>") -> PreferenceDataset:
    """Parse an iterable of JSONL lines into a dataset. Blank lines are skipped."""
    pairs: list[PreferencePair] = []
    candidate_sets: dict[str, list[str]] = {}
    prompt_texts: dict[str, str] = {}

    for line_no, line in enumerate(lines, start=1):
        if not line.strip():
            continue
        try:
            record = json.loads(line)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid JSON ({exc.msg})", path=source, line=line_no) from exc
        if not isinstance(record, dict):
            raise FormatError("record is not a JSON object", path=source, line=line_no)
        for field in _FIELDS:
            if field not in record:
                raise FormatError(f"missing field {field!r}", path=source, line=line_no)
            if not isinstance(record[field], str):
                raise FormatError(f"field {field!r} is not a string", path=source, line=line_no)

        prompt_id = record["prompt_id"]
        known_text = prompt_texts.setdefault(prompt_id, record["prompt_text"])
        if known_text != record["prompt_text"]:
            raise FormatError(
                f"prompt {prompt_id!r} reappears with different prompt_text",
                path=source,
                line=line_no,
            )
        try:
            pair = PreferencePair(
                prompt_id=prompt_id,
                prompt_text=record["prompt_text"],
                preferred=record["preferred_text"],
                dispreferred=record["dispreferred_text"],
            )
        except ValueError as exc:
            raise FormatError(str(exc), path=source, line=line_no) from exc
        pairs.append(pair)

        seen = candidate_sets.setdefault(prompt_id, [])
        for response in (pair.preferred, pair.dispreferred):
            if response not in seen:
                seen.append(response)

    if not pairs:
        raise EmptyDataset(f"{source}: no preference pairs found")
    return PreferenceDataset(pairs, {p: tuple(c) for p, c in candidate_sets.items()})


def load_preference_dataset(path: str | Path) -> PreferenceDataset:
    """Load a JSONL preference dataset from disk."""
    path = Path(path)
    with path.open("r", encoding="utf-8") as handle:
        return parse_preference_records(handle, source=str(path))


def save_preference_dataset(dataset: PreferenceDataset, path: str | Path) -> None:
    """Write a dataset back out in the line-per-pair format."""
    path = Path(path)
    with path.open("w", encoding="utf-8") as handle:
        for pair in dataset.pairs:
            handle.write(
                json.dumps(
                    {
                        "prompt_id": pair.prompt_id,
                        "prompt_text": pair.prompt_text,
                        "preferred_text": pair.preferred,
                        "dispreferred_text": pair.dispreferred,
                    },
                    ensure_ascii=False,
                )
                + "\n"
            )
