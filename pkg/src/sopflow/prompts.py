"""Instruction prompt texts for the planning and executing roles.

The default texts ship as package data. A deployment can override any of
them by dropping same-named ``.txt`` files into a config directory.
"""

from __future__ import annotations

from dataclasses import dataclass, fields
from functools import lru_cache
from importlib import resources
from pathlib import Path

_TEMPLATE_DIR = "prompt_templates"


@dataclass(frozen=True)
class PromptBundle:
    planning_prefix: str
    extend_prefix: str
    planning_suffix: str
    executing_prefix: str
    executing_suffix: str

    def __post_init__(self) -> None:
        for f in fields(self):
            if not getattr(self, f.name):
                raise ValueError(f"prompt {f.name} must not be empty")

    @classmethod
    def load(cls, directory: str | Path | None = None) -> "PromptBundle":
        """Bundle from ``directory``, falling back to the built-in text for
        any file that is absent."""
        if directory is None:
            return default_bundle()
        directory = Path(directory)
        values = {}
        for f in fields(cls):
            override = directory / f"{f.name}.txt"
            if override.is_file():
                values[f.name] = override.read_text(encoding="utf-8")
            else:
                values[f.name] = _builtin_text(f.name)
        return cls(**values)


def _builtin_text(name: str) -> str:
    return (
        resources.files("sopflow")
        .joinpath(_TEMPLATE_DIR, f"{name}.txt")
        .read_text(encoding="utf-8")
    )


@lru_cache(maxsize=1)
def default_bundle() -> PromptBundle:
    return PromptBundle(**{f.name: _builtin_text(f.name) for f in fields(PromptBundle)})
