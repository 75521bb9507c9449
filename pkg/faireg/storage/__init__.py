"""Artifact persistence for experiment outputs."""

from typing import List

from .artifacts import ArtifactStore

__all__ = [
    'ArtifactStore',
]


def __dir__() -> List[str]:
    return sorted(__all__)
