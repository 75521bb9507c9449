"""Datasets: representation, CSV ingestion, scaling and synthetic generation."""

from typing import List

from .dataset import (
    CROSS_SEPARATOR,
    Dataset,
    Manifest,
    ProtectedAttr,
    canonical_manifest,
    cross_protected,
    csv_text,
    load_csv,
    load_manifest,
    write_csv,
    write_manifest,
)
from .scaling import MinMaxParams, minmax_fit_transform
from .synth import AttributeSpec, SynthSpec, ViewSpec, synthesize

__all__ = [
    'CROSS_SEPARATOR',
    'Dataset',
    'Manifest',
    'ProtectedAttr',
    'cross_protected',
    'csv_text',
    'canonical_manifest',
    'load_csv',
    'load_manifest',
    'write_csv',
    'write_manifest',
    'MinMaxParams',
    'minmax_fit_transform',
    'AttributeSpec',
    'SynthSpec',
    'ViewSpec',
    'synthesize',
]


def __dir__() -> List[str]:
    return sorted(__all__)
