"""Synthetic datasets with controllable labelling and sampling bias.

Each synthetic "speaker" (group id) owns ``rows_per_group`` consecutive rows
and one category per protected attribute. Labels are a logistic squash of a
linear function of latent features, then shifted and scaled per category:

    y = prod_a scale_a[c_a] * (base + noise) + sum_a shift_a[c_a]

Sampling bias comes from the category proportions, labelling bias from the
shifts and scales, and feature bias from ``feature_shift``: each such attribute
adds one noisy column per category, ``feature_shift * onehot + N(0, 1)``, next
to the latent columns. The base label only reads the latent columns, so a model
can tie its output to the category only through the labelling shift.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

import numpy as np
from scipy.special import expit

from ..exceptions import CategoryError, ConfigError
from .dataset import Dataset, ProtectedAttr

__all__ = [
    'AttributeSpec',
    'ViewSpec',
    'SynthSpec',
    'NOISE_FAMILIES',
    'synthesize',
]


def __dir__() -> List[str]:
    return sorted(__all__)


NOISE_FAMILIES = ("normal", "gamma")


@dataclass(frozen=True)
class AttributeSpec:
    """Bias knobs for one protected attribute; category order follows ``proportions``."""
    name: str
    proportions: Mapping[str, float]
    mean_shift: Mapping[str, float] = field(default_factory=dict)
    scale: Mapping[str, float] = field(default_factory=dict)
    feature_shift: float = 0.0

    @property
    def categories(self) -> Tuple[str, ...]:
        return tuple(self.proportions)

    def shift_vector(self) -> np.ndarray:
        return np.array([float(self.mean_shift.get(c, 0.0)) for c in self.categories])

    def scale_vector(self) -> np.ndarray:
        return np.array([float(self.scale.get(c, 1.0)) for c in self.categories])

    def validate(self) -> None:
        if not self.proportions:
            raise ConfigError(f"Attribute '{self.name}' declares no categories")
        p = np.array(list(self.proportions.values()), dtype=np.float64)
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise ConfigError(f"Proportions of '{self.name}' must be non-negative and sum to 1, got {p.sum()!r}")
        unknown = (set(self.mean_shift) | set(self.scale)) - set(self.categories)
        if unknown:
            raise ConfigError(f"Attribute '{self.name}' has shifts/scales for unknown categories {sorted(unknown)}")
        if np.any(self.scale_vector() <= 0):
            raise ConfigError(f"Scales of '{self.name}' must be positive")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "proportions": dict(self.proportions),
            "mean_shift": dict(self.mean_shift),
            "scale": dict(self.scale),
            "feature_shift": self.feature_shift,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AttributeSpec:
        return cls(
            name=str(data["name"]),
            proportions={str(k): float(v) for k, v in data["proportions"].items()},
            mean_shift={str(k): float(v) for k, v in data.get("mean_shift", {}).items()},
            scale={str(k): float(v) for k, v in data.get("scale", {}).items()},
            feature_shift=float(data.get("feature_shift", 0.0)),
        )


@dataclass(frozen=True)
class ViewSpec:
    """A noisy linear embedding of the latent features (one modality)."""
    name: str
    dim: int
    noise: float = 0.1

    def to_dict(self) -> Dict[str, Any]:
        return {"name": self.name, "dim": self.dim, "noise": self.noise}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ViewSpec:
        return cls(name=str(data["name"]), dim=int(data["dim"]), noise=float(data.get("noise", 0.1)))


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of a synthetic biased dataset; ``synthesize`` is a pure function of it."""
    n: int = 2000
    d: int = 8
    attributes: Tuple[AttributeSpec, ...] = (
        AttributeSpec(name="A", proportions={"a0": 0.5, "a1": 0.5}),
    )
    n_labels: int = 6
    noise_family: str = "normal"
    noise_shape: float = 2.0
    noise_scale: float = 0.05
    signal_strength: float = 1.0
    rows_per_group: int = 1
    views: Tuple[ViewSpec, ...] = ()
    seed: int = 0

    @property
    def primary(self) -> AttributeSpec:
        return self.attributes[0]

    @property
    def group_proportions(self) -> Mapping[str, float]:
        return self.primary.proportions

    @property
    def label_mean_shift(self) -> Mapping[str, float]:
        return self.primary.mean_shift

    @property
    def label_scale(self) -> Mapping[str, float]:
        return self.primary.scale

    def validate(self) -> None:
        if self.n < 2 or self.d < 1 or self.n_labels < 1 or self.rows_per_group < 1:
            raise ConfigError("SynthSpec needs n >= 2, d >= 1, n_labels >= 1, rows_per_group >= 1")
        if not self.attributes:
            raise ConfigError("SynthSpec needs at least one protected attribute")
        names = [a.name for a in self.attributes]
        if len(set(names)) != len(names):
            raise ConfigError(f"Duplicate attribute names {names}")
        for attr in self.attributes:
            attr.validate()
        if self.noise_family not in NOISE_FAMILIES:
            raise ConfigError(f"noise_family must be one of {NOISE_FAMILIES}, got {self.noise_family!r}")
        if self.noise_shape <= 0 or self.noise_scale < 0:
            raise ConfigError("noise_shape must be > 0 and noise_scale >= 0")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for view in self.views:
            if view.dim < 1 or view.noise < 0:
                raise ConfigError(f"View '{view.name}' needs dim >= 1 and noise >= 0")

    def to_dict(self) -> Dict[str, Any]:
        return {
            "n": self.n,
            "d": self.d,
            "attributes": [a.to_dict() for a in self.attributes],
            "n_labels": self.n_labels,
            "noise_family": self.noise_family,
            "noise_shape": self.noise_shape,
            "noise_scale": self.noise_scale,
            "signal_strength": self.signal_strength,
            "rows_per_group": self.rows_per_group,
            "views": [v.to_dict() for v in self.views],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> SynthSpec:
        defaults = cls()
        try:
            return cls(
                n=int(data.get("n", defaults.n)),
                d=int(data.get("d", defaults.d)),
                attributes=tuple(AttributeSpec.from_dict(a) for a in data["attributes"])
                if "attributes" in data else defaults.attributes,
                n_labels=int(data.get("n_labels", defaults.n_labels)),
                noise_family=str(data.get("noise_family", defaults.noise_family)),
                noise_shape=float(data.get("noise_shape", defaults.noise_shape)),
                noise_scale=float(data.get("noise_scale", defaults.noise_scale)),
                signal_strength=float(data.get("signal_strength", defaults.signal_strength)),
                rows_per_group=int(data.get("rows_per_group", defaults.rows_per_group)),
                views=tuple(ViewSpec.from_dict(v) for v in data.get("views", [])),
                seed=int(data.get("seed", defaults.seed)),
            )
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"Invalid synth specification: {e}")


def _noise(rng: np.random.Generator, spec: SynthSpec, shape: Tuple[int, int]) -> np.ndarray:
    if spec.noise_family == "gamma":
        k = spec.noise_shape
        standardized = (rng.gamma(k, 1.0, size=shape) - k) / math.sqrt(k)
        return spec.noise_scale * standardized
    return spec.noise_scale * rng.standard_normal(shape)


def synthesize(spec: SynthSpec, label_names: Optional[Tuple[str, ...]] = None) -> Dataset:
    """Draw a dataset from ``spec``; identical specs give identical datasets."""
    spec.validate()
    streams = [np.random.default_rng(s) for s in np.random.SeedSequence(spec.seed).spawn(6)]
    groups_rng, latent_rng, weight_rng, noise_rng, group_rng, view_rng = streams

    n, d = spec.n, spec.d
    n_groups = math.ceil(n / spec.rows_per_group)
    group_of_row = np.arange(n) // spec.rows_per_group

    protected: Dict[str, ProtectedAttr] = {}
    for attr in spec.attributes:
        p = np.array([attr.proportions[c] for c in attr.categories], dtype=np.float64)
        codes = groups_rng.choice(len(p), size=n_groups, p=p / p.sum())[group_of_row]
        counts = np.bincount(codes, minlength=len(p))
        empty = [attr.categories[i] for i in np.flatnonzero(counts == 0)]
        if empty:
            raise CategoryError(
                f"Categories {empty} of '{attr.name}' received zero samples; increase n "
                f"(currently {n}) or their proportions"
            )
        protected[attr.name] = ProtectedAttr(attr.name, codes, attr.categories)

    latent = latent_rng.standard_normal((n, d))
    weights = weight_rng.standard_normal((d, spec.n_labels)) / math.sqrt(d)
    base = expit(spec.signal_strength * latent @ weights)
    noise = _noise(noise_rng, spec, base.shape)

    scale = np.ones(n)
    shift = np.zeros(n)
    blocks: List[np.ndarray] = [latent]
    column_names = [f"f{j}" for j in range(d)]
    for attr in spec.attributes:
        codes = protected[attr.name].codes
        scale *= attr.scale_vector()[codes]
        shift += attr.shift_vector()[codes]
        if attr.feature_shift:
            # one column per category, disjoint from the columns behind the base label
            onehot = np.eye(len(attr.categories))[codes]
            blocks.append(attr.feature_shift * onehot + group_rng.standard_normal(onehot.shape))
            column_names += [f"{attr.name}_{c}" for c in attr.categories]
    labels = scale[:, None] * (base + noise) + shift[:, None]
    features = np.hstack(blocks)

    views: Dict[str, Tuple[int, ...]] = {}
    feature_names: Tuple[str, ...]
    if spec.views:
        width = features.shape[1]
        view_blocks, names = [], []
        for view in spec.views:
            embedding = view_rng.standard_normal((width, view.dim)) / math.sqrt(width)
            block = features @ embedding + view.noise * view_rng.standard_normal((n, view.dim))
            start = sum(b.shape[1] for b in view_blocks)
            views[view.name] = tuple(range(start, start + view.dim))
            names += [f"{view.name}_{j}" for j in range(view.dim)]
            view_blocks.append(block)
        features = np.hstack(view_blocks)
        feature_names = tuple(names)
    else:
        feature_names = tuple(column_names)

    if label_names is None or len(label_names) != spec.n_labels:
        label_names = tuple(f"y{j}" for j in range(spec.n_labels))

    return Dataset(
        features=features,
        labels=labels,
        protected=protected,
        sample_ids=np.array([f"s{i:06d}" for i in range(n)]),
        group_ids=np.array([f"g{g:05d}" for g in group_of_row]),
        feature_names=feature_names,
        label_names=tuple(label_names),
        views=views,
    )
