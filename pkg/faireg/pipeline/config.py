"""Experiment configuration.

An :class:`ExperimentConfig` is built from a JSON document::

    {
        "synth": {"n": 4000, "attributes": [...], "views": [...]},
        "method": "faireg",
        "protected": "A",
        "evaluate": ["A", "B", "A*B"],
        "tuning": {"k": 6, "kelm": {...}, "adv": {...}},
        "stack": {"n_trees": 1000},
        "adv": {"epochs": 20},
        "eval": {"k_nn": 3, "test_fraction": 0.2},
        "seed": 7
    }

Instead of ``synth`` a ``data`` block may name a CSV file and its manifest.
"""
from __future__ import annotations

import zlib
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from .. import serialization
from ..data.dataset import CROSS_SEPARATOR
from ..data.synth import AttributeSpec, SynthSpec, ViewSpec
from ..exceptions import ConfigError
from ..fairness.methods import METHODS
from ..models.adversarial import AdvConfig
from ..models.forest import ForestParams
from ..tuning.search import ParamRange, SearchSpace

__all__ = [
    'DataSource',
    'TuningConfig',
    'EvalConfig',
    'ExperimentConfig',
    'default_synth',
    'stage_seed',
]


def __dir__() -> List[str]:
    return sorted(__all__)


def stage_seed(seed: int, stage: str, index: int = 0) -> int:
    """Seed of the random stream for ``(seed, stage, index)``."""
    sequence = np.random.SeedSequence((seed, zlib.crc32(stage.encode("utf-8")), index))
    return int(sequence.generate_state(1, dtype=np.uint64)[0])


def default_synth() -> SynthSpec:
    """Two protected attributes, labelling bias on A, sampling bias on both, two views."""
    return SynthSpec(
        n=4000,
        d=8,
        attributes=(
            AttributeSpec(name="A", proportions={"a0": 0.7, "a1": 0.3}, mean_shift={"a1": 0.1},
                          feature_shift=4.0),
            AttributeSpec(name="B", proportions={"b0": 0.6, "b1": 0.4}, feature_shift=1.0),
        ),
        n_labels=6,
        noise_scale=0.15,
        rows_per_group=10,
        views=(ViewSpec("face", 16, 0.1), ViewSpec("scene", 16, 0.1)),
    )


@dataclass(frozen=True)
class DataSource:
    csv: str
    manifest: str

    def to_dict(self) -> Dict[str, Any]:
        return {"csv": self.csv, "manifest": self.manifest}


def _kelm_space() -> SearchSpace:
    return SearchSpace(params={"C": ParamRange(1e-7, 1e2)}, budget=64)


def _adv_space() -> SearchSpace:
    return SearchSpace(
        params={name: ParamRange(1e-7, 1e-2) for name in ("learning_rate", "lambda1", "lambda2")},
        budget=16,
    )


@dataclass(frozen=True)
class TuningConfig:
    k: int = 6
    kelm: SearchSpace = field(default_factory=_kelm_space)
    adv: SearchSpace = field(default_factory=_adv_space)

    def to_dict(self) -> Dict[str, Any]:
        return {"k": self.k, "kelm": self.kelm.to_dict(), "adv": self.adv.to_dict()}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> TuningConfig:
        return cls(
            k=int(data.get("k", 6)),
            kelm=SearchSpace.from_dict(data["kelm"]) if "kelm" in data else _kelm_space(),
            adv=SearchSpace.from_dict(data["adv"]) if "adv" in data else _adv_space(),
        )


@dataclass(frozen=True)
class EvalConfig:
    k_nn: int = 3
    test_fraction: float = 0.2
    competent_p: float = 1e-3
    scatter: bool = True

    def to_dict(self) -> Dict[str, Any]:
        return {
            "k_nn": self.k_nn,
            "test_fraction": self.test_fraction,
            "competent_p": self.competent_p,
            "scatter": self.scatter,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> EvalConfig:
        return cls(
            k_nn=int(data.get("k_nn", 3)),
            test_fraction=float(data.get("test_fraction", 0.2)),
            competent_p=float(data.get("competent_p", 1e-3)),
            scatter=bool(data.get("scatter", True)),
        )


@dataclass(frozen=True)
class ExperimentConfig:
    synth: Optional[SynthSpec] = field(default_factory=default_synth)
    data: Optional[DataSource] = None
    method: str = "orig"
    protected: str = "A"
    evaluate: Tuple[str, ...] = ()
    tuning: TuningConfig = field(default_factory=TuningConfig)
    stack: ForestParams = field(default_factory=ForestParams)
    adv: AdvConfig = field(default_factory=AdvConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    output_dir: Optional[str] = None
    seed: int = 0

    def selectors(self) -> Tuple[str, ...]:
        """Evaluated protected selectors; defaults to every attribute plus the cross of the first two."""
        if self.evaluate:
            return self.evaluate
        if self.synth is None:
            return (self.protected,)
        names = [a.name for a in self.synth.attributes]
        if len(names) >= 2:
            names.append(f"{names[0]}{CROSS_SEPARATOR}{names[1]}")
        return tuple(names)

    def attribute_names(self) -> Optional[Tuple[str, ...]]:
        return None if self.synth is None else tuple(a.name for a in self.synth.attributes)

    def validate(self) -> ExperimentConfig:
        if (self.synth is None) == (self.data is None):
            raise ConfigError("Exactly one of 'synth' and 'data' must be given")
        if self.method not in METHODS:
            raise ConfigError(f"Unknown method {self.method!r}; expected one of {METHODS}")
        if not 0 <= self.seed < 2 ** 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if self.synth is not None:
            self.synth.validate()
            known = set(self.attribute_names())
            for selector in (self.protected, *self.selectors()):
                parts = selector.split(CROSS_SEPARATOR)
                if any(p not in known for p in parts) or len(set(parts)) != len(parts):
                    raise ConfigError(f"Protected selector {selector!r} does not name distinct attributes of {sorted(known)}")
        if self.tuning.k < 2:
            raise ConfigError("tuning.k must be at least 2")
        self.tuning.kelm.validate()
        self.tuning.adv.validate()
        self.stack.validate()
        self.adv.validate()
        if not 0 < self.eval.test_fraction < 1 or self.eval.k_nn < 1:
            raise ConfigError("eval.test_fraction must lie in (0, 1) and eval.k_nn must be positive")
        return self

    def with_overrides(self, **overrides: Any) -> ExperimentConfig:
        return replace(self, **overrides)

    def to_dict(self) -> Dict[str, Any]:
        data: Dict[str, Any] = {
            "method": self.method,
            "protected": self.protected,
            "evaluate": list(self.selectors()),
            "tuning": self.tuning.to_dict(),
            "stack": self.stack.to_dict(),
            "adv": self.adv.to_dict(),
            "eval": self.eval.to_dict(),
            "seed": self.seed,
        }
        if self.synth is not None:
            data["synth"] = self.synth.to_dict()
        if self.data is not None:
            data["data"] = self.data.to_dict()
        if self.output_dir is not None:
            data["output_dir"] = self.output_dir
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> ExperimentConfig:
        if not isinstance(data, Mapping):
            raise ConfigError("Experiment configuration must be a JSON object")
        try:
            source = data.get("data")
            synth = data.get("synth")
            return cls(
                synth=None if source is not None and synth is None else (
                    SynthSpec.from_dict(synth) if synth is not None else default_synth()),
                data=None if source is None else DataSource(str(source["csv"]), str(source["manifest"])),
                method=str(data.get("method", "orig")),
                protected=str(data.get("protected", "A")),
                evaluate=tuple(str(s) for s in data.get("evaluate", ())),
                tuning=TuningConfig.from_dict(data.get("tuning", {})),
                stack=ForestParams.from_dict(data.get("stack", {})),
                adv=AdvConfig.from_dict(data.get("adv", {})),
                eval=EvalConfig.from_dict(data.get("eval", {})),
                output_dir=data.get("output_dir"),
                seed=int(data.get("seed", 0)),
            )
        except ConfigError:
            raise
        except (KeyError, TypeError, ValueError, AttributeError) as e:
            raise ConfigError(f"Invalid experiment configuration: {e}")

    @classmethod
    def from_json(cls, path: Union[str, Path]) -> ExperimentConfig:
        try:
            payload = Path(path).read_bytes()
        except OSError as e:
            raise ConfigError(f"Cannot read configuration {path}: {e}")
        try:
            return cls.from_dict(serialization.loads(payload))
        except serialization.JSONDecodeError as e:
            raise ConfigError(f"Configuration {path} is not valid JSON: {e}")
