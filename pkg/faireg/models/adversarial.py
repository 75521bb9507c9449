"""Adversarial debiasing baseline.

A two-layer filter ``E`` feeds a linear predictor ``P`` and a linear
discriminator ``D``. Every mini-batch takes one Adam step on ``P`` and ``E``
minimizing ``MSE(y, P(E(x))) - lambda1 * CE(c, D(E(x)))`` followed by one Adam
step on ``D`` minimizing ``lambda2 * CE(c, D(E(x)))`` on the same batch.

All tensors are float64. Initialization and batch order are drawn from
generators seeded by the config, so identical configs replay identically.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Mapping, Optional, Tuple

import numpy as np
import pandas as pd
import torch
from torch import nn
from torch.func import functional_call
from torch.nn import functional as F

from .. import serialization
from ..base import BaseRegressor
from ..data.dataset import ProtectedAttr
from ..exceptions import ConfigError, DataError, NumericError
from ..log import get_logger

__all__ = [
    'AdvConfig',
    'AdversarialNet',
    'MlpParams',
    'TraceRow',
    'AdvObjectives',
    'AdversarialRegressor',
    'adv_train',
    'adv_predict',
    'params_to_arrays',
    'params_from_arrays',
    'objective_gradients',
    'trace_to_csv',
]


def __dir__() -> List[str]:
    return sorted(__all__)


logger = get_logger(__name__)

DTYPE = torch.float64


@dataclass(frozen=True)
class AdvConfig:
    learning_rate: float = 1e-3
    lambda1: float = 1e-3
    lambda2: float = 1e-3
    epochs: int = 20
    batch_size: int = 128
    hidden: Tuple[int, int] = (64, 32)
    seed: int = 0

    def validate(self) -> None:
        if not (self.learning_rate > 0 and self.lambda1 >= 0 and self.lambda2 > 0):
            raise ConfigError("learning_rate and lambda2 must be positive, lambda1 non-negative")
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be at least 1")
        if len(self.hidden) != 2 or min(self.hidden) < 1:
            raise ConfigError(f"hidden must hold two positive widths, got {self.hidden!r}")

    def with_params(self, **params: float) -> AdvConfig:
        values = self.to_dict()
        values.update(params)
        return AdvConfig.from_dict(values)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "learning_rate": self.learning_rate,
            "lambda1": self.lambda1,
            "lambda2": self.lambda2,
            "epochs": self.epochs,
            "batch_size": self.batch_size,
            "hidden": list(self.hidden),
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> AdvConfig:
        defaults = cls()
        try:
            return cls(
                learning_rate=float(data.get("learning_rate", defaults.learning_rate)),
                lambda1=float(data.get("lambda1", defaults.lambda1)),
                lambda2=float(data.get("lambda2", defaults.lambda2)),
                epochs=int(data.get("epochs", defaults.epochs)),
                batch_size=int(data.get("batch_size", defaults.batch_size)),
                hidden=tuple(int(h) for h in data.get("hidden", defaults.hidden)),
                seed=int(data.get("seed", defaults.seed)),
            )
        except (TypeError, ValueError) as e:
            raise ConfigError(f"Invalid adversarial configuration: {e}")


class AdversarialNet(nn.Module):
    """Filter ``E`` with predictor head ``P`` and discriminator head ``D``."""

    def __init__(self, n_features: int, n_labels: int, n_classes: int, hidden: Tuple[int, int] = (64, 32)):
        super().__init__()
        self.shape = (n_features, n_labels, n_classes, tuple(hidden))
        self.encoder = nn.Sequential(
            nn.Linear(n_features, hidden[0], dtype=DTYPE),
            nn.Tanh(),
            nn.Linear(hidden[0], hidden[1], dtype=DTYPE),
            nn.Tanh(),
        )
        self.predictor = nn.Linear(hidden[1], n_labels, dtype=DTYPE)
        self.discriminator = nn.Linear(hidden[1], n_classes, dtype=DTYPE)

    def forward(self, x: torch.Tensor) -> Tuple[torch.Tensor, torch.Tensor]:
        z = self.encoder(x)
        return self.predictor(z), self.discriminator(z)

    def predictor_parameters(self) -> List[nn.Parameter]:
        return list(self.encoder.parameters()) + list(self.predictor.parameters())


@dataclass(frozen=True, eq=False)
class MlpParams:
    """Trained weights as named numpy arrays plus the network shape."""
    arrays: Dict[str, np.ndarray]
    n_features: int
    n_labels: int
    n_classes: int
    hidden: Tuple[int, int]


@dataclass(frozen=True)
class TraceRow:
    epoch: int
    mse: float
    ce: float
    disc_acc: float


def params_to_arrays(net: AdversarialNet) -> MlpParams:
    n_features, n_labels, n_classes, hidden = net.shape
    arrays = {name: t.detach().cpu().numpy().copy() for name, t in net.state_dict().items()}
    return MlpParams(arrays, n_features, n_labels, n_classes, hidden)


def params_from_arrays(params: MlpParams) -> AdversarialNet:
    net = AdversarialNet(params.n_features, params.n_labels, params.n_classes, params.hidden)
    try:
        net.load_state_dict({k: torch.tensor(v, dtype=DTYPE) for k, v in params.arrays.items()})
    except RuntimeError as e:
        raise DataError(f"Stored adversarial parameters do not fit the network shape: {e}")
    return net


def _tensor(values: np.ndarray) -> torch.Tensor:
    return torch.tensor(np.asarray(values, dtype=np.float64), dtype=DTYPE)


def _targets(Y: np.ndarray) -> np.ndarray:
    Y = np.asarray(Y, dtype=np.float64)
    return Y[:, None] if Y.ndim == 1 else Y


def _epoch_metrics(net: AdversarialNet, x: torch.Tensor, y: torch.Tensor, c: torch.Tensor) -> Tuple[float, float, float]:
    with torch.no_grad():
        prediction, logits = net(x)
        mse = F.mse_loss(prediction, y).item()
        ce = F.cross_entropy(logits, c).item()
        accuracy = (logits.argmax(dim=1) == c).to(DTYPE).mean().item()
    return mse, ce, accuracy


def adv_train(
        X: np.ndarray,
        Y: np.ndarray,
        attr: ProtectedAttr,
        config: Optional[AdvConfig] = None,
) -> Tuple[MlpParams, List[TraceRow]]:
    """Train filter, predictor and discriminator with alternating Adam steps.

    Raises:
        DataError: Shape mismatch or fewer than two categories.
        NumericError: A loss became non-finite; carries the epoch index.
    """
    config = config or AdvConfig()
    config.validate()
    X = np.asarray(X, dtype=np.float64)
    Y = _targets(Y)
    if X.ndim != 2 or X.shape[0] != Y.shape[0] or X.shape[0] != attr.n:
        raise DataError("X, Y and the protected attribute must have the same number of rows")
    attr = attr.compact()
    if attr.K < 2:
        raise DataError(f"Adversarial training needs at least two categories of '{attr.name}'")

    x, y = _tensor(X), _tensor(Y)
    c = torch.tensor(attr.codes, dtype=torch.long)
    with torch.random.fork_rng(devices=[]):
        torch.manual_seed(config.seed)
        net = AdversarialNet(X.shape[1], Y.shape[1], attr.K, config.hidden)
    shuffle = torch.Generator().manual_seed(config.seed)

    adam = dict(lr=config.learning_rate, betas=(0.9, 0.999), eps=1e-8)
    optimizer_pe = torch.optim.Adam(net.predictor_parameters(), **adam)
    optimizer_d = torch.optim.Adam(net.discriminator.parameters(), **adam)

    trace: List[TraceRow] = []
    for epoch in range(1, config.epochs + 1):
        order = torch.randperm(x.shape[0], generator=shuffle)
        for start in range(0, x.shape[0], config.batch_size):
            batch = order[start:start + config.batch_size]
            xb, yb, cb = x[batch], y[batch], c[batch]

            prediction, logits = net(xb)
            loss_pe = F.mse_loss(prediction, yb) - config.lambda1 * F.cross_entropy(logits, cb)
            if not torch.isfinite(loss_pe):
                raise NumericError("Predictor/filter loss is not finite", epoch=epoch)
            optimizer_pe.zero_grad()
            loss_pe.backward()
            optimizer_pe.step()

            _, logits = net(xb)
            loss_d = config.lambda2 * F.cross_entropy(logits, cb)
            if not torch.isfinite(loss_d):
                raise NumericError("Discriminator loss is not finite", epoch=epoch)
            optimizer_d.zero_grad()
            loss_d.backward()
            optimizer_d.step()

        mse, ce, accuracy = _epoch_metrics(net, x, y, c)
        if not (np.isfinite(mse) and np.isfinite(ce)):
            raise NumericError("Training diverged", epoch=epoch)
        trace.append(TraceRow(epoch=epoch, mse=mse, ce=ce, disc_acc=accuracy))
        logger.debug(f"epoch {epoch}: mse={mse:.6g} ce={ce:.6g} disc_acc={accuracy:.4f}")
    return params_to_arrays(net), trace


def adv_predict(params: MlpParams, X: np.ndarray) -> np.ndarray:
    """Forward pass ``P(E(X))``."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != params.n_features:
        raise DataError(f"Expected a matrix with {params.n_features} columns, got shape {X.shape}")
    net = params_from_arrays(params)
    with torch.no_grad():
        prediction, _ = net(_tensor(X))
    return prediction.numpy()


def trace_to_csv(trace: List[TraceRow]) -> str:
    frame = pd.DataFrame(
        {
            "epoch": [row.epoch for row in trace],
            "mse": [serialization.format_number(row.mse) for row in trace],
            "ce": [serialization.format_number(row.ce) for row in trace],
            "disc_acc": [serialization.format_number(row.disc_acc) for row in trace],
        }
    )
    buffer = io.StringIO()
    frame.to_csv(buffer, index=False, lineterminator="\n")
    return buffer.getvalue()


@dataclass
class AdvObjectives:
    """Both training objectives as functions of one flat parameter vector."""
    theta: torch.Tensor
    predictor: Callable[[torch.Tensor], torch.Tensor]
    discriminator: Callable[[torch.Tensor], torch.Tensor]
    names: List[str] = field(default_factory=list)


def objective_gradients(
        params: MlpParams,
        X: np.ndarray,
        Y: np.ndarray,
        codes: np.ndarray,
        lambda1: float,
        lambda2: float,
) -> AdvObjectives:
    """Expose the predictor/filter and discriminator objectives for gradient checks.

    Example:
        >>> objectives = objective_gradients(params, X, Y, codes, 1e-2, 1e-2)
        >>> torch.autograd.gradcheck(objectives.predictor, (objectives.theta,))
    """
    net = params_from_arrays(params)
    names = [name for name, _ in net.named_parameters()]
    shapes = [p.shape for _, p in net.named_parameters()]
    sizes = [p.numel() for _, p in net.named_parameters()]
    theta = torch.cat([p.detach().reshape(-1) for _, p in net.named_parameters()]).clone().requires_grad_(True)
    x, y = _tensor(X), _tensor(_targets(Y))
    c = torch.tensor(np.asarray(codes), dtype=torch.long)

    def unflatten(flat: torch.Tensor) -> Dict[str, torch.Tensor]:
        pieces = torch.split(flat, sizes)
        return {name: piece.reshape(shape) for name, piece, shape in zip(names, pieces, shapes)}

    def predictor(flat: torch.Tensor) -> torch.Tensor:
        prediction, logits = functional_call(net, unflatten(flat), (x,))
        return F.mse_loss(prediction, y) - lambda1 * F.cross_entropy(logits, c)

    def discriminator(flat: torch.Tensor) -> torch.Tensor:
        _, logits = functional_call(net, unflatten(flat), (x,))
        return lambda2 * F.cross_entropy(logits, c)

    return AdvObjectives(theta=theta, predictor=predictor, discriminator=discriminator, names=names)


class AdversarialRegressor(BaseRegressor):
    """Estimator wrapper; ``fit`` needs the protected attribute of the training rows."""

    def __init__(self, config: Optional[AdvConfig] = None):
        self.config = config or AdvConfig()
        self.params_: Optional[MlpParams] = None
        self.trace_: List[TraceRow] = []

    def fit(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None,
            protected: Optional[ProtectedAttr] = None) -> AdversarialRegressor:
        if protected is None:
            raise ConfigError("AdversarialRegressor.fit requires the protected attribute")
        if weights is not None:
            logger.warning("AdversarialRegressor ignores sample weights")
        self.params_, self.trace_ = adv_train(X, Y, protected, self.config)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.params_ is None:
            raise NumericError("AdversarialRegressor.predict called before fit")
        return adv_predict(self.params_, X)

    def clone(self) -> AdversarialRegressor:
        return AdversarialRegressor(self.config)
