"""Kernel extreme learning machine (kernel ridge) regression.

Classes:
    KernelSpec: Kernel choice; only the linear kernel ``K(A, B) = A B^T`` ships.
    KelmModel: Fitted dual coefficients with the training features.
    KelmRegressor: :class:`~faireg.base.BaseRegressor` wrapper used by tuning
        and the pipeline, persistable through an :class:`ArtifactStore`.

Functions:
    kelm_fit: Solve ``(I/C + K) beta = Y`` (or its sample-weighted form).
    kelm_predict: ``K(X, X_o) beta`` with the weights inserted in the kernel.
    primal_solution: The feature-space solution of the same weighted ridge
        problem, ``(X^T W X + I/C)^-1 X^T W Y``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional

import numpy as np
from scipy import linalg
from sklearn.metrics.pairwise import linear_kernel

from ..base import BaseRegressor
from ..exceptions import DataError, NumericError
from ..storage import ArtifactStore

__all__ = [
    'KernelSpec',
    'KelmModel',
    'KelmRegressor',
    'kelm_fit',
    'kelm_predict',
    'primal_solution',
]


def __dir__() -> List[str]:
    return sorted(__all__)


_KERNELS: Dict[str, Callable[[np.ndarray, np.ndarray], np.ndarray]] = {
    "linear": linear_kernel,
}


@dataclass(frozen=True)
class KernelSpec:
    kind: str = "linear"

    def __post_init__(self):
        if self.kind not in _KERNELS:
            raise DataError(f"Unsupported kernel {self.kind!r}; available: {sorted(_KERNELS)}")

    def __call__(self, A: np.ndarray, B: np.ndarray) -> np.ndarray:
        return _KERNELS[self.kind](A, B)


@dataclass(frozen=True, eq=False)
class KelmModel:
    train_features: np.ndarray
    beta: np.ndarray
    C: float
    kernel: KernelSpec = field(default_factory=KernelSpec)
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.beta.shape[0] != self.train_features.shape[0]:
            raise DataError("beta and train_features must have the same number of rows")
        if not self.C > 0:
            raise DataError(f"C must be positive, got {self.C!r}")


def _as_matrix(values: np.ndarray, what: str) -> np.ndarray:
    array = np.asarray(values, dtype=np.float64)
    if array.ndim == 1:
        array = array[:, None]
    if array.ndim != 2:
        raise DataError(f"{what} must be a matrix, got shape {array.shape}")
    return array


def _check_weights(weights: Optional[np.ndarray], n: int) -> Optional[np.ndarray]:
    if weights is None:
        return None
    w = np.asarray(weights, dtype=np.float64)
    if w.shape != (n,) or np.any(w <= 0) or not np.all(np.isfinite(w)):
        raise DataError(f"weights must be {n} positive finite values")
    return w


def kelm_fit(
        X_o: np.ndarray,
        Y_o: np.ndarray,
        C: float,
        kernel: Optional[KernelSpec] = None,
        weights: Optional[np.ndarray] = None,
) -> KelmModel:
    """Fit the dual coefficients with one dense factorization for all label columns.

    Unweighted systems ``I/C + K`` are symmetric positive definite and use a
    Cholesky factorization; the weighted system ``I/C + K W`` is not symmetric
    and uses LU.

    Raises:
        DataError: Shape mismatch, non-positive C or weights.
        NumericError: The system's condition number bound exceeds ``1/eps``.
    """
    X_o = _as_matrix(X_o, "X_o")
    Y_o = _as_matrix(Y_o, "Y_o")
    n = X_o.shape[0]
    if n < 1 or Y_o.shape[0] != n:
        raise DataError(f"X_o has {n} rows, Y_o has {Y_o.shape[0]}; need at least one matching row")
    if not (np.isfinite(C) and C > 0):
        raise DataError(f"C must be positive and finite, got {C!r}")
    kernel = kernel or KernelSpec()
    w = _check_weights(weights, n)

    gram = kernel(X_o, X_o)
    if w is not None:
        gram = gram * w[None, :]
    # eigenvalues of I/C + K W lie in [1/C, 1/C + trace(K W)]
    condition_bound = 1.0 + C * float(np.trace(gram))
    if not condition_bound < 1.0 / np.finfo(np.float64).eps:
        raise NumericError(f"KELM system is ill-conditioned (condition number up to {condition_bound:.3e}) for C={C!r}")

    system = gram + np.eye(n) / C
    try:
        if w is None:
            beta = linalg.cho_solve(linalg.cho_factor(system, lower=True), Y_o)
        else:
            beta = linalg.lu_solve(linalg.lu_factor(system), Y_o)
    except (linalg.LinAlgError, ValueError) as e:
        raise NumericError(f"KELM factorization failed for C={C!r}: {e}")
    if not np.all(np.isfinite(beta)):
        raise NumericError(f"KELM coefficients are not finite for C={C!r}")
    return KelmModel(train_features=X_o, beta=beta, C=float(C), kernel=kernel, weights=w)


def kelm_predict(model: KelmModel, X: np.ndarray) -> np.ndarray:
    X = _as_matrix(X, "X")
    if X.shape[1] != model.train_features.shape[1]:
        raise DataError(f"Expected {model.train_features.shape[1]} feature columns, got {X.shape[1]}")
    rows = model.kernel(X, model.train_features)
    if model.weights is not None:
        rows = rows * model.weights[None, :]
    return rows @ model.beta


def primal_solution(
        X: np.ndarray,
        Y: np.ndarray,
        C: float,
        weights: Optional[np.ndarray] = None,
) -> np.ndarray:
    """Feature-space coefficients (d×L) of the linear-kernel weighted ridge problem.

    Minimizes ``(Y - X b)^T W (Y - X b) + b^T b / C``; for the linear kernel
    ``X @ primal_solution(...)`` equals ``kelm_predict`` on the same data.
    """
    X = _as_matrix(X, "X")
    Y = _as_matrix(Y, "Y")
    w = _check_weights(weights, X.shape[0])
    weighted_X = X if w is None else X * w[:, None]
    system = weighted_X.T @ X + np.eye(X.shape[1]) / C
    return linalg.solve(system, weighted_X.T @ Y, assume_a="pos")


class KelmRegressor(BaseRegressor):
    """Multi-output KELM estimator.

    Example:
        >>> model = KelmRegressor(C=1e-3).fit(X_train, Y_train)
        >>> Y_pred = model.predict(X_test)
    """

    def __init__(self, C: float = 1e-3, kernel: str = "linear"):
        self.C = C
        self.kernel = KernelSpec(kernel)
        self.model_: Optional[KelmModel] = None

    def fit(self, X: np.ndarray, Y: np.ndarray, weights: Optional[np.ndarray] = None) -> KelmRegressor:
        self.model_ = kelm_fit(X, Y, self.C, self.kernel, weights)
        return self

    def predict(self, X: np.ndarray) -> np.ndarray:
        if self.model_ is None:
            raise NumericError("KelmRegressor.predict called before fit")
        return kelm_predict(self.model_, X)

    def clone(self) -> KelmRegressor:
        return KelmRegressor(C=self.C, kernel=self.kernel.kind)

    def save(self, store: ArtifactStore, key: str) -> None:
        """Persist coefficients, training features and settings as one ``.npz`` artifact."""
        if self.model_ is None:
            raise NumericError("Cannot save an unfitted KelmRegressor")
        arrays = {
            "beta": self.model_.beta,
            "train_features": self.model_.train_features,
            "C": np.array(self.model_.C),
            "kernel": np.array(self.model_.kernel.kind),
        }
        if self.model_.weights is not None:
            arrays["weights"] = self.model_.weights
        store.store_arrays(key, arrays)

    @classmethod
    def load(cls, store: ArtifactStore, key: str) -> KelmRegressor:
        arrays = store.retrieve_arrays(key)
        regressor = cls(C=float(arrays["C"]), kernel=str(arrays["kernel"]))
        regressor.model_ = KelmModel(
            train_features=arrays["train_features"],
            beta=arrays["beta"],
            C=regressor.C,
            kernel=regressor.kernel,
            weights=arrays.get("weights"),
        )
        return regressor
