"""Estimator base class, shared exceptions, and input validation helpers."""
from __future__ import annotations

import inspect
from typing import Any


class ConfigurationError(ValueError):
    """Raised when an operation is invoked with an invalid configuration."""


class NotFittedError(RuntimeError):
    """Raised when a fitted attribute is accessed before fit()."""


class Estimator:
    """Minimal scikit-learn style base: introspective get_params/set_params.

    Subclasses must accept all hyperparameters as explicit keyword arguments
    in ``__init__`` and store them under the same attribute names. Fitted
    state uses trailing-underscore attributes set by ``fit``.
    """

    @classmethod
    def _param_names(cls) -> list[str]:
        sig = inspect.signature(cls.__init__)
        return [
            name
            for name, p in sig.parameters.items()
            if name != "self" and p.kind not in (p.VAR_POSITIONAL, p.VAR_KEYWORD)
        ]

    def get_params(self, deep: bool = True) -> dict[str, Any]:
        return {name: getattr(self, name) for name in self._param_names()}

    def set_params(self, **params: Any) -> "Estimator":
        valid = set(self._param_names())
        for key, value in params.items():
            if key not in valid:
                raise ValueError(
                    f"invalid parameter {key!r} for {type(self).__name__}; "
                    f"valid parameters: {sorted(valid)}"
                )
            setattr(self, key, value)
        return self

    def _check_fitted(self, attr: str) -> None:
        if not hasattr(self, attr):
            raise NotFittedError(
                f"{type(self).__name__} instance is not fitted; call fit() first"
            )

    def __repr__(self) -> str:
        params = ", ".join(f"{k}={v!r}" for k, v in self.get_params().items())
        return f"{type(self).__name__}({params})"


def require(condition: bool, message: str, exc: type[Exception] = ConfigurationError) -> None:
    if not condition:
        raise exc(message)


def check_positive(value: float, name: str) -> float:
    require(value > 0, f"{name} must be positive, got {value}")
    return value


def token_lists(docs) -> list[list[str]]:
    """Accept TokenizedDoc-like objects or bare token sequences uniformly."""
    out = []
    for doc in docs:
        tokens = getattr(doc, "tokens", doc)
        out.append(list(tokens))
    return out
