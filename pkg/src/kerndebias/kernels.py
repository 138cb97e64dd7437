"""Kernel functions and Gram matrices from declarative specs.

Supported families: linear, cosine, rbf, sigmoid, polynomial, laplace,
and convex combinations thereof.  The sigmoid kernel is admitted even
though it is not positive semi-definite in general; downstream fitting
discards its negative eigenvalues.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataError, FormatError

FAMILIES = (
    "linear",
    "cosine",
    "rbf",
    "sigmoid",
    "polynomial",
    "laplace",
    "convex_combination",
)

_NEEDS_GAMMA = {"rbf", "sigmoid", "polynomial", "laplace"}
_NEEDS_COEF0 = {"sigmoid", "polynomial"}

# Rows are evaluated against blocks of this many columns so the pairwise
# difference tensor stays bounded in memory on full-vocabulary inputs.
_BLOCK = 4096


@dataclass(frozen=True)
class KernelSpec:
    """Declarative description of a kernel function.

    gamma is required for rbf/sigmoid/polynomial/laplace, coef0 for
    sigmoid/polynomial, degree for polynomial.  convex_combination takes
    (weight, KernelSpec) components with nonnegative weights summing to 1.
    """

    family: str
    gamma: float | None = None
    coef0: float | None = None
    degree: int | None = None
    components: tuple[tuple[float, "KernelSpec"], ...] = field(default=())

    def __post_init__(self) -> None:
        if self.family not in FAMILIES:
            raise FormatError(f"unknown kernel family {self.family!r}")
        if self.family in _NEEDS_GAMMA:
            if self.gamma is None or not self.gamma > 0:
                raise FormatError(f"{self.family} kernel requires gamma > 0")
        if self.family in _NEEDS_COEF0 and self.coef0 is None:
            raise FormatError(f"{self.family} kernel requires coef0")
        if self.family == "polynomial":
            if self.degree is None or self.degree < 1:
                raise FormatError("polynomial kernel requires degree >= 1")
        if self.family == "convex_combination":
            if not self.components:
                raise FormatError("convex_combination requires components")
            weights = [w for w, _ in self.components]
            if any(w < 0 for w in weights):
                raise FormatError("convex weights must be nonnegative")
            if abs(sum(weights) - 1.0) > 1e-12:
                raise FormatError("convex weights must sum to 1")
            object.__setattr__(self, "components", tuple(self.components))

    def to_dict(self) -> dict:
        if self.family == "convex_combination":
            return {
                "family": self.family,
                "components": [
                    {"weight": w, "spec": s.to_dict()} for w, s in self.components
                ],
            }
        out: dict = {"family": self.family}
        if self.gamma is not None:
            out["gamma"] = self.gamma
        if self.coef0 is not None:
            out["coef0"] = self.coef0
        if self.degree is not None:
            out["degree"] = self.degree
        return out

    @classmethod
    def from_dict(cls, data: dict) -> "KernelSpec":
        if not isinstance(data, dict) or "family" not in data:
            raise FormatError("kernel spec must be an object with a 'family' key")
        family = data["family"]
        if family == "convex_combination":
            comps = tuple(
                (float(c["weight"]), cls.from_dict(c["spec"]))
                for c in data.get("components", [])
            )
            return cls(family=family, components=comps)
        return cls(
            family=family,
            gamma=float(data["gamma"]) if "gamma" in data else None,
            coef0=float(data["coef0"]) if "coef0" in data else None,
            degree=int(data["degree"]) if "degree" in data else None,
        )

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_json(cls, text: str) -> "KernelSpec":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise FormatError(f"invalid kernel JSON: {exc}") from None
        return cls.from_dict(data)


def default_gamma(dim: int) -> float:
    """Default width parameter 1/d used when none is supplied."""
    if dim < 1:
        raise DataError("dimension must be positive")
    return 1.0 / dim


def _as_matrix(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2:
        raise DataError(f"expected vectors or a matrix, got {x.ndim}-D input")
    if not np.all(np.isfinite(x)):
        raise DataError("kernel inputs must be finite")
    return x


def _gram_block(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    if spec.family == "linear":
        return x @ y.T
    if spec.family == "cosine":
        xn = np.linalg.norm(x, axis=1)
        yn = np.linalg.norm(y, axis=1)
        if np.any(xn == 0.0) or np.any(yn == 0.0):
            raise DataError("cosine kernel is undefined for a zero vector")
        g = (x / xn[:, None]) @ (y / yn[:, None]).T
        return np.clip(g, -1.0, 1.0)
    if spec.family == "sigmoid":
        return np.tanh(spec.gamma * (x @ y.T) + spec.coef0)
    if spec.family == "polynomial":
        return (spec.gamma * (x @ y.T) + spec.coef0) ** spec.degree
    if spec.family in ("rbf", "laplace"):
        diff = x[:, None, :] - y[None, :, :]
        if spec.family == "rbf":
            dist = np.sum(diff * diff, axis=2)
        else:
            dist = np.sum(np.abs(diff), axis=2)
        return np.exp(-spec.gamma * dist)
    if spec.family == "convex_combination":
        out = np.zeros((x.shape[0], y.shape[0]))
        for weight, sub in spec.components:
            out += weight * _gram_block(sub, x, y)
        return out
    raise FormatError(f"unknown kernel family {spec.family!r}")


def gram_matrix(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> np.ndarray:
    """Pairwise kernel evaluations: entry (i, j) is k(x_i, y_j)."""
    x = _as_matrix(x)
    y = _as_matrix(y)
    if x.shape[1] != y.shape[1]:
        raise DataError(
            f"dimension mismatch: {x.shape[1]} vs {y.shape[1]}"
        )
    blocks = [
        _gram_block(spec, x, y[j : j + _BLOCK]) for j in range(0, y.shape[0], _BLOCK)
    ]
    if not blocks:
        return np.zeros((x.shape[0], 0))
    return np.hstack(blocks)


def eval_kernel(spec: KernelSpec, x: np.ndarray, y: np.ndarray) -> float:
    """Evaluate the kernel on a single pair of d-vectors."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.ndim != 1 or y.ndim != 1:
        raise DataError("eval_kernel expects 1-D vectors")
    return float(gram_matrix(spec, x[None, :], y[None, :])[0, 0])


def kernel_diag(spec: KernelSpec, x: np.ndarray) -> np.ndarray:
    """k(x_i, x_i) for every row, without forming the full Gram."""
    x = _as_matrix(x)
    if spec.family in ("rbf", "laplace"):
        return np.ones(x.shape[0])
    if spec.family == "cosine":
        if np.any(np.linalg.norm(x, axis=1) == 0.0):
            raise DataError("cosine kernel is undefined for a zero vector")
        return np.ones(x.shape[0])
    sq = np.sum(x * x, axis=1)
    if spec.family == "linear":
        return sq
    if spec.family == "sigmoid":
        return np.tanh(spec.gamma * sq + spec.coef0)
    if spec.family == "polynomial":
        return (spec.gamma * sq + spec.coef0) ** spec.degree
    if spec.family == "convex_combination":
        out = np.zeros(x.shape[0])
        for weight, sub in spec.components:
            out += weight * kernel_diag(sub, x)
        return out
    raise FormatError(f"unknown kernel family {spec.family!r}")
