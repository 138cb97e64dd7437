"""Linear bias subspace: design matrix, covariance, neutralize, equalize.

The bias subspace is spanned by the leading eigenvectors of the covariance
of word vectors centered within small counterpart pairs ("defining sets").
Neutralizing projects a vector onto the orthogonal complement of that
subspace; equalizing re-embeds the members of an "equality set" so they
share one neutral component and keep unit norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .embeddings import EmbeddingTable
from .errors import DataError, FormatError
from .numerics import symmetric_eig

# Eigenvalues at or below this fraction of the largest are treated as
# numerically zero when ranking the subspace.
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class DefiningSets:
    """Index pairs of counterpart words; each pair is one defining set."""

    pairs: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for a, b in self.pairs:
            for i in (a, b):
                if i in seen:
                    raise DataError(f"word index {i} appears in two defining pairs")
                seen.add(i)
        object.__setattr__(self, "pairs", tuple((int(a), int(b)) for a, b in self.pairs))

    def __len__(self) -> int:
        return len(self.pairs)

    def validate_against(self, table: EmbeddingTable) -> None:
        n = len(table)
        for a, b in self.pairs:
            if not (0 <= a < n and 0 <= b < n):
                raise DataError(f"defining pair ({a}, {b}) out of range for |V|={n}")


@dataclass(frozen=True)
class EqualitySets:
    """Disjoint word-index sets, each of size >= 2, to be equalized."""

    sets: tuple[tuple[int, ...], ...]

    def __post_init__(self) -> None:
        seen: set[int] = set()
        for members in self.sets:
            if len(members) < 2:
                raise DataError("equality sets need at least two members")
            for i in members:
                if i in seen:
                    raise DataError(f"word index {i} appears in two equality sets")
                seen.add(i)
        object.__setattr__(
            self, "sets", tuple(tuple(int(i) for i in members) for members in self.sets)
        )


@dataclass(frozen=True, eq=False)
class LinearBiasModel:
    """Orthonormal basis (rows) of the bias subspace plus its eigenvalues."""

    basis: np.ndarray  # (K, d)
    explained: np.ndarray  # (K,)

    def __post_init__(self) -> None:
        basis = np.asarray(self.basis, dtype=np.float64)
        explained = np.asarray(self.explained, dtype=np.float64)
        basis.setflags(write=False)
        explained.setflags(write=False)
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "explained", explained)

    @property
    def k(self) -> int:
        return int(self.basis.shape[0])

    @property
    def dim(self) -> int:
        return int(self.basis.shape[1])

    def project(self, w: np.ndarray) -> np.ndarray:
        """Component of w inside the bias subspace."""
        w = np.asarray(w, dtype=np.float64)
        return self.basis.T @ (self.basis @ w)


def build_design_matrix(table: EmbeddingTable, sets: DefiningSets) -> np.ndarray:
    """Stack, for every word in every pair, its vector minus the pair mean.

    The result has 2N rows that sum to the zero vector.
    """
    if not sets.pairs:
        raise DataError("no defining pairs supplied")
    sets.validate_against(table)
    rows = []
    for a, b in sets.pairs:
        va = table.matrix[a]
        vb = table.matrix[b]
        mean = (va + vb) / 2.0
        rows.append(va - mean)
        rows.append(vb - mean)
    return np.vstack(rows)


def bias_covariance(design: np.ndarray) -> np.ndarray:
    """Bias covariance: half the cross-product of the centered design rows."""
    design = np.asarray(design, dtype=np.float64)
    return 0.5 * design.T @ design


def fit_linear_subspace(
    table: EmbeddingTable, sets: DefiningSets, k: int
) -> LinearBiasModel:
    """Top-k eigenvectors of the bias covariance, by descending eigenvalue.

    Raises:
        DataError: if k exceeds the numerical rank of the covariance
            (the message reports the available rank).
    """
    if not 1 <= k <= table.dim:
        raise DataError(f"k must be in [1, {table.dim}], got {k}")
    cov = bias_covariance(build_design_matrix(table, sets))
    eig = symmetric_eig(cov)
    top = float(eig.eigenvalues[0]) if eig.eigenvalues.size else 0.0
    rank = int(np.sum(eig.eigenvalues > RANK_RTOL * max(top, 0.0))) if top > 0 else 0
    if k > rank:
        raise DataError(
            f"requested {k} bias directions but covariance rank is {rank}"
        )
    return LinearBiasModel(
        basis=eig.eigenvectors[:, :k].T.copy(),
        explained=eig.eigenvalues[:k].copy(),
    )


def neutralize_vector(model: LinearBiasModel, w: np.ndarray) -> np.ndarray:
    """Project w onto the orthogonal complement of the bias subspace."""
    w = np.asarray(w, dtype=np.float64)
    return w - model.project(w)


def neutralize_matrix(model: LinearBiasModel, matrix: np.ndarray) -> np.ndarray:
    """Row-wise neutralization."""
    matrix = np.asarray(matrix, dtype=np.float64)
    return matrix - (matrix @ model.basis.T) @ model.basis


def equalize_set(
    model: LinearBiasModel,
    table: EmbeddingTable,
    members: tuple[int, ...] | list[int],
) -> list[np.ndarray]:
    """Re-embed one equality set: shared neutral component, unit norms.

    Each output is nu + Z * (w_B - mu_B), where mu is the set mean, nu its
    neutral part, w_B / mu_B the bias-subspace parts, and the normalizer
    Z = sqrt(1 - |nu|^2) / |w_B - mu_B| restores unit length.

    Raises:
        DataError: if a member's bias component coincides with the set
            mean's (nothing to scale), or if |nu| > 1.
    """
    members = [int(i) for i in members]
    if len(members) < 2:
        raise DataError("equality sets need at least two members")
    vectors = table.matrix[members]
    mu = vectors.mean(axis=0)
    mu_b = model.project(mu)
    nu = mu - mu_b
    nu_norm_sq = float(nu @ nu)
    if nu_norm_sq > 1.0 + 1e-12:
        raise DataError(
            "equality set mean has neutral norm > 1; cannot renormalize "
            "(are the input vectors unit length?)"
        )
    nu_norm_sq = min(nu_norm_sq, 1.0)
    out = []
    for idx, w in zip(members, vectors):
        w_b = model.project(w)
        diff = w_b - mu_b
        diff_norm = float(np.linalg.norm(diff))
        if diff_norm <= 1e-12:
            raise DataError(
                f"word {table.words[idx]!r} has no bias offset from its "
                "equality-set mean; cannot equalize"
            )
        z = np.sqrt(1.0 - nu_norm_sq) / diff_norm
        out.append(nu + z * diff)
    return out


def linear_model_to_dict(model: LinearBiasModel) -> dict:
    return {
        "type": "linear",
        "k": model.k,
        "dim": model.dim,
        "basis": model.basis.tolist(),
        "eigenvalues": model.explained.tolist(),
    }


def linear_model_from_dict(data: dict) -> LinearBiasModel:
    if data.get("type") != "linear":
        raise FormatError("not a linear model file")
    return LinearBiasModel(
        basis=np.array(data["basis"], dtype=np.float64),
        explained=np.array(data["eigenvalues"], dtype=np.float64),
    )


def resolve_word_sets(
    table: EmbeddingTable,
    defining_pairs: list[list[str]],
    equality_sets: list[list[str]] | None = None,
) -> tuple[DefiningSets, EqualitySets, list[str]]:
    """Map word-level sets onto table indices.

    A defining pair with any missing word is dropped whole; an equality
    set keeps its present members and is dropped if fewer than two remain.
    Returns the resolved sets plus human-readable warnings about drops.
    """
    warnings: list[str] = []
    pairs: list[tuple[int, int]] = []
    for pair in defining_pairs:
        if len(pair) != 2:
            raise FormatError(f"defining sets must be pairs, got {pair!r}")
        a, b = pair
        if a in table and b in table:
            pairs.append((table.row_index(a), table.row_index(b)))
        else:
            missing = [w for w in pair if w not in table]
            warnings.append(f"dropping defining pair {pair!r}: missing {missing}")
    resolved_eq: list[tuple[int, ...]] = []
    for group in equality_sets or []:
        present = [w for w in group if w in table]
        absent = [w for w in group if w not in table]
        if absent:
            warnings.append(f"equality set {group!r}: missing {absent}")
        if len(present) >= 2:
            resolved_eq.append(tuple(table.row_index(w) for w in present))
        elif present:
            warnings.append(f"dropping equality set {group!r}: fewer than two present")
    if not pairs:
        raise DataError("no defining pairs remain after vocabulary filtering")
    return DefiningSets(tuple(pairs)), EqualitySets(tuple(resolved_eq)), warnings
