"""Bias and quality evaluations over interchangeable similarity backends.

Provides the word association test (effect size + one-sided permutation
p-value), the professions neighbor-correlation benchmark, an SMO-trained
kernel SVM for the indirect-bias classification protocol, and SimLex-style
rank-correlation scoring.  Every protocol runs against any backend:
raw cosine, linearly neutralized cosine, or the corrected kernel metric.
"""

from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .embeddings import EmbeddingTable
from .errors import DataError, NumericalError
from .linear import LinearBiasModel, neutralize_matrix
from .numerics import pearson, spearman
from .rkhs import CorrectedMetric, KernelBiasModel
from .seeding import rng_for

logger = logging.getLogger(__name__)

EXHAUSTIVE_LIMIT = 20000
DEFAULT_PERMUTATIONS = 100000
DEFAULT_SEED = 42


class SimilarityBackend:
    """Word-level similarity interface shared by all evaluations."""

    name = "backend"

    def __contains__(self, word: str) -> bool:
        raise NotImplementedError

    def similarity(self, a: str, b: str) -> float:
        raise NotImplementedError

    def similarity_row(self, word: str, candidates: Sequence[str]) -> np.ndarray:
        return np.array([self.similarity(word, c) for c in candidates])


class _VectorCosineBackend(SimilarityBackend):
    """Cosine over a fixed word->vector matrix."""

    def __init__(self, table: EmbeddingTable, matrix: np.ndarray):
        self._table = table
        norms = np.linalg.norm(matrix, axis=1)
        if np.any(norms == 0.0):
            idx = int(np.nonzero(norms == 0.0)[0][0])
            raise DataError(
                f"word {table.words[idx]!r} has a zero vector under this backend"
            )
        self._unit = matrix / norms[:, None]

    def __contains__(self, word: str) -> bool:
        return word in self._table

    def similarity(self, a: str, b: str) -> float:
        va = self._unit[self._table.row_index(a)]
        vb = self._unit[self._table.row_index(b)]
        return float(np.clip(va @ vb, -1.0, 1.0))

    def similarity_row(self, word: str, candidates: Sequence[str]) -> np.ndarray:
        v = self._unit[self._table.row_index(word)]
        rows = self._unit[[self._table.row_index(c) for c in candidates]]
        return np.clip(rows @ v, -1.0, 1.0)


class RawCosineBackend(_VectorCosineBackend):
    """Plain cosine similarity on the table as loaded."""

    name = "raw"

    def __init__(self, table: EmbeddingTable):
        super().__init__(table, table.matrix)


class LinearNeutralizedBackend(_VectorCosineBackend):
    """Cosine after projecting every vector off the linear bias subspace."""

    name = "linear"

    def __init__(self, table: EmbeddingTable, model: LinearBiasModel):
        if model.dim != table.dim:
            raise DataError(
                f"model dimension {model.dim} != table dimension {table.dim}"
            )
        super().__init__(table, neutralize_matrix(model, table.matrix))


class CorrectedKernelBackend(SimilarityBackend):
    """Corrected cosine in the bias-removed feature-space metric."""

    name = "kernel"

    def __init__(self, table: EmbeddingTable, model: KernelBiasModel):
        if model.dim != table.dim:
            raise DataError(
                f"model dimension {model.dim} != table dimension {table.dim}"
            )
        self._table = table
        self.metric = CorrectedMetric(model)
        self._self_products = self.metric.self_inner_products(table.matrix)
        bad = np.nonzero(self._self_products <= 1e-12)[0]
        if bad.size:
            raise DataError(
                f"word {table.words[bad[0]]!r} is fully neutralized under "
                "this kernel model; corrected cosine undefined"
            )

    def __contains__(self, word: str) -> bool:
        return word in self._table

    def similarity(self, a: str, b: str) -> float:
        ia = self._table.row_index(a)
        ib = self._table.row_index(b)
        cross = self.metric.inner_product(self._table.matrix[ia], self._table.matrix[ib])
        denom = math.sqrt(self._self_products[ia] * self._self_products[ib])
        return float(np.clip(cross / denom, -1.0, 1.0))

    def similarity_row(self, word: str, candidates: Sequence[str]) -> np.ndarray:
        iw = self._table.row_index(word)
        idx = [self._table.row_index(c) for c in candidates]
        cross = self.metric.inner_product_matrix(
            self._table.matrix[iw][None, :], self._table.matrix[idx]
        )[0]
        denom = np.sqrt(self._self_products[iw] * self._self_products[idx])
        return np.clip(cross / denom, -1.0, 1.0)


# ---------------------------------------------------------------------------
# Word association test
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WeatConfig:
    """Two target lists, two attribute lists, permutation settings."""

    x_words: tuple[str, ...]
    y_words: tuple[str, ...]
    a_words: tuple[str, ...]
    b_words: tuple[str, ...]
    permutations: int = DEFAULT_PERMUTATIONS
    seed: int = DEFAULT_SEED


@dataclass(frozen=True)
class WeatResult:
    effect_size: float
    p_value: float
    statistic: float
    n_used: dict[str, int]
    exhaustive: bool


def weat_association(
    sim: SimilarityBackend, word: str, a_words: Sequence[str], b_words: Sequence[str]
) -> float:
    """Relative association: mean sim to A minus mean sim to B."""
    a_in = [a for a in a_words if a in sim]
    b_in = [b for b in b_words if b in sim]
    if not a_in or not b_in:
        raise DataError("attribute sets are empty after vocabulary filtering")
    return float(
        sim.similarity_row(word, a_in).mean() - sim.similarity_row(word, b_in).mean()
    )


def _split_statistic(s_values: np.ndarray, idx: np.ndarray, total: float) -> float:
    # Sum over chosen minus sum over rest, via 2 * chosen - total so the
    # observed split and its enumerated twin are computed identically.
    return 2.0 * float(s_values[idx].sum()) - total


def weat_test(sim: SimilarityBackend, cfg: WeatConfig) -> WeatResult:
    """Effect size and one-sided permutation p-value for the association gap.

    The effect size is the standardized mean difference of per-word
    association scores between the target lists (population std over the
    union).  The p-value is the fraction of equal-size splits of the union
    whose statistic reaches the observed one: exhaustive when the number
    of splits is at most 20000, otherwise seeded Monte Carlo.
    """
    x_in = [w for w in cfg.x_words if w in sim]
    y_in = [w for w in cfg.y_words if w in sim]
    a_in = [w for w in cfg.a_words if w in sim]
    b_in = [w for w in cfg.b_words if w in sim]
    if not a_in or not b_in:
        raise DataError("attribute sets are empty after vocabulary filtering")
    if len(x_in) != len(y_in):
        keep = min(len(x_in), len(y_in))
        logger.warning(
            "target lists unbalanced after filtering (%d vs %d); truncating to %d",
            len(x_in), len(y_in), keep,
        )
        x_in, y_in = x_in[:keep], y_in[:keep]
    if len(x_in) + len(y_in) < 4:
        raise DataError("need at least 4 in-vocabulary target words")

    s_values = np.array(
        [weat_association(sim, w, a_in, b_in) for w in x_in + y_in]
    )
    nx = len(x_in)
    std = float(s_values.std())  # population std
    if std == 0.0:
        raise NumericalError("degenerate association scores: zero spread")
    effect = (float(s_values[:nx].mean()) - float(s_values[nx:].mean())) / std

    total = float(s_values.sum())
    observed = _split_statistic(s_values, np.arange(nx), total)

    n_union = len(s_values)
    n_splits = math.comb(n_union, nx)
    if n_splits <= EXHAUSTIVE_LIMIT:
        hits = sum(
            1
            for combo in itertools.combinations(range(n_union), nx)
            if _split_statistic(s_values, np.array(combo), total) >= observed
        )
        p_value = hits / n_splits
        exhaustive = True
    else:
        rng = rng_for(cfg.seed, "weat-permutation")
        hits = 0
        remaining = cfg.permutations
        while remaining > 0:
            m = min(20000, remaining)
            keys = rng.random((m, n_union))
            idx = np.argpartition(keys, nx - 1, axis=1)[:, :nx]
            stats = 2.0 * s_values[idx].sum(axis=1) - total
            hits += int(np.sum(stats >= observed))
            remaining -= m
        p_value = hits / cfg.permutations
        exhaustive = False

    return WeatResult(
        effect_size=float(effect),
        p_value=float(p_value),
        statistic=float(observed),
        n_used={"X": len(x_in), "Y": len(y_in), "A": len(a_in), "B": len(b_in)},
        exhaustive=exhaustive,
    )


# ---------------------------------------------------------------------------
# Professions neighbor correlation
# ---------------------------------------------------------------------------


def original_bias_scores(
    table: EmbeddingTable, words: Sequence[str], male_anchor: str = "he", female_anchor: str = "she"
) -> np.ndarray:
    """cos(w, he - she) in the original space, per word."""
    for anchor in (male_anchor, female_anchor):
        if anchor not in table:
            raise DataError(f"anchor word {anchor!r} not in vocabulary")
    direction = table.lookup(male_anchor) - table.lookup(female_anchor)
    norm = float(np.linalg.norm(direction))
    if norm == 0.0:
        raise DataError("anchor difference direction is zero")
    direction = direction / norm
    rows = table.matrix[[table.row_index(w) for w in words]]
    row_norms = np.linalg.norm(rows, axis=1)
    if np.any(row_norms == 0.0):
        raise DataError("zero vector among scored words")
    return (rows @ direction) / row_norms


def professions_correlation(
    sim: SimilarityBackend,
    table: EmbeddingTable,
    professions: Sequence[str],
    male_words: Sequence[str],
    female_words: Sequence[str],
    k_neighbors: int = 100,
    pool: str = "vocabulary",
    male_anchor: str = "he",
    female_anchor: str = "she",
) -> float:
    """Correlation of male-neighbor counts with original-space bias.

    For every profession, its k nearest neighbors under `sim` are drawn
    from the candidate pool (full vocabulary by default, or the union of
    professions and gendered lexicons with pool="restricted"); the count
    of neighbors in the male lexicon is correlated (Pearson) against the
    profession's bias in the original space.
    """
    profs = [w for w in professions if w in table and w in sim]
    if len(profs) < 3:
        raise DataError("need at least three in-vocabulary professions")
    male_set = {w for w in male_words if w in table}
    if pool == "vocabulary":
        candidates = list(table.words)
    elif pool == "restricted":
        pool_words = list(dict.fromkeys([*professions, *male_words, *female_words]))
        candidates = [w for w in pool_words if w in table]
    else:
        raise DataError(f"unknown candidate pool {pool!r}")

    counts = np.empty(len(profs))
    for i, prof in enumerate(profs):
        others = [c for c in candidates if c != prof]
        sims = sim.similarity_row(prof, others)
        k = min(k_neighbors, len(others))
        top = np.argsort(-sims, kind="stable")[:k]
        counts[i] = sum(1 for j in top if others[int(j)] in male_set)

    bias = original_bias_scores(table, profs, male_anchor, female_anchor)
    if np.all(counts == counts[0]):
        raise NumericalError("male-neighbor counts are constant; correlation undefined")
    return pearson(counts, bias)


# ---------------------------------------------------------------------------
# Kernel SVM via sequential minimal optimization
# ---------------------------------------------------------------------------


@dataclass(eq=False)
class SvmModel:
    """Dual SVM state: coefficients, bias, training data, kernel."""

    dual_coef: np.ndarray  # (n,) alpha_i in [0, C]
    bias: float
    vectors: np.ndarray  # (n, d) training vectors
    labels: np.ndarray  # (n,) in {-1, +1}
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray]

    def decision_value(self, w: np.ndarray) -> float:
        w = np.asarray(w, dtype=np.float64)
        row = self.kernel(w[None, :], self.vectors)[0]
        return float(np.sum(self.dual_coef * self.labels * row) + self.bias)


def rbf_on_squared_distance(
    sqdist: Callable[[np.ndarray, np.ndarray], np.ndarray], gamma: float
) -> Callable[[np.ndarray, np.ndarray], np.ndarray]:
    """Classifier kernel exp(-gamma * d^2) over a pluggable squared distance.

    Passing a corrected-metric squared distance evaluates the classifier
    in the bias-removed space.
    """

    def kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
        return np.exp(-gamma * sqdist(x, y))

    return kernel


def euclidean_squared_distance(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    x = np.atleast_2d(np.asarray(x, dtype=np.float64))
    y = np.atleast_2d(np.asarray(y, dtype=np.float64))
    diff = x[:, None, :] - y[None, :, :]
    return np.sum(diff * diff, axis=2)


def linear_classifier_kernel(x: np.ndarray, y: np.ndarray) -> np.ndarray:
    return np.atleast_2d(np.asarray(x, dtype=np.float64)) @ np.atleast_2d(
        np.asarray(y, dtype=np.float64)
    ).T


def svm_train(
    kernel: Callable[[np.ndarray, np.ndarray], np.ndarray],
    vectors: np.ndarray,
    labels: np.ndarray,
    c_reg: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 5,
    seed: int = DEFAULT_SEED,
) -> SvmModel:
    """Train a soft-margin kernel SVM with SMO.

    Pairs of multipliers are updated until no multiplier changes for
    max_passes consecutive sweeps at tolerance tol.  The partner
    multiplier is drawn from a generator seeded by `seed`, so training is
    deterministic.

    Raises:
        DataError: unless both labels -1 and +1 are present.
    """
    vectors = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.float64)
    if set(np.unique(labels)) != {-1.0, 1.0}:
        raise DataError("labels must contain both classes -1 and +1")
    n = vectors.shape[0]
    gram = kernel(vectors, vectors)
    alphas = np.zeros(n)
    bias = 0.0
    rng = rng_for(seed, "svm-smo")

    def decision(i: int) -> float:
        return float(np.sum(alphas * labels * gram[:, i]) + bias)

    passes = 0
    while passes < max_passes:
        changed = 0
        for i in range(n):
            err_i = decision(i) - labels[i]
            if (labels[i] * err_i < -tol and alphas[i] < c_reg) or (
                labels[i] * err_i > tol and alphas[i] > 0
            ):
                j = int(rng.integers(0, n - 1))
                if j >= i:
                    j += 1
                err_j = decision(j) - labels[j]
                alpha_i_old, alpha_j_old = alphas[i], alphas[j]
                if labels[i] == labels[j]:
                    low = max(0.0, alpha_i_old + alpha_j_old - c_reg)
                    high = min(c_reg, alpha_i_old + alpha_j_old)
                else:
                    low = max(0.0, alpha_j_old - alpha_i_old)
                    high = min(c_reg, c_reg + alpha_j_old - alpha_i_old)
                if low == high:
                    continue
                eta = 2.0 * gram[i, j] - gram[i, i] - gram[j, j]
                if eta >= 0:
                    continue
                a_j = alpha_j_old - labels[j] * (err_i - err_j) / eta
                a_j = min(high, max(low, a_j))
                if abs(a_j - alpha_j_old) < 1e-5:
                    continue
                a_i = alpha_i_old + labels[i] * labels[j] * (alpha_j_old - a_j)
                b1 = (
                    bias
                    - err_i
                    - labels[i] * (a_i - alpha_i_old) * gram[i, i]
                    - labels[j] * (a_j - alpha_j_old) * gram[i, j]
                )
                b2 = (
                    bias
                    - err_j
                    - labels[i] * (a_i - alpha_i_old) * gram[i, j]
                    - labels[j] * (a_j - alpha_j_old) * gram[j, j]
                )
                alphas[i], alphas[j] = a_i, a_j
                if 0 < a_i < c_reg:
                    bias = b1
                elif 0 < a_j < c_reg:
                    bias = b2
                else:
                    bias = (b1 + b2) / 2.0
                changed += 1
        passes = passes + 1 if changed == 0 else 0

    return SvmModel(
        dual_coef=alphas, bias=bias, vectors=vectors, labels=labels, kernel=kernel
    )


def svm_predict(model: SvmModel, w: np.ndarray) -> int:
    """Label in {-1, +1}; zero decision values resolve to +1."""
    return 1 if model.decision_value(w) >= 0 else -1


def svm_accuracy(model: SvmModel, vectors: np.ndarray, labels: np.ndarray) -> float:
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    labels = np.asarray(labels, dtype=np.float64)
    preds = np.array([svm_predict(model, v) for v in vectors], dtype=np.float64)
    return float(np.mean(preds == labels))


def indirect_bias_classification(
    sim_backend: SimilarityBackend,
    table: EmbeddingTable,
    sqdist: Callable[[np.ndarray, np.ndarray], np.ndarray],
    n_biased: int = 5000,
    n_train: int = 1000,
    svm_gamma: float | None = None,
    c_reg: float = 1.0,
    tol: float = 1e-3,
    max_passes: int = 5,
    seed: int = DEFAULT_SEED,
    male_anchor: str = "he",
    female_anchor: str = "she",
) -> dict:
    """Indirect-bias protocol: can an SVM recover gender from geometry?

    Takes the most male- and female-biased words by original-space bias
    (balanced halves), trains an RBF SVM over the supplied squared
    distance on a seeded sample, and reports train/test accuracy.
    """
    bias = original_bias_scores(table, table.words, male_anchor, female_anchor)
    order = np.argsort(-bias, kind="stable")
    half = min(n_biased // 2, len(table) // 2)
    male_idx = order[:half]
    female_idx = order[-half:]
    idx = np.concatenate([male_idx, female_idx])
    labels = np.concatenate([np.ones(half), -np.ones(half)])

    rng = rng_for(seed, "indirect-bias-split")
    perm = rng.permutation(len(idx))
    idx, labels = idx[perm], labels[perm]
    n_train = min(n_train, len(idx) - 2)
    if n_train < 2:
        raise DataError("vocabulary too small for an indirect-bias split")
    train_idx, test_idx = idx[:n_train], idx[n_train:]
    train_labels, test_labels = labels[:n_train], labels[n_train:]

    gamma = svm_gamma if svm_gamma is not None else 1.0 / table.dim
    kernel = rbf_on_squared_distance(sqdist, gamma)
    model = svm_train(
        kernel,
        table.matrix[train_idx],
        train_labels,
        c_reg=c_reg,
        tol=tol,
        max_passes=max_passes,
        seed=seed,
    )
    return {
        "backend": sim_backend.name,
        "n_train": int(len(train_idx)),
        "n_test": int(len(test_idx)),
        "train_accuracy": svm_accuracy(model, table.matrix[train_idx], train_labels),
        "test_accuracy": svm_accuracy(model, table.matrix[test_idx], test_labels),
        "svm_gamma": float(gamma),
    }


# ---------------------------------------------------------------------------
# SimLex-style similarity scoring
# ---------------------------------------------------------------------------


def simlex_eval(
    sim: SimilarityBackend, pairs: Sequence[tuple[str, str, float]]
) -> tuple[float, int]:
    """Spearman correlation of backend similarities with gold scores.

    Returns (correlation, dropped) where dropped counts pairs with an
    out-of-vocabulary word.

    Raises:
        DataError: with fewer than two scorable pairs.
    """
    model_scores = []
    gold_scores = []
    dropped = 0
    for a, b, gold in pairs:
        if a in sim and b in sim:
            model_scores.append(sim.similarity(a, b))
            gold_scores.append(float(gold))
        else:
            dropped += 1
    if len(model_scores) < 2:
        raise DataError(
            f"need at least two scorable pairs, got {len(model_scores)} "
            f"({dropped} dropped)"
        )
    return spearman(np.array(model_scores), np.array(gold_scores)), dropped
