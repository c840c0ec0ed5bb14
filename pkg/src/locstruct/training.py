"""Auxiliary dataset generation and the alpha-weight model fit.

Training draws ``m`` (input index, part) pairs from the training set, stores
the matching output parts, and factorizes ``K + m * lambda * I`` over the
sampled anchors. The fitted model maps any query ``(x, p)`` to the weight
vector ``alpha(x, p) = (K + m lambda I)^{-1} v(x, p)`` with
``v(x, p)_j = k((chi_j, p_j), (x, p))``.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .kernels import KernelSpec, PreparedAnchors, gram_matrix, GramMatrix
from .parts import PartDistribution, PartScheme, extract_part, sample_part

log = logging.getLogger(__name__)


class FactorizationError(np.linalg.LinAlgError):
    """Raised when the regularized kernel system cannot be factorized."""


@dataclass(frozen=True)
class AuxiliarySample:
    """One subsampled triple: input reference, part index, stored output part."""

    chi_ref: int
    p: int
    eta: object


def generate_auxiliary(
    train: Sequence[tuple],
    m: int,
    scheme: PartScheme,
    pi: PartDistribution,
    rng: np.random.Generator,
) -> list[AuxiliarySample]:
    """Draw ``m`` auxiliary samples from ``train = [(x_1, y_1), ...]``.

    Each sample picks a training index uniformly with replacement, a part
    from ``pi``, and stores the selected output part. Reproducible for a
    fixed generator state.
    """
    if not train:
        raise ValueError("training set must be non-empty")
    if m < 1:
        raise ValueError("m must be >= 1")
    n = len(train)
    out = []
    for _ in range(m):
        i = int(rng.integers(n))
        p = sample_part(pi, rng)
        eta = extract_part(train[i][1], scheme, p)
        out.append(AuxiliarySample(chi_ref=i, p=p, eta=eta))
    return out


def enumerate_auxiliary(train: Sequence[tuple], scheme: PartScheme) -> list[AuxiliarySample]:
    """The full part expansion of the training set, all (i, p) pairs in order."""
    out = []
    for i, (_, y) in enumerate(train):
        for p in range(scheme.num_parts):
            out.append(AuxiliarySample(chi_ref=i, p=p, eta=extract_part(y, scheme, p)))
    return out


@dataclass(frozen=True, eq=False)
class AlphaModel:
    """Fitted estimator: anchors plus a factorization of ``K + m lambda I``.

    The dense inverse is never materialized; solves go through the stored
    Cholesky factor. Immutable after fit, safe for concurrent queries.
    """

    inputs: tuple
    aux: tuple
    kernel: KernelSpec
    lam: float
    scheme: PartScheme
    factor: tuple = field(repr=False)
    jitter: float = 0.0

    @property
    def m(self) -> int:
        return len(self.aux)

    @cached_property
    def anchors(self) -> tuple:
        return tuple((self.inputs[s.chi_ref], s.p) for s in self.aux)

    @cached_property
    def prepared_anchors(self) -> PreparedAnchors:
        return PreparedAnchors(self.kernel, self.anchors, self.scheme)

    def apply_inverse(self, v: np.ndarray) -> np.ndarray:
        """Solve ``(K + m lambda I) u = v`` for a vector or stacked columns."""
        return cho_solve(self.factor, v)


def _factor_system(K: np.ndarray, shift: float):
    """Cholesky of K + shift*I with diagonal jitter escalation on failure."""
    m = K.shape[0]
    base = 1e-12 * np.trace(K) / m
    jitter = 0.0
    while True:
        A = K.copy()
        A.flat[:: m + 1] += shift + jitter
        try:
            return cho_factor(A, lower=True, overwrite_a=True, check_finite=False), jitter
        except np.linalg.LinAlgError:
            if jitter == 0.0:
                jitter = base if base > 0 else 1e-12
            else:
                jitter *= 10.0
            if jitter > 1e-6 * np.trace(K) / m:
                w = np.linalg.eigvalsh(K + shift * np.eye(m))
                cond = abs(w[-1] / w[0]) if w[0] != 0 else np.inf
                raise FactorizationError(
                    f"system of size {m} not factorizable after jitter escalation "
                    f"(condition estimate {cond:.3e})"
                )
            log.debug("factorization retry with jitter %.3e", jitter)


def fit_alpha(
    inputs: Sequence,
    aux: Sequence[AuxiliarySample],
    kernel: KernelSpec,
    lam: float,
    scheme: PartScheme,
    gram: GramMatrix | None = None,
) -> AlphaModel:
    """Fit the weight model on an auxiliary sample set.

    Parameters
    ----------
    inputs : sequence
        Training inputs referenced by ``aux[j].chi_ref``.
    aux : sequence of AuxiliarySample
        Non-empty auxiliary dataset.
    kernel : KernelSpec
        Pair kernel used for the Gram and all queries.
    lam : float
        Regularization, strictly positive; the system matrix is
        ``K + len(aux) * lam * I``.
    gram : GramMatrix, optional
        Precomputed Gram over the anchors, to share across several fits.
    """
    if lam <= 0:
        raise ValueError("lambda must be strictly positive")
    aux = tuple(aux)
    if not aux:
        raise ValueError("auxiliary set must be non-empty")
    inputs = tuple(inputs)
    anchors = [(inputs[s.chi_ref], s.p) for s in aux]
    if gram is None:
        gram = gram_matrix(kernel, anchors, scheme)
    elif gram.entries.shape[0] != len(aux):
        raise ValueError("precomputed Gram size does not match the auxiliary set")
    m = len(aux)
    factor, jitter = _factor_system(np.asarray(gram.entries, dtype=float), m * lam)
    if jitter:
        log.info("fit used diagonal jitter %.3e on a system of size %d", jitter, m)
    return AlphaModel(
        inputs=inputs, aux=aux, kernel=kernel, lam=float(lam), scheme=scheme,
        factor=factor, jitter=jitter,
    )


def alpha_at(model: AlphaModel, x, p: int) -> np.ndarray:
    """Weight vector ``alpha(x, p)`` of length ``model.m`` for one query."""
    v = model.prepared_anchors.cross([(x, int(p))])[:, 0]
    return model.apply_inverse(v)


def alpha_at_parts(model: AlphaModel, x, parts: Sequence[int]) -> np.ndarray:
    """Stacked weights for one input and several parts, shape (m, len(parts))."""
    queries = [(x, int(p)) for p in parts]
    V = model.prepared_anchors.cross(queries)
    return model.apply_inverse(V)
