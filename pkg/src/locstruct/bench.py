"""Seeded benchmark studies on synthetic part-structured data.

Two task families:

* ``synthetic_ls``: vector-valued linear regression whose input blocks share
  a controllable correlation level. Inputs are N(0, M(gamma) (x) I) with
  ``M(gamma)[p, q] = exp(-gamma |p - q| / P)``, so gamma sweeps from
  identical blocks (rank-one covariance) to independent ones. Every block
  responds through the same weight vector, so a part-pooled local estimator
  can share data across blocks while a global one cannot.
* ``synthetic_angular``: smooth random orientation fields on a small grid,
  observed through a noisy two-channel encoding, predicted patch-wise with a
  Gaussian restriction kernel and the angular decoder.

Every cell of a sweep derives its generator from (master seed, cell
coordinates) through ``numpy.random.SeedSequence``, so results are a pure
function of the configuration and the seed.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace
from typing import Optional, Sequence

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .decoder import AngularDecoder, LeastSquaresDecoder
from .kernels import GaussianParts, LinearParts, Restriction, gram_matrix
from .losses import ANGULAR_SIN_SQ, structured_loss
from .parts import GridPatches, Uniform, VectorBlocks
from .training import enumerate_auxiliary, fit_alpha, generate_auxiliary

log = logging.getLogger(__name__)

DEFAULT_LAMBDA_GRID = tuple(float(v) for v in np.logspace(-6, 1, 8))

GLOBAL_LS = "global_ls"
INDEPENDENT_PARTS_LS = "independent_parts_ls"
LOCAL_LS = "local_ls"
LOCAL_DELTA = "local_delta"

# seed-splitting task codes (documented contract: streams come from
# SeedSequence(master_seed, spawn_key=(task_code, n, repeat)))
_TASK_LS = 1
_TASK_ANGULAR = 2
_TASK_ANGULAR_AUX = 3


class NumericalError(RuntimeError):
    """A guarded numerical step failed."""


# ---------------------------------------------------------------------------
# Configuration and results
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SyntheticConfig:
    """Configuration of the block-correlated regression study."""

    num_parts: int
    block_dim: int
    gamma: float
    n_train: int
    n_test: int
    noise_std: float = 0.5
    seed: int = 0
    lambda_grid: tuple = DEFAULT_LAMBDA_GRID
    estimators: tuple = (GLOBAL_LS, INDEPENDENT_PARTS_LS, LOCAL_LS)
    # Readout of the local estimator's per-part solve. "mean" uses the
    # unnormalized weighted sum (the ridge conditional mean), "normalized"
    # divides by the weight total.
    local_readout: str = "mean"

    def __post_init__(self):
        if self.n_train < 1 or self.n_test < 1:
            raise ValueError("n_train and n_test must be >= 1")
        if self.noise_std < 0:
            raise ValueError("noise_std must be >= 0")
        if self.gamma < 0:
            raise ValueError("gamma must be >= 0")
        if any(l <= 0 for l in self.lambda_grid):
            raise ValueError("lambda grid entries must be positive")
        if self.local_readout not in ("mean", "normalized"):
            raise ValueError(f"unknown local readout {self.local_readout!r}")


@dataclass(frozen=True)
class AngularConfig:
    """Configuration of the orientation-field study."""

    grid_size: int = 16
    patch: int = 4
    stride: int = 2
    n_train: int = 8
    n_test: int = 16
    m: int = 600
    bandwidth: float = 2.0
    input_noise: float = 0.2
    freq_cutoff: int = 2
    seed: int = 0
    lambda_grid: tuple = tuple(float(v) for v in np.logspace(-6, 1, 5))

    def scheme(self) -> GridPatches:
        return GridPatches(
            width=self.grid_size, height=self.grid_size,
            patch_w=self.patch, patch_h=self.patch,
            stride=self.stride, circular=True,
        )


BENCH_CSV_HEADER = "estimator,n,num_parts,gamma,repeat,lambda_chosen,test_error"
BENCH_CSV_VERSION = "bench-csv-v1"


@dataclass(frozen=True)
class BenchRow:
    estimator: str
    n: int
    num_parts: int
    gamma: float
    repeat: int
    lambda_chosen: float
    test_error: float


@dataclass(frozen=True)
class BenchResult:
    """Per-estimator, per-configuration error table."""

    rows: tuple

    def errors(self, estimator: str, n: Optional[int] = None) -> np.ndarray:
        vals = [r.test_error for r in self.rows
                if r.estimator == estimator and (n is None or r.n == n)]
        return np.asarray(vals)

    def median_error(self, estimator: str, n: Optional[int] = None) -> float:
        return float(np.median(self.errors(estimator, n)))

    def quartiles(self, estimator: str, n: Optional[int] = None) -> tuple[float, float, float]:
        e = self.errors(estimator, n)
        return tuple(float(v) for v in np.percentile(e, [25, 50, 75]))

    def to_csv_lines(self) -> list[str]:
        lines = [BENCH_CSV_HEADER]
        for r in self.rows:
            lines.append(
                f"{r.estimator},{r.n},{r.num_parts},{r.gamma!r},{r.repeat},"
                f"{r.lambda_chosen!r},{r.test_error!r}"
            )
        return lines


def merge_results(results: Sequence[BenchResult]) -> BenchResult:
    rows = []
    for r in results:
        rows.extend(r.rows)
    return BenchResult(rows=tuple(rows))


def _cell_rng(master_seed: int, task: int, n: int, repeat: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(master_seed, spawn_key=(task, n, repeat)))


# ---------------------------------------------------------------------------
# Synthetic block-correlated regression data
# ---------------------------------------------------------------------------

def block_correlation(num_parts: int, gamma: float) -> np.ndarray:
    """Correlation matrix M with M[p, q] = exp(-gamma |p - q| / num_parts)."""
    idx = np.arange(num_parts)
    return np.exp(-gamma * np.abs(idx[:, None] - idx[None, :]) / num_parts)


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """A factor F with F F^T = M; Cholesky when possible, eigen fallback for
    the rank-deficient fully-correlated limit."""
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(M)
        if w.min() < -1e-8 * max(w.max(), 1.0):
            raise NumericalError(f"correlation matrix not PSD (min eigenvalue {w.min():.3e})")
        return V * np.sqrt(np.clip(w, 0.0, None))


def gen_synthetic_dataset(cfg: SyntheticConfig, rng: np.random.Generator):
    """Draw one train/test split of the block-correlated regression task.

    Returns ``((X_train, Y_train), (X_test, Y_test), w)`` where ``w`` is the
    true weight vector, built by concatenating ``num_parts`` copies of a
    single block vector drawn uniformly from the unit ball. Block ``p`` of a
    response is the shared linear signal ``w_bar . x_p`` in every coordinate
    plus isotropic Gaussian noise, so corresponding input and output blocks
    are linked by one map shared across blocks.
    """
    P, k = cfg.num_parts, cfg.block_dim
    F = _psd_factor(block_correlation(P, cfg.gamma))

    direction = rng.standard_normal(k)
    direction /= np.linalg.norm(direction)
    w_bar = direction * rng.random() ** (1.0 / k)  # uniform in the unit ball
    w = np.tile(w_bar, P)

    def draw(n):
        G = rng.standard_normal((n, P, k))
        blocks = np.einsum("pq,nqk->npk", F, G)
        X = blocks.reshape(n, P * k)
        signal = np.repeat(blocks @ w_bar, k, axis=1)
        Y = signal + cfg.noise_std * rng.standard_normal((n, P * k))
        return X, Y

    train = draw(cfg.n_train)
    test = draw(cfg.n_test)
    return train, test, w


def noiseless_targets(X: np.ndarray, w: np.ndarray, num_parts: int, block_dim: int) -> np.ndarray:
    """Clean regression surface for inputs X under the true weights."""
    w_bar = w[:block_dim]
    blocks = X.reshape(X.shape[0], num_parts, block_dim)
    return np.repeat(blocks @ w_bar, block_dim, axis=1)


# ---------------------------------------------------------------------------
# Estimators for the regression study
# ---------------------------------------------------------------------------

class _LinearKRR:
    """Kernel ridge regression with the linear kernel, dual form."""

    def __init__(self, X: np.ndarray, Y: np.ndarray, lam: float):
        n = X.shape[0]
        K = X @ X.T
        self.X = X
        self.coef = cho_solve(cho_factor(K + n * lam * np.eye(n), lower=True), Y)

    def predict(self, Xt: np.ndarray) -> np.ndarray:
        return (Xt @ self.X.T) @ self.coef


def _mse(pred: np.ndarray, target: np.ndarray) -> float:
    return float(np.mean((pred - target) ** 2))


def _fit_global(Xtr, Ytr, lam):
    model = _LinearKRR(Xtr, Ytr, lam)
    return model.predict


def _fit_independent(Xtr, Ytr, lam, P, k):
    models = []
    for p in range(P):
        sl = slice(p * k, (p + 1) * k)
        models.append(_LinearKRR(Xtr[:, sl], Ytr[:, sl], lam))

    def predict(Xt):
        out = np.empty((Xt.shape[0], P * k))
        for p, model in enumerate(models):
            sl = slice(p * k, (p + 1) * k)
            out[:, sl] = model.predict(Xt[:, sl])
        return out

    return predict


class _LocalLS:
    """Part-pooled estimator: fit on the full part expansion of the training
    set with a linear restriction kernel, decode with the squared-loss
    closed form."""

    def __init__(self, Xtr, Ytr, lam, scheme: VectorBlocks, normalize: bool, gram=None, aux=None):
        train = list(zip(Xtr, Ytr))
        self.aux = enumerate_auxiliary(train, scheme) if aux is None else aux
        inputs = [x for x, _ in train]
        self.model = fit_alpha(inputs, self.aux, Restriction(LinearParts()), lam, scheme, gram=gram)
        pi = Uniform(scheme.num_parts)
        self.decoder = LeastSquaresDecoder(self.model, pi, normalize=normalize)

    def predict(self, Xt):
        return self.decoder.decode_batch(Xt)


def _holdout_split(n: int) -> tuple[slice, slice]:
    n_fit = max(1, int(round(0.8 * n)))
    if n_fit >= n:
        n_fit = n - 1
    return slice(0, n_fit), slice(n_fit, n)


def _select_lambda(fit_fn, Xtr, Ytr, grid) -> float:
    """Hold-out selection: fit on the first 80% of the training set, score
    mean squared error on the remaining 20%."""
    tr, ho = _holdout_split(Xtr.shape[0])
    best_lam, best = None, math.inf
    for lam in grid:
        pred = fit_fn(Xtr[tr], Ytr[tr], lam)(Xtr[ho])
        err = _mse(pred, Ytr[ho])
        if err < best:
            best, best_lam = err, lam
    return best_lam


def _run_ls_cell(cfg: SyntheticConfig, rng: np.random.Generator, repeat: int) -> list[BenchRow]:
    (Xtr, Ytr), (Xte, _), w = gen_synthetic_dataset(cfg, rng)
    target = noiseless_targets(Xte, w, cfg.num_parts, cfg.block_dim)
    scheme = VectorBlocks(block_dim=cfg.block_dim, num_blocks=cfg.num_parts)
    rows = []
    for name in cfg.estimators:
        try:
            if name == GLOBAL_LS:
                fit = lambda X, Y, lam: _fit_global(X, Y, lam)
                lam = _select_lambda(fit, Xtr, Ytr, cfg.lambda_grid)
                pred = fit(Xtr, Ytr, lam)(Xte)
            elif name == INDEPENDENT_PARTS_LS:
                fit = lambda X, Y, lam: _fit_independent(X, Y, lam, cfg.num_parts, cfg.block_dim)
                lam = _select_lambda(fit, Xtr, Ytr, cfg.lambda_grid)
                pred = fit(Xtr, Ytr, lam)(Xte)
            elif name == LOCAL_LS:
                normalize = cfg.local_readout == "normalized"
                lam = _select_local_lambda(Xtr, Ytr, cfg, scheme, normalize)
                est = _LocalLS(Xtr, Ytr, lam, scheme, normalize)
                pred = est.predict(Xte)
            else:
                raise ValueError(f"unknown estimator {name!r}")
            err = _mse(pred, target)
        except Exception:  # keep the sweep alive, mark the cell failed
            log.exception("estimator %s failed on repeat %d", name, repeat)
            lam, err = math.nan, math.nan
        rows.append(BenchRow(
            estimator=name, n=cfg.n_train, num_parts=cfg.num_parts,
            gamma=cfg.gamma, repeat=repeat, lambda_chosen=float(lam),
            test_error=err,
        ))
    return rows


def _select_local_lambda(Xtr, Ytr, cfg, scheme, normalize) -> float:
    tr, ho = _holdout_split(Xtr.shape[0])
    train = list(zip(Xtr[tr], Ytr[tr]))
    aux = enumerate_auxiliary(train, scheme)
    anchors = [(train[s.chi_ref][0], s.p) for s in aux]
    gram = gram_matrix(Restriction(LinearParts()), anchors, scheme)
    best_lam, best = None, math.inf
    for lam in cfg.lambda_grid:
        est = _LocalLS(Xtr[tr], Ytr[tr], lam, scheme, normalize, gram=gram, aux=aux)
        err = _mse(est.predict(Xtr[ho]), Ytr[ho])
        if err < best:
            best, best_lam = err, lam
    return best_lam


def run_estimator_comparison(cfg: SyntheticConfig, repeats: int,
                             master_seed: Optional[int] = None) -> BenchResult:
    """Compare the configured estimators over seeded dataset repeats.

    Each repeat draws a fresh train/test split, selects lambda per estimator
    by hold-out, and scores mean squared error against the noiseless
    regression surface on the test inputs.
    """
    if repeats < 1:
        raise ValueError("repeats must be >= 1")
    seed = cfg.seed if master_seed is None else master_seed
    rows = []
    for rep in range(repeats):
        rng = _cell_rng(seed, _TASK_LS, cfg.n_train, rep)
        rows.extend(_run_ls_cell(cfg, rng, rep))
    return BenchResult(rows=tuple(rows))


def run_learning_curve(task: str, n_grid: Sequence[int], cfg, repeats: int,
                       master_seed: Optional[int] = None) -> BenchResult:
    """Error of each estimator across an ascending grid of training sizes."""
    n_grid = list(n_grid)
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise ValueError("n grid must be ascending")
    if task == "synthetic_ls":
        results = []
        for n in n_grid:
            sub = replace(cfg, n_train=n)
            results.append(run_estimator_comparison(sub, repeats, master_seed))
        return merge_results(results)
    if task == "synthetic_angular":
        return _run_angular_curve(n_grid, cfg, repeats, master_seed)
    raise ValueError(f"unknown task {task!r}")


# ---------------------------------------------------------------------------
# Orientation-field task
# ---------------------------------------------------------------------------

def gen_orientation_fields(n: int, grid_size: int, freq_cutoff: int,
                           input_noise: float, rng: np.random.Generator):
    """Sample smooth orientation fields with their noisy input encodings.

    The target field is the argument of a band-limited complex field with
    independent Gaussian Fourier coefficients on the low-frequency modes,
    giving angles in [-pi, pi). The input is the two-channel pointwise
    encoding (cos 2 theta, sin 2 theta) plus Gaussian pixel noise, so each
    output patch is determined by the matching input patch.
    """
    G = grid_size
    freqs = np.fft.fftfreq(G, d=1.0 / G)
    mask = (np.abs(freqs)[:, None] <= freq_cutoff) & (np.abs(freqs)[None, :] <= freq_cutoff)
    X = np.empty((n, 2, G, G))
    Y = np.empty((n, G, G))
    for i in range(n):
        coeff = rng.standard_normal((G, G)) + 1j * rng.standard_normal((G, G))
        field = np.fft.ifft2(coeff * mask)
        theta = np.angle(field)
        theta = np.where(theta >= np.pi, -np.pi, theta)
        Y[i] = theta
        X[i, 0] = np.cos(2 * theta) + input_noise * rng.standard_normal((G, G))
        X[i, 1] = np.sin(2 * theta) + input_noise * rng.standard_normal((G, G))
    return X, Y


def _angular_loss(decoder: AngularDecoder, X, Y, scheme, pi) -> float:
    Z = decoder.decode_batch(X)
    losses = [structured_loss(ANGULAR_SIN_SQ, z, y, x, scheme, pi)
              for z, y, x in zip(Z, Y, X)]
    return float(np.mean(losses))


def _fit_local_delta(X, Y, lam, cfg: AngularConfig, rng) -> AngularDecoder:
    scheme = cfg.scheme()
    pi = Uniform(scheme.num_parts)
    train = list(zip(X, Y))
    m = min(cfg.m, len(train) * scheme.num_parts)
    aux = generate_auxiliary(train, m, scheme, pi, rng)
    model = fit_alpha([x for x, _ in train], aux,
                      Restriction(GaussianParts(cfg.bandwidth)), lam, scheme)
    return AngularDecoder(model, pi)


def _run_angular_curve(n_grid, cfg: AngularConfig, repeats, master_seed) -> BenchResult:
    seed = cfg.seed if master_seed is None else master_seed
    scheme = cfg.scheme()
    pi = Uniform(scheme.num_parts)
    rows = []
    for n in n_grid:
        for rep in range(repeats):
            rng = _cell_rng(seed, _TASK_ANGULAR, n, rep)
            Xtr, Ytr = gen_orientation_fields(n, cfg.grid_size, cfg.freq_cutoff,
                                              cfg.input_noise, rng)
            Xte, Yte = gen_orientation_fields(cfg.n_test, cfg.grid_size, cfg.freq_cutoff,
                                              cfg.input_noise, rng)
            try:
                lam = _select_angular_lambda(Xtr, Ytr, cfg, scheme, pi, seed, n, rep)
                aux_rng = _cell_rng(seed, _TASK_ANGULAR_AUX, n, rep)
                decoder = _fit_local_delta(Xtr, Ytr, lam, cfg, aux_rng)
                err = _angular_loss(decoder, Xte, Yte, scheme, pi)
            except Exception:
                log.exception("angular cell failed at n=%d repeat %d", n, rep)
                lam, err = math.nan, math.nan
            rows.append(BenchRow(
                estimator=LOCAL_DELTA, n=n, num_parts=scheme.num_parts,
                gamma=math.nan, repeat=rep, lambda_chosen=float(lam), test_error=err,
            ))
    return BenchResult(rows=tuple(rows))


def _select_angular_lambda(Xtr, Ytr, cfg, scheme, pi, seed, n, rep) -> float:
    if Xtr.shape[0] < 2:
        return cfg.lambda_grid[len(cfg.lambda_grid) // 2]
    tr, ho = _holdout_split(Xtr.shape[0])
    best_lam, best = None, math.inf
    for i, lam in enumerate(cfg.lambda_grid):
        aux_rng = _cell_rng(seed, _TASK_ANGULAR_AUX, n, rep)  # same aux draw per lam
        decoder = _fit_local_delta(Xtr[tr], Ytr[tr], lam, cfg, aux_rng)
        err = _angular_loss(decoder, Xtr[ho], Ytr[ho], scheme, pi)
        if err < best:
            best, best_lam = err, lam
    return best_lam
