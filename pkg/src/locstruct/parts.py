"""Part schemes: decomposition of structured objects into indexed parts.

A part scheme fixes a finite index set {0, ..., num_parts - 1} together with
a selection operator ``x -> x_p``, a distance between part indices, and the
sampling distribution used to draw parts. Inputs and outputs of a prediction
problem share the same scheme, so the same object describes both sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np


class ShapeMismatchError(ValueError):
    """Raised when an object's dimensions do not match its part scheme."""


class PartIndexError(IndexError):
    """Raised for part identifiers outside 0..num_parts-1."""


# ---------------------------------------------------------------------------
# Schemes
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SequenceWindows:
    """Sliding windows of length ``window_len`` over sequences of length ``seq_len``.

    Parts are the ``seq_len - window_len + 1`` contiguous windows, indexed by
    their start position. Works on any sliceable sequence (str, list, 1-d array).
    """

    seq_len: int
    window_len: int

    def __post_init__(self):
        if not (1 <= self.window_len <= self.seq_len):
            raise ValueError(
                f"window_len must be in [1, seq_len], got {self.window_len} for seq_len {self.seq_len}"
            )

    @property
    def num_parts(self) -> int:
        return self.seq_len - self.window_len + 1


@dataclass(frozen=True)
class VectorBlocks:
    """Contiguous equal-size blocks of a flat vector.

    A vector of dimension ``block_dim * num_blocks`` decomposes into
    ``num_blocks`` parts of dimension ``block_dim`` each.
    """

    block_dim: int
    num_blocks: int

    def __post_init__(self):
        if self.block_dim < 1 or self.num_blocks < 1:
            raise ValueError("block_dim and num_blocks must be positive")

    @property
    def num_parts(self) -> int:
        return self.num_blocks

    @property
    def total_dim(self) -> int:
        return self.block_dim * self.num_blocks


@dataclass(frozen=True)
class GridPatches:
    """Patches of a ``height x width`` grid, equispaced by ``stride``.

    Patch positions are linearized row-major, so part ``p`` sits at grid row
    ``p // n_cols`` and column ``p % n_cols`` of the position lattice. With
    ``circular=True`` patch coordinates wrap modulo the grid dimensions and the
    stride must divide both height and width; otherwise only fully contained
    patches are indexed. Arrays may carry leading channel axes; the trailing
    two axes must be ``(height, width)``.
    """

    width: int
    height: int
    patch_w: int
    patch_h: int
    stride: int
    circular: bool = False

    def __post_init__(self):
        if self.patch_w < 1 or self.patch_h < 1 or self.stride < 1:
            raise ValueError("patch dims and stride must be positive")
        if self.patch_w > self.width or self.patch_h > self.height:
            raise ValueError("patch cannot exceed grid dimensions")
        if self.circular and (self.width % self.stride or self.height % self.stride):
            raise ValueError("circular grids require the stride to divide width and height")
        if not self.circular and (
            self.width < self.patch_w or self.height < self.patch_h
        ):
            raise ValueError("grid too small for a single patch")

    @property
    def n_rows(self) -> int:
        if self.circular:
            return self.height // self.stride
        return (self.height - self.patch_h) // self.stride + 1

    @property
    def n_cols(self) -> int:
        if self.circular:
            return self.width // self.stride
        return (self.width - self.patch_w) // self.stride + 1

    @property
    def num_parts(self) -> int:
        return self.n_rows * self.n_cols

    def top_left(self, p: int) -> tuple[int, int]:
        pr, pc = divmod(p, self.n_cols)
        return pr * self.stride, pc * self.stride

    def center(self, p: int) -> tuple[float, float]:
        r0, c0 = self.top_left(p)
        return r0 + (self.patch_h - 1) / 2.0, c0 + (self.patch_w - 1) / 2.0

    def patch_rows_cols(self, p: int) -> tuple[np.ndarray, np.ndarray]:
        """Row and column index arrays of patch ``p`` (wrapped if circular)."""
        r0, c0 = self.top_left(p)
        rows = r0 + np.arange(self.patch_h)
        cols = c0 + np.arange(self.patch_w)
        if self.circular:
            rows %= self.height
            cols %= self.width
        return rows, cols


PartScheme = Union[SequenceWindows, VectorBlocks, GridPatches]


def check_part(scheme: PartScheme, p: int) -> None:
    if not (0 <= int(p) < scheme.num_parts):
        raise PartIndexError(f"part {p} out of range for scheme with {scheme.num_parts} parts")


# ---------------------------------------------------------------------------
# Selection and distance
# ---------------------------------------------------------------------------

def extract_part(x, scheme: PartScheme, p: int):
    """Return the sub-object ``x_p`` addressed by part index ``p``.

    Deterministic and read-only. Grid patches on circular schemes wrap
    out-of-range coordinates modulo the grid dimensions.
    """
    check_part(scheme, p)
    if isinstance(scheme, SequenceWindows):
        if len(x) != scheme.seq_len:
            raise ShapeMismatchError(f"sequence of length {len(x)} does not match seq_len {scheme.seq_len}")
        return x[p : p + scheme.window_len]
    if isinstance(scheme, VectorBlocks):
        x = np.asarray(x)
        if x.shape != (scheme.total_dim,):
            raise ShapeMismatchError(f"vector of shape {x.shape} does not match total dim {scheme.total_dim}")
        return x[p * scheme.block_dim : (p + 1) * scheme.block_dim]
    if isinstance(scheme, GridPatches):
        x = np.asarray(x)
        if x.ndim < 2 or x.shape[-2:] != (scheme.height, scheme.width):
            raise ShapeMismatchError(
                f"grid of shape {x.shape} does not match (height, width)=({scheme.height}, {scheme.width})"
            )
        rows, cols = scheme.patch_rows_cols(p)
        return x[..., rows[:, None], cols[None, :]]
    raise TypeError(f"unknown scheme {scheme!r}")


def part_distance(scheme: PartScheme, p: int, q: int) -> float:
    """Distance between two part indices.

    Line schemes (windows, blocks) use ``|p - q|``. Grid schemes use the
    Euclidean distance between patch centers, with per-axis wrap-around on
    circular grids. Symmetric, and zero iff ``p == q``.
    """
    check_part(scheme, p)
    check_part(scheme, q)
    if isinstance(scheme, (SequenceWindows, VectorBlocks)):
        return float(abs(int(p) - int(q)))
    if isinstance(scheme, GridPatches):
        r1, c1 = scheme.center(p)
        r2, c2 = scheme.center(q)
        dr = abs(r1 - r2)
        dc = abs(c1 - c2)
        if scheme.circular:
            dr = min(dr, scheme.height - dr)
            dc = min(dc, scheme.width - dc)
        return math.hypot(dr, dc)
    raise TypeError(f"unknown scheme {scheme!r}")


def cover_counts(scheme: PartScheme) -> np.ndarray:
    """How many parts cover each coordinate of an object under this scheme."""
    if isinstance(scheme, SequenceWindows):
        counts = np.zeros(scheme.seq_len, dtype=int)
        for p in range(scheme.num_parts):
            counts[p : p + scheme.window_len] += 1
        return counts
    if isinstance(scheme, VectorBlocks):
        return np.ones(scheme.total_dim, dtype=int)
    if isinstance(scheme, GridPatches):
        counts = np.zeros((scheme.height, scheme.width), dtype=int)
        for p in range(scheme.num_parts):
            rows, cols = scheme.patch_rows_cols(p)
            counts[rows[:, None], cols[None, :]] += 1
        return counts
    raise TypeError(f"unknown scheme {scheme!r}")


# ---------------------------------------------------------------------------
# Part distributions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Uniform:
    """Uniform distribution over the parts of a scheme."""

    num_parts: int

    def __post_init__(self):
        if self.num_parts < 1:
            raise ValueError("num_parts must be positive")

    def probabilities(self) -> np.ndarray:
        return np.full(self.num_parts, 1.0 / self.num_parts)


@dataclass(frozen=True)
class Weighted:
    """Explicit probability vector over parts."""

    probs: tuple

    def __post_init__(self):
        p = np.asarray(self.probs, dtype=float)
        if p.ndim != 1 or p.size == 0:
            raise ValueError("probs must be a non-empty vector")
        if np.any(p < 0):
            raise ValueError("probabilities must be nonnegative")
        if abs(p.sum() - 1.0) > 1e-12:
            raise ValueError(f"probabilities must sum to 1, got {p.sum()!r}")
        object.__setattr__(self, "probs", tuple(float(v) for v in p))

    @property
    def num_parts(self) -> int:
        return len(self.probs)

    def probabilities(self) -> np.ndarray:
        return np.asarray(self.probs)


PartDistribution = Union[Uniform, Weighted]


def uniform_for(scheme: PartScheme) -> Uniform:
    return Uniform(scheme.num_parts)


def part_weights(pi, num_parts: int) -> np.ndarray:
    """Weight vector of a part distribution, or a raw (possibly unnormalized)
    nonnegative weight array of the right length."""
    if isinstance(pi, (Uniform, Weighted)):
        if pi.num_parts != num_parts:
            raise ShapeMismatchError(
                f"distribution over {pi.num_parts} parts used with a {num_parts}-part scheme"
            )
        return pi.probabilities()
    w = np.asarray(pi, dtype=float)
    if w.shape != (num_parts,):
        raise ShapeMismatchError(f"weight vector of shape {w.shape}, expected ({num_parts},)")
    return w


def sample_part(dist: PartDistribution, rng: np.random.Generator) -> int:
    """Draw a part index ``p`` with probability ``dist(p)``.

    Reproducible given the generator state; the caller owns the stream.
    """
    probs = dist.probabilities()
    return int(rng.choice(len(probs), p=probs))
