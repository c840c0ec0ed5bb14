"""Per-part loss functions and their weighted aggregate over a part scheme.

The aggregate loss of a prediction ``z`` against a label ``y`` is the
part-weighted sum ``sum_p pi(p) * L_p(z_p, y_p | x_p)``. Every built-in part
loss accepts the input part ``x_p`` so input-dependent losses can be added
later, but none of the three implemented ones uses it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .parts import PartScheme, ShapeMismatchError, extract_part, part_weights


@dataclass(frozen=True)
class LossSpec:
    """A named part loss plus the capability flags decoders dispatch on."""

    kind: str
    has_closed_form: bool
    is_subdifferentiable: bool
    parts_enumerable: bool


ZERO_ONE_WINDOW = LossSpec(
    kind="zero_one_window",
    has_closed_form=False,
    is_subdifferentiable=False,
    parts_enumerable=True,
)

SQUARED_VECTOR = LossSpec(
    kind="squared_vector",
    has_closed_form=True,
    is_subdifferentiable=True,
    parts_enumerable=False,
)

ANGULAR_SIN_SQ = LossSpec(
    kind="angular_sin_sq",
    has_closed_form=True,
    is_subdifferentiable=True,
    parts_enumerable=False,
)

BY_NAME = {spec.kind: spec for spec in (ZERO_ONE_WINDOW, SQUARED_VECTOR, ANGULAR_SIN_SQ)}


def _as_float_pair(z_p, y_p):
    z = np.asarray(z_p, dtype=float)
    y = np.asarray(y_p, dtype=float)
    if z.shape != y.shape:
        raise ShapeMismatchError(f"parts of shapes {z.shape} and {y.shape}")
    return z, y


def part_loss(spec: LossSpec, z_p, y_p, x_p=None) -> float:
    """Loss of predicted part ``z_p`` against label part ``y_p``.

    * ``zero_one_window``: 0 if the parts are identical, else 1.
    * ``squared_vector``: squared Euclidean distance.
    * ``angular_sin_sq``: mean over entries of sin^2(z - y); zero iff the
      angles agree modulo pi.
    """
    if spec.kind == "zero_one_window":
        if isinstance(z_p, str) or isinstance(y_p, str):
            if len(z_p) != len(y_p):
                raise ShapeMismatchError(f"parts of lengths {len(z_p)} and {len(y_p)}")
            return 0.0 if z_p == y_p else 1.0
        z, y = _as_float_pair(z_p, y_p)
        return 0.0 if np.array_equal(z, y) else 1.0
    if spec.kind == "squared_vector":
        z, y = _as_float_pair(z_p, y_p)
        d = (z - y).ravel()
        return float(np.dot(d, d))
    if spec.kind == "angular_sin_sq":
        z, y = _as_float_pair(z_p, y_p)
        return float(np.mean(np.sin(z - y) ** 2))
    raise ValueError(f"unknown loss kind {spec.kind!r}")


def structured_loss(spec: LossSpec, z, y, x, scheme: PartScheme, pi) -> float:
    """Part-weighted aggregate loss ``sum_p pi(p) * L_p(z_p, y_p | x_p)``.

    ``pi`` is a part distribution or a raw nonnegative weight vector; raw
    weights need not sum to one, which is how cover-multiplicity constants
    are folded in.
    """
    w = part_weights(pi, scheme.num_parts)
    total = 0.0
    for p in range(scheme.num_parts):
        if w[p] == 0.0:
            continue
        x_p = None if x is None else extract_part(x, scheme, p)
        total += w[p] * part_loss(spec, extract_part(z, scheme, p), extract_part(y, scheme, p), x_p)
    return total
