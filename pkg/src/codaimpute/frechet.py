"""Power-transform Fréchet mean of compositions.

For ``alpha != 0`` every row is raised part-wise to ``alpha`` and re-closed,
the re-closed rows are averaged, and the average is raised to ``1/alpha``
and closed once more. ``alpha = 1`` gives the arithmetic mean and
``alpha -> 0`` the closed geometric mean.
"""

from __future__ import annotations

import warnings

import numpy as np

from .errors import AlphaZeroConflict, DegenerateInput, EmptyInput, GeometricUndefined
from .simplex import closure

# below this |alpha| the power form loses more precision (~1e-16/alpha) than
# the geometric-mean limit is off by (~alpha), so the limit is used instead
SMALL_ALPHA = 1e-8


def check_alpha(alpha, has_zeros=False):
    alpha = float(alpha)
    if not -1.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [-1, 1], got {alpha}")
    if has_zeros and alpha < 0:
        raise AlphaZeroConflict(f"alpha={alpha} < 0 is undefined for data with zero parts")
    return alpha


def _sorted_sum(a, axis):
    # summing in sorted order makes the result independent of input order
    return np.sort(a, axis=axis).sum(axis=axis)


def _close(v):
    total = _sorted_sum(v, axis=-1)
    if not total > 0:
        raise DegenerateInput("Fréchet mean has no positive part")
    return closure(v / total)


def geometric_mean(rows):
    """Closed geometric mean; parts that are zero in any row come out as zero."""
    rows = np.asarray(rows, dtype=float)
    with np.errstate(divide="ignore"):
        logs = np.log(rows)
    mean_log = _sorted_sum(logs, axis=0) / rows.shape[0]
    finite = np.isfinite(mean_log)
    if not finite.any():
        raise DegenerateInput("every part is zero in at least one row")
    out = np.zeros(rows.shape[1])
    out[finite] = np.exp(mean_log[finite] - mean_log[finite].max())
    return _close(out)


def zero_alpha_limit(rows):
    """Limit of the Fréchet mean as ``alpha -> 0+``.

    Without zeros this is the closed geometric mean. With zeros, to first
    order in alpha the averaged part ``j`` is ``C_j + alpha * b_j`` where
    ``C_j`` sums ``1/c_i`` over the rows ``i`` with ``x_ij > 0`` (``c_i`` the
    number of positive parts of row ``i``) and ``b_j`` sums the centred logs
    over the same rows with the same weights. Raising to ``1/alpha`` sends
    every part without the maximal ``C_j`` to zero and leaves
    ``exp(b_j / C_max)`` on the others.
    """
    rows = closure(np.asarray(rows, dtype=float))
    positive = rows > 0
    if positive.all():
        return geometric_mean(rows)
    n = rows.shape[0]
    c = positive.sum(axis=1)
    with np.errstate(divide="ignore"):
        logs = np.where(positive, np.log(np.where(positive, rows, 1.0)), 0.0)
    centred = np.where(positive, logs - (logs.sum(axis=1) / c)[:, None], 0.0)
    weight = np.where(positive, 1.0 / c[:, None], 0.0)
    C = _sorted_sum(weight, axis=0) / n
    b = _sorted_sum(weight * centred, axis=0) / n
    winners = C >= C.max() * (1 - 1e-12)
    expo = b[winners] / C.max()
    out = np.zeros(rows.shape[1])
    out[winners] = np.exp(expo - expo.max())
    return _close(out)


def frechet_mean(rows, alpha):
    """Fréchet mean of the rows of an ``n x D`` array.

    Parameters
    ----------
    rows : array_like of shape (n, D)
        Compositions; they are re-closed before averaging.
    alpha : float
        Power in ``[-1, 1]``; must be ``>= 0`` when any part is zero.

    Returns
    -------
    ndarray of shape (D,)

    Raises
    ------
    EmptyInput
        If ``rows`` has no rows.
    AlphaZeroConflict
        If ``alpha < 0`` and some part is zero.

    Warns
    -----
    GeometricUndefined
        For ``alpha == 0`` with zero parts; the limit from above is returned
        (see :func:`zero_alpha_limit`).
    """
    rows = np.atleast_2d(np.asarray(rows, dtype=float))
    if rows.shape[0] == 0 or rows.size == 0:
        raise EmptyInput("Fréchet mean of an empty set")
    has_zeros = bool(np.any(rows == 0))
    alpha = check_alpha(alpha, has_zeros)
    rows = closure(rows)

    if abs(alpha) < SMALL_ALPHA:
        if has_zeros and alpha == 0.0:
            warnings.warn("geometric mean of data with zeros; returning the alpha->0+ limit",
                          GeometricUndefined, stacklevel=2)
        return zero_alpha_limit(rows)

    powered = rows ** alpha
    powered = powered / _sorted_sum(powered, axis=1)[:, None]
    mean = _sorted_sum(powered, axis=0) / rows.shape[0]
    if alpha == 1.0:
        return _close(mean)
    # raise to 1/alpha in log space: for small alpha the direct power underflows
    with np.errstate(divide="ignore"):
        logs = np.log(mean)
    positive = mean > 0
    out = np.zeros_like(mean)
    scaled = logs[positive] / alpha
    out[positive] = np.exp(scaled - scaled.max())
    return _close(out)


def frechet_trajectory(rows, alpha_grid):
    """Fréchet means along ``alpha_grid`` as an ``len(grid) x D`` array."""
    grid = [float(a) for a in alpha_grid]
    if not grid:
        raise EmptyInput("empty alpha grid")
    out = []
    for i, a in enumerate(grid):
        try:
            out.append(frechet_mean(rows, a))
        except (AlphaZeroConflict, ValueError) as exc:
            raise type(exc)(f"alpha grid index {i} (alpha={a}): {exc}") from exc
    return np.vstack(out)
