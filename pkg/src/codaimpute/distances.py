"""Distances on the simplex: Aitchison distance and (twice) the Jensen-Shannon divergence.

All kernels use natural logarithms. ``jsd`` accepts zero parts; the
Aitchison distance does not.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, InvalidResolution, ZeroInLogRatio

#: upper bound of ``jsd``, attained by compositions with disjoint supports
JSD_MAX = 2.0 * np.log(2.0)


class DistanceKind(str, enum.Enum):
    AITCHISON = "aitchison"
    JSD = "jsd"

    @classmethod
    def parse(cls, value):
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise ValueError(f"unknown distance kind {value!r}; expected 'aitchison' or 'jsd'") from None


def _pair(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape[-1] != y.shape[-1]:
        raise DimensionMismatch(f"compositions of length {x.shape[-1]} and {y.shape[-1]}")
    return x, y


def clr(x):
    """Centred log-ratio transform, row-wise for 2-D input."""
    x = np.asarray(x, dtype=float)
    if np.any(x <= 0):
        raise ZeroInLogRatio("clr needs strictly positive parts; use jsd for data with zeros")
    logs = np.log(x)
    return logs - logs.mean(axis=-1, keepdims=True)


def aitchison_distance(x, y):
    """Aitchison distance, the Euclidean distance between clr images.

    Raises
    ------
    ZeroInLogRatio
        If either argument has a zero part.
    DimensionMismatch
        On length mismatch.
    """
    x, y = _pair(x, y)
    # |a - b| is exactly symmetric, so the distance is too
    diff = np.abs(clr(x) - clr(y))
    return float(np.sqrt(np.sum(diff * diff, axis=-1)))


def _jsd_terms(x, y):
    """Per-part contributions, exactly symmetric in (x, y).

    Written with ``log1p`` of the relative difference so nearly equal
    compositions do not lose precision. Parts with ``x_j = 0`` contribute
    nothing from the x side (the 0 log 0 = 0 convention), handled by masking
    instead of relying on ``0 * -inf``.
    """
    s = x + y
    with np.errstate(divide="ignore", invalid="ignore"):
        r = np.where(s > 0, (x - y) / s, 0.0)
        # log1p is accurate near r = 0 but r rounds to -1 when one part is
        # tiny next to the other; there 2x/s is the accurate form
        near = np.abs(r) < 0.5
        lx = np.where(near, np.log1p(r), np.log(2 * x / s))
        ly = np.where(near, np.log1p(-r), np.log(2 * y / s))
        tx = np.where(x > 0, x * lx, 0.0)
        ty = np.where(y > 0, y * ly, 0.0)
    return tx + ty


def jsd(x, y):
    """Jensen-Shannon divergence multiplied by two, in ``[0, 2 log 2]``.

    >>> round(jsd([1/3, 1/2, 1/6], [0.4, 0.4, 0.2]), 3)
    0.01
    """
    x, y = _pair(x, y)
    if x.ndim != 1 or y.ndim != 1:
        raise DimensionMismatch("jsd takes two single compositions; see distances_to_set")
    if not np.any((x > 0) & (y > 0)):
        return JSD_MAX  # disjoint supports: exact value, free of summation round-off
    value = float(np.sum(_jsd_terms(x, y)))
    return min(max(value, 0.0), JSD_MAX)


def kl_divergence(x, m):
    """Kullback-Leibler divergence ``sum x log(x/m)`` with 0 log 0 = 0."""
    x, m = _pair(x, m)
    total = 0.0
    for xj, mj in zip(x.tolist(), m.tolist()):
        if xj > 0:
            total += xj * np.log(xj / mj)
    return total


def jsd_via_kld(x, y):
    """The same divergence written as ``KL(x, M) + KL(y, M)`` with ``M`` the midpoint.

    Kept as an independent cross-check of :func:`jsd`.
    """
    x, y = _pair(x, y)
    m = (x + y) / 2.0
    return kl_divergence(x, m) + kl_divergence(y, m)


def jsd_to_set(target, donors):
    target, donors = _pair(target, donors)
    donors = np.atleast_2d(donors)
    if donors.shape[0] == 0:
        return np.empty(0)
    values = _jsd_terms(target[None, :], donors).sum(axis=1)
    disjoint = ~np.any((target[None, :] > 0) & (donors > 0), axis=1)
    return np.where(disjoint, JSD_MAX, np.clip(values, 0.0, JSD_MAX))


def aitchison_to_set(target, donors):
    target, donors = _pair(target, donors)
    donors = np.atleast_2d(donors)
    if donors.shape[0] == 0:
        return np.empty(0)
    t = clr(target)
    bad = np.flatnonzero(np.any(donors <= 0, axis=1))
    if len(bad):
        raise ZeroInLogRatio(f"donor {int(bad[0])} has a zero part")
    diff = np.abs(clr(donors) - t)
    return np.sqrt(np.sum(diff * diff, axis=1))


def distances_to_set(target, donors, kind=DistanceKind.JSD):
    """Distance from ``target`` to each row of ``donors``, in donor order."""
    kind = DistanceKind.parse(kind)
    if kind is DistanceKind.JSD:
        return jsd_to_set(target, donors)
    return aitchison_to_set(target, donors)


@dataclass(frozen=True)
class ContourGrid:
    """Distances from ``center`` over a barycentric lattice on the 2-simplex.

    ``points`` has one row per retained lattice point (columns a, b, c);
    ``distances`` is aligned with it. ``n_lattice`` counts lattice points
    before any were dropped for having a zero part.
    """

    center: np.ndarray
    kind: DistanceKind
    resolution: int
    points: np.ndarray
    distances: np.ndarray
    n_lattice: int
    center_distance: float


def simplex_lattice(resolution):
    """All points ``(i, j, r - i - j) / r`` with non-negative integer coordinates."""
    r = int(resolution)
    rows = [(i, j, r - i - j) for i in range(r + 1) for j in range(r + 1 - i)]
    return np.asarray(rows, dtype=float) / r


def contour_grid(center, resolution, kind=DistanceKind.JSD):
    kind = DistanceKind.parse(kind)
    if int(resolution) != resolution or resolution < 2:
        raise InvalidResolution(f"resolution must be an integer >= 2, got {resolution!r}")
    center = np.asarray(center, dtype=float)
    if center.shape != (3,):
        raise DimensionMismatch("contour grids are drawn on the 2-simplex (three parts)")
    lattice = simplex_lattice(resolution)
    points = lattice
    if kind is DistanceKind.AITCHISON:
        points = lattice[np.all(lattice > 0, axis=1)]
    dist = distances_to_set(center, points, kind)
    centre_d = float(distances_to_set(center, center[None, :], kind)[0])
    return ContourGrid(center, kind, int(resolution), points, dist, len(lattice), centre_d)
