"""Uniform Cartesian grids and 4th-order central differences.

Differentiating an array of node values along an axis drops two nodes at
each end of that axis. The helpers below keep every returned array aligned
on the common interior block, so an array of shape ``(m1, ..., mn)`` yields
gradients of shape ``(m1-4, ..., mn-4, n)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StencilError

MARGIN = 2


def _slab(ndim_space, axis, lo, hi, length):
    idx = [slice(None)] * ndim_space
    idx[axis] = slice(lo, length - hi)
    return tuple(idx)


def trim(a, axes, width=MARGIN, ndim_space=None):
    """Drop ``width`` nodes from both ends of each listed spatial axis."""
    nd = a.ndim if ndim_space is None else ndim_space
    idx = [slice(None)] * nd
    for ax in axes:
        idx[ax] = slice(width, a.shape[ax] - width)
    return a[tuple(idx)]


def d1(a, axis, h, ndim_space=None):
    """First derivative along ``axis``; the axis shrinks by 4."""
    nd = a.ndim if ndim_space is None else ndim_space
    m = a.shape[axis]
    if m < 5:
        raise StencilError("need at least 5 nodes along each differentiated axis")
    s = lambda lo, hi: a[_slab(nd, axis, lo, hi, m)]
    return (s(0, 4) - 8.0 * s(1, 3) + 8.0 * s(3, 1) - s(4, 0)) / (12.0 * h)


def d2(a, axis, h, ndim_space=None):
    """Second derivative along ``axis``; the axis shrinks by 4."""
    nd = a.ndim if ndim_space is None else ndim_space
    m = a.shape[axis]
    if m < 5:
        raise StencilError("need at least 5 nodes along each differentiated axis")
    s = lambda lo, hi: a[_slab(nd, axis, lo, hi, m)]
    return (-s(0, 4) + 16.0 * s(1, 3) - 30.0 * s(2, 2) + 16.0 * s(3, 1) - s(4, 0)) / (12.0 * h * h)


def gradient(a, h, n=None):
    """Gradient over the first ``n`` axes; returns shape ``interior + (n,) + rest``."""
    n = a.ndim if n is None else n
    comps = []
    for i in range(n):
        g = d1(a, i, h[i], n)
        comps.append(trim(g, [j for j in range(n) if j != i], ndim_space=n))
    return np.stack(comps, axis=n)


def hessian(a, h, n=None):
    """Hessian over the first ``n`` axes; returns shape ``interior + (n, n)``."""
    n = a.ndim if n is None else n
    rows = []
    for i in range(n):
        di = d1(a, i, h[i], n)
        row = []
        for j in range(n):
            if i == j:
                hij = trim(d2(a, i, h[i], n), [m for m in range(n) if m != i], ndim_space=n)
            else:
                hij = trim(d1(di, j, h[j], n), [m for m in range(n) if m not in (i, j)], ndim_space=n)
            row.append(hij)
        rows.append(np.stack(row, axis=n))
    H = np.stack(rows, axis=n)
    return 0.5 * (H + np.swapaxes(H, n, n + 1))


def divergence(T, h, n):
    """∂_a T[..., a, b] over the first ``n`` axes (T has trailing (n, n) or (n,))."""
    out = 0.0
    for a in range(n):
        comp = T[(slice(None),) * n + (a,)]
        out = out + trim(d1(comp, a, h[a], n), [m for m in range(n) if m != a], ndim_space=n)
    return out


def trapezoid_weights(shape, h):
    w = np.ones(shape)
    for ax, m in enumerate(shape):
        line = np.full(m, h[ax])
        line[0] *= 0.5
        line[-1] *= 0.5
        w = w * line.reshape([-1 if a == ax else 1 for a in range(len(shape))])
    return w


@dataclass(frozen=True)
class EuclideanField:
    """Node values on an axis-aligned box ``origin + h * index``."""

    values: np.ndarray
    h: tuple
    origin: tuple

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = vals.ndim
        h = tuple(float(x) for x in np.broadcast_to(np.asarray(self.h, float), (n,)))
        origin = tuple(float(x) for x in np.broadcast_to(np.asarray(self.origin, float), (n,)))
        if min(h) <= 0:
            raise DomainError("grid spacing must be positive")
        if min(vals.shape) < 5:
            raise StencilError("grid needs at least 5 nodes per axis", shape=vals.shape)
        if not np.all(np.isfinite(vals)):
            raise DomainError("field has non-finite values")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "origin", origin)

    @property
    def n(self) -> int:
        return self.values.ndim

    @property
    def shape(self):
        return self.values.shape

    def axes(self):
        return [o + hh * np.arange(m) for o, hh, m in zip(self.origin, self.h, self.shape)]

    def coords(self) -> np.ndarray:
        return np.stack(np.meshgrid(*self.axes(), indexing="ij"), axis=-1)

    def interior_coords(self, width=MARGIN) -> np.ndarray:
        return trim(self.coords(), range(self.n), width, ndim_space=self.n)

    def node(self, index) -> np.ndarray:
        return np.asarray(self.origin) + np.asarray(self.h) * np.asarray(index)

    def block(self, index, width=MARGIN) -> "EuclideanField":
        """Sub-grid of ``2*width+1`` nodes per axis centred at ``index``."""
        index = tuple(int(i) for i in index)
        if len(index) != self.n:
            raise DomainError("index has wrong length")
        for i, m in zip(index, self.shape):
            if i < width or i > m - 1 - width:
                raise StencilError("point is too close to the grid boundary", index=index)
        sl = tuple(slice(i - width, i + width + 1) for i in index)
        origin = self.node([i - width for i in index])
        return EuclideanField(self.values[sl], self.h, tuple(origin))

    def map(self, f) -> "EuclideanField":
        return EuclideanField(f(self.values), self.h, self.origin)

    @classmethod
    def from_function(cls, f, origin, h, shape) -> "EuclideanField":
        """Sample ``f`` (taking points of shape ``(..., n)``) on a box."""
        n = len(shape)
        h = np.broadcast_to(np.asarray(h, float), (n,))
        origin = np.broadcast_to(np.asarray(origin, float), (n,))
        axes = [o + hh * np.arange(m) for o, hh, m in zip(origin, h, shape)]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1)
        return cls(np.asarray(f(pts), dtype=float), tuple(h), tuple(origin))

    @classmethod
    def centered(cls, f, center, h, half_nodes) -> "EuclideanField":
        """Box of ``2*half_nodes+1`` nodes per axis centred at ``center``."""
        center = np.asarray(center, float)
        n = center.size
        h = np.broadcast_to(np.asarray(h, float), (n,))
        origin = center - half_nodes * h
        return cls.from_function(f, origin, h, (2 * half_nodes + 1,) * n)

    def integrate(self, values=None):
        """Trapezoid integral over the box with a Richardson error estimate."""
        vals = self.values if values is None else values
        full = float(np.sum(trapezoid_weights(vals.shape, self.h) * vals))
        if all((m - 1) % 2 == 0 for m in vals.shape):
            sub = vals[tuple(slice(None, None, 2) for _ in vals.shape)]
            coarse = float(np.sum(trapezoid_weights(sub.shape, [2 * x for x in self.h]) * sub))
            err = abs(full - coarse) / 3.0
        else:
            err = float("nan")
        return full, err
