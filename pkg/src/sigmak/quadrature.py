"""Radial-angular product rules for integrals over balls and shells in R^n."""

from __future__ import annotations

import numpy as np
from numpy.polynomial.legendre import leggauss

from .errors import DomainError
from .sphere import sphere_rule


def panel_breaks(r1: float, r2: float, inner: float = 1.0) -> np.ndarray:
    """Breakpoints on [r1, r2], uniform up to ``inner`` then doubling."""
    if not 0 <= r1 < r2:
        raise DomainError("need 0 <= r1 < r2")
    pts = [r1]
    step = inner / 4.0
    while pts[-1] < r2:
        nxt = pts[-1] + step if pts[-1] < inner else 2.0 * pts[-1]
        pts.append(min(nxt, r2))
    return np.asarray(pts)


def radial_rule(r1: float, r2: float, per_panel: int = 16, inner: float = 1.0):
    """Composite Gauss–Legendre nodes and weights on [r1, r2]."""
    x, w = leggauss(per_panel)
    breaks = panel_breaks(r1, r2, inner)
    a, b = breaks[:-1, None], breaks[1:, None]
    r = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    wr = 0.5 * (b - a) * w[None, :]
    return r.ravel(), wr.ravel()


def shell_rule(n: int, r1: float, r2: float, center=None, degree: int = 24,
               per_panel: int = 16, inner: float = 1.0):
    """Points ``(M, n)`` and weights ``(M,)`` for ∫_{r1<|y-c|<r2} f dy."""
    r, wr = radial_rule(r1, r2, per_panel, inner)
    om, wo = sphere_rule(n - 1, degree)
    pts = r[:, None, None] * om[None, :, :]
    w = (wr * r ** (n - 1))[:, None] * wo[None, :]
    pts = pts.reshape(-1, n)
    if center is not None:
        pts = pts + np.asarray(center, float)
    return pts, w.ravel()


def ball_rule(n: int, R: float, center=None, **kw):
    return shell_rule(n, 0.0, R, center, **kw)
