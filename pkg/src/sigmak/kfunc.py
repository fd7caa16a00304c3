"""Prescribed functions K on S^n.

Two representations are supported:

* :class:`SphereFunction` - a polynomial in the ambient coordinates
  ``x1 .. x{n+1}`` restricted to the sphere, e.g. ``"2 + x5"`` or
  ``"3/2 + 0.1*(2*x5**2 - 1)"``. Derivatives are symbolic.
* :class:`AxisymmetricProfile` - samples K(θ) of an axisymmetric function
  (θ = colatitude from e_{n+1}), read from CSV and interpolated by a clamped
  cubic spline.

Both expose ``theta_values``/``theta_derivative``/``theta_second`` when
axisymmetric, which is what the axisymmetric solver consumes.
"""

from __future__ import annotations

import csv
import json
import os
import re

import numpy as np
import sympy as sp
from scipy.interpolate import CubicSpline

from .errors import DomainError

_VAR = re.compile(r"x(\d+)")


def _symbols(m):
    return sp.symbols(" ".join(f"x{i}" for i in range(1, m + 1)), real=True)


def infer_dimension(expr: str) -> int:
    idx = [int(i) for i in _VAR.findall(expr)]
    if not idx:
        raise DomainError("cannot infer n from an expression without variables; pass n")
    return max(idx) - 1


class SphereFunction:
    """Polynomial K(x) in x1..x{n+1}, evaluated on points of shape (..., n+1)."""

    def __init__(self, expr, n: int | None = None):
        text = str(expr)
        if n is None:
            n = infer_dimension(text)
        if n < 2:
            raise DomainError("dimension must be at least 2", n=n)
        self.n = int(n)
        self.syms = _symbols(self.n + 1)
        names = {str(s): s for s in self.syms}
        used = {int(i) for i in _VAR.findall(text)}
        if used and max(used) > self.n + 1:
            raise DomainError("variable index exceeds n+1", n=self.n)
        try:
            self.expr = sp.sympify(text, locals=names)
        except (sp.SympifyError, SyntaxError, TypeError) as exc:
            raise DomainError(f"cannot parse K expression: {text}") from exc
        extra = self.expr.free_symbols - set(self.syms)
        if extra:
            raise DomainError("unknown symbols in K expression", symbols=sorted(map(str, extra)))
        if self.expr.free_symbols and not self.expr.is_polynomial(*self.syms):
            raise DomainError("K must be a polynomial in x1..x{n+1}")
        poly = sp.Poly(self.expr, *self.syms) if self.expr.free_symbols else None
        self.degree = int(poly.total_degree()) if poly is not None else 0
        self.text = text
        grad = [sp.diff(self.expr, s) for s in self.syms]
        hess = [[sp.diff(g, s) for s in self.syms] for g in grad]
        self._f = sp.lambdify([self.syms], self.expr, "numpy")
        self._g = [sp.lambdify([self.syms], g, "numpy") for g in grad]
        self._h = [[sp.lambdify([self.syms], h, "numpy") for h in row] for row in hess]
        self.axis_only = self.expr.free_symbols <= {self.syms[-1]}
        c = self.syms[-1]
        self._p = [sp.lambdify(c, sp.diff(self.expr, c, j), "numpy") for j in range(3)] if self.axis_only else None

    def __repr__(self):
        return f"SphereFunction({self.text!r}, n={self.n})"

    def _args(self, x):
        x = np.asarray(x, float)
        if x.shape[-1] != self.n + 1:
            raise DomainError("points must have n+1 coordinates")
        return [x[..., i] for i in range(self.n + 1)], x.shape[:-1]

    def __call__(self, x):
        args, shape = self._args(x)
        return np.broadcast_to(np.asarray(self._f(args), float), shape).copy()

    value = __call__

    def gradient(self, x):
        args, shape = self._args(x)
        return np.stack([np.broadcast_to(np.asarray(g(args), float), shape) for g in self._g], axis=-1)

    def hessian(self, x):
        args, shape = self._args(x)
        rows = [np.stack([np.broadcast_to(np.asarray(h(args), float), shape) for h in row], axis=-1) for row in self._h]
        return np.stack(rows, axis=-2)

    def intrinsic_gradient(self, x):
        x = np.asarray(x, float)
        g = self.gradient(x)
        return g - np.sum(g * x, axis=-1, keepdims=True) * x

    def laplacian(self, x):
        """Δ_{g0}K = tr D²K - x·D²K·x - n x·∇K on the unit sphere."""
        x = np.asarray(x, float)
        g, H = self.gradient(x), self.hessian(x)
        return (
            np.trace(H, axis1=-2, axis2=-1)
            - np.einsum("...i,...ij,...j->...", x, H, x)
            - self.n * np.sum(x * g, axis=-1)
        )

    def intrinsic_hessian(self, x, frame):
        """Hessian in the orthonormal tangent frame (columns of ``frame``)."""
        g, H = self.gradient(x), self.hessian(x)
        return frame.T @ H @ frame - float(x @ g) * np.eye(frame.shape[1])

    # axisymmetric view: K = f(cos θ)
    def _require_axis(self):
        if not self.axis_only:
            raise DomainError("K is not axisymmetric about e_{n+1}")

    def theta_values(self, theta):
        self._require_axis()
        c = np.cos(theta)
        return np.broadcast_to(np.asarray(self._p[0](c), float), np.shape(theta)).copy()

    def theta_derivative(self, theta):
        self._require_axis()
        c = np.cos(theta)
        return -np.sin(theta) * np.asarray(self._p[1](c), float)

    def theta_second(self, theta):
        self._require_axis()
        c = np.cos(theta)
        return np.sin(theta) ** 2 * np.asarray(self._p[2](c), float) - c * np.asarray(self._p[1](c), float)

    def affine(self, scale: float, shift: float) -> "SphereFunction":
        return SphereFunction(f"({scale})*({self.text}) + ({shift})", self.n)

    def reflected(self) -> "SphereFunction":
        """K composed with x_{n+1} ↦ -x_{n+1}."""
        c = self.syms[-1]
        return SphereFunction(str(self.expr.subs(c, -c)), self.n)


class AxisymmetricProfile:
    """Axisymmetric K given by samples K(θ_i) on [0, π]."""

    def __init__(self, theta, values, n: int):
        theta = np.asarray(theta, float)
        values = np.asarray(values, float)
        if theta.ndim != 1 or theta.size < 4 or theta.shape != values.shape:
            raise DomainError("need matching 1-D samples (at least 4)")
        if abs(theta[0]) > 1e-12 or abs(theta[-1] - np.pi) > 1e-9 or np.any(np.diff(theta) <= 0):
            raise DomainError("theta samples must increase from 0 to pi")
        self.n = int(n)
        self.degree = None
        self.axis_only = True
        self._s = CubicSpline(theta, values, bc_type="clamped")
        self.text = f"profile[{theta.size} samples]"

    @classmethod
    def from_csv(cls, path, n: int) -> "AxisymmetricProfile":
        with open(path, newline="") as fh:
            rows = [r for r in csv.reader(fh) if r and not r[0].lstrip().startswith("#")]
        if rows and not _is_number(rows[0][0]):
            rows = rows[1:]
        try:
            data = np.array([[float(r[0]), float(r[1])] for r in rows])
        except (ValueError, IndexError) as exc:
            raise DomainError(f"malformed profile CSV: {path}") from exc
        return cls(data[:, 0], data[:, 1], n)

    def theta_values(self, theta):
        return self._s(theta)

    def theta_derivative(self, theta):
        return self._s(theta, 1)

    def theta_second(self, theta):
        return self._s(theta, 2)

    def __call__(self, x):
        x = np.asarray(x, float)
        th = np.arctan2(np.linalg.norm(x[..., :-1], axis=-1), x[..., -1])
        return self._s(th)

    def reflected(self) -> "AxisymmetricProfile":
        th = np.linspace(0, np.pi, 1025)
        return AxisymmetricProfile(th, self._s(np.pi - th), self.n)


def _is_number(s):
    try:
        float(s)
        return True
    except ValueError:
        return False


def parse_K(spec: str, n: int | None = None):
    """Expression string, ``.json`` file ({"expr", "n"}) or ``.csv`` θ-profile."""
    if isinstance(spec, (SphereFunction, AxisymmetricProfile)):
        return spec
    if os.path.isfile(spec):
        if spec.endswith(".csv"):
            if n is None:
                raise DomainError("n is required for CSV profiles")
            return AxisymmetricProfile.from_csv(spec, n)
        with open(spec) as fh:
            text = fh.read()
        if spec.endswith(".json"):
            obj = json.loads(text)
            return SphereFunction(obj["expr"], obj.get("n", n))
        return SphereFunction(text.strip(), n)
    return SphereFunction(spec, n)
