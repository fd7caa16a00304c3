"""Numerical toolkit for σ_k-curvature problems on R^n and S^n."""

__version__ = "0.1.0"
