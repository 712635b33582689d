"""Functional intrinsic volumes of convex functions, computed by several
independent routes, with Abel transforms and Hessian measures."""

__version__ = "0.1.0"
