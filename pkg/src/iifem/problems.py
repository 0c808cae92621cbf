"""Problem definitions for the interface solver.

A :class:`ProblemSpec` bundles everything a study run needs: the domain
rectangle, the two diffusion coefficients, the level set separating them,
the source, the Dirichlet boundary data, and (when known) the exact
solution fields used for error measurement.  All callables take coordinate
arrays ``(x, y)`` and broadcast.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import circle_levelset


@dataclass
class ProblemSpec:
    """An elliptic interface problem with optional exact solution."""

    domain: tuple
    beta_minus: float
    beta_plus: float
    levelset: callable
    source: callable
    boundary: callable
    exact_p: callable | None = None
    exact_grad_p: callable | None = None
    exact_u: callable | None = None

    def beta(self, x, y):
        """Coefficient field selected by the level-set sign."""
        return np.where(
            np.asarray(self.levelset(x, y)) < 0, self.beta_minus, self.beta_plus
        )


def circle_r3_problem(beta_minus, beta_plus, radius=0.5, domain=(-1.0, 1.0, -1.0, 1.0)):
    """The cubic radial benchmark with a circular interface.

    Exact pressure ``r^3 / beta`` inside the circle and ``r^3 / beta +
    (1/beta_minus - 1/beta_plus) * radius^3`` outside, continuous across the
    interface with matched normal flux ``3 r^2`` there.  The flux field is
    ``u = -beta grad p = -(3 r x, 3 r y)``, the same expression on both
    sides, and the source is ``f = -div(beta grad p) = -9 r``.
    """
    beta_minus = float(beta_minus)
    beta_plus = float(beta_plus)
    radius = float(radius)
    if beta_minus <= 0 or beta_plus <= 0 or radius <= 0:
        raise ValueError("coefficients and radius must be positive")
    shift = (1.0 / beta_minus - 1.0 / beta_plus) * radius**3
    levelset = circle_levelset(radius)

    def exact_p(x, y):
        r = np.hypot(x, y)
        return np.where(r < radius, r**3 / beta_minus, r**3 / beta_plus + shift)

    def exact_grad_p(x, y):
        r = np.hypot(x, y)
        inv_beta = np.where(r < radius, 1.0 / beta_minus, 1.0 / beta_plus)
        factor = 3.0 * r * inv_beta
        return np.stack(np.broadcast_arrays(factor * x, factor * y), axis=-1)

    def exact_u(x, y):
        r = np.hypot(x, y)
        return np.stack(np.broadcast_arrays(-3.0 * r * x, -3.0 * r * y), axis=-1)

    def source(x, y):
        return -9.0 * np.hypot(x, y)

    return ProblemSpec(
        domain=tuple(float(v) for v in domain),
        beta_minus=beta_minus,
        beta_plus=beta_plus,
        levelset=levelset,
        source=source,
        boundary=exact_p,
        exact_p=exact_p,
        exact_grad_p=exact_grad_p,
        exact_u=exact_u,
    )
