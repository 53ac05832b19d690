"""Shared solution fixtures for the test suite."""
import numpy as np

from kvbf.mms import ExactSolution


def linear_flow(a: float = 0.7, b: float = -0.4, c: float = 0.3) -> ExactSolution:
    """u = (1 + t) (a + x, b - y + c x), p = (1 + t) (x + y - 1), omega = c (1 + t).

    Divergence free, linear in space and time, and contained in both element
    families, so backward Euler reproduces it exactly.
    """

    def u(x, y, t):
        return (1 + t) * (a + x), (1 + t) * (b - y + c * x)

    def grad_u(x, y, t):
        one = np.ones(np.broadcast(x, y).shape) * (1 + t)
        return (one, 0 * one), (c * one, -one)

    def dt_u(x, y, t):
        return a + x, b - y + c * x

    def vzero(x, y, t):
        z = np.zeros(np.broadcast(x, y).shape)
        return z, z

    def p(x, y, t):
        return (1 + t) * (x + y - 1)

    def grad_p(x, y, t):
        one = np.ones(np.broadcast(x, y).shape) * (1 + t)
        return one, one

    def omega(x, y, t):
        return np.ones(np.broadcast(x, y).shape) * c * (1 + t)

    return ExactSolution(u, grad_u, dt_u, vzero, vzero, p, grad_p, omega, vzero, name="linear")
