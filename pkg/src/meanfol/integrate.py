"""Adaptive embedded Runge-Kutta stepping (Dormand-Prince 5(4)).

A small, dependency-free stepper with the pieces the tracers need and
nothing else: PI step-size control against absolute/relative tolerances,
cubic Hermite interpolation inside an accepted step for event
localization, and bisection refinement of scalar event crossings.
"""

from __future__ import annotations

import math
from typing import Callable

import numpy as np

__all__ = ["DormandPrince", "bisect_event", "StepFailed"]

# Butcher tableau, Dormand & Prince 1980
_C = (0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0)
_A = (
    (),
    (1.0 / 5.0,),
    (3.0 / 40.0, 9.0 / 40.0),
    (44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0),
    (19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0),
    (9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0,
     -5103.0 / 18656.0),
    (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
     11.0 / 84.0),
)
_B5 = (35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0,
       11.0 / 84.0, 0.0)
_B4 = (5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0,
       -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0)


class StepFailed(RuntimeError):
    """Step size underflow: the field is too stiff or discontinuous here."""


class DormandPrince:
    """One-step adaptive integrator with Hermite dense output.

    Usage: construct, then call step() repeatedly; each accepted step
    updates (t, y, f) and records the previous state for interpolation.
    """

    def __init__(self, f: Callable, t0: float, y0, rtol: float = 1e-8,
                 atol: float = 1e-10, max_step: float = math.inf,
                 first_step: float | None = None, direction: float = 1.0):
        self.f = f
        self.t = float(t0)
        self.y = np.asarray(y0, dtype=float)
        self.rtol = rtol
        self.atol = atol
        self.max_step = max_step
        self.direction = 1.0 if direction >= 0 else -1.0
        self.fy = np.asarray(f(self.t, self.y), dtype=float)
        self.h = first_step or self._initial_step()
        self.t_prev = self.t
        self.y_prev = self.y.copy()
        self.f_prev = self.fy.copy()
        self.nsteps = 0
        self.nrejected = 0

    def _initial_step(self) -> float:
        scale = self.atol + np.abs(self.y) * self.rtol
        d0 = np.sqrt(np.mean((self.y / scale) ** 2)) if self.y.size else 0.0
        d1 = np.sqrt(np.mean((self.fy / scale) ** 2))
        h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
        return min(h0, self.max_step)

    def step(self, t_bound: float | None = None) -> bool:
        """Advance one accepted step; returns False at t_bound."""
        t, y, f0 = self.t, self.y, self.fy
        d = self.direction
        h = min(self.h, self.max_step)
        if t_bound is not None:
            remaining = d * (t_bound - t)
            if remaining <= 1e-15 * max(1.0, abs(t)):
                return False
            h = min(h, remaining)
        k = [f0]
        for _ in range(60):
            hs = d * h
            for i in range(1, 7):
                yi = y + hs * sum(a * ki for a, ki in zip(_A[i], k))
                k.append(np.asarray(self.f(t + _C[i] * hs, yi), dtype=float))
            y5 = y + hs * sum(b * ki for b, ki in zip(_B5, k))
            y4 = y + hs * sum(b * ki for b, ki in zip(_B4, k))
            scale = self.atol + np.maximum(np.abs(y), np.abs(y5)) * self.rtol
            err = np.sqrt(np.mean(((y5 - y4) / scale) ** 2))
            if err <= 1.0:
                factor = 0.9 * (1.0 / err) ** 0.2 if err > 0 else 5.0
                self.h = h * min(5.0, max(0.2, factor))
                self.t_prev, self.y_prev, self.f_prev = t, y, f0
                self.t = t + hs
                self.y = y5
                self.fy = k[6]  # FSAL: last stage is f(t+h, y5)
                self.nsteps += 1
                return True
            self.nrejected += 1
            h *= min(0.9 * (1.0 / err) ** 0.2, 0.5)
            if h < 1e-14 * max(1.0, abs(t)):
                raise StepFailed(f"step size underflow at t={t}")
            k = [f0]
        raise StepFailed(f"no acceptable step at t={t}")

    def interpolate(self, t: float) -> np.ndarray:
        """Cubic Hermite interpolation on the last accepted step."""
        t0, t1 = self.t_prev, self.t
        if t1 == t0:
            return self.y.copy()
        s = (t - t0) / (t1 - t0)
        h = t1 - t0
        h00 = (1 + 2 * s) * (1 - s) ** 2
        h10 = s * (1 - s) ** 2
        h01 = s * s * (3 - 2 * s)
        h11 = s * s * (s - 1)
        return (h00 * self.y_prev + h10 * h * self.f_prev
                + h01 * self.y + h11 * h * self.fy)


def bisect_event(g: Callable[[float], float], lo: float, hi: float,
                 tol: float = 1e-13, maxit: int = 200) -> float:
    """Root of a scalar function with a sign change on [lo, hi]."""
    glo = g(lo)
    ghi = g(hi)
    if glo == 0.0:
        return lo
    if ghi == 0.0:
        return hi
    if glo * ghi > 0.0:
        raise ValueError("no sign change on the bracket")
    for _ in range(maxit):
        mid = 0.5 * (lo + hi)
        gm = g(mid)
        if gm == 0.0 or (hi - lo) < tol * max(1.0, abs(mid)):
            return mid
        if glo * gm < 0.0:
            hi, ghi = mid, gm
        else:
            lo, glo = mid, gm
    return 0.5 * (lo + hi)
