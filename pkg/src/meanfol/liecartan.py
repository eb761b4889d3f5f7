"""Lie-Cartan lift of the BDE: fiber equilibria and separatrix germs.

The quadratic equation L dv^2 + M du dv + N du^2 = 0 lifts to the slope
variable p = dv/du as the surface {J = 0}, J(u, v, p) = L p^2 + M p + N,
carrying the vector field

    X = (J_p,  p J_p,  -(J_u + p J_v));

its projection integrates both principal mean foliations at once.  The
complementary chart q = du/dv uses J*(u, v, q) = N q^2 + M q + L and the
mirrored field X* = (q J*_q, J*_q, -(q J*_u + J*_v)).

Over a singularity (L = M = N = 0) the whole projective fiber is invariant
and the restricted dynamics ds/dt = phi(s) is a cubic in the slope whose
roots are the equilibria.  At each equilibrium the 3x3 linearization has a
structural zero eigenvalue (X is tangent to every level set of J); the two
meaningful eigenvalues are the fiber one, phi'(s0), and the transverse one,
whose eigenvector seeds separatrix integration.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .expr import EvalError, NonImmersionError, SurfaceDef, jet_at
from .geometry import BDE, bde_at
from .integrate import DormandPrince, StepFailed
from .singularities import Singularity

__all__ = [
    "ProjPoint",
    "Equilibrium",
    "SeparatrixGerm",
    "field_at",
    "fiber_equilibria",
    "separatrix_germs",
    "fiber_gradient_min",
]


@dataclass(frozen=True)
class ProjPoint:
    u: float
    v: float
    slope: float
    chart: str = "p"     # 'p': slope = dv/du, 'q': slope = du/dv

    def direction(self) -> tuple[float, float]:
        if self.chart == "p":
            d = (1.0, self.slope)
        else:
            d = (self.slope, 1.0)
        n = math.hypot(*d)
        return (d[0] / n, d[1] / n)


@dataclass
class Equilibrium:
    point: ProjPoint
    jacobian: np.ndarray
    eigenvalues: np.ndarray            # all three, incl. the structural zero
    lam_fiber: float
    lam_transverse: float
    transverse_vector: np.ndarray      # (du, dv, dslope), unit
    stability: str                     # 'saddle' | 'node' | 'non-hyperbolic'
    field_norm: float                  # |X| at the equilibrium


@dataclass
class SeparatrixGerm:
    singularity: tuple[float, float]
    equilibrium_index: int
    branch: int                        # +1 / -1 along the transverse vector
    exit_point: tuple[float, float]
    exit_direction: tuple[float, float]
    time_sign: int                     # +1 unstable branch, -1 stable
    ok: bool = True
    note: str = ""


def _bde3(surface: SurfaceDef, u: float, v: float,
          tol: Tolerances) -> BDE:
    return bde_at(jet_at(surface, (u, v), order=3), tol)


def field_at(surface: SurfaceDef, point: ProjPoint,
             tol: Tolerances = DEFAULT_TOL) -> np.ndarray:
    """Lie-Cartan velocity (du, dv, dslope) at a projective point."""
    bde = _bde3(surface, point.u, point.v, tol)
    s = point.slope
    if point.chart == "p":
        Jp = 2.0 * bde.L * s + bde.M
        Ju = bde.Lu * s * s + bde.Mu * s + bde.Nu
        Jv = bde.Lv * s * s + bde.Mv * s + bde.Nv
        return np.array([Jp, s * Jp, -(Ju + s * Jv)])
    Jq = 2.0 * bde.N * s + bde.M
    Ju = bde.Nu * s * s + bde.Mu * s + bde.Lu
    Jv = bde.Nv * s * s + bde.Mv * s + bde.Lv
    return np.array([s * Jq, Jq, -(s * Ju + Jv)])


def _fiber_cubics(bde: BDE):
    """Coefficients of the fiber restriction phi in both slope charts."""
    phi_p = (-bde.Lv, -(bde.Lu + bde.Mv), -(bde.Mu + bde.Nv), -bde.Nu)
    phi_q = (-bde.Nu, -(bde.Mu + bde.Nv), -(bde.Lu + bde.Mv), -bde.Lv)
    return phi_p, phi_q


def _poly_roots(coeffs, scale: float) -> list[float]:
    arr = np.array(coeffs, dtype=float)
    lead = np.max(np.abs(arr))
    if lead <= 1e-14 * max(scale, 1e-300):
        return []
    trimmed = np.trim_zeros(np.where(np.abs(arr) > 1e-12 * lead, arr, 0.0), "f")
    if trimmed.size <= 1:
        return []
    out = []
    for r in np.roots(trimmed):
        if abs(r.imag) <= 1e-8 * max(1.0, abs(r.real)):
            out.append(float(r.real))
    return out


def _numeric_jacobian(surface: SurfaceDef, pt: ProjPoint, tol: Tolerances,
                      h: float = 1e-6) -> np.ndarray:
    A = np.empty((3, 3))
    x0 = np.array([pt.u, pt.v, pt.slope])
    for j in range(3):
        dx = np.zeros(3)
        dx[j] = h
        fp = field_at(surface, ProjPoint(*(x0 + dx), chart=pt.chart), tol)
        fm = field_at(surface, ProjPoint(*(x0 - dx), chart=pt.chart), tol)
        A[:, j] = (fp - fm) / (2.0 * h)
    return A


def fiber_equilibria(surface: SurfaceDef, sing: Singularity,
                     tol: Tolerances = DEFAULT_TOL) -> list[Equilibrium]:
    """Equilibria of the Lie-Cartan field on the fiber over a singularity.

    Roots are collected in both slope charts (each kept where |slope| <= 1)
    and mirror roots are deduplicated projectively.  Linearization is by
    central differences of field_at; the structural zero eigenvalue is
    removed and the remaining pair classified.  A non-hyperbolic pair
    demotes the singularity to non-Darbouxian.
    """
    u0, v0 = sing.location
    bde = _bde3(surface, u0, v0, tol)
    scale = max(abs(bde.Lu), abs(bde.Lv), abs(bde.Mu), abs(bde.Mv),
                abs(bde.Nu), abs(bde.Nv))
    phi_p, phi_q = _fiber_cubics(bde)

    pts: list[ProjPoint] = []
    for root in _poly_roots(phi_p, scale):
        if abs(root) <= 1.0 + 1e-9:
            pts.append(ProjPoint(u0, v0, root, "p"))
    for root in _poly_roots(phi_q, scale):
        if abs(root) < 1.0 - 1e-9:
            pts.append(ProjPoint(u0, v0, root, "q"))

    # projective dedup (directions modulo sign)
    uniq: list[ProjPoint] = []
    for pt in pts:
        d = pt.direction()
        dup = False
        for other in uniq:
            e = other.direction()
            if min(math.hypot(d[0] - e[0], d[1] - e[1]),
                   math.hypot(d[0] + e[0], d[1] + e[1])) < 1e-7:
                dup = True
                break
        if not dup:
            uniq.append(pt)

    eqs: list[Equilibrium] = []
    for pt in uniq:
        X = field_at(surface, pt, tol)
        A = _numeric_jacobian(surface, pt, tol)
        lam, vecs = np.linalg.eig(A)
        # drop the structural zero eigenvalue
        order = np.argsort(np.abs(lam))
        rest = order[1:]
        align = [abs(vecs[2, i]) / max(np.linalg.norm(vecs[:, i]), 1e-300)
                 for i in rest]
        fiber_i = rest[int(np.argmax(align))]
        trans_i = rest[0] if fiber_i == rest[1] else rest[1]
        lam_f = float(lam[fiber_i].real)
        lam_t = float(lam[trans_i].real)
        wt = vecs[:, trans_i].real
        wt = wt / max(np.linalg.norm(wt), 1e-300)

        eig_floor = tol.tol_eig * max(scale, 1e-300)
        if (abs(lam[fiber_i].imag) > eig_floor
                or abs(lam[trans_i].imag) > eig_floor
                or abs(lam_f) <= eig_floor or abs(lam_t) <= eig_floor):
            stability = "non-hyperbolic"
        elif lam_f * lam_t < 0.0:
            stability = "saddle"
        else:
            stability = "node"
        eqs.append(Equilibrium(pt, A, lam, lam_f, lam_t, wt, stability,
                               float(np.linalg.norm(X))))

    eqs.sort(key=lambda e: (e.point.chart, e.point.slope))
    sing.equilibria = eqs
    if any(e.stability == "non-hyperbolic" for e in eqs):
        sing.dtype = "non-Darbouxian"
        sing.diagnostic = "non-hyperbolic fiber equilibrium"
    return eqs


def fiber_gradient_min(surface: SurfaceDef, sing: Singularity,
                       tol: Tolerances = DEFAULT_TOL, samples: int = 64) -> float:
    """min |grad J| over the projective fiber, relative to coefficient scale.

    Darbouxian condition (a) requires this to stay away from zero.
    """
    bde = _bde3(surface, *sing.location, tol)
    scale = max(abs(bde.Lu), abs(bde.Lv), abs(bde.Mu), abs(bde.Mv),
                abs(bde.Nu), abs(bde.Nv), 1e-300)
    best = math.inf
    for s in np.linspace(-1.0, 1.0, samples):
        Ju = bde.Lu * s * s + bde.Mu * s + bde.Nu
        Jv = bde.Lv * s * s + bde.Mv * s + bde.Nv
        best = min(best, math.hypot(Ju, Jv) / (1.0 + s * s))
        Ju_q = bde.Nu * s * s + bde.Mu * s + bde.Lu
        Jv_q = bde.Nv * s * s + bde.Mv * s + bde.Lv
        best = min(best, math.hypot(Ju_q, Jv_q) / (1.0 + s * s))
    return best / scale


def _chart_switch(y: np.ndarray, chart: str) -> tuple[np.ndarray, str]:
    return np.array([y[0], y[1], 1.0 / y[2]]), ("q" if chart == "p" else "p")


def separatrix_germs(surface: SurfaceDef, sing: Singularity,
                     tol: Tolerances = DEFAULT_TOL) -> list[SeparatrixGerm]:
    """Integrate both transverse branches of every saddle out of the blow-up.

    Each germ leaves the ball of radius r_exit around the singularity and
    records the surface exit point and outgoing direction; the foliation
    tracer continues from there.
    """
    if not sing.equilibria:
        fiber_equilibria(surface, sing, tol)
    u0, v0 = sing.location
    r_exit = tol.r_exit
    germs: list[SeparatrixGerm] = []

    for idx, eq in enumerate(sing.equilibria):
        if eq.stability != "saddle":
            continue
        for branch in (+1, -1):
            germ = _trace_one_germ(surface, sing, eq, idx, branch, r_exit, tol)
            germs.append(germ)
    return germs


def _trace_one_germ(surface, sing, eq: Equilibrium, idx: int, branch: int,
                    r_exit: float, tol: Tolerances) -> SeparatrixGerm:
    u0, v0 = sing.location
    time_sign = 1 if eq.lam_transverse > 0 else -1
    chart = eq.point.chart
    x0 = np.array([eq.point.u, eq.point.v, eq.point.slope])
    y = x0 + branch * tol.sep_offset * eq.transverse_vector

    def rhs(_t, state):
        pt = ProjPoint(state[0], state[1], state[2], chart)
        return time_sign * field_at(surface, pt, tol)

    germ = SeparatrixGerm(singularity=(u0, v0), equilibrium_index=idx,
                          branch=branch, exit_point=(u0, v0),
                          exit_direction=(0.0, 0.0), time_sign=time_sign)
    try:
        stepper = DormandPrince(rhs, 0.0, y, rtol=tol.ode_rtol,
                                atol=tol.ode_atol * 1e-2)
        for _ in range(4000):
            if abs(stepper.y[2]) > 1.2:
                ynew, chart = _chart_switch(stepper.y, chart)
                stepper = DormandPrince(rhs, stepper.t, ynew,
                                        rtol=tol.ode_rtol, atol=tol.ode_atol * 1e-2)
            stepper.step()
            du, dv = stepper.y[0] - u0, stepper.y[1] - v0
            if math.hypot(du, dv) >= r_exit:
                break
        else:
            germ.ok = False
            germ.note = "did not leave the blow-up neighborhood"
            return germ
    except (StepFailed, EvalError, NonImmersionError) as exc:
        germ.ok = False
        germ.note = f"integration failed: {exc}"
        return germ

    exit_pt = (float(stepper.y[0]), float(stepper.y[1]))
    vel = rhs(0.0, stepper.y)[:2]
    nv = float(np.linalg.norm(vel))
    if nv > 1e-13:
        direction = (vel[0] / nv, vel[1] / nv)
    else:
        d = math.hypot(exit_pt[0] - u0, exit_pt[1] - v0)
        direction = ((exit_pt[0] - u0) / d, (exit_pt[1] - v0) / d)
    # orient outward
    if direction[0] * (exit_pt[0] - u0) + direction[1] * (exit_pt[1] - v0) < 0:
        direction = (-direction[0], -direction[1])
    germ.exit_point = exit_pt
    germ.exit_direction = direction
    return germ
