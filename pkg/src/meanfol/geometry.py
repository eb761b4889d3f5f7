"""Pointwise geometry of an immersion R^2 -> R^4 from its jet.

Everything is derived from one order-n jet of the immersion: first and
second fundamental forms, an adapted orthonormal normal frame (N1, N2),
the mean curvature vector H = H1 N1 + H2 N2, the principal mean curvatures
k <= K of the Weingarten operator of the unit mean normal, and the three
coefficients of the quadratic differential equation of principal mean
curvature lines

    L dv^2 + M du dv + N du^2 = 0,
    L = F g_H - f_H G,  M = E g_H - e_H G,  N = E f_H - F e_H,

where e_H = <alpha_uu, H>, f_H = <alpha_uv, H>, g_H = <alpha_vv, H> are the
second-form coefficients relative to the mean normal scaled by |H| (so the
equation stays smooth across normal singularities).  The slope polynomial
is J(u, v, p) = L p^2 + M p + N with p = dv/du.

All intermediate quantities are jets, so partial derivatives of L, M, N,
H, ... come out of the same computation exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .jets import Jet, cross4, dot, vec_scale, vec_sub

__all__ = [
    "FrameError",
    "GeometryJets",
    "GeometryData",
    "BDE",
    "PrincipalDirections",
    "compute_geometry_jets",
    "first_form",
    "normal_frame",
    "mean_curvature",
    "bde_at",
    "principal_directions",
]


class FrameError(ValueError):
    """Both normal-frame seed candidates degenerate at this point."""


@dataclass
class GeometryJets:
    """Jet-valued geometric fields at one point (shared upstream data)."""

    alpha: list[Jet]
    au: list[Jet]
    av: list[Jet]
    auu: list[Jet]
    auv: list[Jet]
    avv: list[Jet]
    E: Jet
    F: Jet
    G: Jet
    N1: list[Jet]
    N2: list[Jet]
    e1: Jet
    f1: Jet
    g1: Jet
    e2: Jet
    f2: Jet
    g2: Jet
    H1: Jet
    H2: Jet
    H: list[Jet]
    Hnorm2: Jet
    eH: Jet
    fH: Jet
    gH: Jet
    L: Jet
    M: Jet
    N: Jet


@dataclass
class GeometryData:
    """Float snapshot of the geometry at one point."""

    point: tuple[float, float]
    E: float
    F: float
    G: float
    N1: np.ndarray
    N2: np.ndarray
    e1: float
    f1: float
    g1: float
    e2: float
    f2: float
    g2: float
    H1: float
    H2: float
    H: np.ndarray
    Hnorm: float
    k: float
    K: float
    kK_valid: bool


@dataclass
class BDE:
    """Quadratic differential equation coefficients and their linear parts."""

    L: float
    M: float
    N: float
    Lu: float
    Lv: float
    Mu: float
    Mv: float
    Nu: float
    Nv: float

    def J(self, p: float) -> float:
        return (self.L * p + self.M) * p + self.N

    @property
    def disc(self) -> float:
        return self.M * self.M - 4.0 * self.L * self.N

    @property
    def coeff_scale(self) -> float:
        return max(abs(self.L), abs(self.M), abs(self.N))


@dataclass
class PrincipalDirections:
    """Unit chart vectors of the two principal mean directions."""

    dir_min: tuple[float, float]
    dir_max: tuple[float, float]
    k: float
    K: float


def _tangent_projection_coeffs(gj_E: Jet, gj_F: Jet, gj_G: Jet,
                               pu: Jet, pv: Jet) -> tuple[Jet, Jet]:
    # solve [[E,F],[F,G]] (x,y) = (pu,pv) in jet arithmetic
    det = gj_E * gj_G - gj_F * gj_F
    x = (pu * gj_G - pv * gj_F) / det
    y = (pv * gj_E - pu * gj_F) / det
    return x, y


def compute_geometry_jets(jets: list[Jet], tol: Tolerances = DEFAULT_TOL) -> GeometryJets:
    """Build the full jet-valued geometry stack at a point.

    Requires order >= 2 jets of the immersion; the derived fields keep
    whatever derivative information the input order supports.
    """
    a = jets
    au = [c.partial(0) for c in a]
    av = [c.partial(1) for c in a]
    auu = [c.partial(0) for c in au]
    auv = [c.partial(1) for c in au]
    avv = [c.partial(1) for c in av]

    E = dot(au, au)
    F = dot(au, av)
    G = dot(av, av)

    # frame seed: reference normal candidate projected off the tangent plane
    order = E.order
    N1 = N2 = None
    for cand_idx in (2, 3):
        cand = [Jet.const(1.0 if i == cand_idx else 0.0, order) for i in range(4)]
        x, y = _tangent_projection_coeffs(E, F, G,
                                          dot(cand, au), dot(cand, av))
        B1 = vec_sub(cand, [xu * x + xv * y for xu, xv in zip(au, av)])
        n2 = dot(B1, B1)
        if n2.value > 1e-10:
            inv = 1.0 / n2.sqrt()
            N1 = [c * inv for c in B1]
            B2 = cross4(au, av, B1)
            m2 = dot(B2, B2)
            if m2.value <= 0.0:
                continue
            inv2 = 1.0 / m2.sqrt()
            N2 = [c * inv2 for c in B2]
            break
    if N1 is None or N2 is None:
        raise FrameError("tangent plane contains both frame seed candidates")

    e1, f1, g1 = dot(auu, N1), dot(auv, N1), dot(avv, N1)
    e2, f2, g2 = dot(auu, N2), dot(auv, N2), dot(avv, N2)

    inv_den = 1.0 / ((E * G - F * F) * 2.0)
    H1 = (G * e1 - 2.0 * (F * f1) + E * g1) * inv_den
    H2 = (G * e2 - 2.0 * (F * f2) + E * g2) * inv_den
    H = [H1 * n1 + H2 * n2 for n1, n2 in zip(N1, N2)]
    Hnorm2 = H1 * H1 + H2 * H2

    eH = dot(auu, H)
    fH = dot(auv, H)
    gH = dot(avv, H)

    L = F * gH - fH * G
    M = E * gH - eH * G
    N = E * fH - F * eH

    return GeometryJets(a, au, av, auu, auv, avv, E, F, G, N1, N2,
                        e1, f1, g1, e2, f2, g2, H1, H2, H, Hnorm2,
                        eH, fH, gH, L, M, N)


def first_form(jets: list[Jet]) -> tuple[Jet, Jet, Jet]:
    """E, F, G as jets (their partials come from the same algebra)."""
    au = [c.partial(0) for c in jets]
    av = [c.partial(1) for c in jets]
    return dot(au, au), dot(au, av), dot(av, av)


def normal_frame(jets: list[Jet], tol: Tolerances = DEFAULT_TOL) -> tuple[list[Jet], list[Jet]]:
    gj = compute_geometry_jets(jets, tol)
    return gj.N1, gj.N2


def mean_curvature(jets: list[Jet], tol: Tolerances = DEFAULT_TOL,
                   point: tuple[float, float] = (math.nan, math.nan),
                   gj: GeometryJets | None = None) -> GeometryData:
    """GeometryData snapshot; k, K only valid where |H| > tol_H."""
    if gj is None:
        gj = compute_geometry_jets(jets, tol)
    E, F, G = gj.E.value, gj.F.value, gj.G.value
    Hn = math.sqrt(max(gj.Hnorm2.value, 0.0))
    kK_valid = Hn > tol.tol_H
    k = K = math.nan
    if kK_valid:
        # Weingarten of the unit mean normal: eigenvalues of I^{-1} II_N,
        # II_N = II_H / |H|
        eN, fN, gN = gj.eH.value / Hn, gj.fH.value / Hn, gj.gH.value / Hn
        a = E * G - F * F
        b = E * gN + G * eN - 2.0 * F * fN
        c = eN * gN - fN * fN
        disc = max(b * b - 4.0 * a * c, 0.0)
        r = math.sqrt(disc)
        k = (b - r) / (2.0 * a)
        K = (b + r) / (2.0 * a)
    return GeometryData(
        point=point, E=E, F=F, G=G,
        N1=np.array([c.value for c in gj.N1]),
        N2=np.array([c.value for c in gj.N2]),
        e1=gj.e1.value, f1=gj.f1.value, g1=gj.g1.value,
        e2=gj.e2.value, f2=gj.f2.value, g2=gj.g2.value,
        H1=gj.H1.value, H2=gj.H2.value,
        H=np.array([c.value for c in gj.H]),
        Hnorm=Hn, k=k, K=K, kK_valid=kK_valid)


def bde_at(jets: list[Jet], tol: Tolerances = DEFAULT_TOL,
           gj: GeometryJets | None = None) -> BDE:
    if gj is None:
        gj = compute_geometry_jets(jets, tol)
    L, M, N = gj.L, gj.M, gj.N
    return BDE(L.value, M.value, N.value,
               L.coeff(1, 0), L.coeff(0, 1),
               M.coeff(1, 0), M.coeff(0, 1),
               N.coeff(1, 0), N.coeff(0, 1))


def _quadratic_roots(a: float, b: float, c: float) -> tuple[float, float]:
    """Real roots of a x^2 + b x + c with a stable formula (disc >= 0)."""
    disc = b * b - 4.0 * a * c
    r = math.sqrt(max(disc, 0.0))
    q = -0.5 * (b + math.copysign(r, b if b != 0.0 else 1.0))
    if q == 0.0:
        # b ~ 0 and c ~ 0: double root at 0
        return 0.0, 0.0
    x1 = q / a if a != 0.0 else math.inf
    x2 = c / q
    return x1, x2


def direction_pair(bde: BDE) -> tuple[tuple[float, float], tuple[float, float]]:
    """The two root directions of J as unit chart vectors.

    Chart choice: solve in p = dv/du when |L| >= |N| (leading coefficient
    larger there), else in q = du/dv, so root magnitudes stay bounded.
    """
    if abs(bde.L) >= abs(bde.N):
        p1, p2 = _quadratic_roots(bde.L, bde.M, bde.N)
        dirs = [(0.0, 1.0) if math.isinf(p) else (1.0, p) for p in (p1, p2)]
    else:
        q1, q2 = _quadratic_roots(bde.N, bde.M, bde.L)
        dirs = [(1.0, 0.0) if math.isinf(q) else (q, 1.0) for q in (q1, q2)]
    out = []
    for du, dv in dirs:
        n = math.hypot(du, dv)
        out.append((du / n, dv / n))
    return out[0], out[1]


def normal_curvature(gj: GeometryJets, direction: tuple[float, float]) -> float:
    """II_N(w,w)/I(w,w) with N = H/|H|, for labeling directions."""
    du, dv = direction
    Hn = math.sqrt(max(gj.Hnorm2.value, 0.0))
    num = (gj.eH.value * du * du + 2.0 * gj.fH.value * du * dv
           + gj.gH.value * dv * dv)
    den = (gj.E.value * du * du + 2.0 * gj.F.value * du * dv
           + gj.G.value * dv * dv)
    return num / (den * Hn)


def principal_directions(data: GeometryData, bde: BDE,
                         tol: Tolerances = DEFAULT_TOL,
                         gj: GeometryJets | None = None) -> PrincipalDirections:
    """Label the two BDE root directions minimal/maximal.

    Requires a nonsingular point: positive discriminant relative to the
    coefficient scale and |H| above tol_H.
    """
    scale = max(bde.coeff_scale, tol.tol_disc) ** 2
    if bde.disc <= tol.tol_disc * scale or not data.kK_valid:
        raise ValueError(f"no principal directions at singular point {data.point}")
    w1, w2 = direction_pair(bde)
    if gj is not None:
        k1 = normal_curvature(gj, w1)
        k2 = normal_curvature(gj, w2)
    else:
        # fall back to quadratic-form values from the snapshot
        def nc(w):
            du, dv = w
            num = data.H1 * (data.e1 * du * du + 2 * data.f1 * du * dv + data.g1 * dv * dv) \
                + data.H2 * (data.e2 * du * du + 2 * data.f2 * du * dv + data.g2 * dv * dv)
            den = data.E * du * du + 2 * data.F * du * dv + data.G * dv * dv
            return num / (den * data.Hnorm)
        k1, k2 = nc(w1), nc(w2)
    if k1 <= k2:
        return PrincipalDirections(dir_min=w1, dir_max=w2, k=k1, K=k2)
    return PrincipalDirections(dir_min=w2, dir_max=w1, k=k2, K=k1)
