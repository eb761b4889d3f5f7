"""Singularities of the principal mean configuration and their Darbouxian type.

Two kinds of singularity are located and classified:

  * normal:  the mean curvature vector H vanishes;
  * umbilic: the two principal mean curvatures coincide (k = K) with H != 0.

Both kill all three BDE coefficients, so near a singularity (in an adapted
Monge chart) the equation has the linear normal form

    -(d u + b v) dv^2 + (a u + c v) du dv + (d u + b v) du^2 + O(2) = 0.

Classification pipeline per singularity: adapt coordinates to a Monge chart
(tangent plane to the first two axes, chart linear part the identity), read
(d, b, a, c) from the jet-exact linear parts of (N, M) [with L = -N checked
structurally], rotate the chart in-plane to kill d (a real root of a cubic
in tan w; the type does not depend on the chosen root), test transversality
a*b - c*d != 0, then the trichotomy:

    D1:  c^2 + 4 b (a + b) < 0
    D2:  c^2 + 4 b (a + b) > 0  and  a/b < 0, a/b != -1
    D3:  a/b > 0

Boundary values inside tolerance bands are reported as non-Darbouxian with
a diagnostic rather than force-classified.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .expr import EvalError, NonImmersionError, SurfaceDef, jet_at
from .fastpath import FastSurface
from .geometry import bde_at, compute_geometry_jets
from .jets import Jet, invert2, compose2

__all__ = [
    "MongeData",
    "Singularity",
    "SearchReport",
    "find_singularities",
    "monge_adapt",
    "rotate_kill_d",
    "classify_normal",
    "classify_umbilic",
    "classify_singularity",
    "analyze_singularities",
]


@dataclass
class MongeData:
    """Monge-chart cubic data and the adapting transformations."""

    coeffs: dict[str, float]           # r1..c2, paper normalization
    rotation: np.ndarray               # R^4 rotation, rows = adapted frame
    chart: np.ndarray                  # 2x2 chart linear correction
    normal_residual: float             # |(r1+t1, r2+t2)|
    umbilic_residual: float            # |(t1^2+t2^2-r1^2-r2^2, s1(t1+r1)+s2(t2+r2))|


@dataclass
class Singularity:
    location: tuple[float, float]
    kind: str                          # 'normal' | 'umbilic' | 'degenerate'
    monge: MongeData | None = None
    coeffs: tuple[float, float, float, float] | None = None    # (d, b, a, c)
    rotated: tuple[float, float, float, float] | None = None   # after omega
    omega: float = 0.0
    transversality: float = math.nan
    dtype: str = "unclassified"        # 'D1' | 'D2' | 'D3' | 'non-Darbouxian'
    diagnostic: str = ""
    equilibria: list = field(default_factory=list)
    separatrix_count: dict[str, int] = field(default_factory=dict)


@dataclass
class SearchReport:
    singularities: list[Singularity]
    suspects: list[tuple[float, float]]     # residual dip but no convergence
    degenerate_surface: bool = False
    degeneracy_kind: str = ""               # 'normal' (H == 0) | 'umbilic' (k == K)


# --------------------------------------------------------------------------
# location
# --------------------------------------------------------------------------

def _grid_points(surface: SurfaceDef, n: int):
    (u0, u1), (v0, v1) = surface.domain
    per_u, per_v = surface.periodic
    us = np.linspace(u0, u1, n, endpoint=not per_u) if per_u else \
        np.linspace(u0, u1, n + 1)
    vs = np.linspace(v0, v1, n, endpoint=not per_v) if per_v else \
        np.linspace(v0, v1, n + 1)
    return us, vs


def _newton_normal(surface: SurfaceDef, start, tol: Tolerances):
    """Gauss-Newton on the 4-component mean curvature vector."""
    u, v = start
    for _ in range(30):
        try:
            gj = compute_geometry_jets(jet_at(surface, (u, v), order=3), tol)
        except (EvalError, NonImmersionError):
            return None
        Hval = np.array([h.value for h in gj.H])
        J = np.array([[h.coeff(1, 0), h.coeff(0, 1)] for h in gj.H])
        r = float(np.linalg.norm(Hval))
        JTJ = J.T @ J
        if np.linalg.det(JTJ) < 1e-30:
            return None
        step = np.linalg.solve(JTJ, -J.T @ Hval)
        u2, v2 = surface.wrap((u + step[0], v + step[1]))
        if not surface.contains((u2, v2), pad=1e-6):
            return None
        u, v = u2, v2
        if np.linalg.norm(step) < tol.newton_floor * 1e-4:
            break
    gj = compute_geometry_jets(jet_at(surface, (u, v), order=3), tol)
    res = math.sqrt(max(gj.Hnorm2.value, 0.0))
    scale = max(1.0, abs(gj.e1.value), abs(gj.g1.value),
                abs(gj.e2.value), abs(gj.g2.value))
    if res <= tol.tol_sing * scale:
        return (u, v)
    return None


def _newton_umbilic(surface: SurfaceDef, start, tol: Tolerances):
    """Newton on (M, L); converges to umbilic or normal singularities."""
    u, v = start
    for _ in range(30):
        try:
            jets = jet_at(surface, (u, v), order=3)
            bde = bde_at(jets, tol)
        except (EvalError, NonImmersionError):
            return None
        F = np.array([bde.M, bde.L])
        J = np.array([[bde.Mu, bde.Mv], [bde.Lu, bde.Lv]])
        if abs(np.linalg.det(J)) < 1e-30:
            return None
        step = np.linalg.solve(J, -F)
        nstep = float(np.linalg.norm(step))
        if nstep > 0.5:  # damp wild steps out of the basin
            step *= 0.5 / nstep
        u2, v2 = surface.wrap((u + step[0], v + step[1]))
        if not surface.contains((u2, v2), pad=1e-6):
            return None
        u, v = u2, v2
        if nstep < tol.newton_floor * 1e-4:
            break
    jets = jet_at(surface, (u, v), order=3)
    bde = bde_at(jets, tol)
    gj = compute_geometry_jets(jets, tol)
    scale = max(gj.Hnorm2.value ** 0.5, tol.tol_H) * max(
        1.0, abs(gj.e1.value), abs(gj.g1.value), abs(gj.e2.value), abs(gj.g2.value))
    if max(abs(bde.L), abs(bde.M), abs(bde.N)) <= tol.tol_sing * max(scale, 1e-12):
        return (u, v)
    return None


def _wrapped_dist(surface: SurfaceDef, p, q) -> float:
    out = 0.0
    for x, y, (lo, hi), per in zip(p, q, surface.domain, surface.periodic):
        d = abs(x - y)
        if per:
            w = hi - lo
            d = min(d % w, w - (d % w))
        out += d * d
    return math.sqrt(out)


def find_singularities(surface: SurfaceDef, grid: int = 24,
                       tol: Tolerances = DEFAULT_TOL) -> SearchReport:
    """Grid scan plus damped Newton refinement for both singularity kinds.

    Cells whose residual dips are refined; converged roots are deduplicated
    by wrapped distance.  A surface whose residuals vanish on essentially
    the whole grid is reported globally degenerate instead.
    """
    grid = max(grid, tol.grid_min)
    fs = FastSurface(surface)
    us, vs = _grid_points(surface, grid)

    h_res = np.full((len(us), len(vs)), np.inf)
    u_res = np.full((len(us), len(vs)), np.inf)
    for i, uu in enumerate(us):
        for j, vv in enumerate(vs):
            try:
                pdta = fs.point_data(uu, vv)
            except Exception:
                continue
            second = max(abs(pdta.eH), abs(pdta.fH), abs(pdta.gH),
                         math.sqrt(max(pdta.Hn2, 0.0)))
            h_res[i, j] = math.sqrt(max(pdta.Hn2, 0.0))
            u_res[i, j] = pdta.coeff_scale / max(second, 1e-300)

    finite_h = h_res[np.isfinite(h_res)]
    finite_u = u_res[np.isfinite(u_res)]
    report = SearchReport([], [])
    if finite_h.size == 0:
        report.degenerate_surface = True
        report.degeneracy_kind = "normal"
        return report
    if float(np.median(finite_h)) < tol.tol_H:
        report.degenerate_surface = True
        report.degeneracy_kind = "normal"
        return report
    if float(np.median(finite_u)) < 1e3 * tol.tol_sing:
        report.degenerate_surface = True
        report.degeneracy_kind = "umbilic"
        return report

    def candidate_cells(res):
        thresh = max(np.nanquantile(res[np.isfinite(res)], 0.05),
                     10.0 * tol.tol_sing)
        out = []
        for i in range(len(us)):
            for j in range(len(vs)):
                r = res[i, j]
                if not np.isfinite(r):
                    continue
                neigh = res[max(0, i - 1):i + 2, max(0, j - 1):j + 2]
                if r <= neigh.min() + 1e-300 or r <= thresh:
                    out.append((us[i], vs[j]))
        return out

    normal_roots: list[tuple[float, float]] = []
    umbilic_roots: list[tuple[float, float]] = []
    suspects: list[tuple[float, float]] = []

    for start in candidate_cells(h_res):
        root = _newton_normal(surface, start, tol)
        if root is not None:
            normal_roots.append(root)
        else:
            i = int(np.argmin(np.abs(us - start[0])))
            j = int(np.argmin(np.abs(vs - start[1])))
            if h_res[i, j] < 1e-3:
                suspects.append(start)
    for start in candidate_cells(u_res):
        root = _newton_umbilic(surface, start, tol)
        if root is not None:
            umbilic_roots.append(root)
        else:
            i = int(np.argmin(np.abs(us - start[0])))
            j = int(np.argmin(np.abs(vs - start[1])))
            if u_res[i, j] < 1e-3:
                suspects.append(start)

    def dedup(points):
        out = []
        for p in sorted(points):
            if all(_wrapped_dist(surface, p, q) > tol.tol_merge for q in out):
                out.append(p)
        return out

    normal_roots = dedup(normal_roots)
    umbilic_roots = dedup(umbilic_roots)

    sings: list[Singularity] = []
    for p in normal_roots:
        sings.append(Singularity(location=p, kind="normal"))
    kind_split = math.sqrt(tol.tol_sing)
    for p in umbilic_roots:
        if any(_wrapped_dist(surface, p, s.location) <= tol.tol_merge
               for s in sings):
            continue  # umbilic search re-found a normal singularity
        pdta = fs.point_data(*p)
        hn = math.sqrt(max(pdta.Hn2, 0.0))
        if hn > kind_split:
            sings.append(Singularity(location=p, kind="umbilic"))
        else:
            # H nearly vanishes here yet the normal search did not claim it
            sings.append(Singularity(location=p, kind="degenerate"))

    sings.sort(key=lambda s: s.location)
    report.singularities = sings
    report.suspects = dedup(suspects)
    return report


# --------------------------------------------------------------------------
# Monge adaptation
# --------------------------------------------------------------------------

def monge_adapt(surface: SurfaceDef, point: tuple[float, float],
                tol: Tolerances = DEFAULT_TOL) -> tuple[MongeData, list[Jet]]:
    """Adapt coordinates at a point to a Monge chart.

    Returns the Monge cubic data and the adapted component jets
    (u, v, h1, h2) with identity linear part, from which classification
    coefficients are read.
    """
    jets = jet_at(surface, point, order=4)
    gj = compute_geometry_jets(jets, tol)

    au = np.array([c.value for c in gj.au])
    av = np.array([c.value for c in gj.av])
    e1 = au / np.linalg.norm(au)
    e2 = av - (av @ e1) * e1
    e2 /= np.linalg.norm(e2)
    n1 = np.array([c.value for c in gj.N1])
    n2 = np.array([c.value for c in gj.N2])
    R = np.stack([e1, e2, n1, n2])

    # rotate components: beta = R (alpha - alpha0)
    base = [c.value for c in jets]
    centered = [c - val for c, val in zip(jets, base)]
    beta = []
    for row in R:
        acc = centered[0] * row[0]
        for w, cj in zip(row[1:], centered[1:]):
            acc = acc + cj * w
        beta.append(acc)

    # chart correction: invert the first two components as a series
    U, V = invert2(beta[0], beta[1])
    h1 = compose2(beta[2], U, V)
    h2 = compose2(beta[3], U, V)
    A = np.array([[beta[0].coeff(1, 0), beta[0].coeff(0, 1)],
                  [beta[1].coeff(1, 0), beta[1].coeff(0, 1)]])

    def read(h: Jet) -> dict[str, float]:
        return {"r": 2.0 * h.coeff(2, 0), "s": h.coeff(1, 1),
                "t": 2.0 * h.coeff(0, 2), "a": 6.0 * h.coeff(3, 0),
                "d": 2.0 * h.coeff(2, 1), "b": 2.0 * h.coeff(1, 2),
                "c": 6.0 * h.coeff(0, 3)}

    c1, c2 = read(h1), read(h2)
    coeffs = {k + "1": val for k, val in c1.items()}
    coeffs.update({k + "2": val for k, val in c2.items()})
    nres = math.hypot(coeffs["r1"] + coeffs["t1"], coeffs["r2"] + coeffs["t2"])
    ures = math.hypot(
        coeffs["t1"] ** 2 + coeffs["t2"] ** 2 - coeffs["r1"] ** 2 - coeffs["r2"] ** 2,
        coeffs["s1"] * (coeffs["t1"] + coeffs["r1"])
        + coeffs["s2"] * (coeffs["t2"] + coeffs["r2"]))

    n = min(4, h1.order)
    uj = Jet.var(0.0, 0, n)
    vj = Jet.var(0.0, 1, n)
    adapted = [uj, vj, h1, h2]
    return MongeData(coeffs, R, A, nres, ures), adapted


# --------------------------------------------------------------------------
# rotation and classification
# --------------------------------------------------------------------------

def _rotate_coeffs(coeffs, omega):
    d, b, a, c = coeffs
    cw, sw = math.cos(omega), math.sin(omega)
    c2, s2 = math.cos(2 * omega), math.sin(2 * omega)
    x1 = d * cw - b * sw
    x2 = d * sw + b * cw
    y1 = a * cw - c * sw
    y2 = a * sw + c * cw
    return (x1 * c2 - 0.5 * y1 * s2,
            x2 * c2 - 0.5 * y2 * s2,
            2.0 * x1 * s2 + y1 * c2,
            2.0 * x2 * s2 + y2 * c2)


def rotate_kill_d(coeffs: tuple[float, float, float, float],
                  tol: Tolerances = DEFAULT_TOL):
    """In-plane rotation angle omega killing the d-coefficient.

    Solves b t^3 + (c - d) t^2 - (a + b) t + d = 0 in t = tan(omega) and
    takes the real root of smallest |omega| (the classification does not
    depend on the choice; the property suite enforces that).
    """
    d, b, a, c = coeffs
    scale = max(abs(d), abs(b), abs(a), abs(c))
    if scale == 0.0:
        raise ValueError("all linear coefficients vanish")
    poly = np.array([b, c - d, -(a + b), d]) / scale
    candidates: list[float] = []
    lead = np.max(np.abs(poly))
    trimmed = np.trim_zeros(np.where(np.abs(poly) > 1e-14 * lead, poly, 0.0), "f")
    if trimmed.size > 1:
        for root in np.roots(trimmed):
            if abs(root.imag) < 1e-9 * max(1.0, abs(root.real)):
                candidates.append(math.atan(root.real))
    if abs(b) <= 1e-14 * scale:
        candidates.append(math.pi / 2.0)   # tan-chart misses this rotation
    verified = []
    for w in candidates:
        rot = _rotate_coeffs(coeffs, w)
        if abs(rot[0]) <= max(tol.tol_rot, 1e-12) * scale:
            verified.append((abs(w), w, rot))
    if not verified:
        raise ValueError(f"no rotation kills d for coefficients {coeffs}")
    _, omega, rotated = min(verified)
    return omega, rotated


def _classify_coeffs(coeffs, tol: Tolerances):
    """Trichotomy on the rotated coefficients; returns (type, diagnostic)."""
    d, b, a, c = coeffs
    scale = max(abs(d), abs(b), abs(a), abs(c))
    if scale == 0.0:
        return "non-Darbouxian", "all rotated coefficients vanish"
    disc = c * c + 4.0 * b * (a + b)
    band = tol.tol_transv * scale * scale
    if abs(disc) <= band:
        return "non-Darbouxian", f"discriminant {disc:.3e} inside tolerance band"
    if disc < 0.0:
        return "D1", ""
    ab = a * b
    if abs(ab) <= band:
        return "non-Darbouxian", f"a*b = {ab:.3e} inside tolerance band"
    if ab > 0.0:
        return "D3", ""
    if abs(a + b) <= tol.tol_transv * scale:
        return "non-Darbouxian", "ratio a/b at the excluded value -1"
    return "D2", ""


def _extract_linear_coeffs(adapted: list[Jet], tol: Tolerances):
    """(d, b, a, c) from the adapted chart's BDE linear parts."""
    gj = compute_geometry_jets(adapted, tol)
    bde = bde_at(adapted, tol, gj=gj)
    d_, b_ = bde.Nu, bde.Nv
    a_, c_ = bde.Mu, bde.Mv
    scale = max(abs(d_), abs(b_), abs(a_), abs(c_), 1e-300)
    structure = max(abs(bde.Lu + bde.Nu), abs(bde.Lv + bde.Nv))
    value = max(abs(bde.L), abs(bde.M), abs(bde.N))
    return (d_, b_, a_, c_), structure / scale, value / scale


def classify_singularity(surface: SurfaceDef, sing: Singularity,
                         tol: Tolerances = DEFAULT_TOL) -> Singularity:
    """Fill Monge data, rotation, transversality and Darbouxian type."""
    monge, adapted = monge_adapt(surface, sing.location, tol)
    sing.monge = monge
    if sing.kind == "degenerate":
        sing.dtype = "non-Darbouxian"
        sing.diagnostic = "simultaneous normal and umbilic criteria; not classified"
        return sing

    coeffs, structure, value = _extract_linear_coeffs(adapted, tol)
    sing.coeffs = coeffs
    if structure > 1e-5 or value > 1e-5:
        sing.dtype = "non-Darbouxian"
        sing.diagnostic = (f"linear normal form violated "
                           f"(structure {structure:.2e}, value {value:.2e})")
        return sing

    d_, b_, a_, c_ = coeffs
    transv = a_ * b_ - c_ * d_
    sing.transversality = transv
    scale = max(abs(d_), abs(b_), abs(a_), abs(c_))
    # absolute noise floor: the coefficients are O(quadratic x cubic) in the
    # Monge data, so a scale far below that is numerically zero
    q2 = max(abs(monge.coeffs[k]) for k in ("r1", "s1", "t1", "r2", "s2", "t2"))
    q3 = max(abs(monge.coeffs[k]) for k in
             ("a1", "d1", "b1", "c1", "a2", "d2", "b2", "c2"))
    floor = 1e-10 * max(q2 * max(q2, q3), 1e-20)
    if scale <= floor or abs(transv) <= tol.tol_transv * scale * scale:
        sing.dtype = "non-Darbouxian"
        sing.diagnostic = f"transversality {transv:.3e} fails"
        return sing

    try:
        omega, rotated = rotate_kill_d(coeffs, tol)
    except ValueError as exc:
        sing.dtype = "non-Darbouxian"
        sing.diagnostic = str(exc)
        return sing
    sing.omega = omega
    sing.rotated = rotated
    sing.dtype, sing.diagnostic = _classify_coeffs(rotated, tol)
    return sing


def classify_normal(surface: SurfaceDef, sing: Singularity,
                    tol: Tolerances = DEFAULT_TOL) -> Singularity:
    if sing.kind != "normal":
        raise ValueError("classify_normal expects a normal singularity")
    return classify_singularity(surface, sing, tol)


def classify_umbilic(surface: SurfaceDef, sing: Singularity,
                     tol: Tolerances = DEFAULT_TOL) -> Singularity:
    if sing.kind != "umbilic":
        raise ValueError("classify_umbilic expects an umbilic singularity")
    return classify_singularity(surface, sing, tol)


def analyze_singularities(surface: SurfaceDef, grid: int = 24,
                          tol: Tolerances = DEFAULT_TOL) -> SearchReport:
    """Locate and classify all singularities (types only; no blow-up data)."""
    report = find_singularities(surface, grid, tol)
    if report.degenerate_surface:
        return report
    for sing in report.singularities:
        classify_singularity(surface, sing, tol)
    return report
