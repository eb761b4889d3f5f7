"""Leaf tracing, cycles, and holonomy of the principal mean foliations.

A leaf is an arc-length integral curve of one of the two BDE root direction
fields (tag ``minimal``/``maximal``), oriented by continuation.  Closed
leaves are refined into Cycle records via a transverse section and a fixed
point of the return displacement, then resampled at composite
Gauss-Legendre nodes where the full jet stack is evaluated.

Along a cycle the adapted Darboux frame {t, T, N, B} (tangent, positive
tangent complement, unit mean normal, mean binormal) satisfies

    t' = k_g T + k N + k_B B        N' = -k t + tau_N T + tau_B B
    T' = -k_g t - tau_N N - tau B   B' = -k_B t + tau T - tau_B N

and a minimal cycle is characterized by tau_N = 0, k_B + Kbar = 0 and
K - k > 0, where K(u), Kbar(u) (and the third-order a(u), b(u)) are the
transverse-section expansion coefficients along N and B.

The holonomy exponent ln pi'(0) of a cycle is computed three independent
ways: a Richardson-extrapolated numeric return map; the variational chart
integral

    ln pi'(0) = - Int_0^L (f_H)_v / (E g_H - G e_H) du          (tube chart)

with the integrand assembled from exact bivariate jets of the tube chart;
and the Darboux-frame split

    ln pi'(0) = - Int k'/(K-k) - Int k_B tau_B/(K-k)
                + Int (H2)_v tau / (H1 (K-k)),
    2 (H2)_v = b - 2 k_g Kbar - tau_N tau_B - tau',  H1 = (k+K)/2.

(The last two signs differ from the source normal-form shorthand; they are
the ones consistent with the frame equations above and are pinned by the
numeric return-map oracle in the test suite.)  A transverse deformation of
size eps supported near the cycle that shifts b(u) by eps*delta(u) changes
the exponent at rate  d/deps ln pi' = +1/2 Int tau delta / (H1 (K-k)) du.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT_TOL, Tolerances
from .expr import EvalError, NonImmersionError, SurfaceDef, jet_at
from .fastpath import FastSurface, PointData
from .geometry import compute_geometry_jets, direction_pair
from .integrate import DormandPrince, StepFailed, bisect_event
from .jets import Jet, compose2, cross4, dot
from .liecartan import SeparatrixGerm, fiber_equilibria, separatrix_germs
from .singularities import SearchReport, Singularity, find_singularities, \
    classify_singularity

__all__ = [
    "LeafTrace",
    "Cycle",
    "Configuration",
    "trace_leaf",
    "detect_cycle",
    "darboux_frame_along",
    "holonomy_numeric",
    "holonomy_eq14",
    "holonomy_eq24",
    "perturbation_derivative",
    "trace_separatrix",
    "build_configuration",
]


class TraceAbort(Exception):
    pass


@dataclass
class LeafTrace:
    surface: SurfaceDef
    tag: str                              # 'minimal' | 'maximal'
    points: np.ndarray                    # (n, 2) unwrapped chart polyline
    arclen: np.ndarray                    # (n,)
    termination: str                      # 'hit-singularity' | 'left-domain'
                                          # | 'closed' | 'step-limit' | 'aborted'
    orientation: int = +1
    diagnostic: str = ""
    separatrix: SeparatrixGerm | None = None
    hit_singularity: tuple[float, float] | None = None
    closure_gap: float = math.inf
    section_offset: float = math.nan      # signed offset at the section return

    @property
    def length(self) -> float:
        return float(self.arclen[-1]) if len(self.arclen) else 0.0


@dataclass
class Cycle:
    surface: SurfaceDef
    tag: str
    basepoint: tuple[float, float]
    length: float
    points: np.ndarray                    # one period, unwrapped
    arclen: np.ndarray
    closure_gap: float
    nodes: dict = field(default_factory=dict)   # quadrature-node data arrays
    ln_pi: dict = field(default_factory=dict)   # method -> value
    ln_pi_err: dict = field(default_factory=dict)
    quad_flag: str = ""

    @property
    def hyperbolic(self) -> bool:
        vals = [v for v in self.ln_pi.values() if v is not None]
        if not vals:
            return False
        return abs(vals[0] if "eq14" not in self.ln_pi else self.ln_pi["eq14"]) \
            > DEFAULT_TOL.tol_hyp

    def is_minimal(self) -> bool:
        return self.tag == "minimal"


# --------------------------------------------------------------------------
# direction field
# --------------------------------------------------------------------------

def _oriented_direction(pd: PointData, tag: str, ref: tuple[float, float],
                        tol: Tolerances) -> tuple[float, float]:
    """Unit-arc-length chart direction of the tagged root, oriented by ref."""
    scale = max(pd.coeff_scale, 1e-300)
    if pd.disc <= tol.tol_disc * scale * scale:
        raise TraceAbort("discriminant collapse")
    if pd.Hn2 <= tol.tol_H ** 2:
        raise TraceAbort("mean curvature collapse")
    w1, w2 = direction_pair(pd)
    k1 = pd.normal_curvature_ratio(*w1)
    k2 = pd.normal_curvature_ratio(*w2)
    if (k1 <= k2) == (tag == "minimal"):
        w = w1
    else:
        w = w2
    if w[0] * ref[0] + w[1] * ref[1] < 0.0:
        w = (-w[0], -w[1])
    inorm = pd.E * w[0] ** 2 + 2.0 * pd.F * w[0] * w[1] + pd.G * w[1] ** 2
    s = 1.0 / math.sqrt(inorm)
    return (w[0] * s, w[1] * s)


def _initial_direction(fs: FastSurface, seed, tag, orientation, tol):
    pd = fs.point_data(*seed)
    scale = max(pd.coeff_scale, 1e-300)
    if pd.disc <= tol.tol_disc * scale * scale or pd.Hn2 <= tol.tol_H ** 2:
        raise TraceAbort("seed at a singular or degenerate point")
    w1, w2 = direction_pair(pd)
    k1 = pd.normal_curvature_ratio(*w1)
    k2 = pd.normal_curvature_ratio(*w2)
    w = w1 if ((k1 <= k2) == (tag == "minimal")) else w2
    return (w[0] * orientation, w[1] * orientation)


# --------------------------------------------------------------------------
# leaf tracing
# --------------------------------------------------------------------------

def trace_leaf(surface: SurfaceDef, seed: tuple[float, float], tag: str,
               orientation: int = +1, tol: Tolerances = DEFAULT_TOL,
               singularities: list[tuple[float, float]] = (),
               max_length: float | None = None,
               skip_singularity: tuple[float, float] | None = None,
               initial_direction: tuple[float, float] | None = None,
               germ: SeparatrixGerm | None = None,
               detect_closure: bool = True,
               section: tuple | None = None) -> LeafTrace:
    """Arc-length trace of one leaf from a seed point.

    Terminates on singularity proximity (r_exit), non-periodic domain exit,
    detected closure (same-orientation return to the seed section), or the
    step budget.  ``skip_singularity`` arms the proximity test for that one
    singularity only after the trace has left its 1.5 r_exit ball once, so
    separatrix continuations do not terminate immediately.

    ``section``, when given as (base, flow_dir, normal_dir), replaces the
    seed-based closure section: the trace stops at its first
    same-orientation crossing of that line, bisected on the dense output,
    and records the signed offset (the return-map evaluation primitive).
    """
    fs = FastSurface(surface)
    r_exit = tol.r_exit
    per = surface.periodic
    dom = surface.domain

    def wdist(p, q):
        out = 0.0
        for x, y, (lo, hi), pp in zip(p, q, dom, per):
            d = abs(x - y)
            if pp:
                w = hi - lo
                d = min(d % w, w - (d % w))
            out += d * d
        return math.sqrt(out)

    try:
        if initial_direction is None:
            ref = list(_initial_direction(fs, seed, tag, orientation, tol))
        else:
            ref = list(initial_direction)
    except TraceAbort as exc:
        return LeafTrace(surface, tag, np.array([seed]), np.zeros(1),
                         "aborted", orientation, str(exc), germ)

    # section for closure detection: the seed's own, or the supplied one
    seed_arr = np.array(seed, dtype=float)
    if section is None:
        f0 = np.array(ref) / np.hypot(*ref)
        n0 = np.array([-f0[1], f0[0]])
        sec_base = seed_arr
    else:
        sec_base, f0, n0 = (np.asarray(x, dtype=float) for x in section)
        detect_closure = True

    state = {"abort": None}

    def rhs(_s, y):
        try:
            pd = fs.point_data(y[0], y[1])
            return np.array(_oriented_direction(pd, tag, tuple(ref), tol))
        except (TraceAbort, EvalError, NonImmersionError) as exc:
            state["abort"] = str(exc)
            return np.zeros(2)

    max_len = max_length if max_length is not None else 64.0 * _domain_scale(surface)
    stepper = DormandPrince(rhs, 0.0, seed_arr, rtol=tol.ode_rtol,
                            atol=tol.ode_atol,
                            max_step=0.25 * _domain_scale(surface))
    pts = [seed_arr.copy()]
    arcs = [0.0]
    termination = "step-limit"
    diagnostic = ""
    hit = None
    closure_gap = math.inf
    section_offset = math.nan
    armed = skip_singularity is None
    g_prev = float(_wrapped_rel(surface, seed_arr, sec_base) @ f0)
    left_section = False

    nmax = int(min(tol.step_budget, 200_000))
    for _ in range(nmax):
        try:
            stepper.step()
        except StepFailed as exc:
            termination, diagnostic = "aborted", str(exc)
            break
        if state["abort"]:
            near = None
            for sp in singularities:
                if wdist(stepper.y, sp) < 4.0 * r_exit:
                    near = sp
            if near is not None:
                termination, hit = "hit-singularity", near
            else:
                termination, diagnostic = "aborted", state["abort"]
            break
        y = stepper.y
        # update orientation reference
        ref[0], ref[1] = stepper.fy[0], stepper.fy[1]

        # domain exit on non-periodic axes
        exited = False
        for axis in range(2):
            if per[axis]:
                continue
            lo, hi = dom[axis]
            if y[axis] < lo or y[axis] > hi:
                tcross = bisect_event(
                    lambda t, a=axis, b=(lo if y[axis] < lo else hi):
                        stepper.interpolate(t)[a] - b,
                    stepper.t_prev, stepper.t)
                ycross = stepper.interpolate(tcross)
                pts.append(ycross)
                arcs.append(tcross)
                termination = "left-domain"
                exited = True
                break
        if exited:
            break

        # singularity proximity
        if not armed and skip_singularity is not None and \
                wdist(y, skip_singularity) > 1.5 * r_exit:
            armed = True
        stop = False
        for sp in singularities:
            if not armed and skip_singularity is not None and \
                    wdist(sp, skip_singularity) < tol.tol_merge:
                continue
            if wdist(y, sp) < r_exit:
                termination, hit, stop = "hit-singularity", sp, True
                break
        if stop:
            pts.append(y.copy())
            arcs.append(stepper.t)
            break

        # closure: same-orientation crossing of the section
        if detect_closure:
            rel = _wrapped_rel(surface, y, sec_base)
            g = float(rel @ f0)
            off = float(rel @ n0)
            if not left_section and np.hypot(*rel) > 4.0 * r_exit:
                left_section = True
            if left_section and g_prev < 0.0 <= g and abs(off) < 0.25 * _domain_scale(surface):
                tcross = bisect_event(
                    lambda t: float(_wrapped_rel(surface, stepper.interpolate(t),
                                                 sec_base) @ f0),
                    stepper.t_prev, stepper.t)
                ycross = stepper.interpolate(tcross)
                # polish along the flow: the dense output is only O(h^4)
                for _ in range(3):
                    gc = float(_wrapped_rel(surface, ycross, sec_base) @ f0)
                    fc = rhs(tcross, ycross)
                    fdot = float(fc @ f0)
                    if abs(fdot) < 1e-12 or abs(gc) < 1e-15:
                        break
                    ycross = ycross - fc * (gc / fdot)
                section_offset = float(_wrapped_rel(surface, ycross, sec_base) @ n0)
                pts.append(ycross)
                arcs.append(tcross)
                if section is None:
                    closure_gap = abs(section_offset)
                else:
                    closure_gap = abs(section_offset
                                      - float(_wrapped_rel(surface, seed_arr,
                                                           sec_base) @ n0))
                termination = "closed"
                break
            g_prev = g

        pts.append(y.copy())
        arcs.append(stepper.t)
        if stepper.t > max_len:
            termination = "step-limit"
            diagnostic = "max length reached"
            break

    return LeafTrace(surface, tag, np.array(pts), np.array(arcs),
                     termination, orientation, diagnostic, germ,
                     hit, closure_gap, section_offset)


def _domain_scale(surface: SurfaceDef) -> float:
    (u0, u1), (v0, v1) = surface.domain
    return max(u1 - u0, v1 - v0)


def _wrapped_rel(surface: SurfaceDef, p, q) -> np.ndarray:
    out = np.empty(2)
    for i, ((lo, hi), per) in enumerate(zip(surface.domain, surface.periodic)):
        d = p[i] - q[i]
        if per:
            w = hi - lo
            d = (d + 0.5 * w) % w - 0.5 * w
        out[i] = d
    return out


# --------------------------------------------------------------------------
# cycles
# --------------------------------------------------------------------------

def _return_map(surface, fs, base, f0, n0, tag, tol, xi,
                singularities=(), max_length=None):
    """First same-orientation return to the section through base.

    Returns (offset, arclength, trace) or None if the leaf escapes.
    """
    start = base + xi * n0
    trace = trace_leaf(surface, tuple(start), tag, +1, tol,
                       singularities=singularities,
                       max_length=max_length,
                       initial_direction=tuple(f0),
                       section=(base, f0, n0))
    if trace.termination != "closed":
        return None
    return (trace.section_offset, trace.length, trace)


def detect_cycle(trace: LeafTrace, tol: Tolerances = DEFAULT_TOL,
                 singularities: list[tuple[float, float]] = ()) -> Cycle | None:
    """Refine a closure candidate into a Cycle via the return displacement.

    The transverse section sits at the candidate basepoint; the return
    displacement D(xi) = pi(xi) - xi is driven to zero by secant iteration
    (a closed leaf of an integrable region has D = 0 immediately).
    """
    if trace.termination != "closed":
        return None
    surface = trace.surface
    fs = FastSurface(surface)
    base = surface.wrap(tuple(trace.points[-1]))
    base = np.array(base)
    try:
        d0 = _initial_direction(fs, tuple(base), trace.tag, +1, tol)
    except TraceAbort:
        return None
    # align with the trace's closing direction
    closing = trace.points[-1] - trace.points[-2]
    if closing @ np.array(d0) < 0:
        d0 = (-d0[0], -d0[1])
    f0 = np.array(d0) / np.hypot(*d0)
    n0 = np.array([-f0[1], f0[0]])
    max_len = 3.0 * max(trace.length, _domain_scale(surface))

    def D(xi):
        ret = _return_map(surface, fs, base, f0, n0, trace.tag, tol, xi,
                          singularities, max_len)
        if ret is None:
            raise TraceAbort("leaf escaped during cycle refinement")
        return ret

    try:
        r0 = D(0.0)
        xi = 0.0
        gap = abs(r0[0])
        if gap > tol.tol_cycle * r0[1]:
            # secant iteration on the displacement D(xi) = pi(xi) - xi
            x0, F0 = 0.0, r0[0]
            x1 = r0[0]
            for _ in range(30):
                r1 = D(x1)
                F1 = r1[0] - x1
                if abs(F1) <= tol.tol_cycle * r1[1]:
                    xi, gap, r0 = x1, abs(F1), r1
                    break
                if F1 == F0:
                    return None
                x2 = x1 - F1 * (x1 - x0) / (F1 - F0)
                x0, F0 = x1, F1
                x1 = x2
            else:
                return None
    except TraceAbort:
        return None

    basept = base + xi * n0
    final = trace_leaf(surface, tuple(basept), trace.tag, +1, tol,
                       singularities=singularities, max_length=max_len,
                       initial_direction=tuple(f0))
    if final.termination != "closed":
        return None
    L = final.length
    if final.closure_gap > max(10.0 * tol.tol_cycle * L, 1e-9):
        return None
    return Cycle(surface, trace.tag, tuple(surface.wrap(tuple(basept))), L,
                 final.points, final.arclen, final.closure_gap)


# --------------------------------------------------------------------------
# quadrature-node geometry along a cycle
# --------------------------------------------------------------------------

def _gauss_nodes(L: float, n: int):
    npanel = max(1, n // 8)
    x, w = np.polynomial.legendre.leggauss(8)
    nodes = []
    weights = []
    h = L / npanel
    for k in range(npanel):
        a = k * h
        nodes.extend(a + 0.5 * h * (x + 1.0))
        weights.extend(0.5 * h * w)
    return np.array(nodes), np.array(weights)


def _root_jet(gj, direction, tol):
    """Jet of the traced root slope in the chart adapted to the direction.

    Returns (slope_jet, chart); the slope value matches the direction.
    """
    du, dv = direction
    if abs(dv) <= abs(du):
        chart = "p"
        A, B, C = gj.L, gj.M, gj.N
        target = dv / du
    else:
        chart = "q"
        A, B, C = gj.N, gj.M, gj.L
        target = du / dv
    disc = B * B - 4.0 * (A * C)
    if disc.value <= 0.0:
        raise TraceAbort("discriminant not positive on cycle")
    root = disc.sqrt()
    # two stable expressions; pick the branch matching the target value
    qplus = (B + root) * (-0.5)
    qminus = (B - root) * (-0.5)
    qbig = qplus if abs(qplus.value) >= abs(qminus.value) else qminus
    cands = []
    if abs(A.value) > 1e-300:
        cands.append(("big", qbig.value / A.value))
    if abs(qbig.value) > 1e-300:
        cands.append(("small", C.value / qbig.value))
    if not cands:
        raise TraceAbort("degenerate root extraction")
    name = min(cands, key=lambda it: abs(it[1] - target))[0]
    slope = (qbig / A) if name == "big" else (C / qbig)
    return slope, chart


def _frame_jets(gj, direction, tol):
    """Jet-valued Darboux frame fields (t, T, N, B) and chart velocity jets."""
    slope, chart = _root_jet(gj, direction, tol)
    if chart == "p":
        raw = [a + b * slope for a, b in zip(gj.au, gj.av)]
        inorm = gj.E + 2.0 * (gj.F * slope) + gj.G * (slope * slope)
        wu, wv = None, None
    else:
        raw = [a * slope + b for a, b in zip(gj.au, gj.av)]
        inorm = gj.E * (slope * slope) + 2.0 * (gj.F * slope) + gj.G
    inv = 1.0 / inorm.sqrt()
    t = [c * inv for c in raw]
    # sign: align with the traced direction
    du, dv = direction
    tval = np.array([c.value for c in t])
    along = np.array([a.value for a in gj.au]) * du \
        + np.array([a.value for a in gj.av]) * dv
    sign = 1.0 if float(tval @ along) >= 0.0 else -1.0
    if sign < 0:
        t = [-c for c in t]
    # chart velocity jets (du/ds, dv/ds)
    if chart == "p":
        wu = inv * sign
        wv = slope * inv * sign
    else:
        wu = slope * inv * sign
        wv = inv * sign

    # T: unit tangent complement, (t, T) positive in the chart orientation
    av_t = dot(gj.av, t)
    g_res = gj.G - av_t * av_t
    if g_res.value > 1e-8 * max(gj.G.value, 1.0):
        Traw = [a - c * av_t for a, c in zip(gj.av, t)]
    else:
        au_t = dot(gj.au, t)
        Traw = [a - c * au_t for a, c in zip(gj.au, t)]
    Tinv = 1.0 / dot(Traw, Traw).sqrt()
    T = [c * Tinv for c in Traw]
    # orientation: det of chart components positive
    E, F, G = gj.E.value, gj.F.value, gj.G.value
    det_g = E * G - F * F
    def chart_comps(vec):
        pu = sum(a.value * c.value for a, c in zip(gj.au, vec))
        pv = sum(a.value * c.value for a, c in zip(gj.av, vec))
        return ((pu * G - pv * F) / det_g, (pv * E - pu * F) / det_g)
    tx, ty = chart_comps(t)
    Tx, Ty = chart_comps(T)
    if tx * Ty - ty * Tx < 0.0:
        T = [-c for c in T]

    Hinv = 1.0 / gj.Hnorm2.sqrt()
    N = [h * Hinv for h in gj.H]
    B = cross4(t, T, N)
    Binv = 1.0 / dot(B, B).sqrt()
    B = [c * Binv for c in B]
    return t, T, N, B, wu, wv


def _deriv_along(vec_jets, wu, wv):
    """Directional derivative of a jet vector field along the leaf field."""
    out = []
    for c in vec_jets:
        cu = c.partial(0)
        cv = c.partial(1)
        out.append(cu * wu + cv * wv)
    return out


def _scalar_along(jet, wu, wv) -> float:
    return (jet.partial(0) * wu + jet.partial(1) * wv).value


def _section_chart(surface, point, t, T, N, B, tprime, Tprime, wu, wv, tol):
    """Bivariate tube-chart jets at one node.

    Returns the composed immersion P(sigma, w) (sigma = arc along the cycle,
    valid to first order; w = transverse section parameter, valid to the
    truncation order) plus the section expansion coefficients.
    """
    jets = jet_at(surface, point, order=4)
    order = 4
    S = Jet.var(0.0, 0, order)
    W = Jet.var(0.0, 1, order)

    tv = [c.value for c in t]
    Tv = [c.value for c in T]
    t1 = [c.value for c in tprime]
    T1 = [c.value for c in Tprime]
    # frame along the cycle to first order in sigma
    t_of_s = [Jet.const(a, order) + S * b for a, b in zip(tv, t1)]
    T_of_s = [Jet.const(a, order) + S * b for a, b in zip(Tv, T1)]
    base = [c.value for c in jets]
    # alpha(c(sigma)) - P0 = sigma * t0 exactly to first order
    c4 = [S * a for a in tv]

    au_val = [c.coeff(1, 0) for c in jets]
    av_val = [c.coeff(0, 1) for c in jets]
    A = np.array([[sum(a * b for a, b in zip(au_val, tv)),
                   sum(a * b for a, b in zip(av_val, tv))],
                  [sum(a * b for a, b in zip(au_val, Tv)),
                   sum(a * b for a, b in zip(av_val, Tv))]])
    Ainv = np.linalg.inv(A)

    centered = [c - val for c, val in zip(jets, base)]

    X = Jet.const(0.0, order)
    Y = Jet.const(0.0, order)
    for _ in range(order + 1):
        comp = [compose2(c, X, Y) for c in centered]
        F1 = dot([a - b for a, b in zip(comp, c4)], t_of_s)
        F2 = dot([a - b for a, b in zip(comp, c4)], T_of_s) - W
        X = X - (F1 * Ainv[0, 0] + F2 * Ainv[0, 1])
        Y = Y - (F1 * Ainv[1, 0] + F2 * Ainv[1, 1])

    P = [compose2(c, X, Y) for c in centered]
    return P, X, Y


def darboux_frame_along(cycle: Cycle, tol: Tolerances = DEFAULT_TOL,
                        n_quad: int | None = None) -> dict:
    """Frame functions and chart data at composite Gauss-Legendre nodes.

    Fills cycle.nodes with arrays over the nodes: the eight Darboux scalars,
    their cycle derivatives k', tau', the section coefficients K, Kbar, a, b,
    the eq14 integrand, and consistency residuals (frame skew-symmetry,
    |J| of the traced direction, tube-chart first-form normalization).
    """
    surface = cycle.surface
    n = n_quad or tol.n_quad
    s_nodes, s_weights = _gauss_nodes(cycle.length, n)

    # integrate the cycle to all node arc-lengths
    fs = FastSurface(surface)
    ref = None
    pts = []
    dirs = []
    state = {"ref": None}

    def rhs(_s, y):
        pd = fs.point_data(y[0], y[1])
        d = _oriented_direction(pd, cycle.tag, state["ref"], tol)
        return np.array(d)

    d0 = _initial_direction(fs, cycle.basepoint, cycle.tag, +1, tol)
    closing = cycle.points[-1] - cycle.points[-2]
    rel = closing / np.hypot(*closing)
    if rel @ np.array(d0) < 0:
        d0 = (-d0[0], -d0[1])
    state["ref"] = d0
    stepper = DormandPrince(rhs, 0.0, np.array(cycle.basepoint),
                            rtol=1e-12, atol=1e-13,
                            max_step=cycle.length / 16.0)
    for starget in s_nodes:
        while stepper.t < starget - 1e-14:
            if not stepper.step(t_bound=float(starget)):
                break
            state["ref"] = (stepper.fy[0], stepper.fy[1])
        y = stepper.y if abs(stepper.t - starget) < 1e-9 else stepper.interpolate(starget)
        pd = fs.point_data(y[0], y[1])
        d = _oriented_direction(pd, cycle.tag, state["ref"], tol)
        pts.append(surface.wrap(tuple(y)))
        dirs.append(d)

    cols = ("k_g", "k", "k_B", "tau_N", "tau", "tau_B", "kprime", "tauprime",
            "K", "Kbar", "a", "b", "H1", "Hnorm", "eq14_integrand",
            "skew_residual", "chart_residual", "J_residual")
    data = {c: np.empty(len(s_nodes)) for c in cols}
    data["s"] = s_nodes
    data["weights"] = s_weights
    data["points"] = np.array(pts)

    for i, (point, direction) in enumerate(zip(pts, dirs)):
        jets = jet_at(surface, point, order=4)
        gj = compute_geometry_jets(jets, tol)
        t, T, N, B, wu, wv = _frame_jets(gj, direction, tol)

        tp = _deriv_along(t, wu, wv)
        Tp = _deriv_along(T, wu, wv)
        Np = _deriv_along(N, wu, wv)
        Bp = _deriv_along(B, wu, wv)

        k_g = dot(tp, T)
        k = dot(tp, N)
        k_B = dot(tp, B)
        tau_N = -dot(Tp, N).value
        tau = -dot(Tp, B)
        tau_B = dot(Np, B).value

        data["k_g"][i] = k_g.value
        data["k"][i] = k.value
        data["k_B"][i] = k_B.value
        data["tau_N"][i] = tau_N
        data["tau"][i] = tau.value
        data["tau_B"][i] = tau_B
        data["kprime"][i] = _scalar_along(k, wu, wv)
        data["tauprime"][i] = _scalar_along(tau, wu, wv)
        data["Hnorm"][i] = math.sqrt(max(gj.Hnorm2.value, 0.0))

        # frame skew-symmetry residual of the 4x4 coefficient matrix
        frame = (t, T, N, B)
        primes = (tp, Tp, Np, Bp)
        omega = np.empty((4, 4))
        for r in range(4):
            for c in range(4):
                omega[r, c] = dot(primes[r], frame[c]).value
        data["skew_residual"][i] = float(np.max(np.abs(omega + omega.T)))

        # tube-chart section expansion and eq14 integrand
        P, X, Y = _section_chart(surface, point, t, T, N, B, tp, Tp, wu, wv, tol)
        Nv = [c.value for c in N]
        Bv = [c.value for c in B]
        A1 = [sum(P[m].coeff(0, j) * Nv[m] for m in range(4)) for j in range(5)]
        A2 = [sum(P[m].coeff(0, j) * Bv[m] for m in range(4)) for j in range(5)]
        data["K"][i] = 2.0 * A1[2]
        data["Kbar"][i] = 2.0 * A2[2]
        data["a"][i] = 6.0 * A1[3]
        data["b"][i] = 6.0 * A2[3]
        data["H1"][i] = 0.5 * (data["k"][i] + data["K"][i])

        # composed mean curvature field on the tube chart
        Hcomp = [compose2(h, X, Y) for h in gj.H]
        P_sw = [c.partial(0).partial(1) for c in P]
        P_ww = [c.partial(1).partial(1) for c in P]
        P_s = [c.partial(0) for c in P]
        P_w = [c.partial(1) for c in P]
        fH = dot(P_sw, Hcomp)
        gH_val = dot(P_ww, Hcomp).value
        eH_val = sum(a.value * b for a, b in
                     zip(tp, [h.value for h in gj.H]))
        E_t = dot(P_s, P_s).value
        G_t = dot(P_w, P_w).value
        F_t = dot(P_s, P_w).value
        fH_v = fH.coeff(0, 1)
        den = E_t * gH_val - G_t * eH_val
        data["eq14_integrand"][i] = -fH_v / den
        data["chart_residual"][i] = max(abs(E_t - 1.0), abs(F_t),
                                        abs(G_t - 1.0), abs(fH.value))
        pd = fs.point_data(*point)
        wchart = _oriented_direction(pd, cycle.tag, direction, tol)
        data["J_residual"][i] = abs(pd.L * wchart[1] ** 2
                                    + pd.M * wchart[0] * wchart[1]
                                    + pd.N * wchart[0] ** 2) \
            / max(pd.coeff_scale, 1e-300)

    cycle.nodes = data
    return data


# --------------------------------------------------------------------------
# holonomy
# --------------------------------------------------------------------------

def _require_nodes(cycle: Cycle, tol: Tolerances):
    if not cycle.nodes:
        darboux_frame_along(cycle, tol)
    return cycle.nodes


def holonomy_eq14(cycle: Cycle, tol: Tolerances = DEFAULT_TOL) -> float:
    """Chart-integral holonomy exponent (variational equation route)."""
    data = _require_nodes(cycle, tol)
    val = float(np.sum(data["weights"] * data["eq14_integrand"]))
    # doubled-node consistency check
    saved = cycle.nodes
    darboux_frame_along(cycle, tol, n_quad=2 * len(data["s"]))
    val2 = float(np.sum(cycle.nodes["weights"] * cycle.nodes["eq14_integrand"]))
    cycle.nodes = saved
    if abs(val2 - val) > max(tol.quad_check, 1e-10 * max(1.0, abs(val))) * 100.0:
        cycle.quad_flag = (f"quadrature drift {abs(val2 - val):.2e} "
                           f"between {len(data['s'])} and {2 * len(data['s'])} nodes")
    cycle.ln_pi["eq14"] = val2
    cycle.ln_pi_err["eq14"] = abs(val2 - val)
    return val2


def holonomy_eq24(cycle: Cycle, tol: Tolerances = DEFAULT_TOL) -> float:
    """Darboux-frame three-integral holonomy exponent (minimal cycles)."""
    data = _require_nodes(cycle, tol)
    K, k = data["K"], data["k"]
    if np.any(K - k <= 0.0):
        raise ValueError("K - k is not positive along the cycle; "
                         "not a valid minimal cycle")
    H2v = 0.5 * (data["b"] - 2.0 * data["k_g"] * data["Kbar"]
                 - data["tau_N"] * data["tau_B"] - data["tauprime"])
    term1 = -np.sum(data["weights"] * data["kprime"] / (K - k))
    term2 = -np.sum(data["weights"] * data["k_B"] * data["tau_B"] / (K - k))
    term3 = +np.sum(data["weights"] * H2v * data["tau"]
                    / (data["H1"] * (K - k)))
    val = float(term1 + term2 + term3)
    cycle.ln_pi["eq24"] = val
    return val


def holonomy_numeric(cycle: Cycle, tol: Tolerances = DEFAULT_TOL,
                     h0: float | None = None,
                     singularities=()) -> tuple[float, float]:
    """Return-map holonomy exponent with Richardson extrapolation.

    Traces the leaf from offsets +-h and +-h/2 along the transverse section
    at the basepoint and differences the return offsets; returns
    (ln pi'(0), error estimate).
    """
    surface = cycle.surface
    fs = FastSurface(surface)
    base = np.array(cycle.basepoint)
    d0 = _initial_direction(fs, cycle.basepoint, cycle.tag, +1, tol)
    closing = cycle.points[-1] - cycle.points[-2]
    if closing @ np.array(d0) < 0:
        d0 = (-d0[0], -d0[1])
    f0 = np.array(d0) / np.hypot(*d0)
    n0 = np.array([-f0[1], f0[0]])
    max_len = 3.0 * max(cycle.length, _domain_scale(surface))
    tol = tol.override(ode_rtol=min(tol.ode_rtol, 1e-10),
                       ode_atol=min(tol.ode_atol, 1e-12))

    h = h0 if h0 is not None else min(0.005 * cycle.length,
                                      0.02 * _domain_scale(surface))
    for _ in range(10):
        try:
            rets = {}
            for xi in (h, -h, 0.5 * h, -0.5 * h, 0.25 * h, -0.25 * h):
                ret = _return_map(surface, fs, base, f0, n0, cycle.tag, tol,
                                  xi, singularities, max_len)
                if ret is None:
                    raise TraceAbort("no return")
                rets[xi] = ret[0]
            break
        except TraceAbort:
            h *= 0.5
            if h < 1e-7 * cycle.length:
                raise ValueError("return map offsets collapsed below h_min")
    else:
        raise ValueError("return map failed at all offsets")

    # two Richardson levels on the centered differences
    D1 = (rets[h] - rets[-h]) / (2.0 * h)
    D2 = (rets[0.5 * h] - rets[-0.5 * h]) / h
    D3 = (rets[0.25 * h] - rets[-0.25 * h]) / (0.5 * h)
    R1 = (4.0 * D2 - D1) / 3.0
    R2 = (4.0 * D3 - D2) / 3.0
    deriv = (16.0 * R2 - R1) / 15.0
    err = abs(R2 - R1) / 15.0 + 1e-15
    if deriv <= 0.0:
        raise ValueError(f"return map derivative {deriv} not positive; "
                         "section orientation reversed along the cycle")
    val = math.log(deriv)
    cycle.ln_pi["numeric"] = val
    cycle.ln_pi_err["numeric"] = err / max(deriv, 1e-300)
    return val, cycle.ln_pi_err["numeric"]


def perturbation_derivative(cycle: Cycle, delta=None,
                            tol: Tolerances = DEFAULT_TOL) -> float:
    """d/deps ln pi'_eps(0) for the transverse cubic deformation.

    The deformation adds eps * delta(u) * m(v) * v^3/6 along B(u) in the
    tube chart (m = 1 near the cycle), shifting b(u) by eps*delta(u); the
    exponent responds at rate +1/2 Int tau delta / (H1 (K - k)) du.
    ``delta`` is an array over the quadrature nodes, a callable of arc
    length, or None for the canonical choice delta = -tau * H1 (which gives
    -1/2 Int tau^2/(K-k) du, strictly negative when tau is not identically
    zero: the cycle is made hyperbolic).
    """
    data = _require_nodes(cycle, tol)
    K, k = data["K"], data["k"]
    if np.any(K - k <= 0.0):
        raise ValueError("not a valid minimal cycle")
    if delta is None:
        dvals = -data["tau"] * data["H1"]
    elif callable(delta):
        dvals = np.array([delta(s) for s in data["s"]])
    else:
        dvals = np.asarray(delta, dtype=float)
    return float(0.5 * np.sum(data["weights"] * data["tau"] * dvals
                              / (data["H1"] * (K - k))))


def tau_squared_integral(cycle: Cycle, tol: Tolerances = DEFAULT_TOL) -> float:
    """Int tau^2 / (K - k) du along the cycle (>= 0; > 0 iff tau != 0)."""
    data = _require_nodes(cycle, tol)
    return float(np.sum(data["weights"] * data["tau"] ** 2
                        / (data["K"] - data["k"])))


# --------------------------------------------------------------------------
# separatrices and configuration assembly
# --------------------------------------------------------------------------

def trace_separatrix(surface: SurfaceDef, germ: SeparatrixGerm,
                     tol: Tolerances = DEFAULT_TOL,
                     singularities: list[tuple[float, float]] = ()) -> LeafTrace:
    """Continue a separatrix germ with the surface tracer.

    The blow-up hand-off point and direction come from the Lie-Cartan
    integration; re-entry into another singularity's neighborhood is left
    to the tracer (termination 'hit-singularity' marks a connection).
    """
    if not germ.ok:
        return LeafTrace(surface, "unknown", np.array([germ.exit_point]),
                         np.zeros(1), "aborted", +1, germ.note, germ)
    fs = FastSurface(surface)
    pd = fs.point_data(*germ.exit_point)
    w1, w2 = direction_pair(pd)
    dgerm = np.array(germ.exit_direction)
    pick = max([w1, w2], key=lambda w: abs(w[0] * dgerm[0] + w[1] * dgerm[1]))
    k1 = pd.normal_curvature_ratio(*w1)
    k2 = pd.normal_curvature_ratio(*w2)
    kpick = pd.normal_curvature_ratio(*pick)
    tag = "minimal" if kpick == min(k1, k2) else "maximal"
    if pick[0] * dgerm[0] + pick[1] * dgerm[1] < 0:
        pick = (-pick[0], -pick[1])
    trace = trace_leaf(surface, germ.exit_point, tag, +1, tol,
                       singularities=singularities,
                       skip_singularity=germ.singularity,
                       initial_direction=pick, germ=germ)
    return trace


@dataclass
class Configuration:
    surface: SurfaceDef
    search: SearchReport
    separatrices: list[LeafTrace]
    leaves: list[LeafTrace]
    cycles: list[Cycle]
    checklist: dict

    @property
    def singularities(self) -> list[Singularity]:
        return self.search.singularities


def _seed_grid(surface: SurfaceDef, n: int, singular_pts, tol):
    (u0, u1), (v0, v1) = surface.domain
    per_u, per_v = surface.periodic
    us = np.linspace(u0, u1, n, endpoint=False) if per_u \
        else np.linspace(u0, u1, n + 2)[1:-1]
    vs = np.linspace(v0, v1, n, endpoint=False) if per_v \
        else np.linspace(v0, v1, n + 2)[1:-1]
    seeds = []
    for u in us:
        for v in vs:
            if all(math.hypot(u - p[0], v - p[1]) > 2.0 * tol.r_exit
                   for p in singular_pts):
                seeds.append((float(u), float(v)))
    return seeds


def _dedup_cycle(cycles: list[Cycle], cand: Cycle, tol: Tolerances) -> bool:
    for cyc in cycles:
        if cyc.tag != cand.tag:
            continue
        if abs(cyc.length - cand.length) > 0.05 * max(cyc.length, cand.length):
            continue
        rel = [np.hypot(*_wrapped_rel(cand.surface, cand.basepoint, p))
               for p in cyc.points[::5]]
        if min(rel) < 0.02 * cyc.length + 10.0 * tol.tol_merge:
            return True
    return False


def build_configuration(surface: SurfaceDef, tol: Tolerances = DEFAULT_TOL,
                        grid: int = 24, seeds: int = 8,
                        holonomy: bool = True,
                        max_cycles: int = 12) -> Configuration:
    """Full principal mean configuration with a structural-stability checklist.

    Aggregates classified singularities with their fiber equilibria, both
    branches of every saddle separatrix, a seeded sample of leaves, detected
    cycles with their holonomy exponents, and the checklist: all
    singularities Darbouxian, all cycles hyperbolic, no separatrix
    connections, no inconclusive limit sets.
    """
    search = find_singularities(surface, grid, tol)
    checklist = {
        "globally_degenerate": search.degenerate_surface,
        "all_singularities_darbouxian": True,
        "all_cycles_hyperbolic": True,
        "no_separatrix_connections": True,
        "limit_sets_trivial": True,
    }
    if search.degenerate_surface:
        checklist["all_singularities_darbouxian"] = False
        return Configuration(surface, search, [], [], [], checklist)

    sing_pts = [s.location for s in search.singularities]
    separatrices: list[LeafTrace] = []
    for sing in search.singularities:
        classify_singularity(surface, sing, tol)
        fiber_equilibria(surface, sing, tol)
        if sing.dtype not in ("D1", "D2", "D3"):
            checklist["all_singularities_darbouxian"] = False
            continue
        counts = {"minimal": 0, "maximal": 0}
        for germ in separatrix_germs(surface, sing, tol):
            trace = trace_separatrix(surface, germ, tol, sing_pts)
            separatrices.append(trace)
            if trace.tag in counts:
                counts[trace.tag] += 1
            if trace.termination == "hit-singularity":
                checklist["no_separatrix_connections"] = False
            elif trace.termination == "step-limit":
                checklist["limit_sets_trivial"] = False
        sing.separatrix_count = counts
    if search.suspects:
        checklist["all_singularities_darbouxian"] = False

    leaves: list[LeafTrace] = []
    cycles: list[Cycle] = []
    for seed in _seed_grid(surface, seeds, sing_pts, tol):
        for tag in ("minimal", "maximal"):
            trace = trace_leaf(surface, seed, tag, +1, tol,
                               singularities=sing_pts)
            leaves.append(trace)
            if trace.termination == "step-limit":
                checklist["limit_sets_trivial"] = False
            if trace.termination == "closed" and len(cycles) < max_cycles:
                cyc = detect_cycle(trace, tol, sing_pts)
                if cyc is not None and not _dedup_cycle(cycles, cyc, tol):
                    cycles.append(cyc)

    for cyc in cycles:
        if not holonomy:
            continue
        try:
            holonomy_eq14(cyc, tol)
            if cyc.is_minimal():
                holonomy_eq24(cyc, tol)
            holonomy_numeric(cyc, tol, singularities=sing_pts)
        except (ValueError, TraceAbort, EvalError) as exc:
            cyc.quad_flag = cyc.quad_flag or f"holonomy failed: {exc}"
        if not cyc.hyperbolic:
            checklist["all_cycles_hyperbolic"] = False
    if not cycles:
        checklist["all_cycles_hyperbolic"] = True

    return Configuration(surface, search, separatrices, leaves, cycles,
                         checklist)
