"""Float-only order-2 evaluation pipeline for the leaf tracer.

ODE tracing needs, per evaluation point, only the values of the BDE
coefficients and the quadratic forms that label the two root directions;
none of the higher jet structure.  This module reimplements that value
pipeline on raw 6-tuples

    (f, f_u, f_v, f_uu/2, f_uv, f_vv/2)      (Taylor normalization)

with inlined arithmetic, an order of magnitude faster than the generic jet
stack.  The mean curvature vector is computed frame-free as the normal
projection of (G a_uu - 2F a_uv + E a_vv)/(2(EG - F^2)), so no normal
frame is built at all.

Consistency with the jet path is enforced by a dedicated property test.
"""

from __future__ import annotations

import math

from .expr import Bin, Call, Const, Num, SurfaceDef, Unary, Var
from .jets import JetDomainError

__all__ = ["FastSurface", "PointData"]

_ZERO = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0)


def _mul(a, b):
    a0, a1, a2, a3, a4, a5 = a
    b0, b1, b2, b3, b4, b5 = b
    return (a0 * b0,
            a0 * b1 + a1 * b0,
            a0 * b2 + a2 * b0,
            a0 * b3 + a1 * b1 + a3 * b0,
            a0 * b4 + a1 * b2 + a2 * b1 + a4 * b0,
            a0 * b5 + a2 * b2 + a5 * b0)


def _add(a, b):
    return (a[0] + b[0], a[1] + b[1], a[2] + b[2],
            a[3] + b[3], a[4] + b[4], a[5] + b[5])


def _sub(a, b):
    return (a[0] - b[0], a[1] - b[1], a[2] - b[2],
            a[3] - b[3], a[4] - b[4], a[5] - b[5])


def _neg(a):
    return (-a[0], -a[1], -a[2], -a[3], -a[4], -a[5])


def _compose(a, d0, d1, d2):
    # univariate composition with Taylor-normalized derivatives (d0, d1, d2)
    _, a1, a2, a3, a4, a5 = a
    return (d0,
            d1 * a1,
            d1 * a2,
            d1 * a3 + d2 * a1 * a1,
            d1 * a4 + 2.0 * d2 * a1 * a2,
            d1 * a5 + d2 * a2 * a2)


def _recip(a):
    x = a[0]
    if x == 0.0:
        raise JetDomainError("division by zero value")
    ix = 1.0 / x
    return _compose(a, ix, -ix * ix, ix * ix * ix)


def _pow(a, p: float):
    x = a[0]
    if float(p).is_integer():
        n = int(p)
        if n == 0:
            return (1.0, 0.0, 0.0, 0.0, 0.0, 0.0)
        base = a if n > 0 else _recip(a)
        out = base
        for _ in range(abs(n) - 1):
            out = _mul(out, base)
        return out
    if x <= 0.0:
        raise JetDomainError("non-integer power of non-positive value")
    return _compose(a, x ** p, p * x ** (p - 1.0),
                    0.5 * p * (p - 1.0) * x ** (p - 2.0))


_FN = {}
_FN["sin"] = lambda a: _compose(a, math.sin(a[0]), math.cos(a[0]), -0.5 * math.sin(a[0]))
_FN["cos"] = lambda a: _compose(a, math.cos(a[0]), -math.sin(a[0]), -0.5 * math.cos(a[0]))
_FN["exp"] = lambda a: (lambda e: _compose(a, e, e, 0.5 * e))(math.exp(a[0]))


def _log(a):
    x = a[0]
    if x <= 0.0:
        raise JetDomainError("log of non-positive value")
    return _compose(a, math.log(x), 1.0 / x, -0.5 / (x * x))


def _sqrt(a):
    x = a[0]
    if x <= 0.0:
        raise JetDomainError("sqrt of non-positive value")
    r = math.sqrt(x)
    return _compose(a, r, 0.5 / r, -0.125 / (r * x))


def _atan(a):
    x = a[0]
    w = 1.0 / (1.0 + x * x)
    return _compose(a, math.atan(x), w, -x * w * w)


_FN["log"] = _log
_FN["sqrt"] = _sqrt
_FN["atan"] = _atan


def _eval(node, u, v, consts, cache):
    hit = cache.get(id(node))
    if hit is not None:
        return hit
    kind = type(node)
    if kind is Num:
        out = (node.value, 0.0, 0.0, 0.0, 0.0, 0.0)
    elif kind is Var:
        out = u if node.name == "u" else v
    elif kind is Const:
        out = (consts[node.name], 0.0, 0.0, 0.0, 0.0, 0.0)
    elif kind is Unary:
        out = _neg(_eval(node.operand, u, v, consts, cache))
    elif kind is Bin:
        a = _eval(node.left, u, v, consts, cache)
        b = _eval(node.right, u, v, consts, cache)
        op = node.op
        if op == "+":
            out = _add(a, b)
        elif op == "-":
            out = _sub(a, b)
        elif op == "*":
            out = _mul(a, b)
        elif op == "/":
            out = _mul(a, _recip(b))
        else:
            out = _pow(a, b[0])
    else:  # Call
        if node.fn == "pow":
            a = _eval(node.args[0], u, v, consts, cache)
            b = _eval(node.args[1], u, v, consts, cache)
            out = _pow(a, b[0])
        else:
            out = _FN[node.fn](_eval(node.args[0], u, v, consts, cache))
    cache[id(node)] = out
    return out


class PointData:
    """Value-level BDE data at a point, for tracing and event tests."""

    __slots__ = ("E", "F", "G", "L", "M", "N", "eH", "fH", "gH", "Hn2")

    def __init__(self, E, F, G, L, M, N, eH, fH, gH, Hn2):
        self.E = E
        self.F = F
        self.G = G
        self.L = L
        self.M = M
        self.N = N
        self.eH = eH
        self.fH = fH
        self.gH = gH
        self.Hn2 = Hn2

    @property
    def disc(self) -> float:
        return self.M * self.M - 4.0 * self.L * self.N

    @property
    def coeff_scale(self) -> float:
        return max(abs(self.L), abs(self.M), abs(self.N))

    def normal_curvature_ratio(self, du: float, dv: float) -> float:
        """II_H(w)/I(w); monotone relabeling of the true normal curvature."""
        num = self.eH * du * du + 2.0 * self.fH * du * dv + self.gH * dv * dv
        den = self.E * du * du + 2.0 * self.F * du * dv + self.G * dv * dv
        return num / den


class FastSurface:
    """Surface wrapper with the float-only point pipeline."""

    def __init__(self, surface: SurfaceDef):
        if surface.ncomp != 4:
            raise ValueError("FastSurface expects a four-component immersion")
        self.surface = surface
        self.consts = surface.consts

    def derivs(self, u: float, v: float):
        """Second-order derivative data of all components (Taylor tuples)."""
        u, v = self.surface.wrap((u, v))
        uj = (u, 1.0, 0.0, 0.0, 0.0, 0.0)
        vj = (v, 0.0, 1.0, 0.0, 0.0, 0.0)
        cache: dict[int, tuple] = {}
        return [_eval(c, uj, vj, self.consts, cache)
                for c in self.surface.components]

    def point_data(self, u: float, v: float) -> PointData:
        d = self.derivs(u, v)
        au = [t[1] for t in d]
        av = [t[2] for t in d]
        auu = [2.0 * t[3] for t in d]
        auv = [t[4] for t in d]
        avv = [2.0 * t[5] for t in d]

        E = sum(x * x for x in au)
        F = sum(x * y for x, y in zip(au, av))
        G = sum(y * y for y in av)
        det = E * G - F * F

        # H = normal projection of (G auu - 2F auv + E avv) / (2 det)
        s = 0.5 / det
        w = [(G * a - 2.0 * F * b + E * c) * s for a, b, c in zip(auu, auv, avv)]
        pu = sum(x * y for x, y in zip(w, au))
        pv = sum(x * y for x, y in zip(w, av))
        x = (pu * G - pv * F) / det
        y = (pv * E - pu * F) / det
        H = [wi - x * a - y * b for wi, a, b in zip(w, au, av)]

        eH = sum(a * h for a, h in zip(auu, H))
        fH = sum(a * h for a, h in zip(auv, H))
        gH = sum(a * h for a, h in zip(avv, H))

        L = F * gH - fH * G
        M = E * gH - eH * G
        N = E * fH - F * eH
        Hn2 = sum(h * h for h in H)
        return PointData(E, F, G, L, M, N, eH, fH, gH, Hn2)
