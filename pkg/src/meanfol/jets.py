"""Truncated bivariate Taylor arithmetic (forward-mode jets).

A ``Jet`` of order n holds the Taylor coefficients of a smooth function of
two chart variables (u, v) around a base point, up to total degree n:

    f(u0 + x, v0 + y) = sum_{i+j <= n}  c[(i,j)] * x^i * y^j

so ``c[(i,j)] = (d^{i+j} f / du^i dv^j) / (i! j!)``.  All arithmetic is
exact truncated-polynomial algebra: sums, products, quotients and the
analytic catalog functions (sin, cos, exp, log, sqrt, atan, pow) are closed
on jets, which makes every derived geometric quantity carry its own exact
partial derivatives down the whole pipeline.

Orders 2..4 share one implementation; order 2 is the cheap path used inside
ODE tracing, order 4 feeds classification and holonomy integrands.
"""

from __future__ import annotations

import math

__all__ = [
    "Jet",
    "JetDomainError",
    "variables",
    "constant",
    "dot",
    "cross4",
    "compose2",
    "invert2",
    "vec_add",
    "vec_sub",
    "vec_scale",
    "vec_norm2",
]

MAX_ORDER = 4


class JetDomainError(ValueError):
    """Raised when an analytic function is evaluated outside its domain."""


def _monomials(order: int) -> list[tuple[int, int]]:
    return [(i, d - i) for d in range(order + 1) for i in range(d, -1, -1)]


# Per-order tables: monomial list, (i,j)->index map, and the flat product
# table [(out, ia, ib), ...] realizing truncated multiplication.
_MONOS: dict[int, list[tuple[int, int]]] = {}
_INDEX: dict[int, dict[tuple[int, int], int]] = {}
_MULT: dict[int, list[tuple[int, int, int]]] = {}

for _n in range(0, MAX_ORDER + 1):
    monos = _monomials(_n)
    index = {m: k for k, m in enumerate(monos)}
    table = []
    for ia, (i1, j1) in enumerate(monos):
        for ib, (i2, j2) in enumerate(monos):
            if i1 + j1 + i2 + j2 <= _n:
                table.append((index[(i1 + i2, j1 + j2)], ia, ib))
    _MONOS[_n] = monos
    _INDEX[_n] = index
    _MULT[_n] = table


def _nterms(order: int) -> int:
    return (order + 1) * (order + 2) // 2


class Jet:
    __slots__ = ("order", "c")

    def __init__(self, order: int, coeffs: list[float]):
        self.order = order
        self.c = coeffs

    # -- constructors -----------------------------------------------------

    @staticmethod
    def const(value: float, order: int) -> "Jet":
        c = [0.0] * _nterms(order)
        c[0] = float(value)
        return Jet(order, c)

    @staticmethod
    def var(value: float, which: int, order: int) -> "Jet":
        """Jet of the chart variable itself: which=0 for u, 1 for v."""
        c = [0.0] * _nterms(order)
        c[0] = float(value)
        c[1 + which] = 1.0
        return Jet(order, c)

    # -- basic ring ops ----------------------------------------------------
    # binary ops between jets of different orders truncate to the lower
    # order; jets are exact to their carried order, so the result is too

    def _align(self, other: "Jet") -> tuple["Jet", "Jet"]:
        if self.order == other.order:
            return self, other
        if self.order > other.order:
            return self.truncate(other.order), other
        return self, other.truncate(self.order)

    def __add__(self, other):
        if isinstance(other, Jet):
            if self.order == 2 and other.order == 2:
                a, b = self.c, other.c
                return Jet(2, [a[0] + b[0], a[1] + b[1], a[2] + b[2],
                               a[3] + b[3], a[4] + b[4], a[5] + b[5]])
            x, y = self._align(other)
            return Jet(x.order, [a + b for a, b in zip(x.c, y.c)])
        c = self.c[:]
        c[0] += other
        return Jet(self.order, c)

    __radd__ = __add__

    def __sub__(self, other):
        if isinstance(other, Jet):
            x, y = self._align(other)
            return Jet(x.order, [a - b for a, b in zip(x.c, y.c)])
        c = self.c[:]
        c[0] -= other
        return Jet(self.order, c)

    def __rsub__(self, other):
        c = [-a for a in self.c]
        c[0] += other
        return Jet(self.order, c)

    def __neg__(self):
        return Jet(self.order, [-a for a in self.c])

    def __mul__(self, other):
        if isinstance(other, Jet):
            if self.order == 2 and other.order == 2:
                # unrolled truncated product in the monomial order
                # (0,0) (1,0) (0,1) (2,0) (1,1) (0,2)
                a, b = self.c, other.c
                a0, a1, a2 = a[0], a[1], a[2]
                b0, b1, b2 = b[0], b[1], b[2]
                return Jet(2, [
                    a0 * b0,
                    a0 * b1 + a1 * b0,
                    a0 * b2 + a2 * b0,
                    a0 * b[3] + a1 * b1 + a[3] * b0,
                    a0 * b[4] + a1 * b2 + a2 * b1 + a[4] * b0,
                    a0 * b[5] + a2 * b2 + a[5] * b0,
                ])
            x, y = self._align(other)
            a, b = x.c, y.c
            out = [0.0] * len(a)
            for k, ia, ib in _MULT[x.order]:
                out[k] += a[ia] * b[ib]
            return Jet(x.order, out)
        return Jet(self.order, [a * other for a in self.c])

    __rmul__ = __mul__

    def __truediv__(self, other):
        if isinstance(other, Jet):
            return self * other._reciprocal()
        return Jet(self.order, [a / other for a in self.c])

    def __rtruediv__(self, other):
        return self._reciprocal() * other

    # -- analytic functions ------------------------------------------------

    def _compose(self, derivs: list[float]) -> "Jet":
        """Univariate composition: derivs[k] = f^(k)(value)/k!."""
        n = self.order
        h = self.c[:]
        h[0] = 0.0
        hj = Jet(n, h)
        out = Jet.const(derivs[0], n)
        power = None
        for k in range(1, n + 1):
            power = hj if power is None else power * hj
            out = out + power * derivs[k]
        return out

    def _reciprocal(self) -> "Jet":
        x = self.c[0]
        if x == 0.0:
            raise JetDomainError("division by a jet with zero value")
        d = [1.0 / x]
        for k in range(1, self.order + 1):
            d.append(-d[-1] / x)
        return self._compose(d)

    def sqrt(self) -> "Jet":
        x = self.c[0]
        if x <= 0.0:
            raise JetDomainError("sqrt of a jet with non-positive value")
        r = math.sqrt(x)
        # d_k = binom(1/2, k) x^{1/2-k}
        d = [r]
        b = 1.0
        for k in range(1, self.order + 1):
            b *= (0.5 - (k - 1)) / k
            d.append(b * r / x ** k)
        return self._compose(d)

    def exp(self) -> "Jet":
        e = math.exp(self.c[0])
        d = [e]
        for k in range(1, self.order + 1):
            d.append(d[-1] / k)
        return self._compose(d)

    def log(self) -> "Jet":
        x = self.c[0]
        if x <= 0.0:
            raise JetDomainError("log of a jet with non-positive value")
        d = [math.log(x)]
        for k in range(1, self.order + 1):
            d.append((-1.0) ** (k - 1) / (k * x ** k))
        return self._compose(d)

    def sin(self) -> "Jet":
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        cyc = [s, c, -s, -c]
        d = [cyc[k % 4] / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(d)

    def cos(self) -> "Jet":
        s, c = math.sin(self.c[0]), math.cos(self.c[0])
        cyc = [c, -s, -c, s]
        d = [cyc[k % 4] / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(d)

    def atan(self) -> "Jet":
        x = self.c[0]
        w = 1.0 / (1.0 + x * x)
        raw = [math.atan(x), w, -2.0 * x * w * w,
               (6.0 * x * x - 2.0) * w ** 3, 24.0 * x * (1.0 - x * x) * w ** 4]
        d = [raw[k] / math.factorial(k) for k in range(self.order + 1)]
        return self._compose(d)

    def pow(self, exponent) -> "Jet":
        if isinstance(exponent, Jet):
            if any(abs(a) > 0.0 for a in exponent.c[1:]):
                return (self.log() * exponent).exp()
            exponent = exponent.c[0]
        if float(exponent).is_integer():
            return self._ipow(int(exponent))
        x = self.c[0]
        if x <= 0.0:
            raise JetDomainError("non-integer power of a non-positive jet")
        d = [x ** exponent]
        b = 1.0
        for k in range(1, self.order + 1):
            b *= (exponent - (k - 1)) / k
            d.append(b * x ** (exponent - k))
        return self._compose(d)

    def _ipow(self, n: int) -> "Jet":
        if n == 0:
            return Jet.const(1.0, self.order)
        if n < 0:
            return self._reciprocal()._ipow(-n)
        result = None
        base = self
        while n:
            if n & 1:
                result = base if result is None else result * base
            n >>= 1
            if n:
                base = base * base
        return result

    # -- coefficient access --------------------------------------------------

    @property
    def value(self) -> float:
        return self.c[0]

    def coeff(self, i: int, j: int) -> float:
        """Taylor coefficient of x^i y^j (zero beyond the truncation order)."""
        if i + j > self.order:
            return 0.0
        return self.c[_INDEX[self.order][(i, j)]]

    def deriv(self, i: int, j: int) -> float:
        """Partial derivative d^{i+j} f / du^i dv^j at the base point."""
        return self.coeff(i, j) * math.factorial(i) * math.factorial(j)

    def partial(self, which: int) -> "Jet":
        """Jet of df/du (which=0) or df/dv (which=1), one order lower."""
        n = self.order - 1
        if n < 0:
            raise ValueError("cannot differentiate an order-0 jet")
        out = [0.0] * _nterms(n)
        idx = _INDEX[n]
        for (i, j), k in _INDEX[self.order].items():
            if which == 0 and i >= 1 and (i - 1) + j <= n:
                out[idx[(i - 1, j)]] += i * self.c[k]
            elif which == 1 and j >= 1 and i + (j - 1) <= n:
                out[idx[(i, j - 1)]] += j * self.c[k]
        return Jet(n, out)

    def truncate(self, order: int) -> "Jet":
        if order == self.order:
            return self
        if order > self.order:
            raise ValueError("cannot extend a jet to higher order")
        idx = _INDEX[self.order]
        return Jet(order, [self.c[idx[m]] for m in _MONOS[order]])

    def eval(self, x: float, y: float) -> float:
        """Evaluate the truncated polynomial at displacement (x, y)."""
        return sum(ck * x ** i * y ** j
                   for (i, j), ck in zip(_MONOS[self.order], self.c))

    def __repr__(self):
        return f"Jet(order={self.order}, value={self.c[0]:.6g})"


def variables(u0: float, v0: float, order: int = MAX_ORDER) -> tuple[Jet, Jet]:
    return Jet.var(u0, 0, order), Jet.var(v0, 1, order)


def constant(value: float, order: int = MAX_ORDER) -> Jet:
    return Jet.const(value, order)


# -- jet-valued vectors in R^4 (plain lists of Jets) ------------------------

def dot(a: list[Jet], b: list[Jet]) -> Jet:
    acc = a[0] * b[0]
    for x, y in zip(a[1:], b[1:]):
        acc = acc + x * y
    return acc


def vec_add(a, b):
    return [x + y for x, y in zip(a, b)]


def vec_sub(a, b):
    return [x - y for x, y in zip(a, b)]


def vec_scale(a, s):
    return [x * s for x in a]


def vec_norm2(a) -> Jet:
    return dot(a, a)


def compose2(f: Jet, U: Jet, V: Jet) -> Jet:
    """Substitute two-variable jets into a jet: (s,t) -> f(U(s,t), V(s,t)).

    U and V must have zero constant term (displacement series); the result
    is exact to the common truncation order.
    """
    n = min(f.order, U.order, V.order)
    if abs(U.c[0]) > 0 or abs(V.c[0]) > 0:
        raise ValueError("compose2 expects zero-constant displacement series")
    fn = f if f.order == n else f.truncate(n)
    Un = U if U.order == n else U.truncate(n)
    Vn = V if V.order == n else V.truncate(n)
    upow = [Jet.const(1.0, n)]
    vpow = [Jet.const(1.0, n)]
    for _ in range(n):
        upow.append(upow[-1] * Un)
        vpow.append(vpow[-1] * Vn)
    acc = Jet.const(0.0, n)
    for (i, j), k in _INDEX[n].items():
        ck = fn.c[k]
        if ck != 0.0:
            acc = acc + (upow[i] * vpow[j]) * ck
    return acc


def invert2(f1: Jet, f2: Jet) -> tuple[Jet, Jet]:
    """Inverse series of a jet map with zero value and invertible linear part.

    Returns (U, V) with f1(U, V) = s, f2(U, V) = t to the truncation order.
    """
    n = min(f1.order, f2.order)
    a, b = f1.coeff(1, 0), f1.coeff(0, 1)
    c, d = f2.coeff(1, 0), f2.coeff(0, 1)
    det = a * d - b * c
    if det == 0.0:
        raise ValueError("linear part not invertible")
    ia, ib, ic, id_ = d / det, -b / det, -c / det, a / det
    S = Jet.var(0.0, 0, n)
    T = Jet.var(0.0, 1, n)
    U = S * ia + T * ib
    V = S * ic + T * id_
    for _ in range(n):
        r1 = compose2(f1, U, V) - S
        r2 = compose2(f2, U, V) - T
        U = U - (r1 * ia + r2 * ib)
        V = V - (r1 * ic + r2 * id_)
    return U, V


def cross4(a: list[Jet], b: list[Jet], c: list[Jet]) -> list[Jet]:
    """Triple wedge in R^4: the vector d with <d, x> = det(rows a, b, c, x).

    For the standard basis, cross4(e1, e2, e3) = e4, so a frame
    (a, b, c, cross4(a, b, c)) is always positively oriented.
    """
    # 2x2 minors of rows (a, b) over column pairs
    m = {}
    for p in range(4):
        for q in range(p + 1, 4):
            m[(p, q)] = a[p] * b[q] - a[q] * b[p]
    # cofactor expansion of det(a,b,c,e_l) along the last row
    d0 = -(c[1] * m[(2, 3)] - c[2] * m[(1, 3)] + c[3] * m[(1, 2)])
    d1 = c[0] * m[(2, 3)] - c[2] * m[(0, 3)] + c[3] * m[(0, 2)]
    d2 = -(c[0] * m[(1, 3)] - c[1] * m[(0, 3)] + c[3] * m[(0, 1)])
    d3 = c[0] * m[(1, 2)] - c[1] * m[(0, 2)] + c[2] * m[(0, 1)]
    return [d0, d1, d2, d3]
