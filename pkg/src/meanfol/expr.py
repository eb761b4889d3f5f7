"""Surface definition language: parser, AST evaluation, catalog, lifts.

A surface is four expressions in the chart variables u, v plus a
rectangular domain, e.g.::

    # unit plane patch
    x1 = u; x2 = v; x3 = 0; x4 = 0;
    domain u in [-1, 1], v in [-1, 1]

Statements end with ';' or a newline, comments start with '#'.  Constants
are declared with ``const name = <expr>;`` (expressions over numbers and
previously declared constants only).  The domain line is mandatory;
``periodic`` directly after ``domain`` marks both axes periodic, while
``periodic`` in front of a single axis marks just that one.

Grammar of expressions: ``+ - * / ^``, unary minus, parentheses, calls of
sin, cos, exp, log, sqrt, atan, pow.  ``pi`` and ``e`` are builtin.

Three-component definitions (x1..x3) describe a surface in R^3 and are
only accepted as input to the stereographic lift.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field

from .jets import Jet, JetDomainError

__all__ = [
    "ParseError",
    "EvalError",
    "NonImmersionError",
    "SurfaceDef",
    "parse_surface",
    "jet_at",
    "evaluate",
    "lift_stereographic",
    "catalog_surface",
    "catalog_names",
    "resolve_surface",
]

FUNCTIONS = {"sin": 1, "cos": 1, "exp": 1, "log": 1, "sqrt": 1, "atan": 1, "pow": 2}
BUILTIN_CONSTS = {"pi": math.pi, "e": math.e}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} (line {line}, column {col})")
        self.line = line
        self.col = col


class EvalError(ValueError):
    pass


class NonImmersionError(EvalError):
    """The degree-1 block of the jet has rank < 2 at this point."""


# --------------------------------------------------------------------------
# AST
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class Num:
    value: float


@dataclass(frozen=True)
class Var:
    name: str  # 'u' or 'v'


@dataclass(frozen=True)
class Const:
    name: str


@dataclass(frozen=True)
class Unary:
    op: str
    operand: "Node"


@dataclass(frozen=True)
class Bin:
    op: str
    left: "Node"
    right: "Node"


@dataclass(frozen=True)
class Call:
    fn: str
    args: tuple["Node", ...]


Node = Num | Var | Const | Unary | Bin | Call

# hash-consing: structurally identical subtrees become the same object, so
# per-evaluation memoization (by id) collapses shared work such as the common
# denominator of a stereographic lift
_INTERN: dict[Node, Node] = {}


def _intern(node: Node) -> Node:
    return _INTERN.setdefault(node, node)


def eval_node(node: Node, u: Jet | float, v: Jet | float,
              consts: dict[str, float], cache: dict[int, object] | None = None):
    """Evaluate an AST over jets (or plain floats, which Jet ops accept)."""
    if cache is not None:
        hit = cache.get(id(node))
        if hit is not None:
            return hit
    match node:
        case Num(value):
            return value
        case Var(name):
            return u if name == "u" else v
        case Const(name):
            return consts[name]
        case Unary(_, operand):
            out = -eval_node(operand, u, v, consts, cache)
        case Bin(op, left, right):
            a = eval_node(left, u, v, consts, cache)
            b = eval_node(right, u, v, consts, cache)
            if op == "+":
                out = a + b
            elif op == "-":
                out = a - b
            elif op == "*":
                out = a * b
            elif op == "/":
                out = a / b
            elif isinstance(a, Jet):
                out = a.pow(b)
            elif isinstance(b, Jet):
                out = Jet.const(a, b.order).pow(b)
            else:
                out = float(a) ** float(b)
        case Call(fn, args):
            vals = [eval_node(arg, u, v, consts, cache) for arg in args]
            if fn == "pow":
                a, b = vals
                if isinstance(a, Jet):
                    out = a.pow(b)
                elif isinstance(b, Jet):
                    out = Jet.const(a, b.order).pow(b)
                else:
                    out = float(a) ** float(b)
            else:
                x = vals[0]
                out = getattr(x, fn)() if isinstance(x, Jet) else getattr(math, fn)(x)
        case _:
            raise TypeError(f"unknown AST node {node!r}")
    if cache is not None:
        cache[id(node)] = out
    return out


def free_vars(node: Node) -> set[str]:
    match node:
        case Var(name):
            return {name}
        case Unary(_, operand):
            return free_vars(operand)
        case Bin(_, left, right):
            return free_vars(left) | free_vars(right)
        case Call(_, args):
            out: set[str] = set()
            for a in args:
                out |= free_vars(a)
            return out
    return set()


# small AST builders used by the lift and by programmatic surface edits
def ast_num(x: float) -> Node:
    return _intern(Num(float(x)))


def ast_add(a: Node, b: Node) -> Node:
    return _intern(Bin("+", a, b))


def ast_sub(a: Node, b: Node) -> Node:
    return _intern(Bin("-", a, b))


def ast_mul(a: Node, b: Node) -> Node:
    return _intern(Bin("*", a, b))


def ast_div(a: Node, b: Node) -> Node:
    return _intern(Bin("/", a, b))


def ast_subst(node: Node, u_node: Node, v_node: Node) -> Node:
    """Substitute expressions for the chart variables u, v."""
    match node:
        case Var(name):
            return u_node if name == "u" else v_node
        case Unary(op, operand):
            return _intern(Unary(op, ast_subst(operand, u_node, v_node)))
        case Bin(op, left, right):
            return _intern(Bin(op, ast_subst(left, u_node, v_node),
                               ast_subst(right, u_node, v_node)))
        case Call(fn, args):
            return _intern(Call(fn, tuple(ast_subst(a, u_node, v_node)
                                          for a in args)))
    return node


# --------------------------------------------------------------------------
# tokenizer / parser
# --------------------------------------------------------------------------

_TOKEN_RE = re.compile(
    r"\s*(?:(?P<num>\d+\.\d*(?:[eE][+-]?\d+)?|\.\d+(?:[eE][+-]?\d+)?|\d+(?:[eE][+-]?\d+)?)"
    r"|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
    r"|(?P<op>[-+*/^(),;=\[\]]))"
)


@dataclass
class _Token:
    kind: str  # 'num', 'name', 'op', 'end'
    text: str
    line: int
    col: int


def _tokenize(source: str) -> list[_Token]:
    tokens: list[_Token] = []
    for lineno, raw in enumerate(source.splitlines(), start=1):
        line = raw.split("#", 1)[0]
        pos = 0
        while pos < len(line):
            if line[pos].isspace():
                pos += 1
                continue
            m = _TOKEN_RE.match(line, pos)
            if not m or m.start() != pos:
                raise ParseError(f"illegal character {line[pos]!r}", lineno, pos + 1)
            kind = m.lastgroup
            text = m.group(kind)
            tokens.append(_Token(kind, text, lineno, m.start(kind) + 1))
            pos = m.end()
        tokens.append(_Token("end", ";", lineno, len(raw) + 1))
    tokens.append(_Token("end", "", len(source.splitlines()) + 1, 1))
    return tokens


class _Parser:
    """Recursive-descent parser over the statement token stream."""

    def __init__(self, tokens: list[_Token], known_consts: dict[str, float]):
        self.tokens = tokens
        self.pos = 0
        self.consts = dict(known_consts)
        self.allow_vars = True

    def peek(self) -> _Token:
        return self.tokens[self.pos]

    def next(self) -> _Token:
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def expect_op(self, op: str) -> _Token:
        tok = self.next()
        if tok.kind not in ("op", "end") or (tok.kind == "op" and tok.text != op) or (
            tok.kind == "end" and op != ";"
        ):
            raise ParseError(f"expected {op!r}, found {tok.text!r}", tok.line, tok.col)
        return tok

    def at_statement_end(self) -> bool:
        tok = self.peek()
        return tok.kind == "end" or (tok.kind == "op" and tok.text == ";")

    def skip_statement_ends(self):
        while self.pos < len(self.tokens) - 1 and self.at_statement_end():
            self.next()

    def done(self) -> bool:
        return self.pos >= len(self.tokens) - 1

    # expression grammar: sum > term > unary > power > atom
    def parse_expr(self) -> Node:
        node = self.parse_term()
        while self.peek().kind == "op" and self.peek().text in "+-":
            op = self.next().text
            node = _intern(Bin(op, node, self.parse_term()))
        return node

    def parse_term(self) -> Node:
        node = self.parse_unary()
        while self.peek().kind == "op" and self.peek().text in "*/":
            op = self.next().text
            node = _intern(Bin(op, node, self.parse_unary()))
        return node

    def parse_unary(self) -> Node:
        tok = self.peek()
        if tok.kind == "op" and tok.text == "-":
            self.next()
            return _intern(Unary("-", self.parse_unary()))
        if tok.kind == "op" and tok.text == "+":
            self.next()
            return self.parse_unary()
        return self.parse_power()

    def parse_power(self) -> Node:
        base = self.parse_atom()
        if self.peek().kind == "op" and self.peek().text == "^":
            self.next()
            return _intern(Bin("^", base, self.parse_unary()))  # right associative
        return base

    def parse_atom(self) -> Node:
        tok = self.next()
        if tok.kind == "num":
            return _intern(Num(float(tok.text)))
        if tok.kind == "op" and tok.text == "(":
            node = self.parse_expr()
            self.expect_op(")")
            return node
        if tok.kind == "name":
            name = tok.text
            if self.peek().kind == "op" and self.peek().text == "(":
                if name not in FUNCTIONS:
                    raise ParseError(f"unknown function {name!r}", tok.line, tok.col)
                self.next()
                args = [self.parse_expr()]
                while self.peek().kind == "op" and self.peek().text == ",":
                    self.next()
                    args.append(self.parse_expr())
                self.expect_op(")")
                if len(args) != FUNCTIONS[name]:
                    raise ParseError(
                        f"{name} takes {FUNCTIONS[name]} argument(s), got {len(args)}",
                        tok.line, tok.col)
                return _intern(Call(name, tuple(args)))
            if name in ("u", "v"):
                if not self.allow_vars:
                    raise ParseError("u, v not allowed in this context", tok.line, tok.col)
                return _intern(Var(name))
            if name in self.consts or name in BUILTIN_CONSTS:
                return _intern(Const(name))
            raise ParseError(f"unknown identifier {name!r}", tok.line, tok.col)
        raise ParseError(f"unexpected token {tok.text!r}", tok.line, tok.col)


# --------------------------------------------------------------------------
# surface definitions
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class SurfaceDef:
    """Immutable parsed surface: component ASTs, domain, periodicity, constants."""

    components: tuple[Node, ...]
    domain: tuple[tuple[float, float], tuple[float, float]]
    periodic: tuple[bool, bool]
    consts: dict[str, float] = field(default_factory=dict)
    name: str = ""
    source: str = ""

    @property
    def ncomp(self) -> int:
        return len(self.components)

    def wrap(self, point: tuple[float, float]) -> tuple[float, float]:
        out = []
        for x, (lo, hi), per in zip(point, self.domain, self.periodic):
            if per:
                x = lo + (x - lo) % (hi - lo)
            out.append(x)
        return tuple(out)

    def contains(self, point: tuple[float, float], pad: float = 1e-9) -> bool:
        for x, (lo, hi), per in zip(point, self.domain, self.periodic):
            if per:
                continue
            if x < lo - pad * (hi - lo) or x > hi + pad * (hi - lo):
                return False
        return True

    def with_components(self, components: tuple[Node, ...], name: str = "") -> "SurfaceDef":
        return SurfaceDef(components, self.domain, self.periodic,
                          dict(self.consts), name or self.name, "")


def parse_surface(source: str, name: str = "") -> SurfaceDef:
    """Parse a surface definition; raises ParseError with line/column info."""
    tokens = _tokenize(source)
    parser = _Parser(tokens, {})
    comps: dict[int, Node] = {}
    domain = None
    periodic = None

    while not parser.done():
        parser.skip_statement_ends()
        if parser.done():
            break
        tok = parser.peek()
        if tok.kind != "name":
            raise ParseError(f"expected a statement, found {tok.text!r}", tok.line, tok.col)
        if tok.text == "const":
            parser.next()
            name_tok = parser.next()
            if name_tok.kind != "name":
                raise ParseError("expected constant name after 'const'",
                                 name_tok.line, name_tok.col)
            if name_tok.text in ("u", "v") or name_tok.text in FUNCTIONS:
                raise ParseError(f"reserved name {name_tok.text!r}",
                                 name_tok.line, name_tok.col)
            parser.expect_op("=")
            parser.allow_vars = False
            node = parser.parse_expr()
            parser.allow_vars = True
            consts = dict(parser.consts)
            consts.update(BUILTIN_CONSTS)
            parser.consts[name_tok.text] = float(eval_node(node, 0.0, 0.0, consts))
        elif tok.text == "domain":
            parser.next()
            domain, periodic = _parse_domain(parser, tok)
        elif re.fullmatch(r"x[1-4]", tok.text):
            idx = int(tok.text[1]) - 1
            parser.next()
            parser.expect_op("=")
            comps[idx] = parser.parse_expr()
        else:
            raise ParseError(f"unknown statement {tok.text!r}", tok.line, tok.col)
        if not parser.done() and not parser.at_statement_end():
            bad = parser.peek()
            raise ParseError(f"unexpected token {bad.text!r}", bad.line, bad.col)

    if domain is None:
        raise ParseError("missing 'domain' statement", len(source.splitlines()) + 1, 1)
    if sorted(comps) == [0, 1, 2, 3]:
        n = 4
    elif sorted(comps) == [0, 1, 2]:
        n = 3
    else:
        raise ParseError("surface needs components x1..x4 (or x1..x3 for lifts)", 1, 1)

    (u0, u1), (v0, v1) = domain
    if not (u0 < u1 and v0 < v1):
        raise ParseError("degenerate domain (need a < b on both axes)", 1, 1)
    for x in (u0, u1, v0, v1):
        if not math.isfinite(x):
            raise ParseError("unbounded domain", 1, 1)

    consts = dict(BUILTIN_CONSTS)
    consts.update(parser.consts)
    return SurfaceDef(tuple(comps[i] for i in range(n)), domain, periodic,
                      consts, name=name, source=source)


def _parse_domain(parser: _Parser, tok: _Token):
    # 'periodic' binds to the axis it precedes:
    #   domain periodic u in [0, 2*pi], v in [-1, 1]          -> u only
    #   domain periodic u in [...], periodic v in [...]       -> both

    def axis(expected: str) -> tuple[tuple[float, float], bool]:
        per = False
        t = parser.next()
        if t.kind == "name" and t.text == "periodic":
            per = True
            t = parser.next()
        if t.kind != "name" or t.text != expected:
            raise ParseError(f"expected axis {expected!r} in domain", t.line, t.col)
        t = parser.next()
        if t.kind != "name" or t.text != "in":
            raise ParseError("expected 'in' in domain", t.line, t.col)
        parser.expect_op("[")
        parser.allow_vars = False
        lo_node = parser.parse_expr()
        parser.expect_op(",")
        hi_node = parser.parse_expr()
        parser.allow_vars = True
        parser.expect_op("]")
        consts = dict(BUILTIN_CONSTS)
        consts.update(parser.consts)
        lo = float(eval_node(lo_node, 0.0, 0.0, consts))
        hi = float(eval_node(hi_node, 0.0, 0.0, consts))
        return (lo, hi), per

    (urange, uper) = axis("u")
    parser.expect_op(",")
    (vrange, vper) = axis("v")
    return (urange, vrange), (uper, vper)


# --------------------------------------------------------------------------
# evaluation
# --------------------------------------------------------------------------

def jet_at(surface: SurfaceDef, point: tuple[float, float], order: int = 4,
           check_immersion: bool = True, tol_immersion: float = 1e-10) -> list[Jet]:
    """Order-n jet of all components at a (wrapped) parameter point.

    Raises EvalError outside a non-periodic domain and NonImmersionError when
    the degree-1 block has rank < 2.
    """
    u0, v0 = surface.wrap(point)
    if not surface.contains((u0, v0)):
        raise EvalError(f"point {point} outside surface domain {surface.domain}")
    uj = Jet.var(u0, 0, order)
    vj = Jet.var(v0, 1, order)
    jets = []
    cache: dict[int, object] = {}
    for compn in surface.components:
        val = eval_node(compn, uj, vj, surface.consts, cache)
        if not isinstance(val, Jet):
            val = Jet.const(float(val), order)
        jets.append(val)
    if check_immersion:
        du = [j.coeff(1, 0) for j in jets]
        dv = [j.coeff(0, 1) for j in jets]
        ee = sum(x * x for x in du)
        gg = sum(x * x for x in dv)
        ff = sum(x * y for x, y in zip(du, dv))
        det = ee * gg - ff * ff
        if det <= tol_immersion * max(1.0, ee, gg) ** 2:
            raise NonImmersionError(
                f"degree-1 block rank < 2 at {point} (EG - F^2 = {det:.3e})")
    return jets


def evaluate(surface: SurfaceDef, point: tuple[float, float]) -> list[float]:
    """Plain position in R^4 (or R^3) at a parameter point."""
    return [j.value for j in
            jet_at(surface, point, order=2, check_immersion=False)]


# --------------------------------------------------------------------------
# stereographic lift R^3 -> S^3 in R^4
# --------------------------------------------------------------------------

def lift_stereographic(surface3: SurfaceDef) -> SurfaceDef:
    """Compose an R^3 immersion with the inverse stereographic projection.

    Uses the unit sphere S^3 with projection pole (0, 0, 0, 1):
        (x, y, z) -> (2x, 2y, 2z, |p|^2 - 1) / (|p|^2 + 1)
    so the image always satisfies |X| = 1 and misses the pole.
    """
    if surface3.ncomp != 3:
        raise ValueError("stereographic lift expects a three-component surface")
    x, y, z = surface3.components
    w = ast_add(ast_add(ast_mul(x, x), ast_mul(y, y)), ast_mul(z, z))
    den = ast_add(w, ast_num(1.0))
    comps = (
        ast_div(ast_mul(ast_num(2.0), x), den),
        ast_div(ast_mul(ast_num(2.0), y), den),
        ast_div(ast_mul(ast_num(2.0), z), den),
        ast_div(ast_sub(w, ast_num(1.0)), den),
    )
    return SurfaceDef(comps, surface3.domain, surface3.periodic,
                      dict(surface3.consts),
                      name=f"lift({surface3.name})" if surface3.name else "lift",
                      source="")


# --------------------------------------------------------------------------
# catalog
# --------------------------------------------------------------------------

PLANE_SRC = """
x1 = u; x2 = v; x3 = 0; x4 = 0
domain u in [-1, 1], v in [-1, 1]
"""

CLIFFORD_SRC = """
const s2 = sqrt(2)
x1 = cos(u)/s2; x2 = sin(u)/s2; x3 = cos(v)/s2; x4 = sin(v)/s2
domain periodic u in [0, 2*pi], periodic v in [0, 2*pi]
"""


def _flat_torus_src(r1: float, r2: float) -> str:
    return f"""
const R1 = {r1!r}; const R2 = {r2!r}
x1 = R1*cos(u); x2 = R1*sin(u); x3 = R2*cos(v); x4 = R2*sin(v)
domain periodic u in [0, 2*pi], periodic v in [0, 2*pi]
"""


def _graph_monge_src(r1, s1, t1, a1, d1, b1, c1, r2, s2, t2, a2, d2, b2, c2,
                     half: float = 0.4) -> str:
    h1 = (f"({r1!r}/2)*u^2 + {s1!r}*u*v + ({t1!r}/2)*v^2 + ({a1!r}/6)*u^3 "
          f"+ ({d1!r}/2)*u^2*v + ({b1!r}/2)*u*v^2 + ({c1!r}/6)*v^3")
    h2 = (f"({r2!r}/2)*u^2 + {s2!r}*u*v + ({t2!r}/2)*v^2 + ({a2!r}/6)*u^3 "
          f"+ ({d2!r}/2)*u^2*v + ({b2!r}/2)*u*v^2 + ({c2!r}/6)*v^3")
    return f"""
x1 = u; x2 = v
x3 = {h1}
x4 = {h2}
domain u in [{-half!r}, {half!r}], v in [{-half!r}, {half!r}]
"""


def _ellipsoid_r3_src(a: float, b: float, c: float,
                      phi_min: float = 0.35) -> str:
    # spherical chart, poles excluded; the four umbilics of a triaxial
    # ellipsoid with middle semi-axis on y sit on theta in {0, pi}
    return f"""
const A = {a!r}; const B = {b!r}; const C = {c!r}
x1 = A*sin(v)*cos(u)
x2 = B*sin(v)*sin(u)
x3 = C*cos(v)
domain periodic u in [0, 2*pi], v in [{phi_min!r}, pi - {phi_min!r}]
"""


def _twisted_tube_src(m: int, k0: float, b0: float, a0: float = 0.0,
                      k1: float = 0.0, b1: float = 0.0,
                      vmax: float = 0.2) -> str:
    """Tube around a circle with a normal frame twisting m times.

    Built directly in cycle-adapted form: v = 0 is a minimal principal mean
    cycle with curvatures k = 1 along it and K(u) = k0 + k1*cos(u) across,
    frame torsion tau = m, and third-order transverse coefficients a(u) = a0
    and b(u) = b0 + b1*cos(u).
    """
    if int(m) != m:
        raise ValueError("twist count m must be an integer")
    ku = f"({k0!r} + {k1!r}*cos(u))"
    bu = f"({b0!r} + {b1!r}*cos(u))"
    return f"""
const M = {int(m)!r}
x1 = cos(u)*(1 - {ku}*v^2/2 - ({a0!r}/6)*v^3)
x2 = sin(u)*(1 - {ku}*v^2/2 - ({a0!r}/6)*v^3)
x3 = v*cos(M*u) + ({bu}/6)*v^3*sin(M*u)
x4 = v*sin(M*u) - ({bu}/6)*v^3*cos(M*u)
domain periodic u in [0, 2*pi], v in [{-vmax!r}, {vmax!r}]
"""


def _sphere_r3_src(radius: float = 1.0) -> str:
    return f"""
const R = {radius!r}
x1 = u; x2 = v; x3 = 0*u
domain u in [{-radius / 2!r}, {radius / 2!r}], v in [{-radius / 2!r}, {radius / 2!r}]
"""


def catalog_names() -> list[str]:
    return ["plane", "clifford_torus", "flat_torus", "graph_monge",
            "lifted_ellipsoid", "ellipsoid_r3", "twisted_tube", "lifted_plane"]


def catalog_surface(name: str, *args: float) -> SurfaceDef:
    """Build a catalog surface by name with positional numeric parameters."""
    args = tuple(float(a) for a in args)
    if name == "plane":
        return parse_surface(PLANE_SRC, name="plane")
    if name == "clifford_torus":
        return parse_surface(CLIFFORD_SRC, name="clifford_torus")
    if name == "flat_torus":
        r1, r2 = (args + (1.0, 0.6))[:2] if args else (1.0, 0.6)
        return parse_surface(_flat_torus_src(r1, r2), name=f"flat_torus({r1},{r2})")
    if name == "graph_monge":
        if len(args) not in (14, 15):
            raise ValueError("graph_monge takes 14 coefficients "
                             "(r1,s1,t1,a1,d1,b1,c1, r2,s2,t2,a2,d2,b2,c2) "
                             "plus an optional domain half-width")
        coeffs = args[:14]
        half = args[14] if len(args) == 15 else 0.4
        r1, s1, t1, a1, d1, b1, c1, r2, s2, t2, a2, d2, b2, c2 = coeffs
        src = _graph_monge_src(r1, s1, t1, a1, d1, b1, c1,
                               r2, s2, t2, a2, d2, b2, c2, half)
        return parse_surface(src, name="graph_monge")
    if name == "ellipsoid_r3":
        a, b, c = args[:3] if len(args) >= 3 else (0.5, 0.6, 0.75)
        return parse_surface(_ellipsoid_r3_src(a, b, c),
                             name=f"ellipsoid_r3({a},{b},{c})")
    if name == "lifted_ellipsoid":
        # default semi-axes small enough that the lift's mean curvature
        # within S^3 never vanishes (no spurious umbilic singularities)
        a, b, c = args[:3] if len(args) >= 3 else (0.5, 0.6, 0.75)
        surf3 = parse_surface(_ellipsoid_r3_src(a, b, c),
                              name=f"ellipsoid({a},{b},{c})")
        return lift_stereographic(surf3)
    if name == "twisted_tube":
        m, k0, b0 = (args + (1, 2.0, 0.5))[:3] if args else (1, 2.0, 0.5)
        rest = args[3:]
        a0 = rest[0] if len(rest) > 0 else 0.0
        k1 = rest[1] if len(rest) > 1 else 0.0
        b1 = rest[2] if len(rest) > 2 else 0.0
        return parse_surface(_twisted_tube_src(int(m), k0, b0, a0, k1, b1),
                             name=f"twisted_tube({int(m)},{k0},{b0})")
    if name == "lifted_plane":
        half = args[0] if args else 0.5
        src = f"""
x1 = u; x2 = v; x3 = 0*u
domain u in [{-half!r}, {half!r}], v in [{-half!r}, {half!r}]
"""
        return lift_stereographic(parse_surface(src, name="plane_r3"))
    raise ValueError(f"unknown catalog surface {name!r}; known: {catalog_names()}")


_NAME_CALL = re.compile(r"^([A-Za-z_][A-Za-z_0-9]*)\s*(?:\((.*)\))?$")


def resolve_surface(spec: str) -> SurfaceDef:
    """Resolve a CLI surface spec: a file path or ``name(arg, ...)``."""
    import os

    if os.path.exists(spec):
        with open(spec, "r", encoding="utf-8") as fh:
            return parse_surface(fh.read(), name=os.path.basename(spec))
    m = _NAME_CALL.match(spec.strip())
    if m and (m.group(1) in catalog_names()):
        args = []
        if m.group(2):
            args = [float(x) for x in m.group(2).split(",") if x.strip()]
        return catalog_surface(m.group(1), *args)
    raise EvalError(f"surface spec {spec!r} is neither a file nor a catalog name")
