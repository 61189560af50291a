"""Term and formula AST over real-valued variables.

Terms are immutable and hashable.  Constants are exact ``Fraction`` values so
that rendering to SMT-LIB never goes through binary floats.  The smart
constructors (:func:`add`, :func:`mul`, :func:`neg`) fold constants and drop
neutral elements; they do not attempt general simplification.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Iterator, Mapping, Union

Number = Union[int, float, Fraction]


class Term:
    """Base class for arithmetic terms."""

    __slots__ = ()

    def __add__(self, other):
        return add(self, as_term(other))

    def __radd__(self, other):
        return add(as_term(other), self)

    def __sub__(self, other):
        return add(self, neg(as_term(other)))

    def __rsub__(self, other):
        return add(as_term(other), neg(self))

    def __mul__(self, other):
        return mul(self, as_term(other))

    def __rmul__(self, other):
        return mul(as_term(other), self)

    def __neg__(self):
        return neg(self)

    def children(self) -> tuple["Term", ...]:
        return ()


@dataclass(frozen=True)
class Const(Term):
    value: Fraction

    def __post_init__(self):
        if not isinstance(self.value, Fraction):
            object.__setattr__(self, "value", Fraction(self.value))


@dataclass(frozen=True)
class Var(Term):
    name: str


@dataclass(frozen=True)
class Add(Term):
    args: tuple[Term, ...]

    def children(self):
        return self.args


@dataclass(frozen=True)
class Mul(Term):
    args: tuple[Term, ...]

    def children(self):
        return self.args


@dataclass(frozen=True)
class Neg(Term):
    arg: Term

    def children(self):
        return (self.arg,)


@dataclass(frozen=True)
class Trig(Term):
    fn: str  # "sin" | "cos"
    arg: Term

    def __post_init__(self):
        if self.fn not in ("sin", "cos"):
            raise ValueError(f"unsupported trig function {self.fn!r}")

    def children(self):
        return (self.arg,)


ZERO = Const(Fraction(0))
ONE = Const(Fraction(1))


def as_term(x) -> Term:
    if isinstance(x, Term):
        return x
    if isinstance(x, float):
        if not math.isfinite(x):
            raise ValueError("non-finite constant")
        return Const(Fraction(x))
    if isinstance(x, (int, Fraction)):
        return Const(Fraction(x))
    raise TypeError(f"cannot convert {type(x).__name__} to Term")


def is_zero(t: Term) -> bool:
    return isinstance(t, Const) and t.value == 0


def is_one(t: Term) -> bool:
    return isinstance(t, Const) and t.value == 1


def neg(t: Term) -> Term:
    if isinstance(t, Const):
        return Const(-t.value)
    if isinstance(t, Neg):
        return t.arg
    return Neg(t)


def add(*terms: Term) -> Term:
    flat: list[Term] = []
    acc = Fraction(0)
    for t in terms:
        parts = t.args if isinstance(t, Add) else (t,)
        for p in parts:
            if isinstance(p, Const):
                acc += p.value
            else:
                flat.append(p)
    if acc != 0:
        flat.append(Const(acc))
    if not flat:
        return ZERO
    if len(flat) == 1:
        return flat[0]
    return Add(tuple(flat))


def mul(*terms: Term) -> Term:
    flat: list[Term] = []
    coef = Fraction(1)
    stack = list(reversed(terms))
    while stack:
        p = stack.pop()
        if isinstance(p, Mul):
            stack.extend(reversed(p.args))
        elif isinstance(p, Neg):
            coef = -coef
            stack.append(p.arg)
        elif isinstance(p, Const):
            coef *= p.value
        else:
            flat.append(p)
    if coef == 0:
        return ZERO
    if not flat:
        return Const(coef)
    body = flat[0] if len(flat) == 1 else Mul(tuple(flat))
    if coef == 1:
        return body
    if coef == -1:
        return Neg(body)
    return Mul((Const(coef),) + (body.args if isinstance(body, Mul) else (body,)))


# -- formulas ---------------------------------------------------------------


class Formula:
    __slots__ = ()

    def __and__(self, other):
        return conj(self, other)

    def __or__(self, other):
        return disj(self, other)

    def __invert__(self):
        return Not(self)


@dataclass(frozen=True)
class BoolConst(Formula):
    value: bool


TRUE = BoolConst(True)
FALSE = BoolConst(False)


@dataclass(frozen=True)
class Cmp(Formula):
    op: str  # "=", "<=", "<"
    lhs: Term
    rhs: Term

    def __post_init__(self):
        if self.op not in ("=", "<=", "<"):
            raise ValueError(f"unsupported relation {self.op!r}")


@dataclass(frozen=True)
class And(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Or(Formula):
    args: tuple[Formula, ...]


@dataclass(frozen=True)
class Not(Formula):
    arg: Formula


@dataclass(frozen=True)
class Raw(Formula):
    """Verbatim SMT-LIB boolean term; opaque to evaluation and substitution."""

    text: str
    symbols: tuple[str, ...] = ()


def eq(lhs, rhs) -> Cmp:
    return Cmp("=", as_term(lhs), as_term(rhs))


def le(lhs, rhs) -> Cmp:
    return Cmp("<=", as_term(lhs), as_term(rhs))


def lt(lhs, rhs) -> Cmp:
    return Cmp("<", as_term(lhs), as_term(rhs))


def conj(*fs: Formula) -> Formula:
    flat = list(flatten_and(fs))
    if any(f == FALSE for f in flat):
        return FALSE
    flat = [f for f in flat if f != TRUE]
    if not flat:
        return TRUE
    if len(flat) == 1:
        return flat[0]
    return And(tuple(flat))


def disj(*fs: Formula) -> Formula:
    flat: list[Formula] = []
    for f in fs:
        flat.extend(f.args if isinstance(f, Or) else (f,))
    if any(f == TRUE for f in flat):
        return TRUE
    flat = [f for f in flat if f != FALSE]
    if not flat:
        return FALSE
    if len(flat) == 1:
        return flat[0]
    return Or(tuple(flat))


def flatten_and(fs: Iterable[Formula]) -> Iterator[Formula]:
    """Yield the leaf conjuncts of nested conjunctions."""
    for f in fs:
        if isinstance(f, And):
            yield from flatten_and(f.args)
        elif f != TRUE:
            yield f


# -- traversal --------------------------------------------------------------


def term_vars(t: Term, acc: set[str] | None = None) -> set[str]:
    acc = set() if acc is None else acc
    stack = [t]
    while stack:
        x = stack.pop()
        if isinstance(x, Var):
            acc.add(x.name)
        else:
            stack.extend(x.children())
    return acc


def free_vars(f: Formula | Term) -> set[str]:
    if isinstance(f, Term):
        return term_vars(f)
    acc: set[str] = set()
    stack: list[Formula] = [f]
    while stack:
        x = stack.pop()
        if isinstance(x, Cmp):
            term_vars(x.lhs, acc)
            term_vars(x.rhs, acc)
        elif isinstance(x, (And, Or)):
            stack.extend(x.args)
        elif isinstance(x, Not):
            stack.append(x.arg)
        elif isinstance(x, Raw):
            acc.update(x.symbols)
    return acc


def _walk_terms(f: Formula) -> Iterator[Term]:
    if isinstance(f, Cmp):
        yield f.lhs
        yield f.rhs
    elif isinstance(f, (And, Or)):
        for a in f.args:
            yield from _walk_terms(a)
    elif isinstance(f, Not):
        yield from _walk_terms(f.arg)


def has_trig(f: Formula | Term) -> bool:
    roots = [f] if isinstance(f, Term) else list(_walk_terms(f))
    stack = list(roots)
    while stack:
        t = stack.pop()
        if isinstance(t, Trig):
            return True
        stack.extend(t.children())
    return False


def degree(t: Term) -> int:
    """Polynomial degree in the variables; trig atoms count as degree 1."""
    if isinstance(t, Const):
        return 0
    if isinstance(t, (Var, Trig)):
        return 1
    if isinstance(t, Neg):
        return degree(t.arg)
    if isinstance(t, Add):
        return max(degree(a) for a in t.args)
    if isinstance(t, Mul):
        return sum(degree(a) for a in t.args)
    raise TypeError(t)


def is_linear(f: Formula | Term) -> bool:
    roots = [f] if isinstance(f, Term) else list(_walk_terms(f))
    return all(degree(t) <= 1 for t in roots)


def substitute(f, mapping: Mapping[str, Term]):
    """Replace variables by terms, in a term or a formula."""
    if isinstance(f, Var):
        return mapping.get(f.name, f)
    if isinstance(f, Const):
        return f
    if isinstance(f, Add):
        return add(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Mul):
        return mul(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Neg):
        return neg(substitute(f.arg, mapping))
    if isinstance(f, Trig):
        return Trig(f.fn, substitute(f.arg, mapping))
    if isinstance(f, Cmp):
        return Cmp(f.op, substitute(f.lhs, mapping), substitute(f.rhs, mapping))
    if isinstance(f, And):
        return conj(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Or):
        return disj(*(substitute(a, mapping) for a in f.args))
    if isinstance(f, Not):
        return Not(substitute(f.arg, mapping))
    if isinstance(f, (BoolConst, Raw)):
        return f
    raise TypeError(f"cannot substitute into {type(f).__name__}")


# -- numeric evaluation -----------------------------------------------------


def evaluate(t: Term, env: Mapping[str, float], default: float | None = None) -> float:
    if isinstance(t, Const):
        return float(t.value)
    if isinstance(t, Var):
        if t.name in env:
            return float(env[t.name])
        if default is None:
            raise KeyError(t.name)
        return default
    if isinstance(t, Add):
        return math.fsum(evaluate(a, env, default) for a in t.args)
    if isinstance(t, Mul):
        out = 1.0
        for a in t.args:
            out *= evaluate(a, env, default)
        return out
    if isinstance(t, Neg):
        return -evaluate(t.arg, env, default)
    if isinstance(t, Trig):
        fn = math.sin if t.fn == "sin" else math.cos
        return fn(evaluate(t.arg, env, default))
    raise TypeError(t)


def holds(f: Formula, env: Mapping[str, float], tol: float = 1e-9,
          default: float | None = None) -> bool:
    """Evaluate ``f`` with comparisons relaxed by ``tol``."""
    if isinstance(f, BoolConst):
        return f.value
    if isinstance(f, Cmp):
        lhs = evaluate(f.lhs, env, default)
        rhs = evaluate(f.rhs, env, default)
        if f.op == "=":
            return abs(lhs - rhs) <= tol
        if f.op == "<=":
            return lhs <= rhs + tol
        return lhs < rhs + tol
    if isinstance(f, And):
        return all(holds(a, env, tol, default) for a in f.args)
    if isinstance(f, Or):
        return any(holds(a, env, tol, default) for a in f.args)
    if isinstance(f, Not):
        # under a tolerance the negation of an equality holds only when it is
        # violated by more than the tolerance
        inner = f.arg
        if isinstance(inner, Cmp):
            lhs = evaluate(inner.lhs, env, default)
            rhs = evaluate(inner.rhs, env, default)
            if inner.op == "=":
                return abs(lhs - rhs) > tol
            if inner.op == "<=":
                return lhs > rhs - tol
            return lhs >= rhs - tol
        if isinstance(inner, And):
            return any(holds(Not(a), env, tol, default) for a in inner.args)
        if isinstance(inner, Or):
            return all(holds(Not(a), env, tol, default) for a in inner.args)
        if isinstance(inner, Not):
            return holds(inner.arg, env, tol, default)
        return not holds(inner, env, tol, default)
    if isinstance(f, Raw):
        raise ValueError("raw SMT-LIB formulas cannot be evaluated")
    raise TypeError(f)


def residual(f: Cmp, env: Mapping[str, float]) -> float:
    """Signed ``lhs - rhs`` of a comparison."""
    return evaluate(f.lhs, env) - evaluate(f.rhs, env)


# -- polynomial normal form -------------------------------------------------

Monomial = tuple[str, ...]


def _atom_key(t: Term) -> str:
    return to_smtlib(t)


def to_poly(t: Term) -> dict[Monomial, Fraction]:
    """Expand a term into ``{sorted monomial: coefficient}``.

    Trig applications are treated as opaque atoms keyed by their rendering.
    """
    if isinstance(t, Const):
        return {(): t.value} if t.value else {}
    if isinstance(t, Var):
        return {(t.name,): Fraction(1)}
    if isinstance(t, Trig):
        return {(_atom_key(t),): Fraction(1)}
    if isinstance(t, Neg):
        return {m: -c for m, c in to_poly(t.arg).items()}
    if isinstance(t, Add):
        out: dict[Monomial, Fraction] = {}
        for a in t.args:
            for m, c in to_poly(a).items():
                out[m] = out.get(m, 0) + c
        return {m: c for m, c in out.items() if c}
    if isinstance(t, Mul):
        out = {(): Fraction(1)}
        for a in t.args:
            pa = to_poly(a)
            nxt: dict[Monomial, Fraction] = {}
            for m1, c1 in out.items():
                for m2, c2 in pa.items():
                    m = tuple(sorted(m1 + m2))
                    nxt[m] = nxt.get(m, 0) + c1 * c2
            out = {m: c for m, c in nxt.items() if c}
        return out
    raise TypeError(t)


def normalize(f: Formula) -> Formula:
    """Canonical form used for syntactic comparison of conditions.

    Each comparison becomes ``poly <op> 0``; equalities are additionally
    scaled so the leading coefficient is 1, which makes ``k*(x+y) = 0`` and
    ``x + y = 0`` compare equal for any nonzero constant ``k``.
    """
    if isinstance(f, Cmp):
        poly = to_poly(add(f.lhs, neg(f.rhs)))
        mons = sorted(poly)
        if f.op == "=" and mons:
            lead = poly[mons[0]]
            poly = {m: c / lead for m, c in poly.items()}
        return Cmp(f.op, _poly_term(poly), ZERO)
    if isinstance(f, And):
        return conj(*sorted((normalize(a) for a in flatten_and(f.args)), key=repr))
    if isinstance(f, Or):
        return disj(*sorted((normalize(a) for a in f.args), key=repr))
    if isinstance(f, Not):
        return Not(normalize(f.arg))
    return f


def _poly_term(poly: Mapping[Monomial, Fraction]) -> Term:
    parts = []
    for m in sorted(poly):
        c = poly[m]
        factors = [Var(name) for name in m]
        parts.append(mul(Const(c), *factors))
    return add(*parts) if parts else ZERO


# -- SMT-LIB rendering ------------------------------------------------------


def render_number(q: Fraction) -> str:
    """Exact SMT-LIB real numeral: a decimal when finite, else ``(/ p q)``."""
    if q < 0:
        return f"(- {render_number(-q)})"
    num, den = q.numerator, q.denominator
    d = den
    twos = fives = 0
    while d % 2 == 0:
        d //= 2
        twos += 1
    while d % 5 == 0:
        d //= 5
        fives += 1
    if d == 1:
        digits = max(twos, fives)
        scaled = num * (10 ** digits) // den
        if digits == 0:
            return f"{scaled}.0"
        s = str(scaled).rjust(digits + 1, "0")
        return f"{s[:-digits]}.{s[-digits:]}"
    return f"(/ {num}.0 {den}.0)"


def to_smtlib(x: Term | Formula) -> str:
    if isinstance(x, Const):
        return render_number(x.value)
    if isinstance(x, Var):
        return x.name
    if isinstance(x, Add):
        # a + (-b) renders as (- a b) to keep differences readable
        if len(x.args) == 2 and isinstance(x.args[1], Neg):
            return f"(- {to_smtlib(x.args[0])} {to_smtlib(x.args[1].arg)})"
        return "(+ " + " ".join(to_smtlib(a) for a in x.args) + ")"
    if isinstance(x, Mul):
        return "(* " + " ".join(to_smtlib(a) for a in x.args) + ")"
    if isinstance(x, Neg):
        return f"(- {to_smtlib(x.arg)})"
    if isinstance(x, Trig):
        return f"({x.fn} {to_smtlib(x.arg)})"
    if isinstance(x, BoolConst):
        return "true" if x.value else "false"
    if isinstance(x, Cmp):
        return f"({x.op} {to_smtlib(x.lhs)} {to_smtlib(x.rhs)})"
    if isinstance(x, And):
        return "(and " + " ".join(to_smtlib(a) for a in x.args) + ")"
    if isinstance(x, Or):
        return "(or " + " ".join(to_smtlib(a) for a in x.args) + ")"
    if isinstance(x, Not):
        return f"(not {to_smtlib(x.arg)})"
    if isinstance(x, Raw):
        return x.text
    raise TypeError(f"cannot render {type(x).__name__}")


def trig_atoms(f: Formula) -> set[Trig]:
    out: set[Trig] = set()
    stack = list(_walk_terms(f))
    while stack:
        t = stack.pop()
        if isinstance(t, Trig):
            out.add(t)
        stack.extend(t.children())
    return out
