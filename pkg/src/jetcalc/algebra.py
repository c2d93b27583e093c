"""Graded Laurent differential polynomials on jet coordinate systems.

Values are sparse sums of terms over Q extended by commuting parameters.
A monomial is a sorted tuple of (variable key, exponent) pairs; variable
keys are plain tuples so they hash fast and compare deterministically:

    ('i', k)        independent variable number k
    ('j', j, K)     jet of dependent variable j at multi-index K
    ('q', name)     parameter (commuting symbolic constant)
    ('w', name)     nonlocal variable (never carries a multi-index)

Odd variables (Grassmann) occur with exponent exactly one and are kept in
key order; every constructor normalizes the sign accordingly.  Negative
exponents are allowed on even jet and nonlocal variables only.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from fractions import Fraction

from .errors import (
    ExprSyntaxError,
    LaurentError,
    NonlocalObstruction,
    UnknownNameError,
    VariationalityError,
)

MultiIndex = tuple  # length-n tuple of non-negative ints


def mi_add(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x + y for x, y in zip(a, b))


def mi_sub(a: MultiIndex, b: MultiIndex) -> MultiIndex:
    return tuple(x - y for x, y in zip(a, b))


def mi_leq(a: MultiIndex, b: MultiIndex) -> bool:
    return all(x <= y for x, y in zip(a, b))


def mi_order(a: MultiIndex) -> int:
    return sum(a)


def mi_unit(n: int, i: int) -> MultiIndex:
    return tuple(1 if k == i else 0 for k in range(n))


def mi_zero(n: int) -> MultiIndex:
    return (0,) * n


def mi_iter(n: int, order: int):
    """All multi-indices of the given exact order, lexicographically."""
    if n == 1:
        yield (order,)
        return
    for first in range(order, -1, -1):
        for rest in mi_iter(n - 1, order - first):
            yield (first,) + rest


@dataclass(frozen=True)
class JetSpace:
    """Jet coordinate system: independents, dependents (with parity),
    parameters and nonlocal variables (with parity)."""

    independent: tuple
    dependent: tuple
    parameters: tuple = ()
    nonlocals: tuple = ()
    odd: frozenset = field(default_factory=frozenset)

    def __post_init__(self):
        names = list(self.independent) + list(self.dependent) + \
            list(self.parameters) + list(self.nonlocals)
        if len(set(names)) != len(names):
            raise UnknownNameError(f"duplicate names in jet space: {names}")
        if not self.independent or not self.dependent:
            raise UnknownNameError("need at least one independent and one dependent variable")
        known = set(self.dependent) | set(self.nonlocals)
        for name in self.odd:
            if name not in known:
                raise UnknownNameError(f"odd flag on unknown variable {name!r}")

    @classmethod
    def create(cls, independent, dependent, parameters=(), nonlocals=(), odd=()):
        return cls(tuple(independent), tuple(dependent), tuple(parameters),
                   tuple(nonlocals), frozenset(odd))

    @property
    def n(self) -> int:
        return len(self.independent)

    @property
    def m(self) -> int:
        return len(self.dependent)

    def dep_index(self, name: str) -> int:
        return self.dependent.index(name)

    def is_odd_dep(self, j: int) -> bool:
        return self.dependent[j] in self.odd

    def is_odd_key(self, key) -> bool:
        kind = key[0]
        if kind == 'j':
            return self.dependent[key[1]] in self.odd
        if kind == 'w':
            return key[1] in self.odd
        return False

    def extended(self, dependent=(), nonlocals=(), odd=()) -> "JetSpace":
        """New space with extra dependent/nonlocal variables appended.
        Existing variable keys stay valid (dependent indices are stable)."""
        return JetSpace.create(
            self.independent,
            tuple(self.dependent) + tuple(dependent),
            self.parameters,
            tuple(self.nonlocals) + tuple(nonlocals),
            set(self.odd) | set(odd),
        )

    # -- expression constructors ------------------------------------------

    def zero(self) -> "DiffExpr":
        return DiffExpr(self, {})

    def num(self, value) -> "DiffExpr":
        c = Fraction(value)
        return DiffExpr(self, {(): c} if c else {})

    def one(self) -> "DiffExpr":
        return self.num(1)

    def indep(self, i) -> "DiffExpr":
        if isinstance(i, str):
            i = self.independent.index(i)
        return DiffExpr(self, {((('i', i), 1),): Fraction(1)})

    def jet(self, j, K) -> "DiffExpr":
        if isinstance(j, str):
            j = self.dep_index(j)
        K = tuple(K)
        if len(K) != self.n or any(k < 0 for k in K):
            raise UnknownNameError(f"bad multi-index {K} for {self.independent}")
        return DiffExpr(self, {((('j', j, K), 1),): Fraction(1)})

    def param(self, name) -> "DiffExpr":
        if name not in self.parameters:
            raise UnknownNameError(f"unknown parameter {name!r}")
        return DiffExpr(self, {((('q', name), 1),): Fraction(1)})

    def nonlocal_var(self, name) -> "DiffExpr":
        if name not in self.nonlocals:
            raise UnknownNameError(f"unknown nonlocal variable {name!r}")
        return DiffExpr(self, {((('w', name), 1),): Fraction(1)})

    def var(self, name) -> "DiffExpr":
        """Variable by bare name; dependents resolve to their order-0 jet."""
        if name in self.independent:
            return self.indep(name)
        if name in self.parameters:
            return self.param(name)
        if name in self.nonlocals:
            return self.nonlocal_var(name)
        if name in self.dependent:
            return self.jet(name, mi_zero(self.n))
        raise UnknownNameError(f"unknown name {name!r}")


# -- monomial helpers ------------------------------------------------------


def _sort_odd(keys):
    """Sort odd variable keys by insertion, returning (tuple, sign) or
    None when a key repeats (odd square is zero)."""
    out = []
    sign = 1
    for k in keys:
        pos = len(out)
        while pos > 0 and out[pos - 1] > k:
            pos -= 1
        if pos > 0 and out[pos - 1] == k:
            return None
        if k in out[pos:]:
            return None
        sign *= -1 if (len(out) - pos) % 2 else 1
        out.insert(pos, k)
    return tuple(out), sign


def _mono_mul(space: JetSpace, m1, m2):
    """Merge two normalized monomials; returns (mono, sign) or None."""
    exps = dict(m1)
    odd1 = [k for k, _ in m1 if space.is_odd_key(k)]
    odd2 = [k for k, _ in m2 if space.is_odd_key(k)]
    for k, e in m2:
        exps[k] = exps.get(k, 0) + e
        if exps[k] == 0:
            del exps[k]
    if odd1 or odd2:
        merged = _sort_odd(odd1 + odd2)
        if merged is None:
            return None
        _, sign = merged
    else:
        sign = 1
    return tuple(sorted(exps.items())), sign


def _mono_degree(mono) -> int:
    return sum(e for _, e in mono)


class DiffExpr:
    """Immutable sparse differential polynomial over a JetSpace."""

    __slots__ = ("space", "terms")

    def __init__(self, space: JetSpace, terms: dict):
        self.space = space
        self.terms = terms

    # -- ring structure ---------------------------------------------------

    def __add__(self, other):
        other = self._coerce(other)
        res = dict(self.terms)
        for m, c in other.terms.items():
            s = res.get(m, 0) + c
            if s:
                res[m] = s
            elif m in res:
                del res[m]
        return DiffExpr(self.space, res)

    __radd__ = __add__

    def __neg__(self):
        return DiffExpr(self.space, {m: -c for m, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return (-self) + other

    def __mul__(self, other):
        if isinstance(other, (int, Fraction)):
            c = Fraction(other)
            if not c:
                return DiffExpr(self.space, {})
            return DiffExpr(self.space, {m: v * c for m, v in self.terms.items()})
        other = self._coerce(other)
        res = {}
        space = self.space
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                merged = _mono_mul(space, m1, m2)
                if merged is None:
                    continue
                mono, sign = merged
                s = res.get(mono, 0) + sign * c1 * c2
                if s:
                    res[mono] = s
                elif mono in res:
                    del res[mono]
        return DiffExpr(self.space, res)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if not isinstance(k, int):
            raise TypeError("exponent must be an integer")
        if k < 0:
            return self.inverse_monomial() ** (-k)
        result = self.space.one()
        base = self
        while k:
            if k & 1:
                result = result * base
            base_needed = k >> 1
            if base_needed:
                base = base * base
            k = base_needed
        return result

    def inverse_monomial(self) -> "DiffExpr":
        """Inverse of a single-term monomial in even jet/nonlocal variables."""
        if len(self.terms) != 1:
            raise LaurentError(f"cannot invert non-monomial {self}")
        (mono, coeff), = self.terms.items()
        inv = []
        for key, e in mono:
            if key[0] not in ('j', 'w') or self.space.is_odd_key(key):
                raise LaurentError(f"cannot invert factor {key} in {self}")
            inv.append((key, -e))
        return DiffExpr(self.space, {tuple(sorted(inv)): Fraction(1, 1) / coeff})

    def _coerce(self, other) -> "DiffExpr":
        if isinstance(other, DiffExpr):
            return other
        return self.space.num(other)

    # -- structure queries -------------------------------------------------

    def is_zero(self) -> bool:
        return not self.terms

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self.space.num(other)
        return isinstance(other, DiffExpr) and self.terms == other.terms

    def __hash__(self):
        return hash(frozenset(self.terms.items()))

    def __bool__(self):
        return bool(self.terms)

    def variables(self):
        seen = set()
        for m in self.terms:
            for k, _ in m:
                seen.add(k)
        return seen

    def jet_keys(self):
        return sorted(k for k in self.variables() if k[0] == 'j')

    def max_jet_order(self) -> int:
        orders = [mi_order(k[2]) for k in self.variables() if k[0] == 'j']
        return max(orders, default=-1)

    def constant_term(self) -> Fraction:
        return self.terms.get((), Fraction(0))

    def degree_in(self, keys) -> int:
        keys = set(keys)
        best = 0
        for m in self.terms:
            best = max(best, sum(e for k, e in m if k in keys))
        return best

    def is_linear_in(self, key) -> bool:
        return all(e == 1 for m in self.terms for k, e in m if k == key)

    def coefficient_monomials(self):
        """Iterate (monomial, coefficient) pairs deterministically."""
        return sorted(self.terms.items())

    # -- calculus ----------------------------------------------------------

    def partial(self, key) -> "DiffExpr":
        """Partial derivative; left derivative for odd variables."""
        space = self.space
        odd = space.is_odd_key(key)
        res = {}
        for mono, c in self.terms.items():
            entry = dict(mono)
            if key not in entry:
                continue
            if odd:
                odds = [k for k, _ in mono if space.is_odd_key(k)]
                sign = -1 if odds.index(key) % 2 else 1
                new = tuple(p for p in mono if p[0] != key)
                val = sign * c
            else:
                e = entry[key]
                new_entry = dict(entry)
                if e == 1:
                    del new_entry[key]
                else:
                    new_entry[key] = e - 1
                new = tuple(sorted(new_entry.items()))
                val = c * e
            s = res.get(new, 0) + val
            if s:
                res[new] = s
            elif new in res:
                del res[new]
        return DiffExpr(space, res)

    def total_derivative(self, i: int, wmap=None) -> "DiffExpr":
        """Total derivative D_i.  `wmap` maps nonlocal names to D_i-images;
        without it a nonlocal occurrence is an error (lifted derivatives
        live in the covering layer)."""
        space = self.space
        out = space.zero()
        for mono, c in self.terms.items():
            for key, e in mono:
                kind = key[0]
                if kind == 'q':
                    continue
                if kind == 'i':
                    if key[1] != i:
                        continue
                    dv = space.one()
                elif kind == 'j':
                    dv = DiffExpr(space, {((('j', key[1], mi_add(key[2], mi_unit(space.n, i))), 1),): Fraction(1)})
                else:  # nonlocal
                    if wmap is None:
                        raise NonlocalObstruction(
                            f"total derivative of nonlocal variable {key[1]!r} requires a covering")
                    dv = wmap[key[1]]
                    if dv is None:
                        continue
                # d(v^e)/dv * dv * rest, with graded sign handled by _mono_mul
                factor = self._replace_factor(mono, c, key, e, dv)
                out = out + factor
        return out

    def _replace_factor(self, mono, coeff, key, e, dv: "DiffExpr"):
        """coeff * mono with one factor v^e differentiated into e*v^(e-1)*dv."""
        space = self.space
        rest = dict(mono)
        if space.is_odd_key(key):
            odds = [k for k, _ in mono if space.is_odd_key(k)]
            sign = -1 if odds.index(key) % 2 else 1
            del rest[key]
            base = DiffExpr(space, {tuple(sorted(rest.items())): sign * coeff})
            return dv * base
        if e == 1:
            del rest[key]
        else:
            rest[key] = e - 1
        base = DiffExpr(space, {tuple(sorted(rest.items())): coeff * e})
        return base * dv

    def substitute(self, mapping: dict) -> "DiffExpr":
        """Replace variable keys by expressions.  Odd keys may only map to
        odd-linear expressions; even keys to even expressions."""
        space = self.space
        out = space.zero()
        for mono, c in self.terms.items():
            term = DiffExpr(space, {(): c})
            for key, e in mono:
                if key in mapping:
                    rep = mapping[key]
                    if e < 0:
                        rep = rep.inverse_monomial() ** (-e)
                        term = term * rep
                    else:
                        term = term * rep ** e if not space.is_odd_key(key) else term * rep
                else:
                    term = term * DiffExpr(space, {((key, e),): Fraction(1)})
            out = out + term
        return out

    def rename_space(self, space: JetSpace) -> "DiffExpr":
        """Reinterpret over a compatible (extended) space."""
        return DiffExpr(space, dict(self.terms))

    def scale_jets(self, factor: Fraction, families) -> "DiffExpr":
        """Multiply every jet of the given dependent families by factor."""
        fams = set(families)
        res = {}
        for mono, c in self.terms.items():
            d = sum(e for k, e in mono if k[0] == 'j' and k[1] in fams)
            res[mono] = res.get(mono, 0) + c * factor ** d
        return DiffExpr(self.space, {m: c for m, c in res.items() if c})

    # -- rendering ---------------------------------------------------------

    def render(self) -> str:
        return render(self)

    def __repr__(self):
        return f"DiffExpr({render(self)})"


# -- derivative stacks -----------------------------------------------------


def total_derivative(e: DiffExpr, i: int, wmap=None) -> DiffExpr:
    return e.total_derivative(i, wmap)


def apply_DI(e: DiffExpr, K: MultiIndex, wmap=None) -> DiffExpr:
    for i, k in enumerate(K):
        for _ in range(k):
            e = e.total_derivative(i, wmap)
    return e


def euler(density: DiffExpr, targets=None) -> list:
    """Variational derivatives (delta L / delta u^j) for the listed
    dependent families (default: all).  Left-derivative convention for
    odd targets."""
    space = density.space
    if targets is None:
        targets = range(space.m)
    targets = list(targets)
    out = []
    for j in targets:
        total = space.zero()
        indices = sorted({k[2] for k in density.variables() if k[0] == 'j' and k[1] == j})
        for K in indices:
            part = density.partial(('j', j, K))
            part = apply_DI(part, K)
            total = total + part if mi_order(K) % 2 == 0 else total - part
        out.append(total)
    return out


def euler_is_zero(density: DiffExpr, targets=None) -> bool:
    return all(x.is_zero() for x in euler(density, targets))


# -- horizontal forms ------------------------------------------------------


@dataclass
class HorizontalForm:
    """Horizontal q-form; components indexed by sorted q-subsets of
    independent variables."""

    space: JetSpace
    degree: int
    comps: dict

    def component(self, idxs) -> DiffExpr:
        return self.comps.get(tuple(sorted(idxs)), self.space.zero())

    def map_components(self, fn) -> "HorizontalForm":
        return HorizontalForm(self.space, self.degree,
                              {k: fn(v) for k, v in self.comps.items()})

    def __add__(self, other):
        comps = dict(self.comps)
        for k, v in other.comps.items():
            comps[k] = comps.get(k, self.space.zero()) + v
        return HorizontalForm(self.space, self.degree, comps)

    def __neg__(self):
        return self.map_components(lambda e: -e)

    def is_zero(self) -> bool:
        return all(v.is_zero() for v in self.comps.values())

    def __eq__(self, other):
        if not isinstance(other, HorizontalForm) or self.degree != other.degree:
            return NotImplemented
        keys = set(self.comps) | set(other.comps)
        return all(self.component(k) == other.component(k) for k in keys)


def d_h(form: HorizontalForm, wmap=None) -> HorizontalForm:
    """Horizontal differential: d_h(a dx^S) = sum_i D_i(a) dx^i ^ dx^S."""
    space = form.space
    n = space.n
    if form.degree >= n:
        raise ValueError("d_h on a top-degree form")
    comps = {}
    for S, a in form.comps.items():
        for i in range(n):
            if i in S:
                continue
            da = a.total_derivative(i, wmap)
            if da.is_zero():
                continue
            newS = tuple(sorted(S + (i,)))
            sign = 1 if sum(1 for s in S if s < i) % 2 == 0 else -1
            cur = comps.get(newS, space.zero())
            comps[newS] = cur + (da if sign > 0 else -da)
    comps = {k: v for k, v in comps.items() if not v.is_zero()}
    return HorizontalForm(space, form.degree + 1, comps)


def form_from_density(density: DiffExpr) -> HorizontalForm:
    n = density.space.n
    return HorizontalForm(density.space, n, {tuple(range(n)): density})


# -- homotopy inverses -----------------------------------------------------


def homotopy_density(psi, targets=None) -> DiffExpr:
    """Density L with euler(L) = psi, via L = sum_j u^j * int_0^1 psi_j(s u) ds.
    Requires psi to be a variational gradient, polynomial in the target jets."""
    space = psi[0].space
    if targets is None:
        targets = list(range(space.m))
    fams = set(targets)
    for p in psi:
        for mono in p.terms:
            for k, e in mono:
                if k[0] == 'j' and k[1] in fams and e < 0:
                    raise NonlocalObstruction(
                        "homotopy base point u=0 incompatible with Laurent part")
    out = space.zero()
    for j, p in zip(targets, psi):
        u = space.jet(j, mi_zero(space.n))
        for mono, c in sorted(p.terms.items()):
            d = sum(e for k, e in mono if k[0] == 'j' and k[1] in fams)
            out = out + u * DiffExpr(space, {mono: c * Fraction(1, d + 1)})
    check = euler(out, targets)
    if any((a - b) for a, b in zip(check, psi)):
        raise VariationalityError("input is not a variational gradient")
    return out


_JETKEY = lambda k: (mi_order(k[2]), k[1], k[2])


def _top_jet(e: DiffExpr):
    jets = [k for k in e.variables() if k[0] == 'j']
    if not jets:
        return None
    return max(jets, key=_JETKEY)


def invert_total_derivative(e: DiffExpr, i: int) -> DiffExpr:
    """Primitive theta with D_i(theta) = e and zero constant of integration.
    Raises NonlocalObstruction when no local primitive exists."""
    space = e.space
    if any(k[0] == 'w' for k in e.variables()):
        raise NonlocalObstruction("nonlocal variable in integrand")
    present = sorted({k[1] for k in e.variables() if k[0] == 'j'})
    if not euler_is_zero(e, present):
        raise NonlocalObstruction("nonzero variational derivative: primitive is nonlocal")
    theta = space.zero()
    g = e
    guard = 0
    while True:
        guard += 1
        if guard > 10000:  # pragma: no cover - safety net
            raise NonlocalObstruction("integration did not terminate")
        z = _top_jet(g)
        if z is None:
            break
        if z[2][i] == 0:
            raise NonlocalObstruction(f"top jet {z} carries no D_{i} derivative")
        down = ('j', z[1], mi_sub(z[2], mi_unit(space.n, i)))
        if space.is_odd_key(z):
            c = g.partial(z)
            if down in c.variables():
                raise NonlocalObstruction("odd integrand not linear in its primitive slot")
            B = c * DiffExpr(space, {((down, 1),): Fraction(1)})
        else:
            if not g.is_linear_in(z):
                raise NonlocalObstruction(f"integrand nonlinear in top jet {z}")
            c = g.partial(z)
            B = _integrate_var(c, down)
        theta = theta + B
        g = g - B.total_derivative(i)
        nz = _top_jet(g)
        if nz is not None and _JETKEY(nz) >= _JETKEY(z):
            raise NonlocalObstruction("integration by parts failed to reduce order")
    # residual depends on independents/parameters only
    res = space.zero()
    for mono, c in g.terms.items():
        entry = dict(mono)
        xi = ('i', i)
        a = entry.get(xi, 0)
        if a < 0:
            raise NonlocalObstruction("negative power of the integration variable")
        entry[xi] = a + 1
        res = res + DiffExpr(space, {tuple(sorted(entry.items())): c * Fraction(1, a + 1)})
    return theta + res


def _integrate_var(c: DiffExpr, key) -> DiffExpr:
    """Antiderivative of c with respect to the (even) variable `key`."""
    out = {}
    for mono, v in c.terms.items():
        entry = dict(mono)
        e = entry.get(key, 0)
        if e == -1:
            raise NonlocalObstruction("logarithmic primitive required")
        entry[key] = e + 1
        out[tuple(sorted(entry.items()))] = v * Fraction(1, e + 1)
    return DiffExpr(c.space, out)


def invert_divergence(density: DiffExpr, n: int, i: int = 0):
    """Homotopy inverse of d_h in top degree (n <= 2).

    For n = 1 returns the D_x^{-1} primitive as a 0-form; for n = 2 returns
    X dx + T dt with D_x T - D_t X = density, built by integrating the
    density in the first variable."""
    space = density.space
    if n == 1:
        theta = invert_total_derivative(density, i)
        return HorizontalForm(space, 0, {(): theta})
    if n == 2:
        present = sorted({k[1] for k in density.variables() if k[0] == 'j'})
        if not euler_is_zero(density, present):
            raise NonlocalObstruction("nonzero variational derivative: primitive is nonlocal")
        T = invert_total_derivative(density, 0)
        return HorizontalForm(space, 1, {(0,): space.zero(), (1,): T})
    raise ValueError("invert_divergence implemented for n <= 2")


def canonical_density(e: DiffExpr, i: int = 0) -> DiffExpr:
    """Deterministic divergence-equivalent representative: peel top jets by
    parts while doing so strictly lowers the top jet."""
    g = e
    space = e.space
    while True:
        z = _top_jet(g)
        if z is None or mi_order(z[2]) == 0 or z[2][i] == 0 or space.is_odd_key(z):
            return g
        if not g.is_linear_in(z):
            return g
        c = g.partial(z)
        if z in c.variables():
            return g
        down = ('j', z[1], mi_sub(z[2], mi_unit(space.n, i)))
        try:
            B = _integrate_var(c, down)
        except NonlocalObstruction:
            return g
        cand = g - B.total_derivative(i)
        nz = _top_jet(cand)
        if nz is not None and _JETKEY(nz) >= _JETKEY(z):
            return g
        g = cand


def normalize_sign(e: DiffExpr) -> tuple:
    """(expr, flipped) with the leading (maximal) monomial made positive."""
    if e.is_zero():
        return e, False
    lead = max(e.terms)
    if e.terms[lead] < 0:
        return -e, True
    return e, False


# -- parsing and rendering -------------------------------------------------

_TOKEN = re.compile(r"\s*(?:(?P<num>\d+(?:/\d+)?)|(?P<name>[A-Za-z_][A-Za-z_0-9]*)"
                    r"|(?P<op>[\[\],()+^*-]))")


def _tokenize(text: str):
    pos = 0
    out = []
    while pos < len(text):
        m = _TOKEN.match(text, pos)
        if not m or m.end() == m.start():
            if text[pos:].strip():
                raise ExprSyntaxError(f"unexpected character {text[pos]!r}", pos)
            break
        if m.lastgroup is not None:
            out.append((m.lastgroup, m.group(m.lastgroup), m.start(m.lastgroup)))
        pos = m.end()
    out.append(("end", "", len(text)))
    return out


class _Parser:
    def __init__(self, text: str, space: JetSpace):
        self.tokens = _tokenize(text)
        self.space = space
        self.k = 0

    def peek(self):
        return self.tokens[self.k]

    def next(self):
        tok = self.tokens[self.k]
        self.k += 1
        return tok

    def expect(self, value):
        kind, val, pos = self.next()
        if val != value:
            raise ExprSyntaxError(f"expected {value!r}, found {val!r}", pos)

    def parse(self) -> DiffExpr:
        e = self.expr()
        kind, val, pos = self.peek()
        if kind != "end":
            raise ExprSyntaxError(f"trailing input {val!r}", pos)
        return e

    def expr(self) -> DiffExpr:
        negate = False
        if self.peek()[1] == '-':
            self.next()
            negate = True
        e = self.term()
        if negate:
            e = -e
        while self.peek()[1] in ('+', '-'):
            op = self.next()[1]
            t = self.term()
            e = e + t if op == '+' else e - t
        return e

    def term(self) -> DiffExpr:
        e = self.factor()
        while self.peek()[1] == '*':
            self.next()
            e = e * self.factor()
        return e

    def factor(self) -> DiffExpr:
        e = self.atom()
        if self.peek()[1] == '^':
            self.next()
            sign = 1
            if self.peek()[1] == '-':
                self.next()
                sign = -1
            kind, val, pos = self.next()
            if kind != 'num' or '/' in val:
                raise ExprSyntaxError("exponent must be an integer", pos)
            k = sign * int(val)
            if k < 0:
                try:
                    e = e ** k
                except LaurentError as exc:
                    raise ExprSyntaxError(str(exc), pos) from None
            else:
                e = e ** k
        return e

    def atom(self) -> DiffExpr:
        kind, val, pos = self.next()
        if kind == 'num':
            if '/' in val:
                p, q = val.split('/')
                return self.space.num(Fraction(int(p), int(q)))
            return self.space.num(int(val))
        if val == '(':
            e = self.expr()
            self.expect(')')
            return e
        if val == '-':
            return -self.atom()
        if kind == 'name':
            if self.peek()[1] == '[':
                if val not in self.space.dependent:
                    raise ExprSyntaxError(f"jet token on non-dependent name {val!r}", pos)
                self.next()
                K = []
                while True:
                    k2, v2, p2 = self.next()
                    if k2 != 'num' or '/' in v2:
                        raise ExprSyntaxError("multi-index entries must be integers", p2)
                    K.append(int(v2))
                    k3, v3, p3 = self.next()
                    if v3 == ']':
                        break
                    if v3 != ',':
                        raise ExprSyntaxError("expected ',' or ']'", p3)
                if len(K) != self.space.n:
                    raise ExprSyntaxError(
                        f"multi-index length {len(K)} != {self.space.n}", pos)
                return self.space.jet(val, tuple(K))
            if val in self.space.dependent:
                raise ExprSyntaxError(f"dependent name {val!r} needs a jet index", pos)
            try:
                return self.space.var(val)
            except UnknownNameError:
                raise ExprSyntaxError(f"unknown name {val!r}", pos) from None
        raise ExprSyntaxError(f"unexpected token {val!r}", pos)


def parse(text: str, space: JetSpace) -> DiffExpr:
    return _Parser(text, space).parse()


def _render_key(space: JetSpace, key) -> str:
    kind = key[0]
    if kind == 'i':
        return space.independent[key[1]]
    if kind == 'j':
        idx = ",".join(str(k) for k in key[2])
        return f"{space.dependent[key[1]]}[{idx}]"
    return key[1]


def render(e: DiffExpr) -> str:
    if e.is_zero():
        return "0"
    parts = []
    for mono, c in sorted(e.terms.items()):
        factors = []
        for key, exp in mono:
            name = _render_key(e.space, key)
            factors.append(name if exp == 1 else f"{name}^{exp}")
        body = "*".join(factors)
        coeff = abs(c)
        if not factors:
            text = str(coeff)
        elif coeff == 1:
            text = body
        else:
            text = f"{coeff}*{body}"
        parts.append(("-" if c < 0 else "+", text))
    sign, first = parts[0]
    out = ("-" if sign == "-" else "") + first
    for sign, text in parts[1:]:
        out += f" {sign} {text}"
    return out


DiffExpr.__str__ = lambda self: render(self)
