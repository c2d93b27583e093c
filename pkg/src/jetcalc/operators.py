"""Matrix operators in total derivatives: composition, formal adjoint,
linearization, Green forms, Jacobi bracket, Helmholtz test, and the
one-layer D_x^{-1} pseudo-operators."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from math import comb

from .algebra import (
    DiffExpr,
    HorizontalForm,
    JetSpace,
    MultiIndex,
    apply_DI,
    invert_total_derivative,
    mi_add,
    mi_order,
    mi_sub,
    mi_unit,
    mi_zero,
    parse,
    render,
)
from .errors import ShapeError


def _binom(I: MultiIndex, J: MultiIndex) -> int:
    out = 1
    for a, b in zip(I, J):
        out *= comb(a, b)
    return out


def _sub_indices(I: MultiIndex):
    """All J <= I componentwise."""
    ranges = [range(a + 1) for a in I]
    idx = [0] * len(I)
    while True:
        yield tuple(idx)
        for k in range(len(I) - 1, -1, -1):
            idx[k] += 1
            if idx[k] <= I[k]:
                break
            idx[k] = 0
        else:
            return


class CDiffOp:
    """rows x cols matrix with entries  sum_I a_I D_I  (coefficients left
    of the derivatives; equality is equality of this normal form)."""

    __slots__ = ("space", "rows", "cols", "entries")

    def __init__(self, space: JetSpace, rows: int, cols: int, entries=None):
        self.space = space
        self.rows = rows
        self.cols = cols
        self.entries = {}
        if entries:
            for (r, c), table in entries.items():
                clean = {I: a for I, a in table.items() if not a.is_zero()}
                if clean:
                    self.entries[(r, c)] = clean

    # -- constructors ------------------------------------------------------

    @classmethod
    def zero(cls, space, rows, cols):
        return cls(space, rows, cols)

    @classmethod
    def identity(cls, space, size):
        one = space.one()
        z = mi_zero(space.n)
        return cls(space, size, size, {(k, k): {z: one} for k in range(size)})

    @classmethod
    def scalar(cls, space, table: dict):
        """1x1 operator from {multi-index: coefficient}."""
        return cls(space, 1, 1, {(0, 0): dict(table)})

    @classmethod
    def total_derivative(cls, space, i: int, size: int = 1):
        one = space.one()
        I = mi_unit(space.n, i)
        return cls(space, size, size, {(k, k): {I: one} for k in range(size)})

    @classmethod
    def mult(cls, space, expr: DiffExpr, size: int = 1):
        z = mi_zero(space.n)
        return cls(space, size, size, {(k, k): {z: expr} for k in range(size)})

    @classmethod
    def from_matrix(cls, space, matrix):
        """matrix of {multi-index: coefficient} tables (or None)."""
        rows = len(matrix)
        cols = len(matrix[0]) if rows else 0
        entries = {}
        for r, row in enumerate(matrix):
            for c, table in enumerate(row):
                if table:
                    entries[(r, c)] = dict(table)
        return cls(space, rows, cols, entries)

    def entry(self, r, c) -> dict:
        return self.entries.get((r, c), {})

    @property
    def order(self) -> int:
        return max((mi_order(I) for tab in self.entries.values() for I in tab),
                   default=0)

    def is_zero(self) -> bool:
        return not self.entries

    def __eq__(self, other):
        return (isinstance(other, CDiffOp) and self.rows == other.rows
                and self.cols == other.cols and self.entries == other.entries)

    def __hash__(self):  # pragma: no cover - not used as dict key in hot paths
        return hash((self.rows, self.cols, frozenset(
            (rc, I, frozenset(a.terms.items()))
            for rc, tab in self.entries.items() for I, a in tab.items())))

    # -- algebra -----------------------------------------------------------

    def __add__(self, other):
        if (self.rows, self.cols) != (other.rows, other.cols):
            raise ShapeError("operator shapes differ in addition")
        entries = {}
        for rc in set(self.entries) | set(other.entries):
            table = {}
            for I in set(self.entry(*rc)) | set(other.entry(*rc)):
                s = self.entry(*rc).get(I, self.space.zero()) + \
                    other.entry(*rc).get(I, self.space.zero())
                if not s.is_zero():
                    table[I] = s
            if table:
                entries[rc] = table
        return CDiffOp(self.space, self.rows, self.cols, entries)

    def __neg__(self):
        return self.scale(Fraction(-1))

    def __sub__(self, other):
        return self + (-other)

    def scale(self, factor):
        entries = {rc: {I: a * factor for I, a in tab.items()}
                   for rc, tab in self.entries.items()}
        return CDiffOp(self.space, self.rows, self.cols, entries)

    def premultiply(self, expr: DiffExpr):
        entries = {rc: {I: expr * a for I, a in tab.items()}
                   for rc, tab in self.entries.items()}
        return CDiffOp(self.space, self.rows, self.cols, entries)

    def map_coefficients(self, fn):
        entries = {rc: {I: fn(a) for I, a in tab.items()}
                   for rc, tab in self.entries.items()}
        return CDiffOp(self.space, self.rows, self.cols, entries)

    def compose(self, other: "CDiffOp") -> "CDiffOp":
        """(self o other)(p) = self(other(p)); Leibniz expansion of D_I o a."""
        if self.cols != other.rows:
            raise ShapeError(f"cannot compose {self.rows}x{self.cols} with "
                             f"{other.rows}x{other.cols}")
        entries = {}
        for (r, k), tab1 in self.entries.items():
            for c in range(other.cols):
                tab2 = other.entry(k, c)
                if not tab2:
                    continue
                target = entries.setdefault((r, c), {})
                for I, a in tab1.items():
                    for J, b in tab2.items():
                        for Jp in _sub_indices(I):
                            coeff = a * apply_DI(b, Jp) * _binom(I, Jp)
                            if coeff.is_zero():
                                continue
                            K = mi_add(mi_sub(I, Jp), J)
                            cur = target.get(K)
                            target[K] = coeff if cur is None else cur + coeff
        return CDiffOp(self.space, self.rows, other.cols, entries)

    def adjoint(self) -> "CDiffOp":
        """Formal adjoint: transpose of entrywise sum (-1)^|I| D_I o a_I."""
        entries = {}
        for (r, c), tab in self.entries.items():
            target = entries.setdefault((c, r), {})
            for I, a in tab.items():
                sign = -1 if mi_order(I) % 2 else 1
                for Jp in _sub_indices(I):
                    coeff = apply_DI(a, Jp) * (sign * _binom(I, Jp))
                    if coeff.is_zero():
                        continue
                    K = mi_sub(I, Jp)
                    cur = target.get(K)
                    target[K] = coeff if cur is None else cur + coeff
        return CDiffOp(self.space, self.cols, self.rows, entries)

    def apply(self, vec) -> list:
        if len(vec) != self.cols:
            raise ShapeError(f"operator takes {self.cols} arguments, got {len(vec)}")
        out = [self.space.zero() for _ in range(self.rows)]
        for (r, c), tab in self.entries.items():
            for I, a in tab.items():
                out[r] = out[r] + a * apply_DI(vec[c], I)
        return out

    def apply1(self, e: DiffExpr) -> DiffExpr:
        return self.apply([e])[0]

    def submatrix(self, rows, cols) -> "CDiffOp":
        entries = {}
        for ri, r in enumerate(rows):
            for ci, c in enumerate(cols):
                tab = self.entry(r, c)
                if tab:
                    entries[(ri, ci)] = dict(tab)
        return CDiffOp(self.space, len(rows), len(cols), entries)

    def rename_space(self, space: JetSpace) -> "CDiffOp":
        entries = {rc: {I: a.rename_space(space) for I, a in tab.items()}
                   for rc, tab in self.entries.items()}
        return CDiffOp(space, self.rows, self.cols, entries)

    def render_matrix(self):
        out = []
        for r in range(self.rows):
            row = []
            for c in range(self.cols):
                parts = []
                for I, a in sorted(self.entry(r, c).items()):
                    parts.append(f"({render(a)})*D{list(I)}")
                row.append(" + ".join(parts) if parts else "0")
            out.append(row)
        return out

    def __repr__(self):
        return f"CDiffOp({self.render_matrix()})"

    # -- serialization (wire format) ----------------------------------------

    def to_json(self):
        out = []
        for (r, c) in sorted(self.entries):
            terms = [{"D": list(I), "coef": render(a)}
                     for I, a in sorted(self.entry(r, c).items())]
            out.append({"row": r, "col": c, "terms": terms})
        return out

    @classmethod
    def from_json(cls, space, rows, cols, data):
        entries = {}
        for item in data:
            table = entries.setdefault((item["row"], item["col"]), {})
            for t in item["terms"]:
                I = tuple(t["D"])
                coef = parse(t["coef"], space)
                table[I] = table.get(I, space.zero()) + coef
        return cls(space, rows, cols, entries)


# -- linearization and evolutionary action ---------------------------------


def linearize(psis, space: JetSpace = None, columns=None) -> CDiffOp:
    """Linearization matrix: entry (j, a) = sum_I dpsi^j/du_I^a D_I."""
    if space is None:
        space = psis[0].space
    if columns is None:
        columns = range(space.m)
    columns = list(columns)
    entries = {}
    for j, psi in enumerate(psis):
        for key in psi.jet_keys():
            _, dep, I = key
            if dep not in columns:
                continue
            coeff = psi.partial(key)
            if coeff.is_zero():
                continue
            c = columns.index(dep)
            entries.setdefault((j, c), {})[I] = coeff
    return CDiffOp(space, len(psis), len(columns), entries)


def ev_apply(phi, e: DiffExpr) -> DiffExpr:
    """Evolutionary derivation: E_phi(e) = sum_{I,j} D_I(phi^j) de/du_I^j."""
    space = e.space
    out = space.zero()
    for key in e.jet_keys():
        _, j, I = key
        if j >= len(phi):
            continue
        part = e.partial(key)
        if part.is_zero():
            continue
        out = out + apply_DI(phi[j], I) * part
    return out


def ev_apply_op(phi, op: CDiffOp) -> CDiffOp:
    """E_phi applied to an operator's coefficients."""
    return op.map_coefficients(lambda a: ev_apply(phi, a))


def jacobi(phi, psi) -> list:
    """Jacobi bracket {phi, psi} = l_psi(phi) - l_phi(psi), componentwise."""
    return [ev_apply(phi, q) - ev_apply(psi, p) for p, q in zip(phi, psi)]


def helmholtz(psis) -> CDiffOp:
    """l_psi - l_psi*; zero iff psi is a variational gradient."""
    L = linearize(psis)
    return L - L.adjoint()


def is_gradient(psis) -> bool:
    return helmholtz(psis).is_zero()


# -- Green forms ------------------------------------------------------------


def green_form(op: CDiffOp, ps, qs) -> HorizontalForm:
    """Horizontal (n-1)-form with <op p, q> - <p, op* q> = d_h(form),
    constructed by iterated integration by parts (n <= 2).

    Orientation: n=1 volume dx, form is the 0-form theta_x; n=2 volume
    dx^dt, form X dx + T dt with the identity equal to D_x T - D_t X."""
    space = op.space
    n = space.n
    if n > 2:
        raise ShapeError("green_form implemented for n <= 2")
    theta = [space.zero() for _ in range(n)]

    def split(coeff: DiffExpr, I: MultiIndex, target: DiffExpr):
        # coeff * D_I(target): peel derivatives one at a time
        while mi_order(I):
            i = next(k for k in range(n) if I[k])
            I = mi_sub(I, mi_unit(n, i))
            theta[i] += coeff * apply_DI(target, I)
            coeff = -coeff.total_derivative(i)

    for (r, c), tab in sorted(op.entries.items()):
        for I, a in sorted(tab.items()):
            split(qs[r] * a, I, ps[c])
    if n == 1:
        return HorizontalForm(space, 0, {(): theta[0]})
    return HorizontalForm(space, 1, {(0,): -theta[1], (1,): theta[0]})


def pairing_density(ps, qs) -> DiffExpr:
    out = ps[0].space.zero()
    for p, q in zip(ps, qs):
        out = out + p * q
    return out


# -- pseudo-differential operators with one D_x^{-1} layer -------------------


@dataclass
class PseudoOp:
    """local + sum_a  a * D_x^{-1} o b  with one inversion layer in the
    designated independent variable."""

    local: CDiffOp
    tails: list  # list of (a: list[DiffExpr], b: CDiffOp row 1 x cols)
    xindex: int = 0

    @property
    def space(self):
        return self.local.space

    def normalized(self) -> "PseudoOp":
        """Merge tails sharing the same b-row so cancellations are structural."""
        merged = {}
        order = []
        for a_vec, b in self.tails:
            key = tuple(sorted((rc, I, tuple(sorted(a.terms.items())))
                               for rc, tab in b.entries.items()
                               for I, a in tab.items()))
            if key in merged:
                old, _ = merged[key]
                merged[key] = ([x + y for x, y in zip(old, a_vec)], b)
            else:
                merged[key] = (list(a_vec), b)
                order.append(key)
        tails = [merged[k] for k in order
                 if any(not x.is_zero() for x in merged[k][0])
                 and not merged[k][1].is_zero()]
        return PseudoOp(self.local, tails, self.xindex)

    def apply(self, phi, reducer=None) -> list:
        """Evaluate on a vector; primitives are taken in internal
        coordinates when a reduction context is supplied."""
        def nf(e):
            return reducer.normal_form(e) if reducer is not None else e

        norm = self.normalized()
        out = [nf(x) for x in norm.local.apply(phi)]
        for a_vec, b in norm.tails:
            integrand = nf(b.apply(phi)[0])
            if integrand.is_zero():
                continue
            prim = invert_total_derivative(integrand, self.xindex)
            for r in range(len(out)):
                out[r] = nf(out[r] + a_vec[r] * prim)
        return out

    def apply1(self, e: DiffExpr, reducer=None) -> DiffExpr:
        return self.apply([e], reducer)[0]

    def ev(self, phi) -> "PseudoOp":
        """E_phi acting on all coefficients (Leibniz over both tail slots)."""
        tails = []
        for a_vec, b in self.tails:
            ea = [ev_apply(phi, a) for a in a_vec]
            if any(not x.is_zero() for x in ea):
                tails.append((ea, b))
            eb = ev_apply_op(phi, b)
            if not eb.is_zero():
                tails.append((list(a_vec), eb))
        return PseudoOp(ev_apply_op(phi, self.local), tails, self.xindex)

    def scale(self, factor):
        return PseudoOp(self.local.scale(factor),
                        [([a * factor for a in av], b) for av, b in self.tails],
                        self.xindex)

    def __add__(self, other: "PseudoOp") -> "PseudoOp":
        return PseudoOp(self.local + other.local, self.tails + other.tails,
                        self.xindex)

    def __sub__(self, other: "PseudoOp") -> "PseudoOp":
        return self + other.scale(Fraction(-1))

    def compose_local_right(self, op: CDiffOp) -> "PseudoOp":
        """self o op for a local scalar operator in the designated variable."""
        tails = []
        local = self.local.compose(op)
        for a_vec, b in self.tails:
            row = b.compose(op)
            loc_row, tail_row = _absorb_inverse(row, self.xindex)
            if not tail_row.is_zero():
                tails.append((a_vec, tail_row))
            if not loc_row.is_zero():
                extra = _outer(a_vec, loc_row)
                local = local + extra
        return PseudoOp(local, tails, self.xindex)

    def compose_local_left(self, op: CDiffOp) -> "PseudoOp":
        """op o self for a local scalar operator in the designated variable."""
        local = op.compose(self.local)
        tails = []
        n = self.space.n
        for a_vec, b in self.tails:
            # op o (a D^{-1} b): expand D^k o a, absorbing D^k o D^{-1}
            for (r, c), tab in op.entries.items():
                for I, coeff in tab.items():
                    k = I[self.xindex]
                    if mi_order(I) != k:
                        raise ShapeError("pseudo composition needs x-only operators")
                    for jp in range(k + 1):
                        Jp = tuple(jp if idx == self.xindex else 0 for idx in range(n))
                        da = apply_DI(a_vec[c], Jp) * comb(k, jp)
                        if da.is_zero():
                            continue
                        power = k - jp
                        if power >= 1:
                            Dop = CDiffOp.scalar(
                                self.space,
                                {tuple(power - 1 if idx == self.xindex else 0
                                       for idx in range(n)): self.space.one()})
                            piece = CDiffOp.mult(self.space, coeff * da).compose(
                                Dop).compose(b)
                            grown = CDiffOp(self.space, op.rows, b.cols)
                            for (_, cc), t in piece.entries.items():
                                grown.entries[(r, cc)] = dict(t)
                            local = local + grown
                        else:
                            tails.append(([coeff * da if rr == r else self.space.zero()
                                           for rr in range(op.rows)], b))
        return PseudoOp(local, tails, self.xindex)

    def commutator_local(self, op: CDiffOp) -> "PseudoOp":
        """[op, self] = op o self - self o op, kept formal."""
        return self.compose_local_left(op) - self.compose_local_right(op)

    def to_json(self):
        tail = []
        for a_vec, b in self.tails:
            a = render(a_vec[0]) if len(a_vec) == 1 \
                else [render(x) for x in a_vec]
            tail.append({"a": a, "b": b.to_json()})
        return {"local": self.local.to_json(), "tail": tail}

    @classmethod
    def from_json(cls, space, rows, cols, data, xindex=0):
        local = CDiffOp.from_json(space, rows, cols, data.get("local", []))
        tails = []
        for t in data.get("tail", []):
            a = t["a"]
            a_vec = [parse(a, space)] if isinstance(a, str) \
                else [parse(s, space) for s in a]
            b = CDiffOp.from_json(space, 1, cols, t["b"])
            tails.append((a_vec, b))
        return cls(local, tails, xindex)


def _outer(a_vec, row: CDiffOp) -> CDiffOp:
    space = row.space
    entries = {}
    for r, a in enumerate(a_vec):
        if a.is_zero():
            continue
        for (_, c), tab in row.entries.items():
            target = entries.setdefault((r, c), {})
            for I, coeff in tab.items():
                cur = target.get(I)
                val = a * coeff
                target[I] = val if cur is None else cur + val
    return CDiffOp(space, len(a_vec), row.cols, entries)


def _absorb_inverse(row: CDiffOp, xindex: int):
    """Rewrite D^{-1} o (row) as local + D^{-1} o (order-0 row) using
    D^{-1} c D^k = c D^{k-1} - D^{-1} c' D^{k-1} (x-derivatives only)."""
    space = row.space
    n = space.n
    local = CDiffOp.zero(space, 1, row.cols)
    zero_tab = {}
    work = [(I, c, col) for (_, col), tab in row.entries.items()
            for I, c in tab.items()]
    while work:
        I, c, col = work.pop()
        k = I[xindex]
        if mi_order(I) != k:
            raise ShapeError("pseudo composition needs x-only operators")
        if k == 0:
            cur = zero_tab.get(col)
            zero_tab[col] = c if cur is None else cur + c
            continue
        Idown = tuple(k - 1 if idx == xindex else 0 for idx in range(n))
        tab = local.entries.setdefault((0, col), {})
        cur = tab.get(Idown)
        tab[Idown] = c if cur is None else cur + c
        dc = -c.total_derivative(xindex)
        if not dc.is_zero():
            work.append((Idown, dc, col))
    local = CDiffOp(space, 1, row.cols, local.entries)
    tail = CDiffOp(space, 1, row.cols,
                   {(0, col): {mi_zero(n): c} for col, c in zero_tab.items()
                    if not c.is_zero()})
    return local, tail
