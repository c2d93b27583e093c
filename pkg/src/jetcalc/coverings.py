"""Differential coverings: flatness, Abelian coverings from currents,
tangent/cotangent/Delta-coverings, lifted operators, shadows, one-step
reconstruction and finite covering symmetries."""

from __future__ import annotations

from dataclasses import dataclass, field

from .algebra import (
    DiffExpr,
    HorizontalForm,
    JetSpace,
    invert_total_derivative,
    mi_order,
    mi_zero,
    render,
)
from .errors import NonlocalObstruction, NonSolvableError, ShapeError
from .analysis import Ansatz, ansatz_monomials, solve_determining
from .operators import CDiffOp
from .presentations import Presentation, make_presentation


@dataclass
class Covering:
    """A presentation (possibly with fiber jet families appended to the
    base) plus derivative-free nonlocal variables with extension fields.

    The lifted derivatives are D~_i = D-bar_i + sum_j X_i^j d/dw^j; nonlocal
    variables never carry jet indices."""

    presentation: Presentation
    base: Presentation
    nonlocals: tuple = ()                 # names, ordered
    X: dict = field(default_factory=dict)  # i -> tuple of DiffExpr per nonlocal
    fiber_families: tuple = ()            # dependent indices added over base
    structures: dict = field(default_factory=dict)

    @property
    def space(self) -> JetSpace:
        return self.presentation.space

    def wmap(self, i: int) -> dict:
        fields = self.X.get(i, ())
        return {name: fields[k] for k, name in enumerate(self.nonlocals)}

    def lift_d(self, e: DiffExpr, i: int) -> DiffExpr:
        e = self.presentation.normal_form(e)
        return self.presentation.normal_form(e.total_derivative(i, self.wmap(i)))

    def lift_DI(self, e: DiffExpr, K) -> DiffExpr:
        for i, k in enumerate(K):
            for _ in range(k):
                e = self.lift_d(e, i)
        return e

    def lift_apply(self, op: CDiffOp, vec) -> list:
        out = [self.space.zero() for _ in range(op.rows)]
        for (r, c), tab in op.entries.items():
            for I, a in tab.items():
                out[r] = out[r] + a.rename_space(self.space) * self.lift_DI(vec[c], I)
        return [self.presentation.normal_form(x) for x in out]

    def is_abelian(self) -> bool:
        wkeys = {('w', name) for name in self.nonlocals}
        return all(not (set(f.variables()) & wkeys)
                   for fields in self.X.values() for f in fields)


def verify_flat(cov: Covering) -> dict:
    """Residuals D~_i(X_j) - D~_j(X_i) per (i, j, nonlocal); plus sampled
    commutation of the lifted derivatives on the fiber jets."""
    residuals = {}
    n = cov.space.n
    for i in range(n):
        for j in range(i + 1, n):
            for k, name in enumerate(cov.nonlocals):
                lhs = cov.lift_d(cov.X[j][k], i)
                rhs = cov.lift_d(cov.X[i][k], j)
                residuals[(i, j, name)] = lhs - rhs
    for fam in cov.fiber_families:
        v = cov.space.jet(fam, mi_zero(n))
        for i in range(n):
            for j in range(i + 1, n):
                lhs = cov.lift_d(cov.lift_d(v, i), j)
                rhs = cov.lift_d(cov.lift_d(v, j), i)
                residuals[(i, j, cov.space.dependent[fam])] = lhs - rhs
    ok = all(r.is_zero() for r in residuals.values())
    return {"ok": ok,
            "residuals": {k: render(v) for k, v in residuals.items() if not v.is_zero()}}


def make_covering(base: Presentation, nonlocals, X, odd=()) -> Covering:
    """Nonlocal-variable covering over a presentation.  `nonlocals` is a
    list of names, X maps independent index -> list of extension fields."""
    space = base.space.extended(nonlocals=nonlocals, odd=odd)
    pres = Presentation(space, [c.rename_space(space) for c in base.components],
                        base.leadings,
                        [c.rename_space(space) for c in base.lead_coeffs],
                        [c.rename_space(space) for c in base.rhss],
                        base.declared_normal)
    Xn = {i: tuple(f.rename_space(space) for f in fields) for i, fields in X.items()}
    return Covering(pres, base, tuple(nonlocals), Xn)


def abelian_from_current(form: HorizontalForm, base: Presentation,
                         name: str = "w") -> Covering:
    """One-dimensional Abelian covering from a closed current (n = 2):
    w_x = X, w_t = T.  Flags trivializable coverings (exact currents)."""
    from .algebra import d_h
    if base.space.n != 2:
        raise ShapeError("current coverings implemented for n = 2")
    if not base.reduce_form(d_h(form)).is_zero():
        raise NonlocalObstruction("current is not closed on the equation")
    X = form.component((0,))
    T = form.component((1,))
    cov = make_covering(base, [name], {0: [X], 1: [T]})
    trivial = False
    try:
        f = invert_total_derivative(base.normal_form(X), 0)
        if (base.d_bar(f, 1) - base.normal_form(T)).is_zero():
            trivial = True
    except NonlocalObstruction:
        trivial = False
    cov.structures["trivial"] = trivial
    flat = verify_flat(cov)
    if not flat["ok"]:  # pragma: no cover - closedness implies flatness
        raise NonlocalObstruction(f"covering is not flat: {flat['residuals']}")
    return cov


def delta_covering(base: Presentation, op: CDiffOp, names=None, odd=False,
                   leadings=None, check_order=4) -> Covering:
    """Covering cut out by  op(v) = 0  on new fiber variables v^1..v^cols,
    oriented along the supplied fiber leading jets (defaults mirror the
    base leading jets when shapes match)."""
    space = base.space
    if names is None:
        stem = "p" if odd else "v"
        names = [stem if op.cols == 1 else f"{stem}{c + 1}" for c in range(op.cols)]
    ext = space.extended(dependent=names, odd=names if odd else ())
    fiber0 = space.m
    fiber_exprs = []
    for r in range(op.rows):
        expr = ext.zero()
        for c in range(op.cols):
            for I, a in op.entry(r, c).items():
                expr = expr + a.rename_space(ext) * ext.jet(fiber0 + c, I)
        fiber_exprs.append(expr)
    if leadings is None:
        leadings = []
        for r, expr in enumerate(fiber_exprs):
            lead = None
            if op.rows == len(base.leadings) and op.cols == space.m:
                # mirror the base leading jet when the rule supports it
                j, I = base.leadings[r]
                key = ('j', fiber0 + j, I)
                coeff = expr.partial(key)
                if len(coeff.terms) == 1 and expr.is_linear_in(key):
                    lead = (fiber0 + j, I)
            if lead is None:
                keys = [k for k in expr.variables() if k[0] == 'j' and k[1] >= fiber0]
                if not keys:
                    raise NonSolvableError("fiber rule contains no fiber jet")
                key = max(keys, key=lambda k: (mi_order(k[2]), k[2], k[1]))
                lead = (key[1], key[2])
            leadings.append(lead)
    comps = [c.rename_space(ext) for c in base.components] + fiber_exprs
    leads = list(base.leadings) + list(leadings)
    pres = make_presentation(ext, comps, leads, base.declared_normal, check_order)
    cov = Covering(pres, base, (), {}, tuple(range(fiber0, fiber0 + op.cols)))
    return cov


def tangent_covering(base: Presentation, check_order=4) -> Covering:
    cov = delta_covering(base, base.linearization(), odd=False,
                         check_order=check_order)
    cov.structures["kind"] = "tangent"
    return cov


def cotangent_covering(base: Presentation, check_order=4) -> Covering:
    """Covering cut out by the adjoint linearization on odd fibers, with the
    canonical structures rho = (p, 0) and Omega = [[0, 1], [-1, 0]]."""
    L = base.linearization()
    adj = L.adjoint()
    ext_leads = None
    if adj.rows == base.space.m and len(base.leadings) == adj.cols:
        # orient the rule read off component j_s along p^s at the base leading index
        ext_leads = []
        for s, (j, I) in enumerate(base.leadings):
            ext_leads.append((base.space.m + s, I))
        # reorder fiber component rows to match: row of adj giving p^s rule is j_s
        rows = [j for (j, _) in base.leadings]
        adj = adj.submatrix(rows, list(range(adj.cols)))
    cov = delta_covering(base, adj, odd=True, leadings=ext_leads,
                         check_order=check_order)
    cov.structures["kind"] = "cotangent"
    m = base.space.m
    sp = cov.space
    cov.structures["rho"] = ([sp.jet(m + s, mi_zero(sp.n)) for s in range(adj.cols)],
                             [sp.zero() for _ in range(adj.cols)])
    cov.structures["omega"] = "[[0, 1], [-1, 0]]"
    return cov


def add_abelian_layer(cov: Covering, name: str, fields: dict) -> Covering:
    """Declare an extra nonlocal variable over an existing covering (the
    auxiliary layers such as D_x(v_-1) = v)."""
    space = cov.space.extended(nonlocals=[name])
    pres = Presentation(space,
                        [c.rename_space(space) for c in cov.presentation.components],
                        cov.presentation.leadings,
                        [c.rename_space(space) for c in cov.presentation.lead_coeffs],
                        [c.rename_space(space) for c in cov.presentation.rhss],
                        cov.presentation.declared_normal)
    X = {}
    for i in range(space.n):
        old = [f.rename_space(space) for f in cov.X.get(i, ())]
        X[i] = tuple(old + [fields[i].rename_space(space)])
    return Covering(pres, cov.base, tuple(cov.nonlocals) + (name,), X,
                    cov.fiber_families, dict(cov.structures))


# -- shadows and fiber-linear solving ----------------------------------------


def lifted_linearization_residual(cov: Covering, phi) -> list:
    """l~_F(phi) over the covering (base linearization, lifted derivatives)."""
    L = cov.base.linearization()
    return cov.lift_apply(L, phi)


def verify_shadow(phi, cov: Covering):
    residual = lifted_linearization_residual(cov, [cov.presentation.normal_form(p)
                                                   for p in phi])
    return all(r.is_zero() for r in residual), residual


def fiber_linear_candidates(cov: Covering, ansatz: Ansatz):
    """Candidate vectors: base-coefficient monomials times one fiber slot
    (fiber jets up to the ansatz order, plus nonlocal fiber variables)."""
    space = cov.space
    base_monos = ansatz_monomials(cov.presentation, ansatz)
    base_monos = [m for m in base_monos
                  if all(k[0] != 'j' or k[1] not in cov.fiber_families
                         for k in m.variables())]
    slots = []
    for fam in cov.fiber_families:
        for key in cov.presentation.internal_jets(ansatz.max_jet_order):
            if key[1] == fam:
                slots.append(DiffExpr(space, {((key, 1),): 1}) * space.one())
    for name in cov.nonlocals:
        slots.append(space.nonlocal_var(name))
    m = cov.base.space.m
    cands = []
    for slot in range(m):
        for s in slots:
            for b in base_monos:
                vec = [space.zero()] * m
                vec[slot] = b * s
                cands.append(vec)
    return cands


def solve_fiberlinear(cov: Covering, ansatz: Ansatz, target: CDiffOp = None):
    """All fiber-linear solutions of the lifted determining operator within
    the ansatz (default operator: the lifted base linearization)."""
    if target is None:
        target = cov.base.linearization()
    cands = fiber_linear_candidates(cov, ansatz)
    return solve_determining(cands, lambda v: cov.lift_apply(target, v),
                             cov.base.space.m)


# -- reconstruction and finite symmetries --------------------------------------


def lift_linearization_of(cov: Covering, f: DiffExpr, phi) -> DiffExpr:
    """l~_f(phi): lifted linearization of a covering function f with respect
    to the base dependents."""
    out = cov.space.zero()
    for key in f.jet_keys():
        if key[1] >= cov.base.space.m:
            continue
        part = f.partial(key)
        if part.is_zero():
            continue
        out = out + part * cov.lift_DI(phi[key[1]], key[2])
    return cov.presentation.normal_form(out)


def reconstruct_step(cov: Covering, phi) -> Covering:
    """One-step shadow reconstruction: adjoin w~ with
    d w~^j / dx^i = l~_{X_i^j}(phi) + sum_a (dX_i^j/dw^a) w~^a."""
    names = [f"{name}_r" for name in cov.nonlocals]
    space = cov.space.extended(nonlocals=names)
    pres = Presentation(space,
                        [c.rename_space(space) for c in cov.presentation.components],
                        cov.presentation.leadings,
                        [c.rename_space(space) for c in cov.presentation.lead_coeffs],
                        [c.rename_space(space) for c in cov.presentation.rhss],
                        cov.presentation.declared_normal)
    X = {}
    for i in range(space.n):
        old = [f.rename_space(space) for f in cov.X.get(i, ())]
        new = []
        for j, name in enumerate(cov.nonlocals):
            Xij = cov.X[i][j]
            val = lift_linearization_of(cov, Xij, phi).rename_space(space)
            for a, wa in enumerate(cov.nonlocals):
                dd = Xij.partial(('w', wa))
                if not dd.is_zero():
                    val = val + dd.rename_space(space) * space.nonlocal_var(names[a])
            new.append(val)
        X[i] = tuple(old + new)
    out = Covering(pres, cov.base, tuple(cov.nonlocals) + tuple(names), X,
                   cov.fiber_families, dict(cov.structures))
    flat = verify_flat(out)
    if not flat["ok"]:
        raise NonlocalObstruction(
            f"reconstruction produced a non-flat covering: {flat['residuals']}")
    return out


class FiniteSubstitution:
    """Substitution on covering coordinates: images of the order-0 dependents
    and of the nonlocal variables; jets prolong through the lifted
    derivatives.  Unlisted variables map to themselves."""

    def __init__(self, cov: Covering, images: dict):
        self.cov = cov
        space = cov.space
        self.dep_images = {}
        self.w_images = {}
        for name, expr in images.items():
            if name in space.dependent:
                self.dep_images[space.dep_index(name)] = expr
            elif name in space.nonlocals:
                self.w_images[name] = expr
            else:
                raise ShapeError(f"substitution target {name!r} is not a variable")
        self._jet_cache = {}

    def jet_image(self, j, K) -> DiffExpr:
        cached = self._jet_cache.get((j, K))
        if cached is not None:
            return cached
        if mi_order(K) == 0:
            val = self.dep_images.get(j, self.cov.space.jet(j, K))
        else:
            i = max(k for k in range(len(K)) if K[k] > 0)
            Kd = tuple(v - (1 if k == i else 0) for k, v in enumerate(K))
            val = self.cov.lift_d(self.jet_image(j, Kd), i)
        self._jet_cache[(j, K)] = val
        return val

    def __call__(self, e: DiffExpr) -> DiffExpr:
        e = self.cov.presentation.normal_form(e)
        mapping = {}
        for key in e.variables():
            if key[0] == 'j':
                mapping[key] = self.jet_image(key[1], key[2])
            elif key[0] == 'w' and key[1] in self.w_images:
                mapping[key] = self.w_images[key[1]]
        return self.cov.presentation.normal_form(e.substitute(mapping))


def verify_finite_symmetry(cov: Covering, images: dict) -> dict:
    """sigma preserves the covering iff it commutes with the lifted
    derivatives: the covering rules D~_i w = X_i and the base equation are
    stable under the substitution."""
    sigma = FiniteSubstitution(cov, images)
    residuals = {}
    for i in range(cov.space.n):
        for j, name in enumerate(cov.nonlocals):
            img = sigma.w_images.get(name, cov.space.nonlocal_var(name))
            lhs = cov.lift_d(img, i)
            rhs = sigma(cov.X[i][j])
            residuals[(cov.space.independent[i], name)] = lhs - rhs
    for s, F in enumerate(cov.presentation.components):
        residuals[("component", s)] = sigma(F)
    ok = all(r.is_zero() for r in residuals.values())
    return {"ok": ok, "residuals": {f"{k}": render(v)
                                    for k, v in residuals.items() if not v.is_zero()}}


def recursion_as_backlund(cov: Covering, omega_R, phi, pres: Presentation = None):
    """Evaluate the Backlund realization of a recursion operator: substitute
    the jets of the symmetry phi for the fiber variables of the shadow
    omega_R (nonlocal layers resolved by D_x^{-1}) and reduce."""
    base = cov.base if pres is None else pres
    space = cov.space
    phi0 = base.normal_form(phi[0]).rename_space(space)
    mapping = {}
    for key in omega_R.variables():
        if key[0] == 'j' and key[1] in cov.fiber_families:
            mapping[key] = base.apply_DI_bar(phi0.rename_space(base.space),
                                             key[2]).rename_space(space)
        elif key[0] == 'w':
            prim = invert_total_derivative(base.normal_form(
                phi0.rename_space(base.space)), 0)
            mapping[key] = prim.rename_space(space)
    value = omega_R.substitute(mapping)
    return base.normal_form(value.rename_space(base.space))
