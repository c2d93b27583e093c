"""Equation presentations as orthonomic rewrite systems.

A presentation solves each component F_s for a designated leading jet,
u_{I_s}^{j_s} = g_s, with internal-coordinate right-hand sides.  Derived
rules are prolonged on demand and cached.  Reduction optionally tracks
cofactors Delta_s with  input = normal_form + sum_s Delta_s(F_s)  exactly
on the free jet space; the cofactors feed every construction downstream
that the source theory states existentially (box operators, the nabla of
the bivector calculus, generating sections)."""

from __future__ import annotations

from dataclasses import dataclass

from .algebra import (
    DiffExpr,
    HorizontalForm,
    JetSpace,
    apply_DI,
    mi_add,
    mi_iter,
    mi_leq,
    mi_order,
    mi_sub,
    mi_unit,
    mi_zero,
    render,
)
from .errors import ConfluenceError, NonSolvableError, ReductionError
from .operators import CDiffOp, linearize


def _reduce_key(key):
    # rank jets by total order, then by reversed multi-index so that
    # later independents (time-like) dominate ties, then by family
    return (mi_order(key[2]), tuple(reversed(key[2])), key[1])


@dataclass
class Reduction:
    """Result of reducing an expression modulo a presentation."""

    input: DiffExpr
    normal_form: DiffExpr
    cofactor: CDiffOp  # 1 x l row with input = nf + sum_s cofactor[0,s](F_s)

    def check(self, pres: "Presentation") -> bool:
        total = self.normal_form
        for s in range(len(pres.components)):
            for I, a in self.cofactor.entry(0, s).items():
                total = total + a * apply_DI(pres.components[s], I)
        return (total - self.input).is_zero()


class Presentation:
    """Equation E = {F = 0} with user-designated leading jets."""

    def __init__(self, space: JetSpace, components, leadings, lead_coeffs,
                 rhss, declared_normal=True):
        self.space = space
        self.components = tuple(components)
        self.leadings = tuple(leadings)          # (dep index, multi-index)
        self.lead_coeffs = tuple(lead_coeffs)    # monomial DiffExpr per rule
        self.rhss = list(rhss)
        self.declared_normal = declared_normal
        self._rules_by_dep = {}
        for s, (j, I) in enumerate(self.leadings):
            self._rules_by_dep.setdefault(j, []).append((I, s))
        self._nf_cache = {}
        self._tag_cache = {}
        self._tag_space = space.extended(
            dependent=[f"_F{s}" for s in range(len(self.components))])

    # -- rule machinery ------------------------------------------------------

    def find_rule(self, j, K):
        for I, s in self._rules_by_dep.get(j, ()):
            if mi_leq(I, K):
                return s
        return None

    def is_internal_key(self, key) -> bool:
        return key[0] != 'j' or self.find_rule(key[1], key[2]) is None

    def internal_jets(self, max_order: int):
        """All internal jet keys up to the given total order."""
        out = []
        for j in range(self.space.m):
            for order in range(max_order + 1):
                for K in mi_iter(self.space.n, order):
                    if self.find_rule(j, K) is None:
                        out.append(('j', j, K))
        return out

    def _rule_nf(self, j, K) -> DiffExpr:
        cached = self._nf_cache.get((j, K))
        if cached is not None:
            return cached
        s = self.find_rule(j, K)
        I = self.leadings[s][1]
        if K == I:
            value = self.rhss[s]
        else:
            i = max(k for k in range(self.space.n) if K[k] > I[k])
            base = self._rule_nf(j, mi_sub(K, mi_unit(self.space.n, i)))
            value = self.normal_form(base.total_derivative(i))
        self._nf_cache[(j, K)] = value
        return value

    def normal_form(self, e: DiffExpr) -> DiffExpr:
        if isinstance(e, (list, tuple)):
            return [self.normal_form(x) for x in e]
        e = e.rename_space(self.space) if e.space is not self.space else e
        while True:
            reducible = [k for k in e.variables()
                         if k[0] == 'j' and self.find_rule(k[1], k[2]) is not None]
            if not reducible:
                return e
            z = max(reducible, key=_reduce_key)
            for mono in e.terms:
                for k, exp in mono:
                    if k == z and exp < 0:
                        raise ReductionError(
                            f"reducible jet {z} occurs with negative exponent")
            e = e.substitute({z: self._rule_nf(z[1], z[2])})

    def d_bar(self, e: DiffExpr, i: int) -> DiffExpr:
        """Restricted total derivative."""
        return self.normal_form(self.normal_form(e).total_derivative(i))

    def apply_DI_bar(self, e: DiffExpr, K) -> DiffExpr:
        for i, k in enumerate(K):
            for _ in range(k):
                e = self.d_bar(e, i)
        return e

    # -- cofactor-tracking reduction ------------------------------------------

    def _tag_rule_nf(self, j, K) -> DiffExpr:
        cached = self._tag_cache.get((j, K))
        if cached is not None:
            return cached
        sp = self._tag_space
        s = self.find_rule(j, K)
        I = self.leadings[s][1]
        if K == I:
            tag = sp.jet(self.space.m + s, mi_zero(sp.n))
            inv = self.lead_coeffs[s].rename_space(sp).inverse_monomial()
            value = self.rhss[s].rename_space(sp) + inv * tag
        else:
            i = max(k for k in range(sp.n) if K[k] > I[k])
            base = self._tag_rule_nf(j, mi_sub(K, mi_unit(sp.n, i)))
            value = self._tag_normal_form(base.total_derivative(i))
        self._tag_cache[(j, K)] = value
        return value

    def _tag_normal_form(self, e: DiffExpr) -> DiffExpr:
        while True:
            reducible = [k for k in e.variables()
                         if k[0] == 'j' and k[1] < self.space.m
                         and self.find_rule(k[1], k[2]) is not None]
            if not reducible:
                return e
            z = max(reducible, key=_reduce_key)
            for mono in e.terms:
                for k, exp in mono:
                    if k == z and exp < 0:
                        raise ReductionError(
                            f"reducible jet {z} occurs with negative exponent")
            e = e.substitute({z: self._tag_rule_nf(z[1], z[2])})

    def reduce(self, e: DiffExpr) -> Reduction:
        """Normal form together with exact cofactors."""
        for key in e.variables():
            if key[0] == 'j' and self.space.is_odd_key(key):
                if self.find_rule(key[1], key[2]) is not None:
                    raise ReductionError(
                        "cofactor tracking is limited to even reducible jets")
        sp = self._tag_space
        m, l = self.space.m, len(self.components)
        full = self._tag_normal_form(e.rename_space(sp))
        nf_terms = {}
        tables = [dict() for _ in range(l)]
        for mono, c in full.terms.items():
            tags = sorted((k[1] - m, k[2], k, exp) for k, exp in mono
                          if k[0] == 'j' and k[1] >= m)
            if not tags:
                nf_terms[mono] = c
                continue
            s, L, key, exp = tags[0]
            rest = dict(mono)
            if exp == 1:
                del rest[key]
            else:
                rest[key] = exp - 1
            coeff = DiffExpr(sp, {tuple(sorted(rest.items())): c})
            coeff = coeff.substitute({('j', t, KK): apply_DI(
                self.components[t - m].rename_space(sp), KK)
                for (t, KK) in {(k[1], k[2]) for k in coeff.variables()
                                if k[0] == 'j' and k[1] >= m}})
            base_coeff = coeff.rename_space(self.space)
            cur = tables[s].get(L)
            tables[s][L] = base_coeff if cur is None else cur + base_coeff
        nf = DiffExpr(self.space, nf_terms)
        entries = {}
        for s, tab in enumerate(tables):
            clean = {L: a for L, a in tab.items() if not a.is_zero()}
            if clean:
                entries[(0, s)] = clean
        cof = CDiffOp(self.space, 1, l, entries)
        return Reduction(e, nf, cof)

    def reduce_vector(self, vec):
        return [self.reduce(e) for e in vec]

    # -- operators on the equation ---------------------------------------------

    def restrict_operator(self, op: CDiffOp) -> CDiffOp:
        return op.map_coefficients(self.normal_form)

    def linearization(self) -> CDiffOp:
        return linearize(list(self.components), self.space)

    def lin_apply(self, phi) -> list:
        """l_F(phi) reduced (the symmetry determining operator)."""
        return [self.normal_form(x) for x in self.linearization().apply(phi)]

    def adj_apply(self, psi) -> list:
        return [self.normal_form(x)
                for x in self.linearization().adjoint().apply(psi)]

    def reduce_form(self, form: HorizontalForm) -> HorizontalForm:
        return form.map_components(self.normal_form)

    def extend_space(self, dependent=(), nonlocals=(), odd=()) -> "Presentation":
        """Same rules over a space with extra (ruleless) variables."""
        space = self.space.extended(dependent, nonlocals, odd)
        return Presentation(space,
                            [c.rename_space(space) for c in self.components],
                            self.leadings,
                            [c.rename_space(space) for c in self.lead_coeffs],
                            [c.rename_space(space) for c in self.rhss],
                            self.declared_normal)

    def is_evolutionary(self) -> bool:
        """One rule per dependent with a first-order pure-t leading jet."""
        if len(self.components) != self.space.m:
            return False
        seen = set()
        t = self.space.n - 1
        for j, I in self.leadings:
            if mi_order(I) != 1 or I[t] != 1:
                return False
            seen.add(j)
        return len(seen) == self.space.m


def make_presentation(space: JetSpace, components, leadings,
                      declared_normal=True, check_order=4) -> Presentation:
    """Build and validate an orthonomic presentation.

    components: DiffExpr vector F; leadings: list of (dep, multi-index),
    dep by name or index.  Each component must be solvable for its leading
    jet with a Laurent-monomial coefficient; the rule set is inter-reduced
    and all critical pairs up to `check_order` are tested for confluence."""
    comps = list(components)
    leads = []
    for dep, K in leadings:
        j = space.dep_index(dep) if isinstance(dep, str) else dep
        leads.append((j, tuple(K)))
    if len(comps) != len(leads):
        raise NonSolvableError("one leading jet per component is required")
    coeffs, rhss = [], []
    for F, (j, I) in zip(comps, leads):
        key = ('j', j, I)
        if not F.is_linear_in(key):
            raise NonSolvableError(f"component is not linear in its leading jet {key}")
        a = F.partial(key)
        if len(a.terms) != 1:
            raise NonSolvableError(
                f"leading coefficient of {key} is not a monomial: {render(a)}")
        if key in a.variables():
            raise NonSolvableError(f"leading coefficient depends on {key}")
        z = space.jet(j, I)
        rhs = (a * z - F) * a.inverse_monomial()
        for other in rhs.variables():
            if other[0] == 'j' and other[1] == j and mi_leq(I, other[2]):
                raise NonSolvableError(
                    f"right-hand side contains a derivative {other} of the leading jet")
        coeffs.append(a)
        rhss.append(rhs)
    # orthonomicity: leading jets pairwise non-divisible
    for s1 in range(len(leads)):
        for s2 in range(len(leads)):
            if s1 != s2 and leads[s1][0] == leads[s2][0] \
                    and mi_leq(leads[s1][1], leads[s2][1]):
                raise NonSolvableError(
                    f"leading jets {leads[s1]} and {leads[s2]} are not orthonomic")
    pres = Presentation(space, comps, leads, coeffs, rhss, declared_normal)
    # inter-reduce right-hand sides to a fixpoint
    for _ in range(20):
        changed = False
        for s in range(len(rhss)):
            new = pres.normal_form(pres.rhss[s])
            if not (new - pres.rhss[s]).is_zero():
                pres.rhss[s] = new
                pres._nf_cache.clear()
                pres._tag_cache.clear()
                changed = True
        if not changed:
            break
    else:  # pragma: no cover
        raise NonSolvableError("inter-reduction did not stabilize")
    _check_confluence(pres, check_order)
    for s, F in enumerate(comps):
        if not pres.normal_form(F).is_zero():
            raise ConfluenceError(f"component {s} does not reduce to zero")
    return pres


def _check_confluence(pres: Presentation, check_order: int):
    """All jets divisible by two leading jets reduce identically."""
    n = pres.space.n
    for j, rules in pres._rules_by_dep.items():
        for a in range(len(rules)):
            for b in range(a + 1, len(rules)):
                Ia, sa = rules[a]
                Ib, sb = rules[b]
                lcm = tuple(max(x, y) for x, y in zip(Ia, Ib))
                pads = [mi_zero(n)]
                for extra in range(1, max(0, check_order - mi_order(lcm)) + 1):
                    pads.extend(mi_iter(n, extra))
                for pad in pads:
                    K = mi_add(lcm, pad)
                    via_a = pres.normal_form(_force_path(pres, j, K, Ia, sa))
                    via_b = pres.normal_form(_force_path(pres, j, K, Ib, sb))
                    if not (via_a - via_b).is_zero():
                        raise ConfluenceError(
                            f"critical pair at jet ({pres.space.dependent[j]}, {K}): "
                            f"{render(via_a)} != {render(via_b)}", jet=(j, K))


def _force_path(pres: Presentation, j, K, I, s) -> DiffExpr:
    e = pres.rhss[s]
    for i in range(pres.space.n):
        for _ in range(K[i] - I[i]):
            e = e.total_derivative(i)
    return e


@dataclass
class EquivalenceWitness:
    """Operators relating two presentations of the same equation, all
    expressed over the host (larger) presentation's space."""

    alpha: CDiffOp
    beta: CDiffOp
    alpha_p: CDiffOp
    beta_p: CDiffOp
    s1: CDiffOp
    s2: CDiffOp


def verify_equivalence(host: Presentation, other_components, m1: int,
                       w: EquivalenceWitness) -> dict:
    """Check the four compatibility identities between the host presentation
    and a second presentation of the same equation given by
    `other_components` (expressed on the host space, depending on the first
    m1 dependents).  Every identity is an operator identity modulo the host
    reduction."""
    space = host.space
    L2 = host.linearization()
    L1 = linearize(list(other_components), space, columns=range(m1))
    checks = {}

    def record(name, lhs, rhs):
        diff = host.restrict_operator(lhs - rhs)
        checks[name] = {"ok": diff.is_zero(),
                        "residual": diff.render_matrix()}

    record("lF1.beta = beta'.lF2", L1.compose(w.beta), w.beta_p.compose(L2))
    record("lF2.alpha = alpha'.lF1", L2.compose(w.alpha), w.alpha_p.compose(L1))
    record("beta.alpha = id + s1.lF1", w.beta.compose(w.alpha),
           CDiffOp.identity(space, m1) + w.s1.compose(L1))
    record("alpha.beta = id + s2.lF2", w.alpha.compose(w.beta),
           CDiffOp.identity(space, space.m) + w.s2.compose(L2))
    checks["ok"] = all(v["ok"] for k, v in checks.items() if k != "ok")
    return checks
