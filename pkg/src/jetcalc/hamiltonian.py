"""Variational multivectors and the Schouten bracket by two routes, the
Magri scheme, and equation-level bivector verification.

The odd-variable route encodes a bivector A = ||sum a_sigma^{ij} D_sigma||
as the superdensity  W_A = sum a_sigma^{ij} p^i_sigma p^j  on the space
extended by one odd momentum family per dependent variable; A is a
Hamiltonian structure iff the density  sum_i (dW/du^i)(dW/dp^i)  has
vanishing variational derivative in every even and odd variable, and two
structures are compatible iff the polarized density passes the same test.
The direct route evaluates the graded un-shuffle bracket on supplied
gradients; agreement of the two routes pins all sign conventions."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

from .algebra import (
    DiffExpr,
    JetSpace,
    apply_DI,
    euler,
    homotopy_density,
    invert_total_derivative,
    mi_order,
    mi_unit,
    mi_zero,
    render,
)
from .errors import AnsatzError, ShapeError, VariationalityError
from .analysis import Ansatz, BilinearNabla, ell_delta_op
from .coverings import Covering, cotangent_covering
from .linalg import nullspace
from .operators import CDiffOp, ev_apply, jacobi, linearize, pairing_density
from .presentations import Presentation


# -- superdensities ----------------------------------------------------------


def momenta_space(space: JetSpace) -> JetSpace:
    """Extend by one odd momentum family p_<name> per dependent variable."""
    names = [f"p_{name}" for name in space.dependent]
    return space.extended(dependent=names, odd=names)


@dataclass
class Superdensity:
    """Multivector as a density multilinear in the odd momentum families."""

    space: JetSpace          # extended space (momenta_space of the base)
    base_m: int              # number of even dependents
    expr: DiffExpr
    degree: int

    def is_zero(self) -> bool:
        return self.expr.is_zero()


def to_superdensity(op: CDiffOp) -> Superdensity:
    """W_A = <A(p), p> = sum a_sigma^{ij} p^j_sigma p^i for a square
    operator (the undifferentiated momentum carries the row index; for one
    dependent variable this is the familiar  sum a_sigma p_sigma p)."""
    if op.rows != op.cols:
        raise ShapeError("superdensity encoding needs a square operator")
    space = op.space
    ext = momenta_space(space)
    m = space.m
    W = ext.zero()
    for (i, j), tab in sorted(op.entries.items()):
        pi = ext.jet(m + i, mi_zero(ext.n))
        for sigma, a in sorted(tab.items()):
            W = W + a.rename_space(ext) * ext.jet(m + j, sigma) * pi
    return Superdensity(ext, m, W, 2)


def from_superdensity(sd: Superdensity) -> CDiffOp:
    """Skew operator recovered from a fiber-quadratic superdensity:
    integrate by parts until every monomial carries an undifferentiated
    momentum, then read the coefficients and project to the skew part."""
    if sd.degree != 2:
        raise ShapeError("operator form exists for fiber degree 2")
    ext = sd.space
    m = sd.base_m
    W = sd.expr
    # strip derivatives from the lower-order slot until one factor is plain
    while True:
        target = None
        for mono in sorted(W.terms):
            odd = [k for k, _ in mono if k[0] == 'j' and k[1] >= m]
            if len(odd) != 2:
                raise ShapeError("superdensity is not fiber-quadratic")
            if all(mi_order(k[2]) > 0 for k in odd):
                target = (mono, min(odd, key=lambda k: (mi_order(k[2]), k)))
                break
        if target is None:
            break
        mono, key = target
        c = W.terms[mono]
        i = max(k for k in range(ext.n) if key[2][k] > 0)
        down = ('j', key[1], tuple(v - (1 if k == i else 0)
                                   for k, v in enumerate(key[2])))
        rest = [(k, e) for k, e in mono if k != key]
        piece = DiffExpr(ext, {tuple(sorted(rest + [(down, 1)])): c})
        W = W - piece.total_derivative(i)
    entries = {}
    base = ext  # coefficients may mention only even variables
    for mono, c in sorted(W.terms.items()):
        odd = [k for k, _ in mono if k[0] == 'j' and k[1] >= m]
        plain = [k for k in odd if mi_order(k[2]) == 0]
        k0 = plain[-1]
        ks = odd[0] if odd[1] == k0 else odd[1]
        # coefficient of the slot-ordered product p^j_sigma p^i
        sign = 1 if (ks, k0) == (odd[0], odd[1]) else -1
        coeff = DiffExpr(base, {tuple((k, e) for k, e in mono if k not in odd):
                                c * sign})
        i, j = k0[1] - m, ks[1] - m
        tab = entries.setdefault((i, j), {})
        cur = tab.get(ks[2])
        tab[ks[2]] = coeff if cur is None else cur + coeff
    op = CDiffOp(ext, m, m, entries).map_coefficients(
        lambda a: a.rename_space(sd.space))
    op = CDiffOp(sd.space, m, m, op.entries)
    # strip momenta from the carrier space
    carrier = JetSpace.create(sd.space.independent, sd.space.dependent[:m],
                              sd.space.parameters, sd.space.nonlocals,
                              [n for n in sd.space.odd
                               if n in sd.space.dependent[:m] or n in sd.space.nonlocals])
    op = CDiffOp(carrier, m, m,
                 {rc: {I: a.rename_space(carrier) for I, a in tab.items()}
                  for rc, tab in op.entries.items()})
    return op.scale(Fraction(1, 2)) - op.adjoint().scale(Fraction(1, 2))


def _bracket_density(op1: CDiffOp, op2: CDiffOp) -> DiffExpr:
    """sum_i dW1/du^i dW2/dp^i + dW2/du^i dW1/dp^i on the momentum space."""
    W1 = to_superdensity(op1)
    W2 = to_superdensity(op2)
    ext = W1.space
    m = W1.base_m
    out = ext.zero()
    for i in range(m):
        du1 = euler(W1.expr, [i])[0]
        du2 = euler(W2.expr, [i])[0]
        dp1 = euler(W1.expr, [m + i])[0]
        dp2 = euler(W2.expr, [m + i])[0]
        out = out + du1 * dp2 + du2 * dp1
    return out


def is_hamiltonian(op: CDiffOp) -> bool:
    """[[A, A]] = 0 via the odd-variable criterion."""
    W = to_superdensity(op)
    ext = W.space
    m = W.base_m
    density = ext.zero()
    for i in range(m):
        density = density + euler(W.expr, [i])[0] * euler(W.expr, [m + i])[0]
    return all(e.is_zero() for e in euler(density))


def are_compatible(op1: CDiffOp, op2: CDiffOp) -> bool:
    """[[A, B]] = 0 via the polarized odd-variable criterion."""
    return all(e.is_zero() for e in euler(_bracket_density(op1, op2)))


# -- direct (un-shuffle) bracket ----------------------------------------------


def _ell(delta, psis):
    """The operator chi -> E_chi(delta)(psis...) for delta of degree <= 2."""
    if isinstance(delta, CDiffOp):
        return ell_delta_op(delta, psis[0])
    return linearize(delta)  # vector: l_phi


def schouten_direct(A, B, psis=()):
    """Eq.-style literal un-shuffle bracket for small degrees.

    Degrees are inferred from the argument types: CDiffOp = bivector,
    list of expressions = vector, DiffExpr = density.  Returns a vector
    for results in degree 1, a density for degree 0."""
    psis = list(psis)
    if isinstance(B, DiffExpr) and isinstance(A, DiffExpr):
        raise ShapeError("bracket of two densities is not defined")
    if isinstance(B, DiffExpr):
        if isinstance(A, CDiffOp):
            return A.apply(euler(B))      # [[A, omega]] = A(delta omega)
        return ev_apply(A, B)             # [[phi, omega]] = [E_phi(omega)]
    if isinstance(A, DiffExpr):
        out = schouten_direct(B, A, psis)
        # graded antisymmetry: [[omega, B]] = -(-1)^(q-1) [[B, omega]]
        if isinstance(B, list):
            return -out
        return out
    if isinstance(A, list) and isinstance(B, list):
        return jacobi(A, B)
    if isinstance(A, CDiffOp) and isinstance(B, list):
        # [[A, phi]](psi) = E_{A psi}(phi) - E_phi(A)(psi) + A(l_phi*(psi))
        (psi,) = psis
        t1 = [ev_apply(A.apply(psi), comp) for comp in B]
        t2 = ell_delta_op(A, psi).apply(B)
        t3 = A.apply(linearize(B).adjoint().apply(psi))
        return [a - b + c for a, b, c in zip(t1, t2, t3)]
    if isinstance(A, list) and isinstance(B, CDiffOp):
        out = schouten_direct(B, A, psis)
        return [-x for x in out]
    # bivector-bivector: two gradient arguments
    psi1, psi2 = psis
    t1 = ell_delta_op(B, psi1).apply(A.apply(psi2))
    t2 = ell_delta_op(B, psi2).apply(A.apply(psi1))
    t3 = ell_delta_op(A, psi1).apply(B.apply(psi2))
    t4 = ell_delta_op(A, psi2).apply(B.apply(psi1))
    t5 = B.apply(ell_delta_op(A, psi1).adjoint().apply(psi2))
    t6 = A.apply(ell_delta_op(B, psi1).adjoint().apply(psi2))
    return [a - b + c - d + e + f
            for a, b, c, d, e, f in zip(t1, t2, t3, t4, t5, t6)]


def schouten_pairing(A, B, psi1, psi2, psi3) -> DiffExpr:
    """Density <[[A,B]](psi1, psi2), psi3>; trivial iff euler = 0."""
    return pairing_density(schouten_direct(A, B, [psi1, psi2]), psi3)


# -- Poisson brackets and the Magri scheme -------------------------------------


def poisson_bracket(omega1: DiffExpr, omega2: DiffExpr, A: CDiffOp):
    """<A(delta w1), delta w2> as a density with a triviality verdict."""
    density = pairing_density(A.apply(euler(omega1)), euler(omega2))
    return density, all(e.is_zero() for e in euler(density))


def _free_monomials(space: JetSpace, ansatz: Ansatz):
    gens = []
    for i, name in enumerate(space.independent):
        if ansatz.whitelist is None or name in ansatz.whitelist:
            gens.append(space.indep(i))
    for j in range(space.m):
        if ansatz.whitelist is None or space.dependent[j] in ansatz.whitelist:
            for order in range(ansatz.max_jet_order + 1):
                for K in _indices(space.n, order):
                    gens.append(space.jet(j, K))
    monos = [space.one()]
    for deg in range(1, ansatz.max_degree + 1):
        for combo in combinations_with_replacement(range(len(gens)), deg):
            m = space.one()
            for k in combo:
                m = m * gens[k]
            monos.append(m)
    return monos


def _indices(n, order):
    from .algebra import mi_iter
    return list(mi_iter(n, order))


def solve_linear(A: CDiffOp, target, ansatz: Ansatz):
    """One solution psi of A(psi) = target within the ansatz, or None."""
    space = A.space
    monos = _free_monomials(space, ansatz)
    cands = []
    for slot in range(A.cols):
        for m in monos:
            vec = [space.zero()] * A.cols
            vec[slot] = m
            cands.append(vec)
    if not cands:
        raise AnsatzError("ansatz generates no unknowns")
    rowidx = {}
    cols = []
    for cand in cands:
        image = A.apply(cand)
        col = {}
        for comp, expr in enumerate(image):
            for mono, c in expr.terms.items():
                col[rowidx.setdefault((comp, mono), len(rowidx))] = c
        cols.append(col)
    last = {}
    for comp, expr in enumerate(target):
        for mono, c in expr.terms.items():
            last[rowidx.setdefault((comp, mono), len(rowidx))] = c
    rows = [dict() for _ in range(len(rowidx))]
    for j, col in enumerate(cols):
        for r, c in col.items():
            rows[r][j] = c
    for r, c in last.items():
        rows[r][len(cands)] = c
    for vec in nullspace(rows, len(cands) + 1):
        if vec[-1]:
            scale = Fraction(-1) / vec[-1]
            sol = [space.zero()] * A.cols
            for j, c in enumerate(vec[:-1]):
                if c:
                    sol = [s + cands[j][k] * (c * scale)
                           for k, s in enumerate(sol)]
            return sol
    return None


def _is_single_dx(A: CDiffOp, xindex: int) -> bool:
    if A.rows != 1 or A.cols != 1:
        return False
    tab = A.entry(0, 0)
    unit = mi_unit(A.space.n, xindex)
    return set(tab) == {unit} and tab[unit] == A.space.one()


def magri_step(A: CDiffOp, B: CDiffOp, omega: DiffExpr,
               ansatz: Ansatz = None, xindex: int = 0) -> DiffExpr:
    """Next density up the hierarchy: solve A(psi) = B(delta omega), check
    the Helmholtz condition, return its homotopy density."""
    phi = B.apply(euler(omega))
    if _is_single_dx(A, xindex):
        psi = [invert_total_derivative(phi[0], xindex)]
    else:
        psi = solve_linear(A, phi, ansatz or Ansatz(4, 3))
        if psi is None:
            raise AnsatzError("no ansatz solution of A(psi) = B(delta omega)")
    h = linearize(psi)
    if not (h - h.adjoint()).is_zero():
        raise VariationalityError(
            "psi fails the Helmholtz condition: the hierarchy terminates")
    return homotopy_density(psi)


def magri_chain(A: CDiffOp, B: CDiffOp, omega: DiffExpr, steps: int,
                ansatz: Ansatz = None, xindex: int = 0):
    """Iterated Magri steps; returns (densities, flows) with
    flows[k] = A(delta densities[k])."""
    densities = [omega]
    for _ in range(steps):
        densities.append(magri_step(A, B, densities[-1], ansatz, xindex))
    flows = [A.apply(euler(w)) for w in densities]
    return densities, flows


# -- equation-level bivectors ----------------------------------------------


def verify_bivector_on_equation(delta: CDiffOp, pres: Presentation) -> dict:
    """Membership  l_F delta = delta* l_F*  modulo reduction."""
    L = pres.linearization()
    theta = L.compose(delta) - delta.adjoint().compose(L.adjoint())
    residual = pres.restrict_operator(theta)
    return {"ok": residual.is_zero(), "residual": residual.render_matrix()}


def _eq_bracket_on_dummies(d1: CDiffOp, d2: CDiffOp, pres: Presentation):
    """[[d1, d2]](a, b) on two fresh even dummy families, with the nabla
    corrections extracted from cofactors; reduced modulo the presentation."""
    space = pres.space
    l = len(pres.components)
    names_a = [f"_a{s}" for s in range(l)]
    names_b = [f"_b{s}" for s in range(l)]
    ext_pres = pres.extend_space(dependent=names_a + names_b)
    ext = ext_pres.space
    m = space.m
    avec = [ext.jet(m + s, mi_zero(ext.n)) for s in range(l)]
    bvec = [ext.jet(m + l + s, mi_zero(ext.n)) for s in range(l)]
    L = pres.linearization()
    nablas = []
    ops = []
    for d in (d1, d2):
        theta = L.compose(d) - d.adjoint().compose(L.adjoint())
        nablas.append(BilinearNabla(pres, theta))
        ops.append(d.rename_space(ext))
    D1, D2 = ops
    n1, n2 = nablas

    def nf(vec):
        return [ext_pres.normal_form(x) for x in vec]

    t1 = ell_delta_op(D2, avec, m).apply(D1.apply(bvec))
    t2 = ell_delta_op(D2, bvec, m).apply(D1.apply(avec))
    t3 = ell_delta_op(D1, avec, m).apply(D2.apply(bvec))
    t4 = ell_delta_op(D1, bvec, m).apply(D2.apply(avec))
    t5 = D2.apply(_nabla_star1(n1, bvec, avec, ext_pres))
    t6 = D1.apply(_nabla_star1(n2, bvec, avec, ext_pres))
    total = [a - b + c - d + e + f
             for a, b, c, d, e, f in zip(t1, t2, t3, t4, nf(t5), nf(t6))]
    return nf(total), ext_pres, avec, bvec


def _nabla_star1(nabla: BilinearNabla, chi, arg, pres_ext: Presentation):
    ext = pres_ext.space
    out = [ext.zero() for _ in range(nabla.l)]
    for (r, c, J, s, K, lam) in nabla.data:
        coeff = lam.rename_space(ext) * apply_DI(arg[c], J)
        piece = apply_DI(coeff * chi[r], K)
        if mi_order(K) % 2:
            piece = -piece
        out[s] = out[s] + piece
    return out


def schouten_on_equation(d1: CDiffOp, d2: CDiffOp, pres: Presentation,
                         cot: Covering = None) -> dict:
    """Triviality of [[d1, d2]] on the equation: the bracket is encoded as
    a fiber-cubic superdensity on the cotangent covering (odd fibers),
    reduced modulo its rules, and tested by the internal Euler operator."""
    for d, name in ((d1, "first"), (d2, "second")):
        chk = verify_bivector_on_equation(d, pres)
        if not chk["ok"]:
            return {"ok": False, "trivial": False,
                    "reason": f"{name} operator is not an equation bivector",
                    "residual": chk["residual"]}
    T, ext_pres, avec, bvec = _eq_bracket_on_dummies(d1, d2, pres)
    if cot is None:
        cot = cotangent_covering(pres)
    cspace = cot.space
    m = pres.space.m
    l = len(pres.components)
    akeys = {('j', m + s, None): s for s in range(l)}
    density = cspace.zero()
    for j, comp in enumerate(T):
        pj = cspace.jet(m + j, mi_zero(cspace.n))
        for mono, c in sorted(comp.terms.items()):
            akey = bkey = None
            rest = []
            for key, e in mono:
                if key[0] == 'j' and key[1] >= m:
                    if key[1] < m + l:
                        akey = key
                    else:
                        bkey = key
                else:
                    rest.append((key, e))
            if akey is None or bkey is None:
                raise ShapeError("bracket term is not bilinear in the arguments")
            base = DiffExpr(cspace, {tuple(rest): c})
            pa = cspace.jet(m + (akey[1] - m), akey[2])
            pb = cspace.jet(m + (bkey[1] - m - l), bkey[2])
            density = density + base * pa * pb * pj
    density = cot.presentation.normal_form(density)
    residues = euler_internal(cot.presentation, density)
    trivial = all(r.is_zero() for r in residues)
    return {"ok": True, "trivial": trivial,
            "residual": [render(r) for r in residues if not r.is_zero()]}


def euler_internal(pres: Presentation, density: DiffExpr, targets=None):
    """Variational derivative in internal coordinates: sum over the internal
    multi-indices present, with restricted total derivatives."""
    space = pres.space
    if targets is None:
        targets = range(space.m)
    out = []
    for j in targets:
        total = space.zero()
        for key in density.jet_keys():
            if key[1] != j:
                continue
            part = density.partial(key)
            if part.is_zero():
                continue
            part = pres.apply_DI_bar(part, key[2])
            total = total + part if mi_order(key[2]) % 2 == 0 else total - part
        out.append(pres.normal_form(total))
    return out
