import random

import pytest

from jetcalc import (
    CDiffOp,
    JetSpace,
    PseudoOp,
    ev_apply,
    euler,
    green_form,
    helmholtz,
    jacobi,
    linearize,
    pairing_density,
    parse,
)
from jetcalc.errors import ShapeError

SP = JetSpace.create(["x", "t"], ["u"])


def rand_expr(space, rng, maxord=2, maxdeg=2, nterms=2):
    e = space.zero()
    for _ in range(nterms):
        m = space.num(rng.randint(-3, 3))
        for _ in range(rng.randint(0, maxdeg)):
            k = rng.randint(0, maxord + 1)
            m = m * (space.jet(0, (k, 0)) if k <= maxord else space.indep(0))
        e = e + m
    return e


def rand_op(space, rng, maxorder=3):
    tab = {}
    for _ in range(rng.randint(1, 3)):
        I = (rng.randint(0, maxorder), rng.randint(0, 1))
        tab[I] = rand_expr(space, rng)
    return CDiffOp.scalar(space, tab)


def test_compose_leibniz():
    u = SP.jet("u", (0, 0))
    Dx = CDiffOp.total_derivative(SP, 0)
    comp = Dx.compose(CDiffOp.mult(SP, u))
    assert comp == CDiffOp.scalar(SP, {(0, 0): SP.jet("u", (1, 0)), (1, 0): u})
    ident = CDiffOp.identity(SP, 1)
    assert Dx.compose(ident) == Dx
    assert Dx.compose(Dx).apply1(u) == SP.jet("u", (2, 0))


def test_compose_shape_mismatch():
    Dx = CDiffOp.total_derivative(SP, 0)
    wide = CDiffOp(SP, 1, 2, {(0, 0): {(0, 0): SP.one()}})
    with pytest.raises(ShapeError):
        wide.compose(wide)
    assert Dx.compose(wide).cols == 2


def test_adjoint_examples():
    u = SP.jet("u", (0, 0))
    ux = SP.jet("u", (1, 0))
    Dx = CDiffOp.total_derivative(SP, 0)
    assert Dx.adjoint() == Dx.scale(-1)
    A = CDiffOp.scalar(SP, {(1, 0): u})
    # (u D_x)* = -u D_x - u_x, term-by-term integration by parts
    assert A.adjoint() == CDiffOp.scalar(SP, {(1, 0): -u, (0, 0): -ux})
    F = parse("u[0,1] - 6*u[0,0]*u[1,0] - u[3,0]", SP)
    lFs = linearize([F]).adjoint()
    assert lFs == CDiffOp.scalar(SP, {(0, 1): SP.num(-1), (3, 0): SP.one(),
                                      (1, 0): 6 * u})


def test_adjoint_involution_and_antihomomorphism():
    rng = random.Random(23)
    for _ in range(40):
        A = rand_op(SP, rng, maxorder=4)
        B = rand_op(SP, rng, maxorder=2)
        assert A.adjoint().adjoint() == A
        assert A.compose(B).adjoint() == B.adjoint().compose(A.adjoint())


def test_linearize_kdv():
    F = parse("u[0,1] - 6*u[0,0]*u[1,0] - u[3,0]", SP)
    lF = linearize([F])
    expect = CDiffOp.scalar(SP, {
        (0, 1): SP.one(), (3, 0): SP.num(-1),
        (1, 0): -6 * SP.jet("u", (0, 0)), (0, 0): -6 * SP.jet("u", (1, 0))})
    assert lF == expect
    assert linearize([SP.jet("u", (0, 0))]) == CDiffOp.identity(SP, 1)


def test_linearize_3component():
    sp3 = JetSpace.create(["x", "t"], ["u", "v", "w"])
    F = [parse("u[1,0] - v[0,0]", sp3), parse("v[1,0] - w[0,0]", sp3),
         parse("w[1,0] - u[0,1] + 6*u[0,0]*v[0,0]", sp3)]
    L = linearize(F)
    one = sp3.one()
    assert L.entry(0, 0) == {(1, 0): one}
    assert L.entry(0, 1) == {(0, 0): -one}
    assert L.entry(2, 0) == {(0, 1): -one, (0, 0): 6 * sp3.jet("v", (0, 0))}
    assert L.entry(2, 1) == {(0, 0): 6 * sp3.jet("u", (0, 0))}
    assert L.entry(2, 2) == {(1, 0): one}


def test_ev_apply():
    ux = SP.jet("u", (1, 0))
    assert ev_apply([ux], SP.jet("u", (0, 0))) == ux
    rng = random.Random(31)
    for _ in range(20):
        f = rand_expr(SP, rng)
        # E_{u_x}(f) = D_x f - df/dx
        lhs = ev_apply([ux], f)
        rhs = f.total_derivative(0) - f.partial(('i', 0))
        assert (lhs - rhs).is_zero()
        assert ev_apply([rand_expr(SP, rng)], SP.num(5)).is_zero()


def test_ev_commutes_with_total_derivatives():
    rng = random.Random(37)
    for _ in range(25):
        phi = [rand_expr(SP, rng)]
        e = rand_expr(SP, rng)
        for i in range(2):
            a = ev_apply(phi, e.total_derivative(i))
            b = ev_apply(phi, e).total_derivative(i)
            assert (a - b).is_zero()


def test_jacobi_examples():
    ux = SP.jet("u", (1, 0))
    phi2 = parse("6*t*u[1,0] + 1", SP)
    assert all(x.is_zero() for x in jacobi([ux], [phi2]))
    flow = parse("6*u[0,0]*u[1,0] + u[3,0]", SP)
    assert all(x.is_zero() for x in jacobi([ux], [flow]))
    rng = random.Random(41)
    phi = [rand_expr(SP, rng)]
    assert all(x.is_zero() for x in jacobi(phi, phi))


def test_jacobi_identity():
    rng = random.Random(43)
    for _ in range(15):
        a = [rand_expr(SP, rng, nterms=2)]
        b = [rand_expr(SP, rng, nterms=2)]
        c = [rand_expr(SP, rng, nterms=2)]
        total = [x + y + z for x, y, z in zip(
            jacobi(a, jacobi(b, c)), jacobi(b, jacobi(c, a)),
            jacobi(c, jacobi(a, b)))]
        assert all(x.is_zero() for x in total)


def test_helmholtz():
    assert helmholtz([parse("3*u[0,0]^2 + u[2,0]", SP)]).is_zero()
    assert helmholtz([SP.jet("u", (0, 0))]).is_zero()
    h = helmholtz([SP.jet("u", (1, 0))])
    assert h == CDiffOp.scalar(SP, {(1, 0): SP.num(2)})


def test_helmholtz_of_euler_is_zero():
    rng = random.Random(47)
    for _ in range(30):
        L = rand_expr(SP, rng, maxdeg=3, nterms=3)
        assert helmholtz(euler(L)).is_zero()


def test_green_form_examples():
    sp1 = JetSpace.create(["x"], ["u"])
    p = sp1.jet("u", (1,))
    q = sp1.jet("u", (0,)) * sp1.jet("u", (2,))
    Dx = CDiffOp.total_derivative(sp1, 0)
    assert green_form(Dx, [p], [q]).component(()) == p * q
    D2 = CDiffOp.scalar(sp1, {(2,): sp1.one()})
    g2 = green_form(D2, [p], [q]).component(())
    assert g2 == p.total_derivative(0) * q - p * q.total_derivative(0)
    assert green_form(CDiffOp.identity(sp1, 1), [p], [q]).component(()).is_zero()


def test_green_identity_random():
    rng = random.Random(53)
    for _ in range(25):
        op = rand_op(SP, rng)
        p = [rand_expr(SP, rng)]
        q = [rand_expr(SP, rng)]
        form = green_form(op, p, q)
        lhs = pairing_density(op.apply(p), q) - \
            pairing_density(p, op.adjoint().apply(q))
        rhs = form.component((1,)).total_derivative(0) - \
            form.component((0,)).total_derivative(1)
        assert (lhs - rhs).is_zero()


def test_operator_json_roundtrip():
    rng = random.Random(59)
    op = rand_op(SP, rng)
    data = op.to_json()
    back = CDiffOp.from_json(SP, 1, 1, data)
    assert back == op


def lenard(space):
    u = space.jet("u", (0, 0))
    ux = space.jet("u", (1, 0))
    return PseudoOp(CDiffOp.scalar(space, {(2, 0): space.one(), (0, 0): 4 * u}),
                    [([2 * ux], CDiffOp.identity(space, 1))], 0)


def test_pseudo_apply_free():
    R = lenard(SP)
    ux = SP.jet("u", (1, 0))
    flow = R.apply1(ux)
    assert flow == parse("6*u[0,0]*u[1,0] + u[3,0]", SP)
    flow2 = R.apply1(flow)
    assert flow2 == parse("u[5,0] + 10*u[0,0]*u[3,0] + 20*u[1,0]*u[2,0]"
                          " + 30*u[0,0]^2*u[1,0]", SP)


def test_pseudo_json_roundtrip():
    R = lenard(SP)
    data = R.to_json()
    back = PseudoOp.from_json(SP, 1, 1, data)
    assert back.local == R.local
    assert back.apply1(SP.jet("u", (1, 0))) == R.apply1(SP.jet("u", (1, 0)))


def test_formal_commutator():
    R = lenard(SP)
    Dx = CDiffOp.total_derivative(SP, 0)
    L = (R.ev([SP.jet("u", (1, 0))]) - R.commutator_local(Dx)).normalized()
    assert L.local.is_zero() and not L.tails
