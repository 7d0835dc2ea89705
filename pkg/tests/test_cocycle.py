import numpy as np
import pytest

from cocyclelab import CircleCocycle, CocycleField, TrigPolynomial
from cocyclelab.base import SuspensionPoint
from cocyclelab.cocycle import BumpPlacementError, accumulate, bump_profile, parse_term
from cocyclelab.symplectic import diagonal_block, rotation_block, symplectic_defect


def _explicit_product(A, P, n):
    M = np.eye(2 * A.d)
    Q = P
    for _ in range(n):
        M = A.evaluate(Q) @ M
        Q = A.model.flow(Q, 1.0)
    return M


def test_evaluate_is_symplectic(rotation_cocycle, sp4_cocycle, model):
    P = model.volume_sample(100, 0)
    for A in (rotation_cocycle, sp4_cocycle):
        assert np.all(symplectic_defect(A.evaluate(P)) < 1e-12)


def test_rotation_cocycle_matches_formula(rotation_cocycle, model):
    P = model.volume_sample(20, 1)
    theta = TrigPolynomial.parse("0.5*sin(1,0,0) + 0.4*cos(0,1,0) + 0.3*sin(0,0,1)")
    assert np.allclose(rotation_cocycle.evaluate(P), rotation_block(theta(P.x, P.t)), atol=1e-15)


def test_iterate_matches_explicit_product(sp4_cocycle, model):
    P = model.volume_sample(1, 2)[0]
    it = sp4_cocycle.iterate(P, 40)
    assert np.allclose(it.value, _explicit_product(sp4_cocycle, P, 40), rtol=1e-10, atol=1e-12)
    assert it.endpoint.allclose(model.time_one(P, 40))


def test_cocycle_law(sp4_cocycle, model):
    P = model.volume_sample(1, 3)[0]
    m, n = 7, 11
    lhs = sp4_cocycle.iterate(P, m + n).value
    rhs = sp4_cocycle.iterate(model.time_one(P, m), n).value @ sp4_cocycle.iterate(P, m).value
    assert np.allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


def test_negative_iterate_inverts(sp4_cocycle, model):
    P = model.volume_sample(1, 4)[0]
    fwd = sp4_cocycle.iterate(P, 9)
    back = sp4_cocycle.iterate(fwd.endpoint, -9)
    assert np.allclose(back.value @ fwd.value, np.eye(4), atol=1e-10)


def test_log_scale_handles_growth(model):
    A = CocycleField.constant(model, diagonal_block(np.log(2.0)))
    it = A.iterate(model.volume_sample(1, 0)[0], 2000)
    assert float(it.log_norm()) == pytest.approx(2000 * np.log(2.0), rel=1e-12)


def test_accumulate_renormalises():
    mats = [np.diag([10.0, 0.1])] * 400
    M, log_scale = accumulate(iter(mats), (), 2)
    assert np.isfinite(M).all()
    assert log_scale + np.log(np.abs(M[0, 0])) == pytest.approx(400 * np.log(10.0))


def test_circle_cocycle_agrees_with_field(rotation_cocycle, model):
    leaf = model.leaf_with_period(3)
    circle = CircleCocycle(rotation_cocycle, leaf)
    s = np.array([0.25, 1.5])
    P = leaf.point_at(s)
    # the cached path (n > T) and the direct path must both match the field
    for n in (2, 10):
        assert np.allclose(circle.iterate(s, n).value, rotation_cocycle.iterate(P, n).value, atol=1e-12)
    assert np.allclose(circle.period_product(s), circle.iterate(s, 3).value, atol=1e-13)
    back = circle.iterate(s, -10).value
    assert np.allclose(back @ circle.iterate(circle.rotate(s, -10), 10).value, np.eye(2), atol=1e-10)


def test_past_matrices_order(rotation_cocycle, model):
    leaf = model.leaf_with_period(5)
    circle = CircleCocycle(rotation_cocycle, leaf)
    s = np.array(0.4)
    past = circle.past_matrices(s, 3)
    M = past[2] @ past[1] @ past[0]
    assert np.allclose(M, circle.iterate(circle.rotate(s, -3), 3).value, atol=1e-13)


def test_config_round_trip(sp4_cocycle, model):
    again = CocycleField.from_config(model, sp4_cocycle.to_config())
    P = model.volume_sample(10, 5)
    assert np.array_equal(again.evaluate(P), sp4_cocycle.evaluate(P))
    with pytest.raises(ValueError):
        parse_term("spin 1.0", 1)
    with pytest.raises(ValueError):
        parse_term("constant 2 0 0 2", 1)


def test_global_rotation_perturbation(rotation_cocycle, model):
    assert rotation_cocycle.perturb_global_rotation(0.0) is rotation_cocycle
    B = rotation_cocycle.perturb_global_rotation(0.3)
    P = model.volume_sample(5, 6)
    assert np.allclose(B.evaluate(P), rotation_block(0.3) @ rotation_cocycle.evaluate(P))


def test_bump_is_local(rotation_cocycle, model):
    Q = SuspensionPoint(np.array([0.2137, 0.6421]), np.array(0.5))
    B = rotation_cocycle.perturb_bump(Q, 0.02, rotation_block(0.01), orbit_window=5)
    far = model.volume_sample(500, 7)
    far = far[model.dist(far, Q) > 0.02]
    assert np.array_equal(B.evaluate(far), rotation_cocycle.evaluate(far))
    assert np.allclose(B.evaluate(Q), rotation_block(0.01) @ rotation_cocycle.evaluate(Q))


def test_bump_placement_guard(rotation_cocycle, model):
    fixed = SuspensionPoint(np.array([0.0, 0.0]), np.array(0.5))
    with pytest.raises(BumpPlacementError):
        rotation_cocycle.perturb_bump(fixed, 0.02, rotation_block(0.01))
    Q = SuspensionPoint(np.array([0.2137, 0.6421]), np.array(0.5))
    with pytest.raises(ValueError):
        rotation_cocycle.perturb_bump(Q, 0.02, diagonal_block(0.01))


def test_bump_profile_shape():
    u = np.array([0.0, 0.5, 0.999, 1.0, 2.0])
    phi = bump_profile(u)
    assert phi[0] == 1.0 and np.all(phi[3:] == 0.0)
    assert np.all(np.diff(phi) <= 0)


def test_holder_norm_constant_has_zero_seminorm(model):
    A = CocycleField.constant(model, diagonal_block(0.5))
    h = A.holder_norm(200)
    assert h.seminorm == 0.0
    assert h.sup_norm == pytest.approx(np.exp(0.5))


def test_holder_norm_prefix_property(rotation_cocycle):
    small = rotation_cocycle.holder_norm(100, seed=3)
    big = rotation_cocycle.holder_norm(1000, seed=3)
    assert big.seminorm >= small.seminorm > 0
    # the rotation angle has Lipschitz bound 2 pi (0.5 + 0.4 + 0.3) and |dR/dtheta| = 1
    assert big.seminorm <= 2 * np.pi * 1.2 + 1e-9


def test_rejects_bad_alpha(model):
    with pytest.raises(ValueError):
        CocycleField(model, 1, (), 1.5)
