import numpy as np
import pytest

from cocyclelab import CocycleField, TrigPolynomial
from cocyclelab.base import SuspensionPoint
from cocyclelab.config import ExperimentConfig
from cocyclelab.holonomy import (
    HolonomyDivergenceError,
    bunching_certificate,
    center_jacobian,
    extend_stable_holonomy,
    holonomy_along_leaf,
    homoclinic_loop_map,
    stable_holonomy,
    unstable_holonomy,
)
from cocyclelab.symplectic import diagonal_block, rotation_block, sp_inverse, symplectic_defect

THETA = TrigPolynomial.parse("0.5*sin(1,0,0) + 0.4*cos(0,1,0) + 0.3*sin(0,0,1)")


def _angle_series_oracle(model, P, a, side, n=80):
    """Commuting rotations: H = R(sum of angle differences along the two orbits)."""
    xs, ys = model.leaf_orbit(P, a, n, side)
    t = np.broadcast_to(P.t, xs.shape[:-1])
    if side == "s":
        total = np.sum(THETA(xs[:-1], t[:-1]) - THETA(ys[:-1], t[:-1]), axis=0)
    else:
        total = np.sum(THETA(ys[1:], t[1:]) - THETA(xs[1:], t[1:]), axis=0)
    return rotation_block(total)


@pytest.mark.parametrize("side", ["s", "u"])
def test_rotation_holonomy_matches_closed_form(rotation_cocycle, model, side):
    P = model.volume_sample(30, 0)
    a = np.linspace(-0.05, 0.05, 30)
    H = holonomy_along_leaf(rotation_cocycle, P, a, side)
    err = np.linalg.norm(H.matrix - _angle_series_oracle(model, P, a, side), ord=2, axis=(-2, -1))
    # truncation stops at tol, so the honest comparison is against each pair's tail bound
    assert np.all(err <= H.tail_bound + 1e-12)
    assert err.max() < 1e-7


def test_constant_cocycle_has_trivial_holonomy(model):
    A = CocycleField.constant(model, diagonal_block(0.8))
    P = model.volume_sample(10, 1)
    H = holonomy_along_leaf(A, P, np.full(10, 0.03), "s")
    assert np.array_equal(H.matrix, np.broadcast_to(np.eye(2), (10, 2, 2)))


def test_identity_at_zero_offset(sp4_cocycle, model):
    P = model.volume_sample(1, 2)[0]
    H = holonomy_along_leaf(sp4_cocycle, P, 0.0, "u")
    assert np.array_equal(H.matrix, np.eye(4)) and int(H.truncation_n) == 0


def test_sp4_holonomy_properties(sp4_cocycle, model):
    A = sp4_cocycle
    P = model.volume_sample(20, 3)
    a = np.linspace(-0.04, 0.04, 20)
    H = holonomy_along_leaf(A, P, a, "s")
    assert np.all(symplectic_defect(H.matrix) < 1e-9)
    # equivariance: H_{fp,fq} = A(q) H_{p,q} A(p)^-1
    fP = model.flow(P, 1.0)
    q = model.stable_leaf_point(P, a)
    H1 = holonomy_along_leaf(A, fP, a * model.F.mu_s, "s")
    assert np.abs(H1.matrix - A.evaluate(q) @ H.matrix @ sp_inverse(A.evaluate(P))).max() < 1e-8
    # composition through the midpoint
    w = model.stable_leaf_point(P, a / 2)
    Hpw = holonomy_along_leaf(A, P, a / 2, "s")
    Hwq = holonomy_along_leaf(A, w, a / 2, "s")
    assert np.abs(H.matrix - Hwq.matrix @ Hpw.matrix).max() < 1e-8
    # inverse: H_{q,p} H_{p,q} = I
    Hqp = holonomy_along_leaf(A, q, -a, "s")
    assert np.abs(Hqp.matrix @ H.matrix - np.eye(4)).max() < 1e-8


def test_endpoint_wrappers(rotation_cocycle, model):
    P = model.volume_sample(5, 4)
    a = np.full(5, 0.01)
    for side, shift, fn in (
        ("s", model.stable_leaf_point, stable_holonomy),
        ("u", model.unstable_leaf_point, unstable_holonomy),
    ):
        H = fn(rotation_cocycle, P, shift(P, a))
        assert np.allclose(H.matrix, holonomy_along_leaf(rotation_cocycle, P, a, side).matrix, atol=1e-10)


def test_tail_bound_covers_truncation_error(sp4_cocycle, model):
    P = model.volume_sample(20, 5)
    a = np.full(20, 0.05)
    Hn = holonomy_along_leaf(sp4_cocycle, P, a, "s", tol=0.0, n_max=8)
    Hlong = holonomy_along_leaf(sp4_cocycle, P, a, "s", tol=0.0, n_max=30)
    err = np.linalg.norm(Hn.matrix - Hlong.matrix, ord=2, axis=(-2, -1))
    assert np.all(err <= Hn.tail_bound)


def test_bridge_independence(rotation_cocycle, model):
    P = model.volume_sample(1, 6)[0]
    e1 = extend_stable_holonomy(rotation_cocycle, P, 0.7, 3)
    e2 = extend_stable_holonomy(rotation_cocycle, P, 0.7, 6)
    assert np.abs(e1 - e2).max() < 1e-9
    with pytest.raises(ValueError):
        extend_stable_holonomy(rotation_cocycle, P, 5.0, 1)


def test_bunching_certificate_boundary(model):
    consts = model.hyperbolicity_constants()
    s_star = -0.5 * np.log(consts.lam)
    assert s_star == pytest.approx(0.4812, abs=1e-4)
    inside = CocycleField.constant(model, diagonal_block(s_star - 0.01))
    outside = CocycleField.constant(model, diagonal_block(s_star + 0.01))
    assert bunching_certificate(inside, 1.0, consts, 8).verdict
    assert not bunching_certificate(outside, 1.0, consts, 8).verdict


def test_unbunched_cocycle_diverges(model):
    cfg = ExperimentConfig(
        cocycle={"d": "1", "alpha": "1.0", "term0": "constant 5.0 0.0 0.0 0.2", "term1": "rotation 0.3*sin(1,0,0)"}
    )
    A = cfg.build_cocycle()
    assert not bunching_certificate(A, 1.0, model.hyperbolicity_constants(), 20).verdict
    with pytest.raises(HolonomyDivergenceError):
        holonomy_along_leaf(A, model.volume_sample(3, 0), np.full(3, 0.05), "s")


def test_center_jacobian(model, wavy_model):
    F = model.F
    p = np.array([0.3, 0.2])
    z = p + 0.01 * F.v_s
    assert center_jacobian(model, p, z, 0.4) == 1.0
    val, series = center_jacobian(wavy_model, p, z, 0.4, return_series=True)
    assert abs(val - 1) > 1e-4
    assert abs(series[-1] - series[-5]) < 1e-8
    # swapping the roles of p and z gives the reciprocal
    back = center_jacobian(wavy_model, z, p, 0.4)
    assert 0.95 < val * back < 1.05
    with pytest.raises(ValueError):
        center_jacobian(model, p, p + 0.01 * F.v_u, 0.4)


def test_homoclinic_loop(rotation_cocycle, model):
    leaf = model.leaf_with_period(5)
    hp = model.homoclinic_points(leaf.orbit[0], 2, leaf.orbit[1], 1)[0]
    A = rotation_cocycle.perturb_global_rotation(0.2)
    loop = homoclinic_loop_map(A, leaf, hp)
    assert loop.omega == pytest.approx(1.0)
    s = np.array([0.3, 1.2, 3.7])
    assert np.allclose(loop.measured_omega(s), loop.omega, atol=1e-9)
    H = loop.matrix(s)
    assert np.all(symplectic_defect(H) < 1e-12)
    end, M2 = loop.iterate(2, s)
    assert np.allclose(M2, loop.matrix(loop.h(s)) @ H, atol=1e-14)
    assert np.allclose(end, leaf.rotate(s, 2))
    _, M0 = loop.iterate(0, s)
    assert np.array_equal(M0[0], np.eye(2))
    with pytest.raises(ValueError):
        loop.h(0.0)
