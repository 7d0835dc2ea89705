import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cocyclelab.symplectic import (
    J_matrix,
    NotSymplecticError,
    ProjectivePoint,
    Subspace,
    SymplecticMatrix,
    TransversalityError,
    diagonal_block,
    is_symplectic,
    make_transverse,
    principal_angle,
    projective_angle,
    random_symplectic_near_identity,
    rotation_angle,
    rotation_block,
    sp_inverse,
    standard_form,
    subspace_intersection_dim,
    symplectic_defect,
    symplectify,
)


def test_standard_form_is_antisymmetric_and_squares_to_minus_identity():
    for d in (1, 2, 3):
        J = standard_form(d).matrix
        assert np.array_equal(J.T, -J)
        assert np.array_equal(J @ J, -np.eye(2 * d))
    with pytest.raises(ValueError):
        standard_form(0)


@pytest.mark.parametrize("d", [1, 2])
def test_generators_are_exactly_symplectic(d):
    for th in (0.0, 0.3, -2.1, np.pi):
        assert symplectic_defect(rotation_block(th, d)) < 1e-15
        assert symplectic_defect(diagonal_block(th, d)) < 1e-14


def test_batched_blocks_match_loop():
    th = np.linspace(-1, 1, 7)
    batch = rotation_block(th, 2)
    for i, t in enumerate(th):
        assert np.array_equal(batch[i], rotation_block(t, 2))
    assert np.all(symplectic_defect(batch) < 1e-15)


def test_sp_inverse_agrees_with_generic_inverse(rng):
    B = random_symplectic_near_identity(0.5, 3, 2).entries @ diagonal_block(0.7, 2)
    assert np.allclose(sp_inverse(B), np.linalg.inv(B), atol=1e-12)


def test_symplectify_repairs_small_defect(rng):
    B = rotation_block(0.4) @ diagonal_block(1.2)
    noisy = B + 1e-6 * rng.standard_normal(B.shape)
    assert symplectic_defect(noisy) > 1e-8
    fixed = symplectify(noisy)
    assert fixed.sym_defect < 1e-13
    assert np.abs(fixed.entries - B).max() < 1e-5


def test_symplectify_leaves_symplectic_input_alone():
    B = rotation_block(0.9, 2) @ diagonal_block(0.3, 2)
    assert np.abs(symplectify(B).entries - B).max() < 1e-15


def test_symplectify_rejects_far_and_singular():
    with pytest.raises(NotSymplecticError):
        symplectify(np.diag([3.0, 3.0]))
    with pytest.raises(NotSymplecticError):
        symplectify(np.zeros((2, 2)))
    with pytest.raises(ValueError):
        symplectify(np.eye(3))


def test_checked_wrapper():
    S = SymplecticMatrix.checked(rotation_block(0.2))
    assert S.d == 1
    assert np.allclose(np.asarray(S @ S.inverse()), np.eye(2))
    with pytest.raises(NotSymplecticError):
        SymplecticMatrix.checked(np.diag([2.0, 1.0]))
    assert not is_symplectic(np.diag([2.0, 1.0]))


@settings(max_examples=30, deadline=None)
@given(
    st.lists(st.tuples(st.sampled_from(["rot", "diag"]), st.floats(-1.5, 1.5)), min_size=1, max_size=40),
    st.sampled_from([1, 2]),
)
def test_random_generator_words_stay_symplectic(word, d):
    M = np.eye(2 * d)
    for kind, a in word:
        G = rotation_block(a, d) if kind == "rot" else diagonal_block(a, d)
        M = symplectify(G @ M).entries
    # relative to |M|^2, the scale of B^T J B
    assert symplectic_defect(M) <= 1e-12 * max(1.0, np.abs(M).max() ** 2)


@settings(max_examples=25, deadline=None)
@given(st.floats(1e-3, 0.5), st.integers(0, 10_000), st.sampled_from([1, 2]))
def test_near_identity_sampler_respects_eps(eps, seed, d):
    S = random_symplectic_near_identity(eps, seed, d)
    assert np.abs(S.entries - np.eye(2 * d)).max() <= eps
    assert S.sym_defect < 1e-13


def test_rotation_angle_inverts_block():
    for a in (-0.7, 0.0, 0.01, 1.3):
        assert rotation_angle(rotation_block(a, 2)) == pytest.approx(a, abs=1e-15)


def test_subspace_intersection_and_angles():
    e1 = Subspace.span(np.array([1.0, 0.0, 0.0, 0.0]))
    plane = Subspace.span(np.eye(4)[:, :2])
    other = Subspace.span(np.eye(4)[:, 2:])
    assert subspace_intersection_dim(e1, plane) == 1
    assert subspace_intersection_dim(plane, other) == 0
    assert principal_angle(plane, plane) == pytest.approx(0.0, abs=1e-7)
    assert principal_angle(plane, other) == pytest.approx(np.pi / 2)
    with pytest.raises(ValueError):
        Subspace.span(np.zeros(3))


def test_make_transverse_moves_a_coincident_line():
    line = Subspace.span(np.array([1.0, 0.0]))
    sigma = make_transverse([(line, line)], eps=1e-2, family="rotation", allow_identity=False)
    assert 0 < abs(rotation_angle(sigma.entries)) <= 1e-2
    assert subspace_intersection_dim(line.image(sigma.entries), line) == 0


def test_make_transverse_identity_when_already_generic():
    a = Subspace.span(np.array([1.0, 0.0]))
    b = Subspace.span(np.array([0.0, 1.0]))
    assert np.array_equal(make_transverse([(a, b)]).entries, np.eye(2))


def test_make_transverse_d2_general_family():
    V = Subspace.span(np.eye(4)[:, :2])
    sigma = make_transverse([(V, V)], eps=1e-2, allow_identity=False)
    assert sigma.sym_defect < 1e-12
    assert subspace_intersection_dim(V.image(sigma.entries), V) == 0


def test_make_transverse_gives_up():
    line = Subspace.span(np.array([1.0, 0.0]))
    with pytest.raises(TransversalityError):
        make_transverse([(line, line)], max_tries=0, allow_identity=False)
    with pytest.raises(ValueError):
        make_transverse([])


def test_projective_points():
    assert projective_angle([1, 0], [-1, 0]) == pytest.approx(0.0)
    assert projective_angle([1, 0], [0, 2]) == pytest.approx(np.pi / 2)
    assert projective_angle([1, 0], [1, 1]) == pytest.approx(np.pi / 4)
    p = ProjectivePoint(np.array([-2.0, 0.0]))
    assert np.array_equal(p.vector, [1.0, 0.0])
    assert p.close_to(ProjectivePoint(np.array([3.0, 1e-13])))


def test_J_matrix_matches_form():
    assert np.array_equal(J_matrix(2), standard_form(2).matrix)
