import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.linalg import expm

from isotori.errors import (
    DegenerateCircle,
    DimensionMismatch,
    NotLorentzOrthogonal,
    PlaneNotInComplement,
    PointAtInfinity,
    TooFarFromGroup,
)
from isotori.lorentz import (
    Resonance,
    circle_fixing_rotation,
    infinity_vector,
    inner,
    lift,
    lorentz_defect,
    metric,
    project,
    real_lightlike_eigenvectors,
    reorthonormalize,
    skew_defect,
    wedge_action,
)

coords = st.floats(-50, 50, allow_nan=False)


def random_lorentz(rng, dim, spread=1.0):
    a = rng.normal(size=(dim, dim)) * spread
    gen = a - metric(dim) @ a.T @ metric(dim)
    return expm(gen)


def test_inner_of_lift_of_origin_vanishes():
    origin = lift(np.zeros(3))
    np.testing.assert_array_equal(origin, [0, 0, 0, 1, 1])
    assert inner(origin, origin) == 0.0


def test_infinity_vector_is_lightlike():
    q = infinity_vector(3)
    np.testing.assert_array_equal(q, [0, 0, 0, -0.5, 0.5])
    assert inner(q, q) == 0.0


def test_inner_of_unit_vectors_in_plane():
    assert inner(lift([1.0, 0.0]), lift([0.0, 1.0])) == pytest.approx(-4.0, abs=1e-15)


def test_inner_rejects_mixed_dimensions():
    with pytest.raises(DimensionMismatch):
        inner(np.zeros(4), np.zeros(5))


def test_lift_examples():
    np.testing.assert_array_equal(lift([1.0, 0.0]), [2, 0, 0, 2])
    assert inner(lift([0.3, -2.0, 5.0]), infinity_vector(3)) == -1.0


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 6).flatmap(lambda n: st.tuples(arrays(float, n, elements=coords), arrays(float, n, elements=coords))))
def test_lift_distance_identity(pair):
    x, y = pair
    expected = -2.0 * np.sum((x - y) ** 2)
    got = inner(lift(x), lift(y))
    scale = 4.0 * (1.0 + x @ x) * (1.0 + y @ y)
    assert abs(got - expected) <= 1e-12 * scale
    assert abs(inner(lift(x), lift(x))) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(arrays(float, 4, elements=coords), st.floats(0.01, 100) | st.floats(-100, -0.01))
def test_project_inverts_lift_up_to_scale(x, alpha):
    np.testing.assert_allclose(project(alpha * lift(x)), x, rtol=1e-10, atol=1e-10)


def test_project_examples():
    np.testing.assert_array_equal(project([0, 0, 0, 1, 1]), [0, 0, 0])
    np.testing.assert_allclose(project([4, 0, 0, 4]), [1, 0])
    with pytest.raises(PointAtInfinity):
        project([0, 0, 0, -1, 1])


def test_wedge_examples(rng):
    a = rng.normal(size=5)
    b = rng.normal(size=5)
    assert np.max(np.abs(wedge_action(a, a))) == 0.0
    np.testing.assert_allclose(wedge_action(a, b) @ a, inner(a, a) * b - inner(b, a) * a, atol=1e-13)
    c = rng.normal(size=5)
    np.testing.assert_allclose(wedge_action(a, b) @ c, inner(a, c) * b - inner(b, c) * a, atol=1e-13)


def test_wedge_generates_lorentz_maps(rng):
    for _ in range(20):
        gen = wedge_action(rng.normal(size=6), rng.normal(size=6))
        assert skew_defect(gen) <= 1e-12
        # scipy's expm as an independent exponential.
        assert lorentz_defect(expm(0.3 * gen)) <= 1e-10


def test_identity_is_resonant():
    out = real_lightlike_eigenvectors(np.eye(5))
    assert isinstance(out, Resonance) and out.sign == 1
    assert real_lightlike_eigenvectors(-np.eye(5)).sign == -1


def test_boost_eigendirections():
    m = np.eye(5)
    c, s = np.cosh(1.0), np.sinh(1.0)
    m[3:, 3:] = [[c, s], [s, c]]
    found = real_lightlike_eigenvectors(m)
    assert len(found) == 2
    assert found[0].eigenvalue == pytest.approx(np.e, rel=1e-12)
    assert found[1].eigenvalue == pytest.approx(np.exp(-1.0), rel=1e-12)
    for f in found:
        np.testing.assert_allclose(m @ f.vector, f.eigenvalue * f.vector, atol=1e-12)
    # e^{+1} lives on (0,0,0,1,1), e^{-1} is the point at infinity (0,0,0,-1,1).
    np.testing.assert_allclose(found[0].vector, [0, 0, 0, 1, 1], atol=1e-12)
    assert found[1].at_infinity


def test_rotation_keeps_fixed_lorentz_block():
    m = np.eye(5)
    m[:2, :2] = [[np.cos(0.7), -np.sin(0.7)], [np.sin(0.7), np.cos(0.7)]]
    found = real_lightlike_eigenvectors(m)
    assert found
    for f in found:
        assert f.eigenvalue == pytest.approx(1.0, abs=1e-12)
        assert np.max(np.abs(f.vector[:2])) <= 1e-12
        assert f.lightlike_defect <= 1e-12
        assert f.residual <= 1e-12


def test_eigen_extraction_properties(rng):
    # n = 4 is even, so every map in the identity component has a lightlike eigenvector.
    for _ in range(10):
        m = random_lorentz(rng, 6, 0.5)
        out = real_lightlike_eigenvectors(m)
        assert out
        for f in out:
            v = f.vector
            assert np.linalg.norm(m @ v - f.eigenvalue * v) <= 1e-8 * np.linalg.norm(v)
            assert abs(inner(v, v)) <= 1e-8 * (v @ v)


def test_eigen_rejects_non_lorentz():
    with pytest.raises(NotLorentzOrthogonal):
        real_lightlike_eigenvectors(np.diag([1.0, 1.0, 1.0, 1.0, 2.0]))


def test_reorthonormalize_examples(rng):
    m = random_lorentz(rng, 5, 0.3)
    np.testing.assert_allclose(reorthonormalize(m), m, atol=1e-12)
    bumped = m + 1e-6 * rng.normal(size=m.shape)
    fixed = reorthonormalize(bumped)
    assert lorentz_defect(fixed) <= 1e-12
    assert np.linalg.norm(fixed - bumped, 2) <= 1e-5
    assert lorentz_defect(reorthonormalize((1 + 1e-6) * np.eye(5))) <= 1e-12
    with pytest.raises(TooFarFromGroup):
        reorthonormalize(np.eye(5) * 1.1)


def unit_circle_points(count):
    t = 2 * np.pi * np.arange(count) / count
    return np.column_stack([np.cos(t), np.sin(t), np.zeros(count)])


def test_circle_fixing_rotation():
    picks = unit_circle_points(3)
    assert np.array_equal(circle_fixing_rotation(picks, (3, 2), 0.0), np.eye(5))
    rot = circle_fixing_rotation(picks, (3, 2), np.pi / 3)
    assert lorentz_defect(rot) <= 1e-10
    pts = unit_circle_points(64)
    moved = np.array([project(rot @ lift(p)) for p in pts])
    assert np.max(np.abs(moved - pts)) <= 1e-10
    off = np.array([0.5, 0.0, 0.0])
    assert np.linalg.norm(project(rot @ lift(off)) - off) > 0.1
    back = circle_fixing_rotation(picks, (3, 2), -np.pi / 3)
    np.testing.assert_allclose(back @ rot, np.eye(5), atol=1e-10)


def test_circle_fixing_rotation_errors():
    with pytest.raises(DegenerateCircle):
        circle_fixing_rotation([[0, 0, 0], [1, 0, 0], [2, 0, 0]], (3, 2), 0.1)
    with pytest.raises(PlaneNotInComplement):
        circle_fixing_rotation(unit_circle_points(3), (0, 2), 0.1)
