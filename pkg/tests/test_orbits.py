import numpy as np
import pytest
from hypothesis import given, strategies as st

from sdym.algebra import EPS, ID2, TAU1, TAU2, TAU3, mat_exp2
from sdym.orbits import (MinkowskiVec, act, classify_sl2c, classify_sl2r, decompose_minkowski, invariant_I,
                         sl2r_vector)
from oracles import i_invariant

ROT = np.diag([np.exp(1j * np.pi / 6), np.exp(-1j * np.pi / 6)])


def random_sl2c(rng, n, scale=0.5):
    c = (rng.normal(size=(n, 3)) + 1j * rng.normal(size=(n, 3))) * scale
    return mat_exp2(c[:, 0, None, None] * TAU1 + c[:, 1, None, None] * TAU2 + c[:, 2, None, None] * TAU3)


def random_sl2r(rng, n, scale=0.5):
    c = rng.normal(size=(n, 3)) * scale
    X = c[:, 0, None, None] * TAU1.real + c[:, 1, None, None] * EPS.real + c[:, 2, None, None] * TAU3.real
    return mat_exp2(X).real


class TestInvariant:
    def test_examples(self):
        assert invariant_I(ID2) == pytest.approx(1)
        assert invariant_I(1j * TAU3) == pytest.approx(-1)
        assert invariant_I(ROT) == pytest.approx(0.5)

    def test_matches_entry_formula(self, rng):
        for g in random_sl2c(rng, 200):
            assert invariant_I(g) == pytest.approx(i_invariant(g), abs=1e-10)

    def test_rejects_non_unit_det(self):
        with pytest.raises(ValueError):
            invariant_I(2 * ID2)

    def test_dagger_invariance(self, rng):
        gs, hs = random_sl2c(rng, 1000), random_sl2c(rng, 1000)
        for g, h in zip(gs, hs):
            assert abs(invariant_I(act(h, g)) - invariant_I(g)) < 1e-9

    def test_upper_bound(self, rng):
        for g in random_sl2c(rng, 1000, scale=1.0):
            assert invariant_I(g) <= 1 + 1e-9


class TestDecomposition:
    def test_examples(self):
        u, v = decompose_minkowski(ID2)
        assert u == MinkowskiVec(1, 0, 0, 0) and u.norm2 == -1
        assert v.euclidean() == 0
        u, v = decompose_minkowski(1j * TAU3)
        assert u.euclidean() == 0
        assert v == MinkowskiVec(0, 0, 0, 1) and v.norm2 == 1

    def test_identities(self, rng):
        for g in random_sl2c(rng, 1000):
            I = invariant_I(g)
            u, v = decompose_minkowski(g)
            assert abs(u.norm2 + (I + 1) / 2) < 1e-9
            assert abs(v.norm2 + (I - 1) / 2) < 1e-9
            assert abs(u.dot(v)) < 1e-9

    def test_reconstruction(self, rng):
        for g in random_sl2c(rng, 20):
            u, v = decompose_minkowski(g)
            U = u.t * ID2 + u.x * TAU1 + u.y * TAU2 + u.z * TAU3
            V = 1j * (v.t * ID2 + v.x * TAU1 + v.y * TAU2 + v.z * TAU3)
            assert np.allclose(U + V, g)


class TestClassifyC:
    def test_examples(self):
        assert str(classify_sl2c(ID2)) == "HermitianSheet(+)"
        assert str(classify_sl2c(-ID2)) == "HermitianSheet(-)"
        assert str(classify_sl2c(1j * TAU3)) == "SkewHermitian"
        c = classify_sl2c(ROT)
        assert str(c) == "HyperboloidBundle(+)" and c.invariant == pytest.approx(0.5)

    def test_one_sheet_and_null_cone(self):
        g = np.array([[1j, 1], [0, -1j]])
        assert invariant_I(g) == pytest.approx(-1.5)
        assert str(classify_sl2c(g)) == "OneSheet"
        # U = s(1 + tau1) is null and orthogonal to V = i tau3, so det g = 1 and I = -1
        for s, sign in ((0.5, "+"), (-0.5, "-")):
            n = s * (ID2 + TAU1) + 1j * TAU3
            u, _ = decompose_minkowski(n)
            assert abs(u.norm2) < 1e-12 and u.euclidean() > 0
            assert str(classify_sl2c(n)) == f"NullConeBundle({sign})"

    def test_boundary_flag(self):
        eps = 1e-5
        g = np.diag([np.exp(1j * eps), np.exp(-1j * eps)])
        c = classify_sl2c(g)
        assert c.tag == "HermitianSheet" and c.boundary
        assert not classify_sl2c(ID2).boundary

    def test_class_and_sheet_invariance(self, rng):
        gs, hs = random_sl2c(rng, 1000), random_sl2c(rng, 1000)
        for g, h in zip(gs, hs):
            a, b = classify_sl2c(g), classify_sl2c(act(h, g))
            assert a.tag == b.tag and a.sign == b.sign


class TestClassifyR:
    def test_examples(self):
        c = classify_sl2r(np.eye(2))
        assert str(c) == "TwoSheet(+)" and c.alpha == 0
        assert classify_sl2r(EPS.real).tag == "FixedPoint"
        assert str(classify_sl2r(np.diag([2.0, 0.5]))) == "TwoSheet(+)"
        assert sl2r_vector(np.diag([2.0, 0.5])) == MinkowskiVec(1.25, 0.75, 0, 0)

    def test_other_classes(self):
        r = lambda th: np.array([[np.cos(th), np.sin(th)], [-np.sin(th), np.cos(th)]])
        assert str(classify_sl2r(r(0.3))) == "Hyperboloid2(+)"
        assert str(classify_sl2r(r(np.pi - 0.3))) == "Hyperboloid2(-)"
        assert classify_sl2r(np.array([[2.0, 1.5], [-0.5, 0.125]])).alpha == pytest.approx(1)
        big = np.array([[0.0, 2.0], [-0.5, 0.0]])
        assert classify_sl2r(big).tag == "OneSheet"
        null = np.array([[1.0, 1.0], [-1.0, 0.0]])  # alpha = 1, symmetric part nonzero
        assert classify_sl2r(null).tag == "NullCone"

    def test_rejects_complex(self):
        with pytest.raises(ValueError):
            classify_sl2r(1j * TAU3)

    def test_skew_part_invariance(self, rng):
        for h in random_sl2r(rng, 100):
            assert np.allclose(h @ EPS.real @ h.T, EPS.real, atol=1e-12)

    def test_class_invariance(self, rng):
        gs, hs = random_sl2r(rng, 1000), random_sl2r(rng, 1000)
        for g, h in zip(gs, hs):
            a, b = classify_sl2r(g), classify_sl2r(act(h, g, "transpose"))
            assert a.tag == b.tag and a.sign == b.sign
            assert a.alpha == pytest.approx(b.alpha, abs=1e-9)

    def test_fixed_points(self, rng):
        for h in random_sl2r(rng, 50):
            assert classify_sl2r(act(h, EPS.real, "transpose")).tag == "FixedPoint"
            assert str(classify_sl2r(act(h, np.eye(2), "transpose"))) == "TwoSheet(+)"


class TestAct:
    def test_identity(self, rng):
        g = random_sl2c(rng, 1)[0]
        assert np.allclose(act(ID2, g), g)
        with pytest.raises(ValueError):
            act(ID2, g, "sideways")
        with pytest.raises(ValueError):
            act(2 * ID2, g)


@given(st.floats(-2, 2), st.floats(-2, 2), st.floats(-2, 2))
def test_hermitian_exponentials_sit_on_sheet(a, b, c):
    g = mat_exp2(a * TAU1 + b * TAU2 + c * TAU3)
    cls = classify_sl2c(g)
    assert cls.tag == "HermitianSheet" and cls.sign == "+"
