import json
from fractions import Fraction

import numpy as np
import pytest

from sdym.algebra import ID2, TAU1, TAU2, TAU3, dagger, frob, mat_exp2
from sdym.connection import Grid
from sdym.polyfield import U, UBAR, V, VBAR, Laurent, MatrixPolyField, PolyField, harmonic_basis, random_harmonic
from sdym.riemann_hilbert import connection_pipeline, unit_circle
from sdym.symmetry import (FiniteTypeChain, GeneratorT, IdentityField, NotHarmonicError, commuting_chain_check,
                           commutator_check, crane_action, extend_chain, finite_type_residual, flow_patching,
                           gdot_rhs, star_field, type_of)
from sdym.twistor import TwistorRep, patching_from_rep
from loops import random_rep
from oracles import brute_force_type

SPECIAL = U * UBAR - V * VBAR
HALF = Fraction(1, 2)
PHI = Laurent({-1: U * V, 0: SPECIAL, 1: -UBAR * VBAR})
G_SPECIAL = patching_from_rep(TwistorRep({(1, 1, -2): 1}))
Z = unit_circle(32)


def points(rng, n=10, scale=0.5):
    return rng.uniform(-scale, scale, size=(n, 4))


def constant_loop(coeffs):
    """x-independent loop field ``exp(sum_n c_n z^n)``."""
    def field(pts, z):
        z = np.asarray(z).reshape(-1)
        X = sum((z ** n)[:, None, None] * c for n, c in coeffs.items())
        return np.broadcast_to(mat_exp2(X), (len(pts), len(z), 2, 2)).copy()
    return field


def random_traceless(rng, scale):
    c = (rng.normal(size=3) + 1j * rng.normal(size=3)) * scale
    return c[0] * TAU1 + c[1] * TAU2 + c[2] * TAU3


class TestCrane:
    def test_identity(self, rng):
        pts = points(rng)
        out = crane_action(ID2, G_SPECIAL)(pts, Z)
        assert np.allclose(out, G_SPECIAL(pts, Z), rtol=1e-14)

    def test_action_law(self, rng):
        pts = points(rng)
        g1 = constant_loop({n: random_traceless(rng, 0.2) for n in (-1, 0, 1)})
        g2 = constant_loop({n: random_traceless(rng, 0.2) for n in (-2, 0, 2)})
        g12 = lambda p, z: g1(p, z) @ g2(p, z)
        lhs = crane_action(g1, crane_action(g2, G_SPECIAL))(pts, Z)
        rhs = crane_action(g12, G_SPECIAL)(pts, Z)
        assert np.max(np.abs(lhs - rhs)) < 1e-12 * np.max(np.abs(lhs))

    def test_reality_preserved(self, rng):
        pts = points(rng)
        g = constant_loop({n: random_traceless(rng, 0.2) for n in (-1, 0, 1)})
        acted = crane_action(g, G_SPECIAL)
        a, b = acted(pts, Z), star_field(acted)(pts, Z)
        assert np.max(frob(a - b) / frob(a)) < 1e-12

    def test_outside_holomorphic_action_keeps_connection(self, rng):
        # g holomorphic outside the circle with g(inf) = Id leaves J = Psi_0(0) alone
        g = constant_loop({-1: random_traceless(rng, 0.1), -2: random_traceless(rng, 0.05)})
        grid = Grid(extent=0.3, points=3)
        before = connection_pipeline(G_SPECIAL, grid, h=0.05, M=16)
        after = connection_pipeline(crane_action(g, G_SPECIAL), grid, h=0.05, M=16)
        assert abs(after.max_yp_residual - before.max_yp_residual) < 1e-8
        assert np.max(np.abs(after.yp_residuals - before.yp_residuals)) < 1e-8


class TestFlow:
    def test_gdot_trivial(self, rng):
        pts = points(rng)
        T = GeneratorT.diagonal(PHI, -HALF)
        assert np.all(gdot_rhs(G_SPECIAL, np.zeros((2, 2)))(pts, Z) == 0)
        expected = -(T(pts, Z) + star_field(T)(pts, Z))
        assert np.allclose(gdot_rhs(IdentityField(), T)(pts, Z), expected)

    def test_gdot_gauge_terms(self, rng):
        pts = points(rng)
        r = random_traceless(rng, 1)
        out = gdot_rhs(IdentityField(), np.zeros((2, 2)), rho0=r, rho_inf=r)(pts, Z)
        assert np.allclose(out, 2 * r)

    def test_gdot_matches_flow_derivative(self, rng):
        pts = points(rng, 4)
        T = GeneratorT.constant({1: 0.3 * TAU1, 0: 0.2j * TAU2, -1: -0.3 * TAU1})
        t = 0.4
        rhs = gdot_rhs(flow_patching(G_SPECIAL, T, t), T)(pts, Z)
        errs = []
        for d in (1e-3, 1e-4):
            fd = (flow_patching(G_SPECIAL, T, t + d)(pts, Z) - flow_patching(G_SPECIAL, T, t - d)(pts, Z)) / (2 * d)
            errs.append(np.max(np.abs(fd - rhs)) / np.max(np.abs(rhs)))
        assert errs[0] < 1e-5
        assert errs[1] < errs[0] / 50

    def test_zero_time(self, rng):
        pts = points(rng)
        T = GeneratorT.diagonal(PHI, -HALF)
        assert np.array_equal(flow_patching(G_SPECIAL, T, 0)(pts, Z), G_SPECIAL(pts, Z))

    def test_flat_orbit(self, rng):
        pts = points(rng)
        T = GeneratorT.diagonal(PHI, -HALF)
        G1 = flow_patching(IdentityField(), T, 1)(pts, Z)
        assert np.max(np.abs(G1 - G_SPECIAL(pts, Z))) < 1e-12 * np.max(np.abs(G1))

    def test_flat_orbit_random_reducible(self, rng):
        pts = points(rng)
        for _ in range(5):
            G = patching_from_rep(random_rep(rng, max_field=2, real=True))
            G1 = flow_patching(IdentityField(), GeneratorT.diagonal(G.phi, -HALF), 1)(pts, Z)
            assert np.max(np.abs(G1 - G(pts, Z))) < 1e-12 * np.max(np.abs(G1))

    @pytest.mark.parametrize("T", [
        GeneratorT.diagonal(PHI, -HALF),
        GeneratorT.constant({1: 0.3 * TAU1, 0: 0.5 * TAU3}),
    ], ids=["commuting", "non-commuting"])
    def test_group_property(self, rng, T):
        pts = points(rng)
        a = flow_patching(flow_patching(G_SPECIAL, T, 0.3), T, 0.45)(pts, Z)
        b = flow_patching(G_SPECIAL, T, 0.75)(pts, Z)
        assert np.max(np.abs(a - b)) < 1e-11 * np.max(np.abs(b))

    def test_infinite_time_rejected(self):
        with pytest.raises(ValueError):
            flow_patching(G_SPECIAL, np.zeros((2, 2)), np.inf)

    def test_flowed_family_is_self_dual(self):
        T = GeneratorT.diagonal(PHI, -HALF)
        grid = Grid(extent=0.3, points=3)
        for t in (0.25, 0.5, 1.0):
            rep = connection_pipeline(flow_patching(IdentityField(), T, t), grid, h=0.05, M=12)
            assert rep.max_yp_residual < 1e-2
            assert rep.jump_count == 0


class TestCommutator:
    def test_examples(self, rng):
        pts = points(rng)
        assert commutator_check(GeneratorT.diagonal(PHI, -HALF), pts) < 1e-12
        assert commutator_check(GeneratorT.constant({1: TAU1}), pts) < 1e-12
        assert commutator_check(GeneratorT.constant({1: TAU1, 0: TAU3}), pts) > 1


class TestGenerator:
    def test_validation(self):
        with pytest.raises(ValueError):
            GeneratorT.constant({0: ID2})
        with pytest.raises(ValueError):
            GeneratorT({0: MatrixPolyField.from_scalar(U * UBAR, TAU3)})

    def test_linear_combination_and_chain(self):
        T1 = GeneratorT.diagonal(PHI, -HALF)
        T2 = GeneratorT.constant({1: TAU1})
        assert (T1 + T2.scale(3)).annihilation_defect() == 0
        chain = FiniteTypeChain.scalar({-1: U * V, 0: SPECIAL, 1: -UBAR * VBAR})
        assert chain.generator().annihilation_defect() == 0

    def test_json_round_trip(self, rng):
        T = GeneratorT.diagonal(PHI, -HALF) + GeneratorT.constant({2: 0.5 * TAU1})
        back = GeneratorT.from_json(json.loads(json.dumps(T.to_json())), exact=True)
        pts = points(rng)
        assert np.allclose(back(pts, Z), T(pts, Z))
        rec = T.to_json()[0]
        assert set(rec) == {"n", "entry", "poly"}


class TestFiniteType:
    CHAIN = FiniteTypeChain.scalar({-1: U * V, 0: SPECIAL, 1: -UBAR * VBAR})

    def test_examples(self):
        assert all(r.is_zero() for r in finite_type_residual(FiniteTypeChain.scalar({0: PolyField.const(3)})))
        assert all(r.is_zero() for r in finite_type_residual(self.CHAIN))
        assert self.CHAIN.is_real()
        bad = FiniteTypeChain.scalar({-1: U * V, 0: U * UBAR, 1: -UBAR * VBAR})
        assert not all(r.is_zero() for r in finite_type_residual(bad))

    def test_residual_count(self):
        assert len(finite_type_residual(self.CHAIN)) == 2 + 2 * 2 + 2

    def test_extend_examples(self):
        assert extend_chain(SPECIAL) == -UBAR * VBAR
        assert extend_chain(U * V) == SPECIAL
        assert extend_chain(PolyField.const(2)).is_zero()
        assert extend_chain(SPECIAL, "down") == U * V
        with pytest.raises(NotHarmonicError):
            extend_chain(U * UBAR)
        with pytest.raises(ValueError):
            extend_chain(SPECIAL, "sideways")

    def test_extension_solves_relations(self, rng):
        for _ in range(10):
            a = random_harmonic(4, rng)
            b = extend_chain(a)
            assert b.derive("ubar") == a.derive("v")
            assert b.derive("vbar") == -a.derive("u")
            c = extend_chain(a, "down")
            assert c.derive("v") == a.derive("ubar")
            assert c.derive("u") == -a.derive("vbar")

    def test_type_examples(self):
        assert type_of(PolyField.const(5)).d == 0
        res = type_of(SPECIAL)
        assert int(res) == 1
        assert all(r.is_zero() for r in finite_type_residual(res.chain))
        re_u3 = (U ** 3 + UBAR ** 3) * HALF
        assert type_of(re_u3).d == brute_force_type({(3, 0, 0, 0): 0.5, (0, 3, 0, 0): 0.5}, 4, 3) == 3

    @pytest.mark.parametrize("k", range(6))
    def test_type_against_brute_force(self, k):
        rng = np.random.default_rng(100 + k)
        basis = harmonic_basis(2)
        b = basis[int(rng.integers(len(basis)))]
        a = b + b.conjugate()
        if a.is_zero():
            a = b * 1j - b.conjugate() * 1j
        res = type_of(a)
        expected = brute_force_type({m: complex(c) for m, c in a.terms.items()}, 4, 3)
        assert res.d == expected
        assert all(r.is_zero() for r in finite_type_residual(res.chain))

    def test_type_bound(self):
        assert not type_of((U ** 3 + UBAR ** 3) * HALF, d_max=2).finite
        with pytest.raises(ValueError):
            int(type_of((U ** 3 + UBAR ** 3) * HALF, d_max=2))
        with pytest.raises(NotHarmonicError):
            type_of(U * UBAR)

    def test_zero_residual_implies_harmonic(self, rng):
        for _ in range(5):
            res = type_of(random_harmonic(3, rng))
            assert res.finite
            assert all(r.is_zero() for r in finite_type_residual(res.chain))
            for _, c in res.chain.coeffs.items():
                assert c.laplacian().is_zero()

    def test_type_zero_forces_constant_loop(self):
        res = type_of(PolyField.const(2))
        chain = res.chain
        assert chain.d == 0
        assert all(c.monomials() <= {(0, 0, 0, 0)} for _, c in chain.coeffs.items())


class TestCommuting:
    def test_reducible_chain(self):
        r = commuting_chain_check(TestFiniteType.CHAIN)
        assert r.commuting and r.reducible
        assert np.allclose(r.direction, TAU3)

    def test_non_commuting(self):
        chain = FiniteTypeChain(1, {0: MatrixPolyField.from_scalar(SPECIAL, TAU3),
                                    1: MatrixPolyField.from_scalar(-UBAR * VBAR, TAU1)})
        assert not commuting_chain_check(chain).commuting

    def test_zero_chain(self):
        r = commuting_chain_check(FiniteTypeChain(0, {}))
        assert r.commuting and r.direction is None and not r.reducible

    def test_other_direction(self):
        chain = FiniteTypeChain.scalar({0: SPECIAL * 2}, direction=TAU1)
        r = commuting_chain_check(chain)
        assert r.reducible and np.allclose(r.direction, TAU1)
        assert json.dumps(r.to_json())
