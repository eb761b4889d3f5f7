import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from meanfol.config import DEFAULT_TOL
from meanfol.expr import (
    ast_add,
    ast_mul,
    ast_num,
    ast_subst,
    catalog_surface,
    jet_at,
)
from meanfol.singularities import (
    Singularity,
    analyze_singularities,
    classify_normal,
    classify_singularity,
    classify_umbilic,
    find_singularities,
    monge_adapt,
    rotate_kill_d,
    _rotate_coeffs,
)

from _oracles import ellipsoid_umbilics_r3


def monge(r1=0, s1=0, t1=0, a1=0, d1=0, b1=0, c1=0,
          r2=0, s2=0, t2=0, a2=0, d2=0, b2=0, c2=0, half=0.2):
    # half-width 0.2 keeps secondary real singularities of the cubic
    # outside the chart; only the designed one at the origin remains
    return catalog_surface("graph_monge", r1, s1, t1, a1, d1, b1, c1,
                           r2, s2, t2, a2, d2, b2, c2, half)


# the six constructed classification surfaces: (surface, kind, expected type)
def normal_surface(a2):
    return monge(r1=0, s1=1, t1=0, c1=2, r2=1, t2=-1, a2=a2)


def umbilic_surface(a1):
    return monge(r1=1, s1=0, t1=1, a1=a1, b1=1)


CONSTRUCTED = {
    ("normal", "D1"): lambda: normal_surface(2.0),
    ("normal", "D2"): lambda: normal_surface(0.5),
    ("normal", "D3"): lambda: normal_surface(-1.0),
    ("umbilic", "D1"): lambda: umbilic_surface(3.0),
    ("umbilic", "D2"): lambda: umbilic_surface(1.5),
    ("umbilic", "D3"): lambda: umbilic_surface(-1.0),
}


class TestFind:
    def test_plane_globally_degenerate(self):
        report = find_singularities(catalog_surface("plane"))
        assert report.degenerate_surface
        assert report.degeneracy_kind == "normal"

    def test_lifted_sphere_umbilic_degenerate(self):
        report = find_singularities(catalog_surface("lifted_plane"))
        assert report.degenerate_surface
        assert report.degeneracy_kind == "umbilic"

    def test_clifford_torus_degenerate(self):
        report = find_singularities(catalog_surface("clifford_torus"))
        assert report.degenerate_surface

    def test_flat_torus_no_singularities(self):
        report = find_singularities(catalog_surface("flat_torus", 1.0, 0.6))
        assert not report.degenerate_surface
        assert report.singularities == []

    def test_monge_normal_at_origin(self):
        surf = normal_surface(2.0)
        report = find_singularities(surf)
        assert not report.degenerate_surface
        normals = [s for s in report.singularities if s.kind == "normal"]
        assert len(normals) == 1
        assert math.hypot(*normals[0].location) < 1e-9

    def test_umbilic_at_origin(self):
        surf = umbilic_surface(3.0)
        report = find_singularities(surf)
        umb = [s for s in report.singularities if s.kind == "umbilic"]
        assert len(umb) == 1
        assert math.hypot(*umb[0].location) < 1e-9

    def test_lifted_ellipsoid_four_umbilics(self):
        surf = catalog_surface("lifted_ellipsoid", 0.5, 0.6, 0.75)
        report = find_singularities(surf, grid=24)
        assert not report.degenerate_surface
        umb = [s for s in report.singularities if s.kind == "umbilic"]
        assert len(umb) == 4
        want = ellipsoid_umbilics_r3(0.5, 0.6, 0.75)
        got = sorted(s.location for s in umb)
        for (tu, tv), (gu, gv) in zip(want, got):
            assert abs(tu - gu) < 1e-6 and abs(tv - gv) < 1e-6


class TestMongeAdapt:
    def test_fixed_point(self):
        # a surface already in Monge form reproduces its own coefficients
        vals = dict(r1=0.4, s1=0.2, t1=-0.1, a1=1.0, d1=0.3, b1=-0.5, c1=0.7,
                    r2=-0.3, s2=0.6, t2=0.2, a2=0.25, d2=-0.8, b2=0.45, c2=0.1)
        surf = monge(**vals)
        monge_data, adapted = monge_adapt(surf, (0.0, 0.0))
        for key, val in vals.items():
            assert monge_data.coeffs[key] == pytest.approx(val, abs=1e-12), key
        # adapted chart has identity linear part
        assert adapted[0].coeff(1, 0) == pytest.approx(1.0, abs=1e-12)
        assert adapted[1].coeff(0, 1) == pytest.approx(1.0, abs=1e-12)
        assert adapted[0].coeff(0, 1) == pytest.approx(0.0, abs=1e-12)

    def test_invariants_after_random_rotation(self):
        rng = np.random.default_rng(41)
        surf = normal_surface(2.0)
        base, _ = monge_adapt(surf, (0.0, 0.0))
        for _ in range(5):
            Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
            if np.linalg.det(Q) < 0:
                Q[:, 0] = -Q[:, 0]
            comps = []
            for i in range(4):
                acc = ast_num(0.0)
                for j in range(4):
                    acc = ast_add(acc, ast_mul(ast_num(Q[i, j]),
                                               surf.components[j]))
                comps.append(acc)
            rsurf = surf.with_components(tuple(comps))
            md, _ = monge_adapt(rsurf, (0.0, 0.0))
            assert md.normal_residual == pytest.approx(
                base.normal_residual, abs=1e-9)
            c, b = md.coeffs, base.coeffs
            assert c["r1"] + c["t1"] == pytest.approx(b["r1"] + b["t1"], abs=1e-9)
            assert c["r2"] + c["t2"] == pytest.approx(b["r2"] + b["t2"], abs=1e-9)

    def test_lifted_ellipsoid_umbilic_residual(self):
        surf = catalog_surface("lifted_ellipsoid", 0.5, 0.6, 0.75)
        report = find_singularities(surf)
        sing = [s for s in report.singularities if s.kind == "umbilic"][0]
        md, _ = monge_adapt(surf, sing.location)
        assert md.umbilic_residual < 1e-7


class TestRotateKillD:
    def test_zero_d_identity(self):
        omega, rotated = rotate_kill_d((0.0, 1.0, -2.0, 0.3))
        assert omega == pytest.approx(0.0, abs=1e-12)
        assert rotated == pytest.approx((0.0, 1.0, -2.0, 0.3), abs=1e-12)

    @given(d=st.floats(-2, 2), b=st.floats(-2, 2),
           a=st.floats(-2, 2), c=st.floats(-2, 2))
    @settings(max_examples=100, deadline=None)
    def test_random_quadruples_killed(self, d, b, a, c):
        scale = max(abs(d), abs(b), abs(a), abs(c))
        if scale < 1e-3:
            return
        omega, rotated = rotate_kill_d((d, b, a, c))
        assert abs(rotated[0]) <= 1e-10 * scale

    def test_transversality_invariant_under_rotation(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            d, b, a, c = rng.uniform(-2, 2, size=4)
            t0 = a * b - c * d
            for w in rng.uniform(-math.pi, math.pi, size=3):
                d1, b1, a1, c1 = _rotate_coeffs((d, b, a, c), w)
                assert a1 * b1 - c1 * d1 == pytest.approx(t0, rel=1e-9, abs=1e-12)

    def test_type_same_for_all_real_roots(self):
        # pick coefficients whose cubic has three real roots; classification
        # must not depend on which killing rotation is used
        from meanfol.singularities import _classify_coeffs
        rng = np.random.default_rng(9)
        checked = 0
        while checked < 30:
            d, b, a, c = rng.uniform(-2, 2, size=4)
            scale = max(abs(d), abs(b), abs(a), abs(c))
            if scale < 1e-2 or abs(a * b - c * d) < 1e-2:
                continue
            poly = np.array([b, c - d, -(a + b), d])
            roots = np.roots(poly)
            real = [r.real for r in roots if abs(r.imag) < 1e-10]
            if len(real) < 2:
                continue
            types = set()
            for t in real:
                w = math.atan(t)
                rot = _rotate_coeffs((d, b, a, c), w)
                assert abs(rot[0]) < 1e-9 * scale
                types.add(_classify_coeffs(rot, DEFAULT_TOL)[0])
            assert len(types) == 1, (d, b, a, c, types)
            checked += 1


class TestClassification:
    @pytest.mark.parametrize("kind,dtype", list(CONSTRUCTED))
    def test_constructed_types(self, kind, dtype):
        surf = CONSTRUCTED[(kind, dtype)]()
        report = find_singularities(surf)
        sings = [s for s in report.singularities if s.kind == kind]
        assert len(sings) == 1
        sing = sings[0]
        if kind == "normal":
            classify_normal(surf, sing)
        else:
            classify_umbilic(surf, sing)
        assert sing.dtype == dtype, sing.diagnostic
        assert abs(sing.rotated[0]) <= 1e-9

    def test_excluded_ratio_non_darbouxian(self):
        # abar = -bbar: normal kind with a2 chosen so abar = -1 = -bbar
        surf = normal_surface(1.0)   # (d,b,a,c) = (0, 1, -1, 0)
        report = find_singularities(surf)
        sing = [s for s in report.singularities if s.kind == "normal"][0]
        classify_normal(surf, sing)
        assert sing.dtype == "non-Darbouxian"
        assert "-1" in sing.diagnostic or "band" in sing.diagnostic

    def test_zero_cubics_fail_transversality(self):
        # without cubic terms the BDE linear parts vanish identically; the
        # constructed umbilic at the origin must fail transversality
        surf = monge(r1=1, s1=0, t1=1)
        sing = Singularity(location=(0.0, 0.0), kind="umbilic")
        classify_umbilic(surf, sing)
        assert sing.dtype == "non-Darbouxian"
        assert "transversality" in sing.diagnostic

    def test_lifted_ellipsoid_umbilics_d1(self):
        surf = catalog_surface("lifted_ellipsoid", 0.5, 0.6, 0.75)
        report = analyze_singularities(surf)
        umb = [s for s in report.singularities if s.kind == "umbilic"]
        assert len(umb) == 4
        for s in umb:
            assert s.dtype == "D1", (s.location, s.diagnostic)

    def test_kind_mismatch_raises(self):
        sing = Singularity(location=(0.0, 0.0), kind="umbilic")
        with pytest.raises(ValueError):
            classify_normal(catalog_surface("plane"), sing)


class TestRotationIndependence:
    @staticmethod
    def rotate_chart(surf, theta):
        cu = ast_num(math.cos(theta))
        su = ast_num(math.sin(theta))
        from meanfol.expr import ast_sub, Var
        u_new = ast_add(ast_mul(cu, Var("u")), ast_mul(su, Var("v")))
        v_new = ast_sub(ast_mul(cu, Var("v")), ast_mul(su, Var("u")))
        comps = tuple(ast_subst(c, u_new, v_new) for c in surf.components)
        return surf.with_components(comps, name="chart-rotated")

    @pytest.mark.parametrize("kind,dtype", list(CONSTRUCTED))
    def test_inplane_rotations(self, kind, dtype):
        rng = np.random.default_rng(77)
        surf = CONSTRUCTED[(kind, dtype)]()
        for theta in rng.uniform(-math.pi, math.pi, size=12):
            rsurf = self.rotate_chart(surf, theta)
            sing = Singularity(location=(0.0, 0.0), kind=kind)
            classify_singularity(rsurf, sing)
            assert sing.dtype == dtype, (theta, sing.diagnostic)

    @pytest.mark.parametrize("kind,dtype", list(CONSTRUCTED))
    def test_r4_rotations(self, kind, dtype):
        rng = np.random.default_rng(78)
        surf = CONSTRUCTED[(kind, dtype)]()
        for _ in range(5):
            Q = np.linalg.qr(rng.normal(size=(4, 4)))[0]
            if np.linalg.det(Q) < 0:
                Q[:, 0] = -Q[:, 0]
            comps = []
            for i in range(4):
                acc = ast_num(0.0)
                for j in range(4):
                    acc = ast_add(acc, ast_mul(ast_num(Q[i, j]),
                                               surf.components[j]))
                comps.append(acc)
            rsurf = surf.with_components(tuple(comps))
            sing = Singularity(location=(0.0, 0.0), kind=kind)
            classify_singularity(rsurf, sing)
            assert sing.dtype == dtype, sing.diagnostic


class TestEq10Formulas:
    def test_umbilic_linear_parts_match_derived_formulas(self):
        # normalized umbilic: r1 = t1 = r, s1 = 0, t2 = -r2, s2 free;
        # expected (with A2 = a2+b2, C2 = c2+d2):
        #   d~ = r d1 + s2 A2 / 2,  b~ = r b1 + s2 C2 / 2,
        #   a~ = r (b1-a1) - r2 A2, c~ = r (c1-d1) - r2 C2
        rng = np.random.default_rng(55)
        for _ in range(25):
            r = rng.uniform(0.5, 1.5) * rng.choice([-1.0, 1.0])
            r2 = rng.uniform(-0.4, 0.4)
            s2 = rng.uniform(-0.8, 0.8)
            a1, d1, b1, c1 = rng.uniform(-1, 1, size=4)
            a2, d2, b2, c2 = rng.uniform(-1, 1, size=4)
            surf = monge(r1=r, s1=0.0, t1=r, a1=a1, d1=d1, b1=b1, c1=c1,
                         r2=r2, s2=s2, t2=-r2, a2=a2, d2=d2, b2=b2, c2=c2)
            sing = Singularity(location=(0.0, 0.0), kind="umbilic")
            monge_data, adapted = monge_adapt(surf, (0.0, 0.0))
            from meanfol.singularities import _extract_linear_coeffs
            (d_, b_, a_, c_), _, _ = _extract_linear_coeffs(adapted, DEFAULT_TOL)
            A2, C2 = a2 + b2, c2 + d2
            assert d_ == pytest.approx(r * d1 + s2 * A2 / 2, abs=1e-9)
            assert b_ == pytest.approx(r * b1 + s2 * C2 / 2, abs=1e-9)
            assert a_ == pytest.approx(r * (b1 - a1) - r2 * A2, abs=1e-9)
            assert c_ == pytest.approx(r * (c1 - d1) - r2 * C2, abs=1e-9)
            # displayed umbilic transversality identity
            want = ((b1 * (b1 - a1) + d1 * (d1 - c1)) * r ** 2
                    + (d1 * C2 - b1 * A2) * r * r2
                    + 0.5 * ((A2 * (d1 - c1) + (b1 - a1) * C2)) * r * s2)
            assert a_ * b_ - c_ * d_ == pytest.approx(want, abs=1e-9)

    def test_normal_transversality_factorization(self):
        # abar*bbar - cbar*dbar = -1/2 (A1 C2 - A2 C1)(r1 s2 - r2 s1)
        rng = np.random.default_rng(56)
        for _ in range(25):
            r1, s1 = rng.uniform(-1, 1, size=2)
            r2, s2 = rng.uniform(-1, 1, size=2)
            a1, d1, b1, c1 = rng.uniform(-1, 1, size=4)
            a2, d2, b2, c2 = rng.uniform(-1, 1, size=4)
            surf = monge(r1=r1, s1=s1, t1=-r1, a1=a1, d1=d1, b1=b1, c1=c1,
                         r2=r2, s2=s2, t2=-r2, a2=a2, d2=d2, b2=b2, c2=c2)
            from meanfol.singularities import _extract_linear_coeffs
            _, adapted = monge_adapt(surf, (0.0, 0.0))
            (d_, b_, a_, c_), _, _ = _extract_linear_coeffs(adapted, DEFAULT_TOL)
            A1, C1, A2, C2 = a1 + b1, c1 + d1, a2 + b2, c2 + d2
            want = -0.5 * (A1 * C2 - A2 * C1) * (r1 * s2 - r2 * s1)
            assert a_ * b_ - c_ * d_ == pytest.approx(want, abs=1e-9)


class TestPerturbationStability:
    BASE = {
        ("normal", "D1"): [0, 1, 0, 0, 0, 0, 2, 1, 0, -1, 2.0, 0, 0, 0],
        ("normal", "D2"): [0, 1, 0, 0, 0, 0, 2, 1, 0, -1, 0.5, 0, 0, 0],
        ("normal", "D3"): [0, 1, 0, 0, 0, 0, 2, 1, 0, -1, -1.0, 0, 0, 0],
        ("umbilic", "D1"): [1, 0, 1, 3.0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
        ("umbilic", "D2"): [1, 0, 1, 1.5, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
        ("umbilic", "D3"): [1, 0, 1, -1.0, 0, 1, 0, 0, 0, 0, 0, 0, 0, 0],
    }

    def test_classification_stable_under_small_perturbation(self):
        # openness: 1e-6 noise on every Monge coefficient moves the
        # singularity slightly but never changes its Darbouxian type
        rng = np.random.default_rng(91)
        for (kind, dtype), coeffs in self.BASE.items():
            for _ in range(3):
                noisy = [c + e for c, e in
                         zip(coeffs, rng.uniform(-1e-6, 1e-6, size=14))]
                surf = catalog_surface("graph_monge", *noisy, 0.2)
                report = find_singularities(surf)
                sings = [s for s in report.singularities if s.kind == kind]
                assert len(sings) == 1, (kind, dtype)
                assert math.hypot(*sings[0].location) < 1e-4
                classify_singularity(surf, sings[0])
                assert sings[0].dtype == dtype, sings[0].diagnostic
