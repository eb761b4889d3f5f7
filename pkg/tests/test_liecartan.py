import math

import numpy as np
import pytest

from meanfol.config import DEFAULT_TOL
from meanfol.expr import catalog_surface, jet_at
from meanfol.geometry import bde_at
from meanfol.liecartan import (
    Equilibrium,
    ProjPoint,
    fiber_equilibria,
    fiber_gradient_min,
    field_at,
    separatrix_germs,
)
from meanfol.singularities import Singularity, classify_singularity, find_singularities


def monge(r1=0, s1=0, t1=0, a1=0, d1=0, b1=0, c1=0,
          r2=0, s2=0, t2=0, a2=0, d2=0, b2=0, c2=0, half=0.2):
    return catalog_surface("graph_monge", r1, s1, t1, a1, d1, b1, c1,
                           r2, s2, t2, a2, d2, b2, c2, half)


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

EXPECTED = {
    "D1": {"total": 1, "saddles": 1, "nodes": 0},
    "D2": {"total": 3, "saddles": 2, "nodes": 1},
    "D3": {"total": 3, "saddles": 3, "nodes": 0},
}


def classified_singularity(kind, dtype):
    surf = CONSTRUCTED[(kind, dtype)]()
    report = find_singularities(surf)
    sing = [s for s in report.singularities if s.kind == kind][0]
    classify_singularity(surf, sing)
    assert sing.dtype == dtype
    return surf, sing


class TestField:
    def test_plane_zero_field(self):
        surf = catalog_surface("plane")
        for pt in [ProjPoint(0.1, 0.2, 0.5), ProjPoint(-0.3, 0.4, -0.9, "q")]:
            X = field_at(surf, pt)
            assert np.allclose(X, 0.0, atol=1e-15)

    def test_fiber_tangency_at_singularity(self):
        surf, sing = classified_singularity("normal", "D3")
        u0, v0 = sing.location
        for p in [-0.9, -0.3, 0.0, 0.4, 1.0]:
            X = field_at(surf, ProjPoint(u0, v0, p))
            assert abs(X[0]) < 1e-10 and abs(X[1]) < 1e-10

    def test_first_component_vs_p_difference(self):
        # J_p by central difference of J(p) built from an independently
        # evaluated BDE
        surf = catalog_surface("lifted_ellipsoid")
        rng = np.random.default_rng(3)
        (u0d, u1d), (v0d, v1d) = surf.domain
        for _ in range(10):
            u = rng.uniform(u0d, u1d)
            v = rng.uniform(v0d + 0.1, v1d - 0.1)
            p = rng.uniform(-0.95, 0.95)
            bde = bde_at(jet_at(surf, (u, v), order=2))
            h = 1e-5
            want = (bde.J(p + h) - bde.J(p - h)) / (2 * h)
            X = field_at(surf, ProjPoint(u, v, p))
            assert X[0] == pytest.approx(want, rel=1e-6, abs=1e-12)

    def test_third_component_vs_uv_differences(self):
        surf = catalog_surface("lifted_ellipsoid")
        rng = np.random.default_rng(4)
        (u0d, u1d), (v0d, v1d) = surf.domain
        for _ in range(6):
            u = rng.uniform(u0d, u1d)
            v = rng.uniform(v0d + 0.1, v1d - 0.1)
            p = rng.uniform(-0.95, 0.95)
            h = 1e-5
            Ju = (bde_at(jet_at(surf, (u + h, v), order=2)).J(p)
                  - bde_at(jet_at(surf, (u - h, v), order=2)).J(p)) / (2 * h)
            Jv = (bde_at(jet_at(surf, (u, v + h), order=2)).J(p)
                  - bde_at(jet_at(surf, (u, v - h), order=2)).J(p)) / (2 * h)
            X = field_at(surf, ProjPoint(u, v, p))
            assert X[2] == pytest.approx(-(Ju + p * Jv), rel=1e-5, abs=1e-10)


class TestEquilibria:
    @pytest.mark.parametrize("kind", ["normal", "umbilic"])
    @pytest.mark.parametrize("dtype", ["D1", "D2", "D3"])
    def test_counts_and_classes(self, kind, dtype):
        surf, sing = classified_singularity(kind, dtype)
        eqs = fiber_equilibria(surf, sing)
        want = EXPECTED[dtype]
        assert len(eqs) == want["total"], [e.stability for e in eqs]
        assert sum(e.stability == "saddle" for e in eqs) == want["saddles"]
        assert sum(e.stability == "node" for e in eqs) == want["nodes"]
        # demotion must not have happened
        assert sing.dtype == dtype

    def test_eigenvalues_match_analytic(self):
        # lam_fiber = phi'(p0), lam_transverse = J_pu + p0 J_pv, computed
        # from the jet-exact linear coefficients
        for (kind, dtype) in CONSTRUCTED:
            surf, sing = classified_singularity(kind, dtype)
            bde = bde_at(jet_at(surf, sing.location, order=3))
            for eq in fiber_equilibria(surf, sing):
                if eq.point.chart != "p":
                    continue
                p0 = eq.point.slope
                lam_t = (2 * bde.Lu * p0 + bde.Mu) + p0 * (2 * bde.Lv * p0 + bde.Mv)
                # phi(p) = -(Lv p^3 + (Lu+Mv) p^2 + (Mu+Nv) p + Nu)
                lam_f = -(3 * bde.Lv * p0 ** 2 + 2 * (bde.Lu + bde.Mv) * p0
                          + (bde.Mu + bde.Nv))
                assert eq.lam_fiber == pytest.approx(lam_f, rel=1e-5, abs=1e-8)
                assert eq.lam_transverse == pytest.approx(lam_t, rel=1e-5, abs=1e-8)

    def test_structural_zero_eigenvalue(self):
        surf, sing = classified_singularity("umbilic", "D3")
        for eq in fiber_equilibria(surf, sing):
            zero = min(abs(lam) for lam in eq.eigenvalues)
            others = sorted(abs(lam) for lam in eq.eigenvalues)[1:]
            assert zero < 1e-6 * max(others)

    def test_gradient_condition_on_fiber(self):
        for (kind, dtype) in CONSTRUCTED:
            surf, sing = classified_singularity(kind, dtype)
            assert fiber_gradient_min(surf, sing) > 1e-3

    def test_eigenvalue_signs_stable_under_perturbation(self):
        rng = np.random.default_rng(6)
        base = [0, 1, 0, 0, 0, 0, 2, 1, 0, -1, -1.0, 0, 0, 0]  # normal D3
        surf0 = catalog_surface("graph_monge", *base, 0.2)
        rep = find_singularities(surf0)
        sing0 = [s for s in rep.singularities if s.kind == "normal"][0]
        classify_singularity(surf0, sing0)
        ref = sorted((e.point.slope, np.sign(e.lam_fiber), np.sign(e.lam_transverse))
                     for e in fiber_equilibria(surf0, sing0)
                     if e.point.chart == "p")
        for _ in range(3):
            noisy = [c + e for c, e in zip(base, rng.uniform(-1e-7, 1e-7, 14))]
            surf = catalog_surface("graph_monge", *noisy, 0.2)
            rep = find_singularities(surf)
            sing = [s for s in rep.singularities if s.kind == "normal"][0]
            classify_singularity(surf, sing)
            got = sorted((e.point.slope, np.sign(e.lam_fiber), np.sign(e.lam_transverse))
                         for e in fiber_equilibria(surf, sing)
                         if e.point.chart == "p")
            assert len(got) == len(ref)
            for (s0, f0, t0), (s1, f1, t1) in zip(ref, got):
                assert abs(s0 - s1) < 1e-4
                assert f0 == f1 and t0 == t1


class TestSeparatrixGerms:
    @pytest.mark.parametrize("kind", ["normal", "umbilic"])
    @pytest.mark.parametrize("dtype", ["D1", "D2", "D3"])
    def test_germ_counts(self, kind, dtype):
        surf, sing = classified_singularity(kind, dtype)
        fiber_equilibria(surf, sing)
        germs = separatrix_germs(surf, sing)
        nsaddles = EXPECTED[dtype]["saddles"]
        assert len(germs) == 2 * nsaddles
        for g in germs:
            assert g.ok, g.note
            r = math.hypot(g.exit_point[0] - sing.location[0],
                           g.exit_point[1] - sing.location[1])
            assert r >= DEFAULT_TOL.r_exit * 0.99
            assert r <= DEFAULT_TOL.r_exit * 3.0
            # outgoing orientation
            dot = (g.exit_direction[0] * (g.exit_point[0] - sing.location[0])
                   + g.exit_direction[1] * (g.exit_point[1] - sing.location[1]))
            assert dot > 0

    def test_chart_consistency_on_overlap(self):
        # integrating the lifted field from the same projective point in
        # either slope chart yields the same surface path
        surf = catalog_surface("lifted_ellipsoid")
        from meanfol.integrate import DormandPrince
        start = (1.3, 1.1)
        slope = 0.9
        rho = 5e-4

        def run(chart):
            s0 = slope if chart == "p" else 1.0 / slope

            def rhs(_t, y):
                return field_at(surf, ProjPoint(y[0], y[1], y[2], chart))

            stepper = DormandPrince(rhs, 0.0, [start[0], start[1], s0],
                                    rtol=1e-11, atol=1e-13)
            while True:
                stepper.step()
                if math.hypot(stepper.y[0] - start[0],
                              stepper.y[1] - start[1]) >= rho:
                    # bisect back to the exact radius on the last step
                    from meanfol.integrate import bisect_event
                    tstar = bisect_event(
                        lambda t: math.hypot(*(stepper.interpolate(t)[:2]
                                               - np.array(start))) - rho,
                        stepper.t_prev, stepper.t)
                    return stepper.interpolate(tstar)[:2]

        a = run("p")
        b = run("q")
        # same projective direction can be traversed either way in the
        # q-chart; accept the symmetric partner as well
        fwd = np.linalg.norm(a - b)
        mirrored = np.linalg.norm((a - np.array(start)) + (b - np.array(start)))
        assert min(fwd, mirrored) < 1e-6
