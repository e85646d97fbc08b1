"""Chart-level tensor calculus: metric values, Christoffels, curvature,
Einstein residuals and conformal identities."""

import numpy as np
import pytest

from aads.errors import DegeneratePlaneError, DomainError
from aads.models import ads, flat, schwarzschild, chart
from aads.tensor import (christoffel_at, conformal_ricci_check, curvature_at,
                         einstein_residual, metric_at,
                         metric_compatibility_residual, sectional_curvature,
                         weyl_trace_norm)

ADS4 = ads(4, 1.0)
GLOBAL = ADS4.charts["global"]
POINCARE = ADS4.charts["poincare"]
ESU = ADS4.charts["esu"]
FLAT = flat(4)
SCHW = schwarzschild(4, 1.0, 0.1)


def seeded_points(model, n, seed=42):
    rng = np.random.default_rng(seed)
    pts = []
    name = model.chart_id.split(":")[1]
    for _ in range(n):
        if name == "global":
            x = [rng.uniform(-1, 1), rng.uniform(0.2, 3.0),
                 rng.uniform(0.4, np.pi - 0.4), rng.uniform(-np.pi, np.pi)]
        elif name == "poincare":
            x = [rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
                 rng.uniform(0.2, 3.0)]
        elif name == "esu":
            x = [rng.uniform(-1, 1), rng.uniform(0.2, np.pi / 2 - 0.05),
                 rng.uniform(0.4, np.pi - 0.4), rng.uniform(-np.pi, np.pi)]
        elif name == "esu_stereo":
            xi = rng.uniform(-0.5, 0.5, size=3)
            x = [rng.uniform(-1, 1), *xi]
        elif name == "fg":
            x = [rng.uniform(-1, 1), rng.uniform(0.1, 1.8),
                 rng.uniform(0.4, np.pi - 0.4), rng.uniform(-np.pi, np.pi)]
        elif name == "static":
            x = [rng.uniform(-1, 1), rng.uniform(0.8, 5.0),
                 rng.uniform(0.4, np.pi - 0.4), rng.uniform(-np.pi, np.pi)]
        elif name == "flat":
            x = rng.uniform(-2, 2, size=model.dimension)
        else:
            raise ValueError(name)
        pts.append(model.point(*x))
    return pts


def test_metric_global_spec_point():
    p = GLOBAL.point(0.0, 1.0, np.pi / 2, 0.0)
    assert np.allclose(metric_at(GLOBAL, p), np.diag([-2.0, 0.5, 1.0, 1.0]))


def test_metric_poincare_time_time():
    p = POINCARE.point(0.3, 0.1, -0.2, 2.0)
    assert metric_at(POINCARE, p)[0, 0] == pytest.approx(-0.25)


def test_metric_flat():
    p = FLAT.point(0.3, 0.1, -0.2, 2.0)
    assert np.allclose(metric_at(FLAT, p), np.diag([-1, 1, 1, 1]))


def test_metric_out_of_domain_names_bound():
    with pytest.raises(DomainError, match="z > 0"):
        metric_at(POINCARE, POINCARE.point(0, 0, 0, -1.0))
    with pytest.raises(DomainError, match="r >"):
        metric_at(GLOBAL, GLOBAL.point(0, -0.5, 1.0, 0.0))


def test_christoffel_poincare_conformally_flat_oracle():
    # Gamma = d f + d f - eta eta d f with f = -ln z, at z = 1
    p = POINCARE.point(0.0, 0.0, 0.0, 1.0)
    G = christoffel_at(POINCARE, p)
    assert G[3, 0, 0] == pytest.approx(-1.0, abs=1e-12)
    assert G[0, 0, 3] == pytest.approx(-1.0, abs=1e-12)
    assert G[0, 3, 0] == pytest.approx(-1.0, abs=1e-12)


def test_christoffel_flat_zero():
    G = christoffel_at(FLAT, FLAT.point(1.0, 2.0, 3.0, 4.0))
    assert np.max(np.abs(G)) == 0.0


def test_christoffel_symmetry_and_compatibility():
    for model, tol in [(GLOBAL, 1e-10), (POINCARE, 1e-10), (ESU, 1e-10),
                       (SCHW.charts["static"], 1e-10)]:
        for p in seeded_points(model, 100):
            G = christoffel_at(model, p)
            assert np.max(np.abs(G - np.swapaxes(G, 1, 2))) == 0.0
            assert metric_compatibility_residual(model, p) < tol


def test_christoffel_fd_mode_compatibility():
    for p in seeded_points(GLOBAL, 20, seed=3):
        assert metric_compatibility_residual(GLOBAL, p, force_fd=True) < 1e-6


def test_fd_christoffel_second_order_convergence():
    # halving h reduces the FD/analytic disagreement by a factor >= 3.5
    for p in seeded_points(SCHW.charts["static"], 10, seed=11):
        G_exact = christoffel_at(SCHW.charts["static"], p)
        e1 = np.max(np.abs(christoffel_at(SCHW.charts["static"], p,
                                          force_fd=True, step=1e-3) - G_exact))
        e2 = np.max(np.abs(christoffel_at(SCHW.charts["static"], p,
                                          force_fd=True, step=5e-4) - G_exact))
        assert e1 / max(e2, 1e-300) > 3.5


def test_curvature_ads_scalar_and_ricci():
    for p in seeded_points(GLOBAL, 5):
        b = curvature_at(GLOBAL, p, force_fd=False)
        g = metric_at(GLOBAL, p)
        assert b.scalar == pytest.approx(-12.0, abs=1e-7)
        assert np.max(np.abs(b.ricci + 3.0 * g)) < 1e-7


def test_curvature_bundle_invariants():
    for model in (GLOBAL, SCHW.charts["static"]):
        for p in seeded_points(model, 3, seed=5):
            b = curvature_at(model, p)
            R = b.riemann
            assert np.max(np.abs(R + np.swapaxes(R, 2, 3))) < 1e-8
            assert np.max(np.abs(b.ricci - b.ricci.T)) < 1e-10
            ginv = np.linalg.inv(metric_at(model, p))
            assert weyl_trace_norm(b, ginv) < 1e-8


def test_ads_weyl_vanishes():
    for model in (GLOBAL, POINCARE):
        for p in seeded_points(model, 3, seed=7):
            b = curvature_at(model, p)
            assert np.max(np.abs(b.weyl)) < 1e-8


def test_flat_curvature_zero():
    b = curvature_at(FLAT, FLAT.point(0.1, 0.2, 0.3, 0.4))
    assert np.max(np.abs(b.riemann)) == 0.0
    assert b.scalar == 0.0


def test_sectional_curvature_values():
    rng = np.random.default_rng(1)
    p = GLOBAL.point(0.0, 1.3, 1.1, 0.2)
    for _ in range(5):
        X = rng.normal(size=4)
        Y = rng.normal(size=4)
        assert sectional_curvature(GLOBAL, p, X, Y) == pytest.approx(-1.0, abs=1e-7)
    ads2 = ads(4, 2.0)
    p2 = ads2.charts["global"].point(0.0, 1.3, 1.1, 0.2)
    assert sectional_curvature(ads2.charts["global"], p2, rng.normal(size=4),
                               rng.normal(size=4)) == pytest.approx(-0.25, abs=1e-8)
    assert sectional_curvature(FLAT, FLAT.point(0, 0, 0, 0),
                               np.array([1.0, 0, 0, 0]),
                               np.array([0, 1.0, 0, 0])) == 0.0


def test_sectional_degenerate_plane():
    X = np.array([1.0, 1.0, 0.0, 0.0])  # null in flat space
    with pytest.raises(DegeneratePlaneError):
        sectional_curvature(FLAT, FLAT.point(0, 0, 0, 0), X, X)


def test_einstein_residual_ads_and_schwarzschild():
    for model in (GLOBAL, POINCARE):
        for p in seeded_points(model, 5, seed=9):
            assert einstein_residual(model, p, -3.0) < 1e-8
    st = SCHW.charts["static"]
    for p in seeded_points(st, 5, seed=9):
        assert einstein_residual(st, p, -3.0) < 1e-10
    assert einstein_residual(FLAT, FLAT.point(0, 0, 0, 0), 0.0) == 0.0


def test_weyl_conformal_invariance():
    # C(gbar)^d_abc = C(g)^d_abc for the AdS bulk/closure pair in one chart
    from dataclasses import replace
    zf = ESU.conformal_factor_fn
    bulk = replace(ESU, chart_id=ESU.chart_id + "#bulk",
                   metric_fn=lambda x: ESU.metric_fn(x) / zf(x) ** 2,
                   dmetric_fn=None, extras={})
    schw_fg = SCHW.charts["fg"]
    zf2 = schw_fg.conformal_factor_fn
    schw_bulk = replace(schw_fg, chart_id=schw_fg.chart_id + "#bulk",
                        metric_fn=lambda x: schw_fg.metric_fn(x) / zf2(x) ** 2,
                        dmetric_fn=None, extras={})
    for closure, bulk_m, x in [
            (ESU, bulk, np.array([0.2, 0.9, 1.3, 0.4])),
            (schw_fg, schw_bulk, np.array([0.0, 0.5, 1.2, 0.3]))]:
        cb = curvature_at(closure, closure.point(*x))
        bb = curvature_at(bulk_m, bulk_m.point(*x))
        g_c = metric_at(closure, closure.point(*x))
        g_b = metric_at(bulk_m, bulk_m.point(*x))
        C_c = np.einsum("ae,ebcd->abcd", np.linalg.inv(g_c), cb.weyl)
        C_b = np.einsum("ae,ebcd->abcd", np.linalg.inv(g_b), bb.weyl)
        assert np.max(np.abs(C_c - C_b)) < 1e-6


def test_conformal_ricci_identity():
    p = ESU.point(0.1, 0.8, 1.2, 0.3)
    assert conformal_ricci_check(None, ESU, p) < 1e-6


def test_conformal_ricci_near_boundary_normalization():
    rho = np.arccos(1e-3)  # z = cos(rho) = 1e-3
    p = ESU.point(0.0, rho, 1.2, 0.3)
    assert conformal_ricci_check(None, ESU, p, near_boundary=True) < 1e-4


def test_conformal_ricci_trivial_pair():
    # identical models with z == 1: residual reduces to Ric(g) - Ric(gbar) = 0
    from dataclasses import replace
    m = replace(FLAT, chart_id=FLAT.chart_id + "#unitz",
                conformal_factor_fn=lambda x: 1.0)
    assert conformal_ricci_check(m, m, m.point(0, 0, 0, 0)) < 1e-10
