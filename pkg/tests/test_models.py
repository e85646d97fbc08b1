"""Model registry: chart transitions, boundary structure, embeddings."""

import numpy as np
import pytest

from aads.errors import ConstructionError, CoverageError
from aads.models import (BoundaryPoint, ModelSpec, ads, antipodal,
                         antipodal_inverse, boundary_chronology,
                         boundary_to_minkowski, build_model, closure_position,
                         exact_relation, flat, minkowski_to_boundary,
                         schwarzschild, transition, transition_velocity)
from aads.tensor import metric_at

ADS4 = ads(4, 1.0)
GLOBAL = ADS4.charts["global"]
POINCARE = ADS4.charts["poincare"]


def test_build_model_families():
    m = build_model(ModelSpec("ads_global", d=4, R=1.0))
    p = m.point(0.0, 1.0, np.pi / 2, 0.0)
    assert np.allclose(metric_at(m, p), np.diag([-2, 0.5, 1, 1]))
    mp = build_model(ModelSpec("ads_poincare", d=4, R=1.0))
    assert mp.chart_id.endswith(":poincare")
    mb = build_model(ModelSpec("esu_boundary", d=4))
    assert mb.dimension == 3
    mf = build_model(ModelSpec("minkowski", d=5))
    assert mf.dimension == 5


def test_model_spec_validation():
    with pytest.raises(ConstructionError):
        ModelSpec("ads_global", d=2)
    with pytest.raises(ConstructionError):
        ModelSpec("ads_global", d=4, R=-1.0)
    with pytest.raises(ConstructionError):
        ModelSpec("schwarzschild_ads", d=4, m=-0.1)
    with pytest.raises(ConstructionError):
        ModelSpec("nosuch", d=4)
    with pytest.raises(ConstructionError):
        ModelSpec("fg_metric", d=4)


def test_model_spec_json_roundtrip():
    spec = ModelSpec("schwarzschild_ads", d=4, R=1.0, m=0.1)
    assert ModelSpec.from_json(spec.to_json()) == spec


def test_schwarzschild_m0_reduces_to_ads():
    s0 = schwarzschild(4, 1.0, 0.0).charts["static"]
    rng = np.random.default_rng(0)
    for _ in range(50):
        x = [rng.uniform(-1, 1), rng.uniform(0.3, 4.0),
             rng.uniform(0.4, np.pi - 0.4), rng.uniform(-np.pi, np.pi)]
        assert np.max(np.abs(metric_at(s0, s0.point(*x))
                             - metric_at(GLOBAL, GLOBAL.point(*x)))) < 1e-12


def test_embedding_of_origin():
    # global (t=0, r->0) has embedding X = (0, ..., 0, R)
    from aads.models import _embedding_from_global
    X = _embedding_from_global(np.array([0.0, 1e-12, 1.0, 0.0]), 4, 1.0)
    assert abs(X[0]) < 1e-11 and np.max(np.abs(X[1:4])) < 1e-11
    assert X[4] == pytest.approx(1.0)


def test_transition_roundtrip_poincare():
    rng = np.random.default_rng(12)
    n = 0
    while n < 100:
        x = [rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1),
             rng.uniform(0.1, 3.0)]
        p = POINCARE.point(*x)
        g = transition(p, "global")
        back = transition(g, "poincare")
        assert np.max(np.abs(back.coords - p.coords)) < 1e-9
        n += 1


def test_transition_u_monotone_and_limit():
    # u = 2(sqrt(1+r^2/R^2) - r/R) decreases in r, u -> 0 as r -> infinity
    us = []
    for r in [0.5, 1.0, 5.0, 50.0, 5e4]:
        p = GLOBAL.point(0.3, r, 1.0, 0.2)
        us.append(transition(p, "fg").coords[1])
    assert all(u1 > u2 for u1, u2 in zip(us, us[1:]))
    assert us[-1] < 1e-4
    assert transition(GLOBAL.point(0.3, 1e-8, 1.0, 0.2), "fg").coords[1] == \
        pytest.approx(2.0, abs=1e-7)


def test_transition_out_of_coverage():
    # deep Poincare-horizon side: X^{d-1} + X^d <= 0 for some global points
    p = GLOBAL.point(np.pi, 0.5, np.pi / 2, 0.0)  # t = pi: opposite side
    with pytest.raises(CoverageError):
        transition(p, "poincare")


def _physical_metric(model, p):
    """Chart metric rescaled to the physical (bulk) metric: closure charts
    carry gbar = z^2 g, bulk charts carry g itself."""
    g = metric_at(model, p)
    if model.conformal_factor_fn is not None and \
            model.chart_id.split(":")[1] in ("esu", "esu_stereo", "fg"):
        z = float(model.conformal_factor_fn(p.coords))
        return g / z**2
    return g


def test_transition_preserves_metric():
    """Pullback of the target metric through the FD Jacobian equals the
    source metric, after removing each chart's conformal weight
    (50 seeded points per chart pair)."""
    rng = np.random.default_rng(5)
    pairs = [("global", "poincare"), ("global", "esu"), ("esu", "fg"),
             ("global", "esu_stereo")]
    for src_name, dst_name in pairs:
        src = ADS4.charts[src_name]
        dst = ADS4.charts[dst_name]
        checked = 0
        while checked < 50:
            if src_name == "global":
                x = [rng.uniform(-0.8, 0.8), rng.uniform(0.3, 2.5),
                     rng.uniform(0.5, np.pi - 0.5), rng.uniform(-2.5, 2.5)]
            else:
                x = [rng.uniform(-0.8, 0.8), rng.uniform(0.3, np.pi / 2 - 0.1),
                     rng.uniform(0.5, np.pi - 0.5), rng.uniform(-2.5, 2.5)]
            p = src.point(*x)
            try:
                q = transition(p, dst_name)
            except CoverageError:
                continue
            d = src.dimension
            J = np.empty((d, d))
            for i in range(d):
                dx = np.zeros(d)
                dx[i] = 1e-6 * max(1.0, abs(p.coords[i]))
                xp = transition(p.with_coords(p.coords + dx), dst_name).coords
                xm = transition(p.with_coords(p.coords - dx), dst_name).coords
                J[:, i] = (xp - xm) / (2 * dx[i])
            g_src = _physical_metric(src, p)
            g_dst = _physical_metric(dst, q)
            pullback = J.T @ g_dst @ J
            assert np.max(np.abs(pullback - g_src)) < 1e-6 * max(1.0, np.max(np.abs(g_src)))
            checked += 1


def test_schwarzschild_fg_transition_roundtrip():
    fam = schwarzschild(4, 1.0, 0.1)
    st = fam.charts["static"]
    rng = np.random.default_rng(3)
    for _ in range(20):
        p = st.point(rng.uniform(-1, 1), rng.uniform(0.5, 20.0),
                     rng.uniform(0.5, np.pi - 0.5), rng.uniform(-3, 3))
        q = transition(p, "fg")
        back = transition(q, "static")
        assert np.max(np.abs(back.coords - p.coords)) < 1e-9 * max(1.0, p.coords[1])


def test_antipodal_formula_and_covering():
    e = np.array([1.0, 0.0, 0.0])
    p = BoundaryPoint(0.0, e)
    pb = antipodal(p)
    assert pb.tau == pytest.approx(np.pi)
    assert np.allclose(pb.e, -e)
    pbb = antipodal(pb)
    assert pbb.tau == pytest.approx(2 * np.pi)  # distinct from p on the covering
    assert np.allclose(pbb.e, e)
    assert antipodal_inverse(antipodal(p)).tau == pytest.approx(p.tau)


def test_antipodal_commutes_with_time_translation():
    e = np.array([0.0, 1.0, 0.0])
    for s in [0.3, -1.2, 7.0]:
        a = antipodal(BoundaryPoint(0.4 + s, e))
        b = antipodal(BoundaryPoint(0.4, e)).translated(s)
        assert a.tau == pytest.approx(b.tau) and np.allclose(a.e, b.e)


def test_boundary_chronology_examples():
    e = np.array([1.0, 0.0, 0.0])
    assert boundary_chronology(BoundaryPoint(0, e), BoundaryPoint(1.0, e)) \
        == "chronological_future"
    assert boundary_chronology(BoundaryPoint(0, e), BoundaryPoint(np.pi, -e)) \
        == "lightlike"
    assert boundary_chronology(BoundaryPoint(0, e), BoundaryPoint(0.5, -e)) \
        == "spacelike"
    assert boundary_chronology(BoundaryPoint(0, e), BoundaryPoint(-2.0, e)) \
        == "chronological_past"


def test_boundary_chronology_against_integrated_esu_null_geodesics():
    """The Arccos comparison must match actual ESU light cones: integrate
    null geodesics of the boundary cylinder and check the boundary of the
    chronology classification sits on their arrival times."""
    from aads.geodesics import GeodesicState, integrate
    from aads.models import _esu_boundary_family
    bnd = _esu_boundary_family(4).charts["boundary"]
    rng = np.random.default_rng(8)
    for _ in range(10):
        th0, ph0 = rng.uniform(0.6, np.pi - 0.6), rng.uniform(-2, 2)
        p = bnd.point(0.0, th0, ph0)
        v = np.array([1.0, *rng.normal(size=2)])
        g = metric_at(bnd, p)
        sp = v[1:] @ g[1:, 1:] @ v[1:]
        v[0] = np.sqrt(sp)  # null, future-directed
        traj = integrate(bnd, GeodesicState(p, v), {"max_affine": 1.5 / v[0]})
        lam = 0.9 * traj.final_affine
        x = traj.coords(lam)
        e0 = np.array([np.sin(th0) * np.cos(ph0), np.sin(th0) * np.sin(ph0),
                       np.cos(th0)])
        e1 = np.array([np.sin(x[1]) * np.cos(x[2]), np.sin(x[1]) * np.sin(x[2]),
                       np.cos(x[1])])
        a = BoundaryPoint(0.0, e0)
        b = BoundaryPoint(x[0], e1)
        # along the null geodesic: Delta tau equals the great-circle distance
        assert boundary_chronology(a, b) == "lightlike" or \
            abs(abs(x[0]) - np.arccos(np.clip(e0 @ e1, -1, 1))) < 1e-7
        # just above / below: chronological / spacelike
        assert boundary_chronology(a, BoundaryPoint(b.tau + 1e-5, b.e)) \
            == "chronological_future"
        assert boundary_chronology(a, BoundaryPoint(b.tau - 1e-5, b.e)) \
            == "spacelike"


def test_tau_reflection_maps_future_to_past():
    rng = np.random.default_rng(21)
    tau0 = 0.7
    for _ in range(50):
        p = BoundaryPoint(rng.uniform(-2, 2), rng.normal(size=3))
        q = BoundaryPoint(rng.uniform(-2, 2), rng.normal(size=3))
        rel = boundary_chronology(p, q)
        pr = BoundaryPoint(2 * tau0 - p.tau, p.e)
        qr = BoundaryPoint(2 * tau0 - q.tau, q.e)
        flipped = {"chronological_future": "chronological_past",
                   "chronological_past": "chronological_future"}.get(rel, rel)
        assert boundary_chronology(pr, qr) == flipped


def test_minkowski_embedding_preserves_chronology():
    eta = np.diag([-1.0, 1.0, 1.0])
    rng = np.random.default_rng(17)
    for _ in range(200):
        x = rng.uniform(-1.5, 1.5, size=3)
        y = rng.uniform(-1.5, 1.5, size=3)
        dx = y - x
        s = float(dx @ eta @ dx)
        if s < 0:
            flat_rel = "chronological_future" if dx[0] > 0 else "chronological_past"
        elif s > 0:
            flat_rel = "spacelike"
        else:
            flat_rel = "lightlike"
        bp = minkowski_to_boundary(x)
        bq = minkowski_to_boundary(y)
        assert boundary_chronology(bp, bq) == flat_rel


def test_minkowski_embedding_roundtrip():
    rng = np.random.default_rng(2)
    for _ in range(50):
        x = rng.uniform(-2, 2, size=3)
        bp = minkowski_to_boundary(x)
        assert np.max(np.abs(boundary_to_minkowski(bp) - x)) < 1e-10


def test_exact_relation_examples():
    es = ADS4.charts["esu"]
    a = es.point(0.0, 0.4, np.pi / 2, 0.0)
    assert exact_relation(a, es.point(0.1, 0.4, np.pi / 2, 0.0)) == "future"
    assert exact_relation(a, es.point(-0.1, 0.4, np.pi / 2, 0.0)) == "past"
    assert exact_relation(a, es.point(0.0, 0.5, np.pi / 2, 0.0)) == "spacelike"
    # radial light crossing time pi/2 from the center (stereo chart covers it)
    stc = ADS4.charts["esu_stereo"]
    c = stc.point(0.0, 0.0, 0.0, 0.0)
    b = BoundaryPoint(np.pi / 2 - 0.01, np.array([1.0, 0, 0]))
    assert exact_relation(c, b) == "spacelike"
    b2 = BoundaryPoint(np.pi / 2 + 0.01, np.array([1.0, 0, 0]))
    assert exact_relation(c, b2) == "future"


def test_closure_position_consistency_across_charts():
    p = GLOBAL.point(0.3, 0.8, 1.1, 0.7)
    t0, y0 = closure_position(p)
    for name in ("esu", "fg", "esu_stereo", "poincare"):
        q = transition(p, name)
        t1, y1 = closure_position(q)
        assert abs(t1 - t0) < 1e-9
        assert np.max(np.abs(y1 - y0)) < 1e-9


def test_transition_velocity_pushforward_norm():
    from aads.tensor import metric_at
    p = GLOBAL.point(0.2, 1.1, 1.3, 0.4)
    v = np.array([0.5, 0.2, -0.1, 0.3])
    g = metric_at(GLOBAL, p)
    n0 = v @ g @ v
    q = transition(p, "esu")
    w = transition_velocity(p, v, "esu")
    gq = metric_at(ADS4.charts["esu"], q)
    # conformal factor relates the two norms: g_esu = z^2 g_global
    z = ADS4.charts["esu"].conformal_factor_fn(q.coords)
    assert w @ gq @ w == pytest.approx(z**2 * n0, rel=1e-6)


def test_cross_dimension_models():
    """d = 3 and d = 5 charts: curvature values and transition round trips."""
    from aads.tensor import curvature_at, sectional_curvature
    rng = np.random.default_rng(6)
    for d in (3, 5):
        fam = ads(d, 1.0)
        gl = fam.charts["global"]
        x = [0.1, 1.3] + [1.2] * (d - 3) + [0.4]
        p = gl.point(*x)
        b = curvature_at(gl, p)
        assert b.scalar == pytest.approx(-d * (d - 1), abs=1e-7)
        K = sectional_curvature(gl, p, rng.normal(size=d), rng.normal(size=d))
        assert K == pytest.approx(-1.0, abs=1e-7)
        q = transition(p, "poincare")
        back = transition(q, "global")
        assert np.max(np.abs(back.coords - p.coords)) < 1e-9
        # boundary ops in the matching dimension
        e = np.zeros(d - 1)
        e[0] = 1.0
        bp = BoundaryPoint(0.0, e)
        ab = antipodal(bp)
        assert boundary_chronology(bp, ab) == "lightlike"


def test_pole_band_exclusion():
    from aads.errors import DomainError
    gl = ads(4, 1.0).charts["global"]
    with pytest.raises(DomainError, match="pole"):
        gl.check_domain(np.array([0.0, 1.0, 1e-8, 0.0]))


def test_concurrent_evaluation_matches_serial():
    """Pure functions of immutable models: thread-pool evaluation agrees
    with serial evaluation exactly."""
    from concurrent.futures import ThreadPoolExecutor
    from aads.tensor import curvature_at
    gl = ads(4, 1.0).charts["global"]
    pts = [gl.point(0.1 * k, 0.5 + 0.1 * k, 1.2, 0.3) for k in range(12)]
    serial = [curvature_at(gl, p).scalar for p in pts]
    with ThreadPoolExecutor(max_workers=4) as pool:
        parallel = list(pool.map(lambda p: curvature_at(gl, p).scalar, pts))
    assert serial == parallel
