"""Wedge/diamond algebra: Rehren bijection, complements, flow, volumes,
envelope membership."""

import numpy as np
import pytest

import aads.models as M
from aads.errors import DomainError, PreconditionError, UnsupportedError
from aads.models import BoundaryPoint, ads, antipodal, flat
from aads.regions import (DiamondSpec, WedgeSpec, _WedgeFrame,
                          causal_complement, chronological_relation,
                          diamond_volume, envelope_contains,
                          minkowski_domain_case, rehren_inverse, rehren_map,
                          wedge_flow)

ADS4 = ads(4, 1.0)
GLOBAL = ADS4.charts["global"]
ESU = ADS4.charts["esu"]
FLAT = flat(4)
NHAT = np.array([0.0, 0.0, 1.0])
E1 = np.array([1.0, 0.0, 0.0])
STD = WedgeSpec(BoundaryPoint(-np.pi / 2, NHAT), BoundaryPoint(np.pi / 2, NHAT))


def interior_boundary_points(rng, n, margin=1e-3):
    pts = []
    while len(pts) < n:
        y = rng.uniform(-1, 1, size=3)
        if np.linalg.norm(y[1:]) < 1 - abs(y[0]) - margin:
            pts.append(M.minkowski_to_boundary(y))
    return pts


def test_spec_validation():
    e = E1
    with pytest.raises(PreconditionError):
        DiamondSpec(BoundaryPoint(0, e), BoundaryPoint(0.5, -e))  # spacelike
    with pytest.raises(PreconditionError):
        DiamondSpec(BoundaryPoint(1.0, e), BoundaryPoint(0.0, e))  # past
    # case-1 pair (diamond would contain a Cauchy surface): unsupported
    with pytest.raises(PreconditionError):
        DiamondSpec(BoundaryPoint(0, e), BoundaryPoint(np.pi + 0.3, -e))
    # but as a WedgeSpec this is the complement form and is accepted
    WedgeSpec(BoundaryPoint(0, e), BoundaryPoint(np.pi + 0.3, -e))


def test_minkowski_domain_cases():
    assert minkowski_domain_case(BoundaryPoint(0, E1), BoundaryPoint(0.3, E1)) == 2
    assert minkowski_domain_case(STD.p, STD.q) == 2
    assert minkowski_domain_case(BoundaryPoint(0, E1),
                                 BoundaryPoint(np.pi + 0.3, -E1)) == 1


def test_rehren_bijection_roundtrip():
    rng = np.random.default_rng(31)
    done = 0
    while done < 50:
        a, b = interior_boundary_points(rng, 2)
        if M.boundary_chronology(a, b) != "chronological_future":
            continue
        w = WedgeSpec(a, b)
        dia = rehren_map(w)
        assert dia.p == w.p and dia.q == w.q      # label passthrough
        w2 = rehren_inverse(dia)
        assert w2.p == w.p and w2.q == w.q
        done += 1


def test_causal_complement_labels_and_involution():
    wc = causal_complement(STD, GLOBAL)
    assert wc.p.tau == pytest.approx(-np.pi / 2)
    assert np.allclose(wc.p.e, -NHAT)
    assert wc.q.tau == pytest.approx(np.pi / 2)
    wcc = causal_complement(wc, GLOBAL)
    assert wcc.p.tau == pytest.approx(STD.p.tau) and np.allclose(wcc.p.e, STD.p.e)
    assert wcc.q.tau == pytest.approx(STD.q.tau) and np.allclose(wcc.q.e, STD.q.e)


def test_causal_complement_spec_example():
    # W_{p, q-bar} with p = (0,e), q = (0.3,e) maps to W_{(0.3,e), (pi,-e)}
    p = BoundaryPoint(0.0, E1)
    q = BoundaryPoint(0.3, E1)
    win = WedgeSpec(p, antipodal(q))
    wout = causal_complement(win, GLOBAL)
    assert wout.p.tau == pytest.approx(0.3) and np.allclose(wout.p.e, E1)
    assert wout.q.tau == pytest.approx(np.pi) and np.allclose(wout.q.e, -E1)


def test_rehren_of_complement_is_boundary_complement():
    # rehren_map(causal_complement(W_{p,q-bar})) carries the labels (q, p-bar)
    wc = causal_complement(STD, GLOBAL)
    dia = rehren_map(wc)
    assert dia.p.tau == wc.p.tau and np.allclose(dia.p.e, wc.p.e)
    assert dia.q.tau == wc.q.tau and np.allclose(dia.q.e, wc.q.e)


def test_causal_complement_requires_ads():
    with pytest.raises(UnsupportedError):
        causal_complement(STD, FLAT)


def test_complement_wedges_causally_disjoint():
    """100 sampled interior points of each side of the standard wedge pair
    are mutually spacelike under the exact AdS chronology."""
    rng = np.random.default_rng(7)
    wc = causal_complement(STD, GLOBAL)

    def bulk_samples(w, n):
        # wedge tips at (-pi/2, e), (pi/2, e): points hug the boundary near e
        out = []
        while len(out) < n:
            t = rng.uniform(-1.2, 1.2)
            rho = rng.uniform(1.0, np.pi / 2 - 0.01)
            y_dir = w.p.e + rng.normal(scale=0.2, size=3)
            y_dir /= np.linalg.norm(y_dir)
            y = np.concatenate([np.sin(rho) * y_dir, [np.cos(rho)]])
            t_off = 0.0
            pos = STEREO_from(y, t + t_off)
            if M.exact_relation(w.p, pos) == "future" and \
                    M.exact_relation(pos, w.q) == "future":
                out.append(pos)
        return out

    stereo = ADS4.charts["esu_stereo"]

    def STEREO_from(y, t):
        xi = y[:-1] / (1.0 + y[-1])
        return stereo.point(t, *xi)

    a_pts = bulk_samples(STD, 100)
    b_pts = bulk_samples(wc, 100)
    for a in a_pts[:20]:
        for b in b_pts[:20]:
            assert M.exact_relation(a, b) == "spacelike"


def test_chronological_relation_examples():
    a = GLOBAL.point(0.0, 1e-6 + 0.3, np.pi / 2, 0.0)
    b = GLOBAL.point(0.1, 0.3, np.pi / 2, 0.0)
    assert chronological_relation(GLOBAL, a, b) == "future"
    # radial light crossing: bulk center to boundary takes t = pi/2
    stereo = ADS4.charts["esu_stereo"]
    c = stereo.point(0.0, 0.0, 0.0, 0.0)
    assert chronological_relation(stereo, c,
                                  BoundaryPoint(np.pi / 2 - 0.01, E1)) == "spacelike"
    assert chronological_relation(stereo, c,
                                  BoundaryPoint(np.pi / 2 + 0.01, E1)) == "future"


def test_chronological_relation_flat_agrees_with_eta_sign():
    rng = np.random.default_rng(3)
    eta = np.diag([-1.0, 1, 1, 1])
    for _ in range(500):
        a = FLAT.point(*rng.uniform(-1, 1, size=4))
        b = FLAT.point(*rng.uniform(-1, 1, size=4))
        dx = b.coords - a.coords
        s = float(dx @ eta @ dx)
        rel = chronological_relation(FLAT, a, b)
        if s < 0:
            assert rel == ("future" if dx[0] > 0 else "past")
        elif s > 0:
            assert rel == "spacelike"


def test_wedge_flow_identity_and_midpoint():
    x = BoundaryPoint(0.0, NHAT)
    y0 = wedge_flow(STD, x, 0.0)
    assert abs(y0.tau) < 1e-12 and np.allclose(y0.e, NHAT)
    for lam in (0.5, 1.5, -2.0):
        ym = M.boundary_to_minkowski(wedge_flow(STD, x, lam))
        assert ym[0] == pytest.approx(np.tanh(lam / 2), abs=1e-12)
        assert np.linalg.norm(ym[1:]) < 1e-12


def test_wedge_flow_fixed_endpoints():
    from aads.regions import _standard_flow_lightcone
    for lam in (0.5, 3.0, -4.0):
        assert _standard_flow_lightcone(1.0, lam) == pytest.approx(1.0)
        assert _standard_flow_lightcone(-1.0, lam) == pytest.approx(-1.0)


def test_wedge_flow_group_law():
    we1 = WedgeSpec(BoundaryPoint(-np.pi / 2, E1), BoundaryPoint(np.pi / 2, E1))
    rng = np.random.default_rng(13)
    pts = []
    while len(pts) < 12:
        x = ESU.point(rng.uniform(-0.5, 0.5), rng.uniform(0.9, 1.5),
                      np.pi / 2 + rng.uniform(-0.3, 0.3), rng.uniform(-0.4, 0.4))
        if M.exact_relation(we1.p, x) == "future" and \
                M.exact_relation(x, we1.q) == "future":
            pts.append(x)
    for x in pts:
        l1, l2 = rng.uniform(-1.5, 1.5, size=2)
        y2 = wedge_flow(we1, wedge_flow(we1, x, l2), l1)
        y12 = wedge_flow(we1, x, l1 + l2)
        assert np.max(np.abs(y2.coords - y12.coords)) < 1e-9


def test_wedge_flow_preserves_diamond():
    rng = np.random.default_rng(11)
    for bp in interior_boundary_points(rng, 100):
        for lam in (-5.0, 5.0):
            im = wedge_flow(STD, bp, lam)
            assert M.boundary_chronology(STD.p, im) == "chronological_future"
            assert M.boundary_chronology(im, STD.q) == "chronological_future"


def test_wedge_flow_preserves_boundary_chronology():
    rng = np.random.default_rng(29)
    for _ in range(50):
        a, b = interior_boundary_points(rng, 2)
        rel = M.boundary_chronology(a, b)
        ra = wedge_flow(STD, a, 1.3)
        rb = wedge_flow(STD, b, 1.3)
        assert M.boundary_chronology(ra, rb) == rel


def test_wedge_flow_asymptotic_scaling():
    # |u^lam(x) - (q + e^-lam (x - q))| / e^-lam bounded and stable, lam = 5, 8
    we1 = WedgeSpec(BoundaryPoint(-np.pi / 2, E1), BoundaryPoint(np.pi / 2, E1))
    xb = ESU.point(0.1, 1.3, np.pi / 2, 0.2)
    fr = _WedgeFrame(we1)
    yz0, _ = fr.bulk_to_std(xb)
    qstd = np.zeros(4)
    qstd[0] = 1.0
    vals = []
    for lam in (5.0, 8.0):
        im = wedge_flow(we1, xb, lam)
        yz, _ = fr.bulk_to_std(im)
        vals.append(np.linalg.norm(yz - (qstd + np.exp(-lam) * (yz0 - qstd)))
                    / np.exp(-lam))
    assert vals[0] < 10.0 and vals[1] < 10.0
    assert abs(vals[1] - vals[0]) < 0.2 * max(vals[0], 0.1)


def test_wedge_flow_domain_error():
    outside = BoundaryPoint(3.0, NHAT)
    with pytest.raises(DomainError):
        wedge_flow(STD, outside, 1.0)


def test_diamond_volume_flat_values():
    vol, err = diamond_volume(FLAT, DiamondSpec(STD.p, STD.q),
                              {"seed": 5, "n": 10**6})
    assert abs(vol - 2 * np.pi / 3) < max(3 * err, 0.01 * 2 * np.pi / 3)
    fl3 = flat(3)
    vol3, err3 = diamond_volume(fl3, DiamondSpec(STD.p, STD.q),
                                {"seed": 5, "n": 10**6})
    assert abs(vol3 - 2.0) < max(3 * err3, 0.02)


def test_diamond_volume_scaling():
    pR = M.minkowski_to_boundary(np.array([-2.0, 0, 0]))
    qR = M.minkowski_to_boundary(np.array([2.0, 0, 0]))
    vol, err = diamond_volume(FLAT, DiamondSpec(pR, qR), {"seed": 5, "n": 200000})
    assert abs(vol - 16 * np.pi / 3) < max(3 * err, 0.02 * 16 * np.pi / 3)


def test_diamond_volume_deterministic():
    spec = DiamondSpec(STD.p, STD.q)
    v1 = diamond_volume(FLAT, spec, {"seed": 123, "n": 50000})
    v2 = diamond_volume(FLAT, spec, {"seed": 123, "n": 50000})
    assert v1 == v2


def test_diamond_volume_requires_seed():
    with pytest.raises(PreconditionError):
        diamond_volume(FLAT, DiamondSpec(STD.p, STD.q), {"n": 100})


def test_diamond_volume_bulk_pair():
    vb, eb = diamond_volume(FLAT, (FLAT.point(-1, 0, 0, 0), FLAT.point(1, 0, 0, 0)),
                            {"seed": 9, "n": 400000})
    assert abs(vb - 2 * np.pi / 3) < 3 * eb
    # zero-volume region
    v0, e0 = diamond_volume(FLAT, (FLAT.point(0, 0, 0, 0), FLAT.point(0, 2, 0, 0)),
                            {"seed": 9, "n": 10000})
    assert v0 == 0.0 and e0 == 0.0


def test_diamond_volume_bulk_ads_consistent_with_small_flat_limit():
    # a small AdS diamond at the center has nearly the flat volume
    p = GLOBAL.point(-0.05, 0.4, np.pi / 2, 0.0)
    q = GLOBAL.point(0.05, 0.4, np.pi / 2, 0.0)
    v, e = diamond_volume(GLOBAL, (p, q), {"seed": 4, "n": 200000})
    assert v > 0 and e > 0
    # flat 4d diamond of half-height h has volume (pi/3) h^4 * 2... compare scale
    h = 0.05 * np.sqrt(1 + 0.4**2)  # proper half-height at r = 0.4
    flat_vol = 2 * np.pi / 3 * h**4
    assert abs(v - flat_vol) < 0.15 * flat_vol


def test_envelope_contains():
    p = GLOBAL.point(-0.15, 0.4, np.pi / 2, 0.0)
    q = GLOBAL.point(0.15, 0.4, np.pi / 2, 0.0)
    center = GLOBAL.point(0.0, 0.4, np.pi / 2, 0.0)
    assert envelope_contains(GLOBAL, p, q, center)
    assert not envelope_contains(GLOBAL, p, q, GLOBAL.point(0.4, 0.4, np.pi / 2, 0.0))
    # just outside the spatial edge (angular offset giving sigma ~ 0.20 > 0.15)
    dphi = 0.20 / np.sin(np.arctan(0.4))
    assert not envelope_contains(GLOBAL, p, q, GLOBAL.point(0.0, 0.4, np.pi / 2, dphi))
    dphi_in = 0.10 / np.sin(np.arctan(0.4))
    assert envelope_contains(GLOBAL, p, q, GLOBAL.point(0.0, 0.4, np.pi / 2, dphi_in))


def test_region_spec_json_roundtrip():
    dia = DiamondSpec(STD.p, STD.q)
    j = dia.to_json()
    dia2 = DiamondSpec.from_json(j)
    assert dia2.p.tau == dia.p.tau and np.allclose(dia2.p.e, dia.p.e)
    w2 = WedgeSpec.from_json(j)
    assert w2.q.tau == dia.q.tau


def test_chronological_relation_numeric_mode_dispatch():
    from aads.fans import build_boundary_fan
    from aads.models import schwarzschild
    fam = schwarzschild(4, 1.0, 0.1)
    fan = build_boundary_fan(fam, n_rays=40)
    pt = fam.charts["fg"].point(2.0, 0.5, 0.4, 0.0)
    rel, cert = chronological_relation(fam, BoundaryPoint(0.0, E1), pt,
                                       mode="numeric", fan=fan)
    assert rel in ("future", "past", "spacelike", "indeterminate")
    assert "angular_resolution" in cert
    # a model of the family dispatches identically
    rel2, _ = chronological_relation(fam.charts["static"],
                                     BoundaryPoint(0.0, E1), pt,
                                     mode="numeric", fan=fan)
    assert rel2 == rel
