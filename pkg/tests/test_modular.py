"""Modular time function, modular field, surface gravities."""

import numpy as np
import pytest

from aads.errors import DomainError, OffHorizonError
from aads.modular import (ads_wedge_frame, flat_closed_form_time, flat_frame,
                          horizon_sequence, modular_field, surface_gravity,
                          time_function, _WorldEngine)
from aads.regions import flat_diamond_flow

FLAT_FRAME = flat_frame(4)
ADS_FRAME = ads_wedge_frame(4, 0.6)


def test_time_function_flat_values():
    model = FLAT_FRAME.model
    assert time_function(FLAT_FRAME, model.point(0, 0, 0, 0)) == pytest.approx(0.0, abs=1e-14)
    lam = time_function(FLAT_FRAME, model.point(0.5, 0, 0, 0))
    assert lam == pytest.approx(np.log(3.0), abs=1e-12)


def test_time_function_matches_closed_form():
    rng = np.random.default_rng(2)
    model = FLAT_FRAME.model
    done = 0
    while done < 30:
        x = rng.uniform(-0.9, 0.9, size=4)
        try:
            lam = time_function(FLAT_FRAME, model.point(*x))
        except DomainError:
            continue
        assert lam == pytest.approx(flat_closed_form_time(FLAT_FRAME, model.point(*x)),
                                    abs=1e-6)
        done += 1


def test_time_function_out_of_region():
    model = FLAT_FRAME.model
    with pytest.raises(DomainError):
        time_function(FLAT_FRAME, model.point(0.0, 2.0, 0, 0))   # spacelike to both
    with pytest.raises(DomainError):
        time_function(FLAT_FRAME, model.point(1.5, 0.0, 0, 0))   # beyond q


def test_flow_covariance():
    model = FLAT_FRAME.model
    r = model.point(0.1, 0.2, 0.0, -0.1)
    lam0 = time_function(FLAT_FRAME, r)
    for s in (0.3, 1.0, -0.7):
        rs = flat_diamond_flow(r.coords, s)
        assert time_function(FLAT_FRAME, model.point(*rs)) == \
            pytest.approx(lam0 + s, abs=1e-6)


def test_monotonicity_along_causal_curves():
    """lambda strictly increases along future-directed causal probe curves."""
    rng = np.random.default_rng(5)
    model = FLAT_FRAME.model
    for _ in range(10):
        x0 = np.array([rng.uniform(-0.3, 0.0), rng.uniform(-0.2, 0.2),
                       rng.uniform(-0.2, 0.2), 0.0])
        u = np.array([1.0, *rng.uniform(-0.5, 0.5, size=3)])  # timelike
        lams = []
        for s in np.linspace(0.0, 0.4, 9):
            lams.append(time_function(FLAT_FRAME, model.point(*(x0 + s * u))))
        assert np.all(np.diff(lams) > 0)


def test_modular_field_flat_midpoint():
    model = FLAT_FRAME.model
    T, norm, div, resid = modular_field(FLAT_FRAME, model.point(0, 0, 0, 0))
    assert np.allclose(T, [0.5, 0, 0, 0], atol=1e-12)
    assert norm == pytest.approx(-0.25, abs=1e-12)
    assert abs(div) < 1e-9
    assert resid < 1e-9     # flat T is exactly conformal Killing


def test_modular_field_is_flow_generator():
    # T generates the lambda flow: T^a nabla_a lambda = 1
    model = FLAT_FRAME.model
    rng = np.random.default_rng(9)
    for _ in range(5):
        x = np.array([rng.uniform(-0.4, 0.4), rng.uniform(-0.3, 0.3),
                      rng.uniform(-0.3, 0.3), 0.0])
        T, _, _, _ = modular_field(FLAT_FRAME, model.point(*x))
        h = 1e-6
        dlam = (time_function(FLAT_FRAME, model.point(*(x + h * T)))
                - time_function(FLAT_FRAME, model.point(*(x - h * T)))) / (2 * h)
        assert dlam == pytest.approx(1.0, abs=1e-5)


def test_surface_gravity_flat():
    for side, k_target, d_target in (("past", 1.0, 4.0), ("future", -1.0, -4.0)):
        pts = horizon_sequence(FLAT_FRAME, side)
        res = surface_gravity(FLAT_FRAME, pts, side)
        assert res["kappa_limit"] == pytest.approx(k_target, abs=1e-6)
        assert res["div_limit"] == pytest.approx(d_target, abs=1e-6)


def test_surface_gravity_ads_wedge():
    for side, k_target, d_target in (("past", 1.0, 4.0), ("future", -1.0, -4.0)):
        pts = horizon_sequence(ADS_FRAME, side)
        res = surface_gravity(ADS_FRAME, pts, side)
        assert abs(res["kappa_limit"] - k_target) < 1e-2
        assert abs(res["div_limit"] - d_target) < 5e-2


def test_surface_gravity_off_horizon_error():
    model = FLAT_FRAME.model
    bad = [model.point(0.0, 0.2, 0, 0)]
    with pytest.raises(OffHorizonError):
        surface_gravity(FLAT_FRAME, bad, "past")


def test_kappa_csv_export(tmp_path):
    from aads.modular import kappa_csv
    pts = horizon_sequence(FLAT_FRAME, "past")
    res = surface_gravity(FLAT_FRAME, pts, "past")
    out = tmp_path / "kappa.csv"
    kappa_csv(res, out)
    lines = out.read_text().splitlines()
    assert lines[0] == "distance_to_tip,kappa,div_T"
    assert len(lines) == 5


def test_modular_field_tangent_to_boundary():
    """The rho-component of T decays at least linearly in z = cos(rho) near
    the conformal boundary of an AdS wedge."""
    eng = _WorldEngine(ADS_FRAME)
    model = ADS_FRAME.model
    comps = []
    for z in (1e-2, 1e-3):
        rho = np.arccos(z)
        T, _, _, _ = modular_field(ADS_FRAME, model.point(0.0, rho, np.pi / 2, 0.0),
                                   engine=eng)
        comps.append(abs(T[1]))
    assert comps[1] <= 1.5e-1 * comps[0] + 1e-12   # at least linear in z


def test_affine_parameter_vs_flow_on_future_horizon():
    """lambda_+ = -exp(kappa_+ lambda) along a future-horizon generator of
    the standard diamond, with the extrapolated kappa_+."""
    from aads.regions import _standard_flow
    pts = horizon_sequence(FLAT_FRAME, "future")
    kappa = surface_gravity(FLAT_FRAME, pts, "future")["kappa_limit"]
    x0 = np.array([1.0 - 0.3, 0.3, 0.0, 0.0])   # on the future horizon, s0=0.3
    lams = np.linspace(4.0, 8.0, 9)
    s_vals = []
    for lam in lams:
        y = _standard_flow(x0, lam)
        s_vals.append(np.linalg.norm(y[1:]))    # affine distance to the tip q
    slope = np.polyfit(lams, np.log(s_vals), 1)[0]
    assert abs(slope - kappa) < 1e-2
