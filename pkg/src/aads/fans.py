"""Null-fan machinery for spherically symmetric AAdS models: achronal
boundaries of boundary points as interpolated arrival surfaces, and the
numeric causal predicates built on them.

Every ray from a boundary point of a static spherically symmetric model
stays in the plane of its angular momentum, so the fan reduces to a
one-parameter family indexed by the impact parameter b = L/E in [0, 1);
the full surface is the revolution of that family.  Arrival surfaces are
stored per depth level z as the earliest-arrival envelope tau(psi) over
the rays (pointwise minima implement the first-caustic truncation of the
achronal boundary automatically).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .errors import PreconditionError, UnsupportedError
from .geodesics import GeodesicState, integrate
from .models import lapse
from .tensor import ChartPoint, metric_at

__all__ = ["photon_sphere_radius", "critical_impact", "turning_radius",
           "BoundaryFan", "numeric_relation"]

Z_LAUNCH = 1e-8


def photon_sphere_radius(d, R, m):
    """Largest root of r f'(r) = 2 f(r); for d = 4 this is r = 3m."""
    if m == 0.0:
        return 0.0
    if d == 4:
        return 3.0 * m
    from scipy.optimize import brentq as _brentq
    f = lapse(d, R, m)

    def g(r):
        fp = 2.0 * r / R**2 + 2.0 * (d - 3) * m / r ** (d - 2)
        return r * fp - 2.0 * f(r)
    lo = 1e-6
    hi = 10.0 * max(1.0, m)
    return _brentq(g, lo, hi, xtol=1e-14)


def critical_impact(d, R, m):
    """b_c = r_ph / sqrt(f(r_ph)): rays with b < b_c plunge."""
    if m == 0.0:
        return 0.0
    r_ph = photon_sphere_radius(d, R, m)
    return r_ph / np.sqrt(lapse(d, R, m)(r_ph))


def turning_radius(d, R, m, b):
    """Largest turning point of f(r)/r^2 = 1/b^2, or None (plunging ray)."""
    if b <= 0:
        return None
    f = lapse(d, R, m)

    def pot(r):
        return f(r) / r**2 - 1.0 / b**2
    r_lo = photon_sphere_radius(d, R, m)
    if m == 0.0:
        return b * R / np.sqrt(max(1e-300, 1.0 - (b / R) ** 2)) if b < R else None
    if pot(r_lo) <= 0.0:
        return None
    hi = 10.0 * max(1.0, b)
    while pot(hi) > 0:
        hi *= 2.0
    return brentq(pot, r_lo, hi, xtol=1e-13)


def launch_state(eq_model, b, z0=Z_LAUNCH):
    """Inward null launch state in the equatorial (t, z, phi) chart with
    impact parameter b, normalized to dt/dlam = 1 at the launch depth."""
    fgmap = eq_model.extras["fgmap"]
    r = fgmap.r_of_z(z0)
    f = fgmap.f(r)
    tdot = 1.0
    phidot = b * f / (r**2) * tdot        # b = r^2 phidot / (f tdot)
    g = metric_at(eq_model, ChartPoint(eq_model.chart_id, np.array([0.0, z0, 0.0])))
    zdot2 = (-g[0, 0] * tdot**2 - g[2, 2] * phidot**2) / g[1, 1]
    if zdot2 <= 0:
        raise PreconditionError(f"impact parameter b={b} admits no inward launch")
    v = np.array([tdot, np.sqrt(zdot2), phidot])
    return GeodesicState(ChartPoint(eq_model.chart_id, np.array([0.0, z0, 0.0])), v)


def trace_ray(eq_model, b, max_affine=40.0, rtol=1e-11):
    """Integrate one fan ray; returns the trajectory and its boundary
    arrival (dtau, dpsi), None arrival when the ray is trapped, and
    (None, None) when the integration stalls (asymptotic photon orbit)."""
    from .errors import SingularityError
    state = launch_state(eq_model, b)
    try:
        traj = integrate(eq_model, state, {"max_affine": max_affine,
                                           "boundary_event": True}, rtol=rtol)
    except SingularityError:
        return None, None
    arrival = None
    for ev in traj.events:
        if ev.kind == "boundary_hit":
            x0 = ev.data["coords"]
            arrival = (float(x0[0]), float(x0[2]))
    return traj, arrival


@dataclass
class BoundaryFan:
    """Earliest-arrival surface F(z, psi) of the null fan from a boundary
    point, on a (z-level, psi) grid, plus the boundary arrival curve."""
    model_key: str
    z_levels: np.ndarray
    psi_grid: np.ndarray
    F: np.ndarray                # (n_z, n_psi), inf where unreached
    arrivals: list               # (b, dtau, dpsi) for returning rays
    trapped: int = 0

    def earliest(self, z, psi):
        """Bilinear interpolation of F; inf outside coverage."""
        psi = abs(float(psi))
        iz = np.searchsorted(self.z_levels, z) - 1
        if iz < 0 or iz >= len(self.z_levels) - 1:
            return np.inf
        ip = np.searchsorted(self.psi_grid, psi) - 1
        ip = min(max(ip, 0), len(self.psi_grid) - 2)
        wz = (z - self.z_levels[iz]) / (self.z_levels[iz + 1] - self.z_levels[iz])
        wp = (psi - self.psi_grid[ip]) / (self.psi_grid[ip + 1] - self.psi_grid[ip])
        vals = self.F[iz:iz + 2, ip:ip + 2]
        if not np.all(np.isfinite(vals)):
            return np.inf
        return float((1 - wz) * ((1 - wp) * vals[0, 0] + wp * vals[0, 1])
                     + wz * ((1 - wp) * vals[1, 0] + wp * vals[1, 1]))


def build_boundary_fan(family, n_rays=120, n_z=100, n_psi=256, z_hi=None,
                       b_min=0.02):
    """Fan from a boundary point of a Schwarzschild-AdS family (m >= 0),
    deposited onto (z-level, psi) arrival grids.

    Returning rays are parametrized by turning radius, one ray tangent just
    below each depth level, so the inbound/outbound branch curves of the
    envelope meet at every level.  For m > 0 plunging rays are kept (they
    generate the achronal boundary in the trapped region, deposited until
    the horizon cap) together with a few near-critical rays.
    """
    eq = family.charts["fg_equatorial"]
    fgmap = family.fgmap
    d = family.d
    m = family.params.get("m", 0.0)
    b_c = critical_impact(d, family.R, m)
    if z_hi is None:
        z_hi = fgmap.z_max * 0.98
    z_levels = np.linspace(5e-3, z_hi, n_z)
    psi_grid = np.linspace(0.0, np.pi, n_psi)
    F = np.full((n_z, n_psi), np.inf)
    f = fgmap.f
    r_ph = photon_sphere_radius(d, family.R, m)
    # one returning ray tangent just below every depth level, so the
    # envelope's branch curves meet at each level's turning point
    bs = []
    for zl in z_levels:
        r_t = fgmap.r_of_z(zl)
        if m > 0 and r_t <= 1.02 * r_ph:
            continue
        b_t = r_t / np.sqrt(f(r_t))
        bs.append(min(b_t * (1.0 - 1e-4), 0.999999))
    if m > 0:
        # plunging rays generate the achronal boundary inside the photon
        # region; a few near-critical rays resolve the long windings
        bs.extend(np.linspace(b_min, b_c * 0.995, max(8, n_rays // 8)))
        for k in range(1, 7):
            eps = 0.2 * 0.45**k
            for sgn in (-1.0, 1.0):
                b = b_c + sgn * eps
                if b_min < b < 0.999:
                    bs.append(b)
    bs.append(2e-3)      # near-radial anchor for the psi ~ 0 end
    arrivals = []
    trapped = 0
    crossings = {}     # (level, branch) -> list of (psi, tau)
    for b in sorted(set(bs)):
        traj, arrival = trace_ray(eq, b)
        if traj is None:
            trapped += 1
            continue
        if arrival is not None:
            arrivals.append((float(b), arrival[0], arrival[1]))
        else:
            trapped += 1
        _collect_crossings(traj, z_levels, crossings)
    for (iz, branch), pts in crossings.items():
        pts = sorted(pts)
        psis = np.array([p_[0] for p_ in pts])
        taus = np.array([p_[1] for p_ in pts])
        vals = np.interp(psi_grid, psis, taus, left=np.inf, right=np.inf)
        F[iz] = np.minimum(F[iz], vals)
    # the envelope is continuous in psi: extend each level's ends linearly
    # over the short stretch the discrete rays did not anchor, and close
    # interior gaps between branch curves by their secant
    for iz in range(len(z_levels)):
        row = F[iz]
        fin = np.nonzero(np.isfinite(row))[0]
        if len(fin) < 3:
            continue
        lo, hi = fin[0], fin[-1]
        if lo > 0 and lo + 1 in fin:
            slope = row[lo + 1] - row[lo]
            row[:lo] = row[lo] - slope * np.arange(lo, 0, -1)
        if hi < len(row) - 1 and hi - 1 in fin:
            slope = row[hi] - row[hi - 1]
            row[hi + 1:] = row[hi] + slope * np.arange(1, len(row) - hi)
        holes = ~np.isfinite(row)
        if np.any(holes):
            idx = np.arange(len(row))
            row[holes] = np.interp(idx[holes], idx[~holes], row[~holes])
    return BoundaryFan(model_key=family.key, z_levels=z_levels,
                       psi_grid=psi_grid, F=F, arrivals=arrivals,
                       trapped=trapped)


def _collect_crossings(traj, z_levels, crossings):
    """Append this ray's (psi, tau) per (z level, crossing branch); the
    branch index is the affine order of the crossing, so branch curves vary
    continuously with the impact parameter and interpolate cleanly."""
    lam0, lam1 = traj.affine_span
    lams = np.linspace(lam0, lam1, 1600)
    xs = np.array([traj.coords(l) for l in lams])
    tau = xs[:, 0]
    z = xs[:, 1]
    psi = np.abs(xs[:, 2])
    for iz, zl in enumerate(z_levels):
        s = z - zl
        cross = np.nonzero(s[:-1] * s[1:] < 0)[0]
        for branch, i in enumerate(cross):
            w = s[i] / (s[i] - s[i + 1])
            tau_c = tau[i] + w * (tau[i + 1] - tau[i])
            psi_c = psi[i] + w * (psi[i + 1] - psi[i])
            psi_c = abs((psi_c + np.pi) % (2 * np.pi) - np.pi)
            crossings.setdefault((iz, branch), []).append((float(psi_c), float(tau_c)))


def numeric_relation(family, a, b_point, fan=None):
    """Fan-certified causal order of b relative to a for boundary-anchored
    queries in a spherically symmetric AAdS model.

    `a` must be a BoundaryPoint; `b_point` a bulk chart point of the FG
    chart.  Returns (relation, certificate) where the certificate carries
    the angular resolution of the fan and the margin of the comparison.
    """
    from .models import BoundaryPoint
    if not isinstance(a, BoundaryPoint):
        raise UnsupportedError("numeric mode expects a boundary source point")
    if fan is None:
        fan = build_boundary_fan(family)
    x = b_point.coords
    e_dir = _direction_of(family, b_point)
    psi = float(np.arccos(np.clip(np.dot(a.e, e_dir), -1, 1)))
    Ffut = fan.earliest(x[1], psi)
    dtau = x[0] - a.tau
    cert = {"angular_resolution": float(fan.psi_grid[1] - fan.psi_grid[0]),
            "margin": float(abs(dtau) - Ffut) if np.isfinite(Ffut) else np.inf,
            "trapped_rays": fan.trapped}
    if not np.isfinite(Ffut):
        return "indeterminate", cert
    if dtau > Ffut:
        return "future", cert
    if -dtau > Ffut:
        return "past", cert
    return "spacelike", cert


def _direction_of(family, point):
    from ._num import sphere_point
    x = point.coords
    if point.chart_id.endswith(":fg") or point.chart_id.endswith(":static"):
        return sphere_point(x[2:])
    raise UnsupportedError(f"no boundary direction for chart '{point.chart_id}'")
