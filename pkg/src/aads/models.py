"""Model registry: concrete spacetimes, their charts and transition maps.

Families
--------
``minkowski``          flat chart (x^0..x^{d-1}), metric eta.
``ads_global``         covering chart (t, r, angles), metric
                       -R^2(1+r^2/R^2) dt^2 + dr^2/(1+r^2/R^2) + r^2 dOmega^2.
``ads_poincare``       horocyclic chart (x^0..x^{d-2}, z), (R/z)^2 (eta + dz^2).
``ads_closure``        unit-ESU hemisphere closure (t, rho, angles), metric
                       -dt^2 + drho^2 + sin^2 rho dOmega^2, z = cos(rho)/R;
                       sibling charts: ``esu_stereo`` (stereographic, regular
                       through the center and at the boundary) and ``fg``
                       (Gaussian-normal u of the Fefferman-Graham gauge).
``esu_boundary``       the boundary cylinder R x S^(d-2), metric -dtau^2+dOmega^2.
``schwarzschild_ads``  static exterior chart plus an FG-gauge closure chart
                       built by integrating dr/d(ln z) = -sqrt(f).
``fg_metric``          bulk metric reconstructed from a coefficient table.

The boundary is always the covering cylinder: tau runs over all of R and is
never wrapped.  Boundary points are stored as (tau, e) with e a unit vector
in R^(d-1); the fundamental domain only appears through the embedding maps.

Boundary causal order
---------------------
``boundary_chronology`` compares |Delta tau| against the great-circle
distance Arccos(e . e') in [0, pi], the order induced by the cylinder metric
-dtau^2 + dOmega^2.  A convention with an extra factor of 2 and the reversed
inequality circulates in the literature; it is incompatible with the
cylinder metric above, so the metric-derived relation is implemented and
validated against numerically integrated ESU null geodesics in the test
suite.
"""

from dataclasses import dataclass, replace

import numpy as np
from scipy.integrate import solve_ivp

from ._num import normalize, sphere_distance, sphere_point, sphere_angles
from .errors import (ConstructionError, CoverageError, DomainError,
                     UnsupportedError)
from .tensor import ChartPoint, SpacetimeModel

__all__ = [
    "BoundaryPoint", "ModelSpec", "build_model", "transition",
    "transition_velocity", "antipodal", "antipodal_inverse",
    "boundary_chronology", "boundary_to_minkowski", "minkowski_to_boundary",
    "closure_position", "exact_relation", "chart", "POLE_BAND",
]

POLE_BAND = 1e-6

_REGISTRY = {}


def _register(family):
    for name, model in family.charts.items():
        _REGISTRY[model.chart_id] = (family, name)


def _lookup(chart_id):
    try:
        return _REGISTRY[chart_id]
    except KeyError:
        raise DomainError(f"chart '{chart_id}' is not registered") from None


def chart(model_or_point, name):
    """Sibling chart model of the same spacetime."""
    chart_id = model_or_point.chart_id
    family, _ = _lookup(chart_id)
    if name not in family.charts:
        raise DomainError(f"family '{family.key}' has no chart '{name}'")
    return family.charts[name]


# ---------------------------------------------------------------------------
# boundary points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BoundaryPoint:
    """Point of conformal infinity: ESU time tau and e on S^(d-2)."""
    tau: float
    e: np.ndarray

    def __post_init__(self):
        e = np.asarray(self.e, dtype=float)
        n = np.linalg.norm(e)
        if abs(n - 1.0) > 1e-12:
            if n == 0.0:
                raise ConstructionError("boundary direction e must be a unit vector")
            e = e / n
        object.__setattr__(self, "e", e)
        object.__setattr__(self, "tau", float(self.tau))

    def translated(self, dtau):
        return BoundaryPoint(self.tau + dtau, self.e)

    def __repr__(self):
        return "BoundaryPoint(tau=%.6g, e=%s)" % (self.tau, np.array2string(self.e, precision=6))


def antipodal(p):
    """Future focal point of the boundary null generators leaving p."""
    return BoundaryPoint(p.tau + np.pi, -p.e)


def antipodal_inverse(p):
    return BoundaryPoint(p.tau - np.pi, -p.e)


def boundary_chronology(p, q, tol=1e-12):
    """Causal order of q relative to p on the covering cylinder."""
    dtau = q.tau - p.tau
    sigma = sphere_distance(p.e, q.e)
    if abs(abs(dtau) - sigma) <= tol * (1.0 + abs(dtau)):
        return "lightlike"
    if dtau > sigma:
        return "chronological_future"
    if -dtau > sigma:
        return "chronological_past"
    return "spacelike"


# ---------------------------------------------------------------------------
# Minkowski-domain embedding (projective coordinates of the standard domain)
# ---------------------------------------------------------------------------
#
# The standard Minkowski domain is {cos tau + e.nhat > 0} with nhat the last
# basis vector of R^(d-1); its projective chart is
#     x^0 = sin tau / (cos tau + e.nhat),   x = e_perp / (cos tau + e.nhat).

def boundary_to_minkowski(p):
    """Projective (Dirac-Weyl) coordinates of p in the standard domain."""
    om = np.cos(p.tau) + p.e[-1]
    if om <= 1e-14:
        raise CoverageError(
            f"boundary point tau={p.tau:.6g} lies outside the standard Minkowski domain")
    x0 = np.sin(p.tau) / om
    return np.concatenate([[x0], p.e[:-1] / om])


def minkowski_to_boundary(x):
    """Inverse conformal embedding of R^(1,d-2) into the cylinder."""
    x = np.asarray(x, dtype=float)
    s = -x[0] ** 2 + float(np.dot(x[1:], x[1:]))
    om = 2.0 / np.sqrt((1.0 + s) ** 2 + 4.0 * x[0] ** 2)
    tau = float(np.arctan2(2.0 * x[0], 1.0 + s))
    e = np.concatenate([om * x[1:], [om * (1.0 - s) / 2.0]])
    return BoundaryPoint(tau, e)


# ---------------------------------------------------------------------------
# round-sphere helper: diagonal factors of dOmega^2_n in nested polar angles
# ---------------------------------------------------------------------------

def _round_factors(angles):
    """sigma_k with dOmega^2 = sum_k sigma_k (d a_k)^2, sigma_0 = 1."""
    angles = np.atleast_1d(angles)
    n = len(angles)
    sig = np.ones(n)
    acc = 1.0
    for k in range(1, n):
        acc *= np.sin(angles[k - 1]) ** 2
        sig[k] = acc
    return sig


def _round_factor_derivs(angles):
    """dsig[j, k] = partial sigma_k / partial a_j."""
    angles = np.atleast_1d(angles)
    n = len(angles)
    dsig = np.zeros((n, n))
    for k in range(1, n):
        for j in range(k):
            prod = 1.0
            for i in range(k):
                if i == j:
                    prod *= 2.0 * np.sin(angles[i]) * np.cos(angles[i])
                else:
                    prod *= np.sin(angles[i]) ** 2
            dsig[j, k] = prod
    return dsig


def _angles_domain(angles):
    for j, th in enumerate(np.atleast_1d(angles)[:-1]):
        if abs(np.sin(th)) < POLE_BAND:
            raise DomainError(
                f"polar angle theta_{j+1}={th:.6g} is within {POLE_BAND} of a pole; "
                "rotate the frame instead")


# ---------------------------------------------------------------------------
# chart factories
# ---------------------------------------------------------------------------

def _const_curvature_riemann(metric_fn, K):
    def riemann(x):
        g = np.asarray(metric_fn(np.asarray(x, dtype=float)))
        low = K * (np.einsum("ac,bd->abcd", g, g) - np.einsum("ad,bc->abcd", g, g))
        return np.einsum("ae,ebcd->abcd", np.linalg.inv(g), low)
    return riemann


def _product_sphere_riemann(metric_fn):
    # R x (unit sphere): curvature lives in the spatial block with K = +1
    def riemann(x):
        g = np.asarray(metric_fn(np.asarray(x, dtype=float)))
        h = g.copy()
        h[0, :] = 0.0
        h[:, 0] = 0.0
        low = np.einsum("ac,bd->abcd", h, h) - np.einsum("ad,bc->abcd", h, h)
        return np.einsum("ae,ebcd->abcd", np.linalg.inv(g), low)
    return riemann


def _flat_model(d):
    eta = np.diag([-1.0] + [1.0] * (d - 1))
    zero = np.zeros((d, d, d))
    zero4 = np.zeros((d, d, d, d))
    return SpacetimeModel(
        dimension=d, ads_radius=np.inf, chart_id=f"minkowski[d={d}]:flat",
        metric_fn=lambda x: eta, dmetric_fn=lambda x: zero,
        family="minkowski", params={"d": d},
        extras={"riemann_fn": lambda x: zero4})


def _ads_global_model(key, d, R):
    na = d - 2

    def dom(x):
        if x[1] <= 0.0:
            raise DomainError(f"global chart requires r > 0 (got r={x[1]:.6g})")
        if na >= 2:
            _angles_domain(x[2:])

    def metric(x):
        r = x[1]
        f = 1.0 + (r / R) ** 2
        g = np.zeros((d, d))
        g[0, 0] = -R * R * f
        g[1, 1] = 1.0 / f
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = r * r * sig[k]
        return g

    def dmetric(x):
        r = x[1]
        f = 1.0 + (r / R) ** 2
        dg = np.zeros((d, d, d))
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        dg[1, 0, 0] = -2.0 * r
        dg[1, 1, 1] = -(2.0 * r / R**2) / f**2
        for k in range(na):
            dg[1, 2 + k, 2 + k] = 2.0 * r * sig[k]
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for j in range(na):
                for k in range(na):
                    dg[2 + j, 2 + k, 2 + k] = r * r * dsig[j, k]
        return dg

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:global",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        family="ads", params={"d": d, "R": R},
        extras={"riemann_fn": _const_curvature_riemann(metric, -1.0 / R**2)})


def _ads_poincare_model(key, d, R):
    eta_ext = np.diag([-1.0] + [1.0] * (d - 1))  # coords (x^0..x^{d-2}, z)

    def dom(x):
        if x[-1] <= 0.0:
            raise DomainError(f"Poincare chart requires z > 0 (got z={x[-1]:.6g})")

    def metric(x):
        return (R / x[-1]) ** 2 * eta_ext

    def dmetric(x):
        dg = np.zeros((d, d, d))
        dg[-1] = -2.0 * R**2 / x[-1] ** 3 * eta_ext
        return dg

    def christoffel(x):
        # conformally flat: Gamma^c_ab = de^c_a w_b + de^c_b w_a - eta_ab w^c,
        # w = d(log R/z) = (0,...,0,-1/z)
        z = x[-1]
        G = np.zeros((d, d, d))
        w = -1.0 / z
        for a in range(d):
            G[a, a, d - 1] += w
            G[a, d - 1, a] += w
        wup = np.array([0.0] * (d - 1) + [w])  # eta^{cd} w_d
        G -= np.einsum("c,ab->cab", wup, eta_ext)
        return G

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:poincare",
        metric_fn=metric, dmetric_fn=dmetric, christoffel_fn=christoffel,
        domain_fn=dom, conformal_factor_fn=lambda x: x[-1],
        family="ads", params={"d": d, "R": R},
        extras={"riemann_fn": _const_curvature_riemann(metric, -1.0 / R**2)})


def _esu_hemisphere_model(key, d, R):
    """Unit-ESU closure chart (t, rho, angles), z = cos(rho)/R."""
    na = d - 2

    def dom(x):
        if not (0.0 < x[1] < np.pi / 2 + 1e-12):
            raise DomainError(f"hemisphere chart requires 0 < rho <= pi/2 (got {x[1]:.6g})")
        if na >= 2:
            _angles_domain(x[2:])

    def metric(x):
        rho = x[1]
        g = np.zeros((d, d))
        g[0, 0] = -1.0
        g[1, 1] = 1.0
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = np.sin(rho) ** 2 * sig[k]
        return g

    def dmetric(x):
        rho = x[1]
        dg = np.zeros((d, d, d))
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            dg[1, 2 + k, 2 + k] = 2.0 * np.sin(rho) * np.cos(rho) * sig[k]
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for j in range(na):
                for k in range(na):
                    dg[2 + j, 2 + k, 2 + k] = np.sin(rho) ** 2 * dsig[j, k]
        return dg

    def dz(x):
        out = np.zeros(d)
        out[1] = -np.sin(x[1]) / R
        return out

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:esu",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        conformal_factor_fn=lambda x: np.cos(x[1]) / R,
        family="ads", params={"d": d, "R": R},
        extras={"riemann_fn": _product_sphere_riemann(metric), "dz_fn": dz})


def _esu_stereo_model(key, d, R):
    """Stereographic closure chart (t, xi): regular at the center and the
    boundary |xi| = 1; spatial metric 4 delta_ij / (1+|xi|^2)^2."""

    def dom(x):
        r2 = float(np.dot(x[1:], x[1:]))
        if r2 > 1.0 + 1e-12:
            raise DomainError(f"stereographic chart requires |xi| <= 1 (got |xi|^2={r2:.6g})")

    def metric(x):
        c = 4.0 / (1.0 + float(np.dot(x[1:], x[1:]))) ** 2
        g = np.eye(d) * c
        g[0, 0] = -1.0
        return g

    def dmetric(x):
        xi = x[1:]
        u = 1.0 + float(np.dot(xi, xi))
        dg = np.zeros((d, d, d))
        for k in range(1, d):
            dc = -16.0 * x[k] / u**3
            for i in range(1, d):
                dg[k, i, i] = dc
        return dg

    def zfun(x):
        r2 = float(np.dot(x[1:], x[1:]))
        return (1.0 - r2) / (1.0 + r2) / R

    def dz(x):
        r2 = float(np.dot(x[1:], x[1:]))
        out = np.zeros(d)
        out[1:] = -4.0 * x[1:] / ((1.0 + r2) ** 2 * R)
        return out

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:esu_stereo",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        conformal_factor_fn=zfun, family="ads", params={"d": d, "R": R},
        extras={"riemann_fn": _product_sphere_riemann(metric), "dz_fn": dz})


def _fg_polar_model(key, d, R):
    """Fefferman-Graham gauge closure (t, u, angles) of exact AdS."""
    na = d - 2

    def dom(x):
        if not (0.0 < x[1] <= 2.0):
            raise DomainError(f"FG chart requires 0 < u <= 2 (got {x[1]:.6g})")
        if na >= 2:
            _angles_domain(x[2:])

    def metric(x):
        u = x[1]
        A = 1.0 + u * u / 4.0
        B = 1.0 - u * u / 4.0
        g = np.zeros((d, d))
        g[0, 0] = -A * A
        g[1, 1] = 1.0
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = B * B * sig[k]
        return g

    def dmetric(x):
        u = x[1]
        A = 1.0 + u * u / 4.0
        B = 1.0 - u * u / 4.0
        dg = np.zeros((d, d, d))
        dg[1, 0, 0] = -2.0 * A * (u / 2.0)
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            dg[1, 2 + k, 2 + k] = 2.0 * B * (-u / 2.0) * sig[k]
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for j in range(na):
                for k in range(na):
                    dg[2 + j, 2 + k, 2 + k] = B * B * dsig[j, k]
        return dg

    def dz(x):
        out = np.zeros(d)
        out[1] = 1.0 / R
        return out

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:fg",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        conformal_factor_fn=lambda x: x[1] / R,
        family="ads", params={"d": d, "R": R}, extras={"dz_fn": dz})


def _esu_boundary_model(d):
    """The boundary cylinder ESU_(d-1) as a (d-1)-dimensional model."""
    dim = d - 1
    na = d - 2

    def dom(x):
        if na >= 2:
            _angles_domain(x[1:])

    def metric(x):
        g = np.zeros((dim, dim))
        g[0, 0] = -1.0
        sig = _round_factors(x[1:])
        for k in range(na):
            g[1 + k, 1 + k] = sig[k]
        return g

    def dmetric(x):
        dg = np.zeros((dim, dim, dim))
        if na >= 2:
            dsig = _round_factor_derivs(x[1:])
            for j in range(na):
                for k in range(na):
                    dg[1 + j, 1 + k, 1 + k] = dsig[j, k]
        return dg

    return SpacetimeModel(
        dimension=dim, ads_radius=1.0, chart_id=f"esu_boundary[d={d}]:boundary",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        family="esu_boundary", params={"d": d})


# ---------------------------------------------------------------------------
# Schwarzschild-AdS
# ---------------------------------------------------------------------------

def lapse(d, R, m):
    def f(r):
        return 1.0 + (r / R) ** 2 - 2.0 * m / r ** (d - 3)
    return f


def lapse_deriv(d, R, m):
    def fp(r):
        return 2.0 * r / R**2 + 2.0 * (d - 3) * m / r ** (d - 2)
    return fp


def horizon_radius(d, R, m):
    if m == 0.0:
        return 0.0
    from scipy.optimize import brentq
    f = lapse(d, R, m)
    hi = max(1.0, (2.0 * m) ** (1.0 / (d - 1)) * 2.0)
    while f(hi) < 0:
        hi *= 2.0
    return brentq(f, 1e-12, hi, xtol=1e-14, rtol=1e-14)


class _FGMap:
    """FG radial map r(z) for a static lapse f, solved from
    dr/dsigma = -sqrt(f(r)), sigma = ln z, anchored in the deep AdS region
    where z = 2(sqrt(1+r^2) - r) holds to machine precision."""

    def __init__(self, d, R, m):
        if abs(R - 1.0) > 1e-14:
            raise ConstructionError("the FG closure chart is built for R = 1 only")
        self.f = lapse(d, R, m)
        self.fp = lapse_deriv(d, R, m)
        self.r_h = horizon_radius(d, R, m)
        r_far = 1e8
        z_far = 2.0 / (np.sqrt(1.0 + r_far**2) + r_far)
        s0 = np.log(z_far)
        r_stop = self.r_h + 1e-3 if m > 0 else 1e-8

        def hit_inner(s, r):
            return r[0] - r_stop
        hit_inner.terminal = True
        sol = solve_ivp(lambda s, r: [-np.sqrt(max(self.f(r[0]), 0.0))],
                        (s0, s0 + 60.0), [r_far], method="DOP853",
                        rtol=1e-12, atol=1e-12, dense_output=True,
                        events=[hit_inner])
        self.s0 = s0
        self.s_max = float(sol.t[-1])
        self.sol = sol
        self.z_min_ode = z_far
        self.z_max = float(np.exp(self.s_max))

    def r_of_z(self, z):
        if z <= 0.0:
            raise DomainError(f"FG chart requires z > 0 (got {z:.6g})")
        if z >= self.z_max:
            raise DomainError(
                f"FG chart covers z < {self.z_max:.6g} (exterior); got z={z:.6g}")
        if z < self.z_min_ode:
            # asymptotic region: the mass correction is below machine epsilon
            return (4.0 - z * z) / (4.0 * z)
        return float(self.sol.sol(np.log(z))[0])

    def z_of_r(self, r):
        from scipy.optimize import brentq
        if r >= 1e8:
            return 2.0 / (np.sqrt(1.0 + r**2) + r)
        lo, hi = np.log(self.z_min_ode), self.s_max
        s = brentq(lambda s_: self.sol.sol(s_)[0] - r, lo, hi, xtol=1e-15, rtol=8.9e-16)
        return float(np.exp(s))


def _schwarzschild_static_model(key, d, R, m, r_h):
    na = d - 2
    f = lapse(d, R, m)
    fp = lapse_deriv(d, R, m)
    r_min = r_h + 1e-3

    def dom(x):
        if x[1] <= r_min:
            raise DomainError(
                f"exterior chart requires r > horizon + 1e-3 = {r_min:.6g} (got {x[1]:.6g})")
        if na >= 2:
            _angles_domain(x[2:])

    def metric(x):
        r = x[1]
        g = np.zeros((d, d))
        g[0, 0] = -f(r)
        g[1, 1] = 1.0 / f(r)
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = r * r * sig[k]
        return g

    def dmetric(x):
        r = x[1]
        dg = np.zeros((d, d, d))
        dg[1, 0, 0] = -fp(r)
        dg[1, 1, 1] = -fp(r) / f(r) ** 2
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            dg[1, 2 + k, 2 + k] = 2.0 * r * sig[k]
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for j in range(na):
                for k in range(na):
                    dg[2 + j, 2 + k, 2 + k] = r * r * dsig[j, k]
        return dg

    return SpacetimeModel(
        dimension=d, ads_radius=R, chart_id=f"{key}:static",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        family="schwarzschild_ads", params={"d": d, "R": R, "m": m},
        extras={"lapse": f, "lapse_deriv": fp, "horizon_radius": r_h,
                "domain_margin_fn": lambda x: x[1] - r_min})


def _schwarzschild_fg_model(key, d, R, m, fgmap, equatorial=False):
    """FG-gauge closure chart (t, z, angles); gbar = dz^2 + h(z).

    With ``equatorial`` the chart is the 3-dimensional (t, z, phi) reduction
    used to integrate single rays of a spherically symmetric model in the
    plane of their angular momentum.
    """
    f, fp = fgmap.f, fgmap.fp
    dim = 3 if equatorial else d
    na = dim - 2
    z_max = fgmap.z_max

    def dom(x):
        if not (0.0 < x[1] < z_max):
            raise DomainError(f"FG chart requires 0 < z < {z_max:.6g} (got {x[1]:.6g})")
        if na >= 2:
            _angles_domain(x[2:])

    # metric components are even functions of z to O(z^(d-1)); the |z|
    # continuation below is the doubled-manifold extension and keeps the
    # integrator's event bracketing smooth across z = 0.
    z_cap = fgmap.z_max * (1.0 - 1e-10)

    def metric(x):
        z = min(max(abs(x[1]), 1e-13), z_cap)
        r = fgmap.r_of_z(z)
        g = np.zeros((dim, dim))
        g[0, 0] = -z * z * f(r)
        g[1, 1] = 1.0
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = (z * r) ** 2 * sig[k]
        return g

    def dmetric(x):
        sgn = 1.0 if x[1] >= 0 else -1.0
        z = min(max(abs(x[1]), 1e-13), z_cap)
        r = fgmap.r_of_z(z)
        fa = f(r)
        sq = np.sqrt(max(fa, 0.0))
        dg = np.zeros((dim, dim, dim))
        # dr/dz = -sqrt(f)/z
        dg[1, 0, 0] = -(2.0 * z * fa - z * fp(r) * sq) * sgn
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            dg[1, 2 + k, 2 + k] = (2.0 * z * r * r - 2.0 * z * r * sq) * sig[k] * sgn
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for j in range(na):
                for k in range(na):
                    dg[2 + j, 2 + k, 2 + k] = (z * r) ** 2 * dsig[j, k]
        return dg

    suffix = "fg_equatorial" if equatorial else "fg"
    return SpacetimeModel(
        dimension=dim, ads_radius=R, chart_id=f"{key}:{suffix}",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        conformal_factor_fn=lambda x: x[1] / R,
        family="schwarzschild_ads", params={"d": d, "R": R, "m": m},
        extras={"fgmap": fgmap, "bulk_dimension": d})


# ---------------------------------------------------------------------------
# exact closure positions and the exact AdS causal order
# ---------------------------------------------------------------------------

def closure_position(p):
    """(t, y) with y the unit vector on the closed hemisphere S^(d-1)_+.

    Defined for points of AdS charts, of the closure charts, and for
    BoundaryPoint (which lands on the equator y = (e, 0)).  This is the
    conformal embedding of the covering into R x S^(d-1); the exact AdS
    causal order is Delta t vs the great-circle distance of the y's.
    """
    if isinstance(p, BoundaryPoint):
        return p.tau, np.concatenate([p.e, [0.0]])
    family, name = _lookup(p.chart_id)
    d = family.d
    x = p.coords
    if name == "global":
        rho = np.arctan(x[1] / family.R)
        e = sphere_point(x[2:]) if d >= 3 else np.array([1.0])
        return x[0], np.concatenate([np.sin(rho) * e, [np.cos(rho)]])
    if name == "esu":
        rho = x[1]
        e = sphere_point(x[2:]) if d >= 3 else np.array([1.0])
        return x[0], np.concatenate([np.sin(rho) * e, [np.cos(rho)]])
    if name == "esu_stereo":
        xi = x[1:]
        r2 = float(np.dot(xi, xi))
        y = np.concatenate([2.0 * xi, [1.0 - r2]]) / (1.0 + r2)
        return x[0], y
    if name == "fg":
        u = x[1]
        srho = (4.0 - u * u) / (4.0 + u * u)
        crho = np.sqrt(max(0.0, 1.0 - srho * srho))
        e = sphere_point(x[2:]) if d >= 3 else np.array([1.0])
        return x[0], np.concatenate([srho * e, [crho]])
    if name == "poincare":
        gp = transition(p, "global")
        return closure_position(gp)
    if name == "boundary":
        e = sphere_point(x[1:])
        return x[0], np.concatenate([e, [0.0]])
    raise UnsupportedError(f"no exact closure embedding for chart '{name}'")


def exact_relation(a, b, tol=1e-12):
    """Exact AdS/ESU causal order of b relative to a via the embedding."""
    ta, ya = closure_position(a)
    tb, yb = closure_position(b)
    dt = tb - ta
    sig = float(np.arccos(np.clip(np.dot(ya, yb), -1.0, 1.0)))
    if abs(abs(dt) - sig) <= tol * (1.0 + abs(dt)):
        return "lightlike"
    if dt > sig:
        return "future"
    if -dt > sig:
        return "past"
    return "spacelike"


def _esu_world_function(family):
    """Exact Synge world function on the hemisphere closure chart."""
    def wf(x1, x2):
        p1 = ChartPoint(family.charts["esu"].chart_id, x1)
        p2 = ChartPoint(family.charts["esu"].chart_id, x2)
        t1, y1 = closure_position(p1)
        t2, y2 = closure_position(p2)
        c = float(np.clip(np.dot(y1, y2), -1.0, 1.0))
        sig = float(np.arccos(c))
        gamma = 0.5 * ((t2 - t1) ** 2 - sig**2)

        def dy_dx(x):
            # Jacobian of y(rho, angles); rows: coords (t, rho, angles)
            d = family.d
            rho = x[1]
            ang = x[2:]
            e = sphere_point(ang) if d >= 3 else np.array([1.0])
            J = np.zeros((d, d))  # J[coord, y-component]
            J[1, :-1] = np.cos(rho) * e
            J[1, -1] = -np.sin(rho)
            if d >= 3:
                for j in range(d - 2):
                    h = 1e-7
                    ap = ang.copy(); ap[j] += h
                    am = ang.copy(); am[j] -= h
                    J[2 + j, :-1] = np.sin(rho) * (sphere_point(ap) - sphere_point(am)) / (2 * h)
            return J

        # d sigma = -(y_other . dy)/sin(sigma)
        s = np.sin(sig)
        if s < 1e-13:
            dsig1 = np.zeros(family.d)
            dsig2 = np.zeros(family.d)
        else:
            dsig1 = -(dy_dx(x1) @ y2) / s
            dsig2 = -(dy_dx(x2) @ y1) / s
        g1 = np.zeros(family.d)
        g2 = np.zeros(family.d)
        g1[0] = -(t2 - t1)
        g2[0] = (t2 - t1)
        g1 -= sig * dsig1
        g2 -= sig * dsig2
        return gamma, g1, g2
    return wf


# ---------------------------------------------------------------------------
# families and transitions
# ---------------------------------------------------------------------------

class _Family:
    def __init__(self, key, kind, d, R, params=None):
        self.key = key
        self.kind = kind
        self.d = d
        self.R = R
        self.params = params or {}
        self.charts = {}

    def __repr__(self):
        return f"_Family({self.key})"


def _ads_family(d, R):
    key = f"ads[d={d},R={R:g}]"
    if key in _FAMILIES:
        return _FAMILIES[key]
    fam = _Family(key, "ads", d, R)
    fam.charts["global"] = _ads_global_model(key, d, R)
    fam.charts["poincare"] = _ads_poincare_model(key, d, R)
    fam.charts["esu"] = _esu_hemisphere_model(key, d, R)
    fam.charts["esu_stereo"] = _esu_stereo_model(key, d, R)
    fam.charts["fg"] = _fg_polar_model(key, d, R)
    fam.charts["esu"] = replace(fam.charts["esu"],
                                world_function_fn=_esu_world_function(fam))
    _FAMILIES[key] = fam
    _register(fam)
    return fam


def _minkowski_family(d):
    key = f"minkowski[d={d}]"
    if key in _FAMILIES:
        return _FAMILIES[key]
    fam = _Family(key, "minkowski", d, np.inf)

    def wf_flat(x1, x2):
        eta = np.diag([-1.0] + [1.0] * (d - 1))
        dx = np.asarray(x2) - np.asarray(x1)
        gamma = -0.5 * float(dx @ eta @ dx)
        return gamma, eta @ dx, -(eta @ dx)

    fam.charts["flat"] = replace(_flat_model(d), world_function_fn=wf_flat)
    _FAMILIES[key] = fam
    _register(fam)
    return fam


def _esu_boundary_family(d):
    key = f"esu_boundary[d={d}]"
    if key in _FAMILIES:
        return _FAMILIES[key]
    fam = _Family(key, "esu_boundary", d, 1.0)
    fam.charts["boundary"] = _esu_boundary_model(d)
    _FAMILIES[key] = fam
    _register(fam)
    return fam


def _schwarzschild_family(d, R, m):
    key = f"schwarzschild_ads[d={d},R={R:g},m={m:g}]"
    if key in _FAMILIES:
        return _FAMILIES[key]
    fam = _Family(key, "schwarzschild_ads", d, R, {"m": m})
    r_h = horizon_radius(d, R, m)
    fam.charts["static"] = _schwarzschild_static_model(key, d, R, m, r_h)
    fgmap = _FGMap(d, R, m)
    fam.charts["fg"] = _schwarzschild_fg_model(key, d, R, m, fgmap)
    fam.charts["fg_equatorial"] = _schwarzschild_fg_model(key, d, R, m, fgmap,
                                                          equatorial=True)
    fam.fgmap = fgmap
    _FAMILIES[key] = fam
    _register(fam)
    return fam


_FAMILIES = {}


# ---------------------------------------------------------------------------
# transitions
# ---------------------------------------------------------------------------

def _embedding_from_global(x, d, R):
    t, r = x[0], x[1]
    e = sphere_point(x[2:]) if d >= 3 else np.array([1.0])
    w = np.sqrt(R * R + r * r)
    X = np.empty(d + 1)
    X[0] = w * np.sin(t)
    X[1:d] = r * e
    X[d] = w * np.cos(t)
    return X


def _global_from_embedding(X, d, R, t_ref=None):
    t = float(np.arctan2(X[0], X[d]))
    if t_ref is not None:
        t += 2.0 * np.pi * np.round((t_ref - t) / (2.0 * np.pi))
    r = float(np.linalg.norm(X[1:d]))
    if r < 1e-300:
        raise DomainError("embedding point maps to r = 0, outside the global chart domain")
    ang = sphere_angles(X[1:d] / r)
    return np.concatenate([[t, r], ang])


def _ads_transition(fam, x, src, dst):
    d, R = fam.d, fam.R
    if src == dst:
        return x
    # hub: global
    if src == "poincare":
        # x_mu x^mu below is taken in the (+,-,...,-) sense the embedding
        # formulas use; with s = -x0^2 + |x|^2 this is -s, which is what the
        # quadric constraint (X^0)^2 - |X|^2 + (X^d)^2 = R^2 requires.
        z = x[-1]
        xm = x[:-1]
        s = -xm[0] ** 2 + float(np.dot(xm[1:], xm[1:]))
        X = np.empty(d + 1)
        X[0:d - 1] = (R / z) * xm
        X[d - 1] = R * ((1.0 - z * z) / (2.0 * z) - s / (2.0 * z))
        X[d] = R * ((1.0 + z * z) / (2.0 * z) + s / (2.0 * z))
        xg = _global_from_embedding(X, d, R)
        return _ads_transition(fam, xg, "global", dst)
    if src == "esu":
        rho = x[1]
        xg = np.concatenate([[x[0], R * np.tan(rho)], x[2:]])
        return _ads_transition(fam, xg, "global", dst)
    if src == "fg":
        u = x[1]
        r = R * (4.0 - u * u) / (4.0 * u)
        if r <= 0:
            raise DomainError("FG coordinate u = 2 maps to r = 0")
        xg = np.concatenate([[x[0], r], x[2:]])
        return _ads_transition(fam, xg, "global", dst)
    if src == "esu_stereo":
        xi = x[1:]
        r2 = float(np.dot(xi, xi))
        y = np.concatenate([2.0 * xi, [1.0 - r2]]) / (1.0 + r2)
        rho = float(np.arccos(np.clip(y[-1], -1.0, 1.0)))
        if rho < 1e-13:
            raise DomainError("stereographic center maps to r = 0")
        e = normalize(y[:-1])
        xg = np.concatenate([[x[0], R * np.tan(rho)], sphere_angles(e)])
        return _ads_transition(fam, xg, "global", dst)
    if src != "global":
        raise CoverageError(f"unknown source chart '{src}'")

    # from global to dst
    if dst == "esu":
        rho = np.arctan(x[1] / R)
        return np.concatenate([[x[0], rho], x[2:]])
    if dst == "fg":
        r = x[1]
        u = 2.0 / (np.sqrt(1.0 + (r / R) ** 2) + r / R)
        return np.concatenate([[x[0], u], x[2:]])
    if dst == "esu_stereo":
        rho = np.arctan(x[1] / R)
        e = sphere_point(x[2:])
        y = np.concatenate([np.sin(rho) * e, [np.cos(rho)]])
        xi = y[:-1] / (1.0 + y[-1])
        return np.concatenate([[x[0]], xi])
    if dst == "poincare":
        X = _embedding_from_global(x, d, R)
        den = X[d - 1] + X[d]
        if den <= 0.0:
            raise CoverageError(
                "event lies outside the Poincare domain (X^{d-1} + X^d <= 0)")
        z = R / den
        xm = X[0:d - 1] / den
        return np.concatenate([xm, [z]])
    raise CoverageError(f"unknown target chart '{dst}'")


def transition(p, to_chart):
    """Coordinates of the same event in another chart of the same family."""
    family, src = _lookup(p.chart_id)
    dst = to_chart if ":" not in str(to_chart) else str(to_chart).split(":", 1)[1]
    if dst not in family.charts:
        raise CoverageError(f"family '{family.key}' has no chart '{dst}'")
    target = family.charts[dst]
    if family.kind == "ads":
        xc = _ads_transition(family, p.coords, src, dst)
    elif family.kind == "schwarzschild_ads":
        xc = _schw_transition(family, p.coords, src, dst)
    elif src == dst:
        xc = p.coords
    else:
        raise CoverageError(f"family '{family.key}' has no transition {src} -> {dst}")
    target.check_domain(xc)
    return ChartPoint(target.chart_id, xc)


def _schw_transition(fam, x, src, dst):
    if src == dst:
        return x
    if {"fg_equatorial"} & {src, dst}:
        raise CoverageError("the equatorial reduction chart has no registered transition")
    fgmap = fam.fgmap
    if src == "static" and dst == "fg":
        return np.concatenate([[x[0], fgmap.z_of_r(x[1])], x[2:]])
    if src == "fg" and dst == "static":
        return np.concatenate([[x[0], fgmap.r_of_z(x[1])], x[2:]])
    raise CoverageError(f"no transition {src} -> {dst}")


def transition_velocity(p, v, to_chart, h=1e-6):
    """Pushforward of a tangent vector through a chart transition (FD Jacobian)."""
    family, _ = _lookup(p.chart_id)
    v = np.asarray(v, dtype=float)
    d = len(p.coords)
    J = np.empty((d, d))
    for i in range(d):
        dx = np.zeros(d)
        dx[i] = h * max(1.0, abs(p.coords[i]))
        xp = transition(p.with_coords(p.coords + dx), to_chart).coords
        xm = transition(p.with_coords(p.coords - dx), to_chart).coords
        J[:, i] = (xp - xm) / (2.0 * dx[i])
    return J @ v


# ---------------------------------------------------------------------------
# model specs
# ---------------------------------------------------------------------------

_FAMILY_NAMES = ("ads_global", "ads_poincare", "ads_closure", "esu_boundary",
                 "schwarzschild_ads", "fg_metric", "minkowski")


@dataclass(frozen=True)
class ModelSpec:
    """Serializable description of a concrete model."""
    family: str
    d: int
    R: float = 1.0
    m: float = 0.0
    table: object = None   # FGCoefficientTable for family fg_metric

    def __post_init__(self):
        if self.family not in _FAMILY_NAMES:
            raise ConstructionError(f"unknown family '{self.family}'")
        if self.d < 3:
            raise ConstructionError(f"dimension d must be >= 3 (got {self.d})")
        if self.family != "minkowski" and not (self.R > 0):
            raise ConstructionError(f"AdS radius must be positive (got {self.R})")
        if self.m < 0:
            raise ConstructionError(f"mass must be nonnegative (got {self.m})")
        if self.family == "fg_metric" and self.table is None:
            raise ConstructionError("fg_metric requires a coefficient table")

    def to_json(self):
        out = {"family": self.family, "d": int(self.d), "R": float(self.R)}
        if self.family == "schwarzschild_ads":
            out["m"] = float(self.m)
        if self.table is not None:
            out["table"] = self.table.to_json()
        return out

    @staticmethod
    def from_json(obj):
        table = None
        if obj.get("table") is not None:
            from .fg import FGCoefficientTable
            table = FGCoefficientTable.from_json(obj["table"])
        return ModelSpec(family=obj["family"], d=int(obj["d"]),
                         R=float(obj.get("R", 1.0)), m=float(obj.get("m", 0.0)),
                         table=table)


def build_model(spec):
    """Build the primary-chart model of a spec, registering all sibling charts."""
    if spec.family == "minkowski":
        return _minkowski_family(spec.d).charts["flat"]
    if spec.family == "esu_boundary":
        return _esu_boundary_family(spec.d).charts["boundary"]
    if spec.family == "ads_global":
        return _ads_family(spec.d, spec.R).charts["global"]
    if spec.family == "ads_poincare":
        return _ads_family(spec.d, spec.R).charts["poincare"]
    if spec.family == "ads_closure":
        return _ads_family(spec.d, spec.R).charts["esu"]
    if spec.family == "schwarzschild_ads":
        return _schwarzschild_family(spec.d, spec.R, spec.m).charts["static"]
    if spec.family == "fg_metric":
        from .fg import reconstructed_model
        return reconstructed_model(spec.table, spec.R)
    raise ConstructionError(f"unknown family '{spec.family}'")


# convenience used across the package and the test-suite

def ads(d=4, R=1.0):
    return _ads_family(d, R)


def schwarzschild(d=4, R=1.0, m=0.1):
    return _schwarzschild_family(d, R, m)


def flat(d=4):
    return _minkowski_family(d).charts["flat"]


def boundary_from_closure(p):
    """BoundaryPoint of a closure-chart point on (or extrapolated to) z = 0."""
    t, y = closure_position(p)
    e = y[:-1]
    n = np.linalg.norm(e)
    if n < 1e-12:
        raise DomainError("point sits at the hemisphere pole; no boundary direction")
    return BoundaryPoint(t, e / n)


def boundary_to_chart(bp, model):
    """Chart coordinates of a boundary point in a boundary-reaching chart."""
    family, name = _lookup(model.chart_id)
    if family.kind == "esu_boundary" or name == "boundary":
        return ChartPoint(model.chart_id, np.concatenate([[bp.tau], sphere_angles(bp.e)]))
    raise UnsupportedError(f"chart '{name}' does not parametrize the boundary")
