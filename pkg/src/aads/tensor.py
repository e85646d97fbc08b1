"""Chart-level metric evaluation and tensor calculus.

Conventions, fixed package-wide
-------------------------------
* Metric signature (-, +, ..., +): one negative eigenvalue.
* Curvature array stored with the first index contravariant,
  ``R[a, b, c, d] = R^a_{bcd}`` with

  .. math::
      R^a_{bcd} = \\partial_c \\Gamma^a_{db} - \\partial_d \\Gamma^a_{cb}
                  + \\Gamma^a_{ce}\\Gamma^e_{db} - \\Gamma^a_{de}\\Gamma^e_{cb},

  antisymmetric in its last two lower indices.  Lowering the first index
  gives the fully covariant tensor with the pair symmetries used in the
  constant-curvature identity ``Riem_abcd = K (g_ac g_bd - g_ad g_bc)``.
  In commutator form this realizes ``2 nabla_[c nabla_d] X_b = -R^a_{bcd} X_a``;
  the equivalent convention with the opposite overall sign and permuted
  slots appears in parts of the literature, so the sign is pinned here by
  the sectional-curvature oracle in the test suite (AdS gives -1/R^2).
* Ricci ``Ric_bd = R^a_{bad}``; scalar ``R = g^{bd} Ric_bd``.
* Weyl stored fully covariant.

Derivatives come from registered analytic callables when a model provides
them, otherwise from central differences with step ``max(1e-5, 1e-5|x_i|)``;
second derivatives are nested first derivatives (outer step 1e-4 when the
inner derivative is itself a finite difference).
"""

from dataclasses import dataclass, field

import numpy as np

from ._num import FD_STEP, FD_OUTER_STEP
from .errors import (ConfigurationError, DegeneratePlaneError, DomainError,
                     StencilError)

__all__ = [
    "ChartPoint", "SpacetimeModel", "CurvatureBundle",
    "metric_at", "inverse_metric_at", "christoffel_at", "curvature_at",
    "sectional_curvature", "einstein_residual", "conformal_ricci_check",
    "lower_first", "raise_first",
]


@dataclass(frozen=True)
class ChartPoint:
    """A point of spacetime tagged by the chart its coordinates refer to."""
    chart_id: str
    coords: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "coords", np.atleast_1d(np.asarray(self.coords, dtype=float)))

    def with_coords(self, coords):
        return ChartPoint(self.chart_id, np.asarray(coords, dtype=float))

    def __repr__(self):
        return "ChartPoint(%s, %s)" % (self.chart_id, np.array2string(self.coords, precision=6))


@dataclass(frozen=True)
class SpacetimeModel:
    """A chart-tagged metric definition.

    ``metric_fn`` maps a coordinate array to the symmetric d x d matrix
    g_ab.  ``dmetric_fn`` (optional) returns ``dg[c, a, b] = partial_c g_ab``
    analytically; ``christoffel_fn`` (optional) returns Gamma^c_{ab}
    directly.  ``domain_fn`` raises DomainError (naming the violated bound)
    for points outside the chart.  ``conformal_factor_fn`` is the field z
    of the conformal completion where one is registered.
    """
    dimension: int
    ads_radius: float
    chart_id: str
    metric_fn: object
    dmetric_fn: object = None
    christoffel_fn: object = None
    conformal_factor_fn: object = None
    domain_fn: object = None
    derivative_mode: str = "analytic"   # "analytic" or "fd"
    family: str = ""
    params: dict = field(default_factory=dict)
    world_function_fn: object = None
    extras: dict = field(default_factory=dict)

    @property
    def d(self):
        return self.dimension

    def check_domain(self, coords):
        if self.domain_fn is not None:
            self.domain_fn(np.asarray(coords, dtype=float))

    def point(self, *coords):
        if len(coords) == 1 and np.ndim(coords[0]) >= 1:
            coords = np.asarray(coords[0], dtype=float)
        else:
            coords = np.asarray(coords, dtype=float)
        return ChartPoint(self.chart_id, coords)

    def has_analytic_christoffel(self):
        return self.christoffel_fn is not None or self.dmetric_fn is not None


@dataclass(frozen=True)
class CurvatureBundle:
    """Riemann (rank-(1,3)), Ricci, scalar and fully covariant Weyl."""
    riemann: np.ndarray
    ricci: np.ndarray
    scalar: float
    weyl: np.ndarray


def _coords(model, p):
    if isinstance(p, ChartPoint):
        if p.chart_id != model.chart_id:
            raise DomainError(
                f"point is in chart '{p.chart_id}', model lives in '{model.chart_id}'")
        x = p.coords
    else:
        x = np.asarray(p, dtype=float)
    if x.shape != (model.dimension,):
        raise DomainError(f"expected {model.dimension} coordinates, got shape {x.shape}")
    model.check_domain(x)
    return x


def metric_at(model, p, validate_signature=False):
    """Metric matrix g_ab at p; optionally verify Lorentzian signature."""
    x = _coords(model, p)
    g = np.asarray(model.metric_fn(x), dtype=float)
    if validate_signature or __debug__ and model.params.get("debug_signature", False):
        ev = np.linalg.eigvalsh(0.5 * (g + g.T))
        if int(np.sum(ev < 0)) != 1:
            raise DomainError(f"metric at {x} is not Lorentzian (eigenvalues {ev})")
    return 0.5 * (g + g.T)


def inverse_metric_at(model, p):
    return np.linalg.inv(metric_at(model, p))


def _dmetric_fd(model, x, h0=FD_STEP):
    """dg[c, a, b] = partial_c g_ab by central differences."""
    d = model.dimension
    dg = np.empty((d, d, d))
    for c in range(d):
        h = max(h0, h0 * abs(x[c]))
        xp = x.copy(); xp[c] += h
        xm = x.copy(); xm[c] -= h
        try:
            model.check_domain(xp)
            model.check_domain(xm)
        except DomainError as exc:
            raise StencilError(
                f"finite-difference stencil leaves the chart domain at {x}: {exc}") from exc
        dg[c] = (np.asarray(model.metric_fn(xp)) - np.asarray(model.metric_fn(xm))) / (2 * h)
    return dg


def christoffel_at(model, p, step=None, force_fd=False):
    """Christoffel symbols Gamma^c_{ab}, symmetric in the lower pair.

    Uses the registered analytic route (christoffel_fn, else dmetric_fn)
    unless ``force_fd`` is set; the pure finite-difference route applies
    central stencils of step ``max(step, step*|x_i|)`` to the metric.
    """
    x = _coords(model, p)
    if not force_fd and model.christoffel_fn is not None:
        return np.asarray(model.christoffel_fn(x), dtype=float)
    if not force_fd and model.dmetric_fn is not None:
        dg = np.asarray(model.dmetric_fn(x), dtype=float)
    else:
        dg = _dmetric_fd(model, x, h0=step if step is not None else FD_STEP)
    ginv = np.linalg.inv(np.asarray(model.metric_fn(x), dtype=float))
    # Gamma^c_ab = 1/2 g^{cd} (d_a g_db + d_b g_da - d_d g_ab)
    sym = np.einsum("adb->dab", dg) + np.einsum("bda->dab", dg) - dg
    return 0.5 * np.einsum("cd,dab->cab", ginv, sym)


def _dchristoffel_fd(model, x, step, force_fd):
    d = model.dimension
    dG = np.empty((d, d, d, d))
    for e in range(d):
        h = max(step, step * abs(x[e]))
        xp = x.copy(); xp[e] += h
        xm = x.copy(); xm[e] -= h
        Gp = christoffel_at(model, ChartPoint(model.chart_id, xp), force_fd=force_fd)
        Gm = christoffel_at(model, ChartPoint(model.chart_id, xm), force_fd=force_fd)
        dG[e] = (Gp - Gm) / (2 * h)
    return dG


def riemann_at(model, p, step=None, force_fd=False):
    """R^a_{bcd}: registered closed form where the model carries one, else
    one finite difference of the Christoffel symbols."""
    x = _coords(model, p)
    if not force_fd and "riemann_fn" in model.extras:
        return np.asarray(model.extras["riemann_fn"](x), dtype=float)
    analytic_inner = model.has_analytic_christoffel() and not force_fd
    # with analytic Christoffels the Richardson pass removes the truncation
    # term, so a larger step keeps the roundoff eps/h small
    h0 = step if step is not None else (3e-4 if analytic_inner else FD_OUTER_STEP)
    G = christoffel_at(model, p, force_fd=force_fd)
    dG = _dchristoffel_fd(model, x, h0, force_fd)
    if analytic_inner:
        # one Richardson level on the analytic Christoffels: O(h^4) truncation
        dG = (4.0 * _dchristoffel_fd(model, x, h0 / 2.0, force_fd) - dG) / 3.0
    R = (np.einsum("cadb->abcd", dG) - np.einsum("dacb->abcd", dG)
         + np.einsum("ace,edb->abcd", G, G) - np.einsum("ade,ecb->abcd", G, G))
    return R


def lower_first(R, g):
    """g_ae R^e_{bcd} (explicit index lowering)."""
    return np.einsum("ae,ebcd->abcd", g, R)


def raise_first(Rlow, ginv):
    return np.einsum("ae,ebcd->abcd", ginv, Rlow)


def weyl_from(Rlow, ricci, scalar, g, d):
    """Fully covariant Weyl tensor from the covariant Riemann tensor."""
    t1 = (np.einsum("ac,db->abcd", g, ricci) - np.einsum("ad,cb->abcd", g, ricci)
          - np.einsum("bc,da->abcd", g, ricci) + np.einsum("bd,ca->abcd", g, ricci)) / (d - 2.0)
    t2 = (np.einsum("ac,db->abcd", g, g) - np.einsum("ad,cb->abcd", g, g)) \
        * scalar / ((d - 1.0) * (d - 2.0))
    return Rlow - t1 + t2


def curvature_at(model, p, step=None, force_fd=False):
    """Riemann, Ricci, scalar and Weyl at p as a CurvatureBundle."""
    d = model.dimension
    g = metric_at(model, p)
    ginv = np.linalg.inv(g)
    R = riemann_at(model, p, step=step, force_fd=force_fd)
    ricci = np.einsum("abad->bd", R)
    ricci = 0.5 * (ricci + ricci.T)
    scalar = float(np.einsum("bd,bd->", ginv, ricci))
    weyl = weyl_from(lower_first(R, g), ricci, scalar, g, d)
    return CurvatureBundle(riemann=R, ricci=ricci, scalar=scalar, weyl=weyl)


def weyl_trace_norm(bundle, ginv):
    """Largest single-contraction norm of the Weyl tensor (0 if trace-free)."""
    C = bundle.weyl
    traces = [np.einsum("ac,abcd->bd", ginv, C),
              np.einsum("ad,abcd->bc", ginv, C),
              np.einsum("ab,abcd->cd", ginv, C),
              np.einsum("cd,abcd->ab", ginv, C)]
    return max(float(np.max(np.abs(t))) for t in traces)


def sectional_curvature(model, p, X, Y, bundle=None):
    """Sectional curvature K(X, Y) of the plane spanned by X and Y.

    K = Riem_abcd X^a Y^b X^c Y^d / (g(X,X) g(Y,Y) - g(X,Y)^2); the
    denominator is the squared Lorentzian area of the parallelogram and
    must be nonzero for the plane to be nondegenerate.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    g = metric_at(model, p)
    den = (X @ g @ X) * (Y @ g @ Y) - (X @ g @ Y) ** 2
    scale = max(1.0, float(np.max(np.abs(X))) ** 2 * float(np.max(np.abs(Y))) ** 2)
    if abs(den) < 1e-10 * scale:
        raise DegeneratePlaneError(
            f"plane spanned by X, Y is degenerate (denominator {den:.3e})")
    if bundle is None:
        bundle = curvature_at(model, p)
    Rlow = lower_first(bundle.riemann, g)
    num = np.einsum("abcd,a,b,c,d->", Rlow, X, Y, X, Y)
    return float(num / den)


def einstein_residual(model, p, lam, step=None, force_fd=False):
    """Max-norm of Ric(g)_ab - (2 Lambda / (d-2)) g_ab at p."""
    d = model.dimension
    g = metric_at(model, p)
    bundle = curvature_at(model, p, step=step, force_fd=force_fd)
    return float(np.max(np.abs(bundle.ricci - (2.0 * lam / (d - 2.0)) * g)))


def metric_compatibility_residual(model, p, step=None, force_fd=False):
    """Max-norm of nabla_a g_bc computed from the returned Christoffels."""
    x = _coords(model, p)
    G = christoffel_at(model, p, step=step, force_fd=force_fd)
    if not force_fd and model.dmetric_fn is not None:
        dg = np.asarray(model.dmetric_fn(x), dtype=float)
    else:
        dg = _dmetric_fd(model, x, h0=step if step is not None else FD_STEP)
    g = metric_at(model, p)
    # nabla_a g_bc = d_a g_bc - Gamma^e_ab g_ec - Gamma^e_ac g_be
    nabla = dg - np.einsum("eab,ec->abc", G, g) - np.einsum("eac,be->abc", G, g)
    return float(np.max(np.abs(nabla)))


def _hessian_of_scalar(model, x, f, h0=FD_OUTER_STEP):
    """Covariant Hessian nabla_a nabla_b f for a scalar field f(coords)."""
    d = model.dimension
    hess = np.empty((d, d))
    grads = {}

    def grad(y):
        key = tuple(np.round(y, 14))
        if key not in grads:
            g = np.empty(d)
            for i in range(d):
                h = max(FD_STEP, FD_STEP * abs(y[i]))
                yp = y.copy(); yp[i] += h
                ym = y.copy(); ym[i] -= h
                g[i] = (f(yp) - f(ym)) / (2 * h)
            grads[key] = g
        return grads[key]

    for a in range(d):
        h = max(h0, h0 * abs(x[a]))
        xp = x.copy(); xp[a] += h
        xm = x.copy(); xm[a] -= h
        hess[a] = (grad(xp) - grad(xm)) / (2 * h)
    hess = 0.5 * (hess + hess.T)
    G = christoffel_at(model, ChartPoint(model.chart_id, x))
    return hess - np.einsum("eab,e->ab", G, grad(x))


def conformal_ricci_check(bulk_model, closure_model, p, near_boundary=False):
    """Residual of the conformal transformation law of the Ricci tensor.

    The closure metric must be ``gbar = z^2 g`` for the registered factor z.
    Checks (pointwise, max-norm over components)

        Ric(g) = Ric(gbar) + (d-2)/z hess(z)
                 + gbar * gbar^{-1}( hess(z)/z - (d-1)/z^2 dz dz )

    evaluated in the closure chart.  With ``near_boundary`` the reported
    value is instead |gbar^{-1}(dz, dz) - 1/R^2|, the normalization the
    normal covector must satisfy on the conformal boundary.
    """
    if closure_model.conformal_factor_fn is None:
        raise ConfigurationError("closure model has no registered conformal factor z")
    x = _coords(closure_model, p)
    d = closure_model.dimension
    zfun = closure_model.conformal_factor_fn
    z = float(zfun(x))
    gbar = metric_at(closure_model, p)
    gbar_inv = np.linalg.inv(gbar)
    dz = np.empty(d)
    for i in range(d):
        h = max(FD_STEP, FD_STEP * abs(x[i]))
        xp = x.copy(); xp[i] += h
        xm = x.copy(); xm[i] -= h
        dz[i] = (zfun(xp) - zfun(xm)) / (2 * h)
    if near_boundary:
        target = 1.0 / closure_model.ads_radius**2
        return abs(float(dz @ gbar_inv @ dz) - target)

    if bulk_model is not None and bulk_model.chart_id == closure_model.chart_id:
        ric_g = curvature_at(bulk_model, p).ricci
    else:
        bulk_same_chart = SpacetimeModel(
            dimension=d, ads_radius=closure_model.ads_radius,
            chart_id=closure_model.chart_id,
            metric_fn=lambda y: np.asarray(closure_model.metric_fn(y)) / float(zfun(y))**2,
            domain_fn=closure_model.domain_fn, derivative_mode="fd",
            family=closure_model.family + "-bulk-synth")
        ric_g = curvature_at(bulk_same_chart, p).ricci
    ric_gbar = curvature_at(closure_model, p).ricci
    hess_z = _hessian_of_scalar(closure_model, x, zfun)
    rhs = (ric_gbar + (d - 2.0) / z * hess_z
           + gbar * (np.einsum("de,de->", gbar_inv, hess_z) / z
                     - (d - 1.0) / z**2 * float(dz @ gbar_inv @ dz)))
    return float(np.max(np.abs(ric_g - rhs)))
