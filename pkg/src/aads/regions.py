"""Wedge/diamond region algebra on the conformal boundary and in the bulk.

A wedge W_{p,q} and its boundary diamond D_{p,q} are named by a pair of
boundary points with p preceding q.  The Rehren bijection is the
label-preserving map between them.  Causal predicates for exact AdS (and
for the boundary cylinder and Minkowski space) are computed through the
ESU embedding, with no geodesic fans; the fan-based numeric mode for
generic AAdS models lives in :mod:`aads.fans` and must be requested
explicitly.

Valid label pairs are those contained in a single Minkowski domain or in
its closure (probed with midpoint anchors); pairs whose diamond would
contain a full boundary Cauchy surface are rejected as unsupported, since
their Cauchy surfaces are compact and non-contractible.  Wedge specs additionally accept the complement form
W_{p, q-bar} (second label the antipodal of a point forming a valid pair
with the first), which is the family closed under causal complements.
"""

from dataclasses import dataclass

import numpy as np

from ._num import fibonacci_directions, normalize, philox
from .errors import (DomainError, PreconditionError, UnsupportedError)
from .geodesics import connect
from .models import (BoundaryPoint, antipodal, antipodal_inverse,
                     boundary_chronology, boundary_to_minkowski,
                     closure_position, exact_relation, minkowski_to_boundary,
                     transition, chart as family_chart)
from .tensor import ChartPoint

__all__ = [
    "DiamondSpec", "WedgeSpec", "rehren_map", "rehren_inverse",
    "causal_complement", "wedge_flow", "chronological_relation",
    "diamond_volume", "envelope_contains", "minkowski_domain_case",
]


def minkowski_domain_case(p, q, tol=1e-9):
    """Containment class of a boundary pair: 2 (interior of a common
    Minkowski domain), 3 (its closure), or 1 (neither; unsupported)."""
    anchors = [p.e, q.e]
    if np.linalg.norm(p.e + q.e) > 1e-8:
        anchors.insert(0, normalize(p.e + q.e))
    tau0 = 0.5 * (p.tau + q.tau)
    best = -np.inf
    for e0 in anchors:
        c = min(np.cos(p.tau - tau0) + float(p.e @ e0),
                np.cos(q.tau - tau0) + float(q.e @ e0))
        best = max(best, c)
    if best > tol:
        return 2
    if best > -tol:
        return 3
    return 1


def _validate_pair(p, q, allow_complement_form=False):
    rel = boundary_chronology(p, q)
    if rel != "chronological_future":
        raise PreconditionError(
            f"labels must satisfy p << q on the boundary (got {rel})")
    case = minkowski_domain_case(p, q)
    if case in (2, 3):
        return case
    if allow_complement_form:
        qi = antipodal_inverse(q)
        if boundary_chronology(p, qi) == "chronological_future" and \
                minkowski_domain_case(p, qi) in (2, 3):
            return "complement"
        pi = antipodal(p)
        if boundary_chronology(pi, q) == "chronological_future" and \
                minkowski_domain_case(pi, q) in (2, 3):
            return "complement"
    raise PreconditionError(
        "label pair is not contained in the closure of any Minkowski domain "
        "(Cauchy surfaces would be non-contractible); unsupported")


@dataclass(frozen=True)
class DiamondSpec:
    """Boundary diamond D_{p,q} named by chronologically related endpoints."""
    p: BoundaryPoint
    q: BoundaryPoint

    def __post_init__(self):
        _validate_pair(self.p, self.q)

    def to_json(self):
        return {"p": {"tau": float(self.p.tau), "e": [float(v) for v in self.p.e]},
                "q": {"tau": float(self.q.tau), "e": [float(v) for v in self.q.e]}}

    @classmethod
    def from_json(cls, obj):
        return cls(BoundaryPoint(obj["p"]["tau"], np.asarray(obj["p"]["e"])),
                   BoundaryPoint(obj["q"]["tau"], np.asarray(obj["q"]["e"])))


@dataclass(frozen=True)
class WedgeSpec:
    """Bulk wedge W_{p,q}; accepts the complement form W_{p, q-bar}.

    ``checked=False`` skips label validation; it is used internally for the
    degenerate (empty) wedges the causal-complement algebra can emit when
    starting from same-generator label pairs.
    """
    p: BoundaryPoint
    q: BoundaryPoint
    checked: bool = True

    def __post_init__(self):
        if self.checked:
            _validate_pair(self.p, self.q, allow_complement_form=True)

    to_json = DiamondSpec.to_json

    @classmethod
    def from_json(cls, obj):
        return cls(BoundaryPoint(obj["p"]["tau"], np.asarray(obj["p"]["e"])),
                   BoundaryPoint(obj["q"]["tau"], np.asarray(obj["q"]["e"])))


def rehren_map(w):
    """Label-preserving bijection W_{p,q} -> D_{p,q}."""
    if not isinstance(w, WedgeSpec):
        raise PreconditionError("rehren_map expects a WedgeSpec")
    return DiamondSpec(w.p, w.q) if _is_strict(w) else _DiamondAlias(w)


def rehren_inverse(dia):
    if isinstance(dia, _DiamondAlias):
        return dia.wedge
    if not isinstance(dia, DiamondSpec):
        raise PreconditionError("rehren_inverse expects a DiamondSpec")
    return WedgeSpec(dia.p, dia.q)


def _is_strict(w):
    try:
        _validate_pair(w.p, w.q)
        return True
    except PreconditionError:
        return False


@dataclass(frozen=True)
class _DiamondAlias:
    """Boundary trace of a complement-form wedge (same labels)."""
    wedge: WedgeSpec

    @property
    def p(self):
        return self.wedge.p

    @property
    def q(self):
        return self.wedge.q


def causal_complement(w, context):
    """Exact causal complement of an AdS wedge: W_{p, q-bar} -> W_{q, p-bar}.

    Only defined in pure AdS, where the complement of a wedge is again a
    wedge; for AAdS models the overlap of complements is generically
    nonvoid (see wedge_overlap_volume) and no WedgeSpec exists for it.
    """
    if getattr(context, "family", None) != "ads":
        raise UnsupportedError(
            "exact causal complements are only defined in pure AdS")
    p2, q2 = antipodal_inverse(w.q), antipodal(w.p)
    try:
        return WedgeSpec(p2, q2)
    except PreconditionError:
        # complement of a degenerate (spatially global) wedge is empty but
        # the label algebra remains involutive
        return WedgeSpec(p2, q2, checked=False)


# ---------------------------------------------------------------------------
# exact causal predicates
# ---------------------------------------------------------------------------

def chronological_relation(context, a, b, mode="exact", fan=None):
    """Causal order of b relative to a: past / future / lightlike / spacelike.

    Exact mode covers pure AdS (any chart, bulk or boundary points), the
    boundary cylinder and Minkowski space through the conformal embedding.
    For AAdS models the numeric fan mode must be requested explicitly and
    returns (relation, certificate).
    """
    fam = getattr(context, "family", None)
    if mode == "exact":
        if fam == "minkowski":
            xa = a.coords if isinstance(a, ChartPoint) else np.asarray(a, float)
            xb = b.coords if isinstance(b, ChartPoint) else np.asarray(b, float)
            dx = xb - xa
            s = -dx[0] ** 2 + float(dx[1:] @ dx[1:])
            if abs(s) <= 1e-12 * (1.0 + float(dx @ dx)):
                return "lightlike"
            if s < 0:
                return "future" if dx[0] > 0 else "past"
            return "spacelike"
        if fam in ("ads", "esu_boundary") or isinstance(a, BoundaryPoint):
            return exact_relation(a, b)
        raise UnsupportedError(
            f"exact causal predicates are not available for family '{fam}'; "
            "request the numeric fan mode explicitly")
    if mode == "numeric":
        from .fans import numeric_relation
        from .models import _lookup
        family = context
        if hasattr(context, "chart_id"):      # a model: resolve its family
            family, _ = _lookup(context.chart_id)
        return numeric_relation(family, a, b, fan=fan)
    raise PreconditionError(f"unknown mode '{mode}'")


# ---------------------------------------------------------------------------
# the wedge isotropy flow
# ---------------------------------------------------------------------------

def _standard_flow_lightcone(w, lam):
    """z -> [(1+z) - e^-lam (1-z)] / [(1+z) + e^-lam (1-z)] on a light-cone
    coordinate of the standard diamond; fixes z = +-1."""
    em = np.exp(-lam)
    return ((1.0 + w) - em * (1.0 - w)) / ((1.0 + w) + em * (1.0 - w))


def _standard_flow(xz, lam):
    """Flow of the standard diamond/wedge on (x^0, spatial...) coordinates,
    rotationally symmetric around the x^0 axis (the z direction, when
    present, counts as one more spatial coordinate)."""
    x0 = xz[0]
    sp = xz[1:]
    rho = float(np.linalg.norm(sp))
    wp = _standard_flow_lightcone(x0 + rho, lam)
    wm = _standard_flow_lightcone(x0 - rho, lam)
    x0n = 0.5 * (wp + wm)
    rhon = 0.5 * (wp - wm)
    out = np.empty_like(xz)
    out[0] = x0n
    out[1:] = sp * (rhon / rho) if rho > 0 else 0.0
    return out


def _eta_reflection(w, eta):
    denom = float(w @ eta @ w)
    return np.eye(len(w)) - 2.0 * np.outer(w, eta @ w) / denom


class _WedgeFrame:
    """Maps between a wedge's own labels and the standard diamond frame.

    Combines the cylinder isometry centering the pair in the standard
    Minkowski domain with the affine conformal map (boost + translation +
    dilation) taking the projective labels to (-1, 0) and (+1, 0).
    """

    def __init__(self, w):
        from ._num import rotation_taking
        p, q = w.p, w.q
        self.tau0 = 0.5 * (p.tau + q.tau)
        if np.linalg.norm(p.e + q.e) > 1e-8:
            e0 = normalize(p.e + q.e)
        else:
            e0 = p.e
        nhat = np.zeros(len(p.e))
        nhat[-1] = 1.0
        self.rot = rotation_taking(e0, nhat)
        a = boundary_to_minkowski(self._to_domain(p))
        b = boundary_to_minkowski(self._to_domain(q))
        n = len(a)
        self.eta = np.diag([-1.0] + [1.0] * (n - 1))
        dx = b - a
        D2 = -float(dx @ self.eta @ dx)
        if D2 <= 0:
            raise PreconditionError("wedge labels are not chronologically related")
        self.D = np.sqrt(D2)
        u = dx / self.D
        e_t = np.zeros(n)
        e_t[0] = 1.0
        self.boost = _eta_reflection(u + e_t, self.eta) @ _eta_reflection(u, self.eta)
        self.boost_inv = _eta_reflection(u, self.eta) @ _eta_reflection(u + e_t, self.eta)
        self.center = 0.5 * (a + b)

    def _to_domain(self, bp):
        return BoundaryPoint(bp.tau - self.tau0, self.rot @ bp.e)

    def _from_domain(self, bp):
        return BoundaryPoint(bp.tau + self.tau0, self.rot.T @ bp.e)

    def boundary_to_std(self, bp):
        x = boundary_to_minkowski(self._to_domain(bp))
        return (2.0 / self.D) * (self.boost @ (x - self.center))

    def boundary_from_std(self, y):
        x = self.boost_inv @ ((self.D / 2.0) * y) + self.center
        return self._from_domain(minkowski_to_boundary(x))

    def bulk_to_std(self, point):
        pe = transition(point, "esu")
        t, rho = pe.coords[0], pe.coords[1]
        from ._num import sphere_angles, sphere_point
        e = sphere_point(pe.coords[2:])
        e2 = self.rot @ e
        pe2 = ChartPoint(pe.chart_id, np.concatenate([[t - self.tau0, rho],
                                                      sphere_angles(e2)]))
        pp = transition(pe2, "poincare")
        x, z = pp.coords[:-1], pp.coords[-1]
        y = (2.0 / self.D) * (self.boost @ (x - self.center))
        return np.concatenate([y, [(2.0 / self.D) * z]]), pp.chart_id

    def bulk_from_std(self, yz, chart_id, template_point):
        from ._num import sphere_angles, sphere_point
        x = self.boost_inv @ ((self.D / 2.0) * yz[:-1]) + self.center
        z = (self.D / 2.0) * yz[-1]
        pp = ChartPoint(chart_id, np.concatenate([x, [z]]))
        pe = transition(pp, "esu")
        t, rho = pe.coords[0], pe.coords[1]
        e = sphere_point(pe.coords[2:])
        pe2 = ChartPoint(pe.chart_id, np.concatenate([[t + self.tau0, rho],
                                                      sphere_angles(self.rot.T @ e)]))
        return transition(pe2, template_point.chart_id.split(":")[1])


def wedge_flow(w, x, lam):
    """One-parameter wedge isotropy flow u^lam_{p,q} applied to x.

    x is a BoundaryPoint of D_{p,q} or a bulk ChartPoint of W_{p,q} in any
    AdS chart; the flow is the conjugate of a dilation by the conformal map
    taking the labels to the standard diamond, extended to the bulk through
    the Poincare chart.  Fixed points: the labels themselves.
    """
    frame = _WedgeFrame(w)
    if isinstance(x, BoundaryPoint):
        if boundary_chronology(w.p, x) != "chronological_future" or \
                boundary_chronology(x, w.q) != "chronological_future":
            raise DomainError("boundary point is outside the diamond D_{p,q}")
        y = frame.boundary_to_std(x)
        yn = _standard_flow(y, lam)
        return frame.boundary_from_std(yn)
    if exact_relation(w.p, x) != "future" or exact_relation(x, w.q) != "future":
        raise DomainError("bulk point is outside the wedge W_{p,q}")
    yz, chart_id = frame.bulk_to_std(x)
    yzn = _standard_flow(yz, lam)
    return frame.bulk_from_std(yzn, chart_id, x)


def flat_diamond_flow(x, lam, radius=1.0, center=None):
    """Standard-diamond conformal flow directly on flat-chart coordinates
    (used by the flat modular frame): tips at x^0 = -+radius around center."""
    x = np.asarray(x, dtype=float)
    c = np.zeros_like(x) if center is None else np.asarray(center, dtype=float)
    y = (x - c) / radius
    return c + radius * _standard_flow(y, lam)


# ---------------------------------------------------------------------------
# diamond volumes (Monte Carlo, counter-based generator)
# ---------------------------------------------------------------------------

def diamond_volume(model, region, sampler):
    """Monte Carlo volume with standard error; deterministic for fixed seed.

    ``region`` is a DiamondSpec (boundary diamond: integrated in the flat
    Minkowski-domain representative of the boundary metric, a (d-1)-dim
    region) or a bulk pair (p, q) of ChartPoints (d-dim, weight sqrt|g|).
    ``sampler`` must carry integer ``seed`` and ``n``.
    """
    try:
        seed = int(sampler["seed"])
        n = int(sampler["n"])
    except (KeyError, TypeError):
        raise PreconditionError("sampler must provide integer 'seed' and 'n'")
    rng = philox(seed)
    if isinstance(region, (DiamondSpec, _DiamondAlias)):
        return _boundary_diamond_volume(model, region, rng, n)
    p, q = region
    return _bulk_diamond_volume(model, p, q, rng, n)


def _boundary_diamond_volume(model, dia, rng, n):
    d = model.dimension if model.family != "esu_boundary" else model.dimension + 1
    w = WedgeSpec(dia.p, dia.q) if not isinstance(dia, _DiamondAlias) else dia.wedge
    frame = _WedgeFrame(w)
    ndim = d - 1                      # boundary Minkowski domain R^(1,d-2)
    if ndim == 2:
        box_lo = np.array([-1.0, -1.0])
        box_hi = np.array([1.0, 1.0])
    else:
        box_lo = np.array([-1.0] + [-1.0] * (ndim - 1))
        box_hi = np.array([1.0] + [1.0] * (ndim - 1))
    pts = rng.uniform(box_lo, box_hi, size=(n, ndim))
    spatial = np.linalg.norm(pts[:, 1:], axis=1)
    inside = spatial < 1.0 - np.abs(pts[:, 0])
    box_vol = float(np.prod(box_hi - box_lo))
    frac = inside.mean()
    scale = (frame.D / 2.0) ** ndim
    vol = scale * box_vol * frac
    err = scale * box_vol * float(np.sqrt(max(frac * (1 - frac), 0.0) / n))
    if not np.any(inside):
        return 0.0, 0.0
    return float(vol), err


def _bulk_diamond_volume(model, p, q, rng, n):
    if model.family == "minkowski":
        xp, xq = p.coords, q.coords
        dt = xq[0] - xp[0]
        if dt <= 0:
            return 0.0, 0.0
        c = 0.5 * (xp + xq)
        r = dt / 2.0
        d = model.dimension
        lo = np.concatenate([[xp[0]], c[1:] - r])
        hi = np.concatenate([[xq[0]], c[1:] + r])
        pts = rng.uniform(lo, hi, size=(n, d))
        dx_p = pts - xp
        dx_q = xq - pts
        inside = (np.linalg.norm(dx_p[:, 1:], axis=1) < dx_p[:, 0]) & \
                 (np.linalg.norm(dx_q[:, 1:], axis=1) < dx_q[:, 0])
        box_vol = float(np.prod(hi - lo))
        frac = inside.mean()
        err = box_vol * float(np.sqrt(max(frac * (1 - frac), 0.0) / n))
        return float(box_vol * frac), err
    if model.family != "ads":
        raise UnsupportedError("bulk diamond volumes: minkowski or ads models only")
    # AdS: sample a stereographic-chart box, weight sqrt|g_bulk|
    stereo = family_chart(model, "esu_stereo")
    pe = transition(p, "esu_stereo") if p.chart_id != stereo.chart_id else p
    qe = transition(q, "esu_stereo") if q.chart_id != stereo.chart_id else q
    tp, tq = pe.coords[0], qe.coords[0]
    xc = 0.5 * (pe.coords[1:] + qe.coords[1:])
    halfw = 0.75 * (tq - tp) * (1.0 + float(xc @ xc)) / 2.0 + 0.05
    d = stereo.dimension
    lo = np.concatenate([[tp], xc - halfw])
    hi = np.concatenate([[tq], xc + halfw])
    pts = rng.uniform(lo, hi, size=(n, d))
    box_vol = float(np.prod(hi - lo))
    R = stereo.ads_radius
    vals = np.zeros(n)
    for i in range(n):
        x = pts[i]
        r2 = float(x[1:] @ x[1:])
        if r2 >= 1.0:
            continue
        cp = ChartPoint(stereo.chart_id, x)
        if exact_relation(pe, cp) != "future" or exact_relation(cp, qe) != "future":
            continue
        z = stereo.conformal_factor_fn(x)
        gbar = stereo.metric_fn(x)
        vals[i] = np.sqrt(abs(np.linalg.det(gbar))) / z**d
    mean = float(vals.mean())
    err = float(vals.std(ddof=1) / np.sqrt(n))
    return box_vol * mean, box_vol * err


# ---------------------------------------------------------------------------
# envelope of a small bulk diamond by wedges
# ---------------------------------------------------------------------------

def envelope_contains(model, p, q, x, n_fan=64):
    """True iff x lies in every sampled enveloping wedge W_{r,s} of the bulk
    diamond O_{p,q}: r runs over the boundary trace of the past light cone
    of p, s over the future light cone of q on the same time generator.

    Exact AdS route.  The smallness precondition (containment in a convex
    normal patch) is validated by a shooting connect between the tips.
    """
    if getattr(model, "family", None) != "ads":
        raise UnsupportedError("envelope membership is implemented for pure AdS")
    connect(family_chart(model, "esu"), transition(p, "esu"),
            transition(q, "esu"), multistart=2)
    tp, yp = closure_position(p)
    tq, yq = closure_position(q)
    d = model.dimension
    dirs = fibonacci_directions(n_fan, d - 1)
    for theta in dirs:
        y_bdry = np.concatenate([theta, [0.0]])
        sig_p = float(np.arccos(np.clip(yp @ y_bdry, -1, 1)))
        sig_q = float(np.arccos(np.clip(yq @ y_bdry, -1, 1)))
        r = BoundaryPoint(tp - sig_p, theta)
        s = BoundaryPoint(tq + sig_q, theta)
        if exact_relation(r, x) != "future" or exact_relation(x, s) != "future":
            return False
    return True
