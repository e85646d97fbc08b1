"""The geometric modular structure of diamonds and wedges: the global time
function lambda = 1/2 [log Gamma(p,r) - log Gamma(r,q)], the vector field T
generating its flow, and the past/future surface gravities with their
tip limits (the zeroth law: kappa_- -> +1, kappa_+ -> -1).

All second derivatives of the world function enter through finite
differences of T evaluations (default step 1e-4, Richardson refined); the
analytic bitensor expansion is out of scope.  For arbitrary (non-Killing)
T the last identity of the kappa chain holds only asymptotically, so kappa
is always computed from the first identity

    kappa = lim_{-> horizon} (T^a T^b nabla_b T_a) / g(T, T)

and the divergence of T is reported separately (it must approach -+d at
the tips).
"""

from dataclasses import dataclass

import numpy as np

from ._num import richardson
from .errors import DomainError, OffHorizonError, PreconditionError
from .geodesics import connect, world_function
from .models import ads
from .tensor import ChartPoint, christoffel_at, metric_at

__all__ = [
    "ModularFrame", "flat_frame", "ads_wedge_frame", "time_function",
    "modular_field", "surface_gravity", "horizon_sequence",
]

FD_T_STEP = 1e-4


@dataclass(frozen=True)
class ModularFrame:
    """A diamond/wedge with endpoints p << q in a fixed chart of the metric
    the world function refers to (the conformal closure for AdS wedges)."""
    model: object
    p: ChartPoint
    q: ChartPoint
    convexity_certificate: bool = False

    def world(self, a, b):
        return world_function(self.model, a, b, multistart=2)


def flat_frame(d=4, radius=1.0):
    """Flat diamond with tips (-radius, 0,...) and (+radius, 0,...)."""
    from .models import flat
    model = flat(d)
    p = model.point(*([-radius] + [0.0] * (d - 1)))
    q = model.point(*([radius] + [0.0] * (d - 1)))
    return ModularFrame(model, p, q, convexity_certificate=True)


def ads_wedge_frame(d=4, half_width=0.6, phi=0.0):
    """AdS wedge with boundary tips (-+half_width, e) on the equator of the
    hemisphere closure, anchored at the chart-regular position
    (theta = pi/2, phi).  half_width < pi/2 keeps the closed wedge inside a
    geodesically convex patch of the closure."""
    if not (0 < half_width < np.pi / 2):
        raise PreconditionError("half_width must lie in (0, pi/2)")
    es = ads(d, 1.0).charts["esu"]
    ang = [np.pi / 2] * (d - 3) + [phi]
    p = es.point(*([-half_width, np.pi / 2] + ang))
    q = es.point(*([half_width, np.pi / 2] + ang))
    return ModularFrame(es, p, q, convexity_certificate=True)


def generic_frame(model, p, q):
    """Frame over a shooting-validated convex pair in any model."""
    connect(model, p, q, multistart=2)
    return ModularFrame(model, p, q, convexity_certificate=True)


class _WorldEngine:
    """Cached world-function evaluations of a frame, with warm-started
    shooting for models without an exact world function."""

    def __init__(self, frame):
        self.frame = frame
        self.model = frame.model
        self.exact = frame.model.world_function_fn is not None
        self._cache = {}
        self._warm = {}      # per endpoint family: (v, varying endpoint, J state)

    def gamma_and_grad(self, a_coords, b_coords, grad_at):
        """(Gamma, gradient vector at the chosen endpoint 'first'/'second')."""
        key = (tuple(np.round(a_coords, 13)), tuple(np.round(b_coords, 13)))
        if key not in self._cache:
            if self.exact:
                gam, g1, g2 = self.model.world_function_fn(a_coords, b_coords)
            else:
                pa = ChartPoint(self.model.chart_id, a_coords)
                pb = ChartPoint(self.model.chart_id, b_coords)
                warm = self._warm.setdefault(grad_at, {"jac": {}})
                guess = None
                if "v" in warm:
                    # secant translation of the cached solution to the new
                    # varying endpoint; the frozen Jacobian is reused too
                    if grad_at == "second":
                        guess = warm["v"] + (b_coords - warm["x"])
                    else:
                        guess = warm["v"] - (a_coords - warm["x"])
                traj = connect(self.model, pa, pb, v_guess=guess,
                               jac_state=warm["jac"])
                v0 = traj.velocity(0.0)
                v1 = traj.velocity(1.0)
                warm["v"] = v0
                warm["x"] = b_coords.copy() if grad_at == "second" else a_coords.copy()
                g_a = metric_at(self.model, pa)
                g_b = metric_at(self.model, pb)
                gam = -0.5 * float(v0 @ g_a @ v0)
                g1, g2 = g_a @ v0, -(g_b @ v1)
            self._cache[key] = (float(gam), np.asarray(g1), np.asarray(g2))
        gam, g1, g2 = self._cache[key]
        cov = g1 if grad_at == "first" else g2
        return gam, cov


def _field_data(frame, r_coords, engine=None):
    """Gamma's, gradients (vectors) and the pieces of T at a point."""
    eng = engine or _WorldEngine(frame)
    gam_pr, d_pr = eng.gamma_and_grad(frame.p.coords, r_coords, "second")
    gam_rq, d_rq = eng.gamma_and_grad(r_coords, frame.q.coords, "first")
    if gam_pr <= 0.0 or gam_rq <= 0.0:
        raise DomainError(
            f"probe point is on or outside the frame horizons "
            f"(Gamma(p,r)={gam_pr:.3e}, Gamma(r,q)={gam_rq:.3e})")
    model = frame.model
    ginv = np.linalg.inv(metric_at(model, ChartPoint(model.chart_id, r_coords)))
    v_pr = ginv @ d_pr
    v_rq = ginv @ d_rq
    # time orientation: v_rq is the future velocity toward q, v_pr is minus
    # the arriving velocity from p; both checks fail past the tips
    if v_rq[0] <= 0.0 or v_pr[0] >= 0.0:
        raise DomainError("probe point lies beyond a tip of the frame region")
    cross = float(d_pr @ ginv @ d_rq)
    denom = gam_pr + gam_rq + cross
    T = (gam_pr * v_rq - gam_rq * v_pr) / denom
    return {"gam_pr": gam_pr, "gam_rq": gam_rq, "d_pr": d_pr, "d_rq": d_rq,
            "cross": cross, "denom": denom, "T": T, "ginv": ginv}


def time_function(frame, r, engine=None):
    """lambda = 1/2 (log Gamma(p,r) - log Gamma(r,q)); strictly increasing
    along future causal curves inside the frame."""
    coords = r.coords if isinstance(r, ChartPoint) else np.asarray(r, float)
    dat = _field_data(frame, coords, engine)
    return 0.5 * (np.log(dat["gam_pr"]) - np.log(dat["gam_rq"]))


def flat_closed_form_time(frame, r):
    """Flat-model closed form log(d(p,r)/d(r,q)) (must agree with the
    Gamma route; the Lorentzian distances are chart distances here)."""
    eta = metric_at(frame.model, frame.p)
    coords = r.coords if isinstance(r, ChartPoint) else np.asarray(r, float)
    dp = coords - frame.p.coords
    dq = frame.q.coords - coords
    s1 = -float(dp @ eta @ dp)
    s2 = -float(dq @ eta @ dq)
    if s1 <= 0 or s2 <= 0:
        raise DomainError("point outside the flat diamond")
    return float(np.log(np.sqrt(s1) / np.sqrt(s2)))


def modular_field(frame, r, engine=None, step=FD_T_STEP):
    """T, its squared norm, divergence and conformal-Killing residual.

    T is the vector field with T^a nabla_a lambda = 1 orthogonal to the
    lambda level sets; the residual is the max-norm of
    nabla_(a T_b) - (1/d) (nabla_c T^c) g_ab, both by central differences
    of the field (step scaled per coordinate).
    """
    coords = r.coords if isinstance(r, ChartPoint) else np.asarray(r, float)
    eng = engine or _WorldEngine(frame)
    model = frame.model
    d = model.dimension
    dat = _field_data(frame, coords, eng)
    T = dat["T"]
    g = metric_at(model, ChartPoint(model.chart_id, coords))
    norm = float(T @ g @ T)

    def T_low(x):
        gx = metric_at(model, ChartPoint(model.chart_id, x))
        return gx @ _field_data(frame, x, eng)["T"]

    def T_up(x):
        return _field_data(frame, x, eng)["T"]

    dT_low = np.empty((d, d))   # dT_low[a, b] = partial_a T_b
    dT_up = np.empty((d, d))    # dT_up[a, b] = partial_a T^b
    for a in range(d):
        h = step * max(1.0, abs(coords[a]))
        xp = coords.copy(); xp[a] += h
        xm = coords.copy(); xm[a] -= h
        dT_low[a] = (T_low(xp) - T_low(xm)) / (2 * h)
        dT_up[a] = (T_up(xp) - T_up(xm)) / (2 * h)
    G = christoffel_at(model, ChartPoint(model.chart_id, coords))
    # nabla_a T_b, nabla_a T^a
    nabla_low = dT_low - np.einsum("cab,c->ab", G, g @ T)
    div = float(np.trace(dT_up) + np.einsum("aab,b->", G, T))
    sym = 0.5 * (nabla_low + nabla_low.T)
    residual = float(np.max(np.abs(sym - (div / d) * g)))
    return T, norm, div, residual


def horizon_sequence(frame, side, distances=(0.2, 0.1, 0.05, 0.025)):
    """Points on the past (resp. future) wedge horizon approaching the tip
    p (resp. q), at the given generator-parameter distances from the tip.

    Implemented for the flat diamond frame and the hemisphere-closure AdS
    wedge frame, whose horizon generators have simple closed forms.
    """
    model = frame.model
    d = model.dimension
    pts = []
    if model.family == "minkowski":
        n = np.zeros(d - 1)
        n[0] = 1.0
        for s in distances:
            if side == "past":
                x = frame.p.coords + s / np.sqrt(2.0) * np.concatenate([[1.0], n])
            else:
                x = frame.q.coords - s / np.sqrt(2.0) * np.concatenate([[1.0], n])
            pts.append(ChartPoint(model.chart_id, x))
        return pts
    if model.chart_id.endswith(":esu"):
        for s in distances:
            if side == "past":
                x = frame.p.coords.copy()
                x[0] += s
                x[1] -= s
            else:
                x = frame.q.coords.copy()
                x[0] -= s
                x[1] -= s
            pts.append(ChartPoint(model.chart_id, x))
        return pts
    raise PreconditionError(
        "horizon sequences are provided for flat and AdS hemisphere frames")


def _inward_direction(frame, h_coords):
    mid = 0.5 * (frame.p.coords + frame.q.coords)
    w = mid - h_coords
    n = np.linalg.norm(w)
    if n == 0:
        raise PreconditionError("horizon point coincides with the frame center")
    return w / n


def surface_gravity(frame, points, side, eps=8e-3, horizon_tol=1e-8,
                    fd_step=FD_T_STEP):
    """kappa along a horizon sequence and its Richardson limit at the tip.

    Each kappa(h) is the first-identity ratio (T^a T^b nabla_b T_a)/g(T,T)
    evaluated at interior probes h + eps*w (eps, eps/2, eps/4; w the inward
    unit chart direction) and Richardson extrapolated to the horizon; the
    divergence of T is evaluated the same way and reported separately.
    Returns a dict with per-point kappas, divergences, distances, and the
    extrapolated tip limits.
    """
    eng = _WorldEngine(frame)
    model = frame.model
    tip = frame.p if side == "past" else frame.q
    kappas = []
    divs = []
    dists = []
    for h in points:
        hc = h.coords if isinstance(h, ChartPoint) else np.asarray(h, float)
        gam_ph, _ = eng.gamma_and_grad(frame.p.coords, hc, "second")
        gam_hq, _ = eng.gamma_and_grad(hc, frame.q.coords, "first")
        gam_null = gam_ph if side == "past" else gam_hq
        if abs(gam_null) > horizon_tol:
            raise OffHorizonError(
                f"point {hc} is off the {side} horizon: |Gamma| = {abs(gam_null):.3e}")
        w = _inward_direction(frame, hc)
        ratios = []
        div_seq = []
        for e_k in (eps, eps / 2.0, eps / 4.0):
            x = hc + e_k * w
            dat = _field_data(frame, x, eng)
            T = dat["T"]
            g = metric_at(model, ChartPoint(model.chart_id, x))
            step = min(fd_step, e_k / 8.0)
            dT_low = np.empty((model.dimension, model.dimension))
            dT_up = np.empty((model.dimension, model.dimension))
            for a in range(model.dimension):
                ha = step * max(1.0, abs(x[a]))
                xp = x.copy(); xp[a] += ha
                xm = x.copy(); xm[a] -= ha
                datp = _field_data(frame, xp, eng)
                datm = _field_data(frame, xm, eng)
                gp = metric_at(model, ChartPoint(model.chart_id, xp))
                gm = metric_at(model, ChartPoint(model.chart_id, xm))
                dT_low[a] = (gp @ datp["T"] - gm @ datm["T"]) / (2 * ha)
                dT_up[a] = (datp["T"] - datm["T"]) / (2 * ha)
            G = christoffel_at(model, ChartPoint(model.chart_id, x))
            nabla_low = dT_low - np.einsum("cab,c->ab", G, g @ T)
            num = float(T @ nabla_low.T @ T)   # T^a T^b nabla_b T_a
            ratios.append(num / float(T @ g @ T))
            div_seq.append(float(np.trace(dT_up) + np.einsum("aab,b->", G, T)))
        kappas.append(float(richardson(ratios, ratio=2.0, order=1)))
        divs.append(float(richardson(div_seq, ratio=2.0, order=1)))
        dists.append(float(np.linalg.norm(hc - tip.coords)))
    order = np.argsort(dists)[::-1]
    k_sorted = [kappas[i] for i in order]
    d_sorted = [divs[i] for i in order]
    kappa_limit = float(richardson(k_sorted, ratio=dists[order[0]] / dists[order[1]]
                                   if len(order) > 1 else 2.0, order=1))
    div_limit = float(richardson(d_sorted, ratio=dists[order[0]] / dists[order[1]]
                                 if len(order) > 1 else 2.0, order=1))
    return {"distances": dists, "kappa": kappas, "div_T": divs,
            "kappa_limit": kappa_limit, "div_limit": div_limit, "side": side}


def kappa_csv(result, path):
    from ._num import write_csv
    rows = list(zip(result["distances"], result["kappa"], result["div_T"]))
    write_csv(path, ["distance_to_tip", "kappa", "div_T"], rows)
