"""Near-boundary expansion of AAdS metrics in the Gaussian-normal gauge
gbar = dz^2 + h(z), h(z) = sum_j z^j h^(j), with h^(0) the boundary metric.

Normalization is fixed to R = 1, Lambda = -(d-1)(d-2)/2, under which the
normal covector satisfies gbar^{-1}(dz, dz) = 1 and the exact-AdS closure
takes the form -(1+z^2/4)^2 dt^2 + dz^2 + (1-z^2/4)^2 dOmega^2.

Boundary data live in the cylinder-isotropic class

    h = a(tau) dtau^2 + b(tau) ghat,

with ghat the unit round sphere S^(d-2) (ESU boundary) or the flat metric
(Minkowski-domain boundary); a < 0 < b.  This class is closed under the
expansion (the recursion preserves isotropy) and covers the exact targets,
the Schwarzschild-AdS data, and smooth tau-dependent conformal
perturbations.  Analytic data carry constant coefficients; grid data carry
periodic tau lattices differentiated with 4th-order central stencils.

The coefficients are obtained order by order from the evolution equation

    z (-h''/2 + Ric(h)) - z TrK K - (d-2) K - h TrK = 0,   K = -h'/2,

by solving, at each order, the linear 2x2 system the equation imposes on
the unknown coefficient (the system is extracted numerically from the
residual's linearity, so no hand-derived index bookkeeping enters).  The
trace-free part of h^(d-1) is not determined by the recursion; it is
assembled from the rescaled electric Weyl datum E_ab through the identity
(d-3) E = (d-3) K^(d-2) + [K^c_a K_cb]^(d-3), which reproduces the printed
low-dimensional special cases including the d = 5 trace shift.  For d odd
a nonzero trace-free obstruction at that order signals the z^(d-1) log z
term; it is detected and flagged, never computed.
"""

from dataclasses import dataclass

import numpy as np

from .errors import (ConstructionError, ExtrapolationDivergenceError,
                     PreconditionError)
from ._num import richardson

__all__ = [
    "BoundaryData", "FGCoefficientTable", "fg_expand",
    "fg_constraint_residual", "electric_weyl", "reconstructed_model",
]


# ---------------------------------------------------------------------------
# truncated z-power series with scalar or tau-array coefficients
# ---------------------------------------------------------------------------

class ZSeries:
    def __init__(self, coef, order):
        self.order = order
        self.coef = [np.asarray(c, dtype=float) for c in coef]
        while len(self.coef) < order + 1:
            self.coef.append(np.asarray(0.0))

    @classmethod
    def const(cls, value, order):
        return cls([np.asarray(value, dtype=float)], order)

    def __add__(self, other):
        o = self._wrap(other)
        return ZSeries([a + b for a, b in zip(self.coef, o.coef)], self.order)

    def __sub__(self, other):
        o = self._wrap(other)
        return ZSeries([a - b for a, b in zip(self.coef, o.coef)], self.order)

    def __mul__(self, other):
        o = self._wrap(other)
        out = [np.asarray(0.0) for _ in range(self.order + 1)]
        for i, a in enumerate(self.coef):
            if i > self.order:
                break
            for j in range(self.order + 1 - i):
                out[i + j] = out[i + j] + a * o.coef[j]
        return ZSeries(out, self.order)

    def _wrap(self, other):
        if isinstance(other, ZSeries):
            return other
        return ZSeries.const(other, self.order)

    __radd__ = __add__
    __rmul__ = __mul__

    def __neg__(self):
        return ZSeries([-c for c in self.coef], self.order)

    def scale(self, s):
        return ZSeries([s * c for c in self.coef], self.order)

    def dz(self):
        return ZSeries([(j + 1) * self.coef[j + 1] for j in range(len(self.coef) - 1)],
                       self.order)

    def shift(self):
        """Multiplication by z."""
        return ZSeries([np.asarray(0.0)] + self.coef[:-1], self.order)

    def inverse(self):
        """1/self; requires an invertible constant term."""
        inv = [1.0 / self.coef[0]]
        for k in range(1, self.order + 1):
            s = np.asarray(0.0)
            for i in range(1, k + 1):
                s = s + self.coef[i] * inv[k - i]
            inv.append(-s / self.coef[0])
        return ZSeries(inv, self.order)

    def map(self, f):
        return ZSeries([f(c) for c in self.coef], self.order)

    def eval(self, z):
        out = np.asarray(0.0)
        for j in range(self.order, -1, -1):
            out = out * z + self.coef[j]
        return out


# ---------------------------------------------------------------------------
# boundary data
# ---------------------------------------------------------------------------

def _d4_tau(values, spacing):
    """4th-order periodic central difference; constants pass through."""
    v = np.asarray(values, dtype=float)
    if v.ndim == 0:
        return np.asarray(0.0)
    return (-np.roll(v, -2) + 8.0 * np.roll(v, -1)
            - 8.0 * np.roll(v, 1) + np.roll(v, 2)) / (12.0 * spacing)


@dataclass(frozen=True)
class BoundaryData:
    """Boundary metric (and optional electric Weyl datum) of the expansion.

    representation: 'analytic_esu' | 'analytic_minkowski' | 'grid'.
    Grid payloads are periodic tau lattices of the isotropic components
    a(tau) (time-time, negative) and b(tau) (sphere factor, positive).
    e_a/e_b hold E_ab in the same component convention.
    """
    d: int
    representation: str
    a: object = -1.0
    b: object = 1.0
    tau_spacing: float = 0.0
    e_a: object = None
    e_b: object = None

    def __post_init__(self):
        if self.d < 3:
            raise ConstructionError("boundary data requires d >= 3")
        if self.representation not in ("analytic_esu", "analytic_minkowski", "grid"):
            raise ConstructionError(f"unknown representation '{self.representation}'")
        a = np.asarray(self.a, dtype=float)
        b = np.asarray(self.b, dtype=float)
        if np.any(a >= 0) or np.any(b <= 0):
            raise ConstructionError(
                "boundary metric must be Lorentzian on every node (a < 0 < b)")
        if self.representation == "grid":
            if a.ndim != 1 or a.shape != b.shape:
                raise ConstructionError("grid data needs matching 1-d a, b arrays")
            if not self.tau_spacing > 0:
                raise ConstructionError("grid spacing must be positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def fiber_curvature(self):
        return 0.0 if self.representation == "analytic_minkowski" else 1.0

    def dtau(self, values):
        return _d4_tau(values, self.tau_spacing if self.tau_spacing else 1.0)

    def has_electric(self):
        return self.e_a is not None and self.e_b is not None

    def electric_residuals(self):
        """(trace, divergence) residuals of the supplied E_ab."""
        if not self.has_electric():
            raise PreconditionError("no electric Weyl datum supplied")
        n = self.d - 2
        ea = np.asarray(self.e_a, dtype=float)
        eb = np.asarray(self.e_b, dtype=float)
        trace = ea / self.a + n * eb / self.b
        kt = ea / self.a
        ks = eb / self.b
        bp = self.dtau(self.b)
        div = n * (bp / (2 * self.b) * (kt - ks) - self.dtau(ks))
        return float(np.max(np.abs(trace))), float(np.max(np.abs(div)))


# ---------------------------------------------------------------------------
# isotropic Ricci tensor of h = a dtau^2 + b ghat
# ---------------------------------------------------------------------------

def _ricci_series(A, B, data):
    """(Ric_tautau, Ric_sphere/ghat, R_scalar) of the z-dependent slice
    metric as ZSeries; tau-derivatives act coefficient-wise."""
    n = data.d - 2
    k = data.fiber_curvature
    D = data.dtau
    Ap = A.map(D)
    Bp = B.map(D)
    App = Ap.map(D)
    Bpp = Bp.map(D)
    Ainv = A.inverse()
    Binv = B.inverse()
    ric_a = (Bpp * Binv).scale(-n / 2.0) + (Bp * Bp * Binv * Binv).scale(n / 4.0) \
        + (Ap * Bp * Ainv * Binv).scale(n / 4.0)
    ric_b = ZSeries.const(k * (n - 1.0), A.order) \
        + (Bpp * Ainv).scale(-0.5) \
        + (Bp * Bp * Ainv * Binv).scale(-(n - 2.0) / 4.0) \
        + (Ap * Bp * Ainv * Ainv).scale(0.25)
    scal = ric_a * Ainv + (ric_b * Binv).scale(n)
    return ric_a, ric_b, scal


def _evolution_residual(A, B, data):
    """(Res_A, Res_B) of the radial evolution equation as ZSeries:

        z [ -h''/2 + Ric(h) - TrK K + 2 K h^-1 K ] - (d-2) K - h TrK = 0.

    The 2 K h^-1 K term is the Gamma-correction of the radial covariant
    derivative nabla_Z K = partial_z K + 2 K h^-1 K; dropping it breaks the
    recursion at fourth order, which the exact-AdS oracle detects.
    """
    d = data.d
    n = d - 2
    KA = A.dz().scale(-0.5)
    KB = B.dz().scale(-0.5)
    Ainv = A.inverse()
    Binv = B.inverse()
    trK = KA * Ainv + (KB * Binv).scale(n)
    ric_a, ric_b, _ = _ricci_series(A, B, data)
    resA = A.dz().dz().scale(-0.5).shift() + ric_a.shift() \
        - (trK * KA).shift() + (KA * KA * Ainv).shift().scale(2.0) \
        - KA.scale(d - 2.0) - A * trK
    resB = B.dz().dz().scale(-0.5).shift() + ric_b.shift() \
        - (trK * KB).shift() + (KB * KB * Binv).shift().scale(2.0) \
        - KB.scale(d - 2.0) - B * trK
    return resA, resB


# ---------------------------------------------------------------------------
# coefficient table
# ---------------------------------------------------------------------------

@dataclass
class FGCoefficientTable:
    """Ordered boundary tensor coefficients h^(j) = (a_j, b_j)."""
    d: int
    representation: str
    order: int
    coef_a: list
    coef_b: list
    tau_spacing: float = 0.0
    log_term_flag: bool = False
    truncation_notice: bool = False
    obstruction_norm: float = 0.0
    parity_max_odd: float = 0.0

    def series(self, order=None):
        o = order if order is not None else self.order
        return (ZSeries(self.coef_a[:o + 1], o), ZSeries(self.coef_b[:o + 1], o))

    def data(self):
        return BoundaryData(d=self.d, representation=self.representation,
                            a=self.coef_a[0], b=self.coef_b[0],
                            tau_spacing=self.tau_spacing)

    def to_json(self):
        def enc(c):
            arr = np.atleast_1d(np.asarray(c, dtype=float))
            return ["%.17g" % v for v in arr]
        return {
            "d": int(self.d), "order": int(self.order),
            "representation": self.representation,
            "tau_spacing": "%.17g" % self.tau_spacing,
            "coefficients": [{"j": j, "a": enc(self.coef_a[j]), "b": enc(self.coef_b[j])}
                             for j in range(self.order + 1)],
            "log_term": bool(self.log_term_flag),
            "truncation_notice": bool(self.truncation_notice),
        }

    @classmethod
    def from_json(cls, obj):
        def dec(strs, scalar):
            vals = np.array([float(s) for s in strs])
            return np.asarray(vals[0]) if scalar else vals
        scalar = obj["representation"] != "grid"
        order = int(obj["order"])
        ca = [None] * (order + 1)
        cb = [None] * (order + 1)
        for entry in obj["coefficients"]:
            ca[int(entry["j"])] = dec(entry["a"], scalar)
            cb[int(entry["j"])] = dec(entry["b"], scalar)
        return cls(d=int(obj["d"]), representation=obj["representation"],
                   order=order, coef_a=ca, coef_b=cb,
                   tau_spacing=float(obj["tau_spacing"]),
                   log_term_flag=bool(obj["log_term"]),
                   truncation_notice=bool(obj.get("truncation_notice", False)))


def pure_ads_table(d, order=None):
    """Exact closure coefficients of AdS: a = -(1+z^2/4)^2, b = (1-z^2/4)^2."""
    if order is None:
        order = max(4, d - 2)
    ca = [np.asarray(0.0)] * (order + 1)
    cb = [np.asarray(0.0)] * (order + 1)
    ca[0] = np.asarray(-1.0)
    cb[0] = np.asarray(1.0)
    if order >= 2:
        ca[2] = np.asarray(-0.5)
        cb[2] = np.asarray(-0.5)
    if order >= 4:
        ca[4] = np.asarray(-1.0 / 16.0)
        cb[4] = np.asarray(1.0 / 16.0)
    return FGCoefficientTable(d=d, representation="analytic_esu", order=order,
                              coef_a=ca, coef_b=cb)


# ---------------------------------------------------------------------------
# the expansion
# ---------------------------------------------------------------------------

def _trace_split(xa, xb, a0, b0, n):
    """Split (xa, xb) into pure-trace and trace-free parts w.r.t. h^(0)."""
    tr = xa / a0 + n * xb / b0
    ta = a0 * tr / (n + 1.0)
    tb = b0 * tr / (n + 1.0)
    return (ta, tb), (xa - ta, xb - tb)


def fg_expand(data, order, obstruction_tol=1e-8):
    """Coefficients h^(j), j <= order, of the near-boundary expansion.

    Beyond j = d-2 the trace-free part of h^(d-1) requires the electric
    Weyl datum on ``data``; without it the table truncates there with a
    notice.  For d odd a nonzero obstruction at that order sets the
    log-term flag and halts the recursion (the log coefficient itself is
    out of numeric scope).
    """
    d = data.d
    n = d - 2
    hi = max(order, 1)
    A = ZSeries([data.a], hi)
    B = ZSeries([data.b], hi)
    shape = np.shape(np.asarray(data.a))
    log_flag = False
    notice = False
    obstruction = 0.0
    stop_order = order
    scale0 = max(1.0, float(np.max(np.abs(data.a))), float(np.max(np.abs(data.b))))
    for j in range(1, order + 1):
        resA, resB = _evolution_residual(A, B, data)
        c0a, c0b = resA.coef[j - 1], resB.coef[j - 1]

        def residual_with(xa, xb):
            A.coef[j] = np.broadcast_to(np.asarray(xa, float), shape).copy() \
                if shape else np.asarray(xa, float)
            B.coef[j] = np.broadcast_to(np.asarray(xb, float), shape).copy() \
                if shape else np.asarray(xb, float)
            ra, rb = _evolution_residual(A, B, data)
            return ra.coef[j - 1], rb.coef[j - 1]

        # numerically extract the linear system  C(x) = C0 + M x
        e1a, e1b = residual_with(1.0, 0.0)
        e2a, e2b = residual_with(0.0, 1.0)
        M = np.empty(shape + (2, 2)) if shape else np.empty((2, 2))
        M[..., 0, 0] = e1a - c0a
        M[..., 1, 0] = e1b - c0b
        M[..., 0, 1] = e2a - c0a
        M[..., 1, 1] = e2b - c0b
        rhs = np.stack([-np.broadcast_to(c0a, shape), -np.broadcast_to(c0b, shape)],
                       axis=-1) if shape else np.array([-c0a, -c0b])
        if j == d - 1:
            # the trace-free direction lies in the kernel of M here: solve
            # along the trace direction, measure the trace-free obstruction,
            # and take the trace-free part from the electric Weyl datum
            (tra, trb), (tfa, tfb) = _trace_split(-np.asarray(c0a), -np.asarray(c0b),
                                                  data.a, data.b, n)
            ta, tb = data.a / scale0, data.b / scale0
            pa, pb = residual_with(ta, tb)
            lam_tr = _project_scalar(pa - c0a, pb - c0b, ta, tb)
            xa = tra / lam_tr
            xb = trb / lam_tr
            obstruction = float(max(np.max(np.abs(tfa)), np.max(np.abs(tfb)))) / scale0
            if obstruction > obstruction_tol:
                if d % 2 == 1:
                    log_flag = True
                    stop_order = j - 1
                    break
                raise PreconditionError(
                    f"even-d obstruction {obstruction:.3e} at order d-1: "
                    "boundary data violate the parity structure")
            if data.has_electric():
                ka, kb = _electric_k_coefficient(A, B, data)
                ha = -2.0 * ka / (d - 1.0)
                hb = -2.0 * kb / (d - 1.0)
                _, (tf_ha, tf_hb) = _trace_split(ha, hb, data.a, data.b, n)
                xa = xa + tf_ha
                xb = xb + tf_hb
            elif order > j:
                # cannot continue past d-1 without the datum
                notice = True
                stop_order = j - 1
                break
            else:
                notice = order >= j
                if notice:
                    stop_order = j - 1
                    break
            A.coef[j] = np.asarray(xa)
            B.coef[j] = np.asarray(xb)
            continue
        sol = np.linalg.solve(M, rhs[..., None])[..., 0] if shape else \
            np.linalg.solve(M, rhs)
        A.coef[j] = sol[..., 0] if shape else np.asarray(sol[0])
        B.coef[j] = sol[..., 1] if shape else np.asarray(sol[1])
    ca = [A.coef[j] for j in range(stop_order + 1)]
    cb = [B.coef[j] for j in range(stop_order + 1)]
    parity = 0.0
    for j in range(1, min(stop_order, d - 2) + 1, 2):
        parity = max(parity, float(np.max(np.abs(ca[j]))), float(np.max(np.abs(cb[j]))))
    return FGCoefficientTable(
        d=d, representation=data.representation, order=stop_order,
        coef_a=ca, coef_b=cb, tau_spacing=data.tau_spacing,
        log_term_flag=log_flag, truncation_notice=notice,
        obstruction_norm=obstruction, parity_max_odd=parity)


def _project_scalar(da, db, ta, tb):
    """Scalar lambda with (da, db) = lambda (ta, tb) (least squares)."""
    num = np.sum(np.atleast_1d(da * ta + db * tb))
    den = np.sum(np.atleast_1d(ta * ta + tb * tb))
    return num / den


def _electric_k_coefficient(A, B, data):
    """K^(d-2) from (d-3) E = (d-3) K^(d-2) + [K^c_a K_cb]^(d-3)."""
    d = data.d
    KA = A.dz().scale(-0.5)
    KB = B.dz().scale(-0.5)
    kmixA = KA * A.inverse()
    kmixB = KB * B.inverse()
    SA = (kmixA * KA).coef[d - 3]
    SB = (kmixB * KB).coef[d - 3]
    ea = np.asarray(data.e_a, dtype=float)
    eb = np.asarray(data.e_b, dtype=float)
    ka = ea - SA / (d - 3.0)
    kb = eb - SB / (d - 3.0)
    return ka, kb


# ---------------------------------------------------------------------------
# constraints
# ---------------------------------------------------------------------------

def fg_constraint_residual(table, data=None, z_values=(0.05, 0.1)):
    """Max-norm residuals of the Hamiltonian and momentum constraints on
    the truncated series, evaluated at the given z values."""
    if table.order < 2:
        raise PreconditionError("constraint residuals require order >= 2")
    data = data or table.data()
    A, B = table.series()
    n = table.d - 2
    ham = 0.0
    mom = 0.0
    for z in z_values:
        a = A.eval(z)
        b = B.eval(z)
        ka = -A.dz().eval(z) / 2.0
        kb = -B.dz().eval(z) / 2.0
        kt = ka / a
        ks = kb / b
        trK = kt + n * ks
        KK = kt**2 + n * ks**2
        ric_a, ric_b, scal = _ricci_series(A, B, data)
        # scalar curvature of the slice at numeric z
        R_h = ric_a.eval(z) / a + n * ric_b.eval(z) / b
        # sign of the 1/z term pinned by the exact-AdS oracle (it reflects
        # the orientation convention of K relative to the evolution)
        ham = max(ham, float(np.max(np.abs(
            R_h + KK - trK**2 - 2.0 * (table.d - 2.0) * trK / z))))
        bp = data.dtau(b)
        mom_t = n * (bp / (2 * b) * (kt - ks) - data.dtau(ks))
        mom = max(mom, float(np.max(np.abs(mom_t))))
    return ham, mom


# ---------------------------------------------------------------------------
# electric Weyl extraction from a bulk model with conformal closure
# ---------------------------------------------------------------------------

def electric_weyl(closure_model, z_probes=(0.1, 0.05, 0.025), t=0.0,
                  angles=None):
    """Rescaled electric part of the Weyl tensor of the closure,
    E_ab = lim_{z->0} z^(3-d) C(gbar)_{aZbZ} / (d-3), Richardson
    extrapolated over the probes; returns the isotropic components
    (e_a, e_b) in the (dtau^2, ghat) convention.

    The closure chart must be the Gaussian-normal (z, ...) gauge with the
    z coordinate in slot 1 (the 'fg' charts).  Non-decaying probe
    differences raise a divergence error.
    """
    from .tensor import curvature_at
    d_bulk = closure_model.extras.get("bulk_dimension", closure_model.dimension)
    if d_bulk < 4:
        raise PreconditionError("electric Weyl extraction requires d >= 4")
    if angles is None:
        angles = [np.pi / 2] * (closure_model.dimension - 3) + [0.0]
    vals_a = []
    vals_b = []
    for z in z_probes:
        x = np.array([t, z, *angles])
        bundle = curvature_at(closure_model, closure_model.point(*x))
        C = bundle.weyl
        pref = z ** (3 - d_bulk) / (d_bulk - 3.0)
        vals_a.append(pref * C[0, 1, 0, 1])
        # theta-theta component; ghat_thetatheta = 1 at the equator
        vals_b.append(pref * C[2, 1, 2, 1])
    lim_a, err_a = _checked_limit(vals_a, z_probes, "E_tautau")
    lim_b, err_b = _checked_limit(vals_b, z_probes, "E_sphere")
    return float(lim_a), float(lim_b), max(err_a, err_b)


def _checked_limit(vals, probes, what):
    diffs = [abs(vals[k + 1] - vals[k]) for k in range(len(vals) - 1)]
    scale = max(1e-12, max(abs(v) for v in vals))
    if len(diffs) >= 2 and diffs[-1] > diffs[-2] and \
            diffs[-1] > max(1e-10, 1e-8 * scale):
        raise ExtrapolationDivergenceError(
            f"{what}: probe differences {diffs} do not decay")
    ratio = probes[0] / probes[1]
    return richardson(vals, ratio=ratio, order=2), (diffs[-1] if diffs else 0.0)


# ---------------------------------------------------------------------------
# bulk reconstruction
# ---------------------------------------------------------------------------

def reconstructed_model(table, R=1.0):
    """Bulk model g = (dz^2 + h(z)) / z^2 on the chart (t, z, angles) from a
    coefficient table (R = 1 normalization; other radii are not converted)."""
    from .models import _round_factors, _round_factor_derivs
    from .tensor import SpacetimeModel
    from .errors import DomainError
    if abs(R - 1.0) > 1e-14:
        raise ConstructionError("coefficient tables are in the R = 1 gauge")
    d = table.d
    na = d - 2
    A, B = table.series()
    grid = table.representation == "grid"
    if grid:
        ntau = len(np.atleast_1d(table.coef_a[0]))
        period = ntau * table.tau_spacing

        def sample(series_coef, t):
            # linear interpolation on the periodic tau lattice per coefficient
            idx = (t % period) / table.tau_spacing
            i0 = int(np.floor(idx)) % ntau
            i1 = (i0 + 1) % ntau
            w = idx - np.floor(idx)
            return [(1 - w) * np.atleast_1d(c)[i0] + w * np.atleast_1d(c)[i1]
                    for c in series_coef]
    else:
        def sample(series_coef, t):
            return [float(c) for c in series_coef]

    def ab_at(t, z):
        ca = sample(table.coef_a, t)
        cb = sample(table.coef_b, t)
        a = b = 0.0
        da = db = 0.0
        for j in range(table.order, -1, -1):
            a = a * z + ca[j]
            b = b * z + cb[j]
        for j in range(table.order, 0, -1):
            da = da * z + j * ca[j]
            db = db * z + j * cb[j]
        return a, b, da, db

    def dom(x):
        if not (0.0 < x[1] <= 1.0):
            raise DomainError(f"reconstructed chart requires 0 < z <= 1 (got {x[1]:.6g})")
        if na >= 2:
            from .models import _angles_domain
            _angles_domain(x[2:])

    def metric(x):
        t, z = x[0], x[1]
        a, b, _, _ = ab_at(t, z)
        g = np.zeros((d, d))
        g[0, 0] = a / z**2
        g[1, 1] = 1.0 / z**2
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        for k in range(na):
            g[2 + k, 2 + k] = b * sig[k] / z**2
        return g

    def dmetric(x):
        t, z = x[0], x[1]
        a, b, da, db = ab_at(t, z)
        dg = np.zeros((d, d, d))
        sig = _round_factors(x[2:]) if na >= 1 else np.empty(0)
        # z derivatives
        dg[1, 0, 0] = da / z**2 - 2.0 * a / z**3
        dg[1, 1, 1] = -2.0 / z**3
        for k in range(na):
            dg[1, 2 + k, 2 + k] = (db / z**2 - 2.0 * b / z**3) * sig[k]
        # tau derivatives by central differences of the sampled coefficients
        if grid:
            ht = 1e-5
            ap, bp_, _, _ = ab_at(t + ht, z)
            am, bm, _, _ = ab_at(t - ht, z)
            dg[0, 0, 0] = (ap - am) / (2 * ht) / z**2
            for k in range(na):
                dg[0, 2 + k, 2 + k] = (bp_ - bm) / (2 * ht) / z**2 * sig[k]
        if na >= 2:
            dsig = _round_factor_derivs(x[2:])
            for jj in range(na):
                for k in range(na):
                    dg[2 + jj, 2 + k, 2 + k] = b * dsig[jj, k] / z**2
        return dg

    return SpacetimeModel(
        dimension=d, ads_radius=1.0,
        chart_id=f"fg_metric[d={d},order={table.order},id={id(table)}]:fg",
        metric_fn=metric, dmetric_fn=dmetric, domain_fn=dom,
        conformal_factor_fn=lambda x: x[1],
        family="fg_metric", params={"d": d, "order": table.order},
        extras={"table": table, "bulk_dimension": d})
