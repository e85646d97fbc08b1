"""Shared numerical helpers: finite differences, Richardson extrapolation,
unit-sphere utilities and deterministic text output.

Finite-difference convention (used everywhere a model has no analytic
derivatives): central second-order stencils with per-coordinate step
``h_i = max(h0, h0*|x_i|)``, ``h0 = 1e-5``.  Second derivatives are nested
first derivatives with a larger outer step.
"""

import numpy as np

from .errors import ExtrapolationDivergenceError

FD_STEP = 1e-5
FD_OUTER_STEP = 1e-4


def fd_steps(x, h0=FD_STEP):
    """Per-coordinate central-difference steps max(h0, h0*|x_i|)."""
    x = np.asarray(x, dtype=float)
    return np.maximum(h0, h0 * np.abs(x))


def partial(f, x, i, h=None, h0=FD_STEP):
    """Central difference of f (scalar or array valued) along coordinate i."""
    x = np.asarray(x, dtype=float)
    if h is None:
        h = max(h0, h0 * abs(x[i]))
    xp = x.copy()
    xm = x.copy()
    xp[i] += h
    xm[i] -= h
    return (np.asarray(f(xp)) - np.asarray(f(xm))) / (2.0 * h)


def gradient(f, x, h0=FD_STEP):
    """All first partials of f, stacked along a new leading axis."""
    x = np.asarray(x, dtype=float)
    return np.stack([partial(f, x, i, h0=h0) for i in range(len(x))])


def richardson(values, ratio=2.0, order=1):
    """Limit of a sequence f(eps_k) with eps_{k+1} = eps_k / ratio.

    One elimination pass of the leading O(eps^order) error term per level.
    `values` is ordered from the coarsest eps to the finest.
    """
    v = [np.asarray(val, dtype=float) for val in values]
    p = order
    while len(v) > 1:
        r = ratio**p
        v = [(r * v[k + 1] - v[k]) / (r - 1.0) for k in range(len(v) - 1)]
        p += 1
    return v[0]


def richardson_checked(values, ratio=2.0, order=1, what="sequence"):
    """Richardson limit plus a crude convergence certificate.

    Raises ExtrapolationDivergenceError when successive differences grow,
    i.e. the sequence fails the ratio test.
    """
    diffs = [float(np.max(np.abs(np.asarray(values[k + 1]) - np.asarray(values[k]))))
             for k in range(len(values) - 1)]
    if len(diffs) >= 2 and diffs[-1] > 2.0 * diffs[-2] and diffs[-1] > 1e-12:
        raise ExtrapolationDivergenceError(
            f"{what}: differences {diffs} do not decay; extrapolation rejected")
    return richardson(values, ratio=ratio, order=order), (diffs[-1] if diffs else 0.0)


# ---------------------------------------------------------------------------
# unit-sphere helpers (boundary points live on R x S^(d-2))
# ---------------------------------------------------------------------------

def normalize(v):
    v = np.asarray(v, dtype=float)
    n = np.linalg.norm(v)
    if n == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return v / n


def sphere_distance(e1, e2):
    """Great-circle distance on the unit sphere, in [0, pi]."""
    c = float(np.clip(np.dot(normalize(e1), normalize(e2)), -1.0, 1.0))
    return float(np.arccos(c))


def rotation_taking(a, b):
    """Rotation matrix R with R a = b for unit vectors a, b (any dimension).

    Rotates in the plane spanned by a and b and fixes its orthogonal
    complement; for a = -b a 180-degree rotation in an arbitrary plane
    containing a is returned.
    """
    a = normalize(a)
    b = normalize(b)
    n = len(a)
    c = float(np.dot(a, b))
    if c > 1.0 - 1e-14:
        return np.eye(n)
    if c < -1.0 + 1e-14:
        # 180-degree rotation in the plane spanned by a and any unit u ⟂ a
        k = int(np.argmin(np.abs(a)))
        u = np.zeros(n)
        u[k] = 1.0
        u = normalize(u - np.dot(u, a) * a)
        return np.eye(n) - 2.0 * (np.outer(a, a) + np.outer(u, u))
    u = a
    w = normalize(b - c * a)
    s = float(np.sqrt(max(0.0, 1.0 - c * c)))
    R = np.eye(n)
    R += (c - 1.0) * (np.outer(u, u) + np.outer(w, w))
    R += s * (np.outer(w, u) - np.outer(u, w))
    return R


def sphere_point(angles):
    """Unit vector in R^(n+1) from polar angles (theta_1..theta_{n-1}, phi).

    Nested spherical convention: e = (sin t1 sin t2 ... cos phi-chain), with
    the LAST Cartesian component cos(theta_1).  For n = 1 (circle) angles is
    just (phi,) and e = (cos phi, sin phi).
    """
    angles = np.atleast_1d(np.asarray(angles, dtype=float))
    n = len(angles) + 1
    e = np.zeros(n)
    s = 1.0
    for k, th in enumerate(angles[:-1]):
        e[n - 1 - k] = s * np.cos(th)
        s *= np.sin(th)
    phi = angles[-1]
    e[1] = s * np.sin(phi)
    e[0] = s * np.cos(phi)
    return e


def sphere_angles(e):
    """Inverse of sphere_point (principal branches)."""
    e = normalize(e)
    n = len(e)
    angles = []
    s = 1.0
    for k in range(n - 2):
        c = np.clip(e[n - 1 - k] / s if s > 1e-300 else 1.0, -1.0, 1.0)
        th = float(np.arccos(c))
        angles.append(th)
        s *= np.sin(th)
    angles.append(float(np.arctan2(e[1], e[0])))
    return np.array(angles)


def fibonacci_directions(n, dim):
    """n reasonably uniform unit vectors on S^(dim-1), deterministic.

    dim = 2 gives equally spaced points on the circle; dim = 3 the Fibonacci
    sphere; higher dims fall back to a seeded Gaussian draw.
    """
    if dim == 2:
        phis = 2.0 * np.pi * np.arange(n) / n
        return np.stack([np.cos(phis), np.sin(phis)], axis=1)
    if dim == 3:
        k = np.arange(n) + 0.5
        cos_t = 1.0 - 2.0 * k / n
        sin_t = np.sqrt(1.0 - cos_t**2)
        phi = np.pi * (1.0 + 5.0**0.5) * k
        return np.stack([sin_t * np.cos(phi), sin_t * np.sin(phi), cos_t], axis=1)
    rng = np.random.Generator(np.random.Philox(key=1234321))
    v = rng.normal(size=(n, dim))
    return v / np.linalg.norm(v, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# deterministic text rendering (CSV / JSON artifacts)
# ---------------------------------------------------------------------------

def fmt17(x):
    """Render a float with 17 significant digits (bit-exact round trip)."""
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return "%.17g" % float(x)


def json_canonical(obj, indent=0):
    """Minimal deterministic JSON writer: sorted keys, fmt17 floats, UTF-8.

    The standard json module renders floats via repr; the artifacts here pin
    17 significant digits instead, so serialization is stable across Python
    versions and bit-exact on round trip.
    """
    pad = " " * indent
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = []
        for k in sorted(obj):
            items.append('%s  "%s": %s' % (pad, k, json_canonical(obj[k], indent + 2)))
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        seq = list(np.asarray(obj).tolist()) if isinstance(obj, np.ndarray) else list(obj)
        if not seq:
            return "[]"
        items = [pad + "  " + json_canonical(v, indent + 2) for v in seq]
        return "[\n" + ",\n".join(items) + "\n" + pad + "]"
    if obj is None:
        return "null"
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return fmt17(float(obj))
    return '"' + str(obj).replace("\\", "\\\\").replace('"', '\\"') + '"'


def write_csv(path, header, rows):
    """Comma-separated, '.' decimals, header row, '\\n' line endings."""
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(fmt17(v) if isinstance(v, (float, np.floating))
                              else str(v) for v in row))
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def write_json(path, obj):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(json_canonical(obj) + "\n")


def philox(seed, key=0):
    """Counter-based generator: deterministic and splittable per (seed, key)."""
    return np.random.Generator(np.random.Philox(key=np.uint64(seed) ^ (np.uint64(key) << np.uint64(32))))
