"""Matplotlib rendering of the report artifacts (written to files next to
the delimited output; no interactive backends)."""

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

plt.rc("figure", figsize=(6.0, 4.0), dpi=130)
plt.rc("font", size=9)
plt.rc("axes", linewidth=0.6, grid=True)
plt.rc("grid", alpha=0.25, linewidth=0.4)
plt.rc("lines", linewidth=1.1)


def save(fig, path):
    fig.savefig(path, bbox_inches="tight")
    plt.close(fig)


def penrose_figure(polylines, path, title="conformal diagram"):
    """polylines: list of (label, tau array, chi array)."""
    fig, ax = plt.subplots()
    for label, tau, chi in polylines:
        style = "-" if "boundary" in label else "--"
        ax.plot(chi, tau, style, label=label)
    ax.set_xlabel(r"conformal radial coordinate $\chi$")
    ax.set_ylabel(r"$\tau$")
    ax.set_title(title)
    ax.legend(loc="best", fontsize=7)
    save(fig, path)


def delay_figure(report, path):
    fig, ax = plt.subplots()
    b = [row[0] for row in report.rows()]
    dt = [row[1] for row in report.rows()]
    ax.plot(b, dt, "o", ms=3)
    ax.axhline(0.0, color="k", lw=0.6)
    ax.set_xlabel("impact parameter $b$")
    ax.set_ylabel(r"delay $\Delta\tau$ past the antipodal")
    ax.set_title(f"gravitational time delay ({report.model_key})")
    save(fig, path)


def fg_decay_figure(table, path):
    fig, ax = plt.subplots()
    js = np.arange(table.order + 1)
    mag_a = [float(np.max(np.abs(np.atleast_1d(c)))) for c in table.coef_a]
    mag_b = [float(np.max(np.abs(np.atleast_1d(c)))) for c in table.coef_b]
    ax.semilogy(js, np.maximum(mag_a, 1e-18), "o-", label=r"$|h^{(j)}_{\tau\tau}|$")
    ax.semilogy(js, np.maximum(mag_b, 1e-18), "s--", label=r"$|h^{(j)}_{S}|$")
    ax.set_xlabel("order $j$")
    ax.set_ylabel("coefficient magnitude")
    ax.set_title(f"near-boundary coefficients (d={table.d})")
    ax.legend()
    save(fig, path)


def kappa_figure(result, path):
    fig, ax = plt.subplots()
    ax.plot(result["distances"], result["kappa"], "o-", label=r"$\kappa$")
    ax.axhline(result["kappa_limit"], color="k", lw=0.6, ls=":",
               label=f"limit {result['kappa_limit']:+.3f}")
    ax.set_xlabel("distance to the tip")
    ax.set_ylabel(r"$\kappa_\pm$")
    ax.set_title(f"surface gravity ({result['side']} horizon)")
    ax.invert_xaxis()
    ax.legend()
    save(fig, path)


def trajectory_figure(traj, path, cols=(0, 1)):
    fig, ax = plt.subplots()
    lams, ys = traj.samples(400)
    ax.plot(ys[:, cols[1]], ys[:, cols[0]])
    ax.set_xlabel(f"$x^{cols[1]}$")
    ax.set_ylabel(f"$x^{cols[0]}$")
    ax.set_title("geodesic trajectory")
    save(fig, path)


def fermat_figure(thetas, taus, path):
    fig, ax = plt.subplots()
    ang = np.arctan2(thetas[:, 1], thetas[:, 0])
    order = np.argsort(ang)
    ax.plot(np.asarray(ang)[order], np.asarray(taus)[order], "o-")
    ax.set_xlabel("generator azimuth")
    ax.set_ylabel(r"Fermat potential $\tau_+$")
    save(fig, path)
