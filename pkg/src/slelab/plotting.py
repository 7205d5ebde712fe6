"""Report figures.  PNG always, SVG on request; metadata is pinned so that
reruns give identical files."""
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

plt.rcParams.update({
    "figure.figsize": (5.0, 3.6),
    "figure.dpi": 120,
    "font.size": 9,
    "axes.linewidth": 0.6,
    "lines.linewidth": 0.9,
    "savefig.bbox": "tight",
    "svg.hashsalt": "slelab",
    "svg.fonttype": "none",
})


def save(fig, stem, svg=False):
    """Write stem.png (and stem.svg); returns the list of paths."""
    out = [f"{stem}.png"]
    fig.savefig(out[0], metadata={"Software": None})
    if svg:
        out.append(f"{stem}.svg")
        fig.savefig(out[1], metadata={"Date": None, "Creator": None})
    plt.close(fig)
    return out


def trace_figure(pts, title=""):
    fig, ax = plt.subplots()
    ax.plot(pts.real, pts.imag, "k-")
    ax.axhline(0, color="0.6", lw=0.5)
    ax.set_aspect("equal")
    ax.set_title(title)
    return fig


def driving_figure(times, values, kappa=None):
    fig, ax = plt.subplots()
    ax.step(times, np.concatenate([[0.0], values]), where="post", color="k")
    ax.set_xlabel("capacity time")
    ax.set_ylabel("w(t)")
    if kappa is not None:
        ax.set_title(f"kappa = {kappa:g}")
    return fig


def martingale_figure(table):
    fig, ax = plt.subplots()
    t = np.asarray(table.checkpoints)
    ax.errorbar(t, table.mean, yerr=3 * np.asarray(table.stderr), fmt="o-", color="k",
                capsize=3)
    ax.axhline(table.r0, color="tab:red", lw=0.6, ls="--", label="r_0")
    ax.set_xscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("E[r_t; alive]")
    ax.legend(frameon=False)
    return fig


def annulus_figure(sol, levels=9):
    s, th, u = sol.s, sol.theta, sol.u
    S, T = np.meshgrid(s, th, indexing="ij")
    Z = sol.domain.center + np.exp(S + 1j * T)
    fig, ax = plt.subplots()
    for c, col in ((sol.domain.outer, "k"), (sol.domain.inner, "k")):
        p = c.points(512)
        p = np.append(p, p[:1])
        ax.plot(p.real, p.imag, color=col)
    ax.contour(Z.real, Z.imag, np.where(np.isfinite(u), u, np.nan),
               levels=np.linspace(0, 1, levels + 2)[1:-1], linewidths=0.5, cmap="viridis")
    ax.set_aspect("equal")
    ax.set_title(f"t = {sol.t:.6f}")
    return fig


def loop_figure(pts, coords=None):
    fig, ax = plt.subplots()
    p = np.append(pts, pts[:1])
    ax.plot(p.real, p.imag, "k-")
    ax.plot([0], [0], "k+")
    ax.set_aspect("equal")
    if coords is not None:
        ax.set_title(f"A = {coords.A:.6f}, B = {coords.B:.6f}, AB = {coords.AB:.6f}")
    return fig


def ising_figure(config, path):
    W, H = config.shape[0] - 2, config.shape[1] - 2
    fig, ax = plt.subplots(figsize=(4.2, 4.2 * H / W))
    ax.imshow(config.T, origin="lower", cmap="gray_r", vmin=-1, vmax=1,
              extent=(-0.5, W + 1.5, -0.5, H + 1.5), interpolation="nearest")
    c = path.corners - (0.5 + 0.5j)
    ax.plot(c.real, c.imag, color="tab:red", lw=1.0)
    ax.set_xticks([])
    ax.set_yticks([])
    return fig


def variogram_figure(result):
    fig, ax = plt.subplots()
    ax.plot(result.lags, result.variogram, "k.", ms=3)
    b, a = np.polyfit(result.lags, result.variogram, 1)
    ax.plot(result.lags, a + b * result.lags, color="tab:red", lw=0.6)
    ax.set_xlabel("lag")
    ax.set_ylabel("mean squared increment")
    return fig


def schiffer_figure(res):
    fig, ax = plt.subplots()
    ax.plot(res.t, res.rho, "ko")
    tt = np.linspace(0, res.t.max(), 50)
    ax.plot(tt, res.target * tt, color="tab:red", lw=0.6, label="S f(0) / 12 * t")
    ax.set_xlabel("t")
    ax.set_ylabel("rho(t)")
    ax.legend(frameon=False)
    return fig
