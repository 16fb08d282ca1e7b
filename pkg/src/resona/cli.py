"""Command-line interface.

One subcommand per analysis pipeline.  Every run prints a single JSON
summary object on stdout, writes declared outputs atomically, and renders a
figure next to each delimited output unless asked not to.  Exit codes:
0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import __version__
from .geometry import (
    cubic_lattice,
    honeycomb_lattice,
    make_dimer,
    make_honeycomb_pair,
    make_sphere_mesh,
    read_tri,
)
from .reporting import save_figure, write_csv, write_json

CONFIG_SCHEMA = 1


class ConfigError(ValueError):
    pass


def _figure():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def _load_config(path):
    with open(path) as fh:
        cfg = json.load(fh)
    if cfg.get("schema") != CONFIG_SCHEMA:
        raise ConfigError(f"config schema must be {CONFIG_SCHEMA}")
    return cfg


def _merge_config(args, parser):
    """Config values fill in wherever the command line kept the default."""
    if not args.config:
        return args
    cfg = _load_config(args.config)
    defaults = {a.dest: a.default for a in parser._actions}
    for key, value in cfg.items():
        if key in ("schema", "command"):
            continue
        if not hasattr(args, key):
            raise ConfigError(f"unknown config field {key!r}")
        if getattr(args, key) == defaults.get(key):
            setattr(args, key, value)
    return args


def _mesh_from_args(args):
    sources = [args.mesh is not None, args.sphere is not None, args.dimer is not None]
    if sum(sources) != 1:
        raise ConfigError("exactly one geometry source required (--mesh, --sphere or --dimer)")
    if args.mesh:
        if not os.path.exists(args.mesh):
            raise ConfigError(f"mesh file not found: {args.mesh}")
        return read_tri(args.mesh)
    if args.sphere is not None:
        return make_sphere_mesh((0.0, 0.0, 0.0), args.sphere, args.refinement)
    radius, gap = args.dimer
    return make_dimer(radius, gap, args.refinement)


def _out_paths(args, stem):
    out = args.out or f"{stem}.{args.format}"
    return out, os.path.splitext(out)[0] + ".png"


def _emit_summary(payload):
    print(json.dumps(payload, sort_keys=True))


def _maybe_plot(args, render):
    if args.no_plot:
        return None
    plt = _figure()
    fig = render(plt)
    out_png = _out_paths(args, "resona")[1]
    save_figure(fig, out_png)
    plt.close(fig)
    return out_png


# ---------------------------------------------------------------------------
# subcommands


def cmd_capacitance(args):
    from .resonators import capacitance_matrix

    mesh = _mesh_from_args(args)
    cap = capacitance_matrix(mesh)
    out, png = _out_paths(args, "capacitance")
    if args.format == "csv":
        rows = [list(r) for r in cap.C]
        write_csv(out, [f"c_{j}" for j in range(cap.n)], rows)
    else:
        write_json(out, {"C": cap.C.tolist(), "volumes": cap.volumes.tolist()})
    png_path = _maybe_plot(args, lambda plt: _plot_matrix(plt, cap.C))
    _emit_summary(
        {
            "command": "capacitance",
            "C": cap.C.tolist(),
            "volumes": cap.volumes.tolist(),
            "out": out,
            "figure": png_path,
        }
    )


def _plot_matrix(plt, c):
    fig, ax = plt.subplots(figsize=(4, 3.4))
    im = ax.imshow(c, cmap="RdBu_r")
    fig.colorbar(im, ax=ax, label="capacitance entry")
    ax.set_xlabel("resonator")
    ax.set_ylabel("resonator")
    return fig


def cmd_spectrum(args):
    from .resonators import capacitance_matrix, contrast_params, resonances_leading_order

    mesh = _mesh_from_args(args)
    params = contrast_params(args.delta, args.v, args.vb)
    res = resonances_leading_order(capacitance_matrix(mesh), params)
    out, _ = _out_paths(args, "spectrum")
    rows = [
        (n, om.real, om.imag, lam, tau, (res.nus[n].real if res.nus is not None else float("nan")))
        for n, (om, lam, tau) in enumerate(zip(res.omegas, res.lambdas, res.taus))
    ]
    if args.format == "csv":
        write_csv(out, ["mode", "re_omega", "im_omega", "lambda", "tau", "nu"], rows)
    else:
        write_json(
            out,
            {
                "re_omega": res.omegas.real.tolist(),
                "im_omega": res.omegas.imag.tolist(),
                "lambda": res.lambdas.tolist(),
                "tau": res.taus.tolist(),
                "nu": None if res.nus is None else res.nus.tolist(),
            },
        )

    def render(plt):
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        ax.scatter(res.omegas.real, res.omegas.imag, s=18)
        ax.set_xlabel("Re omega (rad/s)")
        ax.set_ylabel("Im omega (rad/s)")
        ax.axhline(0.0, color="0.8", lw=0.6)
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary(
        {
            "command": "spectrum",
            "n_modes": int(res.n),
            "re_omega": res.omegas.real.tolist(),
            "im_omega": res.omegas.imag.tolist(),
            "out": out,
            "figure": png,
        }
    )


def cmd_two_sphere(args):
    from .twosphere import bispherical_frame, capacitance_asymptotics, capacitance_series, close_resonances

    eps_list = args.eps
    rows = []
    for eps in eps_list:
        frame = bispherical_frame(args.radius, eps)
        series = capacitance_series(frame)
        a11, a12 = capacitance_asymptotics(args.radius, eps)
        w1, w2 = close_resonances(args.radius, eps, args.delta, args.vb)
        rows.append((eps, series.c11, series.c12, a11, a12, w1, w2))
    out, _ = _out_paths(args, "two_sphere")
    header = ["eps", "c11_series", "c12_series", "c11_asymptotic", "c12_asymptotic", "omega1", "omega2"]
    if args.format == "csv":
        write_csv(out, header, rows)
    else:
        write_json(out, {"rows": [dict(zip(header, map(float, r))) for r in rows]})

    def render(plt):
        fig, ax = plt.subplots(figsize=(4.4, 3.4))
        arr = np.array(rows)
        ax.loglog(arr[:, 0], arr[:, 1], "o-", label="c11 series")
        ax.loglog(arr[:, 0], -arr[:, 2], "s-", label="-c12 series")
        ax.loglog(arr[:, 0], arr[:, 3], "--", label="c11 asymptotic")
        ax.set_xlabel("gap")
        ax.set_ylabel("capacitance entries")
        ax.legend(fontsize=7)
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary({"command": "two-sphere", "rows": len(rows), "out": out, "figure": png})


def cmd_band(args):
    from .bands import CUBIC_VERTICES, band_sweep, brillouin_path

    unknown = [v for v in args.path if v not in CUBIC_VERTICES]
    if unknown:
        raise ConfigError(
            f"unknown path vertices {unknown}; cubic-lattice names are "
            f"{sorted(CUBIC_VERTICES)}"
        )
    mesh = make_sphere_mesh((0.0, 0.0, 0.0), args.radius, args.refinement)
    lattice = cubic_lattice(1.0)
    pts, labels = brillouin_path(args.path, args.n, offset=args.tol)
    table = band_sweep(mesh, lattice, pts, args.delta, args.vb, labels, n_workers=args.threads)
    out, _ = _out_paths(args, "band")
    header = ["alpha_1", "alpha_2", "alpha_3", "cap_alpha", "omega_1"]
    rows = [
        (a[0], a[1], a[2], c, w)
        for a, c, w in zip(table.alphas, table.caps, table.omegas)
    ]
    if args.format == "csv":
        write_csv(out, header, rows)
    else:
        write_json(out, {"rows": [dict(zip(header, map(float, r))) for r in rows]})

    def render(plt):
        fig, ax = plt.subplots(figsize=(4.6, 3.4))
        x = np.arange(len(table))
        ax.plot(x, table.omegas, "o-", ms=3)
        marks = [i for i, lab in enumerate(table.labels) if lab]
        ax.set_xticks(marks)
        ax.set_xticklabels([table.labels[i] for i in marks])
        ax.set_ylabel("omega_1 (rad/s)")
        ax.set_xlabel("Brillouin path")
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary(
        {
            "command": "band",
            "rows": len(table),
            "omega_max": float(table.omegas.max()),
            "argmax_alpha": table.alphas[int(np.argmax(table.omegas))].tolist(),
            "out": out,
            "figure": png,
        }
    )


def cmd_honeycomb(args):
    from .bands import dirac_fit

    mesh = make_honeycomb_pair(args.L, args.radius, args.sides)
    lattice = honeycomb_lattice(args.L)
    fit = dirac_fit(mesh, lattice, args.delta, args.vb)
    out, _ = _out_paths(args, "honeycomb")
    payload = {
        "omega_star": fit.omega_star,
        "slope": fit.slope,
        "c": [fit.c.real, fit.c.imag],
        "lambda0": fit.lambda0,
        "r_squared": fit.r_squared,
        "window": fit.window,
        "branch_slopes": list(fit.branch_slopes),
    }
    if args.format == "csv":
        write_csv(out, list(payload.keys()), [[
            payload["omega_star"], payload["slope"], complex(*payload["c"]),
            payload["lambda0"], payload["r_squared"], payload["window"],
            payload["branch_slopes"][0],
        ]])
    else:
        write_json(out, payload)

    def render(plt):
        from .bands import dirac_point, honeycomb_capacitance
        from .kernels import Ewald2D

        ew = Ewald2D(lattice)
        a_star = dirac_point(lattice)
        ts = np.linspace(-fit.window, fit.window, 17)
        lo, hi = [], []
        for t in ts:
            c = honeycomb_capacitance(mesh, lattice, a_star + np.array([t, 0.0]), ew)
            c1, c2 = c[0, 0].real, abs(c[0, 1])
            area = mesh.areas[0]
            lo.append(np.sqrt(args.delta * (c1 - c2) / area) * args.vb)
            hi.append(np.sqrt(args.delta * (c1 + c2) / area) * args.vb)
        fig, ax = plt.subplots(figsize=(4.2, 3.4))
        ax.plot(ts, lo, "o-", ms=3, label="band 1")
        ax.plot(ts, hi, "s-", ms=3, label="band 2")
        ax.set_xlabel("alpha offset from the zone corner")
        ax.set_ylabel("omega (rad/s)")
        ax.legend(fontsize=7)
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary({"command": "honeycomb", **payload, "out": out, "figure": png})


def cmd_ssh(args):
    from .ssh import ChainGeometry, chain_bands, winding_and_zak

    geom = ChainGeometry(args.L, args.d, args.radius, args.refinement)
    report = winding_and_zak(geom, args.samples, n_workers=args.threads)
    lam1, lam2, om1, om2, _ = chain_bands(geom, report.alphas, args.delta, args.vb)
    out, _ = _out_paths(args, "ssh")
    header = ["alpha", "ReC12", "ImC12", "lambda1", "lambda2", "omega1", "omega2"]
    rows = [
        (a, c.real, c.imag, l1, l2, w1, w2)
        for a, c, l1, l2, w1, w2 in zip(
            report.alphas, report.couplings, lam1, lam2, om1, om2
        )
    ]
    if args.format == "csv":
        write_csv(out, header, rows)
    else:
        write_json(out, {"rows": [dict(zip(header, map(float, r))) for r in rows]})
    topo_out = os.path.splitext(out)[0] + "_topology.json"
    write_json(
        topo_out,
        {
            "winding": report.winding,
            "zak": report.zak,
            "gap": report.gap,
            "gapped": report.gapped,
            "d": args.d,
            "d_prime": geom.separation_across,
        },
    )

    def render(plt):
        fig, axes = plt.subplots(1, 2, figsize=(7.2, 3.2))
        axes[0].plot(report.couplings.real, report.couplings.imag, "o-", ms=3)
        axes[0].plot([0], [0], "k+", ms=10)
        axes[0].set_xlabel("Re coupling")
        axes[0].set_ylabel("Im coupling")
        axes[0].set_title(f"winding {report.winding}")
        axes[1].plot(report.alphas, om1, "o-", ms=3, label="band 1")
        axes[1].plot(report.alphas, om2, "s-", ms=3, label="band 2")
        axes[1].set_xlabel("alpha")
        axes[1].set_ylabel("omega (rad/s)")
        axes[1].legend(fontsize=7)
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary(
        {
            "command": "ssh",
            "zak": report.zak,
            "winding": report.winding,
            "gap": report.gap,
            "out": out,
            "topology": topo_out,
            "figure": png,
        }
    )


def cmd_effective(args):
    from .effective import DimerMediumSpec, double_negative_window, m2_zero_threshold

    spec = DimerMediumSpec(
        mu=args.mu,
        lam=1.0,
        c11=args.c11,
        c12=args.c12,
        dipole_weight=args.dipole_weight,
        volume=args.volume,
        density=args.density,
        gap_parameter=args.gap_parameter,
        v_b=args.vb,
    )
    lams = np.linspace(args.lam_min, args.lam_max, args.n)
    rows = []
    for lam in lams:
        m1, m2, flag = double_negative_window(spec, args.k, lam)
        rows.append((args.k, lam, m2, float(np.linalg.eigvalsh(m1).min()), int(flag)))
    out, _ = _out_paths(args, "effective")
    header = ["omega", "lambda", "re_m2", "m1_eigmin", "both_negative"]
    if args.format == "csv":
        write_csv(out, header, rows)
    else:
        write_json(out, {"rows": [dict(zip(header, map(float, r))) for r in rows]})

    def render(plt):
        arr = np.array(rows)
        fig, ax = plt.subplots(figsize=(4.4, 3.4))
        ax.plot(arr[:, 1], arr[:, 2], label="scalar coefficient")
        ax.plot(arr[:, 1], arr[:, 3], label="matrix min eigenvalue")
        ax.axhline(0.0, color="0.7", lw=0.7)
        ax.set_xlabel("number-density scale")
        ax.legend(fontsize=7)
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary(
        {
            "command": "effective",
            "threshold": m2_zero_threshold(spec, args.k),
            "out": out,
            "figure": png,
        }
    )


def cmd_cochlea(args):
    from .cochlea import decompose, design_graded_array, load_wav, make_kernels

    radii, mesh, res = design_graded_array(
        n_channels=args.channels, f_low=args.f_low, f_high=args.f_high,
        refinement=args.refinement,
    )
    if args.wav:
        signal, fs = load_wav(args.wav)
    else:
        fs = args.fs
        t = np.arange(int(args.duration * fs)) / fs
        signal = np.sin(2.0 * np.pi * args.tone * t)
    bank = make_kernels(res, fs)
    dec = decompose(signal, bank, fs)
    out, _ = _out_paths(args, "cochlea")
    stride = max(1, args.stride)
    cols = dec.coefficients[:, ::stride]
    times = np.arange(dec.coefficients.shape[1])[::stride] / fs
    if args.format == "csv":
        header = ["t"] + [f"a_{n + 1}" for n in range(dec.n_channels)]
        rows = np.column_stack([times, cols.T])
        write_csv(out, header, rows)
    elif args.format == "bin":
        from .reporting import atomic_write_bytes

        atomic_write_bytes(out, np.ascontiguousarray(cols.T, dtype="<f8").tobytes())
    else:
        write_json(out, {"t": times.tolist(), "a": cols.tolist()})
    report_out = os.path.splitext(out)[0] + "_spectrum.json"
    write_json(
        report_out,
        {
            "radii": radii.tolist(),
            "re_omega": res.omegas.real.tolist(),
            "im_omega": res.omegas.imag.tolist(),
            "f_centers": (res.omegas.real / (2 * np.pi)).tolist(),
            "extent": float(mesh.vertices[:, 0].max() - mesh.vertices[:, 0].min()),
        },
    )

    def render(plt):
        fig, axes = plt.subplots(1, 2, figsize=(7.4, 3.2))
        axes[0].scatter(res.omegas.real / (2 * np.pi), res.omegas.imag, s=14)
        axes[0].set_xlabel("Re f (Hz)")
        axes[0].set_ylabel("Im omega (rad/s)")
        extent = [0, dec.coefficients.shape[1] / fs, 1, dec.n_channels]
        axes[1].imshow(
            np.abs(dec.coefficients[::-1]), aspect="auto", extent=extent, cmap="magma"
        )
        axes[1].set_xlabel("t (s)")
        axes[1].set_ylabel("channel")
        fig.tight_layout()
        return fig

    png = _maybe_plot(args, render)
    _emit_summary(
        {
            "command": "cochlea",
            "channels": int(dec.n_channels),
            "f_centers": (res.omegas.real / (2 * np.pi)).tolist(),
            "out": out,
            "spectrum": report_out,
            "figure": png,
        }
    )


# ---------------------------------------------------------------------------


def _add_common(p):
    p.add_argument("--out", help="output file (default: <command>.<format>)")
    p.add_argument("--format", choices=("csv", "json", "bin"), default="csv")
    p.add_argument("--tol", type=float, default=1e-3, help="path/series tolerance")
    p.add_argument(
        "--threads",
        type=int,
        default=int(os.environ.get("RESONA_THREADS", "1")),
        help="worker pool size for sweeps (default: RESONA_THREADS or 1)",
    )
    p.add_argument("--config", help="JSON config file (schema 1); flags override")
    p.add_argument("--no-plot", action="store_true", help="skip figure rendering")


def _add_geometry(p):
    p.add_argument("--mesh", help="triangle mesh file")
    p.add_argument("--sphere", type=float, help="sphere radius")
    p.add_argument("--dimer", type=float, nargs=2, metavar=("R", "GAP"))
    p.add_argument("--refinement", type=int, default=2)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="resona",
        description="capacitance-matrix numerics for high-contrast subwavelength resonators",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("capacitance", help="capacitance matrix of a finite system")
    _add_common(p)
    _add_geometry(p)
    p.set_defaults(func=cmd_capacitance, subparser=p)

    p = sub.add_parser("spectrum", help="subwavelength resonances of a finite system")
    _add_common(p)
    _add_geometry(p)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--v", type=float, default=1.0)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_spectrum, subparser=p)

    p = sub.add_parser("two-sphere", help="bispherical two-sphere closed forms")
    _add_common(p)
    p.add_argument("--radius", type=float, default=1.0)
    p.add_argument("--eps", type=float, nargs="+", default=[0.5, 0.25, 0.1, 0.05])
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_two_sphere, subparser=p)

    p = sub.add_parser("band", help="first-band sweep for the cubic lattice")
    _add_common(p)
    p.add_argument("--path", nargs="+", default=["G", "X", "M", "G"])
    p.add_argument("--n", type=int, default=16, help="samples per leg")
    p.add_argument("--radius", type=float, default=0.25)
    p.add_argument("--refinement", type=int, default=1)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_band, subparser=p)

    p = sub.add_parser("honeycomb", help="Dirac-cone fit for the honeycomb lattice")
    _add_common(p)
    p.add_argument("--L", type=float, default=1.0)
    p.add_argument("--radius", type=float, default=0.12)
    p.add_argument("--sides", type=int, default=48)
    p.add_argument("--delta", type=float, default=1e-4)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_honeycomb, subparser=p)

    p = sub.add_parser("ssh", help="dimer-chain bands and topology")
    _add_common(p)
    p.add_argument("--d", type=float, required=True, help="intra-cell separation")
    p.add_argument("--L", type=float, default=1.0, help="chain period")
    p.add_argument("--radius", type=float, default=0.05)
    p.add_argument("--refinement", type=int, default=0)
    p.add_argument("--samples", type=int, default=32)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_ssh, subparser=p)

    p = sub.add_parser("effective", help="double-negative window sweep")
    _add_common(p)
    p.add_argument("--mu", type=float, default=1.0)
    p.add_argument("--c11", type=float, default=9.0)
    p.add_argument("--c12", type=float, default=-3.5)
    p.add_argument("--dipole-weight", type=float, default=5.0)
    p.add_argument("--volume", type=float, default=2.0)
    p.add_argument("--density", type=float, default=1.0)
    p.add_argument("--gap-parameter", type=float, default=1.0)
    p.add_argument("--k", type=float, default=1.0)
    p.add_argument("--lam-min", type=float, default=0.0)
    p.add_argument("--lam-max", type=float, default=2.0)
    p.add_argument("--n", type=int, default=41)
    p.add_argument("--vb", type=float, default=1.0)
    p.set_defaults(func=cmd_effective, subparser=p)

    p = sub.add_parser("cochlea", help="graded-array filter bank decomposition")
    _add_common(p)
    p.add_argument("--wav", help="PCM16 mono WAV input")
    p.add_argument("--tone", type=float, default=1000.0, help="synthetic tone (Hz)")
    p.add_argument("--duration", type=float, default=0.25)
    p.add_argument("--fs", type=float, default=44100.0)
    p.add_argument("--channels", type=int, default=22)
    p.add_argument("--f-low", type=float, default=500.0)
    p.add_argument("--f-high", type=float, default=10000.0)
    p.add_argument("--refinement", type=int, default=0)
    p.add_argument("--stride", type=int, default=64, help="coefficient output stride")
    p.set_defaults(func=cmd_cochlea, subparser=p)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args = _merge_config(args, args.subparser)
        args.func(args)
    except (ConfigError, FileNotFoundError, json.JSONDecodeError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"configuration error in {args.command}: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure in {args.command}: {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
