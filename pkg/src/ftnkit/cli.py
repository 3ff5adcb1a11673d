"""``ftnkit`` command line.

Every command writes CSV (header row, LF endings) plus a ``manifest.json``
next to its output. Exit codes: 0 ok, 2 usage or config error, 3 runtime
failure.
"""

from __future__ import annotations

import json
import os
import re
import sys
from pathlib import Path

import click
import numpy as np

from . import __version__
from . import io as _io
from .allocation import waterfill
from .capacity import EXPRESSIONS, CapacityParams, capacity_curve
from .isi import FtnParams, composite_taps, subcarrier_gains
from .kernels import BACKEND
from .loading import (
    DEFAULT_GRID_DB,
    DEFAULT_PACKET_BITS,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    BaselineCurve,
    ThresholdTable,
    baseline_throughput,
    build_thresholds,
    reference_table,
)
from .modem import ALL_SCHEMES, ModScheme
from .pulses import PulseFamily, PulseSpec, sample

EXIT_USAGE = 2
EXIT_RUNTIME = 3
THREADS_ENV = "FTNKIT_THREADS"

TAU = click.FloatRange(0.0, 1.0, min_open=True)
ALPHA = click.FloatRange(0.0, 1.0)
POSITIVE = click.FloatRange(0.0, min_open=True)


def parse_grid(text: str) -> list[float]:
    """``"a:b:step"`` (inclusive) or a comma list of numbers."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, step = (float(x) for x in text.split(":"))
            if step <= 0:
                raise ValueError
            n = int(np.floor((b - a) / step + 1e-9)) + 1
            if n < 1:
                raise ValueError
            return [round(a + k * step, 10) for k in range(n)]
        vals = [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise click.BadParameter(f"{text!r} is not 'start:stop:step' or a comma list") from None
    if not vals:
        raise click.BadParameter("empty grid")
    return vals


class GridType(click.ParamType):
    name = "GRID"

    def convert(self, value, param, ctx):
        if isinstance(value, list):
            return value
        try:
            return parse_grid(value)
        except click.BadParameter as exc:
            self.fail(exc.message, param, ctx)


GRID = GridType()


def _threads(value):
    if value is not None:
        return value
    env = os.environ.get(THREADS_ENV)
    try:
        return max(1, int(env)) if env else 1
    except ValueError:
        raise click.UsageError(f"{THREADS_ENV}={env!r} is not an integer") from None


def _manifest(out_dir: Path, command: str, config: dict, outputs, timestamp):
    _io.write_manifest(out_dir / "manifest.json", command, config,
                       [Path(o).name for o in outputs], timestamp)


threads_option = click.option(
    "--threads", type=click.IntRange(1), default=None,
    help=f"Worker threads (default: ${THREADS_ENV} or 1).")
timestamp_option = click.option(
    "--timestamp", default=None,
    help="Pin the manifest timestamp so repeated runs are byte-identical.")
out_option = click.option(
    "--out", "out_dir", type=click.Path(file_okay=False, path_type=Path), required=True,
    help="Output directory (created if missing).")


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="ftnkit")
def cli():
    """Faster-than-Nyquist OFDM toolkit: channel model, capacity, water-filling
    and adaptive loading experiments."""


# -- pulse ---------------------------------------------------------------------

@cli.group()
def pulse():
    """Pulse utilities."""


@pulse.command("dump")
@click.option("--family", type=click.Choice([f.value for f in PulseFamily]), default="srrc",
              show_default=True, help="Pulse family.")
@click.option("--alpha", type=ALPHA, default=0.3, show_default=True, help="Roll-off.")
@click.option("--T", "T", type=POSITIVE, default=1.0, show_default=True, help="Symbol period.")
@click.option("--span", type=click.FloatRange(1.0), default=16.0, show_default=True,
              help="Half-width in periods.")
@click.option("--step", type=POSITIVE, default=0.05, show_default=True,
              help="Time step as a fraction of T.")
@click.option("--fmax", type=POSITIVE, default=2.0, show_default=True,
              help="Spectrum grid limit in units of 1/T.")
@click.option("--points", type=click.IntRange(2), default=801, show_default=True,
              help="Spectrum grid size.")
@out_option
@timestamp_option
def pulse_dump(family, alpha, T, span, step, fmax, points, out_dir, timestamp):
    """Write the sampled pulse, its composite and the composite spectrum."""
    p = PulseSpec(family, alpha, T, span)
    t, x = sample(p, step * T)
    hc = p.composite_time(t)
    f = np.linspace(-fmax / T, fmax / T, points)
    H = p.composite_spectrum(f)
    out_dir.mkdir(parents=True, exist_ok=True)
    tf, sf = out_dir / "pulse_time.csv", out_dir / "pulse_spectrum.csv"
    _io.write_csv(tf, ["t", "pulse", "composite"], zip(t, x, hc))
    _io.write_csv(sf, ["f", "composite_spectrum"], zip(f, H))
    cfg = dict(family=p.family.value, alpha=alpha, T=T, span=span, step=step,
               fmax=fmax, points=points)
    _manifest(out_dir, "pulse dump", cfg, [tf, sf], timestamp)


# -- channel -------------------------------------------------------------------

@cli.command()
@click.option("--family", type=click.Choice(["srrc", "rect"]), default="srrc", show_default=True,
              help="Transmit pulse.")
@click.option("--alpha", type=ALPHA, default=0.3, show_default=True, help="Roll-off.")
@click.option("--tau", type=TAU, default=0.8, show_default=True, help="Acceleration factor.")
@click.option("--T", "T", type=POSITIVE, default=1.0, show_default=True, help="Symbol period.")
@click.option("--N", "N", type=click.IntRange(2), default=1024, show_default=True,
              help="DFT size (power of two).")
@click.option("--span", type=click.FloatRange(1.0), default=16.0, show_default=True,
              help="Pulse truncation half-width in periods.")
@out_option
@timestamp_option
def channel(family, alpha, tau, T, N, span, out_dir, timestamp):
    """Composite taps h[n] and subcarrier gains H[i]."""
    try:
        params = FtnParams(tau, PulseSpec(family, alpha, T, span), N)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    taps = composite_taps(params)
    H = subcarrier_gains(taps, N)
    out_dir.mkdir(parents=True, exist_ok=True)
    tf, gf = out_dir / "taps.csv", out_dir / "gains.csv"
    lags = np.arange(len(taps)) - taps.center
    _io.write_csv(tf, ["n", "h"], zip(lags, taps.taps))
    w = 2 * np.pi * np.arange(N) / N
    _io.write_csv(gf, ["i", "omega", "H", "abs_H"], zip(range(N), w, H, np.abs(H)))
    cfg = dict(family=family, alpha=alpha, tau=tau, T=T, N=N, span=span)
    _manifest(out_dir, "channel", cfg, [tf, gf], timestamp)
    click.echo(f"{len(taps)} taps, min |H| = {np.abs(H).min():.6g}")


# -- capacity ------------------------------------------------------------------

@cli.command()
@click.option("--expr", type=click.Choice(EXPRESSIONS), default="ftn-srrc", show_default=True,
              help="Capacity expression.")
@click.option("--snr-db", "snr_db", type=GRID, default="0:35:1", show_default=True,
              help="SNR grid in dB: start:stop:step or a comma list.")
@click.option("--tau", "taus", type=GRID, default="1,0.9,0.8,0.74,0.6", show_default=True,
              help="Acceleration factors.")
@click.option("--alpha", type=ALPHA, default=0.3, show_default=True, help="Roll-off.")
@click.option("--T", "T", type=POSITIVE, default=1.0, show_default=True, help="Symbol period.")
@click.option("--family", type=click.Choice(["srrc", "rect"]), default=None,
              help="Pulse family (default follows --expr).")
@out_option
@threads_option
@timestamp_option
def capacity(expr, snr_db, taus, alpha, T, family, out_dir, threads, timestamp):
    """Capacity curves over a (tau, SNR) grid."""
    if any(not 0 < t <= 1 for t in taus):
        raise click.BadParameter("every tau must lie in (0, 1]", param_hint="--tau")
    family = family or ("rect" if expr == "ftn-rect" else "srrc")
    base = CapacityParams(T=T, alpha=alpha, family=family)
    curve = capacity_curve(expr, snr_db, taus, base, threads=_threads(threads))
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / f"capacity_{expr}.csv"
    _io.write_csv(path, ["tau", "snr_dB", "capacity", "err_est"],
                  [(r.tau, r.snr_db, r.capacity, r.err_est) for r in curve.rows])
    unit = "bit/use" if expr == "dt" else "bit/s"
    cfg = dict(expr=expr, snr_db=snr_db, tau=taus, alpha=alpha, T=T, family=family, unit=unit)
    _manifest(out_dir, "capacity", cfg, [path], timestamp)


# -- baseline / thresholds ----------------------------------------------------

def _schemes(text: str):
    try:
        return [ModScheme.parse(s) for s in text.split(",") if s.strip()]
    except ValueError as exc:
        raise click.BadParameter(str(exc), param_hint="--schemes") from None


baseline_options = [
    click.option("--snr-db", "snr_db", type=GRID, default=None,
                 help="SNR grid in dB (default 0:28:0.5)."),
    click.option("--schemes", default=",".join(s.label for s in ALL_SCHEMES), show_default=True,
                 help="Comma list of schemes."),
    click.option("--trials", type=click.IntRange(1), default=DEFAULT_TRIALS, show_default=True,
                 help="Packets per (scheme, SNR) cell."),
    click.option("--packet-bits", type=click.IntRange(1), default=DEFAULT_PACKET_BITS,
                 show_default=True, help="Bits per packet."),
    click.option("--seed", type=int, default=DEFAULT_SEED, show_default=True,
                 help="Master seed."),
]


def _with(options):
    def deco(f):
        for opt in reversed(options):
            f = opt(f)
        return f
    return deco


def _run_baseline(snr_db, schemes, trials, packet_bits, seed, threads):
    grid = list(DEFAULT_GRID_DB) if snr_db is None else snr_db
    try:
        return grid, baseline_throughput(grid, _schemes(schemes), trials, packet_bits, seed,
                                         _threads(threads))
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None


@cli.command()
@_with(baseline_options)
@out_option
@threads_option
@timestamp_option
def baseline(snr_db, schemes, trials, packet_bits, seed, out_dir, threads, timestamp):
    """AWGN packet throughput of each scheme versus SNR."""
    grid, curve = _run_baseline(snr_db, schemes, trials, packet_bits, seed, threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "baseline.csv"
    curve.to_csv(path)
    cfg = dict(snr_db=grid, schemes=schemes, trials=trials, packet_bits=packet_bits, seed=seed)
    _manifest(out_dir, "baseline", cfg, [path], timestamp)


@cli.command()
@click.option("--baseline", "baseline_csv", type=click.Path(dir_okay=False, exists=True),
              default=None, help="Existing baseline CSV; without it a baseline is simulated.")
@_with(baseline_options)
@click.option("--metric", type=click.Choice(["throughput", "correct_bits"]), default="throughput",
              show_default=True, help="Column that decides the winner.")
@click.option("--no-off", is_flag=True,
              help="Never switch carriers off; the lowest scheme covers all low SNRs.")
@out_option
@threads_option
@timestamp_option
def thresholds(baseline_csv, snr_db, schemes, trials, packet_bits, seed, metric, no_off,
               out_dir, threads, timestamp):
    """Build an SNR threshold table and compare it with the reference table."""
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    if baseline_csv:
        curve = BaselineCurve.from_csv(baseline_csv, packet_bits)
        cfg = dict(baseline=str(baseline_csv), metric=metric)
    else:
        grid, curve = _run_baseline(snr_db, schemes, trials, packet_bits, seed, threads)
        bpath = out_dir / "baseline.csv"
        curve.to_csv(bpath)
        outputs.append(bpath)
        cfg = dict(snr_db=grid, schemes=schemes, trials=trials, packet_bits=packet_bits,
                   seed=seed, metric=metric)
    cfg["allow_off"] = not no_off
    table = build_thresholds(curve, metric, allow_off=not no_off)
    tpath = out_dir / "thresholds.csv"
    table.to_csv(tpath)
    outputs.append(tpath)
    ref = reference_table().crossovers()
    got = table.crossovers()
    rows = [(s.label, ref[s], got.get(s, float("nan")), got.get(s, float("nan")) - ref[s])
            for s in ref]
    cpath = out_dir / "comparison.csv"
    _io.write_csv(cpath, ["scheme", "reference_dB", "derived_dB", "delta_dB"], rows)
    outputs.append(cpath)
    _manifest(out_dir, "thresholds", cfg, outputs, timestamp)
    for r in rows:
        click.echo(f"{r[0]:>6}  reference {r[1]:6.2f} dB  derived {r[2]:6.2f} dB  "
                   f"delta {r[3]:+6.2f} dB")


# -- alloc ---------------------------------------------------------------------

@cli.command()
@click.option("--gains", "gains_csv", type=click.Path(dir_okay=False, exists=True),
              required=True, help="CSV with an 'H' (or 'abs_H', 'gain') column.")
@click.option("--snr-db", "snr_db", type=float, default=20.0, show_default=True,
              help="Transmit SNR in dB.")
@out_option
@timestamp_option
def alloc(gains_csv, snr_db, out_dir, timestamp):
    """Water-filling powers for the carriers in a gains CSV."""
    rows = _io.read_csv(gains_csv)
    if not rows:
        raise click.UsageError(f"{gains_csv}: no rows")
    col = next((c for c in ("H", "abs_H", "gain") if c in rows[0]), None)
    if col is None:
        raise click.UsageError(f"{gains_csv}: need a column named H, abs_H or gain")
    H = np.array([float(r[col]) for r in rows])
    gam = 10.0 ** (snr_db / 10.0) * H * H
    try:
        a = waterfill(gam)
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "powers.csv"
    _io.write_csv(path, ["i", "gamma", "power", "effective_snr"],
                  zip(range(H.size), gam, a.powers, a.powers * gam))
    cfg = dict(gains=str(gains_csv), column=col, snr_db=snr_db, cutoff=a.cutoff)
    _manifest(out_dir, "alloc", cfg, [path], timestamp)
    click.echo(f"cutoff SNR {a.cutoff:.6g}, {int(a.active.sum())}/{H.size} carriers active")


# -- sim -----------------------------------------------------------------------

SIM_KEYS = {
    "snr_db": (list, str), "N": (int,), "family": (str,), "alpha": (int, float),
    "T": (int, float), "span": (int, float), "tau": (list, int, float), "trials": (int,),
    "seed": (int,), "cp_length": (int, type(None)), "waterfilling": (bool,),
    "loading": (bool,), "fixed_scheme": (str, type(None)), "thresholds": (str, type(None)),
    "packet_bits": (int,), "colored_noise": (bool,),
}


def _key_line(text: str, key: str) -> int:
    m = re.search(r'"' + re.escape(key) + r'"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else 0


def load_config(path) -> dict:
    """Read a JSON sim config, rejecting unknown keys and wrong types."""
    text = Path(path).read_text(encoding="utf-8")
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise click.UsageError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
    if not isinstance(data, dict):
        raise click.UsageError(f"{path}:1: top level must be an object")
    section = data.get("sim", data)
    prefix = "sim." if "sim" in data else ""
    if "sim" in data and set(data) != {"sim"}:
        extra = sorted(set(data) - {"sim"})[0]
        raise click.UsageError(f"{path}:{_key_line(text, extra)}: unknown key '{extra}'")
    for k, v in section.items():
        if k not in SIM_KEYS:
            raise click.UsageError(f"{path}:{_key_line(text, k)}: unknown key '{prefix}{k}'")
        if not isinstance(v, SIM_KEYS[k]) or (isinstance(v, bool) and bool not in SIM_KEYS[k]):
            raise click.UsageError(
                f"{path}:{_key_line(text, k)}: '{prefix}{k}' has the wrong type ({type(v).__name__})")
    return section


def _sim_config(settings: dict, tau: float):
    from .sim import SimConfig

    snr = settings.get("snr_db", "0:30:2")
    snr = parse_grid(snr) if isinstance(snr, str) else [float(x) for x in snr]
    table = None
    if settings.get("thresholds") == "reference":
        table = reference_table()
    elif settings.get("thresholds"):
        table = ThresholdTable.from_csv(settings["thresholds"])
    pulse = PulseSpec(settings.get("family", "srrc"), settings.get("alpha", 0.3),
                      settings.get("T", 1.0), settings.get("span", 16.0))
    fixed = settings.get("fixed_scheme")
    return SimConfig(
        snr_list_db=tuple(snr), N=settings.get("N", 1024), pulse=pulse, tau=tau,
        trials=settings.get("trials", 200), seed=settings.get("seed", 0),
        cp_length=settings.get("cp_length"),
        waterfilling=settings.get("waterfilling", True),
        loading=settings.get("loading", fixed is None),
        fixed_scheme=None if fixed is None else ModScheme.parse(fixed),
        thresholds=table, packet_bits=settings.get("packet_bits", DEFAULT_PACKET_BITS),
        colored_noise=settings.get("colored_noise", False),
    )


def _tau_tag(tau: float) -> str:
    return f"tau{tau:g}"


@cli.command()
@click.option("--config", "config_path", type=click.Path(dir_okay=False, exists=True),
              default=None, help="JSON config; command-line flags override it.")
@click.option("--snr-db", "snr_db", type=GRID, default=None, help="SNR grid in dB (default 0:30:2).")
@click.option("--tau", "taus", type=GRID, default=None,
              help="One or more acceleration factors (default 0.8).")
@click.option("--alpha", type=ALPHA, default=None, help="Roll-off (default 0.3).")
@click.option("--N", "N", type=click.IntRange(2), default=None, help="Carriers (default 1024).")
@click.option("--trials", type=click.IntRange(1), default=None, help="Frames per SNR (default 200).")
@click.option("--seed", type=int, default=None, help="Master seed (default 0).")
@click.option("--cp-length", type=click.IntRange(0), default=None,
              help="Cyclic prefix length (default: taps - 1).")
@click.option("--wf/--no-wf", "waterfilling", default=None, help="Water-filling (default on).")
@click.option("--scheme", "fixed_scheme", default=None,
              help="Fixed scheme instead of adaptive loading.")
@click.option("--thresholds", "thresholds_path", default=None,
              help="Threshold CSV, or 'reference' for the shipped reference table "
                   "(default: packaged goodput thresholds).")
@click.option("--packet-bits", type=click.IntRange(1), default=None,
              help=f"Goodput packet size (default {DEFAULT_PACKET_BITS}).")
@click.option("--colored-noise", is_flag=True, default=None,
              help="Colour the noise with the matched-filter response.")
@click.option("--compare", is_flag=True,
              help="Run water-filling on/off crossed with loading and every fixed scheme.")
@out_option
@threads_option
@timestamp_option
def sim(config_path, snr_db, taus, alpha, N, trials, seed, cp_length, waterfilling,
        fixed_scheme, thresholds_path, packet_bits, colored_noise, compare, out_dir, threads,
        timestamp):
    """Monte Carlo OFDM throughput over the FTN channel."""
    from .sim import compare_matrix, run_ofdm_ftn

    settings = load_config(config_path) if config_path else {}
    flags = dict(snr_db=snr_db, alpha=alpha, N=N, trials=trials, seed=seed,
                 cp_length=cp_length, waterfilling=waterfilling, fixed_scheme=fixed_scheme,
                 thresholds=thresholds_path, packet_bits=packet_bits,
                 colored_noise=colored_noise)
    settings.update({k: v for k, v in flags.items() if v is not None})
    if fixed_scheme is not None:
        settings["loading"] = False
    tau_list = taus if taus is not None else settings.get("tau", 0.8)
    tau_list = tau_list if isinstance(tau_list, list) else [tau_list]
    try:
        configs = [_sim_config(settings, float(t)) for t in tau_list]
    except ValueError as exc:
        raise click.UsageError(str(exc)) from None
    n_threads = _threads(threads)
    out_dir.mkdir(parents=True, exist_ok=True)
    outputs = []
    manifest_cfg = {"runs": []}
    for cfg in configs:
        tag = _tau_tag(cfg.tau)
        curves = compare_matrix(cfg, threads=n_threads) if compare else \
            {cfg.label(): run_ofdm_ftn(cfg, n_threads)}
        for label, curve in curves.items():
            path = out_dir / f"throughput_{tag}_{label.replace('+', '_')}.csv"
            curve.to_csv(path)
            outputs.append(path)
        manifest_cfg["runs"].append(cfg.to_dict())
    manifest_cfg["compare"] = compare
    manifest_cfg["kernel_backend"] = BACKEND
    _manifest(out_dir, "sim", manifest_cfg, outputs, timestamp)


# -- entry point ---------------------------------------------------------------

def main(argv=None) -> int:
    try:
        rv = cli.main(args=argv, prog_name="ftnkit", standalone_mode=False)
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        exc.show()
        return EXIT_USAGE
    except click.ClickException as exc:
        exc.show()
        return EXIT_RUNTIME
    except click.Abort:
        click.echo("aborted", err=True)
        return EXIT_RUNTIME
    except (OSError, ValueError, RuntimeError) as exc:
        click.echo(f"error: {exc}", err=True)
        return EXIT_RUNTIME
    return rv if isinstance(rv, int) else 0


if __name__ == "__main__":
    sys.exit(main())
