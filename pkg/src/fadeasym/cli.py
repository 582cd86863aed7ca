"""Command-line front end.

Every command writes CSV rows ``snr_db,value,method,ci_halfwidth`` (or a
plain-text report) preceded by ``#`` provenance lines.  Invalid input exits
with status 2 and a one-line message on stderr.

Examples
--------
    fadeasym asymptote --channel rayleigh --mod dpsk --snr 0:40:2
    fadeasym combine --scheme mrc --branches nakagami:m=0.5,nakagami:m=1,nakagami:m=1.5 --mod bpsk
    fadeasym --out figs figure 3 --with-mc
"""

from __future__ import annotations

import argparse
import io
import os
import sys
from typing import Iterable, Sequence, TextIO

import numpy as np

from . import __version__
from .asymptotics import (
    AsymptoticEstimate,
    asymptote,
    exact_average,
    snr_offset_db,
    wang_for,
)
from .channels import InvalidChannelError, RapidVariationError, make_channel
from .combining import CombinedChannel, Scheme, combine, combined_asymptote, combined_quadrature_average
from .error_models import InvalidModelError, parse_modulation
from .montecarlo import McConfig, mc_crossing_snr, mc_curve
from .numerics import QuadratureError, QuadratureSpec, crossing_snr, snr_grid
from .regvar import exponent_from_cdf, tauberian_check

HEADER = ("snr_db", "value", "method", "ci_halfwidth")
TARGET = 1e-6
FIG_BRANCHES = ("nakagami:m=0.5", "nakagami:m=1", "nakagami:m=1.5")
FIG_SNR = {1: "0:50:1", 2: "0:50:1", 3: "0:30:0.5", 4: "0:30:0.5"}


class CliError(Exception):
    """Raised for user-facing input problems."""


def split_branches(text: str) -> list[str]:
    """Split ``a:p=1,q=2,b,c:r=3`` into channel specs.

    A comma-separated token of the form ``key=value`` continues the previous
    branch's parameter list; any other token starts a new branch.
    """
    out: list[str] = []
    for token in (t.strip() for t in text.split(",")):
        if not token:
            raise CliError(f"empty branch in {text!r}")
        if ":" not in token and "=" in token:
            if not out:
                raise CliError(f"parameter {token!r} has no branch")
            out[-1] += "," + token
        else:
            out.append(token)
    return out


def _meta(lines: Iterable[str], fh: TextIO) -> None:
    for line in lines:
        fh.write(f"# {line}\n")


def _rows(rows: Iterable[tuple], fh: TextIO) -> None:
    fh.write(",".join(HEADER) + "\n")
    for snr, value, method, hw in rows:
        hw_s = "" if hw is None else repr(float(hw))
        fh.write(f"{float(snr):g},{float(value)!r},{method},{hw_s}\n")


def _estimate_meta(est: AsymptoticEstimate) -> list[str]:
    return [f"C1 = {est.c1!r}", f"C2 = {est.c2!r}", f"d = {est.exponent!r}", f"A = {est.coefficient!r}"]


def _base_meta(args, command: str) -> list[str]:
    return [f"fadeasym {__version__}", f"command: {command}"]


def _mc_cfg(args) -> McConfig:
    return McConfig(
        seed=args.seed,
        draws=args.draws,
        batches=args.batches,
        workers=args.workers,
        importance=args.importance,
    )


def _quad(args) -> QuadratureSpec:
    return QuadratureSpec(rel_tol=args.tol)


def _asymptote_rows(est, grid):
    return [(s, est(10.0 ** (s / 10.0)), "asymptote", None) for s in grid]


def _exact_rows(model, ch, grid, spec):
    return [(s, exact_average(model, ch, 10.0 ** (s / 10.0), spec), "exact", None) for s in grid]


def _mc_rows(model, source, grid, cfg):
    return [(s, r.estimate, "montecarlo", r.halfwidth) for s, r in mc_curve(model, source, grid, cfg)]


def _positive(rows):
    # a CSV row must carry a positive value; underflowed tails are dropped
    return [r for r in rows if r[1] > 0]


def cmd_asymptote(args, fh):
    ch, model = make_channel(args.channel), parse_modulation(args.mod)
    est = asymptote(model, ch)
    grid = snr_grid(args.snr)
    _meta(_base_meta(args, "asymptote") + [f"channel: {ch.name}", f"modulation: {model.label}"] + _estimate_meta(est), fh)
    _rows(_positive(_asymptote_rows(est, grid)), fh)


def cmd_exact(args, fh):
    ch, model = make_channel(args.channel), parse_modulation(args.mod)
    grid = snr_grid(args.snr)
    _meta(_base_meta(args, "exact") + [f"channel: {ch.name}", f"modulation: {model.label}", f"rel_tol = {args.tol!r}"], fh)
    _rows(_positive(_exact_rows(model, ch, grid, _quad(args))), fh)


def cmd_mc(args, fh):
    ch, model = make_channel(args.channel), parse_modulation(args.mod)
    grid = snr_grid(args.snr)
    cfg = _mc_cfg(args)
    _meta(
        _base_meta(args, "mc")
        + [f"channel: {ch.name}", f"modulation: {model.label}", f"seed = {cfg.seed}", f"draws = {cfg.draws}", f"batches = {cfg.batches}", f"importance = {cfg.importance}"],
        fh,
    )
    _rows(_mc_rows(model, ch, grid, cfg), fh)


def cmd_exponent(args, fh):
    ch = make_channel(args.channel)
    rep = exponent_from_cdf(ch.cdf)
    _meta(_base_meta(args, "exponent") + [f"channel: {ch.name}"], fh)
    if rep.rapidly_varying:
        fh.write(f"{ch.name}: rapidly varying (d=inf)\n{rep.diagnostic}\n")
        return
    fh.write(f"d_hat = {rep.estimate:.6f} +/- {rep.stderr:.2e}\n")
    fh.write(f"method = {rep.method}, window = [{rep.window[0]:g}, {rep.window[1]:g}], ratio estimate = {rep.ratio_estimate:.6f}\n")
    fh.write(f"catalog d = {ch.exponent:g}\n")
    fh.write("tauberian check:\n" + tauberian_check(ch).summary() + "\n")


def cmd_tauberian(args, fh):
    ch = make_channel(args.channel)
    if ch.rapidly_varying:
        raise RapidVariationError(ch.name)
    rep = tauberian_check(ch)
    _meta(_base_meta(args, "tauberian"), fh)
    fh.write(rep.summary() + "\n")
    if not rep.passed:
        return 1


def _local_crossing(fn, center: float, half: float = 3.0, step: float = 0.25) -> float:
    """Crossing of ``fn(rho)`` at ``TARGET`` on a dB grid around ``center``."""
    grid = np.arange(center - half, center + half + 1e-9, step)
    return crossing_snr([(s, fn(10.0 ** (s / 10.0))) for s in grid], TARGET)


def _exact_crossing(model, ch, est, spec) -> float:
    return _local_crossing(lambda r: exact_average(model, ch, r, spec), _asymptote_crossing(est))


def _asymptote_crossing(est) -> float:
    grid = np.arange(-10.0, 120.0, 0.25)
    return crossing_snr([(s, est(10.0 ** (s / 10.0))) for s in grid], TARGET)


def cmd_offset(args, fh):
    ch = make_channel(args.channel)
    m1, m2 = parse_modulation(args.mod1), parse_modulation(args.mod2)
    e1, e2 = asymptote(m1, ch), asymptote(m2, ch)
    off = snr_offset_db(e1, e2)
    spec = _quad(args)
    x1 = _exact_crossing(m1, ch, e1, spec)
    x2 = _exact_crossing(m2, ch, e2, spec)
    _meta(_base_meta(args, "offset") + [f"channel: {ch.name}", f"mod1: {m1.label}", f"mod2: {m2.label}"], fh)
    fh.write(f"asymptotic offset = {off:.6f} dB\n")
    fh.write(f"exact crossing gap at {TARGET:g} = {x1 - x2:.6f} dB ({m1.label} {x1:.4f} dB, {m2.label} {x2:.4f} dB)\n")
    fh.write(f"difference = {abs(off - (x1 - x2)):.6f} dB\n")


def _combined_block(model, cc: CombinedChannel, grid, args, with_exact: bool, with_mc: bool):
    est = combined_asymptote(model, cc)
    rows = _asymptote_rows(est, grid)
    meta = [f"scheme: {cc.scheme.value}", f"branches: {' | '.join(b.name for b in cc.branches)}", f"modulation: {model.label}"]
    meta += _estimate_meta(est) + [f"prefactor = {cc.prefactor!r}", f"leading constant = {est.leading_constant!r}"]
    if with_exact and cc.scheme is not Scheme.EGC:
        rows += [(s, combined_quadrature_average(model, cc, 10.0 ** (s / 10.0)), "exact", None) for s in grid]
    if with_mc:
        cfg = _mc_cfg(args)
        meta += [f"seed = {cfg.seed}", f"draws = {cfg.draws}", f"batches = {cfg.batches}", f"importance = {cfg.importance}"]
        rows += _mc_rows(model, cc, grid, cfg)
    return est, meta, _positive(rows)


def cmd_combine(args, fh):
    cc = combine(args.scheme, split_branches(args.branches))
    model = parse_modulation(args.mod)
    grid = snr_grid(args.snr)
    _, meta, rows = _combined_block(model, cc, grid, args, args.with_exact, args.with_mc)
    _meta(_base_meta(args, "combine") + meta, fh)
    _rows(rows, fh)


def _gap_lines(est, model, source, exact_fn, args) -> list[str]:
    x_asym = _asymptote_crossing(est)
    lines = [f"asymptote crossing at {TARGET:g}: {x_asym:.4f} dB"]
    if exact_fn is not None:
        x_ex = _local_crossing(exact_fn, x_asym)
        lines.append(f"exact crossing at {TARGET:g}: {x_ex:.4f} dB, gap {abs(x_asym - x_ex):.4f} dB")
    if args.with_mc:
        x_mc, _ = mc_crossing_snr(model, source, TARGET, x_asym, _mc_cfg(args))
        lines.append(f"montecarlo crossing at {TARGET:g}: {x_mc:.4f} dB, gap {abs(x_asym - x_mc):.4f} dB")
    return lines


def figure_tables(n: int, args) -> dict[str, tuple[list[str], list[tuple]]]:
    """Curves of figure ``n`` keyed by file stem."""
    if n not in FIG_SNR:
        raise CliError("figure must be 1, 2, 3 or 4")
    grid = snr_grid(args.snr or FIG_SNR[n])
    spec = _quad(args)
    out = {}
    if n in (1, 2):
        ch = make_channel(f"nakagami:m={n + 1}")
        for mod in ("bpsk", "dpsk"):
            model = parse_modulation(mod)
            est = asymptote(model, ch)
            wang = wang_for(model, ch)
            rows = _asymptote_rows(est, grid) + _exact_rows(model, ch, grid, spec)
            rows += [(s, wang(10.0 ** (s / 10.0)), "wang", None) for s in grid]
            if args.with_mc:
                rows += _mc_rows(model, ch, grid, _mc_cfg(args))
            rows = _positive(rows)
            meta = [f"figure {n}", f"channel: {ch.name}", f"modulation: {model.label}"] + _estimate_meta(est)
            meta += [f"wang gain = {wang.gain!r}"] + _gap_lines(
                est, model, ch, lambda r: exact_average(model, ch, r, spec), args
            )
            out[f"fig{n}_{mod}"] = (meta, rows)
        return out
    model = parse_modulation("bpsk")
    schemes = ("mrc", "sc") if n == 3 else ("egc",)
    for scheme in schemes:
        cc = combine(scheme, FIG_BRANCHES)
        quad_ok = cc.scheme is not Scheme.EGC
        est, meta, rows = _combined_block(model, cc, grid, args, quad_ok, args.with_mc)
        meta = [f"figure {n}"] + meta + _gap_lines(
            est, model, cc, (lambda r: combined_quadrature_average(model, cc, r)) if quad_ok else None, args
        )
        out[f"fig{n}_{scheme}"] = (meta, rows)
    return out


def cmd_figure(args, fh):
    tables = figure_tables(args.number, args)
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        for stem, (meta, rows) in tables.items():
            path = os.path.join(args.out, f"{stem}.csv")
            with open(path, "w", encoding="utf-8") as f:
                _meta(_base_meta(args, "figure") + meta, f)
                _rows(rows, f)
            fh.write(f"wrote {path}\n")
        return
    for stem, (meta, rows) in tables.items():
        _meta(_base_meta(args, "figure") + [f"curve: {stem}"] + meta, fh)
        _rows(rows, fh)


def _global_flags(p: argparse.ArgumentParser, suppress: bool) -> None:
    d = (lambda v: argparse.SUPPRESS) if suppress else (lambda v: v)
    p.add_argument("--seed", type=int, default=d(0), help="master RNG seed (default 0)")
    p.add_argument("--draws", type=int, default=d(10**7), help="Monte Carlo draws per point (default 1e7)")
    p.add_argument("--batches", type=int, default=d(20), help="Monte Carlo batches (default 20)")
    p.add_argument("--workers", type=int, default=d(1), help="threads for Monte Carlo batches")
    p.add_argument("--importance", action="store_true", default=d(False), help="oversample deep fades")
    p.add_argument("--tol", type=float, default=d(1e-9), help="quadrature relative tolerance")
    p.add_argument("--out", default=d(None), help="output file (directory for 'figure'); default stdout")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fadeasym", description="High-SNR asymptotic error rates over fading channels.")
    parser.add_argument("--version", action="version", version=f"fadeasym {__version__}")
    _global_flags(parser, suppress=False)
    sub = parser.add_subparsers(dest="command", required=True)

    def add(name, fn, help_):
        p = sub.add_parser(name, help=help_)
        _global_flags(p, suppress=True)
        p.set_defaults(func=fn)
        return p

    for name, fn, help_ in (
        ("asymptote", cmd_asymptote, "asymptotic average error rate"),
        ("exact", cmd_exact, "exact average by quadrature"),
        ("mc", cmd_mc, "Monte Carlo average with confidence intervals"),
    ):
        p = add(name, fn, help_)
        p.add_argument("--channel", required=True)
        p.add_argument("--mod", required=True)
        p.add_argument("--snr", default="0:40:2", help="lo:hi:step in dB")

    p = add("figure", cmd_figure, "data behind figures 1-4")
    p.add_argument("number", type=int, choices=(1, 2, 3, 4))
    p.add_argument("--snr", default=None, help="override the figure's dB grid")
    p.add_argument("--with-mc", action="store_true", help="add Monte Carlo rows and crossing")

    p = add("exponent", cmd_exponent, "estimate the variation exponent at 0")
    p.add_argument("--channel", required=True)

    p = add("tauberian", cmd_tauberian, "CDF-side vs transform-side exponent")
    p.add_argument("--channel", required=True)

    p = add("offset", cmd_offset, "SNR offset between two modulations")
    p.add_argument("--channel", required=True)
    p.add_argument("--mod1", required=True)
    p.add_argument("--mod2", required=True)

    p = add("combine", cmd_combine, "diversity-combined asymptote")
    p.add_argument("--scheme", required=True, choices=[s.value for s in Scheme])
    p.add_argument("--branches", required=True)
    p.add_argument("--mod", required=True)
    p.add_argument("--snr", default="0:40:2", help="lo:hi:step in dB")
    p.add_argument("--with-mc", action="store_true")
    p.add_argument("--with-exact", action="store_true", help="quadrature rows (MRC and SC only)")
    return parser


USER_ERRORS = (CliError, InvalidChannelError, InvalidModelError, RapidVariationError, QuadratureError, ValueError, NotImplementedError)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    to_file = args.out is not None and args.command != "figure"
    buf = io.StringIO()
    try:
        status = args.func(args, buf) or 0
    except USER_ERRORS as exc:
        msg = str(exc).splitlines()[0] if str(exc) else type(exc).__name__
        print(f"fadeasym {args.command}: error: {msg}", file=sys.stderr)
        return 2
    if to_file:
        with open(args.out, "w", encoding="utf-8") as f:
            f.write(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return status


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
