"""zerostats command line."""

from __future__ import annotations

import argparse
import hashlib
import logging
import sys
import urllib.parse
import urllib.request
from pathlib import Path

import numpy as np

from .. import delta_engine as de
from .. import dirichlet_ene as dn
from .. import spike_analysis as sa
from .. import zero_ingest as zi
from .. import zeta_engine as ze
from . import export
from .recipes import BUNDLED, ConfigError, RecipeConfig, bundled, load_config, run_recipe

log = logging.getLogger("zerostats")


def _add_character(p):
    p.add_argument("--modulus", type=int, default=None, help="character modulus (omit for zeta)")
    p.add_argument("--char-index", type=int, default=None, help="1-based index among characters mod q")


def _character(args):
    if args.modulus is None:
        if args.char_index is not None:
            raise ConfigError("--char-index needs --modulus")
        return None
    if args.char_index is None:
        raise ConfigError("--modulus needs --char-index")
    return dn.character(args.modulus, args.char_index)


def _load(path, args=None) -> ze.ZeroSequence:
    kw = {}
    if args is not None:
        for k in ("dialect", "skip_rows", "max_rows", "column", "offset"):
            v = getattr(args, k, None)
            if v is not None:
                kw[k] = v
    return zi.load_sequence(path, **kw)


def _branch(seq: ze.ZeroSequence, branch: str):
    if not seq.signed:
        return seq
    pos, neg = zi.split_signed(seq)
    if branch == "neg":
        return neg
    return pos


def _save_seq(seq: ze.ZeroSequence, out: str):
    if out.endswith((".txt", ".dat", ".csv")):
        if seq.signed:
            buf = "\n".join("%.17g" % x for x in seq.ordinates) + "\n"
            export.write_text(out, buf)
        else:
            zi.write_plain(seq, out)
    else:
        zi.write_cache(seq, out)


def _threshold(args) -> sa.Threshold:
    if args.threshold is not None:
        return sa.Threshold(absolute=args.threshold)
    return sa.Threshold(quantile=args.threshold_quantile)


def _add_detect(p):
    g = p.add_argument_group("deficit detection")
    g.add_argument("--threshold", type=float, default=None, help="absolute count threshold")
    g.add_argument("--threshold-quantile", type=float, default=0.10)
    g.add_argument("--gap", type=int, default=0)
    g.add_argument("--exclude-near-zero", type=float, default=1.0)
    g.add_argument("--tol", type=float, default=0.25, help="matching tolerance")


def _window(args) -> de.WindowParams:
    return de.WindowParams(args.t_max, args.bin)


# ---------------------------------------------------------------------------
# subcommands

def cmd_zeros(args):
    chi = _character(args)
    cfg = ze.ZFunctionConfig(workers=args.workers)
    if chi is None:
        if args.n is None and args.t_max is None:
            raise ConfigError("give --n or --t-max")
        seq = ze.find_riemann_zeros(args.n, cfg) if args.n is not None else ze.riemann_zeros_up_to(args.t_max, cfg)
    else:
        if args.n is None:
            if args.t_max is None:
                raise ConfigError("give --n or --t-max")
            pos = ze.dirichlet_zeros_up_to(chi, args.t_max, cfg) if args.branch != "neg" else None
            neg = (ze.dirichlet_zeros_up_to(chi.conjugate(), args.t_max, cfg)
                   if args.branch != "pos" and not chi.is_real else None)
            if neg is None:
                seq = pos
            elif pos is None:
                seq = neg
            else:
                seq = ze.ZeroSequence(np.concatenate([-neg.ordinates[::-1], pos.ordinates]), True, pos.source)
        else:
            n_pos = args.n if args.branch in ("pos", "both") else 0
            n_neg = args.n if args.branch in ("neg", "both") and not chi.is_real else 0
            seq = ze.find_dirichlet_zeros(chi, n_pos, n_neg, cfg)
            if args.branch == "neg":
                seq = zi.split_signed(seq)[1]
    if args.output:
        _save_seq(seq, args.output)
        print(f"wrote {len(seq)} ordinates to {args.output}")
    else:
        for x in seq.ordinates[: args.show]:
            print("%.12f" % x)
        if len(seq) > args.show:
            print(f"... {len(seq) - args.show} more (max {seq.max_ordinate:.9f})")


def cmd_ingest(args):
    spec = zi.ZeroFileSpec(args.path, args.dialect, args.skip_rows, args.max_rows, args.column, args.offset)
    seq = zi.parse_zero_file(spec)
    print(f"parsed {len(seq)} ordinates ({'signed' if seq.signed else 'unsigned'}), "
          f"max {seq.max_ordinate:.9g}, duplicates dropped {seq.source.get('duplicates_dropped', 0)}")
    if args.split:
        if not seq.signed:
            raise ConfigError("--split needs a columnar (signed) table")
        pos, neg = zi.split_signed(seq)
        stem = Path(args.output)
        for tag, s in (("pos", pos), ("neg", neg)):
            p = stem.with_name(f"{stem.stem}-{tag}{stem.suffix or '.zseq'}")
            zi.write_cache(s, p)
            print(f"wrote {len(s)} {tag} ordinates to {p}")
    elif args.output:
        zi.write_cache(seq, args.output)
        print(f"wrote {args.output}")


def _histogram(args, a, b=None):
    w = _window(args)
    hist = de.auto_deltas(a, w, args.workers) if b is None else de.cross_deltas(a, b, w, args.workers)
    if getattr(args, "moving_average", None):
        hist = de.moving_average(hist, args.moving_average)
    return hist


def cmd_deltas(args):
    a = _branch(_load(args.zeros, args), args.branch)
    b = _branch(_load(args.against), args.branch) if args.against else None
    hist = _histogram(args, a, b)
    print(f"{hist.kind} histogram: {hist.n_bins} bins, {int(hist.total) if hist.kind != 'filtered' else hist.total}"
          f" deltas")
    if args.output:
        export.export_csv(hist, args.output)
        print(f"wrote {args.output}")


def cmd_mate(args):
    chi = _character(args)
    cfg = ze.ZFunctionConfig(workers=args.workers)
    riemann = _load(args.riemann) if args.riemann else ze.find_riemann_zeros(args.n_riemann, cfg)
    branches = ("pos", "neg") if args.branch == "both" else (args.branch,)
    hists, refs = [], []
    for br in branches:
        if args.l_zeros:
            lz = _branch(_load(args.l_zeros), br)
        else:
            if chi is None:
                raise ConfigError("give --modulus/--char-index or --l-zeros")
            target = chi if br == "pos" or chi.is_real else chi.conjugate()
            lz = ze.find_dirichlet_zeros(target, args.n_l, 0, cfg)
            lz = ze.ZeroSequence(lz.ordinates, False, lz.source)
        # deficits of L - zeta deltas sit at the L zeros
        hists.append(de.cross_deltas(lz, riemann, _window(args), args.workers))
        refs.append(lz)
    hist = hists[0] if len(hists) == 1 else de.combine(hists[0], hists[1])
    groups = sa.detect_deficits(hist, _threshold(args), args.gap, args.exclude_near_zero)
    ref = np.unique(np.concatenate([r.ordinates for r in refs]))
    report = sa.match_zeros(groups, ref, args.tol, ref_range=(args.bin, args.t_max))
    print(report.table())
    if args.output:
        export.export_csv(hist, args.output)
    if args.report:
        export.write_text(args.report, export.report_csv(report))


def cmd_analyze(args):
    hist = export.read_histogram_csv(args.histogram)
    if args.moving_average:
        hist = de.moving_average(hist, args.moving_average)
    if args.gue_fit:
        w0 = args.omega0 or sa.omega0(args.t0 or hist.max_ordinate)
        fit = sa.fit_gue_amplitude(hist, w0, tuple(args.fit_range) if args.fit_range else None, args.baseline)
        print(f"omega0 {fit.omega0:.7f}  A {fit.amplitude:.6g}  heuristic A {fit.heuristic_amplitude:.6g}")
        print(f"residual {fit.residual_before:.6g} -> {fit.residual_after:.6g} ({100 * fit.reduction:.1f}% lower), "
              f"dominant frequency {sa.residual_frequency(hist, fit):.4f} cycles/unit")
        corr = sa.gue_correct(hist, w0, fit.amplitude)
        fr = sa.fresnel_residual(corr, w0, fit.fit_range)
        print(f"Fresnel residual {fr.residual:.4f}, dominant frequency {fr.dominant_frequency:.4f}")
        if args.report:
            export.write_text(args.report, export.fit_csv(fit))
        return
    groups = sa.detect_deficits(hist, _threshold(args), args.gap, args.exclude_near_zero)
    print(export.groups_csv(groups), end="")
    if args.reference or args.riemann:
        if args.reference:
            ref = _branch(_load(args.reference), args.branch).ordinates
        else:
            ref = ze.riemann_zeros_up_to(hist.t_max).ordinates
        report = sa.match_zeros(groups, ref, args.tol, ref_range=(hist.bin_width, hist.t_max))
        print(report.table())
        if args.report:
            export.write_text(args.report, export.report_csv(report))
    elif args.report:
        export.write_text(args.report, export.groups_csv(groups))


def _symbol(text, modulus, index):
    if text:
        return dn.parse_symbol(text)
    if modulus is None:
        return dn.zeta_symbol()
    return dn.l_function(dn.character(modulus, index))


def cmd_predict(args):
    a = _symbol(args.a, args.modulus, args.char_index)
    b = _symbol(args.b, args.modulus_b, args.char_index_b)
    pred = dn.predict_deltas(a, b)
    print(f"{a.render()} (*) conj({b.render()}) = {pred.closed_form.render()}")
    for line in pred.lines:
        print("  " + line.describe())
    if args.t_max:
        locs = pred.locations(args.t_max, args.branch if args.branch != "both" else "pos")
        print("first locations: " + ", ".join(f"{x:.6f}" for x, _ in locs[: args.show]))


def cmd_plot(args):
    hist = export.read_histogram_csv(args.histogram)
    ann = list(args.annotate or [])
    if args.annotate_zeros:
        hi = args.range[1] if args.range else hist.t_max
        ann += list(ze.riemann_zeros_up_to(hi).ordinates)
    spec = export.PlotSpec(tuple(args.range) if args.range else None, args.style, tuple(ann), args.title or "")
    export.export_svg(hist, spec, args.output)
    print(f"wrote {args.output}")


def cmd_fetch(args):
    data = Path(args.data_dir)
    data.mkdir(parents=True, exist_ok=True)
    for url in args.urls:
        name = Path(urllib.parse.urlparse(url).path).name or "download"
        dest = data / name
        with urllib.request.urlopen(url, timeout=args.timeout) as resp:
            payload = resp.read()
        zi._atomic_write(dest, payload)
        print(f"{dest}  {len(payload)} bytes  sha256 {hashlib.sha256(payload).hexdigest()}")


def cmd_recipe(args):
    if args.list:
        for name in sorted(BUNDLED):
            print(name)
        return
    if not args.name:
        raise ConfigError("give a recipe name or config path")
    cfg = load_config(args.name) if Path(args.name).exists() else bundled(args.name)
    d = cfg.__dict__.copy()
    riemann = [k for k, s in sorted(d["sources"].items()) if s.get("kind") == "riemann"] or ["a"]
    if args.n is not None:
        d["sources"] = {**d["sources"], riemann[0]: {"kind": "riemann", "n": args.n}}
    if args.source:
        d["sources"] = {**d["sources"], riemann[0]: {"kind": "file", "path": args.source}}
        d["budgets"] = {**d["budgets"], "max_zeros": max(d["budgets"]["max_zeros"], 10 ** 9)}
    if args.workers:
        d["workers"] = args.workers
    if args.cache_dir:
        d["cache_dir"] = args.cache_dir
    cfg = RecipeConfig(**d)
    run_recipe(cfg, args.out_dir)


# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zerostats", description="Zeros of zeta and L-functions and their delta statistics.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("zeros", help="compute zero ordinates")
    _add_character(s)
    s.add_argument("--n", type=int, default=None)
    s.add_argument("--t-max", type=float, default=None)
    s.add_argument("--branch", choices=("pos", "neg", "both"), default="pos")
    s.add_argument("-o", "--output", default=None, help=".zseq cache or .txt table")
    s.add_argument("--show", type=int, default=20)
    s.add_argument("--workers", type=int, default=1)
    s.set_defaults(func=cmd_zeros)

    s = sub.add_parser("ingest", help="parse a zero table into a cache")
    s.add_argument("path")
    s.add_argument("--dialect", choices=("plain", "columnar"), default="plain")
    s.add_argument("--skip-rows", type=int, default=0)
    s.add_argument("--max-rows", type=int, default=None)
    s.add_argument("--column", type=int, default=1)
    s.add_argument("--offset", type=float, default=0.0)
    s.add_argument("--split", action="store_true", help="write pos/neg branch caches")
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_ingest)

    s = sub.add_parser("deltas", help="histogram of differences")
    s.add_argument("zeros")
    s.add_argument("--against", default=None, help="second sequence for cross deltas (zeros - against)")
    s.add_argument("--t-max", type=float, required=True)
    s.add_argument("--bin", type=float, required=True)
    s.add_argument("--branch", choices=("pos", "neg"), default="pos")
    s.add_argument("--moving-average", type=int, default=None, metavar="TAU")
    s.add_argument("--workers", type=int, default=1)
    s.add_argument("-o", "--output", default=None)
    s.set_defaults(func=cmd_deltas)

    s = sub.add_parser("mate", help="cross deltas of L-function zeros against Riemann zeros")
    _add_character(s)
    s.add_argument("--branch", choices=("pos", "neg", "both"), default="pos")
    s.add_argument("--riemann", default=None, help="Riemann zeros file (default: compute)")
    s.add_argument("--l-zeros", default=None, help="L-function zeros file (default: compute)")
    s.add_argument("--n-riemann", type=int, default=100_000)
    s.add_argument("--n-l", type=int, default=10_000)
    s.add_argument("--t-max", type=float, default=50.0)
    s.add_argument("--bin", type=float, default=0.1)
    s.add_argument("--workers", type=int, default=1)
    _add_detect(s)
    s.add_argument("-o", "--output", default=None, help="histogram CSV")
    s.add_argument("--report", default=None, help="report CSV")
    s.set_defaults(func=cmd_mate)

    s = sub.add_parser("analyze", help="detect deficits or fit the GUE correction")
    s.add_argument("histogram")
    _add_detect(s)
    s.add_argument("--reference", default=None, help="zeros file to match against")
    s.add_argument("--riemann", action="store_true", help="match against computed Riemann zeros")
    s.add_argument("--branch", choices=("pos", "neg"), default="pos")
    s.add_argument("--moving-average", type=int, default=None, metavar="TAU")
    s.add_argument("--gue-fit", action="store_true")
    s.add_argument("--omega0", type=float, default=None)
    s.add_argument("--t0", type=float, default=None, help="height for omega0 (default: max ordinate)")
    s.add_argument("--fit-range", type=float, nargs=2, default=None)
    s.add_argument("--baseline", choices=("constant", "moving_average"), default="constant")
    s.add_argument("--report", default=None)
    s.set_defaults(func=cmd_analyze)

    s = sub.add_parser("predict", help="closed form and lines of a mating via the ene product")
    s.add_argument("a", nargs="?", default=None, help="zeta, L:q.i or f:p")
    s.add_argument("b", nargs="?", default=None)
    _add_character(s)
    s.add_argument("--modulus-b", type=int, default=None)
    s.add_argument("--char-index-b", type=int, default=None)
    s.add_argument("--t-max", type=float, default=None)
    s.add_argument("--branch", choices=("pos", "neg", "both"), default="pos")
    s.add_argument("--show", type=int, default=10)
    s.set_defaults(func=cmd_predict)

    s = sub.add_parser("plot", help="SVG of a histogram CSV")
    s.add_argument("histogram")
    s.add_argument("-o", "--output", required=True)
    s.add_argument("--range", type=float, nargs=2, default=None)
    s.add_argument("--style", choices=("bars", "line"), default="bars")
    s.add_argument("--annotate", type=float, nargs="*", default=None)
    s.add_argument("--annotate-zeros", action="store_true", help="mark Riemann zeros in range")
    s.add_argument("--title", default=None)
    s.set_defaults(func=cmd_plot)

    s = sub.add_parser("fetch", help="download user-supplied URLs")
    s.add_argument("urls", nargs="+")
    s.add_argument("--data-dir", default="data")
    s.add_argument("--timeout", type=float, default=60.0)
    s.set_defaults(func=cmd_fetch)

    s = sub.add_parser("recipe", help="run a bundled recipe or a config file")
    s.add_argument("name", nargs="?", default=None)
    s.add_argument("--list", action="store_true")
    s.add_argument("--out-dir", default="out")
    s.add_argument("--n", type=int, default=None, help="override the number of Riemann zeros")
    s.add_argument("--source", default=None, help="zeros file replacing source a")
    s.add_argument("--cache-dir", default=None)
    s.add_argument("--workers", type=int, default=None)
    s.set_defaults(func=cmd_recipe)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        args.func(args)
    except (ConfigError, ValueError, OSError, ze.BracketingError, zi.CacheError) as exc:
        print(f"zerostats {args.command}: error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
