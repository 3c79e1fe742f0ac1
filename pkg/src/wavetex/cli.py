"""Command-line entry point: ``wavetex {synth,stats,count,filters,verify}``."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ModelConfig
from .counting import ALPHA_MODELS, PS_MODELS, alpha_breakdown, count_ps_statistics
from .imagecore import load_image, save_png
from .oracles import CHECKS, reports_to_json, run_all
from .statistics import StatisticsOperator, build_index_set
from .synthesis import synthesize, write_history_jsonl
from .wavelets import build_filter_bank

VARIANT_FLAGS = {"s": "S", "i": "I", "l": "L", "c": "C", "c-reduced": "C_reduced"}


class CLIError(Exception):
    """User-facing failure; reported on stderr with exit code 1."""

    def __init__(self, message, usage=False):
        super().__init__(message)
        self.usage = usage


class _Parser(argparse.ArgumentParser):
    # usage errors exit with 1 like every other failure
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def sha256_file(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 16), b""):
            h.update(block)
    return h.hexdigest()


def _add_model_flags(p):
    p.add_argument("--variant", choices=sorted(VARIANT_FLAGS), help="model variant")
    p.add_argument("--scales", type=int, help="number of scales J")
    p.add_argument("--orients", type=int, help="orientations L per half-turn")
    p.add_argument("--alphas", type=int, help="rectifier phases A")
    p.add_argument("--boundary", choices=["periodic", "windowed"])
    p.add_argument("--config", help="JSON file of ModelConfig fields (flags take precedence)")
    p.add_argument("--jobs", type=int, help="FFT worker threads")


def _model_config(args, n, **extra):
    """Defaults, then ``--config`` file, then flags."""
    fields = {"boundary": "windowed"}
    if args.config:
        try:
            with open(args.config) as fh:
                fields.update(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(f"cannot read config {args.config}: {exc}") from exc
    flags = {
        "variant": VARIANT_FLAGS[args.variant] if args.variant else None,
        "j_max": args.scales,
        "l_count": args.orients,
        "alpha_count": args.alphas,
        "boundary": args.boundary,
        "jobs": args.jobs,
    }
    flags.update(extra)
    fields.update({k: v for k, v in flags.items() if v is not None})
    fields["n"] = n
    try:
        return ModelConfig.from_dict(fields)
    except (TypeError, ValueError) as exc:
        raise CLIError(f"invalid configuration: {exc}") from exc


def _image_mode(variant):
    return "color" if variant in ("C", "C_reduced") else "gray"


def _peek_variant(args):
    if args.variant:
        return VARIANT_FLAGS[args.variant]
    if args.config:
        try:
            with open(args.config) as fh:
                return json.load(fh).get("variant", "I")
        except (OSError, json.JSONDecodeError) as exc:
            raise CLIError(f"cannot read config {args.config}: {exc}") from exc
    return "I"


def _load(path, mode):
    try:
        return load_image(path, mode)
    except (OSError, ValueError) as exc:
        raise CLIError(f"cannot load {path}: {exc}") from exc


def _window_margins(cfg):
    if cfg.boundary != "windowed":
        return None
    return {str(k): 2**k for k in range(cfg.j_max + 1)}


# -- synth ----------------------------------------------------------------

def _synth_paths(out, manifest):
    out = Path(out)
    history = out.with_suffix(".history.jsonl")
    manifest = Path(manifest) if manifest else out.with_suffix(".manifest.json")
    return out, history, manifest


def cmd_synth(args):
    if args.input is None:
        if args.manifest and os.path.isfile(args.manifest):
            return _replay(args)
        raise CLIError("synth needs --input (or --manifest pointing to an existing manifest)",
                       usage=True)
    t0 = time.perf_counter()
    obs = _load(args.input, _image_mode(_peek_variant(args)))
    extra = {
        "iterations_per_restart": args.iters,
        "restarts": args.restarts,
        "seed": args.seed,
        "precision": args.precision,
        "histogram_match": False if args.no_histmatch else None,
    }
    cfg = _model_config(args, obs.shape[-1], **extra)
    if cfg.color != (obs.ndim == 3):
        raise CLIError(f"variant {cfg.variant} does not match a {_image_mode(cfg.variant)} input")
    out, history, manifest = _synth_paths(args.out or "synth.png", args.manifest)
    t_load = time.perf_counter() - t0
    image, run = _run(obs, cfg, args.quiet)
    _write_outputs(image, run, out, history)
    doc = {
        "tool": "wavetex",
        "version": __version__,
        "config": cfg.to_dict(),
        "input": {"path": os.path.abspath(args.input), "sha256": sha256_file(args.input),
                  "mode": _image_mode(cfg.variant)},
        "outputs": {"image": str(out), "history": str(history), "image_sha256": sha256_file(out)},
        "timings": {"load_s": t_load, "synthesis_s": run.wall_seconds},
        "initial_loss": run.initial_loss,
        "final_loss": run.final_loss,
        "relative_distance": run.restart_distances[-1] if run.restart_distances else None,
        "restart_losses": run.restart_losses,
        "statistic_counts": dict(zip(("first_order", "covariances", "lowpass"),
                                     map(int, run.target_stats.sizes))),
        "window_margins": _window_margins(cfg),
        "n_evals": run.n_evals,
    }
    try:
        manifest.write_text(json.dumps(doc, indent=2))
    except OSError as exc:
        raise CLIError(f"cannot write manifest {manifest}: {exc}") from exc
    print(f"wrote {out}, {history}, {manifest}")
    print(f"final loss {run.final_loss:.6g} (initial {run.initial_loss:.6g})")
    return 0


def _run(obs, cfg, quiet=False):
    def log(rec):
        if not quiet and rec["iter"] % 50 == 0:
            print(f"restart {rec['restart']} iter {rec['iter']:4d} loss {rec['loss']:.6e}",
                  file=sys.stderr)

    return synthesize(obs, cfg, log=log)


def _write_outputs(image, run, out, history):
    try:
        out.parent.mkdir(parents=True, exist_ok=True)
        save_png(out, image)
        write_history_jsonl(history, run)
    except OSError as exc:
        raise CLIError(f"cannot write outputs: {exc}") from exc


def _replay(args):
    try:
        doc = json.loads(Path(args.manifest).read_text())
        cfg = ModelConfig.from_dict(doc["config"])
        src = doc["input"]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CLIError(f"invalid manifest {args.manifest}: {exc}") from exc
    if not os.path.isfile(src["path"]):
        raise CLIError(f"manifest input {src['path']} not found")
    if sha256_file(src["path"]) != src["sha256"]:
        raise CLIError(f"input {src['path']} changed since the manifest was written")
    if args.jobs is not None:
        cfg = cfg.replace(jobs=args.jobs)
    obs = _load(src["path"], src.get("mode", _image_mode(cfg.variant)))
    out = Path(args.out) if args.out else Path(doc["outputs"]["image"])
    history = out.with_suffix(".history.jsonl")
    image, run = _run(obs, cfg, args.quiet)
    _write_outputs(image, run, out, history)
    same = sha256_file(out) == doc["outputs"].get("image_sha256")
    print(f"replayed {args.manifest} -> {out} ({'identical' if same else 'DIFFERENT'} output)")
    return 0


# -- stats ----------------------------------------------------------------

def _load_stats_json(path):
    try:
        doc = json.loads(Path(path).read_text())
        values = np.array([e["value"] for e in doc["entries"]], dtype=np.float64)
        return values, doc["header"]
    except (OSError, KeyError, ValueError, TypeError) as exc:
        raise CLIError(f"cannot read statistics {path}: {exc}") from exc


def _same_layout(ha, hb):
    return ha.get("config_hash") == hb.get("config_hash") and ha.get("sizes") == hb.get("sizes")


def cmd_stats(args):
    if args.compare:
        (va, ha), (vb, hb) = (_load_stats_json(p) for p in args.compare)
        if not _same_layout(ha, hb) or len(va) != len(vb):
            raise CLIError("statistic files have different layouts")
        print(f"{np.linalg.norm(va - vb):.17g}")
        return 0
    if args.input is None:
        raise CLIError("stats needs --input or --compare", usage=True)
    x = _load(args.input, _image_mode(_peek_variant(args)))
    cfg = _model_config(args, x.shape[-1])
    if cfg.color != (x.ndim == 3):
        raise CLIError(f"variant {cfg.variant} does not match a {_image_mode(cfg.variant)} input")
    bank = build_filter_bank(cfg.n, cfg.j_max, cfg.l_count, cfg.family, workers=cfg.jobs)
    op = StatisticsOperator(bank, build_index_set(cfg), cfg.boundary)
    ref = x if args.means_from is None else _load(args.means_from, _image_mode(cfg.variant))
    if ref.shape != x.shape:
        raise CLIError("--means-from image has a different shape")
    means = op.observation_means(ref)
    stats = op.statistics(x, means, cfg.statistics_hash())
    if args.out:
        try:
            Path(args.out).write_text(json.dumps(stats.to_json_dict(cfg)))
        except OSError as exc:
            raise CLIError(f"cannot write {args.out}: {exc}") from exc
        print(f"wrote {len(stats)} statistics to {args.out}")
    if args.dump_means:
        C, J, L, A = op.plane_shape
        rows = [{"window": w, "c": c, "j": j, "theta_idx": t, "alpha_idx": a,
                 "mean": float(means[w, ((c * J + j) * L + t) * A + a])}
                for w in range(len(means)) for c in range(C) for j in range(J)
                for t in range(L) for a in range(A)]
        Path(args.dump_means).write_text(json.dumps(rows, indent=1))
    if args.target:
        vt, ht = _load_stats_json(args.target)
        if ht.get("sizes") != list(stats.sizes) or ht.get("config_hash") != stats.config_hash:
            raise CLIError("target statistics have a different layout")
        rel = np.linalg.norm(stats.values - vt) / np.linalg.norm(vt)
        print(f"relative distance {rel:.6e}")
    return 0


# -- count ----------------------------------------------------------------

def cmd_count(args):
    if args.model in PS_MODELS:
        result = count_ps_statistics(PS_MODELS[args.model], args.scales, args.orients, args.delta)
    else:
        try:
            result = alpha_breakdown(ALPHA_MODELS[args.model], args.scales, args.orients,
                                     args.alphas)
        except ValueError as exc:
            raise CLIError(str(exc)) from exc
    print(json.dumps(result.as_dict(), indent=2) if args.json else result.as_text())
    return 0


# -- filters --------------------------------------------------------------

def _filter_panel(f):
    """Real, imaginary and modulus side by side, centered, scaled to [0, 1]."""
    f = np.fft.fftshift(f)
    peak = np.abs(f).max() or 1.0
    parts = [0.5 + 0.5 * f.real / peak, 0.5 + 0.5 * f.imag / peak, np.abs(f) / peak]
    gap = np.ones((f.shape[0], 2))
    return np.concatenate([parts[0], gap, parts[1], gap, parts[2]], axis=1)


def cmd_filters(args):
    try:
        bank = build_filter_bank(args.size, args.scales, args.orients)
    except ValueError as exc:
        raise CLIError(str(exc)) from exc
    out = Path(args.out)
    try:
        out.mkdir(parents=True, exist_ok=True)
        count = 0
        for j in range(bank.j_max):
            for t in range(bank.l_count):
                _save_panel(out / f"psi_j{j}_l{t}.png", _filter_panel(bank.band_pass_spatial[j, t]))
                count += 1
        _save_panel(out / f"phi_J{bank.j_max}.png", _filter_panel(bank.low_pass_spatial))
    except OSError as exc:
        raise CLIError(f"cannot write filters: {exc}") from exc
    print(f"wrote {count + 1} filter images to {out}")
    return 0


def _save_panel(path, panel):
    from PIL import Image

    from .imagecore import to_uint8

    Image.fromarray(to_uint8(panel)).save(path, format="PNG")


# -- verify ---------------------------------------------------------------

def cmd_verify(args):
    reports = run_all(args.only)
    print(reports_to_json(reports))
    failed = [r.name for r in reports if not r.passed]
    if failed:
        print(f"failed: {', '.join(failed)}", file=sys.stderr)
        return 1
    return 0


def build_parser():
    parser = _Parser(prog="wavetex", description=__doc__)
    parser.add_argument("--version", action="version", version=f"wavetex {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthesize a texture from an observation")
    p.set_defaults(parser=p)
    p.add_argument("--input", help="observation image (PNG)")
    _add_model_flags(p)
    p.add_argument("--iters", type=int, help="L-BFGS iterations per restart")
    p.add_argument("--restarts", type=int)
    p.add_argument("--seed", type=int)
    p.add_argument("--precision", choices=["double", "single"])
    p.add_argument("--no-histmatch", action="store_true", help="skip final histogram matching")
    p.add_argument("--out", help="output PNG (default synth.png; on replay, the manifest's path)")
    p.add_argument("--manifest", help="manifest path to write, or to replay when --input is absent")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("stats", help="compute or compare statistic vectors")
    p.set_defaults(parser=p)
    p.add_argument("--input")
    _add_model_flags(p)
    p.add_argument("--out", help="write statistics JSON")
    p.add_argument("--means-from", help="image providing the centering means (default: input)")
    p.add_argument("--dump-means", help="write the centering means as JSON")
    p.add_argument("--compare", nargs=2, metavar=("A", "B"), help="print the distance of two files")
    p.add_argument("--target", help="print the relative distance to this statistics file")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("count", help="print statistic counts")
    p.add_argument("--model", required=True, choices=list(ALPHA_MODELS) + list(PS_MODELS))
    p.add_argument("--scales", type=int, default=5)
    p.add_argument("--orients", type=int, default=4)
    p.add_argument("--alphas", type=int, default=4)
    p.add_argument("--delta", type=int, default=3, help="PS shift half-width")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_count)

    p = sub.add_parser("filters", help="write the filter bank as PNG images")
    p.add_argument("--scales", type=int, default=5)
    p.add_argument("--orients", type=int, default=4)
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_filters)

    p = sub.add_parser("verify", help="run the oracle checks")
    p.add_argument("--only", nargs="+", choices=sorted(CHECKS))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code
    try:
        return args.func(args)
    except CLIError as exc:
        if exc.usage:
            args.parser.print_usage(sys.stderr)
        print(f"wavetex {args.command}: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
