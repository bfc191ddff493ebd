"""``kwspot`` command line: one subcommand per pipeline stage, seeded and logged."""

from __future__ import annotations

import argparse
import csv
import json
import re
import shlex
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import __version__
from .audio import SAMPLE_RATE, load_wav, save_wav
from .runlog import RunLog

EXIT_OK, EXIT_RUNTIME, EXIT_USAGE = 0, 1, 2
SUBCOMMANDS = ("synth", "features", "augment", "clean", "scale-search", "model-info", "infer", "validate")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def parse_duration(text: str) -> int:
    """``1.25s`` / ``100ms`` / bare sample count -> samples at 16 kHz."""
    m = re.fullmatch(r"\s*([0-9]*\.?[0-9]+)\s*(ms|s)?\s*", str(text))
    if not m:
        raise argparse.ArgumentTypeError(f"bad duration {text!r} (use e.g. 1.25s, 100ms or a sample count)")
    value, unit = float(m.group(1)), m.group(2)
    if unit is None:
        if not value.is_integer():
            raise argparse.ArgumentTypeError(f"sample count must be an integer, got {text!r}")
        return int(value)
    return int(round(value * SAMPLE_RATE / (1000.0 if unit == "ms" else 1.0)))


def _files(directory, suffixes) -> list[Path]:
    d = Path(directory)
    if not d.is_dir():
        raise FileNotFoundError(f"not a directory: {d}")
    return sorted(p for p in d.rglob("*") if p.is_file() and p.suffix.lower() in suffixes)


def _rel(path: Path, root) -> str:
    return path.relative_to(root).as_posix()


def _out_dir(path) -> Path:
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _pmap(fn, items, threads: int):
    if threads <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def _params(args) -> dict:
    skip = {"func", "command"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _write_jsonl(path: Path, records) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------- synth

def cmd_synth(args) -> int:
    from .cssm import CssmParams, derive_seed, make_silence, make_unknown, synthesize_sample

    params = CssmParams(bound=args.bound, bg_mode=args.bg_mode)
    kw_files = _files(args.keywords, {".wav"})
    bg_files = _files(args.backgrounds, {".wav"})
    if not kw_files:
        raise FileNotFoundError(f"no keyword WAVs under {args.keywords}")
    if not bg_files:
        raise FileNotFoundError(f"no background WAVs under {args.backgrounds}")
    noise_files = _files(args.noises, {".wav"}) if args.noises else []
    if (args.n_silence or args.n_unknown) and not noise_files:
        raise UsageError("--n-silence/--n-unknown need --noises")
    out = _out_dir(args.out)
    backgrounds = [load_wav(p) for p in bg_files]
    bg_ids = [_rel(p, args.backgrounds) for p in bg_files]
    keywords = [load_wav(p) for p in kw_files]
    n = args.n if args.n is not None else len(kw_files)

    def one(i: int):
        j = i % len(kw_files)
        seed = derive_seed(args.seed, i)
        result, recipe = synthesize_sample(keywords[j], backgrounds, seed, params,
                                           _rel(kw_files[j], args.keywords), bg_ids)
        name = f"{i:05d}_{kw_files[j].stem}.wav"
        save_wav(result.clip, out / name)
        return {"output": name, "kind": "keyword", **recipe.to_dict()}

    records = _pmap(one, range(n), args.threads)
    noises = [load_wav(p) for p in noise_files]
    noise_ids = [_rel(p, args.noises) for p in noise_files] if args.noises else []

    def extra(kind: str, i: int, index: int):
        seed = derive_seed(args.seed, index)
        rng = np.random.default_rng(seed)
        ni = int(rng.integers(0, len(noises)))
        rec = {"output": f"{kind}_{i:05d}.wav", "kind": kind, "seed": seed, "noise_id": noise_ids[ni]}
        if kind == "silence":
            clip = make_silence(noises[ni], rng, params.out_len)
        else:
            bi = int(rng.integers(0, len(backgrounds)))
            rec["background_id"] = bg_ids[bi]
            rec["N"] = args.noise_n
            clip = make_unknown(backgrounds[bi], noises[ni], args.noise_n, rng, params.out_len)
        save_wav(clip, out / rec["output"])
        return rec

    records += _pmap(lambda i: extra("silence", i, n + i), range(args.n_silence), args.threads)
    records += _pmap(lambda i: extra("unknown", i, n + args.n_silence + i), range(args.n_unknown), args.threads)
    recipes = out / "recipes.jsonl"
    _write_jsonl(recipes, records)

    log = RunLog("synth", args.seed, _params(args))
    log.add_inputs(kw_files + bg_files + noise_files)
    log.add_outputs([out / r["output"] for r in records] + [recipes])
    log.write(out / "run.json")
    clamped = sum(1 for r in records if r.get("clamped"))
    print(f"synthesized {len(records)} clips into {out} ({clamped} clamped)")
    return EXIT_OK


# ---------------------------------------------------------------- features

def _frontend_config(args):
    from .frontend import FrontendConfig

    return FrontendConfig(n_fft=args.n_fft, taper=args.taper)


def cmd_features(args) -> int:
    from .frontend import mfcc, save_features, save_features_csv

    cfg = _frontend_config(args)
    wavs = _files(args.inp, {".wav"})
    out = _out_dir(args.out)
    ext = ".feat" if args.format == "bin" else ".csv"

    def one(p: Path) -> Path:
        fm = mfcc(load_wav(p), cfg)
        target = out / Path(_rel(p, args.inp)).with_suffix(ext)
        target.parent.mkdir(parents=True, exist_ok=True)
        (save_features if args.format == "bin" else save_features_csv)(fm, target)
        return target

    outputs = _pmap(one, wavs, args.threads)
    log = RunLog("features", args.seed, _params(args))
    log.add_inputs(wavs)
    log.add_outputs(outputs)
    log.write(out / "run.json")
    print(f"wrote {len(outputs)} feature maps to {out}")
    return EXIT_OK


# ---------------------------------------------------------------- augment

def cmd_augment(args) -> int:
    from .augment import MaskPolicy, mix_noise, spec_augment
    from .cssm import derive_seed
    from .frontend import load_features, save_features

    fill = "mean" if args.fill == "mean" else float(args.fill)
    policy = MaskPolicy(F=args.sa_f, T=args.sa_t, p_freq=args.sa_p, p_time=args.sa_p, fill=fill)
    items = _files(args.inp, {".feat", ".wav"})
    noise_files = _files(args.noises, {".wav"}) if args.noises else []
    if any(p.suffix.lower() == ".wav" for p in items) and not noise_files:
        raise UsageError("augmenting WAV inputs needs --noises")
    noises = [load_wav(p) for p in noise_files]
    out = _out_dir(args.out)

    def one(ip):
        i, p = ip
        rng = np.random.default_rng(derive_seed(args.seed, i))
        rel = _rel(p, args.inp)
        target = out / rel
        target.parent.mkdir(parents=True, exist_ok=True)
        if p.suffix.lower() == ".feat":
            fm, draw = spec_augment(load_features(p), policy, rng, return_draw=True)
            save_features(fm, target)
            return {"input": rel, "kind": "specaugment", **draw.__dict__}
        ni = int(rng.integers(0, len(noises)))
        save_wav(mix_noise(load_wav(p), noises[ni], args.noise_n, rng), target)
        return {"input": rel, "kind": "noise", "noise_id": _rel(noise_files[ni], args.noises)}

    records = _pmap(one, list(enumerate(items)), args.threads)
    journal = out / "augment.jsonl"
    _write_jsonl(journal, records)
    log = RunLog("augment", args.seed, _params(args))
    log.add_inputs(items + noise_files)
    log.add_outputs([out / r["input"] for r in records] + [journal])
    log.write(out / "run.json")
    print(f"augmented {len(records)} items into {out}")
    return EXIT_OK


# ---------------------------------------------------------------- clean

def _load_model(arch_name: str, weights_path):
    from .model import load_weights, resolve_arch

    arch = resolve_arch(arch_name)
    ws = load_weights(weights_path)
    ws.check(arch)
    return arch, ws


def cmd_clean(args) -> int:
    from .cleaner import CleanerConfig, ModelScorer, SubprocessScorer, clean_clip
    from .dataset import lookup_class

    cfg = CleanerConfig(win_len=args.win, stride=args.stride, threshold=args.threshold)
    target = lookup_class(args.target_class).index if args.target_class else None
    if bool(args.scorer_cmd) == bool(args.weights):
        raise UsageError("give exactly one of --scorer-cmd or --weights")
    wavs = _files(args.inp, {".wav"})
    out = _out_dir(args.out)
    scorer = (SubprocessScorer(shlex.split(args.scorer_cmd)) if args.scorer_cmd
              else ModelScorer(*_load_model(args.arch, args.weights)))
    rows, outputs = [], []
    try:
        # one scorer instance may be stateful, so clips are scored in order
        for p in wavs:
            rel = _rel(p, args.inp)
            res = clean_clip(load_wav(p), scorer, cfg, target)
            if res.accepted:
                target_path = out / rel
                target_path.parent.mkdir(parents=True, exist_ok=True)
                save_wav(res.window, target_path)
                outputs.append(target_path)
            rows.append([rel, res.offset, f"{res.prob:.6f}", int(res.accepted)])
    finally:
        if isinstance(scorer, SubprocessScorer):
            scorer.close()
    audit = Path(args.audit) if args.audit else out / "audit.csv"
    with open(audit, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["clip", "offset", "prob", "accepted"])
        w.writerows(rows)
    log = RunLog("clean", args.seed, _params(args))
    log.add_inputs(wavs)
    log.add_outputs(outputs + [audit])
    log.write(out / "run.json")
    print(f"accepted {len(outputs)} of {len(wavs)} clips (threshold {cfg.threshold})")
    return EXIT_OK


# ---------------------------------------------------------------- scale-search

def cmd_scale_search(args) -> int:
    from .model import count_params, resolve_arch
    from .scaling import SearchSpec, apply_scaling, enumerate_candidates

    spec = SearchSpec(args.lo, args.hi, args.step, args.target, args.tol)
    base = resolve_arch(args.base)
    cands = enumerate_candidates(spec)
    header = ["alpha", "beta", "gamma", "product", "params", "channels", "repeats"]
    lines = []
    for c in cands:
        arch = apply_scaling(base, c)
        lines.append([f"{float(c.alpha):g}", f"{float(c.beta):g}", f"{float(c.gamma):g}",
                      f"{float(c.product):.6f}", count_params(arch).total,
                      " ".join(str(s.channels) for s in arch.stages),
                      " ".join(str(s.repeats) for s in arch.stages)])
    dest = open(args.out, "w", newline="") if args.out else sys.stdout
    try:
        w = csv.writer(dest, lineterminator="\n")
        w.writerow(header)
        w.writerows(lines)
    finally:
        if args.out:
            dest.close()
    msg = f"candidates: {len(cands)} (reported: 75, delta {len(cands) - 75:+d})"
    print(msg, file=sys.stderr if not args.out else sys.stdout)
    if args.out:
        log = RunLog("scale-search", args.seed, _params(args))
        if Path(args.base).is_file():
            log.add_inputs([args.base])
        log.add_outputs([args.out])
        log.write(str(args.out) + ".run.json")
    return EXIT_OK


# ---------------------------------------------------------------- model-info

def model_info(arch, frames: int, toggles: bool) -> dict:
    from .model import (REPORTED_A0_FLOPS, REPORTED_A0_PARAMS, convention_report, count_flops,
                        count_params)

    params = count_params(arch)
    flops = count_flops(arch, (frames, arch.input_shape[1]))
    info = {
        "arch": arch.name,
        "stages": [dict(stage=i + 1, **s.__dict__) for i, s in enumerate(arch.stages)],
        "params": {"total": params.total, "per_stage": params.per_stage},
        "flops": {"input_shape": list(flops.input_shape), "macs": flops.macs, "flops_2x": flops.flops,
                  "per_stage_macs": flops.per_stage},
    }
    if arch.name == "a0":
        info["params"]["reported"] = REPORTED_A0_PARAMS
        info["params"]["delta"] = params.total - REPORTED_A0_PARAMS
        info["flops"]["reported"] = REPORTED_A0_FLOPS
        info["flops"]["delta_macs"] = flops.macs - REPORTED_A0_FLOPS
        info["flops"]["delta_flops_2x"] = flops.flops - REPORTED_A0_FLOPS
    if toggles or (arch.name == "a0" and params.total != REPORTED_A0_PARAMS):
        info["convention_report"] = convention_report(arch)
    return info


def render_model_info(info: dict) -> str:
    lines = [f"architecture: {info['arch']}",
             f"{'stage':>5}  {'operator':<8} {'kernel':>6} {'channels':>8} {'layers':>6} {'stride':>6} {'params':>9}"]
    per_stage = info["params"]["per_stage"]
    for s in info["stages"]:
        kernel = f"{s['kernel']}x{s['kernel']}"
        n_params = per_stage.get(f"stage{s['stage']}", 0)
        lines.append(f"{s['stage']:>5}  {s['operator']:<8} {kernel:>6} {s['channels']:>8} "
                     f"{s['repeats']:>6} {s['stride']:>6} {n_params:>9}")
    p = info["params"]
    lines.append(f"parameters: {p['total']}" + (f" (reported {p['reported']}, delta {p['delta']:+d})" if "reported" in p else ""))
    f = info["flops"]
    shape = "x".join(map(str, f["input_shape"]))
    lines.append(f"MACs @ {shape}: {f['macs']}   2*MACs: {f['flops_2x']}" +
                 (f"   (reported {f['reported']}; delta MACs {f['delta_macs']:+d}, 2*MACs {f['delta_flops_2x']:+d})"
                  if "reported" in f else ""))
    if "convention_report" in info:
        rep = info["convention_report"]
        lines.append(f"convention toggles (target {rep['target']}):")
        for name, r in rep["toggles"].items():
            lines.append(f"  {name:<18} {r['total']:>9} {r['delta']:>+9} ({100 * r['rel_delta']:+.2f}%)")
        lines.append("repeat probes:")
        for name, r in rep["repeat_probes"].items():
            lines.append(f"  {name:<18} {r['total']:>9} {r['delta']:>+9} ({100 * r['rel_delta']:+.2f}%)")
    return "\n".join(lines)


def cmd_model_info(args) -> int:
    from .model import init_weights, resolve_arch, save_arch, save_weights

    arch = resolve_arch(args.arch)
    info = model_info(arch, args.frames, args.toggles)
    print(json.dumps(info, indent=2) if args.json else render_model_info(info))
    outputs = []
    if args.emit_weights:
        save_weights(init_weights(arch, args.seed), args.emit_weights)
        outputs.append(args.emit_weights)
    if args.save_arch:
        save_arch(arch, args.save_arch)
        outputs.append(args.save_arch)
    if outputs:
        log = RunLog("model-info", args.seed, _params(args))
        log.add_outputs(outputs)
        log.write(str(outputs[0]) + ".run.json")
    return EXIT_OK


# ---------------------------------------------------------------- infer

def cmd_infer(args) -> int:
    from .dataset import class_names
    from .frontend import FrontendConfig, load_features, mfcc
    from .model import forward

    arch, ws = _load_model(args.arch, args.weights)
    inputs: list[Path] = [Path(p) for p in args.wav]
    if args.wav_dir:
        inputs += _files(args.wav_dir, {".wav"})
    if args.features_dir:
        inputs += _files(args.features_dir, {".feat"})
    if not inputs:
        raise UsageError("nothing to score: give --wav, --wav-dir or --features-dir")
    cfg = FrontendConfig()
    names = class_names() if arch.num_classes == 20 else [str(i) for i in range(arch.num_classes)]

    def one(p: Path):
        fm = load_features(p) if p.suffix.lower() == ".feat" else mfcc(load_wav(p), cfg)
        probs = forward(arch, ws, fm)
        return {"input": str(p), "top": names[int(np.argmax(probs))],
                "probs": [float(f"{x:.8f}") for x in probs]}

    results = _pmap(one, inputs, args.threads)
    if args.out:
        _write_jsonl(Path(args.out), results)
        log = RunLog("infer", args.seed, _params(args))
        log.add_inputs([args.weights] + inputs)
        log.add_outputs([args.out])
        log.write(str(args.out) + ".run.json")
    if len(results) == 1 and not args.out:
        for name, p in zip(names, results[0]["probs"]):
            print(f"{name:<12} {p:.6f}")
    elif not args.out:
        for r in results:
            print(json.dumps(r))
    else:
        print(f"scored {len(results)} inputs -> {args.out}")
    return EXIT_OK


# ---------------------------------------------------------------- validate

def cmd_validate(args) -> int:
    from .dataset import load_manifest, speaker_disjointness, validate_counts

    m = load_manifest(args.manifest, root=args.root, check_files=args.check_files)
    report = {"manifest": str(args.manifest), "rows": len(m),
              "counts": validate_counts(m), "speakers": speaker_disjointness(m)}
    text = json.dumps(report, indent=2, ensure_ascii=False)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
        log = RunLog("validate", args.seed, _params(args))
        log.add_inputs([args.manifest])
        log.add_outputs([args.out])
        log.write(str(args.out) + ".run.json")
        totals = {k: v["total"] for k, v in report["counts"]["splits"].items()}
        print(f"{len(m)} rows; totals {totals}; all deltas zero: {report['counts']['all_zero_deltas']}")
    else:
        print(text)
    return EXIT_OK


# ---------------------------------------------------------------- parser

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="global seed (default 0)")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="count", default=0)

    p = _Parser(prog="kwspot", description="Keyword-spotting data and model toolkit.")
    p.add_argument("--version", action="version", version=f"kwspot {__version__}")
    sub = p.add_subparsers(dest="command", metavar="COMMAND", parser_class=_Parser)

    s = sub.add_parser("synth", parents=[common], help="embed keywords into continuous-speech backgrounds")
    s.add_argument("--keywords", required=True)
    s.add_argument("--backgrounds", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--n", type=int, default=None, help="number of keyword samples (cycles through keywords)")
    s.add_argument("--bound", type=parse_duration, default=2000)
    s.add_argument("--bg-mode", choices=("literal", "ramp"), default="literal")
    s.add_argument("--noises")
    s.add_argument("--n-silence", type=int, default=0)
    s.add_argument("--n-unknown", type=int, default=0)
    s.add_argument("--noise-n", type=float, default=0.12)
    s.set_defaults(func=cmd_synth)

    s = sub.add_parser("features", parents=[common], help="MFCC feature maps for a directory of WAVs")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--format", choices=("bin", "csv"), default="bin")
    s.add_argument("--n-fft", type=int, default=512)
    s.add_argument("--taper", choices=("hann", "hamming", "rect"), default="hann")
    s.set_defaults(func=cmd_features)

    s = sub.add_parser("augment", parents=[common], help="SpecAugment feature maps / add noise to WAVs")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--sa-f", type=int, default=5)
    s.add_argument("--sa-t", type=int, default=8)
    s.add_argument("--sa-p", type=float, default=0.5)
    s.add_argument("--fill", default="0.0", help="mask value, or 'mean'")
    s.add_argument("--noise-n", type=float, default=0.12)
    s.add_argument("--noises")
    s.set_defaults(func=cmd_augment)

    s = sub.add_parser("clean", parents=[common], help="sliding-window keyword extraction with a confidence gate")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--threshold", type=float, default=0.97)
    s.add_argument("--win", type=parse_duration, default=20000)
    s.add_argument("--stride", type=parse_duration, default=1600)
    s.add_argument("--audit")
    s.add_argument("--scorer-cmd", help="external scorer speaking newline-delimited JSON")
    s.add_argument("--weights", help="score with the in-package network")
    s.add_argument("--arch", default="a0")
    s.add_argument("--target-class", help="class whose probability is gated (default: best keyword)")
    s.set_defaults(func=cmd_clean)

    s = sub.add_parser("scale-search", parents=[common], help="enumerate compound scaling candidates")
    s.add_argument("--target", default="0.05")
    s.add_argument("--tol", default="0.003")
    s.add_argument("--lo", default="0.25")
    s.add_argument("--hi", default="0.6")
    s.add_argument("--step", default="0.01")
    s.add_argument("--base", default="b0", help="builtin name or architecture JSON")
    s.add_argument("--out")
    s.set_defaults(func=cmd_scale_search)

    s = sub.add_parser("model-info", parents=[common], help="stage table, parameter and MAC counts")
    s.add_argument("--arch", default="a0")
    s.add_argument("--frames", type=int, default=198)
    s.add_argument("--toggles", action="store_true")
    s.add_argument("--json", action="store_true")
    s.add_argument("--emit-weights", help="write seeded random weights to this file")
    s.add_argument("--save-arch", help="write the architecture JSON to this file")
    s.set_defaults(func=cmd_model_info)

    s = sub.add_parser("infer", parents=[common], help="20-class distribution for WAVs or feature maps")
    s.add_argument("--arch", default="a0")
    s.add_argument("--weights", required=True)
    s.add_argument("--wav", action="append", default=[])
    s.add_argument("--wav-dir")
    s.add_argument("--features-dir")
    s.add_argument("--out")
    s.set_defaults(func=cmd_infer)

    s = sub.add_parser("validate", parents=[common], help="manifest counts and speaker disjointness report")
    s.add_argument("--manifest", required=True)
    s.add_argument("--root")
    s.add_argument("--check-files", action="store_true")
    s.add_argument("--out")
    s.set_defaults(func=cmd_validate)
    return p


def _error(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            raise UsageError(f"kwspot: choose a subcommand: {', '.join(SUBCOMMANDS)}")
        return args.func(args)
    except UsageError as exc:
        _error("usage", str(exc))
        return EXIT_USAGE
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (OSError, ValueError, KeyError, RuntimeError) as exc:
        _error(type(exc).__name__, str(exc))
        return EXIT_RUNTIME


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
