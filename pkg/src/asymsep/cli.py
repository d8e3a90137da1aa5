"""Command-line interface.

Subcommands: ``windows``, ``verify``, ``mix``, ``separate``, ``eval``, ``sweep``.
Settings resolve as flags > ``--config`` file > defaults. The config file is
flat ``key = value`` text; every run that writes to ``--out`` also writes the
resolved settings to ``run_config.txt`` there, which can be passed back with
``--config`` to repeat the run.

Exit codes: 0 ok, 1 usage/configuration error, 2 data error.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .audio import read_wav, write_wav
from .corpus import load_corpus, synth_corpus
from .errors import AsymSepError, DataError, InvalidConfigError
from .masks import load_mask
from .metrics import bss_eval
from .pipeline import (
    MixtureSpec, compare_schemes, external_mask_separate, format_score_rows,
    format_table, make_mixture, oracle_separate, sweep_analysis_lengths,
    write_mixture_csv, write_summary_csv, write_summary_json,
)
from .streaming import PrecomputedMaskEstimator, StreamProcessor, unity_estimator
from .windows import (
    WindowConfig, design_pair, verify_perfect_reconstruction, window_pair_table,
)

log = logging.getLogger("asymsep")

PR_TOLERANCE = 1e-10


def _floats(text):
    return [float(v) for v in str(text).replace(",", " ").split()]


# key -> (parser, default)
SETTINGS = {
    "analysis_ms": (float, 32.0),
    "synthesis_ms": (float, 8.0),
    "dead_zone": (int, 0),
    "scheme": (str, None),
    "mask": (str, "irm"),
    "tau": (float, 0.1),
    "filter_len": (int, 512),
    "rate": (int, 8000),
    "trim_db": (float, -40.0),
    "gains": (_floats, [0.0, 0.0]),
    "lengths": (_floats, [8.0, 16.0, 32.0, 46.0]),
    "schemes": (str, "32:32,8:8,32:8"),
    "corpus": (str, None),
    "synthetic": (int, 30),
    "duration": (float, 1.5),
    "seed": (int, 0),
    "jobs": (int, 1),
    "test_len": (int, None),
}


class UsageError(Exception):
    pass


def read_config_file(path) -> dict:
    values = {}
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise UsageError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{lineno}: expected key = value")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key not in SETTINGS:
            raise UsageError(f"{path}:{lineno}: unknown setting {key!r}")
        if val.lower() in ("", "none"):
            values[key] = None
            continue
        try:
            values[key] = SETTINGS[key][0](val)
        except ValueError as exc:
            raise UsageError(f"{path}:{lineno}: bad value for {key}: {val!r}") from exc
    return values


def resolve(args) -> dict:
    """Merge flags over the config file over defaults."""
    cfg = {k: d for k, (_, d) in SETTINGS.items()}
    if getattr(args, "config", None):
        cfg.update(read_config_file(args.config))
    for k in SETTINGS:
        v = getattr(args, k, None)
        if v is not None:
            cfg[k] = v
    return cfg


def write_run_config(path, cfg: dict, command: str) -> None:
    lines = [f"# asymsep {command}"]
    for k in SETTINGS:
        v = cfg[k]
        if isinstance(v, list):
            v = ",".join(repr(x) for x in v)
        lines.append(f"{k} = {'none' if v is None else v}")
    Path(path).write_text("\n".join(lines) + "\n")


def window_config(cfg: dict) -> WindowConfig:
    a_ms, s_ms = cfg["analysis_ms"], cfg["synthesis_ms"]
    scheme = cfg["scheme"]
    if scheme == "sym":
        s_ms = a_ms
    elif scheme not in (None, "asym"):
        raise UsageError(f"--scheme must be sym or asym, got {scheme!r}")
    try:
        return WindowConfig.from_ms(a_ms, s_ms, cfg["rate"], cfg["dead_zone"])
    except InvalidConfigError as exc:
        raise UsageError(str(exc)) from exc


def _out_dir(cfg, args) -> Path:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_corpus(cfg):
    if cfg["corpus"]:
        pairs, rate = load_corpus(cfg["corpus"])
        if rate != cfg["rate"]:
            log.info("corpus is %d Hz; overriding --rate", rate)
            cfg["rate"] = rate
        return pairs
    return synth_corpus(cfg["synthetic"], cfg["rate"], cfg["duration"], cfg["seed"])


def _oracle_kind(mask: str) -> str:
    if mask not in ("ibm", "irm", "unity"):
        raise UsageError(f"oracle experiments need --mask ibm|irm|unity, got {mask!r}")
    return mask


# -- subcommands --------------------------------------------------------------

def cmd_windows(args, cfg) -> int:
    pair = design_pair(window_config(cfg))
    out = _out_dir(cfg, args)
    with open(out / "windows.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["n", "analysis", "synthesis", "product"])
        for n, (a, s) in enumerate(zip(pair.analysis, pair.synthesis)):
            w.writerow([n, repr(float(a)), repr(float(s)), repr(float(a * s))])
    (out / "windows.json").write_text(json.dumps(window_pair_table(pair), indent=1) + "\n")
    write_run_config(out / "run_config.txt", cfg, "windows")
    c = pair.config
    print(f"{c.label()}: K={c.analysis_len} 2M={c.synthesis_len} M={c.hop} "
          f"d={c.dead_zone} -> {out / 'windows.csv'}")
    return 0


def cmd_verify(args, cfg) -> int:
    pair = design_pair(window_config(cfg))
    K = pair.config.analysis_len
    test_len = cfg["test_len"] or max(cfg["rate"], 4 * K)
    if test_len < 4 * K:
        raise UsageError(f"--test-len must be at least 4K = {4 * K}")
    err = verify_perfect_reconstruction(pair, test_len)
    ok = err < PR_TOLERANCE
    print(f"{pair.config.label()} max relative reconstruction error {err:.3e} "
          f"({'PASS' if ok else 'FAIL'} at {PR_TOLERANCE:g})")
    return 0 if ok else 2


def cmd_mix(args, cfg) -> int:
    if not args.sources or len(args.sources) != 2:
        raise UsageError("mix needs --sources A.wav B.wav")
    spec = MixtureSpec(tuple(args.sources), tuple(cfg["gains"]), None, cfg["trim_db"])
    mix, refs, rate = make_mixture(spec)
    out = _out_dir(cfg, args)
    write_wav(out / "mixture.wav", mix, rate)
    for j, r in enumerate(refs, 1):
        write_wav(out / f"ref{j}.wav", r, rate)
    write_run_config(out / "run_config.txt", cfg, "mix")
    print(f"wrote {len(mix)} samples at {rate} Hz to {out}")
    return 0


def cmd_separate(args, cfg) -> int:
    if not args.mixture:
        raise UsageError("separate needs --mixture")
    mix, rate = read_wav(args.mixture)
    if rate != cfg["rate"]:
        log.info("mixture is %d Hz; overriding --rate", rate)
        cfg["rate"] = rate
    pair = design_pair(window_config(cfg))
    mask = cfg["mask"]
    out = _out_dir(cfg, args)

    if args.streaming:
        if mask == "unity":
            est = unity_estimator
        elif mask.startswith("file:"):
            est = PrecomputedMaskEstimator(load_mask(mask[5:]))
        else:
            raise UsageError("--streaming supports --mask unity or file:<path>")
        y = StreamProcessor(pair, est).run(mix, chunk_size=pair.config.hop)
        # place on the input clock: output leaves 2M samples after its input
        delayed = np.concatenate([np.zeros(pair.config.latency), y])[:len(mix)]
        estimates = [delayed]
    elif mask == "unity":
        estimates = oracle_separate(mix, [mix], pair, "unity")
    elif mask.startswith("file:"):
        estimates = external_mask_separate(mix, pair, load_mask(mask[5:]))
    else:
        kind = _oracle_kind(mask)
        if not args.references or len(args.references) != 2:
            raise UsageError("oracle masks need --references R1.wav R2.wav")
        refs = []
        for p in args.references:
            r, rr = read_wav(p)
            if rr != rate:
                raise DataError(f"{p} is {rr} Hz, mixture is {rate} Hz")
            if len(r) != len(mix):
                raise DataError(f"{p} has {len(r)} samples, mixture has {len(mix)}")
            refs.append(r)
        estimates = oracle_separate(mix, refs, pair, kind)

    for j, e in enumerate(estimates, 1):
        write_wav(out / f"est{j}.wav", e, rate)
    write_run_config(out / "run_config.txt", cfg, "separate")
    print(f"{pair.config.label()} mask={mask}: wrote {len(estimates)} estimate(s) to {out}")
    return 0


def cmd_eval(args, cfg) -> int:
    if args.estimates:
        if not args.references or len(args.references) != len(args.estimates):
            raise UsageError("eval needs as many --references as --estimates")
        est = [read_wav(p) for p in args.estimates]
        ref = [read_wav(p) for p in args.references]
        if len({r for _, r in est + ref}) != 1:
            raise DataError("sample rate mismatch between estimates and references")
        n = min(len(x) for x, _ in est + ref)
        if any(len(x) != n for x, _ in est + ref):
            log.warning("signals differ in length; truncating to %d samples", n)
        scores = bss_eval([x[:n] for x, _ in est], [x[:n] for x, _ in ref], cfg["filter_len"])
        c = window_config(cfg)
        label = "Sym." if c.is_symmetric else "Asym."
        lengths = (1000.0 * c.analysis_len / c.sample_rate,
                   1000.0 * c.synthesis_len / c.sample_rate)
        print(format_score_rows(label, lengths, scores))
        if args.out:
            out = _out_dir(cfg, args)
            with open(out / "scores.csv", "w", newline="") as f:
                w = csv.writer(f)
                w.writerow(["source", "sdr", "sir", "sar"])
                for j, s in enumerate(scores, 1):
                    w.writerow([j, repr(s.sdr), repr(s.sir), repr(s.sar)])
        return 0

    corpus = _load_corpus(cfg)
    schemes = []
    for item in cfg["schemes"].split(","):
        try:
            a, s = item.split(":")
            schemes.append((float(a), float(s)))
        except ValueError as exc:
            raise UsageError(f"bad scheme {item!r}; expected A:S in ms") from exc
    results = compare_schemes(corpus, cfg["rate"], schemes, _oracle_kind(cfg["mask"]),
                              dead_zone=cfg["dead_zone"], filter_len=cfg["filter_len"],
                              tau=cfg["tau"], trim_threshold_db=cfg["trim_db"],
                              jobs=cfg["jobs"])
    print(format_table(results))
    if args.out:
        _save_results(_out_dir(cfg, args), "eval", results, cfg)
    return 0


def cmd_sweep(args, cfg) -> int:
    corpus = _load_corpus(cfg)
    results = sweep_analysis_lengths(corpus, cfg["lengths"], cfg["synthesis_ms"],
                                     _oracle_kind(cfg["mask"]), cfg["rate"],
                                     dead_zone=cfg["dead_zone"], filter_len=cfg["filter_len"],
                                     tau=cfg["tau"], trim_threshold_db=cfg["trim_db"],
                                     jobs=cfg["jobs"])
    print(format_table(results))
    if args.out:
        _save_results(_out_dir(cfg, args), "sweep", results, cfg)
    return 0


def _save_results(out: Path, name: str, results, cfg) -> None:
    write_summary_csv(out / f"{name}.csv", results)
    write_mixture_csv(out / f"{name}_mixtures.csv", results)
    write_summary_json(out / f"{name}.json", results,
                       {k: cfg[k] for k in SETTINGS})
    write_run_config(out / "run_config.txt", cfg, name)


COMMANDS = {
    "windows": cmd_windows, "verify": cmd_verify, "mix": cmd_mix,
    "separate": cmd_separate, "eval": cmd_eval, "sweep": cmd_sweep,
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    g = common.add_argument_group("window and run settings")
    g.add_argument("--config", help="flat key = value settings file")
    g.add_argument("--analysis-ms", type=float, help="analysis window length (default 32)")
    g.add_argument("--synthesis-ms", type=float, help="synthesis window length (default 8)")
    g.add_argument("--dead-zone", type=int, help="leading zeros of the analysis window, samples")
    g.add_argument("--scheme", choices=["sym", "asym"],
                   help="sym forces synthesis length = analysis length")
    g.add_argument("--mask", help="ibm | irm | unity | file:<path> (default irm)")
    g.add_argument("--tau", type=float, help="overlap threshold relative to mixture peak")
    g.add_argument("--filter-len", type=int, help="BSS-eval distortion filter taps (default 512)")
    g.add_argument("--rate", type=int, help="sample rate in Hz (default 8000)")
    g.add_argument("--trim-db", type=float, help="leading-silence threshold, dB below peak")
    g.add_argument("--out", default=None, help="output directory")
    g.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(
        prog="asymsep",
        description="Low-latency mask-based separation with asymmetric windows.")
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("windows", parents=[common], help="write a window pair as CSV/JSON")
    p.set_defaults(out_default=".")

    p = sub.add_parser("verify", parents=[common], help="check perfect reconstruction")
    p.add_argument("--test-len", type=int, help="test signal length in samples")

    p = sub.add_parser("mix", parents=[common], help="make a two-talker mixture")
    p.add_argument("--sources", nargs=2, metavar="WAV")
    p.add_argument("--gains", nargs=2, type=float, metavar="DB")
    p.set_defaults(out_default="mix")

    p = sub.add_parser("separate", parents=[common], help="mask-based separation")
    p.add_argument("--mixture", metavar="WAV")
    p.add_argument("--references", nargs="+", metavar="WAV")
    p.add_argument("--streaming", action="store_true",
                   help="run the streaming engine (output delayed by 2M samples)")
    p.set_defaults(out_default="separated")

    for name, help_ in (("eval", "score estimates or run the oracle window comparison"),
                        ("sweep", "oracle SDR versus analysis window length")):
        p = sub.add_parser(name, parents=[common], help=help_)
        if name == "eval":
            p.add_argument("--estimates", nargs="+", metavar="WAV")
            p.add_argument("--references", nargs="+", metavar="WAV")
            p.add_argument("--schemes", help="comma list of A:S in ms (default 32:32,8:8,32:8)")
        else:
            p.add_argument("--lengths", nargs="+", type=float,
                           help="analysis lengths in ms (default 8 16 32 46)")
        p.add_argument("--corpus", help="directory of mixNNN/s1.wav,s2.wav")
        p.add_argument("--synthetic", type=int, help="size of generated corpus (default 30)")
        p.add_argument("--duration", type=float, help="generated source length, s")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int, help="parallel mixtures")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    if args.out is None:
        args.out = getattr(args, "out_default", None)
    try:
        cfg = resolve(args)
        return COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"asymsep {args.command}: {exc}", file=sys.stderr)
        return 1
    except InvalidConfigError as exc:
        print(f"asymsep {args.command}: {exc}", file=sys.stderr)
        return 1
    except (DataError, AsymSepError, OSError) as exc:
        print(f"asymsep {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
