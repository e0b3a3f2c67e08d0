"""Command-line front end.

Machine-readable results go to stdout; progress and diagnostics to stderr.
"""

import argparse
import json
import logging
import os
import sys
import tempfile
import time
from fractions import Fraction
from pathlib import Path

import numpy as np

from seedcodec import container, explorer
from seedcodec.codec import (
    EXPONENT_RULES,
    ReconstructionStats,
    build_pinv_cache,
    candidate_seeds,
    compress_tensor,
    decompress_tensor,
)
from seedcodec.config import PRESETS, BlockConfig
from seedcodec.errors import ConfigError, FormatError, NonFiniteInputError, ShapeMismatchError
from seedcodec.lfsr import TAPS, LfsrSpec, build_cycle_cache, normalize_states, raw_matrix, standard_cache

logger = logging.getLogger("seedcodec")

DEFAULT_BITS = 4

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_SHAPE = 4
EXIT_CONFIG = 5
EXIT_NONFINITE = 6
EXIT_FORMAT = 7


class CliError(Exception):
    def __init__(self, message, code):
        super().__init__(message)
        self.code = code


def parse_config(text: str) -> BlockConfig:
    """``C,P,K`` (integral bit budget required) or ``C,P,K,M`` with M checked exactly."""
    parts = [s.strip() for s in text.split(",")]
    if len(parts) not in (3, 4):
        raise ConfigError(f"--config expects C,P,K or C,P,K,M, got {text!r}")
    try:
        c, p, k = (int(s) for s in parts[:3])
        m = Fraction(parts[3]) if len(parts) == 4 else None
    except ValueError:
        raise ConfigError(f"--config values must be numbers, got {text!r}") from None
    cfg = BlockConfig(c, p, k, m)
    if m is None and cfg.m.denominator != 1:
        raise ConfigError(
            f"C={c},P={p},K={k} stores {cfg.block_bits} bits per {c} elements (M={cfg.m}), "
            f"not a whole number of bits; pass M explicitly as C,P,K,M to accept it"
        )
    return cfg


def _fraction(text):
    try:
        value = Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if value <= 0:
        raise argparse.ArgumentTypeError("must be positive")
    return value


def _positive_int(text):
    try:
        value = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if value < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return value


def _shape(text):
    try:
        return container.parse_shape(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def load_manifest(path):
    """Read ``[{"name", "shape", "path"}, ...]`` (optionally under a ``"tensors"`` key)."""
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except OSError as exc:
        raise CliError(f"cannot read manifest: {exc}", EXIT_IO) from None
    except json.JSONDecodeError as exc:
        raise CliError(f"manifest is not valid JSON: {exc}", EXIT_USAGE) from None
    entries = doc["tensors"] if isinstance(doc, dict) else doc
    out = []
    for i, entry in enumerate(entries):
        try:
            shape = entry["shape"]
            shape = container.parse_shape(shape) if isinstance(shape, str) else tuple(int(d) for d in shape)
            file = Path(entry["path"])
            out.append((str(entry.get("name", file.stem)), shape, file if file.is_absolute() else path.parent / file))
        except (KeyError, TypeError, ValueError) as exc:
            raise CliError(f"manifest entry {i} is invalid: {exc}", EXIT_USAGE) from None
    names = [name for name, _, _ in out]
    if len(set(names)) != len(names):
        raise CliError("manifest has duplicate tensor names", EXIT_USAGE)
    return out


def _inputs(args):
    if args.manifest:
        if args.input:
            raise CliError("give either an input file or --manifest, not both", EXIT_USAGE)
        return load_manifest(args.manifest)
    if not args.input:
        raise CliError("an input file or --manifest is required", EXIT_USAGE)
    if args.shape is None:
        raise CliError("--shape is required for raw tensor input", EXIT_USAGE)
    name = args.name or Path(args.input).stem
    return [(name, args.shape, Path(args.input))]


def _read_tensor(path, shape):
    try:
        return container.read_plain_tensor(path, shape)[0]
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def _atomic_write(path, data: bytes):
    path = Path(path)
    try:
        fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.")
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
        os.replace(tmp, path)
    except OSError as exc:
        raise CliError(f"cannot write {path}: {exc}", EXIT_IO) from None


def _block_config(args):
    if args.config:
        return parse_config(args.config)
    return BlockConfig.preset(args.bits if args.bits is not None else DEFAULT_BITS)


def cmd_compress(args):
    config = _block_config(args)
    inputs = _inputs(args)
    cache = standard_cache(config.k)
    seeds = candidate_seeds(config.k, args.seed_stride)
    t0 = time.perf_counter()
    pinv = build_pinv_cache(config, cache, seeds)
    logger.info("built %d pseudo-inverses for %s in %.2fs", len(pinv), config, time.perf_counter() - t0)

    tensors = {}
    rows = []
    for name, shape, path in inputs:
        data = _read_tensor(path, shape)
        t0 = time.perf_counter()
        ct, stats = compress_tensor(data, pinv, shape, cache, threads=args.threads,
                                    exponent_rule=args.exponent_rule)
        elapsed = time.perf_counter() - t0
        tensors[name] = ct
        bpe = ct.payload_bits / ct.element_count
        rows.append((name, "x".join(map(str, shape)), f"{stats.mse:.6e}", f"{stats.relative_error:.6e}",
                     f"{bpe:.4f}", f"{elapsed:.3f}"))
        logger.info("%s: %d blocks, mse %.4g, %.2fs", name, ct.num_blocks, stats.mse, elapsed)

    data = container.encode(tensors)
    _atomic_write(args.output, data)
    print("name\tshape\tmse\trel_err\tbits_per_element\tseconds")
    for row in rows:
        print("\t".join(row))
    print(f"# wrote {len(data)} bytes to {args.output}")
    return EXIT_OK


def _read_container(path):
    try:
        return container.read_container(path)
    except OSError as exc:
        raise CliError(f"cannot read {path}: {exc}", EXIT_IO) from None


def cmd_decompress(args):
    tensors = _read_container(args.input)
    if args.tensor is not None:
        if args.tensor not in tensors:
            raise CliError(f"no tensor named {args.tensor!r} in {args.input}", EXIT_USAGE)
        tensors = {args.tensor: tensors[args.tensor]}
    out = Path(args.output)
    if len(tensors) == 1:
        targets = {name: out for name in tensors}
    else:
        try:
            out.mkdir(parents=True, exist_ok=True)
        except OSError as exc:
            raise CliError(f"cannot create {out}: {exc}", EXIT_IO) from None
        targets = {name: out / (name.replace("/", "_").replace(os.sep, "_") + ".f32") for name in tensors}
    for name, ct in tensors.items():
        arr = decompress_tensor(ct)
        _atomic_write(targets[name], arr.astype("<f4").tobytes())
        print(f"{name}\t{'x'.join(map(str, ct.shape))}\t{targets[name]}")
    return EXIT_OK


def cmd_stats(args):
    tensors = _read_container(args.compressed)
    if args.manifest:
        originals = load_manifest(args.manifest)
    else:
        if not args.original:
            raise CliError("an original tensor file or --manifest is required", EXIT_USAGE)
        if len(tensors) != 1 and args.name is None:
            raise CliError("container holds several tensors; use --manifest or --name", EXIT_USAGE)
        name = args.name or next(iter(tensors))
        if name not in tensors:
            raise CliError(f"no tensor named {name!r} in {args.compressed}", EXIT_USAGE)
        shape = args.shape or tensors[name].shape
        originals = [(name, shape, Path(args.original))]

    print("name\tshape\tmse\trel_err\tmax_abs_err\tsize_ratio")
    total_sq = total_energy = 0.0
    total_n = 0
    max_abs = 0.0
    raw_bytes = 0
    for name, shape, path in originals:
        if name not in tensors:
            raise CliError(f"no tensor named {name!r} in {args.compressed}", EXIT_SHAPE)
        ct = tensors[name]
        if tuple(shape) != ct.shape:
            raise CliError(f"{name}: original shape {tuple(shape)} != compressed shape {ct.shape}", EXIT_SHAPE)
        x = _read_tensor(path, shape).astype(np.float64).reshape(-1)
        y = decompress_tensor(ct).astype(np.float64).reshape(-1)
        st = ReconstructionStats.from_arrays(x, y)
        ratio = container.payload_size(ct.num_blocks, ct.config) / (4 * x.size)
        total_sq += st.mse * x.size
        total_energy += float(np.dot(x, x))
        total_n += x.size
        max_abs = max(max_abs, st.max_abs_error)
        raw_bytes += 4 * x.size
        print(f"{name}\t{'x'.join(map(str, shape))}\t{st.mse:.6e}\t{st.relative_error:.6e}\t"
              f"{st.max_abs_error:.6e}\t{ratio:.6f}")
    file_ratio = Path(args.compressed).stat().st_size / raw_bytes
    rel = total_sq / total_energy if total_energy > 0 else 0.0
    print(f"TOTAL\t-\t{total_sq / total_n:.6e}\t{rel:.6e}\t{max_abs:.6e}\t{file_ratio:.6f}")
    return EXIT_OK


def cmd_search(args):
    if args.max_k > max(TAPS):
        raise CliError(f"--max-k must be <= {max(TAPS)}", EXIT_USAGE)
    configs = explorer.enumerate_configs(args.bits, args.max_c, args.max_k)
    logger.info("evaluating %d configurations at M=%s", len(configs), args.bits)
    points = [explorer.evaluate_config(cfg, args.trials, args.rng_seed,
                                       stride=args.seed_stride if args.seed_stride > 1 else None,
                                       threads=args.threads)
              for cfg in configs]
    points.sort(key=lambda pt: (pt.mean_relative_error, pt.config.c, pt.config.p, pt.config.k))
    if args.output:
        try:
            with open(args.output, "w", newline="") as fh:
                explorer.write_csv(points, fh)
        except OSError as exc:
            raise CliError(f"cannot write {args.output}: {exc}", EXIT_IO) from None
    else:
        explorer.write_csv(points, sys.stdout)
    if points:
        print(explorer.format_ranking(points), file=sys.stderr)
    else:
        print(f"no feasible configurations for M={args.bits}", file=sys.stderr)
    return EXIT_OK


def _fmt_row(values):
    return "[" + ", ".join(values) + "]"


def cmd_lfsr_dump(args, parser):
    if args.k not in TAPS:
        parser.error(f"--k must be in {min(TAPS)}..{max(TAPS)}")
    spec = LfsrSpec(args.k)
    if not 1 <= args.seed <= spec.period:
        parser.error(f"--seed must be in [1, {spec.period}] for k={args.k}")
    cache = build_cycle_cache(spec)
    steps = args.steps if args.steps is not None else len(cache)
    cycle = cache.cycle_from(args.seed, steps)
    print(f"k={spec.k} taps={list(spec.taps)} period={spec.period}")
    print(f"cycle ({len(cycle)} states from seed {args.seed}): {' '.join(map(str, cycle.tolist()))}")
    raw = raw_matrix(cache, args.seed, args.rows, args.cols)
    print(f"V({args.seed}) = {json.dumps(raw.tolist())}")
    norm = normalize_states(raw, spec.k)
    body = ", ".join(_fmt_row(f"{v:.6g}" for v in row) for row in norm)
    print(f"U({args.seed}) = [{body}]")
    return EXIT_OK


def build_parser():
    parser = argparse.ArgumentParser(prog="seedcodec", description="LFSR-seed weight compression codec")
    parser.add_argument("-v", "--verbose", action="count", default=0, help="more progress output on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        group = p.add_mutually_exclusive_group()
        group.add_argument("--bits", type=int, choices=sorted(PRESETS),
                           help="bits-per-element preset (default 4)")
        group.add_argument("--config", help="explicit C,P,K or C,P,K,M")

    p = sub.add_parser("compress", help="compress raw float32 tensors into an SDLM1 file")
    p.add_argument("input", nargs="?", help="raw little-endian float32 file")
    p.add_argument("--shape", type=_shape, help="tensor shape, e.g. 4096x1024")
    p.add_argument("--name", help="tensor name stored in the container (default: file stem)")
    p.add_argument("--manifest", help="JSON list of {name, shape, path}")
    p.add_argument("--output", "-o", required=True)
    add_config(p)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--seed-stride", type=_positive_int, default=1,
                   help="search every N-th seed only (default: all seeds)")
    p.add_argument("--exponent-rule", choices=EXPONENT_RULES, default="search")

    p = sub.add_parser("decompress", help="rebuild raw float32 tensors from an SDLM1 file")
    p.add_argument("input")
    p.add_argument("--output", "-o", required=True,
                   help="output file for one tensor, directory for several")
    p.add_argument("--tensor", help="only this tensor")

    p = sub.add_parser("stats", help="compare original tensors with a compressed file")
    p.add_argument("original", nargs="?")
    p.add_argument("compressed")
    p.add_argument("--shape", type=_shape)
    p.add_argument("--name")
    p.add_argument("--manifest")

    p = sub.add_parser("search", help="grid search over C, P, K for a bit budget")
    p.add_argument("--bits", type=_fraction, required=True, help="bits per element, e.g. 4 or 7/2")
    p.add_argument("--max-c", type=_positive_int, default=12)
    p.add_argument("--max-k", type=_positive_int, default=16)
    p.add_argument("--trials", type=_positive_int, default=explorer.DEFAULT_TRIALS)
    p.add_argument("--rng-seed", type=int, default=0)
    p.add_argument("--seed-stride", type=_positive_int, default=1)
    p.add_argument("--threads", type=_positive_int, default=1)
    p.add_argument("--output", "-o", help="CSV path (default stdout)")

    p = sub.add_parser("lfsr-dump", help="print an LFSR cycle and the matrices for one seed")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--rows", type=_positive_int, default=4)
    p.add_argument("--cols", type=_positive_int, default=2)
    p.add_argument("--steps", type=_positive_int, help="cycle states to print (default: whole cycle)")
    return parser


COMMANDS = {
    "compress": cmd_compress,
    "decompress": cmd_decompress,
    "stats": cmd_stats,
    "search": cmd_search,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "lfsr-dump":
            return cmd_lfsr_dump(args, parser)
        return COMMANDS[args.command](args)
    except CliError as exc:
        print(f"seedcodec: {exc}", file=sys.stderr)
        return exc.code
    except ConfigError as exc:
        print(f"seedcodec: invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ShapeMismatchError as exc:
        print(f"seedcodec: shape mismatch: {exc}", file=sys.stderr)
        return EXIT_SHAPE
    except NonFiniteInputError as exc:
        print(f"seedcodec: {exc}", file=sys.stderr)
        return EXIT_NONFINITE
    except FormatError as exc:
        print(f"seedcodec: format error: {exc}", file=sys.stderr)
        return EXIT_FORMAT
    except OSError as exc:
        print(f"seedcodec: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
