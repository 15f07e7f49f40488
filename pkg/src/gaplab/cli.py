"""Command-line front end.

Subcommands: solve, generate, trace, disc, mc, signs.  The experiment
commands read one JSON config document; outputs are CSV tables plus a JSON
report plus a run manifest with file digests, so a manifest and the
installed package reproduce every output byte for byte (the manifest's own
timestamp is the only thing that changes between identical reruns).

Exit codes: 0 ok, 2 usage or config error, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import datetime
import hashlib
import io
import json
import math
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np
import jsonschema

from . import __version__
from .construction import SeqParams, default_table, sequence_chunks
from .errors import ParameterError, RangeError, ResourceCapError
from .fixedpoint import UnitPoint, frac_mul_array
from .kernels import CenteredIndicator, PeriodicFunction, TrigPoly
from .montecarlo import (
    ExperimentConfig,
    _trajectory_inputs,
    element_cap,
    run_lil_experiment,
    variance_validation,
)
from .parameters import ConstantsReport, lil_constant, solve_params
from .rng import derive_seed
from .statistics import (
    MIN_RATIO_COUNT,
    extremal_discrepancy,
    geometric_checkpoints,
    lil_normalizer,
    littlewood_signs,
    star_discrepancy,
    trace_many,
)

_G17 = ".17g"


class ConfigError(ParameterError):
    """Config document rejected; message carries the offending path."""


def _fmt(value) -> str:
    if isinstance(value, float):
        return format(value, _G17)
    return str(value)


def _csv_bytes(header: list[str], rows: list[list]) -> bytes:
    buf = io.StringIO()
    buf.write(",".join(header) + "\n")
    for row in rows:
        buf.write(",".join(_fmt(v) for v in row) + "\n")
    return buf.getvalue().encode()


def _json_bytes(obj) -> bytes:
    return (json.dumps(obj, indent=2, sort_keys=True) + "\n").encode()


def _write_outputs(out_dir: str, command: str, files: dict[str, bytes], config_echo: dict) -> None:
    """Write payload files, then a manifest with their SHA-256 digests."""
    d = Path(out_dir)
    d.mkdir(parents=True, exist_ok=True)
    digests = {}
    for name, payload in files.items():
        (d / name).write_bytes(payload)
        digests[name] = hashlib.sha256(payload).hexdigest()
    manifest = {
        "tool": "gaplab",
        "version": __version__,
        "command": command,
        "created_utc": datetime.datetime.now(datetime.timezone.utc).isoformat(),
        "config": config_echo,
        "outputs": digests,
    }
    (d / "manifest.json").write_bytes(_json_bytes(manifest))
    for name in (*files, "manifest.json"):
        print(d / name)


# ---------------------------------------------------------------------------
# config handling

_FUNCTION_SCHEMA = {
    "type": "object",
    "minProperties": 1,
    "maxProperties": 1,
    "properties": {
        "cos": {"type": "integer", "minimum": 1},
        "sin": {"type": "integer", "minimum": 1},
        "indicator": {
            "type": "array",
            "items": {"type": "number"},
            "minItems": 2,
            "maxItems": 2,
        },
        "trig": {
            "type": "object",
            "properties": {
                "cos": {"type": "array", "items": {"type": "number"}},
                "sin": {"type": "array", "items": {"type": "number"}},
            },
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}

CONFIG_SCHEMA = {
    "type": "object",
    "properties": {
        "target": {
            "type": "object",
            "properties": {
                "lil": {"type": "number"},
                "disc": {"type": "number"},
                "lambda": {"type": "integer", "minimum": 1},
                "p": {"type": "number", "minimum": 0, "maximum": 1},
            },
            "additionalProperties": False,
        },
        "functions": {"type": "array", "items": _FUNCTION_SCHEMA, "minItems": 1},
        "limit": {"type": "integer", "minimum": 1},
        "max_n": {"type": "integer", "minimum": MIN_RATIO_COUNT},
        "checkpoints": {
            "type": "object",
            "minProperties": 1,
            "maxProperties": 1,
            "properties": {
                "geometric": {"type": "number", "exclusiveMinimum": 1.0},
                "list": {
                    "type": "array",
                    "items": {"type": "integer", "minimum": MIN_RATIO_COUNT},
                    "minItems": 1,
                },
            },
            "additionalProperties": False,
        },
        "num_x": {"type": "integer", "minimum": 1},
        "num_seeds": {"type": "integer", "minimum": 1},
        "master_seed": {"type": "integer", "minimum": 0},
        "max_elements": {"type": "integer", "minimum": 1},
        "points_file": {"type": "string"},
        "variance": {
            "type": "object",
            "properties": {
                "num_blocks": {"type": "integer", "minimum": 1},
                "num_realizations": {"type": "integer", "minimum": 100},
            },
            "required": ["num_blocks", "num_realizations"],
            "additionalProperties": False,
        },
    },
    "additionalProperties": False,
}


def _load_config(path: str) -> dict:
    try:
        raw = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"$: cannot read config file {path!r}: {exc}") from exc
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"$: config is not valid JSON: {exc}") from exc
    validator = jsonschema.Draft202012Validator(CONFIG_SCHEMA)
    errors = sorted(validator.iter_errors(doc), key=lambda e: e.json_path)
    if errors:
        e = errors[0]
        raise ConfigError(f"{e.json_path}: {e.message}")
    return doc


def _parse_function(spec: dict, where: str) -> PeriodicFunction:
    key, value = next(iter(spec.items()))
    if key == "cos":
        return TrigPoly(tuple([0.0] * (value - 1) + [1.0]))
    if key == "sin":
        return TrigPoly((), tuple([0.0] * (value - 1) + [1.0]))
    if key == "indicator":
        left, right = value
        if not 0.0 <= left < right <= 1.0:
            raise ConfigError(f"{where}: indicator needs 0 <= left < right <= 1")
        return CenteredIndicator(float(left), float(right))
    cos = tuple(float(a) for a in value.get("cos", []))
    sin = tuple(float(b) for b in value.get("sin", []))
    if not cos and not sin:
        raise ConfigError(f"{where}: trig spec needs at least one coefficient")
    return TrigPoly(cos, sin)


def _resolve_target(doc: dict) -> ConstantsReport:
    target = doc.get("target")
    if target is None:
        raise ConfigError("$.target: required for this command")
    if "lambda" in target or "p" in target:
        if not ("lambda" in target and "p" in target):
            raise ConfigError("$.target: explicit parameters need both lambda and p")
        lam, p = target["lambda"], float(target["p"])
        return ConstantsReport(
            block_len=lam,
            select_prob=p,
            lil_constant=lil_constant(lam, p),
            disc_constant=lil_constant(lam, p) / 2.0,
            density=(lam + p) / (2.0 * lam),
            feasible_max=math.nan,
        )
    if "lil" in target:
        return solve_params(float(target["lil"]), "lil")
    if "disc" in target:
        return solve_params(float(target["disc"]), "discrepancy")
    raise ConfigError("$.target: need lil, disc, or lambda+p")


def _resolve_experiment(doc: dict) -> tuple[ExperimentConfig, ConstantsReport, dict]:
    """Turn a config document into a runnable experiment plus an echo dict."""
    constants = _resolve_target(doc)
    lam, p = constants.block_len, constants.select_prob
    density = (1.0 + p) / 2.0  # observed counting density of the merged stream

    limit = doc.get("limit")
    max_n = doc.get("max_n")
    cp_spec = doc.get("checkpoints", {"geometric": 1.25})
    if "list" in cp_spec:
        cps = list(cp_spec["list"])
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ConfigError("$.checkpoints.list: must be strictly increasing")
        max_n = cps[-1] if max_n is None else max_n
    if max_n is None:
        if limit is None:
            raise ConfigError("$: need limit, max_n, or an explicit checkpoint list")
        # keep the last checkpoint safely inside the expected element count
        max_n = int(limit * density * 0.995)
        if max_n < MIN_RATIO_COUNT:
            raise ConfigError(f"$.limit: too small, yields fewer than {MIN_RATIO_COUNT} elements")
    if limit is None:
        limit = int(max_n / density * 1.005) + 64
    if "list" in cp_spec:
        checkpoints = cps
    else:
        checkpoints = geometric_checkpoints(max_n, float(cp_spec["geometric"]))

    params = SeqParams(block_len=lam, select_prob=p, seed=0, limit=limit)
    functions = [
        _parse_function(spec, f"$.functions[{i}]")
        for i, spec in enumerate(doc.get("functions", [{"cos": 1}]))
    ]
    config = ExperimentConfig(
        params=params,
        functions=tuple(functions),
        checkpoints=tuple(checkpoints),
        num_x=doc.get("num_x", 1),
        num_seeds=doc.get("num_seeds", 1),
        master_seed=doc.get("master_seed", 0),
        limit=limit,
        max_elements=doc.get("max_elements"),
    )
    echo = {
        "block_len": lam,
        "select_prob": p,
        "lil_constant": constants.lil_constant,
        "disc_constant": constants.disc_constant,
        "density_reference": constants.density,
        "density_observed_limit": density,
        "limit": limit,
        "max_n": max_n,
        "checkpoints": checkpoints,
        "num_x": config.num_x,
        "num_seeds": config.num_seeds,
        "master_seed": config.master_seed,
        "functions": doc.get("functions", [{"cos": 1}]),
    }
    return config, constants, echo


def _resolve_generate_params(args) -> SeqParams:
    if args.target is not None:
        report = solve_params(args.target, args.mode)
        block_len = args.block_len if args.block_len is not None else report.block_len
        prob = args.p if args.p is not None else report.select_prob
    else:
        if args.p is None:
            raise ParameterError("need --p (or --target) to fix the selection probability")
        block_len = args.block_len if args.block_len is not None else 1
        prob = args.p
    if args.limit is None:
        raise ParameterError("need --limit")
    return SeqParams(block_len=block_len, select_prob=prob, seed=args.seed, limit=args.limit)


# ---------------------------------------------------------------------------
# subcommands

def cmd_solve(args) -> int:
    value = args.lil if args.lil is not None else args.disc
    mode = "lil" if args.lil is not None else "discrepancy"
    if value == 0.0:
        print(
            "target 0 needs no randomness: take every positive integer "
            "(all gaps 1); nothing to solve"
        )
        return 0
    report = solve_params(value, mode)
    if args.format == "json":
        print(json.dumps(report.as_dict(), indent=2, sort_keys=True))
    else:
        for key, val in report.as_dict().items():
            print(f"{key:14s} {_fmt(val)}")
    return 0


def cmd_generate(args) -> int:
    params = _resolve_generate_params(args)
    gap_hist: dict[int, int] = {}
    prev = None
    out = sys.stdout
    close = False
    if args.out:
        out = open(args.out, "wb" if args.format == "bin" else "w")
        close = True
    try:
        for chunk in sequence_chunks(params):
            if prev is None:
                diffs = np.diff(chunk)
            else:
                diffs = np.diff(np.concatenate(([prev], chunk)))
            prev = np.uint64(chunk[-1])
            for v, c in zip(*np.unique(diffs, return_counts=True)):
                gap_hist[int(v)] = gap_hist.get(int(v), 0) + int(c)
            if args.format == "bin":
                payload = chunk.astype("<u8").tobytes()
                (out if close else sys.stdout.buffer).write(payload)
            else:
                out.write("\n".join(str(v) for v in chunk.tolist()) + "\n")
    finally:
        if close:
            out.close()
    hist = "  ".join(f"{g}:{c}" for g, c in sorted(gap_hist.items()))
    print(f"gap histogram  {hist if hist else '(fewer than two values)'}", file=sys.stderr)
    return 0


def cmd_trace(args) -> int:
    doc = _load_config(args.config)
    config, constants, echo = _resolve_experiment(doc)
    estimate = config.trajectories * config.checkpoints[-1]
    cap = element_cap(config.max_elements)
    if estimate > cap:
        raise ResourceCapError(estimate, cap)
    table = default_table()
    inputs = _trajectory_inputs(config)
    rows = []
    traces_json = []
    truncated = False
    for ti, (x_frac, seq_seed) in enumerate(inputs):
        params = replace(config.params, seed=seq_seed)
        traces = trace_many(
            config.functions,
            sequence_chunks(params, config.value_limit, table),
            UnitPoint(x_frac),
            config.checkpoints,
        )
        xi, si = divmod(ti, config.num_seeds)
        for fi, trace in enumerate(traces):
            truncated |= trace.truncated
            theory = constants.lil_constant * trace.f_norm
            sups = trace.running_sups()
            for entry, sup in zip(trace.checkpoints, sups):
                rows.append(
                    [entry.count, entry.partial_sum, entry.ratio, sup, theory, fi, xi, si]
                )
            traces_json.append(
                {
                    "function": fi,
                    "x_index": xi,
                    "seed_index": si,
                    "x_frac": format(x_frac, "032x"),
                    "seq_seed": seq_seed,
                    "running_sup": trace.running_sup,
                    "truncated": trace.truncated,
                    "entries": [[e.count, e.partial_sum, e.ratio] for e in trace.checkpoints],
                }
            )
    echo["truncated"] = truncated
    if truncated:
        print("warning: stream ended before the last checkpoint", file=sys.stderr)
    files = {
        "trace.csv": _csv_bytes(
            ["N", "S_N", "ratio", "running_sup", "theory", "function", "x_index", "seed_index"],
            rows,
        ),
        "trace.json": _json_bytes({"config": echo, "traces": traces_json}),
    }
    _write_outputs(args.out_dir, "trace", files, echo)
    return 0


def _disc_rows_for_points(points: np.ndarray, theory: float, xi: int, si: int) -> list[list]:
    n = points.size
    d_star = star_discrepancy(points)
    d_ext = extremal_discrepancy(points)
    scaled = n * d_star / lil_normalizer(n) if n >= MIN_RATIO_COUNT else 0.0
    return [[n, d_star, d_ext, scaled, theory, xi, si]]


def cmd_disc(args) -> int:
    doc = _load_config(args.config)
    header = ["N", "d_star", "d_ext", "scaled", "theory", "x_index", "seed_index"]
    if "points_file" in doc:
        pts = np.loadtxt(doc["points_file"], dtype=np.float64, ndmin=1)
        rows = _disc_rows_for_points(pts, 0.0, 0, 0)
        echo = {"points_file": doc["points_file"], "n_points": int(pts.size)}
        files = {
            "disc.csv": _csv_bytes(header, rows),
            "disc.json": _json_bytes({"config": echo, "rows": rows}),
        }
        _write_outputs(args.out_dir, "disc", files, echo)
        return 0
    config, constants, echo = _resolve_experiment(doc)
    estimate = config.trajectories * config.checkpoints[-1]
    cap = element_cap(config.max_elements)
    if estimate > cap:
        raise ResourceCapError(estimate, cap)
    table = default_table()
    rows = []
    for ti, (x_frac, seq_seed) in enumerate(_trajectory_inputs(config)):
        params = replace(config.params, seed=seq_seed)
        xi, si = divmod(ti, config.num_seeds)
        buf = np.empty(config.checkpoints[-1], dtype=np.float64)
        filled = 0
        cp_idx = 0
        for chunk in sequence_chunks(params, config.value_limit, table):
            take = min(chunk.size, buf.size - filled)
            buf[filled : filled + take] = frac_mul_array(x_frac, chunk[:take])
            filled += take
            while cp_idx < len(config.checkpoints) and config.checkpoints[cp_idx] <= filled:
                n = config.checkpoints[cp_idx]
                d_star = star_discrepancy(buf[:n])
                d_ext = extremal_discrepancy(buf[:n])
                rows.append(
                    [
                        n,
                        d_star,
                        d_ext,
                        n * d_star / lil_normalizer(n),
                        constants.disc_constant,
                        xi,
                        si,
                    ]
                )
                cp_idx += 1
            if filled >= buf.size:
                break
        if cp_idx < len(config.checkpoints):
            echo["truncated"] = True
            print("warning: stream ended before the last checkpoint", file=sys.stderr)
    files = {
        "disc.csv": _csv_bytes(header, rows),
        "disc.json": _json_bytes({"config": echo, "rows": rows}),
    }
    _write_outputs(args.out_dir, "disc", files, echo)
    return 0


def cmd_mc(args) -> int:
    doc = _load_config(args.config)
    config, constants, echo = _resolve_experiment(doc)
    report = run_lil_experiment(config, threads=args.threads)
    if "variance" in doc:
        spec = doc["variance"]
        poly = next((f for f in config.functions if isinstance(f, TrigPoly)), None)
        if poly is None or not poly.is_even:
            raise ConfigError("$.variance: needs a cosine polynomial among the functions")
        x = UnitPoint(report.x_fracs[0])
        report.variance = variance_validation(
            poly,
            config.params.block_len,
            config.params.select_prob,
            x,
            spec["num_blocks"],
            spec["num_realizations"],
            seed=derive_seed(config.master_seed, 3, 0),
        )
    rows = []
    for fi in range(len(config.functions)):
        theory = constants.lil_constant * report.function_norms[fi]
        q = report.sup_quantiles[fi]
        for ci, n in enumerate(report.checkpoints):
            rows.append([fi, n, *[q[ci, k] for k in range(q.shape[1])], theory])
    if report.truncated:
        echo["truncated"] = True
        print("warning: some trajectories ended before the last checkpoint", file=sys.stderr)
    files = {
        "mc_quantiles.csv": _csv_bytes(
            ["function", "N", "q05", "q25", "q50", "q75", "q95", "theory"], rows
        ),
        "mc_report.json": _json_bytes({"config": echo, "report": report.as_dict()}),
    }
    _write_outputs(args.out_dir, "mc", files, echo)
    return 0


def cmd_signs(args) -> int:
    params = _resolve_generate_params(args)
    signs = littlewood_signs(params, None, args.limit)
    text = "\n".join("+1" if s > 0 else "-1" for s in signs.tolist()) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gaplab",
        description="bounded-gap sequences with a prescribed iterated-logarithm constant",
    )
    parser.add_argument("--version", action="version", version=f"gaplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="choose block length and probability for a target")
    group = p_solve.add_mutually_exclusive_group(required=True)
    group.add_argument("--lil", type=float, help="target constant for the partial sums")
    group.add_argument("--disc", type=float, help="target constant for the discrepancy")
    p_solve.add_argument("--format", choices=["text", "json"], default="text")
    p_solve.set_defaults(func=cmd_solve)

    def add_params(p):
        p.add_argument("--lambda", dest="block_len", type=int, default=None, metavar="L")
        p.add_argument("--p", type=float, default=None, help="selection probability")
        p.add_argument("--target", type=float, default=None, help="resolve (lambda, p) from this")
        p.add_argument("--mode", choices=["lil", "disc"], default="lil")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--limit", type=int, default=None, help="largest value to emit")

    p_gen = sub.add_parser("generate", help="emit one realization of the sequence")
    add_params(p_gen)
    p_gen.add_argument("--out", default=None, help="output file (default stdout)")
    p_gen.add_argument("--format", choices=["text", "bin"], default="text")
    p_gen.set_defaults(func=cmd_generate)

    for name, func, helptext in [
        ("trace", cmd_trace, "checkpointed partial sums along the sequence"),
        ("disc", cmd_disc, "star/extremal discrepancy along the sequence"),
        ("mc", cmd_mc, "multi-trajectory running-sup quantiles"),
    ]:
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--config", required=True, help="JSON config document")
        p.add_argument("--out-dir", default=".", help="directory for outputs")
        p.add_argument("--threads", type=int, default=1)
        p.set_defaults(func=func)

    p_signs = sub.add_parser("signs", help="plus/minus signs marking sequence membership")
    add_params(p_signs)
    p_signs.add_argument("--out", default=None)
    p_signs.set_defaults(func=cmd_signs)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ResourceCapError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ConfigError, ParameterError, RangeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
