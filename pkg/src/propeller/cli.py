"""Operator entry point.

Subcommands: ``run`` (full or restricted verification), ``resume`` (pick
up a checkpoint), ``verify`` (independent certificate replay), and
``spotcheck`` (inspect one point or one box).

Everything on stdout is machine-parseable ``key=value`` lines; prose and
progress go to stderr.  Options resolve flag > environment (prefix
``PROPELLER_``) > config file > default, and a run is reproducible from
its config file alone.

Exit codes: 0 success; 1 I/O, parse, or usage errors; 2 depth cap hit
with survivors; 3 certificate verification failure.
"""

from __future__ import annotations

import argparse
import math
import os
import sys
from pathlib import Path

from . import constants as C
from . import traversal as tv
from . import geometry
from .constraints import SearchBox, classify_trace
from .geometry import EdgeTriple

ENV_PREFIX = "PROPELLER_"


def _err(msg: str) -> None:
    print(msg, file=sys.stderr)


def _out(key: str, value) -> None:
    print(f"{key}={value}")


# ---------------------------------------------------------------------------
# Option resolution
# ---------------------------------------------------------------------------

_OPTION_KEYS = ("sub", "base-depth", "depth-cap", "workers", "checkpoint",
                "out", "point", "radius-cells", "checkpoint-seconds")


def _load_config_file(path: str) -> dict[str, str]:
    opts: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line or line.startswith("#"):
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{lineno}: expected key=value")
            key, _, value = line.partition("=")
            key = key.strip()
            if key not in _OPTION_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            opts[key] = value.strip()
    return opts


def _resolve(args: argparse.Namespace, key: str, default=None):
    """flag > env > config file > default; '' means unset."""
    attr = key.replace("-", "_")
    val = getattr(args, attr, None)
    if val is not None:
        return val
    env = os.environ.get(ENV_PREFIX + key.upper().replace("-", "_"))
    if env is not None and env != "":
        return env
    if getattr(args, "_file_opts", None) and key in args._file_opts:
        return args._file_opts[key]
    return default


def _parse_sub(text: str, base_depth: int) -> tv.Domain:
    parts = text.split(",")
    if len(parts) != 3:
        raise ValueError("--sub needs three lo:hi ranges")
    out = []
    for p in parts:
        lo, _, hi = p.partition(":")
        out.append((int(lo), int(hi)))
    dom = tuple(out)
    n = 10 ** (base_depth + 2)
    for lo, hi in dom:
        if not 0 <= lo <= hi <= n:
            raise ValueError(f"range {lo}:{hi} outside [0, {n}]")
    return dom  # type: ignore[return-value]


def _parse_point(text: str) -> tuple[float, float, float]:
    parts = [float(x) for x in text.split(",")]
    if len(parts) == 1:
        parts = parts * 3
    if len(parts) != 3:
        raise ValueError("--point needs one or three coordinates")
    for x in parts:
        if not 0.0 <= x <= math.pi:
            raise ValueError(f"coordinate {x} outside [0, pi]")
    return tuple(parts)  # type: ignore[return-value]


def _point_domain(point: tuple[float, float, float], radius_cells: int,
                  base_depth: int) -> tv.Domain:
    n = 10 ** (base_depth + 2)
    out = []
    for x in point:
        a = round(x * n / math.pi)
        out.append((max(0, a - radius_cells), min(n, a + radius_cells)))
    return tuple(out)  # type: ignore[return-value]


def _build_run_config(args: argparse.Namespace) -> tv.RunConfig:
    base_depth = int(_resolve(args, "base-depth", 0))
    depth_cap = int(_resolve(args, "depth-cap", 8))
    workers = int(_resolve(args, "workers", 1))
    out_path = _resolve(args, "out", "propeller-certificate.txt")
    checkpoint = _resolve(args, "checkpoint")
    ckpt_seconds = float(_resolve(args, "checkpoint-seconds", 300.0))
    sub = _resolve(args, "sub")
    point = _resolve(args, "point")
    domain = None
    if sub and point:
        raise ValueError("--sub and --point are mutually exclusive")
    if sub:
        domain = _parse_sub(sub, base_depth)
    elif point:
        radius = int(_resolve(args, "radius-cells", 2))
        domain = _point_domain(_parse_point(point), radius, base_depth)
    return tv.RunConfig(out_path=out_path, base_depth=base_depth,
                        depth_cap=depth_cap, workers=workers, domain=domain,
                        checkpoint_path=checkpoint,
                        checkpoint_seconds=ckpt_seconds)


def _progress_printer(stats) -> None:
    h = stats.histogram
    _err(f"depth={stats.depth} classified={stats.level_done}/"
         f"{stats.level_total} records={stats.records} "
         f"I={h['I']} II={h['II']} III={h['III']} IV={h['IV']}")


def _emit_certificate_summary(cert: tv.Certificate) -> None:
    _out("certificate", cert.path)
    _out("records", cert.n_records)
    _out("max_depth", cert.max_depth)
    _out("constants_hash", cert.constants_hash)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------

def cmd_run(args: argparse.Namespace) -> int:
    try:
        config = _build_run_config(args)
    except (ValueError, OSError) as exc:
        _err(f"configuration error: {exc}")
        return 1
    try:
        cert = tv.run(config, progress=_progress_printer)
    except tv.VerificationIncomplete as exc:
        surv_path = Path(config.out_path).with_suffix(".survivors")
        with open(surv_path, "w", encoding="utf-8", newline="\n") as fh:
            for a1, a2, a3 in exc.survivors.tolist():
                fh.write(f"{exc.depth} {a1} {a2} {a3}\n")
        _err(f"depth cap {config.depth_cap} reached with "
             f"{len(exc.survivors)} survivors (listed in {surv_path})")
        for a1, a2, a3 in exc.survivors[:20].tolist():
            _err(f"survivor {exc.depth} {a1} {a2} {a3}")
        _out("survivors", len(exc.survivors))
        _out("survivors_file", surv_path)
        return 2
    except OSError as exc:
        _err(f"i/o error: {exc}")
        return 1
    _emit_certificate_summary(cert)
    return 0


def cmd_resume(args: argparse.Namespace) -> int:
    ckpt = _resolve(args, "checkpoint")
    if not ckpt:
        _err("resume requires --checkpoint")
        return 1
    try:
        chash, domain, base_depth = tv.peek_checkpoint(ckpt)
    except (tv.CertificateError, OSError) as exc:
        _err(f"cannot read checkpoint: {exc}")
        return 1
    try:
        config = tv.RunConfig(
            out_path=_resolve(args, "out", "propeller-certificate.txt"),
            base_depth=base_depth,
            depth_cap=int(_resolve(args, "depth-cap", 8)),
            workers=int(_resolve(args, "workers", 1)),
            domain=domain,
            checkpoint_path=ckpt,
            checkpoint_seconds=float(
                _resolve(args, "checkpoint-seconds", 300.0)))
        cert = tv.resume(ckpt, config, progress=_progress_printer)
    except tv.VerificationIncomplete as exc:
        _err(f"depth cap reached with {len(exc.survivors)} survivors")
        return 2
    except (tv.CertificateError, ValueError) as exc:
        _err(f"resume refused: {exc}")
        return 1
    except OSError as exc:
        _err(f"i/o error: {exc}")
        return 1
    _emit_certificate_summary(cert)
    return 0


def cmd_verify(args: argparse.Namespace) -> int:
    path = args.certificate
    try:
        cert = tv.Certificate.load(path)
    except tv.CertificateError as exc:
        _err(f"parse error: {exc}")
        return 1
    except OSError as exc:
        _err(f"i/o error: {exc}")
        return 1
    result = tv.verify_certificate(cert)
    _out("ok", "true" if result.ok else "false")
    if not result.ok:
        _out("reason", result.reason)
        if result.record_index is not None:
            _out("record_index", result.record_index)
        _err(f"verification failed: {result.reason}")
        return 1 if result.kind == "parse" else 3
    _out("records", cert.n_records)
    return 0


def _flatten(prefix: str, obj, out: list[tuple[str, str]]) -> None:
    if isinstance(obj, dict):
        for k, v in obj.items():
            _flatten(f"{prefix}.{k}" if prefix else str(k), v, out)
    elif isinstance(obj, (list, tuple)):
        if all(isinstance(x, (int, float, bool)) for x in obj):
            out.append((prefix, ",".join(repr(x) for x in obj)))
        else:
            for i, v in enumerate(obj):
                _flatten(f"{prefix}.{i}", v, out)
    else:
        out.append((prefix, repr(obj) if isinstance(obj, float) else str(obj)))


def cmd_spotcheck(args: argparse.Namespace) -> int:
    point = _resolve(args, "point")
    box = args.box
    if bool(point) == bool(box):
        _err("spotcheck needs exactly one of --point or a box "
             "'depth a1 a2 a3'")
        return 1
    if point:
        try:
            x, y, z = _parse_point(point)
        except ValueError as exc:
            _err(f"usage error: {exc}")
            return 1
        e = EdgeTriple(x, y, z)
        _out("point", f"{x!r},{y!r},{z!r}")
        _out("lambda", repr(geometry.lambda_(e)))
        for i in (1, 2, 3):
            _out(f"gamma_{i}", repr(geometry.gamma_i(e, i)))
        try:
            h = geometry.H_system(e)
            for i, v in enumerate(h, start=1):
                _out(f"H_{i}", repr(v))
        except Exception as exc:  # noqa: BLE001 - report, don't crash
            _out("H_error", str(exc))
        try:
            _out("F0", repr(geometry.F0(e)))
        except Exception as exc:  # noqa: BLE001
            _out("F0_error", str(exc))
        return 0
    try:
        parts = [int(v) for v in box.split()]
        if len(parts) != 4:
            raise ValueError("expected 'depth a1 a2 a3'")
        sb = SearchBox(parts[1], parts[2], parts[3], parts[0])
    except (ValueError, IndexError) as exc:
        _err(f"usage error: {exc}")
        return 1
    trace = classify_trace(sb)
    flat: list[tuple[str, str]] = []
    _flatten("", trace, flat)
    for k, v in flat:
        _out(k, v)
    return 0


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key=value options file")
    p.add_argument("--sub", help="numerator ranges lo:hi,lo:hi,lo:hi "
                   "at the base depth")
    p.add_argument("--point", help="decimal point (one or three "
                   "comma-separated coordinates)")
    p.add_argument("--radius-cells", type=int,
                   help="half-width of the --point window, in cells")
    p.add_argument("--base-depth", type=int, help="depth of the seed grid")
    p.add_argument("--depth-cap", type=int,
                   help="refuse to refine beyond this depth (default 8)")
    p.add_argument("--workers", type=int, help="parallel workers")
    p.add_argument("--checkpoint", help="checkpoint file path")
    p.add_argument("--checkpoint-seconds", type=float,
                   help="checkpoint cadence (default 300)")
    p.add_argument("--out", help="certificate output path")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="propeller",
        description="Verified elimination search over spherical-triangle "
                    "edge space, with replayable certificates.")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run a verification (full domain or "
                       "a restriction)")
    _add_common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("resume", help="continue from a checkpoint")
    _add_common(p)
    p.set_defaults(func=cmd_resume)

    p = sub.add_parser("verify", help="replay and coverage-check a "
                       "certificate")
    p.add_argument("certificate", help="certificate file")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("spotcheck", help="inspect one point or one box")
    p.add_argument("--point", help="decimal point (one or three "
                   "comma-separated coordinates)")
    p.add_argument("box", nargs="?",
                   help="box as 'depth a1 a2 a3' (quoted)")
    p.set_defaults(func=cmd_spotcheck)

    return ap


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if getattr(args, "config", None):
        try:
            args._file_opts = _load_config_file(args.config)
        except (OSError, ValueError) as exc:
            _err(f"config file error: {exc}")
            return 1
    else:
        args._file_opts = {}
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
