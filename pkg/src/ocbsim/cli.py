"""Command-line front end: ``ocbsim simulate|map|sweep|verify|transfer|calibrate``."""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Any

from . import __version__
from .cost import (CalibrationError, fit_default_calibration, load_calibration, summarize,
                   write_calibration)
from .hdc import FULL_PRECISION, HDCError, SyntheticTask, sweep_accuracy
from .link import transfer_table
from .mapper import MappingError, plan_network
from .model import DEFAULT_ENCODER_DIM, ConfigError, PrecisionConfig, resolve_network, validate_memory
from .photonics import DeviceError
from .scheduler import TuningMode
from . import verify as verify_mod

COMMANDS = ("simulate", "map", "sweep", "verify", "transfer", "calibrate")
DEFAULT_DIMS = (8, 64, 128, 512, 1024)
SWEEP_PRECISIONS = (2, 4, 8, FULL_PRECISION)
FLOAT_DIGITS = 12


class UsageError(Exception):
    pass


@dataclass(frozen=True)
class RunConfig:
    command: str
    network_path: str = "resnet18"
    calibration_path: str | None = None
    mode: TuningMode | None = None
    precision: PrecisionConfig | None = None
    dims: tuple[int, ...] | None = None
    output_path: str | None = None
    output_format: str = "json"
    seed: int = 0

    def __post_init__(self) -> None:
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.command == "simulate" and self.mode is None:
            raise UsageError("simulate requires --mode nru|ru")
        if self.calibration_path is not None and not Path(self.calibration_path).is_file():
            raise UsageError(f"calibration file not found: {self.calibration_path}")
        if not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")


def canonical(obj: Any) -> Any:
    """Fixed float precision and plain types, so dumps are byte-stable."""
    if isinstance(obj, bool) or obj is None or isinstance(obj, (int, str)):
        return obj
    if isinstance(obj, float):
        return float(f"{obj:.{FLOAT_DIGITS}g}")
    if isinstance(obj, Enum):
        return obj.value
    if isinstance(obj, dict):
        return {str(k): canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [canonical(v) for v in obj]
    if hasattr(obj, "item"):  # numpy scalar
        return canonical(obj.item())
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps_json(obj: Any) -> str:
    return json.dumps(canonical(obj), indent=2, ensure_ascii=True) + "\n"


def dumps_csv(head: list[str], rows: list[list[Any]], comment: str | None = None) -> str:
    buf = io.StringIO()
    if comment:
        buf.write(comment + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for r in rows:
        w.writerow([f"{v:.{FLOAT_DIGITS}g}" if isinstance(v, float) else v for v in r])
    return buf.getvalue()


def header(cfg: RunConfig, provenance: str | None = None) -> dict[str, Any]:
    h = {"tool": "ocbsim", "version": __version__, "command": cfg.command, "seed": cfg.seed}
    if provenance is not None:
        h["calibration_provenance"] = provenance
    return h


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output_path:
        Path(cfg.output_path).write_text(text)
    else:
        sys.stdout.write(text)


def _network(cfg: RunConfig):
    return resolve_network(cfg.network_path, cfg.precision)


def cmd_simulate(cfg: RunConfig) -> int:
    net = _network(cfg)
    cal = load_calibration(cfg.calibration_path)
    report = summarize(net, None, cfg.mode, cal)
    report.header = header(cfg, cal.provenance)
    report.header["memory_warnings"] = validate_memory(net)
    if cfg.output_format == "csv":
        head, rows = report.to_csv_rows()
        _emit(cfg, dumps_csv(head, rows))
    else:
        _emit(cfg, dumps_json(report.to_dict()))
    return 0


def cmd_map(cfg: RunConfig) -> int:
    net = _network(cfg)
    plans = [p.to_dict() for p in plan_network(net)]
    if cfg.output_format == "csv":
        keys = list(plans[0])
        _emit(cfg, dumps_csv(keys, [[p.get(k, "") for k in keys] for p in plans]))
    else:
        _emit(cfg, dumps_json({"header": header(cfg), "network": net.name, "plans": plans}))
    return 0


def cmd_sweep(cfg: RunConfig) -> int:
    grid = sweep_accuracy(SyntheticTask(), cfg.dims or DEFAULT_DIMS, SWEEP_PRECISIONS, seed=cfg.seed)
    if cfg.output_format == "json":
        _emit(cfg, dumps_json({"header": header(cfg), "dims": grid.dims,
                               "precisions": grid.precisions, "accuracy": grid.accuracy.tolist()}))
    else:
        _emit(cfg, grid.to_csv())
    return 0


def cmd_verify(cfg: RunConfig) -> int:
    results = [verify_mod.arm_mac_exhaustive(),
               verify_mod.arm_mac_random(seed=cfg.seed),
               verify_mod.encode_random(seed=cfg.seed),
               verify_mod.scheduler_vs_walk()]
    for r in results:
        print(r.line(), file=sys.stderr)
    suites = [{"suite": r.name, "cases": r.cases, "failures": r.failures} for r in results]
    if cfg.output_format == "csv":
        _emit(cfg, dumps_csv(["suite", "cases", "failures"],
                             [[s["suite"], s["cases"], s["failures"]] for s in suites]))
    else:
        _emit(cfg, dumps_json({"header": header(cfg), "suites": suites}))
    return 0 if all(r.passed for r in results) else 1


def cmd_transfer(cfg: RunConfig) -> int:
    cal = load_calibration(cfg.calibration_path)
    dim = cfg.dims[-1] if cfg.dims else DEFAULT_ENCODER_DIM
    rows = transfer_table(cal, dimension=dim)
    if cfg.output_format == "csv":
        keys = list(rows[0])
        _emit(cfg, dumps_csv(keys, [[r[k] for k in keys] for r in rows]))
    else:
        _emit(cfg, dumps_json({"header": header(cfg, cal.provenance), "table": rows}))
    return 0


def cmd_calibrate(cfg: RunConfig) -> int:
    result = fit_default_calibration()
    if cfg.output_path:
        write_calibration(result, cfg.output_path)
    else:
        d = result.calibration.to_dict()
        d["fit"] = result.to_dict()
        sys.stdout.write(dumps_json(d))
    if not result.feasible:
        _fail("InfeasibleFit", result.diagnostic())
        return 2
    return 0


HANDLERS = {"simulate": cmd_simulate, "map": cmd_map, "sweep": cmd_sweep, "verify": cmd_verify,
            "transfer": cmd_transfer, "calibrate": cmd_calibrate}


def _fail(kind: str, message: str) -> None:
    print(json.dumps({"error": kind, "message": message}), file=sys.stderr)


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # one machine-parsable line instead of usage text
        raise UsageError(message)


def _dims(text: str) -> tuple[int, ...]:
    try:
        dims = tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad --dims {text!r}") from None
    if not dims or min(dims) < 1:
        raise argparse.ArgumentTypeError("--dims needs positive integers")
    return dims


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="ocbsim", description="Optical neuro-symbolic accelerator simulator.")
    p.add_argument("--version", action="version", version=f"ocbsim {__version__}")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--network", default="resnet18", help="preset name or JSON network path")
    p.add_argument("--calibration", default=None, help="calibration JSON (default: shipped fit)")
    p.add_argument("--mode", choices=[m.value for m in TuningMode])
    p.add_argument("--precision", default=None, help="W:A bit widths, e.g. 4:4")
    p.add_argument("--dims", type=_dims, default=None,
                   help="d1,d2,... (sweep grid; transfer uses the last)")
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--seed", type=int, default=0)
    return p


def parse_config(argv: list[str] | None = None) -> RunConfig:
    a = build_parser().parse_args(argv)
    fmt = a.format or ("csv" if a.command == "sweep" else "json")
    return RunConfig(
        command=a.command,
        network_path=a.network,
        calibration_path=a.calibration,
        mode=TuningMode.parse(a.mode) if a.mode else None,
        precision=PrecisionConfig.parse(a.precision) if a.precision else None,
        dims=a.dims,
        output_path=a.out,
        output_format=fmt,
        seed=a.seed,
    )


def run(cfg: RunConfig) -> int:
    return HANDLERS[cfg.command](cfg)


def main(argv: list[str] | None = None) -> int:
    try:
        return run(parse_config(argv))
    except UsageError as exc:
        _fail("UsageError", str(exc))
    except (ConfigError, CalibrationError, MappingError, DeviceError, HDCError) as exc:
        _fail(type(exc).__name__, str(exc))
    except OSError as exc:
        _fail("IOError", str(exc))
    return 2


if __name__ == "__main__":
    sys.exit(main())
