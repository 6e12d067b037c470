"""Command-line interface.

Every command accepts ``--config PATH`` (a JSON object, or a CSV produced by
this tool whose ``#`` header line holds the resolved config) and flags that
override individual keys. CSV outputs start with that header line.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from pathlib import Path
from typing import Any, Optional

from .field import FieldError, is_prime
from .fountain import SolitonParams
from .matgf import MatrixFormatError, dumps, matmul, read_matrix, write_matrix
from .scheme import SchemeError
from .security import (BoundVacuous, bound_public_gamma, bound_repeated_distinct,
                       bound_repeated_iid, bound_single)
from .sim.errors import model_name
from .sim.experiments import (DetectionConfig, FullRunConfig, OverheadConfig, RunFailed,
                              run_detection_experiment, run_full_scheme,
                              run_overhead_experiment)
from .sim.workers import profile_from_dict

log = logging.getLogger("securematmul")

EXIT_OK, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2

SMALL_PRIMES = [p for p in range(7, 54) if is_prime(p)]

PRESETS = {
    "detect-rate": {
        "small-field-sweep": {"q": SMALL_PRIMES, "n_u": 3, "z": 1, "dims": 2,
                              "model": ["coordinated_rank1", "single_rank1", "single_random"],
                              "eta": [1], "trials": 100_000},
        "repeated-checks": {"q": [7], "n_u": 3, "z": 1, "dims": 2,
                            "model": ["coordinated_rank1"], "eta": [1, 2, 3, 4],
                            "trials": 100_000},
        "observation1-demo": {"q": [101], "n_u": 5, "z": 1, "dims": 2, "model": ["honest"],
                              "attack": "observation1", "eta": [1], "trials": 10_000},
    },
    "bounds": {
        "small-field-sweep": {"q": SMALL_PRIMES, "deg": 2, "eta_max": 1},
        "repeated-checks": {"q": [23], "deg": 10, "eta_max": 12},
    },
}

DEFAULTS: dict[str, dict[str, Any]] = {
    "run": {"a": None, "b": None, "out": None, "stats": None, "n": 9, "z": 1, "c": 2,
            "m": 2, "k": 2, "eta": 1, "rounds_budget": 200, "slack": 0, "timeout": None,
            "check": "private", "workers": [], "soliton_c": 0.1, "soliton_delta": 0.5},
    "detect-rate": {"q": [7], "n_u": 3, "z": 1, "dims": 2, "model": ["coordinated_rank1"],
                    "eta": [1], "trials": 10_000, "check": "private", "attack": None,
                    "leak": True, "num_colluders": 2, "degree": None, "out": None},
    "bounds": {"q": [7], "deg": 2, "eta_max": 1, "out": None},
    "overhead": {"dims": 64, "cluster_sizes": [4, 8, 16, 32, 64, 128, 256], "z": 1,
                 "q": None, "reps": 10, "out": None},
    "multiply-direct": {"a": None, "b": None, "out": None},
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _str_list(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"not a boolean: {text!r}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="securematmul", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def common(sp):
        sp.add_argument("--config", type=Path)
        sp.add_argument("--seed", type=int)
        sp.add_argument("--threads", type=int)
        sp.add_argument("--out", type=Path)

    sp = sub.add_parser("run", help="full scheme on two matrix files")
    common(sp)
    sp.add_argument("--a", type=Path)
    sp.add_argument("--b", type=Path)
    sp.add_argument("--stats", type=Path)
    for key in ("n", "z", "c", "m", "k", "eta", "slack"):
        sp.add_argument(f"--{key}", type=int)
    sp.add_argument("--rounds-budget", dest="rounds_budget", type=int)
    sp.add_argument("--timeout", type=float)
    sp.add_argument("--check", choices=("private", "public"))

    sp = sub.add_parser("detect-rate", help="missed-detection rate sweep")
    common(sp)
    sp.add_argument("--preset", choices=sorted(PRESETS["detect-rate"]))
    sp.add_argument("--q", type=_int_list)
    sp.add_argument("--n-u", dest="n_u", type=int)
    sp.add_argument("--z", type=int)
    sp.add_argument("--dims", type=int)
    sp.add_argument("--model", type=_str_list)
    sp.add_argument("--eta", type=_int_list)
    sp.add_argument("--trials", type=int)
    sp.add_argument("--degree", type=int)
    sp.add_argument("--check", choices=("private", "public"))
    sp.add_argument("--attack", choices=("observation1",))
    sp.add_argument("--leak", type=_bool)
    sp.add_argument("--num-colluders", dest="num_colluders", type=int)

    sp = sub.add_parser("bounds", help="missed-detection upper bounds")
    common(sp)
    sp.add_argument("--preset", choices=sorted(PRESETS["bounds"]))
    sp.add_argument("--q", type=_int_list)
    sp.add_argument("--deg", type=int)
    sp.add_argument("--eta-max", dest="eta_max", type=int)

    sp = sub.add_parser("overhead", help="check cost relative to coding cost")
    common(sp)
    sp.add_argument("--dims", type=int)
    sp.add_argument("--cluster-sizes", dest="cluster_sizes", type=_int_list)
    sp.add_argument("--z", type=int)
    sp.add_argument("--q", type=int)
    sp.add_argument("--reps", type=int)

    sp = sub.add_parser("multiply-direct", help="reference product A @ B")
    common(sp)
    sp.add_argument("--a", type=Path)
    sp.add_argument("--b", type=Path)
    return p


def _load_config_file(path: Path) -> dict:
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    if text.startswith("#"):
        text = text.splitlines()[0][1:]
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON: {exc}") from None
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    return cfg


def resolve_config(args: argparse.Namespace) -> dict:
    """Defaults, then preset, then config file, then explicit flags."""
    cmd = args.command
    cfg = dict(DEFAULTS[cmd])
    cfg.update({"seed": 0, "threads": 1})
    preset = getattr(args, "preset", None)
    if args.config is not None:
        loaded = _load_config_file(args.config)
        loaded.pop("command", None)
        preset = loaded.pop("preset", None) if preset is None else preset
        if preset:
            cfg.update(PRESETS[cmd][preset])
        unknown = set(loaded) - set(cfg)
        if unknown:
            raise ConfigError(f"unknown config keys for {cmd}: {sorted(unknown)}")
        cfg.update(loaded)
    elif preset:
        cfg.update(PRESETS[cmd][preset])
    skip = {"command", "config", "preset", "verbose"}
    for key, value in vars(args).items():
        if key not in skip and value is not None:
            cfg[key] = str(value) if isinstance(value, Path) else value
    list_keys = {"detect-rate": ("q", "model", "eta"), "bounds": ("q",),
                 "overhead": ("cluster_sizes",)}.get(cmd, ())
    for key in list_keys:
        if cfg[key] is not None and not isinstance(cfg[key], list):
            cfg[key] = [cfg[key]]
    cfg["seed"] = int(cfg["seed"])
    if not 0 <= cfg["seed"] < 1 << 64:
        raise ConfigError("seed must be an unsigned 64-bit integer")
    if cfg["threads"] < 1:
        raise ConfigError("threads must be >= 1")
    return cfg


def _header(cmd: str, cfg: dict) -> str:
    payload = {"command": cmd}
    payload.update({k: v for k, v in cfg.items() if k not in ("threads",)})
    return "# " + json.dumps(payload, sort_keys=True) + "\n"


def _emit(cfg: dict, cmd: str, columns: list[str], rows: list[list],
          path: Optional[str] = None) -> None:
    buf = io.StringIO()
    buf.write(_header(cmd, cfg))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    w.writerows(rows)
    path = path or cfg.get("out")
    if path:
        Path(path).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())


def _fmt(x: Optional[float]) -> str:
    return "" if x is None else f"{x:.12g}"


def _maybe(fn, *args) -> Optional[float]:
    try:
        return fn(*args)
    except BoundVacuous:
        return None


def cmd_bounds(cfg: dict) -> int:
    deg, eta_max = int(cfg["deg"]), int(cfg["eta_max"])
    if deg < 0 or eta_max < 1:
        raise ConfigError("need deg >= 0 and eta_max >= 1")
    rows = []
    for q in cfg["q"]:
        if not is_prime(q):
            raise ConfigError(f"q={q} is not prime")
        for eta in range(1, eta_max + 1):
            single = _maybe(bound_single, q, deg, False)
            iid = _maybe(bound_repeated_iid, q, deg, eta, False)
            distinct = _maybe(bound_repeated_distinct, q, deg, eta, False)
            public = bound_public_gamma(q, deg, False)
            vacuous = any(v is None or v >= 1 for v in (single, iid, distinct))
            rows.append([q, deg, eta, _fmt(single), _fmt(iid), _fmt(distinct), _fmt(public),
                         int(vacuous)])
    _emit(cfg, "bounds", ["q", "deg", "eta", "bound_single", "bound_iid", "bound_distinct",
                          "bound_public", "vacuous"], rows)
    return EXIT_OK


def cmd_detect_rate(cfg: dict) -> int:
    if int(cfg["trials"]) < 1:
        raise ConfigError("trials must be >= 1")
    rows = []
    for q in cfg["q"]:
        for model in cfg["model"]:
            for eta in cfg["eta"]:
                dc = DetectionConfig(
                    q=q, n_u=cfg["n_u"], z=cfg["z"], r=cfg["dims"], s=cfg["dims"],
                    l=cfg["dims"], error_model=model_name(model), eta=eta,
                    trials=cfg["trials"], seed=cfg["seed"], degree=cfg["degree"],
                    check=cfg["check"], attack=cfg["attack"], leak=cfg["leak"],
                    num_colluders=cfg["num_colluders"], threads=cfg["threads"])
                stats = run_detection_experiment(dc)
                label = cfg["attack"] if cfg["attack"] else model_name(model)
                if cfg["check"] == "public":
                    single = bound_public_gamma(q, dc.deg_h, False)
                    distinct = single ** eta if eta == 1 else None
                else:
                    single = _maybe(bound_single, q, dc.deg_h, False)
                    distinct = _maybe(bound_repeated_distinct, q, dc.deg_h, eta, False)
                rows.append([q, label, eta, stats.trials, stats.missed_detections,
                             _fmt(stats.miss_rate), _fmt(single), _fmt(distinct)])
                log.info("q=%d %s eta=%d: %s", q, label, eta, stats.miss_rate)
    _emit(cfg, "detect-rate", ["q", "model", "eta", "trials", "missed", "rate",
                               "bound_single", "bound_distinct"], rows)
    return EXIT_OK


def cmd_overhead(cfg: dict) -> int:
    oc = OverheadConfig(dims=int(cfg["dims"]), cluster_sizes=tuple(cfg["cluster_sizes"]),
                        z=int(cfg["z"]), q=cfg["q"], reps=int(cfg["reps"]), seed=cfg["seed"])
    rows = [[r.n_u, r.dims, _fmt(r.per_cluster_ratio), _fmt(r.per_worker_ratio)]
            for r in run_overhead_experiment(oc)]
    _emit(cfg, "overhead", ["n_u", "dims", "per_cluster_ratio", "per_worker_ratio"], rows)
    return EXIT_OK


def _read_inputs(cfg: dict):
    if not cfg.get("a") or not cfg.get("b"):
        raise ConfigError("both --a and --b matrix files are required")
    a, b = read_matrix(cfg["a"]), read_matrix(cfg["b"])
    if a.q != b.q:
        raise ConfigError(f"input moduli differ: {a.q} vs {b.q}")
    if a.cols != b.rows:
        raise ConfigError(f"cannot multiply {a.shape} by {b.shape}")
    return a, b


def _write_product(cfg: dict, product) -> None:
    if cfg.get("out"):
        write_matrix(cfg["out"], product)
    else:
        sys.stdout.write(dumps(product))


def cmd_multiply_direct(cfg: dict) -> int:
    a, b = _read_inputs(cfg)
    _write_product(cfg, matmul(a, b))
    return EXIT_OK


def cmd_run(cfg: dict) -> int:
    a, b = _read_inputs(cfg)
    n = int(cfg["n"])
    given = [profile_from_dict(d) for d in cfg["workers"]]
    if any(not 0 <= p.index < n for p in given):
        raise ConfigError("worker profile index out of range")
    fc = FullRunConfig(A=a, B=b, n=n, z=int(cfg["z"]), c=int(cfg["c"]), m=int(cfg["m"]),
                       k=int(cfg["k"]), profiles=given, rounds_budget=int(cfg["rounds_budget"]),
                       eta=int(cfg["eta"]), seed=cfg["seed"], slack=int(cfg["slack"]),
                       timeout=cfg["timeout"], check=cfg["check"],
                       soliton=SolitonParams(cfg["soliton_c"], cfg["soliton_delta"]))
    code = EXIT_OK
    try:
        result = run_full_scheme(fc)
    except RunFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        result, code = exc.result, EXIT_COMPUTE
    else:
        _write_product(cfg, result.product)
    if cfg.get("stats"):
        rows = [["completed", int(result.product is not None)],
                ["rounds_used", result.rounds_used],
                ["detections", result.detections],
                ["missed_detections", result.missed_detections],
                ["flagged_workers", " ".join(map(str, sorted(result.flagged_workers)))],
                ["starved_clusters", result.starved_clusters],
                ["quarantined_rounds", result.quarantined_rounds]]
        _emit(cfg, "run", ["key", "value"], rows, path=cfg["stats"])
    return code


COMMANDS = {"run": cmd_run, "detect-rate": cmd_detect_rate, "bounds": cmd_bounds,
            "overhead": cmd_overhead, "multiply-direct": cmd_multiply_direct}


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_CONFIG
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = resolve_config(args)
        return COMMANDS[args.command](cfg)
    except MatrixFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, SchemeError, FieldError, ValueError, KeyError, TypeError,
            OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RunFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
