"""Command-line driver: ``lavrentiev {gap,conditions,smooth,partition}``.

Every run is determined by its :class:`RunConfig`. Output files start with
a header carrying the SHA-256 of the canonical config JSON (comment lines in
CSV files, a ``header`` object in JSON files), and contain no timestamps, so
identical configs produce byte-identical outputs.

Exit codes: 0 all checks passed, 1 a check failed, 2 invalid configuration,
3 numerical failure (quadrature did not converge).
"""
from __future__ import annotations

import argparse
import csv
import dataclasses
import hashlib
import json
import logging
import math
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import interval_sets as isets
from .func_model import StepFunction, from_name
from .lavrentiev_core import CorpusSpec, bounded_spec, check_conditions, gap_demo, lavrentiev_spec
from .quadrature import QuadratureError
from .smoothing import InfiniteEnergyError, ScheduleExhausted, approximate, smooth_stages, write_curves_csv

log = logging.getLogger("lavrentiev")

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_NUMERIC = 0, 1, 2, 3


@dataclass
class RunConfig:
    """All parameters of a run. Fields not used by a command are ignored
    by it but still enter the config hash."""

    command: str = "gap"
    # gap
    n_list: list = field(default_factory=lambda: [64, 96, 128, 200])
    corpus_size: int = 1000
    seed: int = 0
    slope_cap: float = 10.0
    max_knots: int = 8
    case1_grid: int = 500
    case2_grid: int = 10_000
    crossing_check: bool = True
    # f family exp(c xi^2)
    c: float = 2048.0
    # conditions
    log_grid: int = 2048
    region_grid: int = 512
    symmetric_grid: int = 4001
    # smooth
    u: str = "sqrt"
    spec: str = "bounded"
    cap: float = 10.0
    require_l1: bool = False
    curve_points: int = 1001
    # smooth and partition
    epsilon: str = "1/10"
    # partition
    depth: int = 6
    demo: str = "counterexample"
    mode: str = "rational"
    # shared
    rel_tol: float = 1e-8
    out: str = "out"

    def validate(self):
        if self.command not in COMMANDS:
            raise ValueError(f"unknown command {self.command!r}")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")
        if self.mode not in isets.MODES:
            raise ValueError(f"mode must be one of {isets.MODES}")
        if self.command in ("smooth", "partition") and not self.epsilon_fraction > 0:
            raise ValueError("epsilon must be positive")
        if self.command == "partition" and self.demo not in ("counterexample", "constant"):
            raise ValueError(f"unknown partition demo {self.demo!r}")
        if self.command == "smooth" and self.spec not in ("bounded", "lavrentiev"):
            raise ValueError(f"unknown spec {self.spec!r}")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError("n_list entries must be positive integers")

    @property
    def epsilon_fraction(self) -> Fraction:
        try:
            return Fraction(str(self.epsilon))
        except (ValueError, ZeroDivisionError) as exc:
            raise ValueError(f"cannot parse epsilon {self.epsilon!r}") from exc

    def canonical(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")
        # equal values hash equally: "0.1" and "1/10" both become "1/10"
        try:
            d["epsilon"] = isets.fraction_str(self.epsilon_fraction)
        except ValueError:
            d["epsilon"] = str(self.epsilon)
        return d

    @property
    def hash(self) -> str:
        blob = json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


# --------------------------------------------------------------------------
# output helpers

def _header_lines(cfg: RunConfig) -> list:
    return [f"config_sha256={cfg.hash}", f"command={cfg.command}"]


def _write_json(path: Path, cfg: RunConfig, payload: dict):
    doc = {"header": {"config_sha256": cfg.hash, "config": cfg.canonical()}, **payload}
    path.write_text(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _write_csv(path: Path, cfg: RunConfig, columns: list, rows):
    with open(path, "w", newline="") as fh:
        for line in _header_lines(cfg):
            fh.write(f"# {line}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow(row)


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


# --------------------------------------------------------------------------
# commands

def cmd_gap(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    corpus = CorpusSpec(size=cfg.corpus_size, seed=cfg.seed, slope_cap=cfg.slope_cap,
                        max_knots=cfg.max_knots)
    report = gap_demo(cfg.n_list, corpus, cfg.rel_tol, lavrentiev_spec(cfg.c),
                      cfg.case1_grid, cfg.case2_grid, cfg.crossing_check)
    _write_csv(out / "gap.csv", cfg, ["n", "log_energy"],
               ([n, _fmt(e)] for n, e, _ in report.rows))
    _write_csv(out / "corpus.csv", cfg, ["id", "log_energy"],
               ([i, _fmt(e)] for i, e, _ in report.corpus_energies))
    if cfg.crossing_check:
        _write_csv(out / "crossings.csv", cfg,
                   ["id", "a", "b", "case", "restricted_log_energy", "case_bound_log"],
                   ([r["id"], _fmt(r["a"]), _fmt(r["b"]), r["case"], _fmt(r["restricted_log_energy"]),
                     _fmt(r["case_bound_log"]) if math.isfinite(r["case_bound_log"]) else "-inf"]
                    for r in report.crossings))
    _write_json(out / "sweeps.json", cfg, {"case_sweeps": report.case_sweep_worst_margins,
                                           "summary": report.to_json()})
    errors = [err for *_, err in report.rows + report.corpus_energies if err]
    for err in errors:
        log.error("quadrature failure: %s", err)
    log.info("corpus min log F = %r, sweeps pass = %s", report.corpus_min_energy_log, report.sweeps_pass)
    if errors:
        return EXIT_NUMERIC
    return EXIT_OK if report.passed else EXIT_FAIL


def cmd_conditions(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    report = check_conditions(lavrentiev_spec(cfg.c), log_grid=cfg.log_grid,
                              region_grid=cfg.region_grid, symmetric_grid=cfg.symmetric_grid)
    _write_json(out / "conditions.json", cfg, report.to_json())
    _write_csv(out / "conditions.csv", cfg, ["condition", "verdict", "margin", "witness"],
               report.csv_rows())
    for r in report.results.values():
        log.info("(%s) %s margin=%r witness=%s", r.name, "pass" if r.verdict else "FAIL",
                 r.worst_margin, r.witness)
    return EXIT_OK if report.all_pass else EXIT_FAIL


def cmd_smooth(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    eps = float(cfg.epsilon_fraction)
    u = from_name(cfg.u)
    spec = bounded_spec(cfg.cap) if cfg.spec == "bounded" else lavrentiev_spec(cfg.c)
    try:
        phi, cert = approximate(u, spec, eps, rel_tol=cfg.rel_tol, require_l1=cfg.require_l1)
    except ScheduleExhausted as exc:
        log.error("%s", exc)
        _write_json(out / "certificate.json", cfg, {"certificate": exc.best.to_json() if exc.best else None})
        return EXIT_FAIL
    except InfiniteEnergyError as exc:
        log.error("%s", exc)
        return EXIT_CONFIG
    _write_json(out / "certificate.json", cfg, {"certificate": cert.to_json()})
    stages = smooth_stages(u, cert.k_used, cert.n_used)
    write_curves_csv(out / "curves.csv", u, stages, cfg.curve_points, _header_lines(cfg))
    log.info("k=%g n=%d sup=%r passed=%s", cert.k_used, cert.n_used, cert.sup_distance, cert.passed)
    return EXIT_OK if cert.passed else EXIT_FAIL


def cmd_partition(cfg: RunConfig) -> int:
    out = Path(cfg.out)
    mode = cfg.mode
    eps = cfg.epsilon_fraction if mode == "rational" else float(cfg.epsilon_fraction)
    payload = {"mode": mode}
    ok = True
    if cfg.demo == "counterexample":
        if not eps < Fraction(1, 4):
            raise ValueError("the counterexample requires epsilon < 1/4")
        P, uprime = isets.counterexample_set(eps, cfg.depth, mode)
        expected = isets.counterexample_measure(eps, cfg.depth, mode)
        size = isets.min_separating_size(uprime, P)
        measure_ok = P.measure == expected if mode == "rational" else abs(P.measure - expected) < 1e-12
        payload["counterexample"] = {
            "depth": cfg.depth, "set": P.to_json(), "derivative": uprime.to_json(),
            "expected_measure": isets.fraction_str(expected), "measure_ok": measure_ok,
            "min_separating_size": size,
        }
        ok = measure_ok and size == cfg.depth
    else:
        uprime = StepFunction([isets.as_number(0, mode), isets.as_number(1, mode)],
                              [isets.as_number(Fraction(1, 2), mode)])
    P_eps, B, report = isets.level_set_partition(uprime, eps, mode)
    payload["level_set_partition"] = {"P_eps": P_eps.to_json(), "partition": B.to_json(),
                                      "report": report.to_json()}
    _write_json(out / "partition.json", cfg, payload)
    log.info("partition of %d intervals, conditions %s", len(B), "verified" if report.passed else "FAILED")
    return EXIT_OK if ok and report.passed else EXIT_FAIL


COMMANDS = {"gap": cmd_gap, "conditions": cmd_conditions, "smooth": cmd_smooth, "partition": cmd_partition}


# --------------------------------------------------------------------------
# argument parsing

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lavrentiev", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "gap": "energies of the minimizing sequence, Lipschitz corpus sweep, case chains",
        "conditions": "check conditions (I)-(V) for f = exp(c xi^2)",
        "smooth": "smooth a named function and certify the approximation",
        "partition": "counterexample set and level-set partition",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text)
        p.add_argument("--config", type=Path, help="JSON file with RunConfig fields")
        p.add_argument("--out", help="output directory")
        p.add_argument("--seed", type=int, help="corpus seed")
        p.add_argument("--rel-tol", dest="rel_tol", type=float)
        p.add_argument("--mode", choices=isets.MODES)
        p.add_argument("--epsilon", help="e.g. 0.05 or 1/10")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def load_config(args: argparse.Namespace) -> RunConfig:
    data = {}
    if args.config is not None:
        data = json.loads(args.config.read_text())
        if not isinstance(data, dict):
            raise ValueError("config file must hold a JSON object")
        known = {f.name for f in dataclasses.fields(RunConfig)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown config fields: {sorted(unknown)}")
    data["command"] = args.command
    for name in ("out", "seed", "rel_tol", "mode", "epsilon"):
        value = getattr(args, name)
        if value is not None:
            data[name] = value
    cfg = RunConfig(**data)
    cfg.validate()
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args)
        Path(cfg.out).mkdir(parents=True, exist_ok=True)
        return COMMANDS[cfg.command](cfg)
    except (ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except QuadratureError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
