"""Command-line driver: ``qcantor <command> [options]``.

Exit codes: 0 success, 1 property violated or negative verdict, 2 usage or
configuration error.  Reports are JSON (default) or CSV, contain the
resolved configuration, the package version and the tolerance constants,
and never contain timestamps, so equal inputs give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from typing import Callable

from gmpy2 import mpq

from . import __version__, bridge, compression, entropy, linalg, qtests, states
from .errors import DepthError, MassBoundError, PreconditionError, QCantorError, StatisticUndefined
from .specs import SpecError, parse_dictionary, parse_machine, parse_rational, parse_state, parse_test

DEFAULT_MAX_QUBITS = 12

DEFAULTS: dict[str, dict] = {
    "coherence": {"state": "epr", "depth": 6},
    "test-eval": {"state": "tracial", "test": "prefix", "depth": 8, "delta": ["1/4"]},
    "bridge": {"state": {"kind": "bits", "pattern": "0"}, "test": "rotated", "depth": 8, "delta": ["1/2"],
               "levels": 6},
    "compress": {"mode": "qc", "state": {"kind": "bits", "pattern": "0"}, "depth": 6, "epsilon": "1/2",
                 "machine": "identity"},
    "entropy": {"state": "tracial", "depth": 6},
    "demo": {},
}


class UsageError(Exception):
    pass


def max_qubits() -> int:
    raw = os.environ.get("QCANTOR_MAX_QUBITS")
    if raw is None:
        return DEFAULT_MAX_QUBITS
    try:
        return int(raw)
    except ValueError as exc:
        raise UsageError(f"QCANTOR_MAX_QUBITS must be an integer, got {raw!r}") from exc


def to_jsonable(x):
    if linalg.is_rational(x):
        return f"{x.numerator}/{x.denominator}"
    if isinstance(x, dict):
        return {str(k): to_jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [to_jsonable(v) for v in x]
    if isinstance(x, (bool, str)) or x is None:
        return x
    if isinstance(x, int):
        return int(x)
    if hasattr(x, "item"):
        return to_jsonable(x.item())
    if isinstance(x, float):
        return float(x)
    return str(x)


# ---------------------------------------------------------------------------
# configuration


def _split_deltas(values) -> list[str]:
    out = []
    for v in values if isinstance(values, list) else [values]:
        out.extend(p.strip() for p in str(v).split(",") if p.strip())
    return out


def resolve_config(command: str, args: argparse.Namespace) -> dict:
    cfg = dict(DEFAULTS.get(command, {}))
    if getattr(args, "config", None):
        try:
            with open(args.config) as fh:
                loaded = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise UsageError("config file must hold a JSON object")
        cfg.update(loaded)
    for key in ("depth", "seed", "epsilon", "state", "test", "psi", "machine", "mode", "levels"):
        val = getattr(args, key, None)
        if val is not None:
            cfg[key] = val
    if getattr(args, "delta", None):
        cfg["delta"] = args.delta
    if "delta" in cfg:
        cfg["delta"] = _split_deltas(cfg["delta"])
    cfg.setdefault("seed", 0)
    cfg["command"] = command
    depth = cfg.get("depth")
    if depth is not None:
        depth = int(depth)
        cap = max_qubits()
        if depth < 0:
            raise UsageError("depth must be non-negative")
        if depth > cap:
            raise UsageError(f"depth cap exceeded: {depth} > {cap} (set QCANTOR_MAX_QUBITS to raise it)")
        cfg["depth"] = depth
    for key in ("state", "test", "psi", "machine"):
        v = cfg.get(key)
        if isinstance(v, str) and v.lstrip().startswith("{"):
            try:
                cfg[key] = json.loads(v)
            except json.JSONDecodeError as exc:
                raise UsageError(f"bad JSON in --{key}: {exc}") from exc
    return cfg


def _deltas(cfg) -> list[mpq]:
    out = []
    for d in cfg.get("delta", []):
        q = parse_rational(d)
        if not 0 < q < 1:
            raise UsageError(f"delta must lie in (0, 1), got {d}")
        out.append(q)
    if not out:
        raise UsageError("at least one delta is required")
    return out


def _epsilon(cfg) -> mpq:
    e = parse_rational(cfg.get("epsilon", "1/2"))
    if not 0 < e < 1:
        raise UsageError(f"epsilon must lie in (0, 1), got {cfg.get('epsilon')}")
    return e


# ---------------------------------------------------------------------------
# commands; each returns (exit_code, result)


def cmd_coherence(cfg: dict) -> tuple[int, dict]:
    depth = cfg["depth"]
    st = parse_state(cfg["state"], depth, cfg["seed"]).state
    rep = states.check_coherence(st, depth)
    res = rep.to_json()
    res["flagged_levels"] = rep.flagged()
    res["ok"] = rep.ok()
    return (0 if rep.ok() else 1), res


def cmd_test_eval(cfg: dict) -> tuple[int, dict]:
    depth = cfg["depth"]
    st = parse_state(cfg["state"], depth, cfg["seed"]).state
    test = parse_test(cfg["test"], depth, cfg.get("levels"))
    if test.max_levels == 0:
        raise UsageError("test has no levels")
    deltas = _deltas(cfg)
    values = qtests.evaluate_test(st, test, depth)
    strong = isinstance(test, qtests.StrongSolovayTest)
    if strong:
        solo = test.as_solovay(depth)
        masses = [solo.level(r).mass(depth) for r in range(test.max_levels)]
        violations = solo.mass_violations(depth)
    else:
        masses = [test.level(r).mass(depth) for r in range(test.max_levels)]
        violations = test.mass_violations(depth)
    semantics = "solovay" if strong or isinstance(test, qtests.SolovayTest) else "ml"
    verdicts = [qtests.verdict(values, d, semantics, depth=depth) for d in deltas]
    res = {"test": test.label, "levels": test.max_levels, "depth": depth,
           "values": values, "masses": masses, "mass_violations": violations,
           "verdicts": [dict(v.to_json(), delta=f"{d.numerator}/{d.denominator}")
                        for v, d in zip(verdicts, deltas)]}
    bad = violations or any(v.fails for v in verdicts)
    return (1 if bad else 0), res


def cmd_bridge(cfg: dict) -> tuple[int, dict]:
    depth = cfg["depth"]
    parsed = parse_state(cfg["state"], depth, cfg["seed"])
    if parsed.sequence is None:
        raise UsageError("bridge needs a bit-sequence state (kind 'bits')")
    test = parse_test(cfg["test"], depth, cfg.get("levels"))
    if isinstance(test, qtests.StrongSolovayTest) or test.max_levels == 0:
        raise UsageError("bridge needs a non-empty qML test")
    out = []
    code = 0
    for d in _deltas(cfg):
        try:
            rep = bridge.bridge_report(test, parsed.sequence.prefix, d, depth)
        except MassBoundError as exc:
            out.append({"delta": d, "error": "mass bound violated", "detail": str(exc)})
            code = 1
            continue
        row = rep.to_json()
        if not rep.fails_quantum:
            row["note"] = "state does not fail the test at this order: no coverage obligation"
        elif not rep.all_covered:
            code = 1
        out.append(row)
    return code, {"test": test.label, "depth": depth, "runs": out}


def _compress_qc(cfg: dict) -> tuple[int, dict]:
    depth = cfg["depth"]
    st = parse_state(cfg["state"], depth, cfg["seed"]).state
    machine = parse_machine(cfg.get("machine"), depth)
    dictionary = parse_dictionary(cfg.get("dictionary"))
    eps = _epsilon(cfg)
    rec = compression.qc_complexity(machine, st.restrict(depth), float(eps), dictionary)
    if rec is None:
        return 1, {"mode": "qc", "result": f"no witness <= {depth}"}
    return 0, {"mode": "qc", "record": rec.to_json(include_witness=rec.k <= 4), "upper_bound": True}


def _compress_part2(cfg: dict) -> tuple[int, dict]:
    test = parse_test(cfg.get("test", "part2"), cfg["depth"])
    if not isinstance(test, qtests.StrongSolovayTest):
        raise UsageError("part2 mode needs a strong Solovay test")
    grid = [test.item(r)[0] for r in range(test.max_levels)]
    depth = max(cfg["depth"], max(grid))
    if depth > max_qubits():
        raise UsageError(f"depth cap exceeded: {depth} > {max_qubits()}")
    st = parse_state(cfg.get("state", "part2"), depth, cfg["seed"]).state
    eps = _epsilon(cfg)
    f, machine = compression.solovay_to_machine(test)
    records, code = [], 0
    for r in range(test.max_levels):
        n, p = test.item(r)
        tau = linalg.tracial_value(p)
        row = {"r": r, "n": n, "tau": tau, "f": f(n), "g": f.g(n),
               "sandwich": bool(mpq(1, 1 << f(n)) >= tau > mpq(1, 1 << (f(n) + 1)))}
        try:
            rec = compression.compress_via_test(st, test, r, float(eps), (f, machine))
            row.update(rec.to_json(include_witness=rec.k <= 4))
        except PreconditionError as exc:
            row["error"] = str(exc)
            code = 1
        records.append(row)
    mass = compression.f_mass(f, range(1, depth + 1))
    return code, {"mode": "part2", "epsilon": eps, "records": records, "f_mass_to_depth": mass,
                  "f_mass_ok": mass <= 4}


def _compress_part1(cfg: dict) -> tuple[int, dict]:
    t_max = cfg["depth"]
    machine = parse_machine(cfg.get("machine"), max(t_max, 8))
    dictionary = parse_dictionary(cfg.get("dictionary"))
    levels = int(cfg.get("levels", 5))
    rows, code = [], 0
    for r in range(levels):
        masses = [linalg.tracial_value(compression.build_part1_test(machine, compression.default_f, r, t, dictionary))
                  for t in range(t_max + 1)]
        ok_bound = all(m <= mpq(1, 1 << r) for m in masses)
        ok_mono = all(a <= b for a, b in zip(masses, masses[1:]))
        code = code or (0 if ok_bound and ok_mono else 1)
        rows.append({"r": r, "masses": masses, "bound": mpq(1, 1 << r), "bound_ok": ok_bound,
                     "monotone": ok_mono})
    return code, {"mode": "part1", "f": "2*ceil(log2(n+2))", "t_max": t_max,
                  "f_mass_1_to_t": compression.f_mass(compression.default_f, range(1, t_max + 1)), "levels": rows}


def cmd_compress(cfg: dict) -> tuple[int, dict]:
    mode = cfg.get("mode", "qc")
    _epsilon(cfg)
    if mode == "qc":
        return _compress_qc(cfg)
    if mode == "part2":
        return _compress_part2(cfg)
    if mode == "part1":
        return _compress_part1(cfg)
    raise UsageError(f"unknown compress mode {mode!r}")


def cmd_entropy(cfg: dict) -> tuple[int, dict]:
    depth = cfg["depth"]
    if depth < 1:
        raise UsageError("entropy needs depth >= 1")
    rho = parse_state(cfg["state"], depth, cfg["seed"]).state
    if cfg.get("psi") is None:
        return 0, entropy.entropy_rate(rho, depth).to_json()
    psi = parse_state(cfg["psi"], depth, cfg["seed"]).state
    try:
        return 0, entropy.cross_entropy_report(rho, psi, depth).to_json()
    except StatisticUndefined as exc:
        return 1, {"error": str(exc)}


DEMO_SCENARIOS = [
    ("coherence", {"state": "epr", "depth": 6}, 0),
    ("coherence", {"state": {"kind": "corrupted", "bad_level": 4}, "depth": 6}, 1),
    ("coherence", {"state": "random_sequence", "depth": 6}, 0),
    ("test-eval", {"state": "tracial", "test": "prefix", "depth": 8, "delta": ["1/4"]}, 0),
    ("test-eval", {"state": {"kind": "bits", "pattern": "0"}, "test": "prefix", "depth": 8, "delta": ["1/2"]}, 1),
    ("test-eval", {"state": "epr", "test": "epr", "depth": 8, "delta": ["1/2"]}, 1),
    ("bridge", {"state": {"kind": "bits", "pattern": "0"}, "test": "rotated", "depth": 8, "delta": ["1/2"],
                "levels": 6}, 0),
    ("bridge", {"state": {"kind": "bits", "pattern": "1"}, "test": "rotated", "depth": 8, "delta": ["1/2"],
                "levels": 6}, 0),
    ("compress", {"mode": "qc", "state": {"kind": "bits", "pattern": "0"}, "depth": 6, "epsilon": "1/2"}, 0),
    ("compress", {"mode": "qc", "state": {"kind": "bits", "pattern": "1"}, "depth": 4, "epsilon": "1/2"}, 0),
    ("compress", {"mode": "part2", "state": {"kind": "part2", "weight": "9/10"}, "test": "part2_small",
                  "depth": 2, "epsilon": "1/5"}, 0),
    ("compress", {"mode": "part2", "state": "part2", "test": "part2", "depth": 4, "epsilon": "1/10"}, 0),
    ("compress", {"mode": "part1", "depth": 12, "levels": 5, "epsilon": "1/2"}, 0),
    ("entropy", {"state": "tracial", "depth": 6}, 0),
    ("entropy", {"state": {"kind": "iid", "bias": "1/4"}, "psi": {"kind": "iid", "bias": "1/4"}, "depth": 6}, 0),
    ("entropy", {"state": "tracial", "psi": {"kind": "bits", "pattern": "0"}, "depth": 3}, 1),
]


def cmd_demo(cfg: dict) -> tuple[int, dict]:
    """Run every scenario; exit 0 iff each one exits as expected."""
    out, code = [], 0
    for name, sub, expected in DEMO_SCENARIOS:
        sub = dict(sub, seed=cfg["seed"], command=name)
        try:
            got, res = COMMANDS[name](sub)
        except (UsageError, SpecError, DepthError) as exc:
            got, res = 2, {"error": str(exc)}
        ok = got == expected
        code = code or (0 if ok else 1)
        out.append({"command": name, "config": sub, "expected_exit": expected, "exit": got, "as_expected": ok,
                    "result": res})
    return code, {"scenarios": out, "all_as_expected": code == 0}


COMMANDS: dict[str, Callable[[dict], tuple[int, dict]]] = {
    "coherence": cmd_coherence,
    "test-eval": cmd_test_eval,
    "bridge": cmd_bridge,
    "compress": cmd_compress,
    "entropy": cmd_entropy,
    "demo": cmd_demo,
}


# ---------------------------------------------------------------------------
# output


def _flat_rows(result: dict) -> list[list]:
    """Best-effort table view of a result for CSV output."""
    if "per_level" in result:
        head = ["n", "H_n", "rate_n", "cross_entropy_n"]
        return [head] + [[r["n"], r["H_n"], r["rate_n"], r.get("cross_entropy_n", "")] for r in result["per_level"]]
    if "deviations" in result:
        return [["n", "deviation"]] + [[n, d] for n, d in enumerate(result["deviations"])]
    if "values" in result:
        return [["r", "value", "mass"]] + [[r, v, m] for r, (v, m) in enumerate(zip(result["values"], result["masses"]))]
    if "runs" in result:
        rows = [["delta", "r", "measure", "bound", "covered"]]
        for run in result["runs"]:
            for r, m in enumerate(run.get("measures", [])):
                rows.append([run["delta"], r, m, run["bounds"][r], run["covered"][r]])
        return rows
    if "records" in result:
        keys = ["r", "n", "k", "f", "g", "tau", "achieved_distance", "epsilon", "error"]
        return [keys] + [[rec.get(k, "") for k in keys] for rec in result["records"]]
    if "record" in result:
        rec = result["record"]
        keys = ["n", "k", "achieved_distance", "epsilon", "source"]
        return [keys, [rec.get(k, "") for k in keys]]
    if "levels" in result and result.get("mode") == "part1":
        rows = [["r", "t", "mass", "bound"]]
        for lv in result["levels"]:
            rows.extend([lv["r"], t, m, lv["bound"]] for t, m in enumerate(lv["masses"]))
        return rows
    if "scenarios" in result:
        return [["command", "expected_exit", "exit", "as_expected"]] + [
            [s["command"], s["expected_exit"], s["exit"], s["as_expected"]] for s in result["scenarios"]]
    return [["key", "value"]] + [[k, json.dumps(v, sort_keys=True)] for k, v in sorted(result.items())]


def render(report: dict, fmt: str) -> str:
    report = to_jsonable(report)
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True) + "\n"
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["# tool", report["tool"], "version", report["version"], "exit_code", report["exit_code"]])
    w.writerow(["# config", json.dumps(report["config"], sort_keys=True)])
    w.writerow(["# tolerances", json.dumps(report["tolerances"], sort_keys=True)])
    for row in _flat_rows(report["result"]):
        w.writerow(row)
    return buf.getvalue()


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with the experiment configuration")
    common.add_argument("--depth", type=int, help="number of qubits (capped by QCANTOR_MAX_QUBITS, default 12)")
    common.add_argument("--delta", action="append", help="order(s) delta, e.g. 1/2; repeat or comma-separate")
    common.add_argument("--epsilon", help="accuracy epsilon in (0, 1), e.g. 1/5")
    common.add_argument("--seed", type=int, help="seed for randomised fixtures")
    common.add_argument("--format", choices=["json", "csv"], default="json")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--state", help="state name or JSON spec")
    common.add_argument("--test", help="test name or JSON spec")
    common.add_argument("--levels", type=int, help="number of test levels")

    parser = argparse.ArgumentParser(prog="qcantor", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"qcantor {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("coherence", parents=[common], help="check partial-trace coherence of a state")
    sub.add_parser("test-eval", parents=[common], help="evaluate a state on a quantum test")
    sub.add_parser("bridge", parents=[common], help="extract a classical test from a quantum one")
    p = sub.add_parser("compress", parents=[common], help="complexity search and compression certificates")
    p.add_argument("--mode", choices=["qc", "part1", "part2"])
    p.add_argument("--machine", help="machine name or JSON spec")
    p = sub.add_parser("entropy", parents=[common], help="entropy profile and cross-entropy statistic")
    p.add_argument("--psi", help="reference state for the cross-entropy statistic")
    sub.add_parser("demo", parents=[common], help="run the scenario suite")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = resolve_config(args.command, args)
        code, result = COMMANDS[args.command](cfg)
    except (UsageError, SpecError, DepthError, json.JSONDecodeError, KeyError, TypeError) as exc:
        print(f"qcantor {args.command}: error: {exc}", file=sys.stderr)
        return 2
    except QCantorError as exc:
        print(f"qcantor {args.command}: {exc}", file=sys.stderr)
        return 1
    report = {
        "tool": "qcantor",
        "version": __version__,
        "command": args.command,
        "config": cfg,
        "tolerances": {"tol_eig": linalg.TOL_EIG, "tol_entry": linalg.TOL_ENTRY, "rank_tol": linalg.RANK_TOL},
        "exit_code": code,
        "result": result,
    }
    text = render(report, args.format)
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
