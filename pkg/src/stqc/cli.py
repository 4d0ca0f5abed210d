"""Command-line front end: run, verify, scan-leakage, syndromes, resources, timing.

Exit codes: 0 success, 2 impossible forced branch, 3 configuration error,
4 verification failure.
"""
from __future__ import annotations

import argparse
import csv
import json
import logging
import math
import os
import sys
import time
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from . import measure as ms
from . import verify as vf
from .protocols import exchange as px
from .protocols import gradient as pg
from .protocols.common import ProtocolResult
from .protocols.schedule import EFFECTIVE, FULL, Register, Step, enumerate_branches, run_schedule
from .qcore import ContractError, ImpossibleOutcome, normalize
from .spinmodels import to_rad_per_s

EXIT_OK, EXIT_IMPOSSIBLE, EXIT_CONFIG, EXIT_FAIL = 0, 2, 3, 4
ENV_PREFIX = "STQC_"

log = logging.getLogger("stqc")


class ConfigError(Exception):
    pass


# -- configuration ---------------------------------------------------------

ENERGY_KEYS = {"mu_delta", "j_phase"}
PROTOCOL_PARAMS = {
    "p1_single": {"theta", "n", "winding"},
    "p1_prepare": {"theta", "phi_delta", "n", "winding"},
    "p1_two": {"n1", "n2"},
    "p1_recycle": {"angles", "mode", "s1", "n", "winding"},
    "p1_stabilizer": {"angles", "error", "n"},
    "p2_bus": {"outcome_model"},
    "p2_single": {"phases", "outcome_model", "policy"},
    "p2_two": {"outcome_model", "policy"},
}
INPUT_DIM = {"p1_single": 2, "p1_two": 4, "p1_recycle": 2, "p1_stabilizer": 2, "p2_bus": 2,
             "p2_single": 2, "p2_two": 4, "p1_prepare": 0}
TOP_KEYS = {"protocol", "params", "input", "branches", "seed", "level", "latency", "out"}


def _energy(name: str, v) -> float:
    if not isinstance(v, dict) or set(v) != {"value", "unit"}:
        raise ConfigError(f"params.{name}: energies need {{value, unit}} with unit rad_per_s or hz")
    try:
        return to_rad_per_s(float(v["value"]), v["unit"])
    except ContractError as e:
        raise ConfigError(f"params.{name}: {e}") from None


def _latency(v) -> float:
    if v is None:
        return 0.0
    if not isinstance(v, dict) or set(v) != {"value", "unit"}:
        raise ConfigError("latency: needs {value, unit} with unit s or ns")
    scale = {"s": 1.0, "ns": 1e-9}.get(v["unit"])
    if scale is None:
        raise ConfigError(f"latency: unknown unit {v['unit']!r}")
    return float(v["value"]) * scale


def load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config: {e}") from None
    try:
        data = json.loads(text) if path.endswith(".json") else yaml.safe_load(text)
    except (json.JSONDecodeError, yaml.YAMLError) as e:
        raise ConfigError(f"cannot parse config: {e}") from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError("config must be a mapping")
    unknown = set(data) - TOP_KEYS
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    return data


def resolve(args, cfg: dict) -> dict:
    """Merge config, environment and flags (flags win) into run settings."""
    env = {k[len(ENV_PREFIX):].lower(): v for k, v in os.environ.items() if k.startswith(ENV_PREFIX)}
    def pick(key, default=None):
        flag = getattr(args, key, None)
        if flag is not None:
            return flag
        if key in env:
            return env[key]
        return cfg.get(key, default)

    protocol = pick("protocol")
    if protocol is not None and protocol not in PROTOCOL_PARAMS:
        raise ConfigError(f"protocol: unknown tag {protocol!r}")
    params = dict(cfg.get("params") or {})
    if protocol is not None:
        allowed = PROTOCOL_PARAMS[protocol] | ENERGY_KEYS
        unknown = set(params) - allowed
        if unknown:
            raise ConfigError(f"params: unknown key(s) {sorted(unknown)} for {protocol}")
    energies = {k: _energy(k, params.pop(k)) for k in list(params) if k in ENERGY_KEYS}
    seed = pick("seed")
    branches = str(pick("branches", "enumerate"))
    level = pick("level", EFFECTIVE)
    if level == "full_spin":
        level = FULL
    if level not in (EFFECTIVE, FULL):
        raise ConfigError(f"level: expected effective or full, got {level!r}")
    mode, forced = _branch_mode(branches)
    if mode == "sample" and seed is None:
        raise ConfigError("seed: required when branches = sample")
    return {
        "protocol": protocol,
        "params": params,
        "mu_delta": energies.get("mu_delta", pg.DEFAULT_MU_DELTA),
        "j_phase": energies.get("j_phase", px.J_PHASE),
        "input": cfg.get("input"),
        "mode": mode,
        "forced": forced,
        "seed": None if seed is None else int(seed),
        "level": level,
        "latency": _latency(cfg.get("latency")),
        "out": Path(pick("out", "stqc_out")),
    }


def _branch_mode(s: str):
    if s in ("enumerate", "sample"):
        return s, None
    if s.startswith("forced="):
        try:
            return "forced", [int(x) for x in s[len("forced="):].split(",") if x != ""]
        except ValueError:
            raise ConfigError(f"branches: bad forced list {s!r}") from None
    raise ConfigError(f"branches: expected enumerate, sample or forced=..., got {s!r}")


def _input_state(settings) -> np.ndarray | None:
    dim = INPUT_DIM[settings["protocol"]]
    if dim == 0:
        return None
    raw = settings["input"]
    if raw is None:
        v = np.zeros(dim, dtype=complex)
        v[0] = 1
        return v
    try:
        v = np.array([complex(*a) if isinstance(a, (list, tuple)) else complex(a) for a in raw])
    except (TypeError, ValueError):
        raise ConfigError("input: expected a list of amplitudes or [re, im] pairs") from None
    if v.shape != (dim,) or np.linalg.norm(v) == 0:
        raise ConfigError(f"input: expected {dim} amplitudes, not all zero")
    return v / np.linalg.norm(v)


def make_runner(settings):
    """Closure psi, source -> ProtocolResult for the configured protocol."""
    tag, p = settings["protocol"], settings["params"]
    mu, j, level = settings["mu_delta"], settings["j_phase"], settings["level"]
    if level == FULL and tag != "p1_single" and not tag.startswith("p2"):
        raise ConfigError(f"level: full spin simulation is not available for {tag}")
    om = p.get("outcome_model", ms.S_T0)
    if tag == "p1_single":
        return lambda psi, src: pg.teleport_rotation(psi, float(p.get("theta", math.pi / 2)), src,
                                                     int(p.get("n", 0)), mu, int(p.get("winding", 0)), level)
    if tag == "p1_prepare":
        return lambda psi, src: pg.prepare_state(float(p.get("theta", math.pi / 2)),
                                                 float(p.get("phi_delta", 0.0)), src, int(p.get("n", 0)),
                                                 mu, int(p.get("winding", 0)))
    if tag == "p1_two":
        return lambda psi, src: pg.square_gate(psi, int(p.get("n1", 1)), int(p.get("n2", 1)), src, mu)
    if tag == "p1_recycle":
        angles = [float(a) for a in p.get("angles", [math.pi / 2, math.pi / 3])]
        if not angles:
            raise ConfigError("params.angles: must not be empty")
        return lambda psi, src: pg.recycled_sequence(psi, angles, src, p.get("mode", "adjust"),
                                                     int(p.get("s1", 0)), int(p.get("n", 0)), mu,
                                                     int(p.get("winding", 0)))
    if tag == "p1_stabilizer":
        angles = [float(a) for a in p.get("angles", [0.3, 1.1, 2.0])]
        err = p.get("error")
        err = None if err is None else (str(err[0]), int(err[1]))
        return lambda psi, src: pg.stabilizer_roundtrip(psi, angles, src, err, int(p.get("n", 0)), mu)
    if tag == "p2_bus":
        return lambda psi, src: px.quantum_bus(psi, src, om)
    if tag == "p2_single":
        phases = [float(a) for a in p.get("phases", [math.pi / 2, -math.pi / 2, math.pi / 2, 0.0])]
        return lambda psi, src: px.hadamard_sequence(psi, src, phases, om, p.get("policy", "heisenberg"), j)
    return lambda psi, src: px.two_qubit_sequence(psi, src, om, p.get("policy", "heisenberg"), j)


# -- serialisation ---------------------------------------------------------

def cjson(a) -> list:
    a = np.asarray(a, dtype=complex)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def from_cjson(x) -> np.ndarray:
    a = np.asarray(x, dtype=float)
    return a[..., 0] + 1j * a[..., 1]


def _dump(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def schedule_doc(tag: str, results: list[ProtocolResult], initial: list[np.ndarray]) -> dict:
    r0 = results[0]
    return {
        "protocol": tag,
        "register": r0.register.to_dict(),
        "outputs": list(r0.outputs),
        "target": None if r0.target is None else cjson(r0.target),
        "branches": [{"outcomes": res.outcomes, "initial": cjson(init),
                      "steps": [s.to_dict() for s in res.steps]} for res, init in zip(results, initial)],
    }


def replay(doc: dict) -> list[ProtocolResult]:
    try:
        reg = Register.from_dict(doc["register"])
        outs = [int(q) for q in doc["outputs"]]
        target = None if doc.get("target") is None else from_cjson(doc["target"])
        results = []
        for br in doc["branches"]:
            steps = [Step.from_dict(s) for s in br["steps"]]
            state, ledger, records = run_schedule(steps, reg, from_cjson(br["initial"]))
            results.append(ProtocolResult(doc["protocol"], reg, steps, records, ledger, state, outs, target,
                                          initial=from_cjson(br["initial"])))
    except (KeyError, TypeError) as e:
        raise ConfigError(f"schedule file is malformed: {e}") from None
    return results


def _branch_summary(res: ProtocolResult) -> dict:
    d = res.summary()
    o = res.output()
    d["separable"] = o.separable
    d["leakage"] = o.leakage
    d["records"] = [{"dots": list(r.spec.dot_pair), "model": r.spec.outcome_model, "outcome": r.outcome,
                     "probability": r.probability, "step": r.step_index, "label": r.label}
                    for r in res.records]
    if o.separable and o.kraus.ndim == 1:
        d["output_state"] = cjson(o.kraus)
        try:
            d["corrected_state"] = cjson(normalize(res.corrected()))
        except ContractError:
            pass
    return d


# -- commands --------------------------------------------------------------

def _require_protocol(settings):
    if settings["protocol"] is None:
        raise ConfigError("protocol: missing (set it in the config or with --protocol)")


def _execute(settings, run, psi):
    mode = settings["mode"]
    if mode == "enumerate":
        return enumerate_branches(lambda src: run(psi, src))
    src = ms.Sampled(settings["seed"]) if mode == "sample" else ms.Forced(settings["forced"])
    return [run(psi, src)]


def _summary_text(settings, results) -> str:
    mu, j = settings["mu_delta"], settings["j_phase"]
    lines = [f"protocol {settings['protocol']}  level {settings['level']}  branches {settings['mode']}",
             f"mu_delta = {mu:.6g} rad/s = {mu / (2 * math.pi):.6g} Hz",
             f"j_phase  = {j:.6g} rad/s = {j / (2 * math.pi):.6g} Hz"]
    total = 0.0
    for res in results:
        total += res.probability
        lines.append(f"  outcomes {res.outcomes}  p = {res.probability:.6f}  flagged = {res.flagged}")
    lines.append(f"total probability {total:.12f}")
    return "\n".join(lines) + "\n"


def cmd_run(settings) -> int:
    _require_protocol(settings)
    run = make_runner(settings)
    psi = _input_state(settings)
    results = _execute(settings, run, psi)
    out = settings["out"]
    _dump(out / "result.json", {"protocol": settings["protocol"],
                                "branches": [_branch_summary(r) for r in results],
                                "total_probability": sum(r.probability for r in results)})
    _dump(out / "schedule.json", schedule_doc(settings["protocol"], results,
                                              [r.initial for r in results]))
    (out / "summary.txt").write_text(_summary_text(settings, results), encoding="utf-8")
    return EXIT_OK


def cmd_verify(settings, schedule_path: str | None) -> int:
    out = settings["out"]
    if schedule_path:
        try:
            doc = json.loads(Path(schedule_path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as e:
            raise ConfigError(f"cannot read schedule: {e}") from None
        results = replay(doc)
        tag = doc["protocol"]
        if any(r.initial.ndim != 2 for r in results):
            raise ConfigError("schedule holds single input states; verify needs one written by `verify`")
    else:
        _require_protocol(settings)
        tag = settings["protocol"]
        if INPUT_DIM[tag] == 0:
            raise ConfigError(f"protocol: {tag} has no input map to verify")
        run = make_runner(settings)
        dim = INPUT_DIM[tag]
        results = enumerate_branches(lambda src: run(np.eye(dim, dtype=complex), src))
        _dump(out / "schedule.json", schedule_doc(tag, results, [r.initial for r in results]))
    if results[0].target is None:
        raise ConfigError(f"protocol: {tag} has no declared target")
    maps = []
    for res in results:
        o = res.output()
        maps.append(vf.BranchMap(res.outcomes, res.probability, o.kraus if o.separable else None,
                                 o.leakage, res.flagged, res))
    rep = vf.equal_up_to_corrections(maps, results[0].target, tag)
    doc = rep.to_dict()
    if len(results[0].outputs) == 2:
        doc["wire_mapping"] = vf.wire_mapping_search(maps, results[0].target)
    _dump(out / "equivalence.json", doc)
    if not rep.passed:
        log.error("equivalence failed on branch(es): %s", ", ".join(rep.failing()))
        bad = rep.failing()
        more = f" (+{len(bad) - 10} more)" if len(bad) > 10 else ""
        print(f"FAIL {len(bad)} of {len(rep.branches)} branches: " + ", ".join(bad[:10]) + more, file=sys.stderr)
        return EXIT_FAIL
    return EXIT_OK


def cmd_scan_leakage(settings, ratios) -> int:
    rows, slope = vf.leakage_scan(ratios)
    out = settings["out"]
    with open(out / "leakage.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ratio", "max_leakage", "fit_slope"])
        for r, v in rows:
            w.writerow([repr(r), repr(v), repr(slope)])
    positive = vf.cross_validate(ratios, zz_sign=1)
    flipped = vf.cross_validate(ratios, zz_sign=-1)
    with open(out / "cross_validation.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["ratio", "deviation_zz_plus", "deviation_zz_minus"])
        for (r, a), (_, b) in zip(positive, flipped):
            w.writerow([repr(r), repr(a), repr(b)])
    ok = vf.is_monotone(rows) and abs(slope - 2) <= 0.2
    return EXIT_OK if ok else EXIT_FAIL


def cmd_syndromes(settings) -> int:
    table = pg.syndrome_table(mu_delta=settings["mu_delta"])
    out = settings["out"]
    with open(out / "syndromes.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["error", "S1", "S2", "S3"])
        for k, row in table.items():
            w.writerow([k, row["S1"], row["S2"], row["S3"]])
    classes: dict[tuple, list] = {}
    for k, row in table.items():
        if k != "none":
            classes.setdefault((row["S1"], row["S2"], row["S3"]), []).append(k)
    _dump(out / "syndromes.json", {"table": table,
                                   "classes": [{"syndrome": list(s), "errors": e} for s, e in sorted(classes.items())]})
    detected = all(-1 in row.values() for k, row in table.items() if k != "none")
    clean = all(v == 1 for v in table["none"].values())
    return EXIT_OK if detected and clean else EXIT_FAIL


def cmd_resources(settings) -> int:
    rows = [vf.resource_count(tag) for tag in vf.REFERENCE_RESOURCES]
    _dump(settings["out"] / "resources.json",
          [{"protocol": r.protocol, "gate_count": r.gate_count, "measurement_count": r.measurement_count,
            "ancilla_count": r.ancilla_count, "leakage_protected": r.leakage_protected,
            "table_i": list(vf.REFERENCE_RESOURCES[r.protocol]), "match": r.as_tuple() == vf.REFERENCE_RESOURCES[r.protocol]}
           for r in rows])
    return EXIT_OK if all(r.as_tuple() == vf.REFERENCE_RESOURCES[r.protocol] for r in rows) else EXIT_FAIL


def cmd_timing(settings, j_value: float) -> int:
    reports = vf.timing_table(j_value, settings["mu_delta"], latency=settings["latency"])
    ok = True
    with open(settings["out"] / "timing.csv", "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(["schedule", "convention", "policy", "step", "duration_ns"])
        for conv, policy, rep in reports:
            for name, d in rep.rows_ns():
                w.writerow([rep.schedule, conv, policy, name, repr(d)])
            w.writerow([rep.schedule, conv, policy, "total", repr(rep.total * 1e9)])
            ok &= rep.total < 150e-9
    _dump(settings["out"] / "timing_notes.json",
          [{"schedule": rep.schedule, "convention": conv, "policy": policy, "total_ns": rep.total * 1e9,
            "note": rep.note} for conv, policy, rep in reports])
    return EXIT_OK if ok else EXIT_FAIL


# -- entry point -----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="stqc", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run", "verify", "scan-leakage", "syndromes", "resources", "timing"):
        p = sub.add_parser(name)
        p.add_argument("--config")
        p.add_argument("--seed", type=int)
        p.add_argument("--out")
        p.add_argument("--level", choices=[EFFECTIVE, FULL])
        p.add_argument("--branches", help="enumerate | sample | forced=0,1,...")
        p.add_argument("--protocol", choices=sorted(PROTOCOL_PARAMS))
        if name == "verify":
            p.add_argument("--schedule", help="replay and check a schedule.json")
        if name == "scan-leakage":
            p.add_argument("--ratios", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
        if name == "timing":
            p.add_argument("--j", type=float, default=160e6,
                           help="exchange value read both as rad/s and as Hz")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = None
    try:
        cfg = load_config(args.config or os.environ.get(ENV_PREFIX + "CONFIG"))
        settings = resolve(args, cfg)
        out = settings["out"]
        out.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(out / "stqc.log", mode="a", encoding="utf-8")
        handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(message)s"))
        log.addHandler(handler)
        log.setLevel(logging.INFO)
        log.info("stqc %s %s argv=%s", __version__, args.command, argv if argv is not None else sys.argv[1:])
        t0 = time.perf_counter()
        if args.command == "run":
            code = cmd_run(settings)
        elif args.command == "verify":
            code = cmd_verify(settings, args.schedule)
        elif args.command == "scan-leakage":
            code = cmd_scan_leakage(settings, args.ratios)
        elif args.command == "syndromes":
            code = cmd_syndromes(settings)
        elif args.command == "resources":
            code = cmd_resources(settings)
        else:
            code = cmd_timing(settings, args.j)
        log.info("exit %d after %.3f s", code, time.perf_counter() - t0)
        return code
    except ImpossibleOutcome as e:
        print(f"impossible branch: {e}", file=sys.stderr)
        return EXIT_IMPOSSIBLE
    except (ConfigError, ContractError) as e:
        print(f"config error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    finally:
        if handler is not None:
            log.removeHandler(handler)
            handler.close()


if __name__ == "__main__":
    sys.exit(main())
