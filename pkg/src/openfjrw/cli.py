"""Command-line front end.

    openfjrw <command> --config job.json [--out result.json]

Exit status: 0 on success, 1 when a check reports a failure, 2 on invalid
input.  The degree of parallelism of ``verify`` is read from OPENFJRW_JOBS.
"""

from __future__ import annotations

import argparse
import os
import random
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

from . import serialize as ser
from .algebra import URing, psi_I
from .bmodel import (build_potential, build_potential_sym, cycle_labels,
                     extract_amplitudes, period_integrals)
from .chamber import (ChamberDomain, ChamberError, amplitude,
                      build_minimal_chamber, check_axioms, symmetrize)
from .combinatorics import (ClosedInsertion, DoubleNegative, Marking,
                            ModelParams, closed_selection)
from .invariants import (DEFAULT_CONVENTION, NoDistinguishedInsertion,
                         SignConvention, calibrate_convention,
                         closed_trr_instances, distinguished_values,
                         ext_invariant, random_group_element, verify_mirror,
                         verify_mirror_recursion, verify_open_trr)
from .wallcross import (GroupElement, WallCrossingError, act_on_chamber,
                        automorphism_images, connect, exp_apply,
                        preservation_check)

COMMANDS = ("ext-invariant", "amplitude", "chamber-build", "chamber-check",
            "potential", "period", "wallcross-apply", "wallcross-connect", "verify")
CHECKS = ("axioms", "period", "chamber-independence", "torsor", "preservation",
          "open-trr", "closed-trr", "mirror")
JOBS_ENV = "OPENFJRW_JOBS"


class ConfigError(ValueError):
    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


@dataclass
class JobConfig:
    params: ModelParams
    markings: list
    dmax: object
    command: str | None
    payload: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    def as_dict(self) -> dict:
        return {"r": self.params.r, "s": self.params.s,
                "markings": ser.markings_to_json(self.markings),
                "dmax": self.dmax, "command": self.command, **self.payload}


def _is_int(v) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def load_config(source) -> JobConfig:
    """Parse and validate a job from a path or inline JSON text."""
    import json
    base = Path(".")
    text = source
    if isinstance(source, Path) or (isinstance(source, str)
                                    and not source.lstrip().startswith("{")):
        path = Path(source)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config: {exc}"])
        base = path.parent
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError([f"parse error: {exc}"])
    if not isinstance(obj, dict):
        raise ConfigError(["config must be a JSON object"])
    errors = []
    r, s = obj.get("r"), obj.get("s")
    for name, v in (("r", r), ("s", s)):
        if not _is_int(v) or v < 2:
            errors.append(f"{name}: must be an integer >= 2")
    markings = []
    raw = obj.get("markings", [])
    if not isinstance(raw, list):
        errors.append("markings: must be a list")
        raw = []
    seen = set()
    for i, m in enumerate(raw):
        if not isinstance(m, dict):
            errors.append(f"markings[{i}]: must be an object")
            continue
        lab, a, b = m.get("label"), m.get("a"), m.get("b")
        bad = False
        if not _is_int(lab) or lab < 1:
            errors.append(f"markings[{i}].label: must be a positive integer")
            bad = True
        elif lab in seen:
            errors.append(f"markings[{i}].label: duplicate label {lab}")
            bad = True
        else:
            seen.add(lab)
        if not _is_int(a) or (_is_int(r) and not 0 <= a <= r - 1):
            errors.append(f"markings[{i}].a: must be an integer in 0..r-1")
            bad = True
        if not _is_int(b) or (_is_int(s) and not 0 <= b <= s - 1):
            errors.append(f"markings[{i}].b: must be an integer in 0..s-1")
            bad = True
        if not bad:
            markings.append(Marking(lab, a, b))
    dmax = obj.get("dmax", 0)
    if isinstance(dmax, dict):
        try:
            dmax = {int(k): v for k, v in dmax.items()}
        except ValueError:
            errors.append("dmax: keys must be labels")
            dmax = {}
        for k, v in dmax.items():
            if not _is_int(v) or v < 0:
                errors.append(f"dmax[{k}]: must be a non-negative integer")
        missing = seen - set(dmax)
        if missing:
            errors.append(f"dmax: missing labels {sorted(missing)}")
    elif not _is_int(dmax) or dmax < 0:
        errors.append("dmax: must be a non-negative integer or a label map")
    command = obj.get("command")
    if command is not None and command not in COMMANDS:
        errors.append(f"command: unknown command {command!r}")
    if errors:
        raise ConfigError(errors)
    payload = {k: v for k, v in obj.items()
               if k not in ("r", "s", "markings", "dmax", "command")}
    return JobConfig(ModelParams(r, s), markings, dmax, command, payload, base)


def _convention(cfg: JobConfig) -> SignConvention:
    name = cfg.payload.get("convention")
    if name is None:
        return DEFAULT_CONVENTION
    for c in SignConvention:
        if c.value == name or c.name == name:
            return c
    raise ConfigError([f"convention: unknown value {name!r}"])


def _load_json_payload(cfg: JobConfig, key: str):
    import json
    if key in cfg.payload:
        return cfg.payload[key]
    fkey = f"{key}_file"
    if fkey in cfg.payload:
        path = cfg.base_dir / cfg.payload[fkey]
        try:
            return json.loads(path.read_text(encoding="utf-8"))
        except (OSError, ValueError) as exc:
            raise ConfigError([f"{fkey}: {exc}"])
    return None


def _chamber(cfg: JobConfig, key: str = "chamber"):
    obj = _load_json_payload(cfg, key)
    if obj is None:
        return build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    try:
        nu = ser.chamber_from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"{key}: {exc}"])
    expect = ChamberDomain(cfg.params, cfg.markings, cfg.dmax)
    if nu.domain != expect:
        raise ConfigError([f"{key}: domain differs from the config markings/dmax"])
    return nu


def _insertions(cfg: JobConfig):
    raw = cfg.payload.get("insertions")
    if not isinstance(raw, list):
        raise ConfigError(["insertions: must be a list of {a, b, d}"])
    out = []
    for i, o in enumerate(raw):
        try:
            out.append(ClosedInsertion(int(o["a"]), int(o["b"]), int(o.get("d", 0))))
        except (KeyError, TypeError, ValueError):
            raise ConfigError([f"insertions[{i}]: needs integer a, b and optional d"])
    return out


# --- commands -------------------------------------------------------------

def cmd_ext_invariant(cfg):
    ins = _insertions(cfg)
    conv = _convention(cfg)
    sel = closed_selection(cfg.params, ins)
    val = ext_invariant(cfg.params, ins, conv)
    return 0, {"value": ser.qstr(val), "convention": conv.value,
               "selection": sel.kind.value}


def cmd_amplitude(cfg):
    nu = _chamber(cfg)
    J = cfg.payload.get("J")
    if not isinstance(J, list) or not J:
        raise ConfigError(["J: must be a non-empty list of labels"])
    dd = cfg.payload.get("d", {})
    try:
        d = {int(j): int(dd.get(str(j), dd.get(j, 0)) if isinstance(dd, dict) else 0)
             for j in J}
        val = amplitude(nu, [int(j) for j in J], d)
    except ChamberError as exc:
        raise ConfigError([f"J/d: {exc}"])
    return 0, {"A": ser.qstr(val)}


def cmd_chamber_build(cfg):
    return 0, ser.chamber_to_json(build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax))


def cmd_chamber_check(cfg):
    if _load_json_payload(cfg, "chamber") is None:
        raise ConfigError(["chamber: chamber-check needs a chamber or chamber_file"])
    rep = check_axioms(_chamber(cfg))
    return (0 if rep.ok else 1), rep.as_dict()


def cmd_potential(cfg):
    nu = _chamber(cfg)
    if cfg.payload.get("symmetric"):
        return 0, ser.series_to_json(build_potential_sym(nu))
    return 0, ser.series_to_json(build_potential(nu))


def cmd_period(cfg):
    nu = _chamber(cfg)
    formal = bool(cfg.payload.get("formal", False))
    W = build_potential_sym(nu) if cfg.payload.get("symmetric") else build_potential(nu)
    cyc = cfg.payload.get("cycle")
    cycles = None if cyc is None else [tuple(int(c) for c in cyc)]
    table = period_integrals(W, cycles, formal)
    return 0, {"cycles": {f"{a},{b}": ser.hbar_to_json(H)
                          for (a, b), H in sorted(table.items())}}


def _group(cfg):
    raw = cfg.payload.get("group")
    if not isinstance(raw, list):
        raise ConfigError(["group: must be a list of {J, d, p, c}"])
    try:
        return ser.group_from_json(raw, cfg.params, cfg.markings)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError([f"group: {exc}"])


def cmd_wallcross_apply(cfg):
    nu = _chamber(cfg)
    g = _group(cfg)
    nu2 = act_on_chamber(g, nu)
    rep = preservation_check(g, cfg.params, URing(cfg.markings))
    return 0, {"chamber": ser.chamber_to_json(nu2), "preservation": rep.as_dict()}


def cmd_wallcross_connect(cfg):
    src = _chamber(cfg, "source")
    if _load_json_payload(cfg, "target") is None:
        raise ConfigError(["target: wallcross-connect needs a target chamber"])
    tgt = _chamber(cfg, "target")
    try:
        g = connect(src, tgt)
    except ChamberError as exc:
        raise ConfigError([str(exc)])
    return 0, {"group": ser.group_to_json(g)}


# --- verification suite ---------------------------------------------------

def _random_elements(cfg, nu):
    rng = random.Random(int(cfg.payload.get("seed", 0)))
    n = int(cfg.payload.get("trials", 20))
    return [random_group_element(nu.domain, rng) for _ in range(n)]


def _check_axioms(cfg):
    rep = check_axioms(build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax))
    return {"ok": rep.ok, "violations": rep.violations}


def _check_period(cfg):
    nu = build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    W = build_potential(nu)
    ext = extract_amplitudes(nu, period_integrals(W, formal=True))
    bad = [list(c[0]) for c in nu.domain.cells if c[0] and ext.get(c) != amplitude(nu, *c)]
    extract_amplitudes(nu, period_integrals(W))  # shape checks on true cycles
    return {"ok": not bad, "cells": len(ext), "mismatched": bad}


def _check_independence(cfg):
    nu = build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    amps = {c: amplitude(nu, *c) for c in nu.domain.cells if c[0]}
    bad = []
    for i, g in enumerate(_random_elements(cfg, nu)):
        nu2 = act_on_chamber(g, nu)
        if any(amplitude(nu2, *c) != v for c, v in amps.items()):
            bad.append(i)
    return {"ok": not bad, "failed_trials": bad}


def _check_torsor(cfg):
    nu = build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    ring = URing(cfg.markings)
    x, y = automorphism_images(GroupElement(()), cfg.params, ring)
    bad = []
    for i, g in enumerate(_random_elements(cfg, nu)):
        nu2 = act_on_chamber(g, nu)
        h = connect(nu, nu2)
        if act_on_chamber(h, nu) != nu2:
            bad.append({"trial": i, "issue": "round trip"})
        if automorphism_images(g, cfg.params, ring) != (x, y) and nu2 == nu:
            bad.append({"trial": i, "issue": "not faithful"})
    if connect(nu, nu).factors:
        bad.append({"issue": "connect(nu, nu) is not the identity"})
    return {"ok": not bad, "failures": bad}


def _check_preservation(cfg):
    nu = build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    ring = URing(cfg.markings)
    from .wallcross import GeneratorField
    singles = [GroupElement((GeneratorField(k, 1),)) for c in nu.domain.cells if c[0]
               for k in nu.domain.critical(c)]
    bad = []
    for i, g in enumerate(singles + _random_elements(cfg, nu)):
        rep = preservation_check(g, cfg.params, ring)
        if not rep.ok:
            bad.append({"element": i, "failures": rep.failures[:3]})
        W2 = exp_apply(g, build_potential(nu))
        for k1, k2, mono, c in W2.items():
            if cfg.params.weight(k1, k2) != cfg.params.r * cfg.params.s + \
                    ring.mono_weight(cfg.params, mono):
                bad.append({"element": i, "failures": ["inhomogeneous image"]})
                break
    return {"ok": not bad, "elements": len(singles) + int(cfg.payload.get("trials", 20)),
            "failures": bad}


def _check_open_trr(cfg):
    import itertools
    bad, count = [], 0
    labels = [m.label for m in cfg.markings]
    mk = {m.label: m for m in cfg.markings}
    dmax = cfg.dmax if isinstance(cfg.dmax, dict) else {l: cfg.dmax for l in labels}
    for n in range(1, len(labels) + 1):
        for sub in itertools.combinations(labels, n):
            ms = [mk[l] for l in sub]
            for ds in itertools.product(*(range(dmax[l] + 1) for l in sub)):
                d = dict(zip(sub, ds))
                for j1 in sub:
                    tests = [("first", None)] + [("second", j2) for j2 in sub if j2 != j1]
                    for kind, j2 in tests:
                        count += 1
                        res = verify_open_trr(cfg.params, ms, d, j1, j2)
                        if res:
                            bad.append({"labels": list(sub), "d": list(ds), "j1": j1,
                                        "j2": j2, "residual": ser.qstr(res)})
                        if j2 is not None:
                            count += 1
                            res = verify_mirror_recursion(cfg.params, ms, d, j1, j2)
                            if res:
                                bad.append({"labels": list(sub), "d": list(ds), "j1": j1,
                                            "j2": j2, "solved_form_residual": ser.qstr(res)})
    return {"ok": not bad, "instances": count, "failures": bad[:20]}


def _check_closed_trr(cfg):
    inst = closed_trr_instances(cfg.params)
    rep = calibrate_convention(cfg.params, inst)
    chosen = rep[DEFAULT_CONVENTION]
    others = [c for c in SignConvention if c is not DEFAULT_CONVENTION]
    other_fails = all(not rep[c]["ok"] for c in others)
    summary = {c.value: {"checked": v["checked"], "unsupported": v["unsupported"],
                         "nonzero_residuals": len(v["nonzero"]),
                         "inconsistent_choices": len(v["inconsistent"]), "ok": v["ok"]}
               for c, v in rep.items()}
    return {"ok": chosen["ok"] and other_fails, "default": DEFAULT_CONVENTION.value,
            "conventions": summary}


def _check_mirror(cfg):
    nu = build_minimal_chamber(cfg.params, cfg.markings, cfg.dmax)
    rep = verify_mirror(nu, DEFAULT_CONVENTION, seed=int(cfg.payload.get("seed", 0)))
    return rep


_CHECK_FUNCS = {
    "axioms": _check_axioms,
    "period": _check_period,
    "chamber-independence": _check_independence,
    "torsor": _check_torsor,
    "preservation": _check_preservation,
    "open-trr": _check_open_trr,
    "closed-trr": _check_closed_trr,
    "mirror": _check_mirror,
}


def _run_check(name: str, cfg_obj: dict, base_dir: str):
    import json
    cfg = load_config(json.dumps(cfg_obj))
    cfg.base_dir = Path(base_dir)
    try:
        return _CHECK_FUNCS[name](cfg)
    except (ChamberError, WallCrossingError, AssertionError) as exc:
        return {"ok": False, "error": f"{type(exc).__name__}: {exc}"}


def _jobs() -> int:
    raw = os.environ.get(JOBS_ENV, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ConfigError([f"{JOBS_ENV}: must be an integer, got {raw!r}"])


def cmd_verify(cfg):
    checks = cfg.payload.get("checks", list(CHECKS))
    if not isinstance(checks, list) or any(c not in CHECKS for c in checks):
        raise ConfigError([f"checks: must be a list drawn from {list(CHECKS)}"])
    cfg_obj = cfg.as_dict()
    jobs = _jobs()
    if jobs > 1 and len(checks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(checks))) as pool:
            futs = [pool.submit(_run_check, c, cfg_obj, str(cfg.base_dir)) for c in checks]
            results = [f.result() for f in futs]
    else:
        results = [_run_check(c, cfg_obj, str(cfg.base_dir)) for c in checks]
    out = {c: res for c, res in zip(checks, results)}
    ok = all(res["ok"] for res in results)
    return (0 if ok else 1), {"ok": ok, "checks": out}


_DISPATCH = {
    "ext-invariant": cmd_ext_invariant,
    "amplitude": cmd_amplitude,
    "chamber-build": cmd_chamber_build,
    "chamber-check": cmd_chamber_check,
    "potential": cmd_potential,
    "period": cmd_period,
    "wallcross-apply": cmd_wallcross_apply,
    "wallcross-connect": cmd_wallcross_connect,
    "verify": cmd_verify,
}


def run(cfg: JobConfig) -> tuple[int, dict]:
    """Dispatch one job; returns (exit status, JSON-ready result)."""
    if cfg.command not in _DISPATCH:
        return 2, {"error": "invalid input", "details": [f"unknown command {cfg.command!r}"]}
    try:
        return _DISPATCH[cfg.command](cfg)
    except ConfigError as exc:
        return 2, {"error": "invalid input", "details": exc.errors}
    except (DoubleNegative, NoDistinguishedInsertion, ChamberError, ValueError) as exc:
        return 2, {"error": type(exc).__name__, "details": [str(exc)]}


def emit_report(result) -> str:
    return ser.dumps(result)


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="openfjrw", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", required=True, help="job file (JSON) or inline JSON")
    ap.add_argument("--out", help="write the JSON result here instead of stdout")
    args = ap.parse_args(argv)
    try:
        cfg = load_config(args.config)
        if cfg.command is not None and cfg.command != args.command:
            raise ConfigError([f"command: config says {cfg.command!r}, "
                               f"command line says {args.command!r}"])
        cfg.command = args.command
        code, result = run(cfg)
    except ConfigError as exc:
        code, result = 2, {"error": "invalid input", "details": exc.errors}
    text = emit_report(result)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())
