"""
Command-line front end.

    cogarch {check,moments,simulate,validate} --config CFG.json [--out DIR] [--seed N]

Exit codes: 0 ok, 2 config error, 3 condition (or validation criterion)
failed, 4 numeric failure.
"""
import argparse
import hashlib
import json
import logging
import os
import platform
import sys

import numpy as np

from . import __version__, conditions, moments, simulate, stats
from .errors import (CogarchError, ConditionFailed, NotApplicable, ValidationError)
from .levy import JumpDist, LevyDriver
from .model import CogarchParams, build_model, mean_corrected

log = logging.getLogger("cogarch")

EXIT_OK, EXIT_CONFIG, EXIT_CONDITION, EXIT_NUMERIC = 0, 2, 3, 4


class ConfigError(ValidationError):
    pass


# -- config ------------------------------------------------------------------

def _field(obj, path, kind=None, default=None, required=True):
    cur = obj
    for key in path.split("."):
        if not isinstance(cur, dict) or key not in cur:
            if required:
                raise ConfigError(f"config: missing field '{path}'")
            return default
        cur = cur[key]
    if kind is not None:
        ok = isinstance(cur, kind) and not isinstance(cur, bool)
        if not ok:
            raise ConfigError(f"config: field '{path}' has wrong type "
                              f"({type(cur).__name__})")
    return cur


_NUM = (int, float)


def parse_config(text):
    """Parse and validate a JSON config; returns the dict with defaults filled."""
    try:
        cfg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: line {exc.lineno}, column {exc.colno}: {exc.msg}") from None
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be an object")
    alpha = _field(cfg, "model.alpha", list)
    beta = _field(cfg, "model.beta", list)
    for name, arr in (("model.alpha", alpha), ("model.beta", beta)):
        for i, v in enumerate(arr):
            if not isinstance(v, _NUM) or isinstance(v, bool):
                raise ConfigError(f"config: field '{name}[{i}]' must be a number")
    _field(cfg, "model.alpha0", _NUM)
    for key, n in (("model.p", len(alpha)), ("model.q", len(beta))):
        v = _field(cfg, key, int, default=n, required=False)
        if v != n:
            raise ConfigError(f"config: field '{key}' = {v} but the list has {n} entries")
    _field(cfg, "driver.rate", _NUM)
    _field(cfg, "driver.jump.kind", str)
    _field(cfg, "driver.jump.param", _NUM)
    _field(cfg, "driver.brownian_var", _NUM, default=0.0, required=False)
    sim = cfg.setdefault("sim", {})
    if not isinstance(sim, dict):
        raise ConfigError("config: field 'sim' must be an object")
    _field(cfg, "sim.seed", int)
    sim.setdefault("horizon", 1000.0)
    sim.setdefault("grid_dt", 1.0)
    sim.setdefault("init", "stationary")
    sim.setdefault("n_paths", 1)
    _field(cfg, "sim.horizon", _NUM)
    _field(cfg, "sim.grid_dt", _NUM)
    _field(cfg, "sim.n_paths", int)
    init = sim["init"]
    if not (init in ("zero", "stationary") or
            (isinstance(init, list) and all(isinstance(v, _NUM) for v in init))):
        raise ConfigError("config: field 'sim.init' must be \"zero\", \"stationary\" or a list")
    an = cfg.setdefault("analysis", {})
    an.setdefault("max_lag", 40)
    an.setdefault("increment_spacing", 1.0)
    an.setdefault("moment_order", 2)
    _field(cfg, "analysis.max_lag", int)
    _field(cfg, "analysis.increment_spacing", _NUM)
    _field(cfg, "analysis.moment_order", int)
    # structural checks of the model objects
    build(cfg)
    return cfg


def build(cfg):
    mo, dr = cfg["model"], cfg["driver"]
    try:
        params = CogarchParams(float(mo["alpha0"]), mo["alpha"], mo["beta"])
        driver = LevyDriver(float(dr["rate"]),
                            JumpDist(dr["jump"]["kind"], float(dr["jump"]["param"])),
                            float(dr.get("brownian_var", 0.0)))
    except ValidationError as exc:
        raise ConfigError(f"config: {exc}") from None
    return params, driver


def config_hash(cfg):
    canon = json.dumps(cfg, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


# -- output helpers ----------------------------------------------------------

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, float)):
        f = float(x)
        return f if np.isfinite(f) else str(f)
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.bool_,)):
        return bool(x)
    if isinstance(x, complex):
        return {"re": x.real, "im": x.imag}
    return x


def _write_report(report, out, name):
    text = json.dumps(_jsonable(report), indent=2, sort_keys=False)
    print(text)
    if out:
        os.makedirs(out, exist_ok=True)
        with open(os.path.join(out, name), "w") as fh:
            fh.write(text + "\n")


def _metadata(cfg, seed):
    import scipy
    import numba
    return {"seed": seed, "config_sha256": config_hash(cfg),
            "versions": {"cogarch": __version__, "python": platform.python_version(),
                         "numpy": np.__version__, "scipy": scipy.__version__,
                         "numba": numba.__version__}}


def _write_csv(path, header, cols):
    arr = np.column_stack(cols) if cols[0].size else np.zeros((0, len(cols)))
    np.savetxt(path, arr, fmt="%.17g", delimiter=",", header=",".join(header), comments="")


# -- commands ----------------------------------------------------------------

def _verdict_dict(m):
    try:
        v = conditions.check_positivity(m)
    except NotApplicable as exc:
        return {"equation": "5.2", "status": "not_applicable", "note": str(exc),
                "satisfied": False}, None
    d = v.to_dict()
    d["equation"] = v.rule
    d["satisfied"] = v.nonnegative
    return d, v


def cmd_check(cfg):
    params, driver = build(cfg)
    m = build_model(params)
    k = cfg["analysis"]["moment_order"]
    checks = [conditions.check_stationarity(m, driver)]
    for order in sorted({1, 2, k}):
        checks.append(conditions.check_moment(m, driver, order))
    items = [dict(c.to_dict(), satisfied=c.satisfied) for c in checks]
    pos, _ = _verdict_dict(m)
    items.append(pos)
    ok = all(i["satisfied"] for i in items)
    return {"command": "check", "passed": ok, "checks": items}, (EXIT_OK if ok else EXIT_CONDITION)


def _prerequisites(m, d):
    for rep in (conditions.check_moment(m, d, 1), conditions.check_moment(m, d, 2)):
        if not rep.satisfied:
            raise ConditionFailed(f"condition ({rep.equation}) does not hold: {rep.description}",
                                  label=rep.equation)
    pos, v = _verdict_dict(m)
    if not pos["satisfied"]:
        raise ConditionFailed(f"positivity not established (rule {pos['equation']}, "
                              f"status {pos['status']})", label=pos["equation"])
    return v


def cmd_moments(cfg):
    params, d = build(cfg)
    m = build_model(params)
    _prerequisites(m, d)
    an = cfg["analysis"]
    rep = moments.moment_report(m, d, r=float(an["increment_spacing"]))
    lags = np.arange(an["max_lag"] + 1, dtype=float)
    matrix = moments.acvf_V(m, d, lags)
    mc = mean_corrected(m, d.mu)
    spectral = moments.acvf_V_spectral(m, d, lags) if mc.distinct else None
    out = {"command": "moments"}
    out.update(rep.to_dict())
    out["acvf_V"] = {"lags": lags, "matrix_route": matrix, "spectral_route": spectral}
    return out, EXIT_OK


def _init_of(cfg):
    init = cfg["sim"]["init"]
    return np.asarray(init, dtype=float) if isinstance(init, list) else init


def cmd_simulate(cfg, out):
    params, d = build(cfg)
    m = build_model(params)
    sim = cfg["sim"]
    seed = sim["seed"]
    n = sim["n_paths"]
    rngs = simulate.spawn_rngs(seed, n)
    out = out or "."
    os.makedirs(out, exist_ok=True)
    files = []
    for i, rng in enumerate(rngs):
        p = simulate.simulate_path(m, d, float(sim["horizon"]), init=_init_of(cfg), rng=rng,
                                   seed=(seed, i))
        g = simulate.sample_grid(p, m, float(sim["grid_dt"]), rng=rng)
        sfx = "" if n == 1 else f"_{i:04d}"
        ev = os.path.join(out, f"events{sfx}.csv")
        gr = os.path.join(out, f"grid{sfx}.csv")
        _write_csv(ev, ["Gamma", "Z", "V", "dG", "G"], [p.times, p.Z, p.v_pre, p.dG, p.G])
        _write_csv(gr, ["t", "V", "G"], [g.t, g.V, g.G])
        files += [ev, gr]
    meta = _metadata(cfg, seed)
    meta["files"] = files
    with open(os.path.join(out, "metadata.json"), "w") as fh:
        json.dump(meta, fh, indent=2)
    return {"command": "simulate", "files": files, "metadata": meta}, EXIT_OK


def _z(est, se, target):
    return (est - target) / se if se > 0 else (0.0 if est == target else float("inf"))


def cmd_validate(cfg):
    """Simulate, estimate and compare to theory; one entry per criterion."""
    params, d = build(cfg)
    m = build_model(params)
    _prerequisites(m, d)
    sim, an = cfg["sim"], cfg["analysis"]
    seed, L = sim["seed"], int(an["max_lag"])
    r = float(an["increment_spacing"])
    dt = float(sim["grid_dt"])
    step = max(1, int(round(r / dt)))
    V, incs, vmin = [], [], np.inf
    for i, rng in enumerate(simulate.spawn_rngs(seed, sim["n_paths"])):
        p = simulate.simulate_path(m, d, float(sim["horizon"]), init=_init_of(cfg), rng=rng)
        g = simulate.sample_grid(p, m, dt, rng=rng)
        V.append(g.V)
        incs.append(g.G[step::step] - g.G[:-step:step])
        if p.n_events:
            vmin = min(vmin, float(p.v_pre.min()))
        vmin = min(vmin, float(g.V.min()))
    EV, varV = moments.stationary_v_moments(m, d)
    _, inc_var = moments.increment_moments(m, d, step * dt)
    Vall, Iall = np.concatenate(V), np.concatenate(incs)
    mV, seV = stats.mean_with_se(Vall)
    vV, sevV = stats.variance_with_se(Vall)
    vI, sevI = stats.variance_with_se(Iall)
    criteria = []

    def add(name, passed, **kw):
        criteria.append(dict(name=name, passed=bool(passed), **kw))

    z = _z(mV, seV, EV)
    add("mean_V", abs(z) <= 3, estimate=mV, se=seV, theory=EV, z=z, tolerance_se=3)
    z = _z(vV, sevV, varV)
    add("var_V", abs(z) <= 4, estimate=vV, se=sevV, theory=varV, z=z, tolerance_se=4)
    z = _z(vI, sevI, inc_var)
    add("increment_var", abs(z) <= 3, estimate=vI, se=sevI, theory=inc_var, z=z,
        tolerance_se=3)
    lagsV = np.arange(1, L + 1) * dt
    cmp_v = stats.compare_acvf(stats.sample_acf(Vall, L), moments.acf_V(m, d, lagsV))
    add("acf_V", cmp_v.passed(0.9), fraction_within=cmp_v.fraction_within, detail=cmp_v.to_dict())
    Li = min(L, len(Iall) // 11)
    cmp_i = stats.compare_acvf(stats.sample_acf(Iall, Li), np.zeros(Li))
    add("increment_whiteness", cmp_i.passed(0.9), fraction_within=cmp_i.fraction_within,
        detail=cmp_i.to_dict())
    floor = m.alpha0 - 1e-10
    add("positivity_floor", vmin >= floor, min_V=vmin, floor=floor)
    ok = all(c["passed"] for c in criteria)
    return ({"command": "validate", "passed": ok, "n_grid": int(Vall.size), "criteria": criteria,
             "metadata": _metadata(cfg, seed)},
            EXIT_OK if ok else EXIT_CONDITION)


# -- entry point -------------------------------------------------------------

def build_parser():
    ap = argparse.ArgumentParser(prog="cogarch", description=__doc__.strip().splitlines()[0])
    ap.add_argument("command", choices=["check", "moments", "simulate", "validate"])
    ap.add_argument("--config", required=True, metavar="PATH")
    ap.add_argument("--out", metavar="DIR", default=None)
    ap.add_argument("--seed", type=int, default=None, help="override sim.seed")
    ap.add_argument("-v", "--verbose", action="store_true")
    return ap


def run(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with open(args.config) as fh:
            text = fh.read()
        if args.seed is not None:
            raw = json.loads(text)
            raw.setdefault("sim", {})["seed"] = args.seed
            text = json.dumps(raw)
        cfg = parse_config(text)
    except (OSError, json.JSONDecodeError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        if args.command == "check":
            report, code = cmd_check(cfg)
        elif args.command == "moments":
            report, code = cmd_moments(cfg)
        elif args.command == "simulate":
            report, code = cmd_simulate(cfg, args.out)
        else:
            report, code = cmd_validate(cfg)
    except ConditionFailed as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONDITION
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (CogarchError, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    _write_report(report, args.out, f"{args.command}_report.json")
    return code


def main(argv=None):
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
