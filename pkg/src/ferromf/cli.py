"""Command-line experiment driver.

Every subcommand resolves a configuration from an optional JSON file
(``--config``) overlaid with command-line flags, runs one task and writes a
self-describing CSV or JSON artifact. The exit status is 0 exactly when
every inequality the task asserts held, 1 when one failed and 2 for an
invalid configuration.

Examples
--------
    ferromf verify-bound --model curie_weiss --n 16 --beta 0.8 --h 0.5
    ferromf sweep --model curie_weiss --beta 1.5 --h 0.3 --grid n=8,12,16,20
    ferromf lee-yang --model random --n 10 --seed 3 --format csv
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import itertools
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .core import NormTriple, SpinSystem, dump_system, load_system, mf_residual, theorem_bound
from .dynamics import characteristic_curve, verify_final_bound, verify_lemma1, verify_lemma2
from .exact import ENUMERATION_CAP, coupling_identity_check, curie_weiss_exact, gibbs_exact, lee_yang_zeros, polynomial
from .models import (
    CurieWeissFamily,
    DilutedSpec,
    GeneratedFamily,
    KacSpec,
    curie_weiss,
    diluted,
    kac,
    low_temp_condition,
    positive_state_experiment,
    random_ferromagnet,
    rank_one,
)
from .sampler import glauber_estimate

MODELS = ("curie_weiss", "kac", "diluted", "rank_one", "random", "file")
TASKS = (
    "gen",
    "verify-bound",
    "sweep",
    "lee-yang",
    "characteristic",
    "lemma1",
    "lemma2",
    "corederid",
    "low-temp",
    "positive-state",
    "sample",
)
GRID_AXES = ("n", "beta", "h", "p", "lam")
# accepted in config files as another name for a subcommand
TASK_ALIASES = {"residual-sweep": "sweep"}

MODEL_KEYS = ("name", "n", "beta", "h", "p", "lam", "d", "L", "density", "w", "path", "j_max", "model_seed")
PARAM_DEFAULTS = {
    "steps": 200,
    "site": 0,
    "trials": 100,
    "alpha": 1.5,
    "delta": 0.25,
    "sizes": [100, 1000, 10000],
    "sweeps": 20000,
    "burn_in": 2000,
    "grid": {},
    "tol": 1e-8,
    "coo": False,
}


class ConfigError(ValueError):
    pass


class _FloatEncoder(json.JSONEncoder):
    def default(self, o):
        if isinstance(o, np.integer):
            return int(o)
        if isinstance(o, np.floating):
            return float(o)
        if isinstance(o, np.ndarray):
            return o.tolist()
        return super().default(o)


@dataclass
class ExperimentConfig:
    task: str
    model: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    out: str = None
    format: str = None
    seed: int = 0
    threads: int = None

    def to_json(self) -> str:
        return json.dumps(dataclasses.asdict(self), sort_keys=True, cls=_FloatEncoder)

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        return cls(**json.loads(text))

    def validate(self):
        self.task = TASK_ALIASES.get(self.task, self.task)
        if self.task not in TASKS:
            raise ConfigError(f"task: unknown task {self.task!r}")
        name = self.model.get("name", "curie_weiss")
        if name not in MODELS:
            raise ConfigError(f"model.name: unknown model {name!r}; choose from {', '.join(MODELS)}")
        unknown = set(self.model) - set(MODEL_KEYS)
        if unknown:
            raise ConfigError(f"model: unknown keys {sorted(unknown)}")
        unknown = set(self.params) - set(PARAM_DEFAULTS)
        if unknown:
            raise ConfigError(f"params: unknown keys {sorted(unknown)}")
        if self.format not in (None, "csv", "json"):
            raise ConfigError(f"format: must be csv or json, got {self.format!r}")
        grid = self.params.get("grid", {})
        for axis, values in grid.items():
            if axis not in GRID_AXES:
                raise ConfigError(f"params.grid: unknown axis {axis!r}")
            if not values:
                raise ConfigError(f"params.grid.{axis}: empty axis")
        if self.task == "sweep" and not grid:
            raise ConfigError("params.grid: a sweep needs at least one non-empty axis")

    def param(self, key):
        return self.params.get(key, PARAM_DEFAULTS[key])


# -- model construction --------------------------------------------------------


def _get(model: dict, key: str, default=None, required=True):
    if key in model and model[key] is not None:
        return model[key]
    if default is not None or not required:
        return default
    raise ConfigError(f"model.{key}: required for model {model.get('name')!r}")


def build_system(model: dict, seed: int = 0) -> SpinSystem:
    name = model.get("name", "curie_weiss")
    if name == "curie_weiss":
        return curie_weiss(int(_get(model, "n")), float(_get(model, "beta")), float(_get(model, "h")))
    if name == "kac":
        spec = KacSpec(
            int(_get(model, "d", 1)),
            int(_get(model, "L")),
            float(_get(model, "lam")),
            float(_get(model, "beta")),
            float(_get(model, "h")),
            _get(model, "density", "gaussian"),
        )
        return kac(spec)
    if name == "diluted":
        spec = DilutedSpec(
            int(_get(model, "n")),
            float(_get(model, "beta")),
            float(_get(model, "p")),
            float(_get(model, "h")),
            int(_get(model, "model_seed", seed)),
        )
        return diluted(spec)
    if name == "rank_one":
        return rank_one(np.asarray(_get(model, "w"), dtype=float), float(_get(model, "h")))
    if name == "random":
        rng = np.random.default_rng(int(_get(model, "model_seed", seed)))
        j_max = model.get("j_max")
        system = random_ferromagnet(int(_get(model, "n")), rng, None if j_max is None else float(j_max))
        if model.get("h") is not None:
            system = system.with_fields(np.full(system.n, float(model["h"])))
        return system
    if name == "file":
        return load_system(str(_get(model, "path")))
    raise ConfigError(f"model.name: unknown model {name!r}")


def evaluate_residual(model: dict, seed: int = 0, sweeps: int = 20000, burn_in: int = 2000) -> dict:
    """Residual, bound and ratio for one model, picking the cheapest exact method."""
    name = model.get("name", "curie_weiss")
    if name == "curie_weiss" and int(_get(model, "n")) > ENUMERATION_CAP:
        n, beta, h = int(model["n"]), float(model["beta"]), float(model["h"])
        m, _ = curie_weiss_exact(n, beta, h)
        residual = abs(m - math.tanh(h + beta * (n - 1) / n * m))
        rhs = theorem_bound(NormTriple(h, beta * (n - 1) / n, beta / n)) if h > 0 else None
        ratio = residual / rhs if rhs else None
        return {"method": "sector", "residual": residual, "theorem_rhs": rhs, "ratio": ratio, "std_err": None}
    system = build_system(model, seed)
    if system.n <= ENUMERATION_CAP:
        report = mf_residual(system, gibbs_exact(system).m)
        method, err = "exact", None
    else:
        est = glauber_estimate(system, sweeps, burn_in, seed)
        report = mf_residual(system, est.m_cond)
        method, err = "sampler", float(est.cond_std_err.max())
    return {
        "method": method,
        "residual": report.residual_inf,
        "theorem_rhs": report.theorem_rhs,
        "ratio": report.ratio,
        "std_err": err,
    }


# -- tasks ---------------------------------------------------------------------
# each returns (payload, rows or None, ok)


def task_gen(cfg):
    system = build_system(cfg.model, cfg.seed)
    return dump_system(system, "coo" if cfg.param("coo") else "dense"), None, True


def task_verify_bound(cfg):
    res = evaluate_residual(cfg.model, cfg.seed, cfg.param("sweeps"), cfg.param("burn_in"))
    ok = res["ratio"] is not None and res["ratio"] <= 1.0
    if not ok:
        _violation(f"residual {res['residual']!r} exceeds bound {res['theorem_rhs']!r}")
    return res, None, ok


def _sweep_point(cfg, point):
    model = dict(cfg.model)
    model.update(point)
    row = dict(point)
    try:
        row.update(evaluate_residual(model, cfg.seed, cfg.param("sweeps"), cfg.param("burn_in")))
        row["error"] = "" if row["theorem_rhs"] is not None else "DomainError: minimal field must be positive"
    except Exception as exc:  # recorded per point, the sweep goes on
        row.update({"method": "", "residual": None, "theorem_rhs": None, "ratio": None, "std_err": None})
        row["error"] = f"{type(exc).__name__}: {exc}"
    return row


def task_sweep(cfg):
    grid = cfg.param("grid")
    axes = list(grid)
    points = [dict(zip(axes, combo)) for combo in itertools.product(*(grid[a] for a in axes))]
    with ThreadPoolExecutor(max_workers=cfg.threads or 1) as pool:
        rows = list(pool.map(lambda p: _sweep_point(cfg, p), points))
    ok = all(r["error"] == "" and r["ratio"] is not None and r["ratio"] <= 1.0 for r in rows)
    return {"points": len(rows)}, rows, ok


def task_lee_yang(cfg):
    ly = lee_yang_zeros(build_system(cfg.model, cfg.seed))
    tol = cfg.param("tol")
    ok = ly.max_modulus_deviation < tol
    if not ok:
        _violation(f"max modulus deviation {ly.max_modulus_deviation!r} >= {tol!r}")
    rows = [{"re": z.real, "im": z.imag, "modulus": abs(z)} for z in ly.zeros]
    return {"max_modulus_deviation": ly.max_modulus_deviation, "zeros": rows}, rows, ok


def task_characteristic(cfg):
    system = build_system(cfg.model, cfg.seed)
    tr = characteristic_curve(system, cfg.param("steps"), cfg.param("site"))
    rows = [
        {"t": t, "w1": w, "drift": d, "m1": m}
        for t, w, d, m in zip(tr.times, tr.w1_values, tr.drift_values, tr.m1_values)
    ]
    col = system.couplings[:, cfg.param("site")]
    ok = bool(np.all(tr.w1_values >= system.fields.min()) and tr.w1_values[-1] <= tr.w1_values[0] + col.sum() + 1e-12)
    return {"w1_final": tr.w1_values[-1], "trace": rows}, rows, ok


def task_lemma1(cfg):
    system = build_system(cfg.model, cfg.seed)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for trial in range(cfg.param("trials")):
        s = rng.uniform(0, 1, system.n)
        k = int(rng.integers(system.n))
        t = float(rng.uniform())
        c = verify_lemma1(system, s, k, t, cfg.param("site"))
        rows.append({"trial": trial, "k": k, "t": t, **c._asdict(), "holds": c.holds()})
    ok = all(r["holds"] for r in rows)
    if not ok:
        _violation(f"{sum(not r['holds'] for r in rows)} correlation-bound violations")
    return {"violations": sum(not r["holds"] for r in rows), "trials": len(rows)}, rows, ok


def task_lemma2(cfg):
    system = build_system(cfg.model, cfg.seed)
    site = cfg.param("site")
    steps = cfg.param("steps")
    trace = characteristic_curve(system, steps, site)
    l2 = verify_lemma2(system, system.couplings[:, site], steps, site, trace)
    fb = verify_final_bound(system, steps, site, trace)
    ok = l2.holds() and fb.holds()
    if not ok:
        _violation(f"curve drift {l2} end-to-end {fb}")
    payload = {"lemma2": l2._asdict(), "final_bound": fb._asdict()}
    return payload, [{**l2._asdict(), **{f"final_{k}": v for k, v in fb._asdict().items()}}], ok


def task_corederid(cfg):
    system = build_system(cfg.model, cfg.seed)
    if system.n < 2:
        raise ConfigError("model.n: the coupling identity needs at least two spins")
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for trial in range(cfg.param("trials")):
        f = _random_polynomial(rng, system.n)
        i, j = (int(x) for x in rng.choice(system.n, 2, replace=False))
        lhs, rhs = coupling_identity_check(system, f, i, j)
        rows.append({"trial": trial, "i": i, "j": j, "lhs": lhs, "rhs": rhs, "diff": abs(lhs - rhs)})
    worst = max(r["diff"] for r in rows)
    ok = worst <= 1e-10
    if not ok:
        _violation(f"identity defect {worst!r} > 1e-10")
    return {"max_defect": worst, "trials": len(rows)}, rows, ok


def _random_polynomial(rng, n, terms=4):
    out = [(rng.normal(), [])]
    for _ in range(terms):
        deg = int(rng.integers(1, min(n, 3) + 1))
        out.append((rng.normal(), sorted(rng.choice(n, deg, replace=False).tolist())))
    return polynomial(out)


def task_low_temp(cfg):
    res = low_temp_condition(build_system(cfg.model, cfg.seed), cfg.param("alpha"))
    payload = {"holds": res.holds, "lower": res.lower, "upper": res.upper, "components": len(res.components)}
    return payload, [payload], res.holds is not None


def task_positive_state(cfg):
    name = cfg.model.get("name", "curie_weiss")
    beta = float(_get(cfg.model, "beta"))
    if name == "curie_weiss":
        family = CurieWeissFamily(beta)
    else:
        base = dict(cfg.model)

        def make(n, h):
            return build_system({**base, "n": n, "h": h}, cfg.seed)

        family = GeneratedFamily(make, cfg.param("sweeps"), cfg.param("burn_in"), cfg.seed)
    rows = positive_state_experiment(family, cfg.param("sizes"), cfg.param("delta"))
    return {"rows": rows}, rows, True


def task_sample(cfg):
    system = build_system(cfg.model, cfg.seed)
    est = glauber_estimate(system, cfg.param("sweeps"), cfg.param("burn_in"), cfg.seed)
    rows = [{"site": i, "m_hat": m, "std_err": e} for i, (m, e) in enumerate(zip(est.m_hat, est.std_err))]
    return {"m_hat": est.m_hat, "std_err": est.std_err, "sweeps": est.sweeps, "burn_in": est.burn_in}, rows, True


TASK_FUNCS = {
    "gen": task_gen,
    "verify-bound": task_verify_bound,
    "sweep": task_sweep,
    "lee-yang": task_lee_yang,
    "characteristic": task_characteristic,
    "lemma1": task_lemma1,
    "lemma2": task_lemma2,
    "corederid": task_corederid,
    "low-temp": task_low_temp,
    "positive-state": task_positive_state,
    "sample": task_sample,
}


# -- output --------------------------------------------------------------------


def _violation(msg):
    print(f"violation: {msg}", file=sys.stderr)


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def _meta(cfg):
    text = cfg.to_json()
    return {
        "tool": f"ferromf {__version__}",
        "config_sha256": hashlib.sha256(text.encode()).hexdigest(),
        "seed": cfg.seed,
        "config": json.loads(text),
    }


def render(cfg, payload, rows, fmt) -> str:
    meta = _meta(cfg)
    created = datetime.now(timezone.utc).isoformat(timespec="seconds")
    if fmt == "json":
        return json.dumps({"meta": {**meta, "created": created}, "result": payload}, indent=2, cls=_FloatEncoder) + "\n"
    lines = [
        f"# tool: {meta['tool']}",
        f"# config_sha256: {meta['config_sha256']}",
        f"# seed: {meta['seed']}",
        f"# config: {json.dumps(meta['config'], sort_keys=True, cls=_FloatEncoder)}",
        f"# created: {created}",
    ]
    if rows:
        cols = list(rows[0])
        lines.append(",".join(cols))
        lines.extend(",".join(_fmt(r.get(c)) for c in cols) for r in rows)
    return "\n".join(lines) + "\n"


def run(cfg: ExperimentConfig) -> int:
    """Execute ``cfg`` and write its artifact; returns the exit status."""
    try:
        cfg.validate()
        payload, rows, ok = TASK_FUNCS[cfg.task](cfg)
    except (ConfigError, KeyError, TypeError, ValueError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    fmt = cfg.format or ("json" if rows is None or cfg.task == "verify-bound" else "csv")
    text = render(cfg, payload, rows, fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if ok else 1


# -- argument parsing ----------------------------------------------------------


def _floats(text):
    return [float(x) for x in text.split(",") if x]


def _grid_axis(text):
    axis, _, values = text.partition("=")
    if axis not in GRID_AXES:
        raise argparse.ArgumentTypeError(f"unknown grid axis {axis!r}")
    vals = _floats(values)
    if axis == "n":
        vals = [int(v) for v in vals]
    return axis, vals


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file; flags override its values")
    common.add_argument("--out", help="output path (default stdout)")
    common.add_argument("--format", choices=("csv", "json"))
    common.add_argument("--seed", type=int)
    common.add_argument("--threads", type=int)
    m = common.add_argument_group("model")
    m.add_argument("--model", dest="m_name", choices=MODELS)
    m.add_argument("--n", dest="m_n", type=int)
    m.add_argument("--beta", dest="m_beta", type=float)
    m.add_argument("--h", dest="m_h", type=float)
    m.add_argument("--p", dest="m_p", type=float)
    m.add_argument("--lam", dest="m_lam", type=float)
    m.add_argument("--d", dest="m_d", type=int)
    m.add_argument("--L", dest="m_L", type=int)
    m.add_argument("--density", dest="m_density", choices=("gaussian", "uniform_ball"))
    m.add_argument("--w", dest="m_w", type=_floats, help="comma-separated rank-one vector")
    m.add_argument("--system", dest="m_path", help="system JSON file for --model file")
    m.add_argument("--j-max", dest="m_j_max", type=float)
    m.add_argument("--model-seed", dest="m_model_seed", type=int)
    t = common.add_argument_group("task")
    t.add_argument("--steps", dest="p_steps", type=int)
    t.add_argument("--site", dest="p_site", type=int)
    t.add_argument("--trials", dest="p_trials", type=int)
    t.add_argument("--alpha", dest="p_alpha", type=float)
    t.add_argument("--delta", dest="p_delta", type=float)
    t.add_argument("--sizes", dest="p_sizes", type=lambda s: [int(x) for x in s.split(",")])
    t.add_argument("--sweeps", dest="p_sweeps", type=int)
    t.add_argument("--burn-in", dest="p_burn_in", type=int)
    t.add_argument("--tol", dest="p_tol", type=float)
    t.add_argument("--coo", dest="p_coo", action="store_true", default=None)
    t.add_argument("--grid", dest="p_grid", type=_grid_axis, action="append", help="axis=v1,v2,... (repeatable)")

    parser = argparse.ArgumentParser(prog="ferromf", description=__doc__.split("\n\n")[0])
    parser.add_argument("--version", action="version", version=f"ferromf {__version__}")
    sub = parser.add_subparsers(dest="task", required=True)
    for task in TASKS:
        sub.add_parser(task, parents=[common])
    return parser


def resolve_config(args) -> ExperimentConfig:
    base = {}
    if args.config:
        with open(args.config) as fh:
            try:
                base = json.load(fh)
            except json.JSONDecodeError as exc:
                raise ConfigError(f"{args.config}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    model = dict(base.get("model", {}))
    params = dict(base.get("params", {}))
    for key, val in vars(args).items():
        if val is None:
            continue
        if key.startswith("m_"):
            model[key[2:]] = val
        elif key.startswith("p_"):
            params[key[2:]] = dict(val) if key == "p_grid" else val
    threads = args.threads if args.threads is not None else base.get("threads")
    if threads is None and os.environ.get("FERROMF_THREADS"):
        threads = int(os.environ["FERROMF_THREADS"])
    return ExperimentConfig(
        task=args.task,
        model=model,
        params=params,
        out=args.out if args.out is not None else base.get("out"),
        format=args.format if args.format is not None else base.get("format"),
        seed=args.seed if args.seed is not None else base.get("seed", 0),
        threads=threads,
    )


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve_config(args)
    except (ConfigError, OSError) as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return 2
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
