"""Experiment runner: parse a JSON config, run a job, emit CSV + JSON.

Jobs
----
flow            trajectories of the intersection map over the time grid
verify          trajectories + residual reports for the structural identities
oracle-compare  trajectories + agreement reports against a closed-form oracle
sweep           trajectories + diagnostics (group defect, compatibility)

Exit codes: 0 all pass/fail reports pass; 1 config error; 2 solver
degeneracy (left the valid time interval); 3 reports failed tolerance.
"""

from __future__ import annotations

import argparse
import datetime
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import (ConfigError, FlowDivergenceError, FoliationDegeneracyError,
                     HamflowError)
from .geometry import KahlerPoint, ModelDescriptor, chart_distance, j0_matrix
from .flow import IntegratorConfig
from .hamiltonians import PolynomialHamiltonian
from .leaf import NewtonConfig, jt_from_solution, phi_sweep
from .oracles import (QuadraticSpec, Sl2Generator, oracle_mobius,
                      oracle_quadratic, real_reference, sl2_from_hamiltonian)
from . import verify as vf

_JOBS = ("flow", "verify", "oracle-compare", "sweep")

_TOLERANCES = {
    "generator": 1e-5,
    "holomorphy": 1e-5,
    "corollary": 1e-5,
    "pullback": 1e-8,
    "jt_square": 1e-8,
    "inverse_relation": 1e-6,
    "oracle_phi_agreement_quadratic": 1e-7,
    "oracle_jt_agreement_quadratic": 1e-7,
    "oracle_phi_agreement_mobius": 1e-6,
    "oracle_jt_vs_j0_mobius": 1e-6,
    "oracle_phi_agreement_real": 1e-6,
}


@dataclass
class RunConfig:
    model: ModelDescriptor
    hamiltonian: PolynomialHamiltonian
    seeds: list[KahlerPoint]
    times: np.ndarray
    integrator: IntegratorConfig
    newton: NewtonConfig
    job: str | None
    output: str
    oracle_kind: str
    raw: dict = field(repr=False, default_factory=dict)


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def _parse_seeds(raw_seeds, n: int, chart: int) -> list[KahlerPoint]:
    if isinstance(raw_seeds, dict):
        center = np.asarray(raw_seeds.get("center", [0.0] * 2 * n), dtype=float)
        _require(center.size == 2 * n,
                 f"seeds.center: expected {2 * n} floats")
        radius = float(raw_seeds.get("radius", 0.5))
        count = int(raw_seeds.get("count", 0))
        _require(count >= 1, "seeds: at least one required")
        zc = center[0::2] + 1j * center[1::2]
        out = []
        for m in range(count):
            phase = np.exp(2j * np.pi * m / count)
            out.append(KahlerPoint(chart, zc + radius * phase))
        return out
    _require(isinstance(raw_seeds, list), "seeds: list or grid spec required")
    _require(len(raw_seeds) >= 1, "seeds: at least one required")
    out = []
    for i, entry in enumerate(raw_seeds):
        arr = np.asarray(entry, dtype=float).ravel()
        _require(arr.size == 2 * n,
                 f"seeds[{i}]: expected {2 * n} floats (re, im per dimension)")
        out.append(KahlerPoint(chart, arr[0::2] + 1j * arr[1::2]))
    return out


_KNOWN_KEYS = {"model", "hamiltonian", "chart", "seeds", "times", "integrator",
               "newton", "job", "oracle", "output"}


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    _require(isinstance(raw, dict), "config: top-level JSON object required")
    unknown = set(raw) - _KNOWN_KEYS
    _require(not unknown, f"config: unknown keys {sorted(unknown)}")
    for key in ("model", "hamiltonian", "seeds", "times", "output"):
        _require(key in raw, f"config: missing required key {key!r}")

    mraw = raw["model"]
    _require(isinstance(mraw, dict) and "kind" in mraw, "model: {kind, n} required")
    try:
        model = (ModelDescriptor.sphere() if mraw["kind"] == "sphere"
                 else ModelDescriptor.flat(int(mraw.get("n", 1))))
    except ValueError as exc:
        raise ConfigError(f"model: {exc}") from exc

    chart = int(raw.get("chart", 0))
    _require(0 <= chart < model.num_charts, "chart: index out of range")
    ham = PolynomialHamiltonian.from_records(model, raw["hamiltonian"], chart)

    integ_raw = raw.get("integrator", {})
    try:
        integrator = IntegratorConfig(
            method=integ_raw.get("method", "rk45_adaptive"),
            abs_tol=float(integ_raw.get("abs_tol", 1e-10)),
            rel_tol=float(integ_raw.get("rel_tol", 1e-10)),
            step=float(integ_raw.get("step", 1e-3)),
            max_steps=int(integ_raw.get("max_steps", 200_000)),
            horizon=float(integ_raw.get("horizon", 2.0)),
        )
    except ValueError as exc:
        raise ConfigError(f"integrator: {exc}") from exc

    newton_raw = raw.get("newton", {})
    newton = NewtonConfig(tol=float(newton_raw.get("tol", 1e-10)),
                          max_iters=int(newton_raw.get("max_iters", 25)))
    _require(newton.tol > 0 and newton.max_iters >= 1, "newton: invalid settings")

    traw = raw["times"]
    _require(isinstance(traw, dict) and "t_max" in traw, "times: {t_max, steps} required")
    t_max = float(traw["t_max"])
    steps = int(traw.get("steps", 10))
    _require(steps >= 1, "times.steps: counts >= 1 required")
    _require(abs(t_max) <= integrator.horizon,
             "times.t_max exceeds the integrator horizon")
    times = np.linspace(0.0, t_max, steps + 1)

    seeds = _parse_seeds(raw["seeds"], model.n, chart)

    job = raw.get("job")
    if job is not None:
        _require(job in _JOBS, f"job: one of {_JOBS} required")
    oracle_kind = raw.get("oracle", {}).get("kind", "auto") \
        if isinstance(raw.get("oracle", {}), dict) else "auto"
    _require(oracle_kind in ("auto", "quadratic", "mobius", "real"),
             "oracle.kind: auto, quadratic, mobius or real")

    return RunConfig(model=model, hamiltonian=ham, seeds=seeds, times=times,
                     integrator=integrator, newton=newton, job=job,
                     output=str(raw["output"]), oracle_kind=oracle_kind, raw=raw)


def _resolve_oracle(cfg: RunConfig):
    """Pick the closed-form oracle covering this hamiltonian."""
    h = cfg.hamiltonian
    kind = cfg.oracle_kind
    if kind in ("auto", "mobius") and cfg.model.kind == "sphere":
        try:
            return "mobius", sl2_from_hamiltonian(h)
        except ConfigError:
            if kind == "mobius":
                raise
    if kind in ("auto", "quadratic") and cfg.model.kind == "flat":
        try:
            return "quadratic", QuadraticSpec.from_hamiltonian(h)
        except ConfigError:
            if kind == "quadratic":
                raise
    if kind in ("auto", "real") and h.is_real_valued():
        return "real", None
    raise ConfigError("no oracle covers this hamiltonian")


def _residual_times(times: np.ndarray) -> list[float]:
    steps = times.size - 1
    idx = sorted({max(1, steps // 3), max(1, (2 * steps) // 3), steps})
    return [float(times[i]) for i in idx]


def _seed_worker(task) -> dict:
    (seed_id, cfg, job, oracle_kind, oracle_obj) = task
    H = cfg.hamiltonian.extend()
    x = cfg.seeds[seed_id]
    times = cfg.times
    sols, failure = phi_sweep(H, x, times, cfg.integrator, cfg.newton)
    rows = []
    for t_val, sol in zip(times, sols):
        rows.append({
            "seed_id": seed_id, "t": float(t_val), "chart": sol.y.chart,
            "y": [complex(v) for v in sol.y.z],
            "newton_iters": sol.newton_iters, "residual": sol.residual,
            "status": "ok",
        })
    out = {"seed_id": seed_id, "rows": rows, "entries": [],
           "diagnostics": {}, "degenerate": False, "last_good_time": None}
    if failure is not None:
        out["degenerate"] = True
        lgt = getattr(failure, "last_good_time", None)
        if lgt is None:
            lgt = float(times[len(sols) - 1]) if sols else 0.0
        out["last_good_time"] = float(lgt)
        out["failure"] = str(failure)
        t_fail = float(times[len(sols)]) if len(sols) < times.size else float(times[-1])
        rows.append({"seed_id": seed_id, "t": t_fail, "chart": x.chart,
                     "y": [complex(float("nan"), float("nan"))] * cfg.model.n,
                     "newton_iters": -1, "residual": float("nan"),
                     "status": "degenerate"})
    solved = {float(t): s for t, s in zip(times, sols)}
    check_ts = [t for t in _residual_times(times) if t in solved]

    if job == "verify":
        for t in check_ts:
            out["entries"].append(("generator", t, vf.generator_residual(
                H, x, t, cfg.integrator, cfg.newton)))
            out["entries"].append(("holomorphy", t, vf.holomorphy_residual(
                H, x, t, cfg.integrator, cfg.newton)))
            out["entries"].append(("corollary", t, vf.corollary_residual(
                H, x, t, cfg.integrator, cfg.newton)))
            out["entries"].append(("pullback", t, vf.pullback_residual(
                H, x, t, cfg.integrator, cfg.newton)))
            out["entries"].append(("jt_square", t, vf.jt_square_defect(
                H, x, t, cfg.integrator, cfg.newton)))
            out["entries"].append(("inverse_relation", t, vf.inverse_relation_defect(
                H, x, t, cfg.integrator, cfg.newton)))
    elif job == "oracle-compare":
        j0 = j0_matrix(cfg.model.n)
        for t in check_ts:
            sol = solved[t]
            if oracle_kind == "quadratic":
                y_ref, jt_ref = oracle_quadratic(oracle_obj, x, t)
                jt = jt_from_solution(cfg.model, sol)
                out["entries"].append((
                    "oracle_phi_agreement_quadratic", t,
                    chart_distance(cfg.model, y_ref, sol.y)))
                out["entries"].append((
                    "oracle_jt_agreement_quadratic", t,
                    float(np.linalg.norm(jt - jt_ref, 2))))
            elif oracle_kind == "mobius":
                y_ref = oracle_mobius(oracle_obj, x, t)
                jt = jt_from_solution(cfg.model, sol)
                out["entries"].append((
                    "oracle_phi_agreement_mobius", t,
                    chart_distance(cfg.model, y_ref, sol.y)))
                out["entries"].append((
                    "oracle_jt_vs_j0_mobius", t,
                    float(np.linalg.norm(jt - j0, 2))))
            else:
                y_ref = real_reference(cfg.hamiltonian, x, t)
                out["entries"].append((
                    "oracle_phi_agreement_real", t,
                    chart_distance(cfg.model, y_ref, sol.y)))
    elif job == "sweep":
        half = float(times[-1]) / 2.0
        if half != 0.0 and not out["degenerate"]:
            out["diagnostics"]["group_defect"] = vf.group_defect(
                H, x, half, half, cfg.integrator, cfg.newton)
        out["diagnostics"]["compatibility_min_eig"] = [
            (t, vf.compatibility_min_eig(H, x, t, cfg.integrator, cfg.newton))
            for t in check_ts]
    return out


def _fmt(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def write_csv(path: str, rows: list[dict], n: int):
    cols = ["seed_id", "t", "chart"]
    for j in range(n):
        cols += [f"y{j}_re", f"y{j}_im"]
    cols += ["newton_iters", "residual", "status"]
    lines = ["# generated " + datetime.datetime.now(datetime.timezone.utc).isoformat()]
    lines.append(",".join(cols))
    for row in sorted(rows, key=lambda r: (r["seed_id"], r["t"])):
        vals = [str(row["seed_id"]), _fmt(row["t"]), str(row["chart"])]
        for v in row["y"]:
            vals += [_fmt(float(np.real(v))), _fmt(float(np.imag(v)))]
        vals += [str(row["newton_iters"]), _fmt(float(row["residual"])),
                 row["status"]]
        lines.append(",".join(vals))
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def _jsonify(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonify(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonify(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, complex):
        return [float(obj.real), float(obj.imag)]
    return obj


def _versions() -> dict:
    import scipy
    try:
        from importlib.metadata import version
        own = version("hamflow")
    except Exception:
        own = "unknown"
    return {"hamflow": own, "numpy": np.__version__, "scipy": scipy.__version__,
            "python": sys.version.split()[0]}


def execute(cfg: RunConfig, job: str, jobs: int = 1,
            seed_id: int | None = None) -> dict:
    _require(job in _JOBS, f"job: one of {_JOBS} required")
    oracle_kind = None
    oracle_obj = None
    if job == "oracle-compare":
        oracle_kind, oracle_obj = _resolve_oracle(cfg)
    seed_ids = range(len(cfg.seeds))
    if seed_id is not None:
        _require(0 <= seed_id < len(cfg.seeds), "seed-id: index out of range")
        seed_ids = [seed_id]
    tasks = [(sid, cfg, job, oracle_kind, oracle_obj) for sid in seed_ids]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_seed_worker, tasks))
    else:
        results = [_seed_worker(t) for t in tasks]

    rows = [r for res in results for r in res["rows"]]
    reports: dict[str, vf.ResidualReport] = {}
    for res in results:
        for name, t, value in res["entries"]:
            rep = reports.setdefault(
                name, vf.ResidualReport(name=name, tolerance=_TOLERANCES[name]))
            rep.add({"seed_id": res["seed_id"], "t": t}, value)
    degenerate = [res for res in results if res["degenerate"]]
    diagnostics = {
        "per_seed": {str(res["seed_id"]): res["diagnostics"]
                     for res in results if res["diagnostics"]},
        "degenerate_seeds": {str(res["seed_id"]): {
            "last_good_time": res["last_good_time"],
            "message": res.get("failure", "")} for res in degenerate},
        "last_good_time": (min(res["last_good_time"] for res in degenerate)
                           if degenerate else None),
    }
    report_list = [reports[k] for k in sorted(reports)]
    all_passed = all(rep.passed for rep in report_list)
    status = "degenerate" if degenerate else "ok"
    return {"job": job, "rows": rows, "reports": report_list,
            "diagnostics": diagnostics, "status": status,
            "all_passed": all_passed}


def write_outputs(cfg: RunConfig, result: dict):
    prefix = cfg.output
    parent = os.path.dirname(prefix)
    if parent:
        os.makedirs(parent, exist_ok=True)
    write_csv(prefix + ".trajectories.csv", result["rows"], cfg.model.n)
    report = {
        "job": result["job"],
        "status": result["status"],
        "all_passed": result["all_passed"],
        "config": cfg.raw,
        "versions": _versions(),
        "reports": [rep.to_dict() for rep in result["reports"]],
        "diagnostics": result["diagnostics"],
        "trajectories": [
            {"seed_id": r["seed_id"], "t": r["t"], "chart": r["chart"],
             "y": r["y"], "newton_iters": r["newton_iters"],
             "residual": r["residual"], "status": r["status"]}
            for r in sorted(result["rows"], key=lambda r: (r["seed_id"], r["t"]))],
    }
    with open(prefix + ".report.json", "w", encoding="utf-8") as fh:
        json.dump(_jsonify(report), fh, indent=1)
        fh.write("\n")


def run_cli(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="hamflow",
        description="complexified Hamilton flow experiments")
    parser.add_argument("job", choices=_JOBS)
    parser.add_argument("--config", required=True)
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1)
    parser.add_argument("--seed-id", type=int, default=None)
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        result = execute(cfg, args.job, jobs=max(1, args.jobs),
                         seed_id=args.seed_id)
        write_outputs(cfg, result)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 1
    except (FoliationDegeneracyError, FlowDivergenceError) as exc:
        # degeneracy outside a sweep (nothing partial to flush)
        print(f"degeneracy: {exc}", file=sys.stderr)
        return 2
    except HamflowError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if result["status"] == "degenerate":
        print("degeneracy: left the valid time interval; partial results "
              "flushed", file=sys.stderr)
        return 2
    if not result["all_passed"]:
        print("verification reports failed tolerance", file=sys.stderr)
        return 3
    return 0


def main():
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
