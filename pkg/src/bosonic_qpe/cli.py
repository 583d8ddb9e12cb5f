"""Config-driven experiment runner.

``bosonic-qpe run config.json`` loads a JSON experiment description,
executes it, and writes a result bundle to the output directory:
``manifest.json`` (config echo, package version, effective seed),
``histogram.csv`` (series, theta, weight, label), ``summary.json``
(scalar results), and for experiments that end in a distinguished state
``wigner.csv``.  Histogram rows are written in canonical (series, theta)
order and every stochastic draw comes from a counter-based stream keyed
by (seed, trajectory index), so the CSV bytes do not depend on
``--workers``.

``bosonic-qpe list-experiments`` prints the registry.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from . import rng as rng_mod
from .codes import (
    GkpSpec,
    RotationCodeSpec,
    binomial_primitive,
    binomial_state,
    cat_state,
    coherent_state,
    gkp_state,
)
from .crt import CrtPlan, generate_fock
from .engine import (
    QpeSchedule,
    deduce_rotation_error,
    outcome_distribution,
    prepare_by_projection,
    run_noisy_trajectory,
    run_trajectory,
)
from .errors import (
    BosonicQpeError,
    ConfigError,
    DimensionError,
    IntegratorError,
    KrausCutoffError,
    SelectionFailureError,
    UnreachableTrajectoryError,
)
from .fock import QuantumState, displacement, wigner
from .kernels import HAVE_COMPILED
from .metrics import (
    deduction_infidelity,
    fidelity,
    gkp_detection_fidelity,
    total_infidelity_noisy,
)
from .noise import CHI_DEFAULT, G_DEFAULT, LossChannel, apply_loss, default_hardware_model

OUTPUT_ROOT_ENV = "BOSONIC_QPE_OUTPUT"

EXPERIMENTS = {
    "detect-rotation": "sample adaptive-readout records of a rotation code and tally deduced loss sectors",
    "detect-gkp": "dual-quadrature displacement detection on a grid state with conditional-state fidelities",
    "prepare-code": "project a primitive input onto a codeword by post-selecting the all-zero record",
    "fock-generate": "distil a Fock state from a coherent input by residue post-selection",
    "infidelity-scan": "detection infidelity versus measurement depth, exact and optionally with hardware noise",
    "heisenberg-scan": "estimation error versus total interrogation time across code orders",
}

# Cell noise during the interrogation itself.  Loss on the *input* state
# (an error to be detected, not hardware imperfection) lives under
# code.loss so the two can be combined.
_NOISE_SCHEMA = {
    "oneOf": [
        {
            "type": "object",
            "properties": {"kind": {"const": "off"}},
            "required": ["kind"],
            "additionalProperties": False,
        },
        {
            "type": "object",
            "properties": {
                "kind": {"const": "hardware"},
                "gamma1": {"type": "number", "minimum": 0},
                "gamma2": {"type": "number", "minimum": 0},
                "step": {"type": "number", "exclusiveMinimum": 0},
            },
            "required": ["kind"],
            "additionalProperties": False,
        },
    ]
}

CONFIG_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "properties": {
        "version": {"const": 1},
        "experiment": {"enum": sorted(EXPERIMENTS)},
        "extended": {"type": "boolean"},
        "code": {"type": "object"},
        "schedule": {"type": "object"},
        "noise": _NOISE_SCHEMA,
        "sampling": {
            "type": "object",
            "properties": {
                "samples": {"type": "integer", "minimum": 0},
                "seed": {"type": "integer", "minimum": 0},
                "attempts": {"type": "integer", "minimum": 1},
            },
            "additionalProperties": False,
        },
        "output": {
            "type": "object",
            "properties": {
                "directory": {"type": "string"},
                "wigner": {
                    "type": "object",
                    "properties": {
                        "points": {"type": "integer", "minimum": 3},
                        "span": {"type": "number", "exclusiveMinimum": 0},
                    },
                    "additionalProperties": False,
                },
            },
            "additionalProperties": False,
        },
    },
    "required": ["version", "experiment"],
    "additionalProperties": False,
}


def _need(section: dict, key: str, where: str):
    if key not in section:
        raise ConfigError(f"{where} requires {key!r}")
    return section[key]


def _as_complex(value) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(value[0], value[1])
    raise ConfigError(f"expected a number or [re, im] pair, got {value!r}")


def _input_state(code: dict) -> QuantumState:
    family = _need(code, "family", "code")
    dim = _need(code, "dim", "code")
    if family == "cat":
        spec = RotationCodeSpec(
            "cat", _need(code, "order", "cat code"), code.get("mu", 0), dim,
            alpha=_as_complex(_need(code, "alpha", "cat code")),
        )
        state = cat_state(spec)
    elif family == "binomial":
        spec = RotationCodeSpec(
            "binomial", _need(code, "order", "binomial code"), code.get("mu", 0), dim,
            rungs=_need(code, "rungs", "binomial code"),
        )
        state = binomial_state(spec)
    elif family == "gkp":
        state = gkp_state(GkpSpec(_need(code, "delta", "gkp code"), code.get("mu", 0), dim))
    elif family == "coherent":
        state = coherent_state(_as_complex(_need(code, "alpha", "coherent input")), dim)
    elif family == "fock":
        level = _need(code, "level", "fock input")
        if not 0 <= level < dim:
            raise ConfigError(f"fock level {level} outside dim {dim}")
        vec = np.zeros(dim, dtype=np.complex128)
        vec[level] = 1.0
        state = QuantumState.pure(vec)
    else:
        raise ConfigError(f"unknown code family {family!r}")
    shift = code.get("displacement")
    if shift is not None:
        state = state.apply_unitary(displacement(_as_complex(shift), dim))
    loss = code.get("loss")
    if loss is not None:
        if "gamma" in loss:
            channel = LossChannel(loss["gamma"], kmax=loss.get("kmax"))
        elif "chi" in loss:
            channel = LossChannel.from_chi(loss["chi"], kmax=loss.get("kmax"))
        else:
            raise ConfigError("code.loss needs gamma or chi")
        state = apply_loss(state, channel)
    return state


def _hardware_noise(noise: dict | None) -> dict | None:
    if noise is None or noise.get("kind") != "hardware":
        return None
    return {k: noise[k] for k in ("gamma1", "gamma2", "step") if k in noise}


def _fmt(x: float) -> str:
    # 17 significant digits round-trips any binary64 value.
    return format(float(x), ".17g")


def _write_histogram(path: Path, rows) -> None:
    with open(path, "w", newline="") as fh:
        fh.write("series,theta,weight,label\n")
        for series, theta, weight, label in sorted(rows):
            fh.write(f"{series},{_fmt(theta)},{_fmt(weight)},{label}\n")


def _write_wigner(path: Path, state: QuantumState, points: int, span: float) -> None:
    axis = np.linspace(-span, span, points)
    xs, ps = np.meshgrid(axis, axis, indexing="ij")
    pts = np.column_stack([xs.ravel(), ps.ravel()])
    values = wigner(state, pts)
    with open(path, "w", newline="") as fh:
        fh.write("x,p,w\n")
        for (x, p), w in zip(pts, values):
            fh.write(f"{_fmt(x)},{_fmt(p)},{_fmt(w)}\n")


def _dump_json(path: Path, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# Worker-side sampling.  The pool initializer rebuilds the (state, schedule,
# model) triple from the config once per process; chunk results are keyed by
# trajectory index, so the merged counts cannot depend on scheduling.

_CTX: dict = {}


def _init_rotation_worker(cfg_json: str) -> None:
    cfg = json.loads(cfg_json)
    state = _input_state(cfg["code"])
    sched_cfg = cfg["schedule"]
    schedule = QpeSchedule.rotation(
        _need(sched_cfg, "order", "rotation schedule"),
        _need(sched_cfg, "m", "rotation schedule"),
        sched_cfg.get("chi", CHI_DEFAULT),
    )
    hw = _hardware_noise(cfg.get("noise"))
    model = None
    if hw is not None:
        model = default_hardware_model(
            "dispersive", state.dim, chi=schedule.coupling,
            gamma1=hw.get("gamma1", 0.02), gamma2=hw.get("gamma2", 0.001),
            step=hw.get("step"),
        )
    _CTX.update(state=state, schedule=schedule, model=model)


def _rotation_chunk(task) -> dict:
    lo, hi, seed = task
    state, schedule, model = _CTX["state"], _CTX["schedule"], _CTX["model"]
    scale = 2 ** schedule.m
    counts: dict[int, int] = {}
    for idx in range(lo, hi):
        gen = rng_mod.stream(seed, idx)
        if model is None:
            traj = run_trajectory(state, schedule, gen)
        else:
            traj = run_noisy_trajectory(state, schedule, model, gen)
        k = int(round(traj.theta * scale)) % scale
        counts[k] = counts.get(k, 0) + 1
    return counts


def _parallel_counts(cfg: dict, samples: int, seed: int, workers: int) -> dict:
    cfg_json = json.dumps(cfg)
    chunk = max(1, math.ceil(samples / max(1, workers * 4)))
    tasks = [(lo, min(lo + chunk, samples), seed) for lo in range(0, samples, chunk)]
    merged: dict[int, int] = {}
    if workers <= 1:
        _init_rotation_worker(cfg_json)
        partials = [_rotation_chunk(t) for t in tasks]
    else:
        with ProcessPoolExecutor(
            max_workers=workers, initializer=_init_rotation_worker, initargs=(cfg_json,)
        ) as pool:
            partials = list(pool.map(_rotation_chunk, tasks))
    for part in partials:
        for k, n in part.items():
            merged[k] = merged.get(k, 0) + n
    return merged


def _init_scan_worker(cfg_json: str) -> None:
    cfg = json.loads(cfg_json)
    _CTX.update(cfg=cfg, states={})


def _scan_point(task) -> tuple:
    order, m, samples, seed = task
    cfg = _CTX["cfg"]
    if order not in _CTX["states"]:
        # The input code keeps step with the scanned order.
        code = dict(cfg["code"])
        code["order"] = order
        _CTX["states"][order] = _input_state(code)
    state = _CTX["states"][order]
    chi = cfg.get("schedule", {}).get("chi", CHI_DEFAULT)
    exact = deduction_infidelity(state, order, m, chi)
    noisy = None
    hw = _hardware_noise(cfg.get("noise"))
    if hw is not None and samples > 0:
        model = default_hardware_model(
            "dispersive", state.dim, chi=chi * order / 2.0,
            gamma1=hw.get("gamma1", 0.02), gamma2=hw.get("gamma2", 0.001),
            step=hw.get("step"),
        )
        noisy = total_infidelity_noisy(state, order, m, model, samples, seed + m)
    return order, m, exact.t_total, exact.total, None if noisy is None else noisy.total


def _parallel_scan(cfg: dict, tasks: list, workers: int) -> list:
    cfg_json = json.dumps(cfg)
    if workers <= 1 or len(tasks) == 1:
        _init_scan_worker(cfg_json)
        return [_scan_point(t) for t in tasks]
    with ProcessPoolExecutor(
        max_workers=workers, initializer=_init_scan_worker, initargs=(cfg_json,)
    ) as pool:
        return list(pool.map(_scan_point, tasks))


# ---------------------------------------------------------------------------
# Experiment implementations.  Each returns (rows, summary, wigner_state).


def _run_detect_rotation(cfg: dict, seed: int, workers: int):
    sched_cfg = _need(cfg, "schedule", "detect-rotation")
    order = _need(sched_cfg, "order", "rotation schedule")
    m = _need(sched_cfg, "m", "rotation schedule")
    chi = sched_cfg.get("chi", CHI_DEFAULT)
    state = _input_state(_need(cfg, "code", "detect-rotation"))
    schedule = QpeSchedule.rotation(order, m, chi)
    samples = cfg.get("sampling", {}).get("samples", 0)
    scale = 2**m

    rows = []
    if samples == 0:
        grid, probs = outcome_distribution(state, schedule)
        for theta, p in zip(grid, probs):
            sector, _ = deduce_rotation_error(theta, order)
            rows.append(("theta", float(theta), float(p), str(sector)))
    else:
        counts = _parallel_counts(cfg, samples, seed, workers)
        for k in range(scale):
            theta = k / scale
            sector, _ = deduce_rotation_error(theta, order)
            rows.append(("theta", theta, counts.get(k, 0), str(sector)))

    hw = _hardware_noise(cfg.get("noise"))
    if hw is not None and samples > 0:
        model = default_hardware_model(
            "dispersive", state.dim, chi=schedule.coupling,
            gamma1=hw.get("gamma1", 0.02), gamma2=hw.get("gamma2", 0.001),
            step=hw.get("step"),
        )
        report = total_infidelity_noisy(state, order, m, model, samples, seed)
    else:
        report = deduction_infidelity(state, order, m, chi)
    summary = {
        "experiment": "detect-rotation",
        "order": order,
        "m": m,
        "samples": samples,
        "t_total_us": report.t_total,
        "infidelity": report.total,
        "stderr": report.stderr,
        "sectors": [
            {
                "sector": b.sector,
                "loss_count": b.loss_count,
                "probability": b.probability,
                "infidelity": b.infidelity,
            }
            for b in report.bins
        ],
    }
    return rows, summary, None


def _run_detect_gkp(cfg: dict, seed: int, workers: int):
    del workers  # sampling is delegated to the (seeded, serial) metric
    code_cfg = _need(cfg, "code", "detect-gkp")
    sched_cfg = _need(cfg, "schedule", "detect-gkp")
    m = _need(sched_cfg, "m", "gkp schedule")
    g = sched_cfg.get("g", G_DEFAULT)
    samples = cfg.get("sampling", {}).get("samples", 0)
    if samples < 1:
        raise ConfigError("detect-gkp needs sampling.samples >= 1")
    state = _input_state(code_cfg)
    code_state = None
    if code_cfg.get("displacement") is not None:
        undisplaced = dict(code_cfg)
        del undisplaced["displacement"]
        code_state = _input_state(undisplaced)
    report = gkp_detection_fidelity(
        state, m, samples, seed, g=g,
        code_state=code_state, noise=_hardware_noise(cfg.get("noise")),
    )
    marg_x: dict[float, int] = {}
    marg_p: dict[float, int] = {}
    for out in report.outcomes:
        # Same half-open centering as GkpOutcome.delta_*: [-0.5, 0.5).
        dx = out.theta_x - 1.0 if out.theta_x >= 0.5 else out.theta_x
        dp = out.theta_p - 1.0 if out.theta_p >= 0.5 else out.theta_p
        marg_x[dx] = marg_x.get(dx, 0) + out.count
        marg_p[dp] = marg_p.get(dp, 0) + out.count
    rows = [("delta_x", dx, n, "") for dx, n in marg_x.items()]
    rows += [("delta_p", dp, n, "") for dp, n in marg_p.items()]
    peak_x = max(marg_x, key=lambda k: (marg_x[k], -abs(k)))
    peak_p = max(marg_p, key=lambda k: (marg_p[k], -abs(k)))
    summary = {
        "experiment": "detect-gkp",
        "m": m,
        "samples": samples,
        "average_fidelity": report.average,
        "stderr": report.stderr,
        "distinct_records": len(report.outcomes),
        "delta_x_peak": peak_x,
        "delta_p_peak": peak_p,
    }
    return rows, summary, None


def _run_prepare_code(cfg: dict, seed: int, workers: int):
    del seed, workers  # deterministic post-selection, nothing to draw
    code_cfg = _need(cfg, "code", "prepare-code")
    sched_cfg = _need(cfg, "schedule", "prepare-code")
    family = _need(code_cfg, "family", "prepare-code code")
    order = _need(code_cfg, "order", "prepare-code code")
    mu = code_cfg.get("mu", 0)
    dim = _need(code_cfg, "dim", "prepare-code code")
    m = _need(sched_cfg, "m", "preparation schedule")
    chi = sched_cfg.get("chi", CHI_DEFAULT)
    if family == "cat":
        alpha = _as_complex(_need(code_cfg, "alpha", "cat preparation"))
        primitive = coherent_state(alpha, dim)
        target = cat_state(RotationCodeSpec("cat", order, mu, dim, alpha=alpha))
    elif family == "binomial":
        rungs = _need(code_cfg, "rungs", "binomial preparation")
        primitive = binomial_primitive(order, rungs, dim)
        target = binomial_state(RotationCodeSpec("binomial", order, mu, dim, rungs=rungs))
    else:
        raise ConfigError(f"prepare-code supports cat or binomial, got {family!r}")
    result = prepare_by_projection(primitive, order, mu, m, chi)
    schedule = QpeSchedule.preparation(order, m, chi)
    grid, probs = outcome_distribution(primitive, schedule)
    rows = []
    for theta, p in zip(grid, probs):
        sector, _ = deduce_rotation_error(theta, 2 * order)
        rows.append(("theta", float(theta), float(p), str(sector)))
    summary = {
        "experiment": "prepare-code",
        "family": family,
        "order": order,
        "mu": mu,
        "m": m,
        "acceptance_probability": result.probability,
        "fidelity_to_codeword": fidelity(result.state, target),
        "selected_theta": result.theta,
    }
    return rows, summary, result.state


def _run_fock_generate(cfg: dict, seed: int, workers: int):
    del workers  # attempts are cheap and already index-seeded
    code_cfg = _need(cfg, "code", "fock-generate")
    sched_cfg = _need(cfg, "schedule", "fock-generate")
    target = _need(code_cfg, "target", "fock-generate code")
    plan = CrtPlan(
        tuple(_need(sched_cfg, "moduli", "fock-generate schedule")),
        _need(sched_cfg, "m", "fock-generate schedule"),
        sched_cfg.get("chi", CHI_DEFAULT),
    )
    state = _input_state(code_cfg)
    attempts = cfg.get("sampling", {}).get("attempts", 500)
    result = generate_fock(state, target, plan, rng_seed=seed,
                           max_attempts=attempts, exhaustive=True)
    pops = result.state.populations()
    rows = [
        ("population", float(n), float(p), "target" if n == target else "")
        for n, p in enumerate(pops)
        if p > 1e-16 or n == target
    ]
    summary = {
        "experiment": "fock-generate",
        "target": target,
        "moduli": list(plan.moduli),
        "capacity": plan.capacity,
        "m": plan.m,
        "attempts": result.attempts,
        "acceptance_rate": result.acceptance_rate,
        "target_population": float(pops[target]),
        "residues": list(result.residues),
    }
    return rows, summary, result.state


def _run_infidelity_scan(cfg: dict, seed: int, workers: int):
    sched_cfg = _need(cfg, "schedule", "infidelity-scan")
    order = _need(sched_cfg, "order", "infidelity-scan schedule")
    m_values = _need(sched_cfg, "m_values", "infidelity-scan schedule")
    samples = cfg.get("sampling", {}).get("samples", 0)
    tasks = [(order, m, samples, seed) for m in m_values]
    rows = []
    table = []
    for order_, m, t_total, exact, noisy in _parallel_scan(cfg, tasks, workers):
        rows.append((f"N={order_}-exact", float(m), exact, ""))
        entry = {"m": m, "t_total_us": t_total, "exact": exact}
        if noisy is not None:
            rows.append((f"N={order_}-noisy", float(m), noisy, ""))
            entry["noisy"] = noisy
        table.append(entry)
    best = min(table, key=lambda e: e.get("noisy", e["exact"]))
    summary = {
        "experiment": "infidelity-scan",
        "order": order,
        "m_values": list(m_values),
        "samples": samples,
        "points": table,
        "best_m": best["m"],
    }
    return rows, summary, None


def _run_heisenberg_scan(cfg: dict, seed: int, workers: int):
    sched_cfg = _need(cfg, "schedule", "heisenberg-scan")
    orders = _need(sched_cfg, "orders", "heisenberg-scan schedule")
    m_values = _need(sched_cfg, "m_values", "heisenberg-scan schedule")
    tasks = [(order, m, 0, seed) for order in orders for m in m_values]
    points = _parallel_scan(cfg, tasks, workers)
    rows = []
    slopes = {}
    for order in orders:
        xs, ys = [], []
        for order_, m, t_total, exact, _ in points:
            if order_ != order:
                continue
            rows.append((f"N={order_}", t_total, exact, f"m={m}"))
            if exact > 0:
                xs.append(math.log10(t_total))
                ys.append(math.log10(exact))
        if len(xs) >= 2:
            slope, _ = np.polyfit(xs, ys, 1)
            slopes[f"N={order}"] = float(slope)
    summary = {
        "experiment": "heisenberg-scan",
        "orders": list(orders),
        "m_values": list(m_values),
        "slopes": slopes,
    }
    return rows, summary, None


_RUNNERS = {
    "detect-rotation": _run_detect_rotation,
    "detect-gkp": _run_detect_gkp,
    "prepare-code": _run_prepare_code,
    "fock-generate": _run_fock_generate,
    "infidelity-scan": _run_infidelity_scan,
    "heisenberg-scan": _run_heisenberg_scan,
}


def _derived_schedules(cfg: dict) -> dict[str, QpeSchedule]:
    """The interrogation schedule(s) a config implies, for --dry-run."""
    experiment = cfg["experiment"]
    sched_cfg = cfg.get("schedule", {})
    chi = sched_cfg.get("chi", CHI_DEFAULT)
    if experiment in ("detect-rotation",):
        return {"run": QpeSchedule.rotation(sched_cfg["order"], sched_cfg["m"], chi)}
    if experiment == "prepare-code":
        return {"run": QpeSchedule.preparation(cfg["code"]["order"], sched_cfg["m"], chi)}
    if experiment == "detect-gkp":
        g = sched_cfg.get("g", G_DEFAULT)
        return {axis: QpeSchedule.quadrature(axis, sched_cfg["m"], g) for axis in "qp"}
    if experiment == "fock-generate":
        return {
            f"stage-{n}": QpeSchedule.rotation(n, sched_cfg["m"], chi)
            for n in sched_cfg["moduli"]
        }
    if experiment == "infidelity-scan":
        return {
            f"m={m}": QpeSchedule.rotation(sched_cfg["order"], m, chi)
            for m in sched_cfg["m_values"]
        }
    return {
        f"N={n},m={m}": QpeSchedule.rotation(n, m, chi)
        for n in sched_cfg["orders"]
        for m in sched_cfg["m_values"]
    }


def _load_config(path: str) -> dict:
    try:
        with open(path) as fh:
            cfg = json.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}")
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}")
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "top level"
        raise ConfigError(f"config rejected at {where}: {exc.message}")
    return cfg


def _output_dir(args, cfg: dict, config_path: str) -> Path:
    if args.output_dir is not None:
        return Path(args.output_dir)
    root = Path(os.environ.get(OUTPUT_ROOT_ENV, "results"))
    sub = cfg.get("output", {}).get("directory", Path(config_path).stem)
    return root / sub


def _cmd_run(args) -> int:
    cfg = _load_config(args.config)
    if cfg.get("extended", False) and not args.extended:
        raise ConfigError(
            "this config is marked extended (long-running); pass --extended to run it"
        )
    if args.dry_run:
        derived = {
            name: {"times_us": list(s.times), "t_total_us": s.t_total}
            for name, s in _derived_schedules(cfg).items()
        }
        json.dump(derived, sys.stdout, indent=2, sort_keys=True)
        print()
        return 0
    seed = args.seed if args.seed is not None else cfg.get("sampling", {}).get("seed", 0)
    workers = args.workers if args.workers is not None else (os.cpu_count() or 1)
    rows, summary, final_state = _RUNNERS[cfg["experiment"]](cfg, seed, workers)

    out = _output_dir(args, cfg, args.config)
    out.mkdir(parents=True, exist_ok=True)
    _dump_json(out / "manifest.json", {
        "package": "bosonic-qpe",
        "version": __version__,
        "experiment": cfg["experiment"],
        "seed": seed,
        "kernels": "compiled" if HAVE_COMPILED else "numpy",
        "config": cfg,
    })
    _write_histogram(out / "histogram.csv", rows)
    _dump_json(out / "summary.json", summary)
    if final_state is not None:
        wig = cfg.get("output", {}).get("wigner", {})
        _write_wigner(out / "wigner.csv", final_state,
                      wig.get("points", 61), wig.get("span", 4.0))
    print(out)
    return 0


def _cmd_list(args) -> int:
    if args.json:
        json.dump(
            {"experiments": [{"name": k, "description": v} for k, v in EXPERIMENTS.items()]},
            sys.stdout, indent=2,
        )
        print()
    else:
        width = max(len(k) for k in EXPERIMENTS)
        for name, text in EXPERIMENTS.items():
            print(f"{name:<{width}}  {text}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bosonic-qpe",
        description="Run adaptive phase-estimation experiments on bosonic codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="execute a JSON experiment config")
    run.add_argument("config", help="path to the experiment config")
    run.add_argument("--workers", type=int, default=None,
                     help="parallel sampling processes (default: all cores)")
    run.add_argument("--seed", type=int, default=None,
                     help="override the config's sampling seed")
    run.add_argument("--dry-run", action="store_true",
                     help="print the derived schedule and exit")
    run.add_argument("--extended", action="store_true",
                     help="allow configs marked extended: true")
    run.add_argument("--output-dir", default=None,
                     help=f"bundle directory (default: ${OUTPUT_ROOT_ENV} or ./results)")
    run.set_defaults(func=_cmd_run)
    lst = sub.add_parser("list-experiments", help="print the experiment registry")
    lst.add_argument("--json", action="store_true", help="machine-readable output")
    lst.set_defaults(func=_cmd_list)
    return parser


_EXIT_CODES = (
    (ConfigError, 2),
    ((DimensionError, KrausCutoffError), 3),
    (IntegratorError, 4),
    ((SelectionFailureError, UnreachableTrajectoryError), 5),
)


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BosonicQpeError as exc:
        code = next((c for cls, c in _EXIT_CODES if isinstance(exc, cls)), 1)
        json.dump({"error": type(exc).__name__, "message": str(exc), "exit_code": code},
                  sys.stderr, indent=2)
        print(file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
