"""Command-line front end: ``tpam recall|capacity|spiking|index|sequence``.

Each subcommand starts from built-in defaults, applies an optional JSON
config file and then any explicit flags (flags win). The resolved config
and its hash are written into every text output.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import sys
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import capacity as cap
from . import core, formats, indexing, sequence, spiking
from .rng import stream

DEFAULTS = {
    "recall": {
        "N": 400, "M": 100, "p_hot": 0.1, "theta": 0.5, "threshold": "dynamic",
        "kind": "tpam", "bins": 0, "cue": "partial:0.5", "target": 0,
        "schedule": "auto", "max_iters": 20, "patterns": None, "seed": 0,
    },
    "capacity": {
        "kind": "tpam", "N": 200, "p_hot": [0.05], "theta": [0.5, 0.6, 0.7, 0.8, 0.9],
        "bins": [2], "Ms": [10, 20, 40, 60, 80, 100, 130, 160, 200, 250, 300],
        "trials": 10, "threshold": "dynamic",
        "noise": {"drop_fraction": 0.05, "swap_fraction": 0.05, "phase_jitter_sd": 0.1},
        "schedule": "parallel", "max_iters": 500, "floor": 0.9, "seed": 0,
    },
    "spiking": {
        "mode": "single", "N": 500, "K": 25, "M": 50, "Ms": [50, 100, 200, 250, 300, 400],
        "T": 0.2, "theta": 0.6, "duration": 5.0, "decode_cycles": 5, "dt": None, "N_inh": None,
        "gains": asdict(spiking.Gains()), "trials": 4, "record": 5, "seed": 0,
    },
    "index": {
        "image": None, "patch_size": 12, "M": 20, "noise": [0.0, 0.1, 0.3, 0.5], "trials": 3,
        "N": 500, "p_hot": 0.1, "theta": 0.5,
        "models": [f"{m}-{i}" for m in indexing.MODELS for i in indexing.INDEXING],
        "mosaic_noise": 0.3, "seed": 0,
    },
    "sequence": {
        "selector": "largest", "random_instances": 20, "N": 10, "L": 4, "M": 2,
        "steps": 50, "jitter": 0.3, "seed": 0,
    },
}

LIST_KEYS = {"p_hot", "theta", "bins", "Ms", "noise", "models"}


class UsageError(Exception):
    pass


def resolve_config(command: str, file_cfg: dict | None, flags: dict) -> dict:
    """Defaults, then the config file, then explicit flags."""
    cfg = copy.deepcopy(DEFAULTS[command])
    for source in (file_cfg or {}), flags:
        for k, v in source.items():
            if k not in cfg:
                raise UsageError(f"unknown config key {k!r} for {command}")
            if k == "gains" and isinstance(v, dict):
                unknown = set(v) - set(cfg["gains"])
                if unknown:
                    raise UsageError(f"unknown config key 'gains.{sorted(unknown)[0]}'")
                cfg["gains"].update(v)
            elif k == "noise" and command == "capacity" and isinstance(v, dict):
                cfg["noise"].update(v)
            elif k in LIST_KEYS and isinstance(cfg[k], list) and not isinstance(v, list):
                cfg[k] = [v]
            else:
                cfg[k] = v
    return cfg


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True).encode()).hexdigest()[:16]


def header(command: str, cfg: dict) -> str:
    return f"tpam {command} config_hash={config_hash(cfg)}\nconfig {json.dumps(cfg, sort_keys=True)}"


def _jsonable(x):
    if isinstance(x, (complex, np.complexfloating)):
        return [float(x.real), float(x.imag)]
    if isinstance(x, np.ndarray):
        # complex arrays become nested [re, im] pairs
        return np.stack([x.real, x.imag], axis=-1).tolist() if np.iscomplexobj(x) else x.tolist()
    if isinstance(x, np.generic):
        return x.item()
    raise TypeError(f"cannot serialize {type(x).__name__}")


class Output:
    """Serialized writer for one run directory."""

    def __init__(self, out: Path, command: str, cfg: dict):
        self.dir = Path(out)
        self.dir.mkdir(parents=True, exist_ok=True)
        self.command, self.cfg = command, cfg
        self.note = header(command, cfg)
        self.written: list[str] = []

    def path(self, name: str) -> Path:
        self.written.append(name)
        return self.dir / name

    def text(self, name: str, body: str) -> None:
        comment = "".join(f"# {ln}\n" for ln in self.note.splitlines())
        self.path(name).write_text(comment + body)

    def json(self, name: str, payload: dict) -> None:
        doc = {"command": self.command, "config_hash": config_hash(self.cfg), "config": self.cfg, **payload}
        self.path(name).write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")


def _parse_cue(spec: str) -> tuple[str, float]:
    name, _, arg = spec.partition(":")
    if name not in ("partial", "superposition", "noisy", "clean"):
        raise UsageError(f"unknown cue {spec!r}; use partial:F, superposition:K, noisy:SD or clean")
    return name, float(arg) if arg else {"partial": 0.5, "superposition": 3, "noisy": 0.3, "clean": 0}[name]


def cmd_recall(cfg: dict, out: Output, threads: int = 1) -> dict:
    seed = cfg["seed"]
    if cfg["patterns"]:
        p = Path(cfg["patterns"])
        if not p.exists():
            raise UsageError(f"patterns: no such file {str(p)!r}")
        P = formats.load_complex(p)
        P = P[None, :] if P.ndim == 1 else P
    else:
        kind = cfg["kind"]
        if kind == "csign":
            spec = cap.EnsembleSpec(cfg["N"], cfg["M"], 1.0, seed, "discrete", cfg["bins"])
        elif kind == "ternary":
            spec = cap.EnsembleSpec(cfg["N"], cfg["M"], cfg["p_hot"], seed, "ternary")
        elif kind == "phasor_dense":
            spec = cap.EnsembleSpec(cfg["N"], cfg["M"], 1.0, seed)
        else:
            spec = cap.EnsembleSpec(cfg["N"], cfg["M"], cfg["p_hot"], seed)
        P = cap.gen_patterns(spec, stream(seed, "pattern"))
    M, N = P.shape
    target = int(cfg["target"])
    if not 0 <= target < M:
        raise UsageError(f"target: index {target} outside 0..{M - 1}")
    W = core.learn_conjugate_outer(P, n=N)
    kind = core.TransferKind.csign(cfg["bins"]) if cfg["kind"] == "csign" else core.TransferKind(cfg["kind"])
    if cfg["threshold"] == "dynamic":
        policy = core.ThresholdPolicy.dynamic(cfg["theta"])
    else:
        K = max(1, int(np.count_nonzero(P[target])))
        policy = core.ThresholdPolicy.constant(cfg["theta"] * K)

    cue_name, arg = _parse_cue(cfg["cue"])
    noise_rng = stream(seed, "noise")
    if cue_name == "partial":
        cue = cap.perturb_cue(P[target], cap.CueNoise(arg, 0.0, 0.0), noise_rng)
    elif cue_name == "noisy":
        cue = cap.perturb_cue(P[target], cap.CueNoise(0.0, 0.0, arg), noise_rng)
    elif cue_name == "superposition":
        k = int(arg)
        if not 1 <= k <= M:
            raise UsageError(f"cue: superposition of {k} patterns needs 1 <= k <= M={M}")
        cue = P[[(target + j) % M for j in range(k)]].sum(axis=0)
    else:
        cue = P[target].copy()
    schedule = cfg["schedule"]
    if schedule == "auto":
        schedule = "sequential_random" if cue_name == "superposition" else "parallel"
    if schedule not in core.SCHEDULES:
        raise UsageError(f"schedule: unknown value {schedule!r}")

    trace = core.recall(W, cue, policy, kind, schedule, int(cfg["max_iters"]), stream(seed, "trial"))
    lines = ["iteration,energy,active," + ",".join(f"overlap_{m}" for m in range(M))]
    for it, (z, e) in enumerate(zip(trace.states, trace.energies)):
        ov = core.overlaps(z, P)
        lines.append(f"{it},{e!r},{int(np.count_nonzero(z))}," + ",".join(f"{v:.6f}" for v in ov))
    out.text("recall_trace.csv", "\n".join(lines) + "\n")
    out.text("recall_state.csv", formats.state_to_csv(trace.final))
    ov = core.overlaps(trace.final, P)
    summary = {
        "schedule": schedule, "iterations": trace.iterations, "converged": trace.converged,
        "winner": int(np.argmax(ov)), "winner_overlap": float(ov.max()),
        "target_overlap": float(ov[target]), "active": int(np.count_nonzero(trace.final)),
    }
    out.json("recall_summary.json", summary)
    return summary


def capacity_grid(cfg: dict) -> list[cap.CapacityCell]:
    kind = cfg["kind"]
    if kind not in ("tpam", "csign", "ternary", "phasor_dense"):
        raise UsageError(f"kind: unknown value {kind!r}")
    noise = cap.CueNoise(**cfg["noise"])
    common = dict(trials=int(cfg["trials"]), seed=cfg["seed"], noise=noise, schedule=cfg["schedule"],
                  max_iters=int(cfg["max_iters"]), threshold=cfg["threshold"])
    grid = []
    for M in cfg["Ms"]:
        if kind == "csign":
            grid += [cap.CapacityCell(cfg["N"], M, 1.0, "csign", bins=int(L), **common) for L in cfg["bins"]]
        elif kind == "phasor_dense":
            grid.append(cap.CapacityCell(cfg["N"], M, 1.0, "phasor_dense", **common))
        else:
            grid += [cap.CapacityCell(cfg["N"], M, p, kind, theta=th, **common)
                     for p in cfg["p_hot"] for th in cfg["theta"]]
    return grid


def cmd_capacity(cfg: dict, out: Output, threads: int = 1) -> dict:
    report = cap.run_capacity_sweep(capacity_grid(cfg), workers=threads)
    out.path("capacity.csv").write_text(report.to_csv(out.note))
    groups = sorted({(c["kind"], c["p_hot"]) for c in report.cells()})
    optimum = []
    for kind, p in groups:
        bits, M, th = cap.optimal_bits(report, cfg["floor"], kind=kind, p_hot=p)
        curve = cap.similarity_curve(report, kind=kind, p_hot=p)
        optimum.append({"kind": kind, "p_hot": p, "bits_per_synapse": bits, "M": M, "theta": th,
                        "critical_load": cap.critical_load(curve)})
    summary = {"optimum": optimum}
    out.json("capacity.json", {"cells": report.cells(), **summary})
    return summary


def _spiking_config(cfg: dict) -> spiking.SpikingCapacityConfig:
    return spiking.SpikingCapacityConfig(
        N=int(cfg["N"]), K=int(cfg["K"]), Ms=tuple(cfg["Ms"]), T=cfg["T"], theta=cfg["theta"],
        duration=cfg["duration"], decode_cycles=int(cfg["decode_cycles"]), dt=cfg["dt"],
        trials=int(cfg["trials"]), seed=cfg["seed"], N_inh=cfg["N_inh"], gains=spiking.Gains(**cfg["gains"]),
    )


def cmd_spiking(cfg: dict, out: Output, threads: int = 1) -> dict:
    sc = _spiking_config(cfg)
    sc.validate()
    if cfg["mode"] == "capacity":
        report = spiking.run_spiking_capacity(sc, workers=threads)
        out.path("spiking_capacity.csv").write_text(report.to_csv(out.note))
        summary = {"cells": report.cells()}
        out.json("spiking_capacity.json", summary)
        return summary
    if cfg["mode"] != "single":
        raise UsageError(f"mode: unknown value {cfg['mode']!r}; use single or capacity")
    M = int(cfg["M"])
    S = spiking.random_sparse_phasors(sc.N, sc.K, M, stream(sc.seed, "spiking", 0, M))
    W = core.learn_conjugate_outer(S)
    net = spiking.compile_network(W, sc.T, sc.theta, sc.gains, N_inh=sc.N_inh)
    cue = spiking.phase_to_spikes(S[0], sc.T, offset=0.05 * sc.T)
    record = np.flatnonzero(S[0])[: int(cfg["record"])]
    raster, traces = spiking.simulate(net, cue, sc.duration, sc.dt, record=record)
    span = sc.decode_cycles * sc.T
    z = spiking.spikes_to_phasor(raster, sc.duration - span, span, n=sc.N)
    win = raster.window(sc.duration - span, span)
    out.text("raster.csv", formats.raster_to_csv(raster))
    formats.save_raster(out.path("raster.spk"), raster)
    traces.to_csv(out.path("traces.csv"), comment=out.note)
    out.text("decoded_state.csv", formats.state_to_csv(z))
    summary = {
        "similarity": core.similarity(z, S[0]), "active": int(np.count_nonzero(z)),
        "period": spiking.estimate_period(win, sc.T) if len(win) else float("nan"),
        "spikes": len(raster), "recorded_neurons": record.tolist(),
    }
    out.json("spiking_summary.json", summary)
    return summary


def _load_image(path):
    if path is None:
        return indexing.default_image()
    p = Path(path)
    if not p.exists():
        raise UsageError(f"image: no such file {str(p)!r}")
    return formats.read_ppm(p)


def cmd_index(cfg: dict, out: Output, threads: int = 1) -> dict:
    img = _load_image(cfg["image"])
    size = int(cfg["patch_size"])
    P = indexing.extract_patches(img, size, int(cfg["M"]), stream(cfg["seed"], "patches"))
    models = []
    for label in cfg["models"]:
        model, _, ix = label.partition("-")
        c = indexing.IndexConfig(model, ix or "pinv", int(cfg["N"]), cfg["p_hot"], cfg["theta"])
        try:
            c.validate()
        except ValueError as e:
            raise UsageError(f"models: {e}") from None
        models.append(c)
    rows = []
    for sd in cfg["noise"]:
        rows += indexing.compare_models(P, float(sd), models, int(cfg["trials"]), cfg["seed"])
    lines = ["mu,trial,noise,model,rho,bits_per_pixel"]
    lines += [f"{r['mu']},{r['trial']},{r['noise']!r},{r['model']},{r['rho']!r},{r['bits_per_pixel']!r}" for r in rows]
    out.text("index.csv", "\n".join(lines) + "\n")

    summary = {}
    for sd in cfg["noise"]:
        summary[str(sd)] = indexing.mean_bits([r for r in rows if r["noise"] == float(sd)])

    # mosaics for the first trial at one noise level
    sd = float(cfg["mosaic_noise"])
    channels = 1 if img.ndim == 2 else img.shape[2]
    cues = P + stream(cfg["seed"], "cue", 0).normal(0.0, sd, P.shape)
    mosaic = lambda X: indexing.patches_to_image(X, size, channels)  # noqa: E731
    formats.write_ppm(out.path("patches.ppm"), mosaic(P), out.note)
    formats.write_ppm(out.path(f"cues_noise{sd:g}.ppm"), mosaic(cues), out.note)
    P_pinv = indexing.pseudo_inverse(P)
    for c in models:
        mem = indexing.build_memory(P, c, stream(cfg["seed"], "codebook", 0, indexing.MODELS.index(c.model)), P_pinv)
        est = np.stack([indexing.retrieve(mem, cues[:, mu], P[:, mu]).estimate for mu in range(P.shape[1])], axis=1)
        formats.write_ppm(out.path(f"recon_{c.label}_noise{sd:g}.ppm"), mosaic(est), out.note)
    out.json("index_summary.json", {"mean_bits_per_pixel": summary})
    return summary


def cmd_sequence(cfg: dict, out: Output, threads: int = 1) -> dict:
    # worked example: three cardinal patterns in a cycle
    J = sequence.learn_sequences([np.eye(3)])
    Wp, lam, v = sequence.to_phasor_network(J, cfg["selector"])
    v_eq = np.exp(2j * np.pi * np.array([1, 2, 0]) / 3)
    contrast = sequence.conjugate_vs_sequence_contrast(v_eq)
    example = {
        "J": J, "lambda": lam, "eigenvector": v, "W_prime": Wp,
        "fixed_point_residual": float(np.max(np.abs(Wp @ v_eq - v_eq))),
        "contrast": {
            "W_conjugate": contrast.W, "residual_W": contrast.residual_W,
            "residual_W_prime": contrast.residual_W_prime,
            "max_entry_difference": contrast.max_entry_difference,
            "W_prime_purely_imaginary": contrast.w_prime_imaginary,
        },
    }
    rng = stream(cfg["seed"], "sequence")
    checks = []
    for k in range(int(cfg["random_instances"])):
        seqs = [rng.choice([-1.0, 1.0], size=(int(cfg["L"]), int(cfg["N"]))) for _ in range(int(cfg["M"]))]
        J = sequence.learn_sequences(seqs)
        Wp, lam, v = sequence.to_phasor_network(J, cfg["selector"])
        rq = np.vdot(v, J @ v) / np.vdot(v, v)
        z0 = v * np.exp(1j * rng.normal(0, cfg["jitter"], v.size))
        z = sequence.phasor_iterate(Wp, z0, int(cfg["steps"]))
        checks.append({
            "instance": k, "lambda": lam, "rayleigh_real": float(abs(rq.real)),
            "eigen_residual": float(np.max(np.abs(J @ v - lam * v))),
            "hermitian_error": float(np.max(np.abs(Wp - Wp.conj().T))),
            "fixed_point_residual": float(np.max(np.abs(Wp @ v - v))),
            "iterate_similarity": core.similarity(z, v),
        })
    summary = {"example": example, "random": checks}
    out.json("sequence.json", summary)
    return summary


COMMANDS = {"recall": cmd_recall, "capacity": cmd_capacity, "spiking": cmd_spiking,
            "index": cmd_index, "sequence": cmd_sequence}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tpam", description="Phasor associative memory experiments.")
    sub = parser.add_subparsers(dest="command", required=True)
    S = argparse.SUPPRESS

    def add(name, help_):
        p = sub.add_parser(name, help=help_, argument_default=S)
        p.add_argument("--config", type=Path, default=None, help="JSON config file")
        p.add_argument("--seed", type=int)
        p.add_argument("--out", type=Path, default=Path("out"))
        p.add_argument("--threads", type=int, default=1)
        return p

    p = add("recall", "iterative recall from a partial, noisy or superposed cue")
    p.add_argument("--N", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--p-hot", dest="p_hot", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--threshold", choices=["dynamic", "constant"])
    p.add_argument("--kind", choices=["tpam", "csign", "ternary", "phasor_dense"])
    p.add_argument("--bins", type=int)
    p.add_argument("--cue")
    p.add_argument("--target", type=int)
    p.add_argument("--schedule", choices=["auto", *core.SCHEDULES])
    p.add_argument("--max-iters", dest="max_iters", type=int)
    p.add_argument("--patterns", help="TPAM container holding an M x N pattern matrix")

    p = add("capacity", "similarity and bits/synapse over a load grid")
    p.add_argument("--kind", choices=["tpam", "csign", "ternary", "phasor_dense"])
    p.add_argument("--N", type=int)
    p.add_argument("--p-hot", dest="p_hot", type=float, nargs="+")
    p.add_argument("--theta", type=float, nargs="+")
    p.add_argument("--bins", type=int, nargs="+")
    p.add_argument("--Ms", type=int, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--threshold", choices=["dynamic", "constant"])

    p = add("spiking", "single spiking trial with traces, or a spiking capacity sweep")
    p.add_argument("--mode", choices=["single", "capacity"])
    p.add_argument("--N", type=int)
    p.add_argument("--K", type=int)
    p.add_argument("--M", type=int)
    p.add_argument("--Ms", type=int, nargs="+")
    p.add_argument("--T", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--duration", type=float)
    p.add_argument("--dt", type=float)
    p.add_argument("--N-inh", dest="N_inh", type=int)
    p.add_argument("--trials", type=int)

    p = add("index", "image patch storage through the indexing pipeline")
    p.add_argument("--image", help="binary PPM image (default: bundled crop)")
    p.add_argument("--M", type=int)
    p.add_argument("--noise", type=float, nargs="+")
    p.add_argument("--trials", type=int)
    p.add_argument("--models", nargs="+")

    p = add("sequence", "skew-symmetric sequence weights and their phasor counterpart")
    p.add_argument("--selector")
    p.add_argument("--random-instances", dest="random_instances", type=int)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = vars(parser.parse_args(argv))
    command = args.pop("command")
    config_path, out_dir, threads = args.pop("config"), args.pop("out"), args.pop("threads")
    try:
        file_cfg = None
        if config_path is not None:
            if not config_path.exists():
                raise UsageError(f"config: no such file {str(config_path)!r}")
            file_cfg = json.loads(config_path.read_text())
            if not isinstance(file_cfg, dict):
                raise UsageError("config: top level must be a JSON object")
        cfg = resolve_config(command, file_cfg, args)
        out = Output(out_dir, command, cfg)
        COMMANDS[command](cfg, out, threads)
    except (UsageError, spiking.ConfigError, json.JSONDecodeError) as e:
        parser.error(str(e))
    print(f"{command}: config_hash={config_hash(cfg)} wrote {', '.join(out.written)} to {out.dir}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
