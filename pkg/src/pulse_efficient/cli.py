"""Command-line entry point: ``pulse-efficient <subcommand> [flags]``.

Exit codes: 0 success, 1 domain error, 2 usage error (bad flags, unreadable
input). Errors are reported as a JSON object on stderr.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path
from typing import Sequence

import numpy as np

from .backends import BackendModel, load_backend
from .kak import kak_decompose, synth_three_cnot, synth_three_rzx
from .pulse import SCHEDULING_METHODS, Schedule, schedule_circuit
from .qasm import parse_qasm_subset
from .qcore import Circuit, Gate, ParamExpr, circuit_unitary, gate_unitary
from .sim import apply_confusion, measure_probs, sample, simulate_ideal, simulate_noisy
from .tomo import characterize
from .transpile import (
    CostModel,
    TemplateError,
    cnot_pipeline,
    default_templates,
    pulse_efficient_circuit,
    template_substitute,
    templates_by_name,
    unroll,
)

DATA_DIR = Path(__file__).parent / "data"
PIPELINE_CHOICES = ("none", "cnot", "templates", "pulse-efficient")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


# ---------------------------------------------------------------------------
# Input helpers
# ---------------------------------------------------------------------------


def data_path(name: str) -> Path:
    return DATA_DIR / name


def _read_text(path: str) -> str:
    p = Path(path)
    if not p.is_file():
        builtin = data_path(path if path.endswith(".json") else f"{path}.json")
        if builtin.is_file():
            p = builtin
        else:
            raise UsageError(f"input file {path!r} not found")
    return p.read_text()


def _read_json(path: str):
    text = _read_text(path)
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: invalid JSON ({exc})") from exc


def parse_binding(text: str | None) -> dict[str, float]:
    """``name=value,name=value``."""
    out: dict[str, float] = {}
    for item in (text or "").split(","):
        if not item.strip():
            continue
        name, sep, value = item.partition("=")
        try:
            out[name.strip()] = float(value)
        except ValueError:
            sep = ""
        if not sep or not name.strip():
            raise UsageError(f"--bind expects name=value pairs, got {item!r}")
    return out


def read_circuit(path: str, bind: str | None = None) -> Circuit:
    if path.endswith(".qasm"):
        c = parse_qasm_subset(_read_text(path))
    else:
        c = Circuit.from_json(_read_json(path))
    binding = parse_binding(bind)
    return c.bind(binding) if binding else c


def _backend(args, required: bool = True) -> BackendModel | None:
    spec = getattr(args, "backend", None)
    if spec is None:
        if required:
            raise UsageError("--backend is required for this subcommand")
        return None
    if Path(spec).suffix == ".json" and not Path(spec).is_file():
        raise UsageError(f"backend file {spec!r} not found")
    return load_backend(spec)


def parse_shots(text: str | None) -> int | None:
    if text is None or text == "exact":
        return None
    try:
        shots = int(text)
    except ValueError as exc:
        raise UsageError(f"--shots expects an integer or 'exact', got {text!r}") from exc
    if shots < 1:
        raise UsageError("--shots must be positive")
    return shots


def parse_range(text: str) -> np.ndarray:
    """``a:b:n`` inclusive linear grid."""
    parts = text.split(":")
    if len(parts) != 3:
        raise UsageError(f"range {text!r} must look like a:b:n")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise UsageError(f"range {text!r} must look like a:b:n") from exc
    if n < 1:
        raise UsageError("range needs at least one point")
    return np.linspace(lo, hi, n)


def _need_seed(args, shots):
    if shots is not None and args.seed is None:
        raise UsageError("--seed is required with --shots N")


def parse_unitary(data) -> np.ndarray:
    """4x4 unitary from a JSON list of rows of [re, im] pairs (plain numbers allowed)."""
    try:
        u = np.array([[complex(*x) if isinstance(x, list) else complex(x) for x in row] for row in data])
    except (TypeError, ValueError) as exc:
        raise UsageError(f"unitary must be rows of [re, im] pairs ({exc})") from exc
    return u


_NAMED = {"cnot": "cx", "cx": "cx", "swap": "swap", "rzz": "rzz", "rzx": "rzx", "phase_swap": "phase_swap"}


def named_unitary(name: str, theta: float | None) -> np.ndarray:
    key = name.lower()
    if key not in _NAMED:
        raise UsageError(f"unknown gate {name!r}; choose from {', '.join(sorted(_NAMED))}")
    gname = _NAMED[key]
    params = ()
    if gname in ("rzz", "rzx", "phase_swap"):
        if theta is None:
            raise UsageError(f"{gname} needs --theta")
        params = (ParamExpr.literal(theta),)
    return gate_unitary(Gate(gname, (0, 1), params))


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def transpiled(c: Circuit, pipeline: str, templates=None, cost_model=None) -> Circuit:
    if pipeline == "cnot":
        return cnot_pipeline(c)
    if pipeline == "templates":
        c = unroll(c, keep=frozenset({"swap", "phase_swap", "rzx"}))
        return template_substitute(c, default_templates() if templates is None else templates, cost_model)
    if pipeline == "pulse-efficient":
        if c.parameters:
            raise ValueError(f"free parameters {sorted(c.parameters)}; bind them with --bind or use --pipeline templates")
        return pulse_efficient_circuit(c, templates, cost_model)
    return c


def cmd_kak(args) -> dict:
    sources = [args.gate is not None, args.unitary is not None, args.input is not None]
    if sum(sources) != 1:
        raise UsageError("give exactly one of --gate, --unitary, --input")
    if args.gate is not None:
        u = named_unitary(args.gate, args.theta)
    elif args.unitary is not None:
        u = parse_unitary(_read_json(args.unitary))
    else:
        c = read_circuit(args.input)
        if c.num_qubits != 2:
            raise ValueError("kak needs a two-qubit circuit")
        u = circuit_unitary(c)
    k = kak_decompose(u)
    return {
        "coordinates": list(k.coords.as_tuple()),
        "global_phase": k.global_phase,
        "rzx": synth_three_rzx(k).to_json(),
        "cnot": synth_three_cnot(k).to_json(),
    }


def _templates(spec: str | None):
    if spec is None:
        return None
    names = [s.strip() for s in spec.split(",") if s.strip()]
    try:
        return templates_by_name(names)
    except TemplateError as exc:
        raise UsageError(str(exc)) from exc


def _cost_model(spec: str | None):
    if spec is None or spec == "default":
        return None
    return CostModel.from_json(_read_json(spec))


def cmd_transpile(args) -> dict:
    c = read_circuit(args.input, args.bind)
    b = _backend(args, required=args.emit == "schedule")
    out = transpiled(c, args.pipeline, _templates(args.templates), _cost_model(args.cost_model))
    if args.emit == "schedule":
        sched = schedule_circuit(out, b)
        return {"circuit": out.to_json(), "schedule": sched.to_json()}
    return out.to_json()


def cmd_schedule(args) -> dict | str:
    c = read_circuit(args.input, args.bind)
    b = _backend(args)
    sched = schedule_circuit(transpiled(c, args.pipeline), b, method=args.scheduling)
    if args.format == "csv":
        return sched.to_csv() + f"# total_duration,{sched.total_duration},samples,{sched.total_duration_ns!r},ns\n"
    return sched.to_json()


def cmd_simulate(args) -> dict:
    shots = parse_shots(args.shots)
    _need_seed(args, shots)
    data = _read_json(args.input) if not args.input.endswith(".qasm") else None
    b = _backend(args, required=False)
    measured = None
    if data is not None and "timed" in data:
        if b is None:
            raise UsageError("simulating a schedule needs --backend")
        sched = Schedule.from_json(data)
        state = simulate_noisy(sched, b)
        duration = sched.total_duration
    else:
        c = read_circuit(args.input, args.bind)
        marks = [gate.qubits[0] for gate in c.gates if gate.name == "measure"]
        measured = marks or None
        c = transpiled(c.without_measurements(), args.pipeline)
        if b is None:
            state = simulate_ideal(c)
            duration = 0
        else:
            sched = schedule_circuit(c, b)
            state = simulate_noisy(sched, b)
            duration = sched.total_duration
    probs = measure_probs(state, measured)
    if args.readout:
        if b is None:
            raise UsageError("--readout needs --backend")
        n = int(round(math.log2(state.shape[0])))
        probs = apply_confusion(probs, b.confusion_matrices(measured if measured is not None else range(n)))
    out = {"duration_samples": duration}
    if b is not None:
        out["duration_ns"] = duration * b.dt_ns
    if shots is None:
        out["probabilities"] = dict(sorted(probs.items()))
    else:
        out["shots"] = shots
        out["counts"] = sample(probs, shots, args.seed)
    return out


def cmd_tomo(args) -> dict:
    shots = parse_shots(args.shots)
    _need_seed(args, shots)
    target = read_circuit(args.target)
    b = _backend(args)
    return characterize(target, b, args.variant, args.theta, shots, args.seed, readout=args.readout)


def _graph(spec: str):
    from . import qaoa

    if spec == "desk":
        return qaoa.desk_graph(), None
    if spec == "mumbai":
        return qaoa.mumbai_graph(), qaoa.mumbai_config()
    return qaoa.WeightedGraph.from_json(_read_json(spec)), None


def cmd_qaoa_scan(args) -> dict:
    from . import qaoa

    shots = parse_shots(args.shots)
    _need_seed(args, shots)
    graph, cfg = _graph(args.graph)
    pipeline = args.pipeline.replace("-", "_")
    b = _backend(args, required=pipeline != "ideal")
    if cfg is None:
        layout = [int(x) for x in args.layout.split(",")] if args.layout else list(range(graph.n))
        if b is None:
            coupling = [(i, j) for i in range(graph.n) for j in range(i + 1, graph.n)]
            cfg = qaoa.QaoaConfig(1, [0.0], [0.0], layout, coupling, max(layout) + 1)
        else:
            cfg = qaoa.QaoaConfig(1, [0.0], [0.0], layout, sorted(b.coupling), b.num_qubits)
    betas, gammas = parse_range(args.beta_range), parse_range(args.gamma_range)
    grid = qaoa.landscape_scan(graph, betas, gammas, pipeline, b, cfg, shots, args.seed, args.readout)
    csv = grid.to_csv()
    if args.out:
        Path(args.out).write_text(csv)
    best = np.unravel_index(int(np.argmax(grid.avg_cut)), grid.avg_cut.shape)
    return {
        "pipeline": pipeline,
        "points": int(grid.avg_cut.size),
        "max_avg_cut": float(grid.avg_cut[best]),
        "argmax": {"beta": float(grid.beta[best[0]]), "gamma": float(grid.gamma[best[1]])},
        "max_duration_ns": float(grid.duration_ns.max()),
        "out": args.out,
    }


# ---------------------------------------------------------------------------
# Parser and entry point
# ---------------------------------------------------------------------------


def _common(sub: bool) -> argparse.ArgumentParser:
    # subparsers suppress defaults so a value given before the subcommand survives
    d = argparse.SUPPRESS if sub else None
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--json", action="store_true", default=argparse.SUPPRESS if sub else False, help="compact machine-readable JSON on stdout")
    p.add_argument("--seed", type=int, default=d, help="RNG seed (required in shot mode)")
    p.add_argument("--backend", default=d, help="built-in backend name or backend JSON path")
    return p


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="pulse-efficient", description=__doc__.splitlines()[0], parents=[_common(False)])
    subs = parser.add_subparsers(dest="command", parser_class=_Parser)
    common = [_common(True)]

    p = subs.add_parser("kak", parents=common, help="Weyl coordinates and three-gate syntheses of a 2q unitary")
    p.add_argument("--gate", help="named gate: cnot, cx, swap, rzz, rzx, phase_swap")
    p.add_argument("--theta", type=float, help="angle for parametric named gates")
    p.add_argument("--unitary", help="JSON file with a 4x4 matrix of [re, im] pairs")
    p.add_argument("--input", help="two-qubit circuit JSON or .qasm")
    p.set_defaults(func=cmd_kak)

    p = subs.add_parser("transpile", parents=common, help="run a transpilation pipeline")
    p.add_argument("--input", required=True, help="circuit JSON or .qasm")
    p.add_argument("--bind", help="parameter values, e.g. gamma=0.4,beta=0.1")
    p.add_argument("--pipeline", choices=PIPELINE_CHOICES, default="pulse-efficient")
    p.add_argument("--templates", help="comma-separated template names (default: all)")
    p.add_argument("--cost-model", default="default", help="'default' or a JSON file of gate weights")
    p.add_argument("--emit", choices=("circuit", "schedule"), default="circuit")
    p.set_defaults(func=cmd_transpile)

    p = subs.add_parser("schedule", parents=common, help="per-channel pulse timeline of a circuit")
    p.add_argument("--input", required=True, help="circuit JSON or .qasm")
    p.add_argument("--bind", help="parameter values, e.g. gamma=0.4,beta=0.1")
    p.add_argument("--pipeline", choices=PIPELINE_CHOICES, default="none", help="transpile before scheduling")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--scheduling", choices=SCHEDULING_METHODS, default="asap", help="instruction placement")
    p.set_defaults(func=cmd_schedule)

    p = subs.add_parser("simulate", parents=common, help="ideal or T1/T2-noisy simulation")
    p.add_argument("--input", required=True, help="circuit JSON, .qasm, or schedule JSON")
    p.add_argument("--bind", help="parameter values, e.g. gamma=0.4,beta=0.1")
    p.add_argument("--pipeline", choices=PIPELINE_CHOICES, default="none")
    p.add_argument("--shots", default="exact", help="integer or 'exact'")
    p.add_argument("--readout", action="store_true", help="apply readout confusion")
    p.set_defaults(func=cmd_simulate)

    p = subs.add_parser("tomo", parents=common, help="process tomography of a scheduled two-qubit gate")
    p.add_argument("--target", required=True, help="two-qubit circuit JSON or .qasm")
    p.add_argument("--variant", choices=("cnot", "scaled"), default="scaled")
    p.add_argument("--theta", type=float, help="value of the target's free parameter")
    p.add_argument("--shots", default="exact", help="integer or 'exact'")
    p.add_argument("--readout", action="store_true", help="include readout confusion and mitigation")
    p.set_defaults(func=cmd_tomo)

    p = subs.add_parser("qaoa-scan", parents=common, help="depth-one QAOA average-cut landscape")
    p.add_argument("--graph", default="desk", help="'desk', 'mumbai' or a graph JSON path")
    p.add_argument("--pipeline", choices=("ideal", "cnot", "pulse-efficient"), default="ideal")
    p.add_argument("--beta-range", default="-2:2:21", help="a:b:n; write --beta-range=-1:1:5 when a is negative")
    p.add_argument("--gamma-range", default="-1:1:21", help="a:b:n; write --gamma-range=-1:1:5 when a is negative")
    p.add_argument("--layout", help="comma-separated physical qubit per graph node")
    p.add_argument("--shots", default="exact", help="integer or 'exact'")
    p.add_argument("--readout", action="store_true", help="apply readout confusion")
    p.add_argument("--out", help="CSV output path")
    p.set_defaults(func=cmd_qaoa_scan)
    return parser


def _emit(result, compact: bool) -> str:
    if isinstance(result, str):
        return result
    if compact:
        return json.dumps(result, sort_keys=True, separators=(",", ":")) + "\n"
    return json.dumps(result, sort_keys=True, indent=2) + "\n"


def _fail(kind: str, message: str, code: int) -> int:
    sys.stderr.write(json.dumps({"error": kind, "message": message, "exit_code": code}) + "\n")
    return code


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise UsageError("a subcommand is required: kak | transpile | schedule | simulate | tomo | qaoa-scan")
        result = args.func(args)
    except UsageError as exc:
        return _fail("usage", str(exc), 2)
    except (ValueError, KeyError, ZeroDivisionError, np.linalg.LinAlgError) as exc:
        return _fail(type(exc).__name__, str(exc), 1)
    sys.stdout.write(_emit(result, args.json))
    return 0


if __name__ == "__main__":
    sys.exit(main())
