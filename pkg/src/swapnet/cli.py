"""Command-line batch runner.

Every subcommand runs in ``exact`` mode (analytic or full-circuit values) or
``sampled`` mode (finite shots with a fixed seed) and emits one result
document as canonical JSON or CSV.

Exit status: 0 success, 2 parse or usage error, 3 validation error,
4 numerical failure.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import __version__, analysis, channels, fileio, networks, qmath
from .sampling import CSV_HEADER, EstimateResult, ShotPlan, estimate_visibility

COMMANDS = ("overlap", "purity", "spectrum", "eigmax", "eigmin", "expect", "tomo", "choi", "capacity", "interfere")
OUTPUT_DIR_ENV = "SWAPNET_OUTPUT_DIR"

EXIT_OK, EXIT_PARSE, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3, 4


class UsageError(Exception):
    pass


@dataclass
class ExperimentSpec:
    command: str
    inputs: list = field(default_factory=list)
    mode: str = "exact"
    shots: int | None = None
    seed: int | None = None
    phi: float | None = None
    output_format: str = "json"
    output_path: str | None = None
    options: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise UsageError(f"unknown command {self.command!r}")
        if self.mode not in ("exact", "sampled"):
            raise UsageError(f"mode must be exact or sampled, got {self.mode!r}")
        if self.mode == "sampled" and self.shots is None:
            raise UsageError("sampled mode requires --shots")
        if self.mode == "exact":
            self.shots = None
            self.seed = None
        elif self.seed is None:
            self.seed = 0
        if self.output_format not in ("json", "csv"):
            raise UsageError(f"format must be json or csv, got {self.output_format!r}")

    def plan(self, index: int | None = None) -> ShotPlan:
        base = ShotPlan(self.shots, self.seed, self.options.get("confidence", 0.95))
        return base if index is None else base.child(index)

    def echo(self) -> dict:
        out = asdict(self)
        out.pop("output_path")
        return out


# -- canonical output ------------------------------------------------------------


def _canonical(obj) -> str:
    if obj is None or isinstance(obj, bool):
        return "null" if obj is None else ("true" if obj else "false")
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "null"
        if x == 0.0:
            x = 0.0  # drop the sign of negative zero
        return format(x, ".17g")
    if isinstance(obj, str):
        return json.dumps(obj, ensure_ascii=True)
    if isinstance(obj, dict):
        items = sorted((str(k), v) for k, v in obj.items())
        return "{" + ",".join(_canonical(k) + ":" + _canonical(v) for k, v in items) + "}"
    if isinstance(obj, (list, tuple, np.ndarray)):
        return "[" + ",".join(_canonical(v) for v in obj) + "]"
    if isinstance(obj, EstimateResult):
        return _canonical(obj.to_dict())
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def canonical_json(doc) -> str:
    """Sorted keys, no whitespace, floats with 17 significant digits."""
    return _canonical(doc) + "\n"


def _flatten(prefix: str, obj, out: list) -> None:
    if isinstance(obj, dict):
        for k in sorted(obj):
            _flatten(f"{prefix}.{k}" if prefix else str(k), obj[k], out)
    elif isinstance(obj, (list, tuple)):
        for i, v in enumerate(obj):
            _flatten(f"{prefix}[{i}]", v, out)
    else:
        out.append((prefix, obj))


def to_csv(doc: dict) -> str:
    """EstimateResult rows when the document has estimates, else key,value pairs."""
    estimates = doc.get("estimates") or []
    if estimates:
        lines = [CSV_HEADER] + [EstimateResult(**e).csv_row() for e in estimates]
    else:
        pairs: list = []
        _flatten("", doc.get("result", {}), pairs)
        lines = ["key,value"] + [f"{k},{_canonical(v)}" for k, v in pairs]
    return "\n".join(lines) + "\n"


def emit(doc: dict, fmt: str = "json", path=None, stream=None) -> None:
    text = canonical_json(doc) if fmt == "json" else to_csv(doc)
    if path is None:
        (stream or sys.stdout).write(text)
        return
    p = Path(path)
    if not p.parent.is_dir():
        raise OSError(f"output directory does not exist: {p.parent}")
    try:
        p.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write {p}: {exc.strerror}") from None


# -- inputs ------------------------------------------------------------------------


def _sha256(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def _catalog_state(ref: str) -> np.ndarray:
    name, _, arg = ref.partition(":")
    parts = arg.split(":") if arg else []
    try:
        if name == "mixed":
            return qmath.maximally_mixed(int(parts[0])).matrix
        if name == "bell":
            return qmath.maximally_entangled(int(parts[0]) if parts else 2).matrix
        if name == "basis":
            return qmath.basis_state(int(parts[0]), int(parts[1])).projector()
        if name == "random":
            d = int(parts[0])
            rank = int(parts[1]) if len(parts) > 1 else d
            seed = int(parts[2]) if len(parts) > 2 else 0
            return qmath.random_density(d, rank, seed).matrix
        if name == "diag":
            return np.diag([float(x) for x in arg.split(",")]).astype(np.complex128)
        if name == "bloch":
            x, y, z = (float(v) for v in arg.split(","))
            return qmath.bloch_state(x, y, z).matrix
    except (IndexError, ValueError) as exc:
        raise fileio.FormatError(f"bad state reference {ref!r}: {exc}") from None
    raise fileio.FormatError(f"no such file or state reference: {ref!r}")


def _read_bytes(ref: str) -> bytes | None:
    p = Path(ref)
    if p.is_file():
        try:
            return p.read_bytes()
        except OSError as exc:
            raise fileio.FormatError(f"cannot read {ref}: {exc.strerror}") from None
    return None


def load_state(ref: str, record: list) -> qmath.DensityOperator:
    data = _read_bytes(ref)
    if data is None:
        m = _catalog_state(ref)
        record.append({"ref": ref, "sha256": _sha256(ref.encode())})
    else:
        m = fileio.load_matrix(ref)
        record.append({"ref": ref, "sha256": _sha256(data)})
    return qmath.DensityOperator(m)


def load_matrix_input(ref: str, record: list) -> np.ndarray:
    data = _read_bytes(ref)
    if data is None:
        raise fileio.FormatError(f"no such file: {ref}")
    record.append({"ref": ref, "sha256": _sha256(data)})
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise fileio.FormatError(f"{ref}: invalid JSON ({exc.msg})") from None
    if isinstance(doc, dict) and "unitary" in doc:
        return fileio.network_from_dict(doc).unitary
    return fileio.matrix_from_dict(doc)


def load_channel(ref: str, record: list) -> channels.KrausChannel:
    data = _read_bytes(ref)
    if data is None:
        record.append({"ref": ref, "sha256": _sha256(ref.encode())})
        name, _, arg = ref.partition(":")
        if name not in channels.CATALOG or name == "unitary":
            raise fileio.FormatError(f"no such file or catalog channel: {ref!r}")
        try:
            float(arg or 0)
        except ValueError:
            raise fileio.FormatError(f"channel parameter {arg!r} is not a number") from None
        return channels.parse_channel_ref(ref)
    record.append({"ref": ref, "sha256": _sha256(data)})
    return fileio.load_channel(ref)


# -- subcommands -------------------------------------------------------------------
# Each returns (payload, [EstimateResult, ...]) for one repetition.


def _cmd_overlap(spec, ins, plan):
    a, b = ins["states"]
    if plan is None:
        return {"value": networks.overlap(a, b, via=spec.options["via"])}, []
    est = estimate_visibility(networks.swap_network(a.dim), np.kron(a.matrix, b.matrix), 0.0, plan)
    return {"value": est.point}, [est]


def _cmd_purity(spec, ins, plan):
    (rho,) = ins["states"]
    if plan is None:
        return {"value": networks.purity(rho, via=spec.options["via"])}, []
    est = estimate_visibility(networks.swap_network(rho.dim), np.kron(rho.matrix, rho.matrix), 0.0, plan)
    return {"value": est.point}, [est]


def _cmd_spectrum(spec, ins, plan):
    (rho,) = ins["states"]
    if plan is None:
        traces = list(networks.power_traces(rho, via=spec.options["via"]))
        ests = []
    else:
        ests = analysis.estimate_power_traces(rho, plan)
        traces = [1.0] + [e.point for e in ests]
    eig = analysis.spectrum_from_power_traces(analysis.PowerTraceVector(traces))
    return {"power_traces": traces, "eigenvalues": list(eig)}, ests


def _cmd_eig(mode):
    def run(spec, ins, plan):
        (rho,) = ins["states"]
        opts = spec.options
        if plan is None:
            res = analysis.multi_start_search(
                rho, mode, starts=opts["starts"], seed=opts["search_seed"], tol=opts["tol"], max_iter=opts["max_iter"]
            )
            payload = res.best.to_dict()
            payload["basins"] = res.basins()
            return payload, []
        value = channels.oracle_lambda_max(rho, plan, starts=opts["starts"], mode=mode)
        return {"eigenvalue": value, "shots_per_probe": plan.shots}, []

    return run


def _cmd_expect(spec, ins, plan):
    (rho,) = ins["states"]
    a = ins["observable"]
    if plan is None:
        return {"value": analysis.expectation_via_network(a, rho)}, []
    est = analysis.estimate_expectation(a, rho, plan)
    return {"value": est.point}, [est]


def _cmd_tomo(spec, ins, plan):
    (rho,) = ins["states"]
    probes = spec.options["probes"]
    if probes == "bloch" and rho.dim != 2:
        raise ValueError("--probes bloch needs a qubit state")
    n_probes = 3 if probes == "bloch" else rho.dim**2
    sub = None
    if plan is not None:
        per = spec.shots // n_probes
        if per < 1:
            raise ValueError(f"shot budget {spec.shots} is smaller than the {n_probes} probes")
        sub = ShotPlan(per, plan.seed, plan.confidence)
    oracle = analysis.OverlapOracle(rho, sub)
    rec = analysis.reconstruct_qubit_bloch(oracle) if probes == "bloch" else analysis.reconstruct_state(oracle, rho.dim)
    payload = {
        "state": fileio.matrix_to_dict(rec.state),
        "queries": rec.queries,
        "warnings": list(rec.warnings),
        "trace_distance_to_input": qmath.trace_distance(rec.state, rho),
    }
    if sub is not None:
        payload["shots_per_probe"] = sub.shots
    return payload, []


def _cmd_choi(spec, ins, plan):
    ch = ins["channel"]
    choi = channels.choi_state(ch)
    payload = {
        "choi": fileio.matrix_to_dict(choi.state),
        "lambda_max": float(qmath.eigenvalues(choi.matrix)[0]),
        "marginal_deviation": channels.choi_marginal_deviation(choi.matrix, choi.dim),
    }
    if plan is None:
        payload["purity"] = networks.power_trace(choi.state, 2)
        return payload, []
    est = estimate_visibility(networks.swap_network(choi.dim**2), np.kron(choi.matrix, choi.matrix), 0.0, plan)
    payload["purity"] = est.point
    return payload, [est]


def _cmd_capacity(spec, ins, plan):
    choi = channels.choi_state(ins["channel"])
    if plan is None:
        verdict = channels.two_way_capacity_positive(choi, method=spec.options["method"])
    else:
        verdict = channels.two_way_capacity_positive(choi, method="oracle", plan=plan, starts=spec.options["starts"])
    return {"lambda_max": verdict.lambda_max, "positive": verdict.positive}, []


_PAULIS = (("I", qmath.PAULI_I), ("X", qmath.PAULI_X), ("Y", qmath.PAULI_Y), ("Z", qmath.PAULI_Z))


def _cmd_interfere(spec, ins, plan):
    (rho,) = ins["states"]
    phi = spec.phi or 0.0
    if spec.options["basis_scan"]:
        if rho.dim != 2:
            raise ValueError("--basis-scan is available for qubits only")
        values, ests = {}, []
        for i, (name, p) in enumerate(_PAULIS):
            net = networks.NetworkSpec(p, description=f"Pauli {name}")
            if plan is None:
                values[name] = networks.interference_factor(net, rho).value.real
            else:
                est = estimate_visibility(net, rho, 0.0, plan.child(i))
                values[name] = est.point
                ests.append(est)
        m = sum(values[name] * p for name, p in _PAULIS) / 2
        recon = qmath.project_to_density(m)
        return {"pauli_expectations": values, "state": fileio.matrix_to_dict(recon, kind="density")}, ests
    net = networks.NetworkSpec(ins["unitary"])
    f = networks.interference_factor(net, rho)
    payload = {
        "visibility": f.visibility,
        "phase": f.phase,
        "value": {"re": f.value.real, "im": f.value.imag},
        "phi": phi,
    }
    if plan is None:
        payload["p0"] = networks.run_interferometer(net, rho, phi)
        return payload, []
    est = estimate_visibility(net, rho, phi, plan)
    payload["p0"] = est.p0_hat
    return payload, [est]


HANDLERS = {
    "overlap": _cmd_overlap,
    "purity": _cmd_purity,
    "spectrum": _cmd_spectrum,
    "eigmax": _cmd_eig("max"),
    "eigmin": _cmd_eig("min"),
    "expect": _cmd_expect,
    "tomo": _cmd_tomo,
    "choi": _cmd_choi,
    "capacity": _cmd_capacity,
    "interfere": _cmd_interfere,
}


def _load_inputs(spec: ExperimentSpec) -> tuple[dict, list]:
    record: list = []
    ins: dict = {}
    opts = spec.options
    if spec.command in ("choi", "capacity"):
        if len(spec.inputs) != 1:
            raise UsageError(f"{spec.command} takes exactly one --channel")
        ins["channel"] = load_channel(spec.inputs[0], record)
        return ins, record
    want = 2 if spec.command == "overlap" else 1
    if len(spec.inputs) != want:
        raise UsageError(f"{spec.command} takes exactly {want} --in argument(s), got {len(spec.inputs)}")
    ins["states"] = [load_state(ref, record) for ref in spec.inputs]
    if spec.command == "expect":
        if not opts.get("observable"):
            raise UsageError("expect needs --observable")
        ins["observable"] = load_matrix_input(opts["observable"], record)
    if spec.command == "interfere" and not opts.get("basis_scan"):
        if not opts.get("unitary"):
            raise UsageError("interfere needs --unitary (or --basis-scan)")
        ins["unitary"] = load_matrix_input(opts["unitary"], record)
    return ins, record


def run(spec: ExperimentSpec) -> dict:
    """Execute one experiment and return its result document."""
    ins, record = _load_inputs(spec)
    handler = HANDLERS[spec.command]
    doc = {"command": spec.command, "spec": spec.echo(), "inputs": record, "version": __version__}
    if spec.mode == "exact":
        payload, _ = handler(spec, ins, None)
        doc["result"] = payload
        return doc
    repeat = spec.options.get("repeat", 1)
    if repeat == 1:
        payload, ests = handler(spec, ins, spec.plan())
        doc["result"] = payload
        doc["estimates"] = [e.to_dict() for e in ests]
        if len(ests) == 1:
            doc["estimate"] = ests[0].to_dict()
        return doc
    jobs = max(1, spec.options.get("jobs", 1))

    def task(i):
        return handler(spec, ins, spec.plan(i))

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            outcomes = list(pool.map(task, range(repeat)))
    else:
        outcomes = [task(i) for i in range(repeat)]
    doc["result"] = {"repetitions": [p for p, _ in outcomes]}
    doc["estimates"] = [e.to_dict() for _, ests in outcomes for e in ests]
    return doc


# -- argument parsing ---------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--mode", choices=("exact", "sampled"), default="exact")
    common.add_argument("--shots", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--confidence", type=float, default=0.95)
    common.add_argument("--format", dest="output_format", choices=("json", "csv"), default="json")
    common.add_argument("--out", dest="output_path")
    common.add_argument("--repeat", type=int, default=1, help="independent sampled repetitions")
    common.add_argument("--jobs", type=int, default=1, help="threads for repetitions")

    parser = _Parser(prog="swapnet", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def state_cmd(name, help_, n_in=1):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--in", dest="inputs", action="append", default=[], metavar="STATE",
                       help="matrix JSON file or state reference (mixed:d, random:d:rank:seed, ...)")
        return p

    for name in ("overlap", "purity"):
        p = state_cmd(name, f"{name} via the controlled-SWAP network")
        p.add_argument("--via", choices=("analytic", "circuit"), default="analytic")

    p = state_cmd("spectrum", "eigenvalues from power traces")
    p.add_argument("--via", choices=networks.POWER_TRACE_PATHS, default="matpow")

    for name in ("eigmax", "eigmin"):
        p = state_cmd(name, f"extremal eigenvalue search ({name[3:]})")
        p.add_argument("--starts", type=int, default=5)
        p.add_argument("--tol", type=float, default=1e-8)
        p.add_argument("--max-iter", type=int, default=200)
        p.add_argument("--search-seed", type=int, default=0)

    p = state_cmd("expect", "observable expectation through the positive embedding")
    p.add_argument("--observable", required=True)

    p = state_cmd("tomo", "state reconstruction from overlap probes")
    p.add_argument("--probes", choices=("full", "bloch"), default="full")

    for name, help_ in (("choi", "Choi state of a channel"), ("capacity", "two-way capacity criterion")):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--channel", dest="inputs", action="append", default=[],
                       help="channel JSON file or catalog reference such as depolarizing:0.8")
        if name == "capacity":
            p.add_argument("--method", choices=("eigh", "search"), default="eigh")
            p.add_argument("--starts", type=int, default=5)

    p = state_cmd("interfere", "raw controlled-U interferometer")
    p.add_argument("--unitary")
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--basis-scan", action="store_true", help="qubit Pauli-basis scan that rebuilds the state")
    return parser


_COMMON_KEYS = {"command", "inputs", "mode", "shots", "seed", "phi", "output_format", "output_path"}


def spec_from_args(argv) -> ExperimentSpec:
    ns = vars(build_parser().parse_args(argv))
    options = {k.replace("-", "_"): v for k, v in ns.items() if k not in _COMMON_KEYS}
    if options.get("repeat", 1) < 1:
        raise UsageError("--repeat must be >= 1")
    out = ns.get("output_path")
    if out is None and os.environ.get(OUTPUT_DIR_ENV):
        out = str(Path(os.environ[OUTPUT_DIR_ENV]) / f"{ns['command']}.{ns['output_format']}")
    return ExperimentSpec(
        command=ns["command"],
        inputs=list(ns.get("inputs") or []),
        mode=ns["mode"],
        shots=ns.get("shots"),
        seed=ns.get("seed"),
        phi=ns.get("phi"),
        output_format=ns["output_format"],
        output_path=out,
        options=options,
    )


def _status_for(exc: BaseException) -> int:
    if isinstance(exc, (UsageError, fileio.FormatError)):
        return EXIT_PARSE
    if isinstance(exc, ArithmeticError):
        return EXIT_NUMERICAL
    return EXIT_VALIDATION


def main(argv=None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    try:
        spec = spec_from_args(sys.argv[1:] if argv is None else argv)
        doc = run(spec)
        emit(doc, spec.output_format, spec.output_path, stream=stdout)
    except SystemExit as exc:  # --help / --version
        return int(exc.code or 0)
    except (UsageError, ValueError, ArithmeticError, OSError, TypeError) as exc:
        status = _status_for(exc)
        stdout.write(canonical_json({"error": {"type": type(exc).__name__, "message": str(exc), "status": status}}))
        return status
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
