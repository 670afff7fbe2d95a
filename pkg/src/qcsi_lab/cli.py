"""Command-line entry point: ``qcsi-lab <group> <command> [flags]``.

Every invocation writes newline-delimited JSON records to stdout. The first
record embeds the configuration used. Failures print a single
``{"error": ...}`` record and exit nonzero.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from . import hvm, mbqc, oracle, scheme, witness
from .pauli import parse_pauli


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


@dataclass
class RunConfig:
    subcommand: str
    scheme: str | None = None
    circuit: str | None = None
    shots: int | None = None
    seed: int | None = None
    noise: float | None = None
    out: str | None = None
    format: str | None = None

    def validate(self) -> None:
        if self.shots is not None and self.shots < 1:
            raise UsageError("--shots must be >= 1")
        if self.seed is not None and not 0 <= self.seed < 2 ** 64:
            raise UsageError("--seed must be an unsigned 64-bit integer")
        if self.noise is not None and not 0 <= self.noise <= 1:
            raise UsageError("--noise must lie in [0, 1]")


def _data_text(name: str) -> str:
    return resources.files("qcsi_lab.data").joinpath(name).read_text()


def _read(path: str, suffix: str) -> tuple[str, str]:
    p = Path(path)
    if p.exists():
        return p.read_text(), p.stem
    name = p.name if p.name.endswith(suffix) else p.name + suffix
    try:
        return _data_text(name), Path(name).stem
    except FileNotFoundError:
        raise FileNotFoundError(f"no such file: {path}") from None


def load_scheme_arg(path: str) -> scheme.SchemeSpec:
    text, stem = _read(path, ".scheme")
    return scheme.parse_scheme(text, name=stem)


def load_circuit_arg(path: str):
    text, _ = _read(path, ".circuit")
    return hvm.parse_circuit(text)


def _emit(records, stream) -> None:
    for r in records:
        stream.write(json.dumps(r, sort_keys=True) + "\n")


# --- commands ------------------------------------------------------------

def cmd_scheme_check(args, cfg):
    spec = load_scheme_arg(args.scheme)
    report = scheme.check_scheme(spec, fast_path=not args.generic)
    rec = report.as_record()
    rec["scheme"] = spec.name
    rec["n"] = spec.n
    table = [
        f"scheme {spec.name}  n={spec.n}",
        f"  C1 (no state-independent contextuality): {report.c1}",
        f"  C2 (tomographic completeness):           {report.c2}",
        f"  inferable labels: {report.inferable}   contexts: {report.contexts}",
    ]
    if report.certificate:
        table.append(f"  infeasibility certificate: {len(report.certificate)} equations")
    return [rec], table


def _model(spec, args):
    return hvm.scheme_hvm(spec, fast_path=not getattr(args, "generic", False))


def cmd_hvm_exact(args, cfg):
    spec = load_scheme_arg(args.scheme)
    circuit = load_circuit_arg(args.circuit)
    q, lam = _model(spec, args)
    outcomes = hvm.parse_outcomes(args.outcomes)
    recs = hvm.exact_records(q, lam, spec, circuit, outcomes)
    joint = float(np.prod([r.model_p for r in recs])) if recs else 1.0
    out = [asdict(r) for r in recs]
    out.append({"joint_p": joint, "outcomes": hvm.outcome_key(outcomes)})
    table = [f"step {r.step}: {r.label} -> {r.outcome:+d}  p={r.model_p:.6f}" for r in recs]
    table.append(f"joint probability {joint:.6f}")
    return out, table


def cmd_hvm_sample(args, cfg):
    spec = load_scheme_arg(args.scheme)
    circuit = load_circuit_arg(args.circuit)
    q, lam = _model(spec, args)
    res = hvm.simulate_circuit_hvm((None, lam), spec, circuit, args.shots, args.seed)
    ms = hvm.compile_circuit(spec, circuit)
    exact = None
    if ms and spec.n <= hvm.MAX_DENSE_QUBITS and len(ms) <= 16:
        exact = hvm.exact_joint_distribution(q, lam, ms)
    recs = []
    for t, label in enumerate(res.labels):
        col = res.outcomes[:, t]
        for o in (1, -1):
            model_p = None
            if exact is not None:
                model_p = sum(p for k, p in exact.items() if k[t] == o)
            recs.append({
                "step": t, "label": label, "outcome": o,
                "frequency": float(np.mean(col == o)), "model_p": model_p,
            })
    joint = [{"joint": k, "count": v, "frequency": v / res.shots} for k, v in res.counts.items()]
    table = [
        f"step {r['step']}: {r['label']} {r['outcome']:+d}  freq={r['frequency']:.5f}"
        + (f"  model={r['model_p']:.5f}" if r["model_p"] is not None else "")
        for r in recs
    ]
    if args.out:
        _write_sample(args.out, cfg, recs, joint)
    return recs + joint, table


def _write_sample(path: str, cfg, recs, joint) -> None:
    p = Path(path)
    if p.suffix == ".csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=["step", "label", "outcome", "frequency", "model_p"], lineterminator="\n")
        w.writeheader()
        for r in recs:
            w.writerow(r)
        p.write_text(buf.getvalue())
    elif p.suffix == ".json":
        p.write_text(json.dumps({"config": asdict(cfg), "marginals": recs, "joint": joint}, sort_keys=True, indent=1) + "\n")
    else:
        raise UsageError("--out must end in .json or .csv")


def _named_state(name: str, n: int | None):
    if name == "ghz":
        return oracle.ghz()
    n = n or 1
    if name == "zeros":
        return oracle.zeros(n)
    if name in ("mixed", "maximally_mixed"):
        return oracle.maximally_mixed(n)
    if name == "plus":
        return oracle.plus_state(n)
    raise UsageError(f"unknown state {name!r} (ghz, zeros, mixed, plus)")


def cmd_oracle_expect(args, cfg):
    state = _named_state(args.state, args.n)
    p = parse_pauli(args.observable)
    val = oracle.pauli_expectation(state, p)
    return [{"state": args.state, "observable": args.observable, "expectation": val}], [f"<{args.observable}> = {val:.12f}"]


def cmd_witness_ghz(args, cfg):
    noise = args.noise or 0.0
    report = witness.contextuality_gap(scheme.local_scheme(3), oracle.ghz(), noise=noise)
    rec = report.as_record()
    table = [f"{'term':>8} {'coeff':>6} {'<term>':>10}"]
    for t in report.terms:
        table.append(f"{t['observable']:>8} {t['coefficient']:>6d} {t['expectation']:>10.6f}")
    table.append(f"quantum value {report.quantum_value:.9f}   noncontextual bound {report.hvm_max}   gap {report.gap:.9f}")
    return [rec], table


def cmd_mbqc_demo(args, cfg):
    graph, pattern, reference = mbqc.load_cell(args.cell)
    rng = np.random.default_rng(args.seed)
    ver = mbqc.verify_logical_gate(graph, pattern, reference, args.trials, rng)
    eq = mbqc.red_site_equivalence(graph, pattern, mbqc.random_qubit_state(rng))
    rec = {
        "cell": args.cell,
        "qubits": graph.size,
        "route": list(pattern.route),
        "min_fidelity": ver.min_fidelity,
        "branches": ver.branches,
        "trials": ver.trials,
        "red_site_max_deviation": eq,
    }
    table = [
        f"cell {args.cell}: {graph.size} qubits, route {list(pattern.route)}",
        f"  min fidelity over {ver.branches} branches: {ver.min_fidelity:.12f}",
        f"  red-site statistics deviation: {eq:.3e}",
    ]
    return [rec], table


# --- parser --------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="qcsi-lab", description=__doc__.splitlines()[0])
    parser.add_argument("--table", action="store_true", help="also print a human-readable table to stderr")
    groups = parser.add_subparsers(dest="group", required=True, parser_class=_Parser)

    g = groups.add_parser("scheme").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("check")
    p.add_argument("--scheme", required=True)
    p.add_argument("--generic", action="store_true", help="skip the analytic local-scheme path")
    p.set_defaults(func=cmd_scheme_check)

    g = groups.add_parser("hvm").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("exact")
    p.add_argument("--scheme", required=True)
    p.add_argument("--circuit", required=True)
    p.add_argument("--outcomes", required=True)
    p.set_defaults(func=cmd_hvm_exact)
    p = g.add_parser("sample")
    p.add_argument("--scheme", required=True)
    p.add_argument("--circuit", required=True)
    p.add_argument("--shots", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_hvm_sample)

    g = groups.add_parser("oracle").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("expect")
    p.add_argument("--state", required=True)
    p.add_argument("--n", type=int)
    p.add_argument("--observable", required=True)
    p.set_defaults(func=cmd_oracle_expect)

    g = groups.add_parser("witness").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("ghz")
    p.add_argument("--noise", type=float, default=0.0)
    p.set_defaults(func=cmd_witness_ghz)

    g = groups.add_parser("mbqc").add_subparsers(dest="command", required=True, parser_class=_Parser)
    p = g.add_parser("demo")
    p.add_argument("--cell", choices=["a", "b"], required=True)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_mbqc_demo)
    return parser


def _config(args) -> RunConfig:
    return RunConfig(
        subcommand=f"{args.group} {args.command}",
        scheme=getattr(args, "scheme", None),
        circuit=getattr(args, "circuit", None),
        shots=getattr(args, "shots", None),
        seed=getattr(args, "seed", None),
        noise=getattr(args, "noise", None),
        out=getattr(args, "out", None),
        format=Path(args.out).suffix.lstrip(".") if getattr(args, "out", None) else "ndjson",
    )


def main(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        cfg = _config(args)
        cfg.validate()
        if getattr(args, "trials", 1) < 1:
            raise UsageError("--trials must be >= 1")
    except UsageError as exc:
        _emit([{"error": {"kind": "usage", "message": str(exc)}}], stdout)
        return 2
    try:
        records, table = args.func(args, cfg)
    except UsageError as exc:
        _emit([{"config": asdict(cfg), "error": {"kind": "usage", "message": str(exc)}}], stdout)
        return 2
    except (ValueError, OSError) as exc:
        _emit([{"config": asdict(cfg), "error": {"kind": type(exc).__name__, "message": str(exc)}}], stdout)
        return 1
    _emit([{"config": asdict(cfg)}, *records], stdout)
    if args.table:
        stderr.write("\n".join(table) + "\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
