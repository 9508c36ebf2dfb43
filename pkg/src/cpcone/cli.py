"""Command-line interface: ``cpcone <verb> [options] FILE``.

Exit codes: 0 for a definitive answer (IN, OUT or a value), 2 for UNKNOWN,
1 for errors. The accepted dimension is capped by CPCONE_MAX_DIM (default 64).
"""

import argparse
import json
import os
import sys

import numpy as np

from . import channels, cones, linalg, measures, serialize
from .errors import CPConeError, DimensionTooLarge
from .selftest import run_selftest

EXIT_OK, EXIT_ERROR, EXIT_UNKNOWN = 0, 1, 2
KINDS = ("nnorm", "robustness-dnn", "robustness-dd", "robustness-cp", "l1", "trace-dnn", "trace-dd",
         "trace-cp")


def _max_dim():
    raw = os.environ.get("CPCONE_MAX_DIM", "64")
    try:
        cap = int(raw)
    except ValueError as exc:
        raise ValueError(f"CPCONE_MAX_DIM must be an integer, got {raw!r}") from exc
    if cap < 1:
        raise ValueError("CPCONE_MAX_DIM must be positive")
    return cap


def _check_dim(n, what="matrix"):
    cap = _max_dim()
    if n > cap:
        raise DimensionTooLarge(f"{what} dimension {n} exceeds CPCONE_MAX_DIM={cap}")


def _load_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ValueError(f"{path}: malformed JSON ({exc.msg} at line {exc.lineno})") from exc


def _read_matrix(path, hermitian=True):
    obj = _load_json(path)
    if isinstance(obj, dict) and {"rows", "cols"} <= obj.keys() and isinstance(obj["rows"], int):
        _check_dim(max(obj["rows"], obj["cols"] if isinstance(obj["cols"], int) else 0))
    return linalg.matrix_from_json(obj, hermitian=hermitian)


def _read_channel(path):
    obj = _load_json(path)
    ch = serialize.channel_from_json(obj)
    _check_dim(ch.dim_in * ch.dim_out, "Choi matrix")
    return ch


def _emit(args, payload, text):
    if args.json:
        print(json.dumps(payload, indent=2))
    else:
        print(text)


def _verdict_code(verdict):
    return EXIT_UNKNOWN if verdict == cones.UNKNOWN else EXIT_OK


def _verdict_text(v, label):
    lines = [f"{label}: {v.verdict}"]
    cert = v.certificate
    if isinstance(cert, cones.WitnessMatrix):
        lines.append(f"witness ({cert.source}): Tr(W H) = {cert.value:.12g}")
    elif isinstance(cert, cones.CPFactorization):
        lines.append(f"factorization with {cert.rank} nonnegative columns")
    elif isinstance(cert, cones.DNNViolation):
        lines.append(f"not DNN: {cert.kind} violation of size {cert.amount:.3g}")
    elif isinstance(cert, cones.DDViolation):
        lines.append(f"row {cert.row} exceeds diagonal dominance by {cert.amount:.3g}")
    elif isinstance(cert, cones.RefutingVector):
        lines.append(f"refuting vector with x^T W x = {cert.value:.6g}")
    elif isinstance(cert, cones.SOSCertificate):
        lines.append(f"sum-of-squares certificate, shift {cert.shift:.3g}")
    elif isinstance(cert, cones.PsdPlusNonnegDecomposition):
        lines.append("PSD plus nonnegative decomposition")
    elif isinstance(cert, cones.DNNDualMatrix):
        lines.append(f"DNN matrix Z with <W, Z> = {cert.value:.6g}")
    return "\n".join(lines)


def _copositive_verdict(W, tol):
    lvl0 = cones.copositive_level0(W, tol)
    if lvl0.verdict == cones.IN:
        return lvl0
    ref = cones.copositive_refute(W, tol=tol)
    if ref.verdict == cones.OUT:
        return ref
    if W.shape[0] <= 8:
        lvl1 = cones.copositive_sos_level1(W, tol)
        if lvl1.verdict == cones.IN:
            return lvl1
    return cones.MembershipVerdict(cones.UNKNOWN, None, tol, {"route": "level 0, refutation, level 1"})


def cmd_membership(args):
    H = _read_matrix(args.file)
    tol = args.tol
    if args.cone == "cp":
        v = cones.cp_membership(H, tol, args.effort)
    elif args.cone == "dnn":
        v = cones.is_dnn(H, tol)
    elif args.cone == "dd":
        v = cones.is_dd(H, tol)
    else:
        v = _copositive_verdict(H, tol)
    _emit(args, serialize.verdict_to_json(v), _verdict_text(v, f"{args.cone.upper()} membership"))
    return _verdict_code(v.verdict)


def cmd_witness(args):
    H = _read_matrix(args.file)
    v = cones.dual_witness_for(H, args.tol)
    _emit(args, serialize.verdict_to_json(v), _verdict_text(v, "witness search"))
    return _verdict_code(v.verdict)


def cmd_factorize(args):
    H = _read_matrix(args.file)
    if H.shape[0] <= 4:
        v = cones.cp_factorize_small(H, args.tol, seed=args.seed)
    else:
        v = cones.cp_factorize_heuristic(H, seed=args.seed, tol=args.tol)
    _emit(args, serialize.verdict_to_json(v), _verdict_text(v, "CP factorization"))
    return _verdict_code(v.verdict)


def cmd_channel_classify(args):
    ch = _read_channel(args.file)
    c = channels.classify(ch, args.effort, args.tol)
    payload = serialize.classification_to_json(c)
    text = "\n".join([
        f"map {ch.dim_in} -> {ch.dim_out}",
        f"hermiticity preserving: {c.hermiticity_preserving}",
        f"completely positive: {c.completely_positive}",
        f"trace preserving: {c.trace_preserving}",
        f"unital: {c.unital}",
        f"CPDNN: {c.cpdnn}",
        _verdict_text(c.cpcp, "CPCP"),
    ] + ([f"CP-preserving (qubit test): {c.cp_preserving_qubit}"] if c.cp_preserving_qubit is not None else []))
    _emit(args, payload, text)
    return _verdict_code(c.cpcp.verdict)


def cmd_channel_qubit(args):
    ch = _read_channel(args.file)
    T = channels.pauli_standard(ch, args.tol)
    cpp = channels.qubit_cp_preserving(ch, args.tol)
    cpcp = channels.qubit_cpcp(ch, args.tol)
    payload = {"pauli": serialize.encode(T), "cp_preserving": cpp, "cpcp": cpcp}
    text = "Pauli standard matrix (rows and columns I, X, Y, Z):\n" + np.array2string(
        T, precision=6, suppress_small=True) + f"\nCP-preserving: {cpp}\nCPCP: {cpcp}"
    _emit(args, payload, text)
    return EXIT_OK


def _result_text(r):
    if r.value is not None:
        return f"{r.kind}: {r.value:.12g}"
    return f"{r.kind}: [{r.lower:.12g}, {r.upper:.12g}]"


def cmd_measure(args):
    kind = args.kind
    if kind == "nnorm":
        A = _read_matrix(args.file, hermitian=False)
        if min(A.shape) != 1:
            raise ValueError("nnorm expects a vector (a matrix with one row or one column)")
        r = measures.nnorm_1(A.ravel(), args.eps)
    else:
        rho = _read_matrix(args.file)
        if kind == "robustness-dnn":
            r = measures.robustness(rho, "DNN")
        elif kind == "robustness-dd":
            r = measures.robustness(rho, "DD")
        elif kind == "robustness-cp":
            r = measures.robustness_cp_bounds(rho, args.effort)
        elif kind == "l1":
            r = measures.MeasureResult("l1", measures.l1_measure(rho))
        else:
            r = measures.trace_distance(rho, kind.split("-")[1].upper(), args.mode)
    _emit(args, serialize.result_to_json(r), _result_text(r))
    return EXIT_OK


def cmd_catalogue(args):
    try:
        params = json.loads(args.params) if args.params else {}
    except json.JSONDecodeError as exc:
        raise ValueError(f"--params: malformed JSON ({exc.msg})") from exc
    if not isinstance(params, dict):
        raise ValueError("--params must be a JSON object")
    for key, val in list(params.items()):
        if isinstance(val, dict) and "entries" in val:
            params[key] = linalg.matrix_from_json(val)
        elif key == "states":
            params[key] = [linalg.matrix_from_json(s) if isinstance(s, dict) else np.array(s, dtype=complex)
                           for s in val]
        elif isinstance(val, list):
            params[key] = np.array(val, dtype=complex)
    ch = channels.catalogue(args.name, **params)
    # the catalogue output is always JSON so it can be piped into channel-classify
    print(json.dumps(serialize.channel_to_json(ch), indent=2))
    return EXIT_OK


def cmd_selftest(args):
    results = run_selftest()
    if args.json:
        print(json.dumps([{"name": c.name, "passed": c.passed, "detail": c.detail,
                           "seconds": round(c.seconds, 3)} for c in results], indent=2))
    else:
        width = max(len(c.name) for c in results)
        for c in results:
            print(f"{'PASS' if c.passed else 'FAIL'}  {c.name:<{width}}  {c.detail}")
        print(f"{sum(c.passed for c in results)}/{len(results)} checks passed")
    return EXIT_OK if all(c.passed for c in results) else EXIT_ERROR


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="machine-readable output")
    common.add_argument("--tol", type=float, default=cones.DEFAULT_TOL)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--effort", choices=("fast", "certify"), default="certify")

    parser = argparse.ArgumentParser(prog="cpcone", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("membership", parents=[common], help="cone membership with a certificate")
    p.add_argument("--cone", choices=("cp", "dnn", "dd", "copositive"), default="cp")
    p.add_argument("file")
    p.set_defaults(func=cmd_membership)

    p = sub.add_parser("witness", parents=[common], help="best normalized witness against CP")
    p.add_argument("file")
    p.set_defaults(func=cmd_witness)

    p = sub.add_parser("factorize", parents=[common], help="nonnegative factorization H = B B^T")
    p.add_argument("file")
    p.set_defaults(func=cmd_factorize)

    p = sub.add_parser("channel-classify", parents=[common], help="structural flags and CPCP verdict")
    p.add_argument("file")
    p.set_defaults(func=cmd_channel_classify)

    p = sub.add_parser("channel-qubit", parents=[common], help="Pauli standard matrix tests for qubit channels")
    p.add_argument("file")
    p.set_defaults(func=cmd_channel_qubit)

    p = sub.add_parser("measure", parents=[common], help="non-negativity measures of a state or vector")
    p.add_argument("--kind", choices=KINDS, required=True)
    p.add_argument("--eps", type=float, default=1e-3)
    p.add_argument("--mode", choices=("normalized", "scaled"), default="normalized")
    p.add_argument("file")
    p.set_defaults(func=cmd_measure)

    p = sub.add_parser("catalogue", parents=[common], help="emit a named channel as JSON")
    p.add_argument("name", choices=channels.CATALOGUE_NAMES)
    p.add_argument("--params", default="", help='JSON object, e.g. \'{"p": 0.3}\'')
    p.set_defaults(func=cmd_catalogue)

    p = sub.add_parser("selftest", parents=[common], help="check the known closed-form values")
    p.set_defaults(func=cmd_selftest)
    return parser


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_ERROR if exc.code else EXIT_OK
    try:
        return args.func(args)
    except (CPConeError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


def main():
    sys.exit(run())
