"""JSON encoding of channels, verdicts, certificates and measure results.

Matrices use the repo-wide format {"rows", "cols", "entries": [[[re, im], ...]]};
a vector is an n x 1 matrix with an extra "vector": true. Certificates carry a
"type" tag. Every encoder has a decoder so emitted JSON reads back.
"""

import dataclasses

import numpy as np

from . import channels, cones, linalg, measures
from .errors import DimensionMismatch

CERTIFICATE_TYPES = {
    "cp_factorization": cones.CPFactorization,
    "psd_plus_nonneg": cones.PsdPlusNonnegDecomposition,
    "witness": cones.WitnessMatrix,
    "refuting_vector": cones.RefutingVector,
    "dnn_violation": cones.DNNViolation,
    "dd_violation": cones.DDViolation,
    "dnn_dual_matrix": cones.DNNDualMatrix,
    "sos": cones.SOSCertificate,
    "net": measures.NetDecomposition,
}
_TYPE_OF = {cls: name for name, cls in CERTIFICATE_TYPES.items()}


def _real_if_possible(A):
    return A.real.copy() if np.all(A.imag == 0) else A


def encode(obj):
    """Convert results of this package into JSON-compatible values."""
    if obj is None or isinstance(obj, (bool, str)):
        return obj
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        if obj.dtype == object:
            return [encode(x) for x in obj]
        out = linalg.matrix_to_json(obj)
        if obj.ndim == 1:
            out["vector"] = True
        return out
    if isinstance(obj, measures.MeasureResult):
        return result_to_json(obj)
    if isinstance(obj, cones.MembershipVerdict):
        return verdict_to_json(obj)
    if type(obj) in _TYPE_OF:
        out = {"type": _TYPE_OF[type(obj)]}
        for f in dataclasses.fields(obj):
            out[f.name] = encode(getattr(obj, f.name))
        return out
    if isinstance(obj, dict):
        return {str(k): encode(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [encode(x) for x in obj]
    if dataclasses.is_dataclass(obj):
        return {f.name: encode(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    return str(obj)


def decode(obj):
    """Inverse of :func:`encode` for matrices, certificates, verdicts and results."""
    if isinstance(obj, list):
        return [decode(x) for x in obj]
    if not isinstance(obj, dict):
        return obj
    if {"rows", "cols", "entries"} <= obj.keys():
        A = _real_if_possible(linalg.matrix_from_json(obj))
        return A.ravel() if obj.get("vector") else A
    if obj.get("type") in CERTIFICATE_TYPES:
        cls = CERTIFICATE_TYPES[obj["type"]]
        kwargs = {f.name: decode(obj.get(f.name)) for f in dataclasses.fields(cls)}
        if cls is cones.DNNViolation and isinstance(kwargs["location"], list):
            kwargs["location"] = tuple(kwargs["location"])
        return cls(**kwargs)
    if "verdict" in obj and "tol" in obj:
        return verdict_from_json(obj)
    if "kind" in obj and "lower" in obj and "upper" in obj:
        return result_from_json(obj)
    return {k: decode(v) for k, v in obj.items()}


def verdict_to_json(v):
    return {"verdict": v.verdict, "tol": v.tol, "certificate": encode(v.certificate),
            "info": encode(v.info)}


def verdict_from_json(obj):
    return cones.MembershipVerdict(obj["verdict"], decode(obj.get("certificate")),
                                   float(obj["tol"]), decode(obj.get("info") or {}))


def result_to_json(r):
    return {"kind": r.kind, "lower": encode(r.lower), "upper": encode(r.upper),
            "value": encode(r.value), "certificate": encode(r.certificates), "info": encode(r.info)}


def result_from_json(obj):
    return measures.MeasureResult(obj["kind"], obj.get("value"), obj.get("lower"), obj.get("upper"),
                                  decode(obj.get("certificate") or {}), decode(obj.get("info") or {}))


def classification_to_json(c):
    return {
        "hermiticity_preserving": c.hermiticity_preserving,
        "completely_positive": c.completely_positive,
        "trace_preserving": c.trace_preserving,
        "unital": c.unital,
        "cpdnn": c.cpdnn,
        "cpcp": verdict_to_json(c.cpcp),
        "cp_preserving_qubit": c.cp_preserving_qubit,
    }


def classification_from_json(obj):
    return channels.ChannelClassification(
        obj["hermiticity_preserving"], obj["completely_positive"], obj["trace_preserving"],
        obj["unital"], obj["cpdnn"], verdict_from_json(obj["cpcp"]), obj.get("cp_preserving_qubit"))


# channels ----------------------------------------------------------------------------------


def channel_to_json(ch):
    out = {"dim_in": ch.dim_in, "dim_out": ch.dim_out, "choi": linalg.matrix_to_json(ch.choi)}
    if ch.kraus is not None:
        out["kraus"] = [linalg.matrix_to_json(A) for A in ch.kraus]
    return out


def _field_error(field, exc):
    return ValueError(f"field '{field}': {exc}")


def channel_from_json(obj):
    """Read any of the three channel forms (choi, kraus, pauli) into a ChannelRep."""
    if not isinstance(obj, dict):
        raise ValueError("channel JSON must be an object")
    if "kraus" in obj:
        ks = obj["kraus"]
        if not isinstance(ks, list) or not ks:
            raise ValueError("field 'kraus' must be a nonempty list of matrices")
        mats = []
        for i, K in enumerate(ks):
            try:
                mats.append(linalg.matrix_from_json(K))
            except ValueError as exc:
                raise _field_error(f"kraus[{i}]", exc) from exc
        if any(A.shape != mats[0].shape for A in mats):
            raise DimensionMismatch("field 'kraus': operators have different shapes")
        ch = channels.ChannelRep.from_kraus(mats)
        for key, val in (("dim_in", ch.dim_in), ("dim_out", ch.dim_out)):
            if key in obj and obj[key] != val:
                raise DimensionMismatch(f"field '{key}' is {obj[key]} but the Kraus operators imply {val}")
        return ch
    if "choi" in obj:
        for key in ("dim_in", "dim_out"):
            if not isinstance(obj.get(key), int) or obj[key] < 1:
                raise ValueError(f"field '{key}' must be a positive integer")
        try:
            J = linalg.matrix_from_json(obj["choi"])
        except ValueError as exc:
            raise _field_error("choi", exc) from exc
        return channels.ChannelRep.from_choi(J, obj["dim_in"], obj["dim_out"])
    if "pauli" in obj:
        T = obj["pauli"]
        if isinstance(T, dict):
            try:
                T = linalg.matrix_from_json(T)
            except ValueError as exc:
                raise _field_error("pauli", exc) from exc
            if np.abs(T.imag).max() > 0:
                raise ValueError("field 'pauli' must be real")
            T = T.real
        else:
            try:
                T = np.array(T, dtype=float)
            except (TypeError, ValueError) as exc:
                raise _field_error("pauli", exc) from exc
        if T.shape != (4, 4):
            raise DimensionMismatch("field 'pauli' must be a 4x4 matrix")
        return channels.channel_from_pauli(T)
    raise ValueError("channel JSON needs one of the fields 'choi', 'kraus' or 'pauli'")
