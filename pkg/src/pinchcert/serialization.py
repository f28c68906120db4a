"""Matrix files and certificate files.

Both are JSON text. Complex matrices are stored as ``{"n", "re", "im"}`` and
every float is written with 17 significant digits, so a load after an emit
reproduces the same doubles bit for bit. Certificates carry their kind, a
kind-specific payload, stored residuals, the tool version and the tolerance
record used for verification.
"""

from dataclasses import dataclass, field
import json
import logging
import math

import numpy as np

from . import __version__
from .averaging import DixmierCertificate, conjugate_mean
from .core import as_square, dagger, fro, unitarity_residual, idempotency_residual
from .errors import ParseError, SchemaError
from .majorization import MajorizationCertificate
from .nilpotent import NilpotentRealization
from .pinching import PinchingCertificate
from .projection_sums import PositiveCombination, ProjectionSumCertificate, TwoProjectionForm

log = logging.getLogger(__name__)

FORMAT = "pinchcert-certificate"
KINDS = (
    "pinching",
    "dixmier",
    "projection_sum",
    "positive_combination",
    "nilpotent",
    "majorization",
    "two_projection",
    "q_pm",
)
DEFAULT_VERIFY_SCALE = 1e-8


# ---------------------------------------------------------------------------
# JSON text with fixed float formatting


def _fmt_float(x):
    x = float(x)
    if not math.isfinite(x):
        raise ValueError("cannot serialize non-finite number")
    text = format(x, ".17g")
    if "e" not in text and "." not in text:
        text += ".0"
    return text


def dumps(obj, indent=0):
    pad = "  " * indent
    inner = "  " * (indent + 1)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(str(k))}: {dumps(v, indent + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, (list, tuple)):
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        if not obj:
            return "[]"
        return "[\n" + ",\n".join(inner + dumps(v, indent + 1) for v in obj) + "\n" + pad + "]"
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def encode_matrix(X):
    X = np.asarray(X, dtype=complex)
    return {"n": X.shape[0], "re": X.real.tolist(), "im": X.imag.tolist()}


def decode_matrix(obj, name="matrix", error=SchemaError):
    if not isinstance(obj, dict):
        raise error(f"{name}: expected an object with n, re, im")
    for key in ("n", "re", "im"):
        if key not in obj:
            raise error(f"{name}: missing field {key!r}")
    n = obj["n"]
    if not isinstance(n, int) or n <= 0:
        raise error(f"{name}: field 'n' must be a positive integer")
    parts = []
    for key in ("re", "im"):
        rows = obj[key]
        if not isinstance(rows, list) or len(rows) != n:
            raise error(f"{name}: field {key!r} must have {n} rows")
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != n:
                got = len(row) if isinstance(row, list) else "no"
                raise error(f"{name}: field {key!r} row {i} has {got} entries, expected {n}")
            if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in row):
                raise error(f"{name}: field {key!r} row {i} has non-numeric entries")
        parts.append(np.array(rows, dtype=float))
    M = parts[0] + 1j * parts[1]
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name}: non-finite entries")
    return M


# ---------------------------------------------------------------------------
# Matrix files


@dataclass
class MatrixFile:
    matrix: np.ndarray
    hermitian: bool
    name: str = None
    seed: int = None

    @property
    def n(self):
        return self.matrix.shape[0]


def write_matrix(path, X, name=None, seed=None):
    obj = encode_matrix(as_square(X))
    if name is not None:
        obj["name"] = name
    if seed is not None:
        obj["seed"] = int(seed)
    with open(path, "w") as fh:
        fh.write(dumps(obj) + "\n")


def parse_matrix(path, hermit_scale=1e-12):
    """Load a matrix file; Hermiticity is detected with ``hermit_scale * n * ||X||_F``."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: line {exc.lineno}: {exc.msg}", line=exc.lineno) from exc
    try:
        M = decode_matrix(obj, str(path), ParseError)
    except ParseError as exc:
        msg = str(exc)
        fld = next((k for k in ("re", "im", "n") if f"'{k}'" in msg), None)
        raise ParseError(msg, field=fld) from None
    n = M.shape[0]
    herm = fro(M - dagger(M)) <= hermit_scale * n * fro(M) + 1e-300
    return MatrixFile(M, bool(herm), obj.get("name"), obj.get("seed"))


# ---------------------------------------------------------------------------
# Certificates


@dataclass
class CertificateFile:
    kind: str
    payload: dict
    residuals: dict
    tolerance: dict
    tool_version: str = __version__


@dataclass
class Verification:
    kind: str
    residuals: dict
    thresholds: dict
    passed: bool
    warnings: list = field(default_factory=list)

    def failures(self):
        return [k for k, r in self.residuals.items() if not r <= self.thresholds[k]]


def _tolerance_record(verify_scale):
    from .core import DEFAULT_TOL

    return {
        "abs_tol": DEFAULT_TOL.abs_tol,
        "rel_scale": DEFAULT_TOL.rel_scale,
        "rank_cutoff": DEFAULT_TOL.rank_cutoff,
        "verify_scale": float(verify_scale),
    }


def certificate_file(cert, verify_scale=DEFAULT_VERIFY_SCALE, **extra):
    """Wrap a certificate object into a :class:`CertificateFile` with fresh residuals."""
    kind, payload = _to_payload(cert, **extra)
    cf = CertificateFile(kind, payload, {}, _tolerance_record(verify_scale))
    cf.residuals = verify_certificate(cf).residuals
    return cf


def _to_payload(cert, **extra):
    def m(X):
        return np.asarray(X, dtype=complex)

    if isinstance(cert, PinchingCertificate):
        return "pinching", {
            "matrix": m(cert.matrix),
            "target": float(cert.target),
            "projections": [m(E) for E in cert.projections],
            "basis": m(cert.basis),
            "certified": bool(cert.certified),
        }
    if isinstance(cert, DixmierCertificate):
        return "dixmier", {
            "matrices": [m(X) for X in cert.matrices],
            "unitaries": [m(U) for U in cert.unitaries],
        }
    if isinstance(cert, ProjectionSumCertificate):
        return "projection_sum", {
            "matrix": m(cert.matrix),
            "projections": [m(P) for P in cert.projections],
        }
    if isinstance(cert, PositiveCombination):
        return "positive_combination", {
            "matrix": m(cert.matrix),
            "coefficients": [float(a) for a in cert.coefficients],
            "projections": [m(P) for P in cert.projections],
        }
    if isinstance(cert, NilpotentRealization):
        return "nilpotent", {
            "matrix": m(extra["matrix"]),
            "Z": m(cert.Z),
            "basis": m(cert.basis),
            "upper": m(cert.upper),
        }
    if isinstance(cert, MajorizationCertificate):
        return "majorization", {
            "source": m(cert.source),
            "target": m(cert.target),
            "unitaries": [m(U) for U in cert.unitaries],
        }
    if isinstance(cert, TwoProjectionForm):
        payload = {
            "E": m(cert.E),
            "F": m(cert.F),
            "basis": m(cert.basis),
            "ranks": [int(r) for r in cert.ranks],
            "angles": [float(a) for a in cert.angles],
        }
        if extra.get("halves") is not None:
            payload["halves"] = [m(P) for P in extra["halves"]]
        return "two_projection", payload
    if isinstance(cert, dict) and set(cert) == {"b", "V", "q_minus", "q_plus"}:
        return "q_pm", {k: m(cert[k]) for k in ("b", "V", "q_minus", "q_plus")}
    raise SchemaError(f"cannot serialize {type(cert).__name__}")


_SCHEMA = {
    "pinching": {"matrix": "M", "target": "f", "projections": "L", "basis": "M", "certified": "b"},
    "dixmier": {"matrices": "L", "unitaries": "L"},
    "projection_sum": {"matrix": "M", "projections": "L"},
    "positive_combination": {"matrix": "M", "coefficients": "F", "projections": "L0"},
    "nilpotent": {"matrix": "M", "Z": "M", "basis": "M", "upper": "M"},
    "majorization": {"source": "M", "target": "M", "unitaries": "L"},
    "two_projection": {"E": "M", "F": "M", "basis": "M", "ranks": "I", "angles": "F"},
    "q_pm": {"b": "M", "V": "M", "q_minus": "M", "q_plus": "M"},
}


def _decode_payload(kind, raw):
    if not isinstance(raw, dict):
        raise SchemaError("payload must be an object")
    layout = dict(_SCHEMA[kind])
    if kind == "two_projection" and "halves" in raw:
        layout["halves"] = "L"
    out = {}
    for key, code in layout.items():
        if key not in raw:
            raise SchemaError(f"{kind} payload is missing {key!r}")
        val = raw[key]
        if code == "M":
            out[key] = decode_matrix(val, key)
        elif code in ("L", "L0"):
            if not isinstance(val, list) or (code == "L" and not val):
                raise SchemaError(f"{kind} payload field {key!r} must be a nonempty list")
            out[key] = [decode_matrix(v, f"{key}[{i}]") for i, v in enumerate(val)]
        elif code == "f":
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise SchemaError(f"{kind} payload field {key!r} must be a number")
            out[key] = float(val)
        elif code == "b":
            if not isinstance(val, bool):
                raise SchemaError(f"{kind} payload field {key!r} must be a boolean")
            out[key] = val
        elif code in ("F", "I"):
            typ = int if code == "I" else (int, float)
            if not isinstance(val, list) or not all(isinstance(v, typ) and not isinstance(v, bool) for v in val):
                raise SchemaError(f"{kind} payload field {key!r} must be a list of numbers")
            out[key] = [float(v) for v in val] if code == "F" else list(val)
    sizes = {M.shape[0] for v in out.values() for M in (v if isinstance(v, list) else [v]) if isinstance(M, np.ndarray)}
    if len(sizes) > 1:
        raise SchemaError(f"{kind} payload mixes matrix sizes {sorted(sizes)}")
    if kind == "positive_combination" and len(out["coefficients"]) != len(out["projections"]):
        raise SchemaError("coefficients and projections differ in length")
    if kind == "two_projection":
        if len(out["ranks"]) != 5 or len(out["angles"]) != out["ranks"][4]:
            raise SchemaError("two_projection ranks/angles are inconsistent")
        if "halves" in out and len(out["halves"]) != 4:
            raise SchemaError("two_projection halves must list E1, E2, F1, F2")
    return out


def _verify_payload(kind, p):
    """Residuals and the matrix norm each one is scaled by."""
    res, ref = {}, {}

    def put(name, value, norm):
        res[name] = float(value)
        ref[name] = float(norm)

    if kind == "pinching":
        X, Es, t = p["matrix"], p["projections"], p["target"]
        n = X.shape[0]
        put("pinching", max(fro(E @ X @ E - t * E) for E in Es), fro(X))
        put("partition", fro(sum(Es) - np.eye(n)), 1.0)
        put("idempotency", max(idempotency_residual(E) for E in Es), 1.0)
        cross = [fro(E @ F) for i, E in enumerate(Es) for F in Es[i + 1 :]]
        put("orthogonality", max(cross, default=0.0), 1.0)
        put("trace", abs(np.trace(X).real / n - t), fro(X))
    elif kind == "dixmier":
        Us = p["unitaries"]
        n = Us[0].shape[0]
        worst, worst_ref = 0.0, 0.0
        for X in p["matrices"]:
            r = fro(conjugate_mean(X, Us) - np.trace(X) / n * np.eye(n))
            if r / (1.0 + fro(X)) >= worst / (1.0 + worst_ref):
                worst, worst_ref = r, fro(X)
        put("average", worst, worst_ref)
        put("unitarity", max(unitarity_residual(U) for U in Us), 1.0)
    elif kind == "projection_sum":
        A, Ps = p["matrix"], p["projections"]
        put("sum", fro(sum(Ps) - A), fro(A))
        put("idempotency", max(max(idempotency_residual(P), fro(P - dagger(P))) for P in Ps), 1.0)
    elif kind == "positive_combination":
        A, Ps, a = p["matrix"], p["projections"], p["coefficients"]
        put("reconstruction", fro(sum((c * P for c, P in zip(a, Ps)), np.zeros_like(A)) - A), fro(A))
        idem = [max(idempotency_residual(P), fro(P - dagger(P))) for P in Ps]
        put("idempotency", max(idem, default=0.0), 1.0)
        put("negativity", max(0.0, -min(a, default=0.0)), 1.0)
    elif kind == "nilpotent":
        X, Z, V, T = p["matrix"], p["Z"], p["basis"], p["upper"]
        n = X.shape[0]
        put("hermitian_part", fro(Z + dagger(Z) - X), fro(X))
        scale = max(1.0, fro(X)) ** n
        put("nilpotency", fro(np.linalg.matrix_power(Z, n)) / scale, 1.0)
        put("triangularity", fro(np.tril(T)) + fro(V @ T @ dagger(V) - Z), fro(X))
        put("unitarity", unitarity_residual(V), 1.0)
    elif kind == "majorization":
        B, A, Us = p["source"], p["target"], p["unitaries"]
        put("average", fro(conjugate_mean(B, Us) - A), fro(B))
        put("unitarity", max(unitarity_residual(U) for U in Us), 1.0)
    elif kind == "two_projection":
        from .projection_sums import TwoProjectionForm

        form = TwoProjectionForm(p["E"], p["F"], p["basis"], tuple(p["ranks"]), np.array(p["angles"]), 0.0)
        Q = p["basis"]
        Eb, Fb = form.blocks()
        recon = max(fro(Q @ Eb @ dagger(Q) - p["E"]), fro(Q @ Fb @ dagger(Q) - p["F"]))
        put("reconstruction", recon, 1.0)
        put("unitarity", unitarity_residual(Q), 1.0)
        h, k = np.cos(form.angles), np.sin(form.angles)
        put("pythagoras", float(np.linalg.norm(h * h + k * k - 1)), 1.0)
        if "halves" in p:
            E1, E2, F1, F2 = p["halves"]
            worst = max(
                fro(E1 + E2 - p["E"]),
                fro(F1 + F2 - p["F"]),
                fro(E1 @ F1),
                fro(E2 @ F2),
                *(idempotency_residual(P) for P in p["halves"]),
            )
            put("halving", worst, 1.0)
    elif kind == "q_pm":
        b, V, qm, qp = p["b"], p["V"], p["q_minus"], p["q_plus"]
        beta = float(np.linalg.eigvalsh((b + dagger(b)) / 2)[-1])
        expected = (2 / beta) * b + 2 * V @ dagger(V) - (2 / beta) * V @ b @ dagger(V)
        put("identity", fro(qm + qp - expected), 1.0)
        put("idempotency", max(idempotency_residual(qm), idempotency_residual(qp)), 1.0)
    return res, ref


def verify_certificate(cf):
    """Recompute residuals from the payload; stored residuals are overridden."""
    if cf.kind not in KINDS:
        raise SchemaError(f"unknown certificate kind {cf.kind!r}")
    scale = float(cf.tolerance.get("verify_scale", DEFAULT_VERIFY_SCALE))
    res, ref = _verify_payload(cf.kind, cf.payload)
    n = _payload_size(cf.payload)
    thresholds = {k: scale * n * (1.0 + ref[k]) for k in res}
    if cf.kind == "positive_combination":
        thresholds["negativity"] = 0.0
    warnings = []
    for key, value in cf.residuals.items():
        if key in res and not _same(value, res[key]):
            msg = f"stored residual {key}={value!r} differs from recomputed {res[key]!r}; using recomputed"
            log.warning(msg)
            warnings.append(msg)
    passed = all(res[k] <= thresholds[k] for k in res)
    return Verification(cf.kind, res, thresholds, passed, warnings)


def _same(a, b):
    try:
        return abs(float(a) - float(b)) <= 1e-9 * max(1.0, abs(float(b)))
    except (TypeError, ValueError):
        return False


def _payload_size(payload):
    for v in payload.values():
        if isinstance(v, np.ndarray):
            return v.shape[0]
        if isinstance(v, list) and v and isinstance(v[0], np.ndarray):
            return v[0].shape[0]
    raise SchemaError("payload holds no matrices")


def _encode_payload(payload):
    out = {}
    for key, val in payload.items():
        if isinstance(val, np.ndarray):
            out[key] = encode_matrix(val)
        elif isinstance(val, list) and val and isinstance(val[0], np.ndarray):
            out[key] = [encode_matrix(v) for v in val]
        else:
            out[key] = val
    return out


def certificate_text(cf):
    obj = {
        "format": FORMAT,
        "kind": cf.kind,
        "tool_version": cf.tool_version,
        "tolerance": cf.tolerance,
        "residuals": cf.residuals,
        "payload": _encode_payload(cf.payload),
    }
    return dumps(obj) + "\n"


def emit_certificate(cf, path):
    with open(path, "w") as fh:
        fh.write(certificate_text(cf))


def load_certificate(path):
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise ParseError(f"{path}: {exc.strerror}") from exc
    return loads_certificate(text, str(path))


def loads_certificate(text, name="<certificate>"):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{name}: line {exc.lineno}: {exc.msg}", line=exc.lineno) from exc
    if not isinstance(obj, dict) or obj.get("format") != FORMAT:
        raise SchemaError(f"{name}: not a {FORMAT} file")
    kind = obj.get("kind")
    if kind not in KINDS:
        raise SchemaError(f"{name}: unknown certificate kind {kind!r}")
    for key in ("payload", "residuals", "tolerance", "tool_version"):
        if key not in obj:
            raise SchemaError(f"{name}: missing field {key!r}")
    if not isinstance(obj["residuals"], dict) or not isinstance(obj["tolerance"], dict):
        raise SchemaError(f"{name}: residuals and tolerance must be objects")
    payload = _decode_payload(kind, obj["payload"])
    return CertificateFile(kind, payload, obj["residuals"], obj["tolerance"], obj["tool_version"])


def to_majorization(cf):
    """Rebuild a :class:`MajorizationCertificate` from a majorization file."""
    if cf.kind != "majorization":
        raise SchemaError(f"expected a majorization certificate, got {cf.kind!r}")
    p = cf.payload
    res = fro(conjugate_mean(p["source"], p["unitaries"]) - p["target"])
    return MajorizationCertificate(p["unitaries"], p["source"], p["target"], res)
