"""JSON file formats for POVMs and witness bundles.

Complex entries are stored as two-element arrays ``[re, im]`` of decimal
floats (locale-proof, and round-tripped bit-exactly by the shortest-repr
float encoding). Element indices in files are 1-based. Serialization is
canonical: sorted keys, two-space indent, trailing newline, so
``serialize(parse(serialize(x))) == serialize(x)`` byte for byte.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .channel import KrausChannel
from .errors import CleanPovmError, InvalidMatrix
from .linalg import DEFAULT_TOL, Tolerances
from .povm import Povm, validate
from .witness import MAX_EIG_INCREASE, MIN_EIG_DECREASE, Witness


class FileFormatError(CleanPovmError):
    """Input file does not conform to the documented schema."""


def matrix_to_json(matrix) -> list:
    a = np.asarray(matrix, dtype=complex)
    return [[[float(z.real), float(z.imag)] for z in row] for row in a]


def matrix_from_json(rows, context: str = "matrix") -> np.ndarray:
    if not isinstance(rows, list) or not rows:
        raise FileFormatError(f"{context}: expected a nonempty list of rows")
    try:
        a = np.array(
            [[complex(entry[0], entry[1]) for entry in row] for row in rows],
            dtype=complex,
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise FileFormatError(f"{context}: entries must be [re, im] pairs: {exc}") from exc
    if a.ndim != 2:
        raise FileFormatError(f"{context}: rows have inconsistent lengths")
    if not np.all(np.isfinite(a)):
        raise FileFormatError(f"{context}: non-finite entries")
    return a


def povm_to_json(povm: Povm) -> dict:
    out = {
        "dim": povm.dim,
        "elements": [matrix_to_json(e.matrix) for e in povm.elements],
    }
    if povm.labels is not None:
        out["labels"] = list(povm.labels)
    return out


def povm_from_json(obj, tol: Tolerances = DEFAULT_TOL) -> Povm:
    if not isinstance(obj, dict):
        raise FileFormatError("POVM file must contain a JSON object")
    try:
        dim = int(obj["dim"])
        elements = obj["elements"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"POVM file missing dim/elements: {exc}") from exc
    if not isinstance(elements, list) or not elements:
        raise FileFormatError("POVM file needs a nonempty elements list")
    mats = [matrix_from_json(rows, f"element {i + 1}") for i, rows in enumerate(elements)]
    if any(m.shape != (dim, dim) for m in mats):
        raise FileFormatError(f"element shapes do not match dim = {dim}")
    labels = obj.get("labels")
    if labels is not None and (
        not isinstance(labels, list) or len(labels) != len(mats)
    ):
        raise FileFormatError("labels must be a list matching the element count")
    try:
        return validate(mats, tol, labels)
    except InvalidMatrix as exc:
        raise FileFormatError(str(exc)) from exc


def witness_bundle_to_json(target: Povm, witness: Witness) -> dict:
    return {
        "povm_p": povm_to_json(target),
        "povm_q": povm_to_json(witness.q),
        "channel": {
            "dim": witness.channel.dim,
            "kraus": [matrix_to_json(k) for k in witness.channel.kraus],
        },
        "case": witness.case_tag,
        "epsilon": float(witness.epsilon),
        "widened_index": witness.widened_index + 1,
        "direction": witness.direction,
    }


def witness_bundle_from_json(obj, tol: Tolerances = DEFAULT_TOL) -> tuple[Povm, Witness]:
    if not isinstance(obj, dict):
        raise FileFormatError("witness bundle must be a JSON object")
    for key in ("povm_p", "povm_q", "channel", "case", "epsilon", "widened_index", "direction"):
        if key not in obj:
            raise FileFormatError(f"witness bundle missing key {key!r}")
    target = povm_from_json(obj["povm_p"], tol)
    q = povm_from_json(obj["povm_q"], tol)
    ch = obj["channel"]
    try:
        dim = int(ch["dim"])
        kraus_rows = ch["kraus"]
    except (KeyError, TypeError, ValueError) as exc:
        raise FileFormatError(f"channel block malformed: {exc}") from exc
    kraus = [matrix_from_json(rows, f"kraus {i + 1}") for i, rows in enumerate(kraus_rows)]
    if not kraus or any(k.shape != (dim, dim) for k in kraus):
        raise FileFormatError("kraus operator shapes do not match channel dim")
    # no closure gate here: a broken closure is a verification outcome
    # (verify_witness check (ii)), not a parse error
    channel = KrausChannel(dim, tuple(kraus))
    case = obj["case"]
    if case not in ("a", "b", "c", "d"):
        raise FileFormatError(f"unknown case tag {case!r}")
    direction = obj["direction"]
    if direction not in (MAX_EIG_INCREASE, MIN_EIG_DECREASE):
        raise FileFormatError(f"unknown direction {direction!r}")
    widened = int(obj["widened_index"]) - 1
    if not 0 <= widened < q.n_outcomes:
        raise FileFormatError("widened_index out of range")
    witness = Witness(q, channel, widened, case, float(obj["epsilon"]), direction)
    return target, witness


def dumps_canonical(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def save_json(path, obj) -> None:
    Path(path).write_text(dumps_canonical(obj), encoding="utf-8")


def load_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FileFormatError(f"cannot read {path}: {exc}") from exc


def save_povm(path, povm: Povm) -> None:
    save_json(path, povm_to_json(povm))


def load_povm(path, tol: Tolerances = DEFAULT_TOL) -> Povm:
    return povm_from_json(load_json(path), tol)


def save_witness_bundle(path, target: Povm, witness: Witness) -> None:
    save_json(path, witness_bundle_to_json(target, witness))


def load_witness_bundle(path, tol: Tolerances = DEFAULT_TOL) -> tuple[Povm, Witness]:
    return witness_bundle_from_json(load_json(path), tol)
