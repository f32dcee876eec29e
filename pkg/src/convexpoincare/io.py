"""JSON readers and writers for measures, costs, functions and reports.

Parsing is fail-closed: unknown fields raise :class:`InputError`.
"""

import hashlib
import json

from .exceptions import InputError

SCHEMA_VERSION = 1


def reject_unknown(obj, allowed, what):
    if not isinstance(obj, dict):
        raise InputError(f"{what}: expected a JSON object")
    extra = sorted(set(obj) - set(allowed))
    if extra:
        raise InputError(f"{what}: unknown field(s) {', '.join(extra)}")
    if "schema" in obj and obj["schema"] != SCHEMA_VERSION:
        raise InputError(f"{what}: unsupported schema {obj['schema']!r}")


def loads(text, what="input"):
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"{what}: invalid JSON at line {exc.lineno}, "
                         f"column {exc.colno}: {exc.msg}") from None


def read_json(path):
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    return loads(raw.decode("utf-8"), str(path)), hashlib.sha256(raw).hexdigest()


def dumps(obj):
    """Canonical JSON: sorted keys, fixed separators, trailing newline."""
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def measure_from_dict(d):
    from .measures import DiscreteMeasure

    reject_unknown(d, {"dimension", "points", "weights", "schema"}, "measure")
    if "points" not in d or "dimension" not in d:
        raise InputError("measure: 'dimension' and 'points' are required")
    from ._validation import check_points

    pts = check_points(d["points"], dimension=d["dimension"], name="measure points")
    return DiscreteMeasure(pts, d.get("weights"))


def function_from_dict(d):
    from .hopflax import MaxAffineFunction

    return MaxAffineFunction.from_dict(d)


def cost_from_dict(d):
    from .costs import cost_from_dict as _cost

    return _cost(d)
