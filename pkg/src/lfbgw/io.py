"""Plain-text model files.

Schema (``#`` starts a comment, blank lines are ignored)::

    lfbgw-model v1
    types = 2
    m = 1
    g = 0.5 0.5
    H =
    0.1 0.2
    0.3 0.0

A life-law file replaces ``types``, ``g`` and ``H`` with::

    life d = 0.5 0.25 0.125
    tail = geometric 0.5

where ``tail`` is ``zero``, ``geometric <r>`` or ``example1 <gamma> <k> <c>``
with ``c`` a comma-separated period (``1`` or ``1,2``). For ``example1`` the
``life d`` line may be left empty; the prefix is then generated.
"""

from __future__ import annotations

import math
import os
import re
from typing import Union

import numpy as np

from .cmj import Example1Tail, GeometricTail, LifeLaw, ZeroTail, example1_law
from .errors import InvalidArgumentError, ModelParseError
from .lf_law import PROB_TOL
from .model import ModelTriplet

HEADER = "lfbgw-model v1"
EXAMPLE1_PREFIX = 256

Model = Union[ModelTriplet, LifeLaw]  # noqa: UP007

_KEY = re.compile(r"^\s*([A-Za-z][A-Za-z ]*?)\s*=\s*(.*)$")


def _strip(line: str) -> str:
    i = line.find("#")
    return line if i < 0 else line[:i]


def _floats(text: str, line_no: int, col0: int) -> list[float]:
    """Parse whitespace-separated floats; ``col0`` is the 1-based column where ``text`` starts."""
    out = []
    for m in re.finditer(r"\S+", text):
        try:
            x = float(m.group())
        except ValueError:
            raise ModelParseError(f"not a number: {m.group()!r}", line_no, col0 + m.start()) from None
        if not math.isfinite(x):
            raise ModelParseError(f"non-finite value {m.group()!r}", line_no, col0 + m.start())
        out.append(x)
    return out


def parse_model(source: str | os.PathLike, text: str | None = None) -> Model:
    """Parse a model file (or the string ``text`` when given) into a triplet or life law.

    Raises
    ------
    ModelParseError
        With the 1-based line (and column, when known) of the offending entry.
    """
    if text is None:
        with open(source, encoding="utf-8") as fh:
            text = fh.read()
    lines = [(k + 1, _strip(raw).rstrip()) for k, raw in enumerate(text.splitlines())]
    lines = [(n, s) for n, s in lines if s.strip()]
    if not lines:
        raise ModelParseError("empty model file")
    first_no, first = lines[0]
    if first.strip() != HEADER:
        raise ModelParseError(f"expected header {HEADER!r}", first_no, 1)
    fields: dict[str, tuple[int, int, str]] = {}
    rows: list[tuple[int, list[float]]] = []
    k = 1
    while k < len(lines):
        n, s = lines[k]
        m = _KEY.match(s)
        if not m:
            raise ModelParseError(f"expected 'key = value', got {s.strip()!r}", n, 1)
        key = " ".join(m.group(1).split())
        if key not in ("types", "m", "g", "H", "life d", "tail"):
            raise ModelParseError(f"unknown key {key!r}", n, 1 + s.index(m.group(1)))
        if key in fields:
            raise ModelParseError(f"duplicate key {key!r}", n, 1)
        fields[key] = (n, m.start(2) + 1, m.group(2))
        k += 1
        if key == "H":
            if m.group(2).strip():
                raise ModelParseError("matrix rows start on the line after 'H ='", n, m.start(2) + 1)
            if "types" not in fields:
                raise ModelParseError("'types' must precede 'H'", n, 1)
            a = _types(fields)
            for _ in range(a):
                if k >= len(lines):
                    raise ModelParseError(f"H needs {a} rows, file ended", n)
                rn, rs = lines[k]
                vals = _floats(rs, rn, 1)
                if len(vals) != a:
                    raise ModelParseError(f"H row has {len(vals)} entries, expected {a}", rn, 1)
                rows.append((rn, vals))
                k += 1
    last_no = lines[-1][0]
    if "H" in fields and "life d" in fields:
        raise ModelParseError("a file holds either a triplet (H) or a life law, not both", fields["life d"][0], 1)
    if "life d" in fields:
        return _life(fields, last_no)
    return _triplet(fields, rows, last_no)


def _types(fields) -> int:
    n, col, val = fields["types"]
    try:
        a = int(val.strip())
    except ValueError:
        raise ModelParseError(f"types must be a positive integer, got {val.strip()!r}", n, col) from None
    if a < 1:
        raise ModelParseError("types must be >= 1", n, col)
    return a


def _m(fields, last_no) -> float:
    if "m" not in fields:
        raise ModelParseError("missing 'm ='", last_no)
    n, col, val = fields["m"]
    vals = _floats(val, n, col)
    if len(vals) != 1 or vals[0] <= 0:
        raise ModelParseError("m must be one positive number", n, col)
    return vals[0]


def _triplet(fields, rows, last_no) -> ModelTriplet:
    if "types" not in fields:
        raise ModelParseError("missing 'types ='", last_no)
    a = _types(fields)
    m = _m(fields, last_no)
    if "g" not in fields:
        raise ModelParseError("missing 'g ='", last_no)
    n, col, val = fields["g"]
    g = _floats(val, n, col)
    if len(g) != a:
        raise ModelParseError(f"g has {len(g)} entries, expected {a}", n, col)
    if any(x < 0 for x in g):
        raise ModelParseError("g has a negative entry", n, col)
    if abs(sum(g) - 1.0) > PROB_TOL:
        raise ModelParseError(f"g must sum to 1 (sum={sum(g)!r})", n, col)
    if "H" not in fields:
        raise ModelParseError("missing 'H ='", last_no)
    for i, (rn, vals) in enumerate(rows):
        for j, x in enumerate(vals):
            if x < 0:
                raise ModelParseError(f"negative entry H[{i + 1},{j + 1}]", rn)
        if sum(vals) > 1.0 + PROB_TOL:
            raise ModelParseError(f"row {i + 1} sum exceeds 1 ({sum(vals)!r})", rn)
    try:
        return ModelTriplet(np.array([r for _, r in rows]), np.array(g), m)
    except InvalidArgumentError as exc:
        raise ModelParseError(str(exc), last_no) from exc


def _life(fields, last_no) -> LifeLaw:
    m = _m(fields, last_no)
    n, col, val = fields["life d"]
    d = _floats(val, n, col)
    tail_spec = fields.get("tail", (last_no, 1, "zero"))
    tn, tcol, tval = tail_spec
    parts = tval.split()
    if not parts:
        raise ModelParseError("tail needs a rule", tn, tcol)
    kind = parts[0]
    try:
        if kind == "zero" and len(parts) == 1:
            if not d:
                raise ModelParseError("life d needs at least one value", n, col)
            return LifeLaw(d, m, ZeroTail())
        if kind == "geometric" and len(parts) == 2:
            if not d:
                raise ModelParseError("life d needs at least one value", n, col)
            return LifeLaw(d, m, GeometricTail(float(parts[1])))
        if kind == "example1" and len(parts) == 4:
            gamma, k = float(parts[1]), float(parts[2])
            c = [float(x) for x in parts[3].split(",")]
            law, _ = example1_law(c, gamma, k, m, n_prefix=max(EXAMPLE1_PREFIX, len(d)))
            if d and not np.allclose(law.d[: len(d)], d, rtol=1e-12, atol=0.0):
                raise ModelParseError("life d disagrees with the example1 tail formula", n, col)
            return law
    except ModelParseError:
        raise
    except (ValueError, InvalidArgumentError) as exc:
        raise ModelParseError(str(exc), tn, tcol) from exc
    raise ModelParseError(f"bad tail rule {tval.strip()!r}", tn, tcol)


def _fmt(xs) -> str:
    return " ".join(repr(float(x)) for x in np.atleast_1d(xs))


def serialize_model(model: Model) -> str:
    """Inverse of :func:`parse_model`; floats are written with ``repr`` so they round-trip exactly."""
    out = [HEADER]
    if isinstance(model, ModelTriplet):
        out += [f"types = {model.dim}", f"m = {model.m!r}", f"g = {_fmt(model.g)}", "H ="]
        out += [_fmt(row) for row in model.H]
    elif isinstance(model, LifeLaw):
        out.append(f"m = {model.m!r}")
        tail = model.tail
        if isinstance(tail, Example1Tail):
            out += ["life d =", "tail = " + tail.describe()]
        elif isinstance(tail, (ZeroTail, GeometricTail)):
            out += [f"life d = {_fmt(model.d)}", "tail = " + tail.describe()]
        else:
            raise InvalidArgumentError(f"tail rule {tail.describe()!r} has no file representation")
    else:
        raise InvalidArgumentError(f"cannot serialize {type(model).__name__}")
    return "\n".join(out) + "\n"


def write_model(model: Model, path: str | os.PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(serialize_model(model))
