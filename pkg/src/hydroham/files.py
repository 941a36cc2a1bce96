"""File formats for operators, systems and point maps.

Every expression is a string in the kernel grammar.  Operators have a plain
text form, one matrix row per line with entries split at top-level commas::

    components: 2
    direction: x
    fields: u, v          # optional, defaults to u, v, w
    g:
      0, 0
      0, 1
    b[1]:                 # b^{ij}_1, one block per k; omitted blocks are zero
      0, 0
      0, 0
    omega:
      0, -u
      u, 0

and an equivalent JSON form::

    {"fields": ["u", "v"], "direction": "x", "constants": ["a"],
     "g": [["0", "0"], ["0", "1"]],
     "velocity": [["0", "0"], ["0", "0"]],        # b^{ij}_k u^k_x, optional
     "omega": [["0", "-u"], ["u", "0"]]}

``"b"`` (an n x n x n array) may replace ``"velocity"``; ``"surds"`` lists
extra radicands (``[2, "1+w^2"]``).  A system file has ``fields``,
``direction`` (the evolution variable) and ``rhs``; a map file has
``source``, ``target``, ``forward`` (new in terms of old) and ``inverse``.
"""

from __future__ import annotations

import json
import re
from pathlib import Path

from .operators import NonHomOperator
from .symkernel import ParseError, parse, to_text
from .symkernel.jets import default_fields
from .transform import PointMap
from .variational import EvolutionSystem


class FormatError(ValueError):
    """A file that is not valid JSON or misses required keys."""


def _load(source) -> dict:
    if isinstance(source, dict):
        return source
    text = Path(source).read_text() if not str(source).lstrip().startswith("{") else str(source)
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise FormatError("the top level must be an object")
    return data


def _need(data, key):
    if key not in data:
        raise FormatError(f"missing key {key!r}")
    return data[key]


def _square(m, n, what):
    if not isinstance(m, list) or len(m) != n or any(not isinstance(r, list) or len(r) != n for r in m):
        raise FormatError(f"{what} must be a {n} x {n} array")
    return m


def _parser(data, fields):
    constants = tuple(data.get("constants", ()))
    surds = tuple(data.get("surds", (2,)))
    functions: dict = {}

    def p(text):
        try:
            return parse(str(text), fields, constants, functions, surds)
        except ParseError:
            raise
        except (TypeError, ValueError) as exc:
            raise ParseError(str(exc), 0, str(text)) from exc

    return p


_SECTION = re.compile(r"^(g|omega|velocity|b\[(\d+)\]):\s*$")
_HEADER = re.compile(r"^(components|direction|fields|constants|surds):\s*(.*)$")


def _split_top(line: str) -> list[str]:
    out, depth, cur = [], 0, ""
    for ch in line:
        if ch == "," and depth == 0:
            out.append(cur.strip())
            cur = ""
            continue
        depth += (ch == "(") - (ch == ")")
        cur += ch
    out.append(cur.strip())
    return [x for x in out if x]


def _is_json(source) -> bool:
    if isinstance(source, dict):
        return True
    s = str(source)
    if s.lstrip().startswith("{"):
        return True
    if "\n" in s:
        return False
    return Path(s).read_text().lstrip().startswith("{")


def _text_source(source) -> str:
    s = str(source)
    return s if "\n" in s else Path(s).read_text()


def parse_operator_text(text: str) -> dict:
    """The text operator form, turned into the JSON-shaped dict load_operator reads."""
    data: dict = {}
    blocks: dict = {}
    current = None
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        m = _SECTION.match(line)
        if m:
            current = ("b", int(m.group(2))) if m.group(2) else m.group(1)
            blocks[current] = []
            continue
        m = _HEADER.match(line)
        if m and current is None:
            key, val = m.groups()
            if key == "components":
                try:
                    data["components"] = int(val)
                except ValueError:
                    raise FormatError(f"line {lineno}: components must be an integer") from None
            elif key == "direction":
                data["direction"] = val.strip()
            else:
                data[key] = [x.strip() for x in val.split(",") if x.strip()]
            continue
        if current is None:
            raise FormatError(f"line {lineno}: expected a header or a section, got {line!r}")
        blocks[current].append(_split_top(line))
    n = data.pop("components", None)
    if n is None:
        raise FormatError("missing header 'components'")
    data.setdefault("fields", list(default_fields(n)))
    if len(data["fields"]) != n:
        raise FormatError(f"{len(data['fields'])} field names for {n} components")
    if "surds" in data:
        data["surds"] = [int(x) if x.isdigit() else x for x in data["surds"]]
    if "g" not in blocks:
        raise FormatError("missing section 'g'")
    zero = [["0"] * n for _ in range(n)]
    data["g"] = blocks["g"]
    data["omega"] = blocks.get("omega", zero)
    if "velocity" in blocks:
        data["velocity"] = blocks["velocity"]
    bs = {k[1]: v for k, v in blocks.items() if isinstance(k, tuple)}
    if bs:
        if any(k < 1 or k > n for k in bs):
            raise FormatError(f"b[k] needs 1 <= k <= {n}")
        # file blocks are b^{ij}_k for fixed k; the array is indexed b[i][j][k]
        planes = [bs.get(k, zero) for k in range(1, n + 1)]
        for pl in planes:
            _square(pl, n, "b[k]")
        data["b"] = [[[planes[k][i][j] for k in range(n)] for j in range(n)] for i in range(n)]
    return data


def load_operator(source) -> NonHomOperator:
    """Read an operator from a path, a text/JSON string or a dict."""
    data = _load(source) if _is_json(source) else parse_operator_text(_text_source(source))
    fields = tuple(_need(data, "fields"))
    n = len(fields)
    direction = data.get("direction", "x")
    p = _parser(data, fields)
    g = [[p(x) for x in row] for row in _square(_need(data, "g"), n, "g")]
    omega = [[p(x) for x in row] for row in _square(data.get("omega", [["0"] * n] * n), n, "omega")]
    if "b" in data:
        b = data["b"]
        if len(b) != n:
            raise FormatError(f"b must be an {n} x {n} x {n} array")
        b = [[[p(x) for x in row] for row in _square(plane, n, "b")] for plane in b]
        return NonHomOperator.build(g, omega, b=b, fields=fields, direction=direction)
    vel = [[p(x) for x in row] for row in _square(data.get("velocity", [["0"] * n] * n), n, "velocity")]
    return NonHomOperator.build(g, omega, velocity=vel, fields=fields, direction=direction)


def dump_operator(C: NonHomOperator, constants=()) -> dict:
    return {
        "fields": list(C.fields),
        "direction": C.direction,
        "constants": list(constants),
        "g": [[to_text(x) for x in row] for row in C.g],
        "b": [[[to_text(x) for x in row] for row in plane] for plane in C.b],
        "omega": [[to_text(x) for x in row] for row in C.omega],
    }


def dump_operator_text(C: NonHomOperator, constants=(), surds=()) -> str:
    out = [f"components: {C.n}", f"direction: {C.direction}", "fields: " + ", ".join(C.fields)]
    if constants:
        out.append("constants: " + ", ".join(constants))
    if surds:
        out.append("surds: " + ", ".join(str(x) for x in surds))

    def block(name, m):
        out.append(f"{name}:")
        out.extend("  " + ", ".join(to_text(x) for x in row) for row in m)

    block("g", C.g)
    R = range(C.n)
    for k in R:
        plane = [[C.b[i][j][k] for j in R] for i in R]
        if any(x != 0 for row in plane for x in row):
            block(f"b[{k + 1}]", plane)
    block("omega", C.omega)
    return "\n".join(out) + "\n"


def load_system(source) -> EvolutionSystem:
    data = _load(source)
    fields = tuple(_need(data, "fields"))
    p = _parser(data, fields)
    rhs = _need(data, "rhs")
    if len(rhs) != len(fields):
        raise FormatError("one right-hand side per field")
    return EvolutionSystem(tuple(p(x) for x in rhs), data.get("direction", "t"), fields,
                           tuple(data.get("constants", ())))


def dump_system(s: EvolutionSystem) -> dict:
    return {"fields": list(s.fields), "direction": s.direction, "constants": list(s.constants),
            "rhs": [to_text(x) for x in s.rhs], "equations": s.equations()}


def load_map(source) -> PointMap:
    data = _load(source)
    src, tgt = tuple(_need(data, "source")), tuple(_need(data, "target"))
    fwd = [_parser(data, src)(x) for x in _need(data, "forward")]
    inv = [_parser(data, tgt)(x) for x in _need(data, "inverse")]
    return PointMap(tuple(fwd), tuple(inv), src, tgt)


def dumps(data: dict) -> str:
    """Canonical JSON: sorted keys, two-space indent, trailing newline."""
    return json.dumps(data, indent=2, sort_keys=True) + "\n"
