"""Problem configs: JSON in, validated pydantic models out, exact rationals throughout.

Every failure is a ConfigError carrying the dotted field path and, when the
field can be located in the source text, its line number.
"""

from __future__ import annotations

import json
import re
from fractions import Fraction
from typing import Annotated, Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, BeforeValidator, ConfigDict, Field, ValidationError, field_validator

from .errors import ConfigError

SCHEMA_VERSION = 1
REQUEST_KINDS = ("hh", "hc", "hp", "twisted", "spectral", "verify")
_RATIONAL = re.compile(r"^\s*([+-]?\d+)\s*(?:/\s*([+-]?\d+)\s*)?$")


def parse_rational(value) -> Fraction:
    """Exact rational from an int or a "p/q" string; floats and bools are refused."""
    if isinstance(value, bool) or isinstance(value, float):
        raise ValueError(f"{value!r} is not exact; write rationals as integers or 'p/q' strings")
    if isinstance(value, int):
        return Fraction(value)
    if isinstance(value, str):
        m = _RATIONAL.match(value)
        if not m:
            raise ValueError(f"malformed rational {value!r}")
        num, den = int(m.group(1)), int(m.group(2) or 1)
        if den == 0:
            raise ValueError(f"zero denominator in rational {value!r}")
        return Fraction(num, den)
    raise ValueError(f"expected a rational, got {type(value).__name__}")


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


def _canonical(value) -> str:
    return str(parse_rational(value))


# after validation a rational is its canonical string "p/q" (or "p")
Rational = Annotated[str, BeforeValidator(_canonical)]
Matrix = List[List[Rational]]


def _check_matrices(mats):
    for m in mats:
        if not m or any(len(row) != len(m) for row in m):
            raise ValueError("matrices must be square and nonempty")
    return mats


ALGEBRA_NAMES = ("polynomial", "truncated", "weyl", "symbol", "ground")


class AlgebraSpec(_Strict):
    name: Literal["polynomial", "truncated", "weyl", "symbol", "ground"]
    n: int = Field(1, ge=0, le=6)
    order: Optional[int] = Field(None, ge=1)
    fourier_cutoff: Optional[int] = Field(None, ge=0)
    window: Optional[Tuple[int, int]] = None
    sheets: int = Field(2, ge=1)
    sector: Optional[Literal["charge", "parity", "none"]] = None


class GroupSpec(_Strict):
    generators: List[Matrix]

    @field_validator("generators")
    @classmethod
    def _exact(cls, v):
        return _check_matrices(v)


class ActionSpec(_Strict):
    kind: Literal["linear", "explicit", "trivial"] = "linear"
    matrices: Optional[List[Matrix]] = None

    @field_validator("matrices")
    @classmethod
    def _exact(cls, v):
        return _check_matrices(v) if v is not None else v


class RequestSpec(_Strict):
    kind: Literal["hh", "hc", "hp", "twisted", "spectral", "verify"]
    degrees: Union[int, List[int]] = 2
    weights: Union[int, List[int]] = 3
    classes: Optional[List[int]] = None
    depth: Optional[int] = Field(None, ge=0)
    route: Optional[Literal["twisted", "crossed"]] = None

    def degree_list(self, cap=None) -> List[int]:
        return _as_range(self.degrees, cap)

    def weight_list(self, cap=None) -> List[int]:
        return _as_range(self.weights, cap)


def _as_range(v, cap):
    vals = list(range(v + 1)) if isinstance(v, int) else sorted(set(v))
    return [x for x in vals if x >= 0 and (cap is None or x <= cap)]


class ProblemConfig(_Strict):
    schema_: int = Field(SCHEMA_VERSION, alias="schema")
    algebra: Union[AlgebraSpec, str]
    group: Optional[GroupSpec] = None
    action: Optional[ActionSpec] = None
    request: List[RequestSpec] = Field(default_factory=list)

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("schema_")
    @classmethod
    def _schema(cls, v):
        if v != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema {v}; this engine reads schema {SCHEMA_VERSION}")
        return v

    @field_validator("algebra")
    @classmethod
    def _algebra(cls, v):
        return parse_algebra_string(v) if isinstance(v, str) else v

    def echo(self) -> dict:
        """Normalized config for the report (rationals already canonical strings)."""
        return self.model_dump(by_alias=True, mode="json")


def matrix_value(m) -> Tuple[Tuple[Fraction, ...], ...]:
    return tuple(tuple(Fraction(x) for x in row) for row in m)


_CALL = re.compile(r"^\s*([a-z_]+)\s*\(\s*([^()]*)\)\s*$")


def parse_algebra_string(text: str) -> AlgebraSpec:
    """'polynomial(2)', 'truncated(1, 4)', 'weyl(1)', 'symbol(2, -4, 4)', 'ground(3)'."""
    m = _CALL.match(text)
    if not m:
        raise ValueError(f"cannot parse algebra {text!r}; expected e.g. 'polynomial(1)'")
    name, raw = m.group(1), m.group(2)
    if name not in ALGEBRA_NAMES:
        raise ValueError(f"unknown algebra {name!r}; choose from {', '.join(ALGEBRA_NAMES)}")
    try:
        args = [int(a) for a in raw.split(",")] if raw.strip() else []
    except ValueError:
        raise ValueError(f"algebra arguments must be integers in {text!r}") from None
    if name in ("polynomial", "weyl", "ground") and len(args) == 1:
        return AlgebraSpec(name=name, n=args[0])
    if name == "truncated" and len(args) == 2:
        return AlgebraSpec(name=name, n=args[0], order=args[1])
    if name == "symbol" and len(args) == 3:
        return AlgebraSpec(name=name, fourier_cutoff=args[0], window=(args[1], args[2]))
    raise ValueError(f"wrong arguments for algebra {name!r} in {text!r}")


# -- locating fields in the source text -------------------------------------

def _field_lines(text: str) -> Dict[Tuple, int]:
    """Map JSON path tuples to the line on which their value starts."""
    dec = json.JSONDecoder()
    out: Dict[Tuple, int] = {}
    ws = re.compile(r"\s*")

    def line_of(i):
        return text.count("\n", 0, i) + 1

    def walk(i, path):
        i = ws.match(text, i).end()
        out[path] = line_of(i)
        c = text[i]
        if c == "{":
            i = ws.match(text, i + 1).end()
            if text[i] == "}":
                return i + 1
            while True:
                key, i = dec.raw_decode(text, ws.match(text, i).end())
                i = ws.match(text, i).end() + 1  # ':'
                i = walk(i, path + (key,))
                i = ws.match(text, i).end()
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        if c == "[":
            i = ws.match(text, i + 1).end()
            if text[i] == "]":
                return i + 1
            n = 0
            while True:
                i = walk(i, path + (n,))
                n += 1
                i = ws.match(text, i).end()
                if text[i] == ",":
                    i += 1
                    continue
                return i + 1
        _, j = dec.raw_decode(text, i)
        return j

    try:
        walk(0, ())
    except (ValueError, IndexError):
        pass
    return out


def _dotted(loc) -> str:
    parts = []
    for p in loc:
        if isinstance(p, int):
            parts.append(f"[{p}]")
        else:
            parts.append(("." if parts else "") + str(p))
    return "".join(parts)


def _line_for(lines: Dict[Tuple, int], loc) -> Optional[int]:
    loc = tuple(loc)
    while loc:
        if loc in lines:
            return lines[loc]
        loc = loc[:-1]
    return None


_UNION_TAGS = {"AlgebraSpec", "str", "int"}


def _clean_loc(loc):
    """Drop pydantic's union-branch tags from an error location."""
    out = []
    for p in loc:
        if isinstance(p, str) and (p in _UNION_TAGS or p.startswith("function-") or "[" in p):
            continue
        out.append("schema" if p == "schema_" else p)
    return tuple(out)


def load_config_text(text: str) -> ProblemConfig:
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise ConfigError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(raw, dict):
        raise ConfigError("config must be a JSON object", line=1)
    try:
        return ProblemConfig.model_validate(raw)
    except ValidationError as e:
        err = e.errors()[0]
        loc = _clean_loc(err["loc"])
        msg = err["msg"].removeprefix("Value error, ")
        lines = _field_lines(text)
        raise ConfigError(msg, field=_dotted(loc) or "<root>", line=_line_for(lines, loc)) from None


def line_of_field(text: str, dotted: str) -> Optional[int]:
    """Line of a dotted field path such as ``group.generators[0]`` in the config text."""
    loc = []
    for name, idx in re.findall(r"([A-Za-z_][A-Za-z0-9_]*)|\[(\d+)\]", dotted):
        loc.append(name if name else int(idx))
    return _line_for(_field_lines(text), loc)


def read_config_text(path: str) -> str:
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as e:
        raise ConfigError(f"cannot read config: {e.strerror}", field=path) from None


def load_config(path: str) -> ProblemConfig:
    return load_config_text(read_config_text(path))
