"""Take-Off Performance DSR data model and its JSON document format.

A document is parsed leniently at the cell level: a value cell is ``None``
(missing), a ``float`` (number) or a ``str`` (raw text kept verbatim for the
QA checks). Only broken container syntax is rejected.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Union

DSR_TYPE = "take_off_performance"
ALWAYS = "always"

STATE_SYMBOLS = ("theta", "psi", "phi", "h")
PERFORMANCE_SYMBOLS = ("dxy", "dh_ov")
ANGLE_SYMBOLS = ("theta", "psi", "phi")
RANGE_CELLS = ("initial_min", "initial_max", "final_min", "final_max")

UNITS = ("degree", "meter", "second")
UNIT_ALIASES = {
    "degree": "degree",
    "deg": "degree",
    "meter": "meter",
    "m": "meter",
    "second": "second",
    "s": "second",
}
# unit each known symbol is measured in
CANONICAL_UNITS = {
    "theta": "degree",
    "psi": "degree",
    "phi": "degree",
    "h": "meter",
    "dxy": "meter",
    "dh_ov": "meter",
}
ROLES = ("state", "performance")

Cell = Union[None, float, str]
When = Union[str, float]


class DsrSyntaxError(ValueError):
    """The document is not well-formed (container syntax, keys, structure)."""


class UnsupportedDsrType(ValueError):
    pass


class NonNumericBound(ValueError):
    pass


def normalize_unit(raw: Cell) -> Cell:
    """Map unit aliases onto their canonical identifier; leave anything else as-is."""
    if isinstance(raw, str):
        return UNIT_ALIASES.get(raw.strip().lower(), raw)
    return raw


def is_number(cell: Cell) -> bool:
    return isinstance(cell, float)


def is_unit(cell: Cell) -> bool:
    return isinstance(cell, str) and cell in UNITS


@dataclass(frozen=True)
class ParameterDecl:
    symbol: str
    display_name: str
    unit: Cell
    role: str


@dataclass(frozen=True)
class ConditionsRow:
    symbol: str
    initial_min: Cell = None
    initial_max: Cell = None
    final_min: Cell = None
    final_max: Cell = None
    unit: Cell = None

    def cells(self) -> dict[str, Cell]:
        return {name: getattr(self, name) for name in RANGE_CELLS + ("unit",)}

    @property
    def dbt_clean(self) -> bool:
        if not all(is_number(getattr(self, c)) for c in RANGE_CELLS):
            return False
        if not is_unit(self.unit):
            return False
        return self.initial_min <= self.initial_max and self.final_min <= self.final_max


@dataclass(frozen=True)
class DeviationEntry:
    when: When
    bound: Cell = None
    unit: Cell = None

    @property
    def is_always(self) -> bool:
        return self.when == ALWAYS

    @property
    def row_key(self) -> str:
        return ALWAYS if self.is_always else format_number(self.when)


@dataclass(frozen=True)
class TakeOffDsr:
    id: str
    parameters: tuple[ParameterDecl, ...] = ()
    conditions: tuple[ConditionsRow, ...] = ()
    horizontal_deviation: tuple[DeviationEntry, ...] = ()
    altitude_deviation: tuple[DeviationEntry, ...] = ()

    def parameter(self, symbol: str) -> ParameterDecl | None:
        for p in self.parameters:
            if p.symbol == symbol:
                return p
        return None

    def row(self, symbol: str) -> ConditionsRow | None:
        for r in self.conditions:
            if r.symbol == symbol:
                return r
        return None


def format_number(value: float) -> str:
    """Shortest round-trip decimal, with integral values written without '.0'."""
    text = repr(float(value))
    return text[:-2] if text.endswith(".0") else text


def effective_bound(table, t: float) -> float | None:
    """Tightest bound in force at time ``t``.

    An ``always`` entry holds at every time; a timed entry holds from its time
    onwards. Returns None when nothing applies yet.
    """
    applicable = [e for e in table if e.is_always or e.when <= t]
    if not applicable:
        return None
    for e in applicable:
        if not is_number(e.bound):
            raise NonNumericBound(f"deviation entry {e.row_key!r} has non-numeric bound {e.bound!r}")
    return min(e.bound for e in applicable)


def always_bound(table) -> Cell:
    for e in table:
        if e.is_always:
            return e.bound
    return None


# -- parsing -----------------------------------------------------------------

_TOP_LEVEL = ("dsr_type", "id", "parameters", "conditions", "horizontal_deviation", "altitude_deviation")
_PARAM_KEYS = ("symbol", "name", "unit", "role")
_ROW_KEYS = ("symbol",) + RANGE_CELLS + ("unit",)
_ENTRY_KEYS = ("when", "bound", "unit")


def _no_duplicates(pairs):
    obj = {}
    for key, value in pairs:
        if key in obj:
            raise DsrSyntaxError(f"duplicate key {key!r}")
        obj[key] = value
    return obj


def _reject_constant(name):
    raise DsrSyntaxError(f"non-finite number {name} is not allowed")


def load_json(data: bytes | str):
    """Strict JSON load shared by every document reader in the package."""
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise DsrSyntaxError(f"document is not UTF-8: {exc}") from None
    try:
        return json.loads(data, object_pairs_hook=_no_duplicates, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise DsrSyntaxError(str(exc)) from None


def _check_keys(obj, allowed, where, required=()):
    if not isinstance(obj, dict):
        raise DsrSyntaxError(f"{where}: expected an object, got {type(obj).__name__}")
    unknown = set(obj) - set(allowed)
    if unknown:
        raise DsrSyntaxError(f"{where}: unknown field(s) {sorted(unknown)}")
    for key in required:
        if key not in obj:
            raise DsrSyntaxError(f"{where}: missing field {key!r}")


def _cell(value, where) -> Cell:
    if value is None or isinstance(value, str):
        return value
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise DsrSyntaxError(f"{where}: cell must be a number, string or null")
    value = float(value)
    if not math.isfinite(value):
        raise DsrSyntaxError(f"{where}: number out of range")
    return value


def _text(value, where) -> str:
    if not isinstance(value, str):
        raise DsrSyntaxError(f"{where}: expected a string")
    return value


def _list(obj, key):
    value = obj.get(key, [])
    if not isinstance(value, list):
        raise DsrSyntaxError(f"{key}: expected an array")
    return value


def _parse_entries(items, name) -> tuple[DeviationEntry, ...]:
    entries = []
    for i, item in enumerate(items):
        where = f"{name}[{i}]"
        _check_keys(item, _ENTRY_KEYS, where, required=("when",))
        when = item["when"]
        if isinstance(when, str):
            if when.strip().lower() != ALWAYS:
                raise DsrSyntaxError(f"{where}: 'when' must be \"always\" or a positive number")
            when = ALWAYS
        else:
            when = _cell(when, where + ".when")
            if when is None or when <= 0:
                raise DsrSyntaxError(f"{where}: 'when' must be \"always\" or a positive number")
        entries.append(
            DeviationEntry(
                when=when,
                bound=_cell(item.get("bound"), where + ".bound"),
                unit=normalize_unit(_cell(item.get("unit"), where + ".unit")),
            )
        )
    if sum(e.is_always for e in entries) > 1:
        raise DsrSyntaxError(f"{name}: more than one 'always' entry")
    timed = sorted(e.when for e in entries if not e.is_always)
    if len(set(timed)) != len(timed):
        raise DsrSyntaxError(f"{name}: duplicate time steps")
    always = [e for e in entries if e.is_always]
    timed_entries = sorted((e for e in entries if not e.is_always), key=lambda e: e.when)
    return tuple(always + timed_entries)


def parse_dsr_document(data: bytes | str) -> TakeOffDsr:
    doc = load_json(data)
    _check_keys(doc, _TOP_LEVEL, "document", required=("dsr_type", "id"))
    if doc["dsr_type"] != DSR_TYPE:
        raise UnsupportedDsrType(f"unsupported dsr_type {doc['dsr_type']!r}")
    dsr_id = _text(doc["id"], "id")

    params = []
    for i, item in enumerate(_list(doc, "parameters")):
        where = f"parameters[{i}]"
        _check_keys(item, _PARAM_KEYS, where, required=("symbol", "role"))
        role = _text(item["role"], where + ".role")
        if role not in ROLES:
            raise DsrSyntaxError(f"{where}: role must be one of {ROLES}")
        params.append(
            ParameterDecl(
                symbol=_text(item["symbol"], where + ".symbol"),
                display_name=_text(item.get("name", ""), where + ".name"),
                unit=normalize_unit(_cell(item.get("unit"), where + ".unit")),
                role=role,
            )
        )
    symbols = [p.symbol for p in params]
    if len(set(symbols)) != len(symbols):
        raise DsrSyntaxError("parameters: duplicate symbol")

    rows = []
    for i, item in enumerate(_list(doc, "conditions")):
        where = f"conditions[{i}]"
        _check_keys(item, _ROW_KEYS, where, required=("symbol",))
        cells = {c: _cell(item.get(c), f"{where}.{c}") for c in RANGE_CELLS}
        rows.append(
            ConditionsRow(
                symbol=_text(item["symbol"], where + ".symbol"),
                unit=normalize_unit(_cell(item.get("unit"), where + ".unit")),
                **cells,
            )
        )
    row_symbols = [r.symbol for r in rows]
    if len(set(row_symbols)) != len(row_symbols):
        raise DsrSyntaxError("conditions: duplicate row symbol")

    return TakeOffDsr(
        id=dsr_id,
        parameters=tuple(params),
        conditions=tuple(rows),
        horizontal_deviation=_parse_entries(_list(doc, "horizontal_deviation"), "horizontal_deviation"),
        altitude_deviation=_parse_entries(_list(doc, "altitude_deviation"), "altitude_deviation"),
    )


def dsr_to_dict(dsr: TakeOffDsr) -> dict:
    def entry(e):
        return {"when": e.when, "bound": e.bound, "unit": e.unit}

    return {
        "dsr_type": DSR_TYPE,
        "id": dsr.id,
        "parameters": [
            {"symbol": p.symbol, "name": p.display_name, "unit": p.unit, "role": p.role} for p in dsr.parameters
        ],
        "conditions": [{"symbol": r.symbol, **r.cells()} for r in dsr.conditions],
        "horizontal_deviation": [entry(e) for e in dsr.horizontal_deviation],
        "altitude_deviation": [entry(e) for e in dsr.altitude_deviation],
    }


def serialize_dsr_document(dsr: TakeOffDsr) -> bytes:
    text = json.dumps(dsr_to_dict(dsr), indent=2, ensure_ascii=False, allow_nan=False)
    return (text + "\n").encode("utf-8")
