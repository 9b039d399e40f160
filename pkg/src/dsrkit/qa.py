"""Static quality checks for Take-Off Performance DSRs.

Each ``check_*`` function looks for one defect family and returns a list of
:class:`DefectFinding`. :func:`run_all_checks` merges them into a sorted,
de-duplicated :class:`DefectReport`.
"""
from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .dsr_model import (
    ANGLE_SYMBOLS,
    CANONICAL_UNITS,
    PERFORMANCE_SYMBOLS,
    RANGE_CELLS,
    STATE_SYMBOLS,
    UNITS,
    DsrSyntaxError,
    TakeOffDsr,
    always_bound,
    format_number,
    is_number,
    is_unit,
    load_json,
    normalize_unit,
)


class Category(str, Enum):
    OMISSION = "Omission"
    IMPRECISE = "Imprecise"
    CONTRADICTION = "Contradiction"
    INCORRECT_DOMAIN_LAW = "IncorrectDomainLaw"
    SUPERFLUOUS = "Superfluous"
    TRACEABILITY = "Traceability"


class Element(str, Enum):
    CONDITIONS = "Conditions"
    HORIZONTAL_DEVIATION = "HorizontalDeviation"
    ALTITUDE_DEVIATION = "AltitudeDeviation"
    PARAMETERS = "Parameters"


ERROR = "error"
WARNING = "warning"
WHOLE_ROW = "*"

_TABLES = (
    (Element.HORIZONTAL_DEVIATION, "horizontal_deviation", "dxy"),
    (Element.ALTITUDE_DEVIATION, "altitude_deviation", "dh_ov"),
)
_CATEGORY_ORDER = {c: i for i, c in enumerate(Category)}
_ELEMENT_ORDER = {e: i for i, e in enumerate(Element)}


@dataclass(frozen=True)
class DefectFinding:
    category: Category
    element: Element
    row: str
    cell: str
    message: str = field(compare=False)
    severity: str = field(default=ERROR, compare=False)

    @property
    def key(self):
        return (self.category, self.element, self.row, self.cell)

    def sort_key(self):
        return (_ELEMENT_ORDER[self.element], self.row, self.cell, _CATEGORY_ORDER[self.category])

    def to_dict(self) -> dict:
        return {
            "category": self.category.value,
            "element": self.element.value,
            "row": self.row,
            "cell": self.cell,
            "severity": self.severity,
            "message": self.message,
        }


@dataclass(frozen=True)
class DefectReport:
    dsr_id: str
    findings: tuple[DefectFinding, ...]
    dbt_ready: bool

    @property
    def errors(self):
        return [f for f in self.findings if f.severity == ERROR]

    def to_dict(self) -> dict:
        return {"dsr_id": self.dsr_id, "dbt_ready": self.dbt_ready, "findings": [f.to_dict() for f in self.findings]}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, ensure_ascii=False) + "\n"


# -- baseline ----------------------------------------------------------------

@dataclass(frozen=True)
class Constraint:
    symbol: str
    min: float
    max: float
    unit: str
    rationale: str = ""

    def __post_init__(self):
        if not self.min <= self.max:
            raise ValueError(f"constraint for {self.symbol}: min {self.min} > max {self.max}")
        if self.unit not in UNITS:
            raise ValueError(f"constraint for {self.symbol}: unknown unit {self.unit!r}")

    def admits(self, value: float) -> bool:
        return self.min <= value <= self.max


@dataclass(frozen=True)
class ConstraintSet:
    constraints: tuple[Constraint, ...]
    allowed_symbols: frozenset[str]

    def __post_init__(self):
        symbols = [c.symbol for c in self.constraints]
        if len(set(symbols)) != len(symbols):
            raise ValueError("at most one constraint per symbol")
        object.__setattr__(self, "allowed_symbols", frozenset(self.allowed_symbols) | set(symbols))

    def get(self, symbol: str) -> Constraint | None:
        for c in self.constraints:
            if c.symbol == symbol:
                return c
        return None

    def to_dict(self) -> dict:
        return {
            "allowed_symbols": sorted(self.allowed_symbols),
            "constraints": [
                {"symbol": c.symbol, "min": c.min, "max": c.max, "unit": c.unit, "rationale": c.rationale}
                for c in self.constraints
            ],
        }

    @classmethod
    def from_json(cls, data) -> "ConstraintSet":
        doc = load_json(data)
        if not isinstance(doc, dict) or set(doc) - {"allowed_symbols", "constraints"}:
            raise DsrSyntaxError("baseline must be an object with 'allowed_symbols' and 'constraints'")
        try:
            constraints = tuple(
                Constraint(
                    symbol=c["symbol"],
                    min=float(c["min"]),
                    max=float(c["max"]),
                    unit=normalize_unit(c["unit"]),
                    rationale=c.get("rationale", ""),
                )
                for c in doc.get("constraints", [])
            )
            return cls(constraints, frozenset(doc.get("allowed_symbols", [])))
        except (KeyError, TypeError, ValueError) as exc:
            raise DsrSyntaxError(f"malformed baseline: {exc}") from None


def load_default_baseline() -> ConstraintSet:
    """Baseline shipped with the package (theta in [0, 20] deg, psi in [0, 360] deg, phi = 0, h in [0, 3] m)."""
    return ConstraintSet.from_json(resources.files("dsrkit.data").joinpath("default_baseline.json").read_bytes())


# -- helpers -----------------------------------------------------------------

def _show(cell) -> str:
    if cell is None:
        return "missing"
    if isinstance(cell, float):
        return format_number(cell)
    return repr(cell)


def _is_single_number(text: str) -> bool:
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def _tables(dsr):
    for element, attr, symbol in _TABLES:
        yield element, getattr(dsr, attr), symbol


def _expected_unit(dsr: TakeOffDsr, symbol: str) -> str | None:
    decl = dsr.parameter(symbol)
    if decl is not None and is_unit(decl.unit):
        return decl.unit
    return CANONICAL_UNITS.get(symbol)


def _angle_reference_unit(dsr: TakeOffDsr) -> str:
    declared = [_expected_unit(dsr, s) for s in ANGLE_SYMBOLS if dsr.parameter(s) is not None]
    used = Counter(r.unit for r in dsr.conditions if r.symbol in ANGLE_SYMBOLS and is_unit(r.unit))
    if declared:
        return Counter(declared).most_common(1)[0][0]
    if used:
        # ties resolve alphabetically so the choice is stable
        return min(used, key=lambda u: (-used[u], u))
    return CANONICAL_UNITS["theta"]


# -- checks ------------------------------------------------------------------

def check_omission(dsr: TakeOffDsr) -> list[DefectFinding]:
    found = []
    for row in dsr.conditions:
        for name, cell in row.cells().items():
            if cell is None:
                found.append(DefectFinding(Category.OMISSION, Element.CONDITIONS, row.symbol, name, f"{row.symbol}: {name} is missing"))

    expected = [p.symbol for p in dsr.parameters if p.role == "state"]
    expected += [s for s in STATE_SYMBOLS if s not in expected]
    for symbol in expected:
        if dsr.row(symbol) is None:
            found.append(DefectFinding(Category.OMISSION, Element.CONDITIONS, symbol, WHOLE_ROW, f"no starting/final conditions for {symbol}"))

    for element, table, _ in _tables(dsr):
        for e in table:
            for name in ("bound", "unit"):
                if getattr(e, name) is None:
                    found.append(DefectFinding(Category.OMISSION, element, e.row_key, name, f"{element.value} {e.row_key}: {name} is missing"))
        if not any(e.is_always for e in table):
            found.append(DefectFinding(Category.OMISSION, element, "always", WHOLE_ROW, f"{element.value} has no 'always' entry"))
    return found


def check_imprecision(dsr: TakeOffDsr) -> list[DefectFinding]:
    found = []

    def value(element, row, name, cell):
        if isinstance(cell, str) and not _is_single_number(cell):
            found.append(DefectFinding(Category.IMPRECISE, element, row, name, f"{row}: {name} {cell!r} is not a single number"))

    def unit(element, row, cell):
        if cell is not None and not is_unit(cell):
            found.append(DefectFinding(Category.IMPRECISE, element, row, "unit", f"{row}: {_show(cell)} is not a unit"))

    for row in dsr.conditions:
        for name in RANGE_CELLS:
            value(Element.CONDITIONS, row.symbol, name, getattr(row, name))
        unit(Element.CONDITIONS, row.symbol, row.unit)
    for element, table, _ in _tables(dsr):
        for e in table:
            value(element, e.row_key, "bound", e.bound)
            unit(element, e.row_key, e.unit)
    for p in dsr.parameters:
        unit(Element.PARAMETERS, p.symbol, p.unit)
    return found


def _unit_conflict(element, row_key, cells: dict, unit_cell, expected, why) -> list[DefectFinding]:
    """Blame every non-zero number carried under a wrong or absent unit.

    A zero reads the same in any unit, so it is not blamed; a row with no
    non-zero number is blamed on its unit cell instead.
    """
    blamed = [name for name, c in cells.items() if is_number(c) and c != 0]
    message = f"{row_key}: unit {_show(unit_cell)} inconsistent with {expected!r} ({why})"
    return [DefectFinding(Category.CONTRADICTION, element, row_key, name, message) for name in blamed or ["unit"]]


def check_contradiction(dsr: TakeOffDsr) -> list[DefectFinding]:
    found = []
    angle_unit = _angle_reference_unit(dsr)
    for row in dsr.conditions:
        for side in ("initial", "final"):
            lo, hi = getattr(row, f"{side}_min"), getattr(row, f"{side}_max")
            if is_number(lo) and is_number(hi) and lo > hi:
                found.append(
                    DefectFinding(Category.CONTRADICTION, Element.CONDITIONS, row.symbol, f"{side}_max",
                                  f"{row.symbol}: {side} min {_show(lo)} exceeds max {_show(hi)}")
                )
        decl = dsr.parameter(row.symbol)
        declared = decl.unit if decl is not None and is_unit(decl.unit) else None
        if declared is not None and row.unit != declared:
            found += _unit_conflict(Element.CONDITIONS, row.symbol, {c: getattr(row, c) for c in RANGE_CELLS},
                                    row.unit, declared, "declared unit")
        elif row.symbol in ANGLE_SYMBOLS and row.unit != angle_unit:
            found += _unit_conflict(Element.CONDITIONS, row.symbol, {c: getattr(row, c) for c in RANGE_CELLS},
                                    row.unit, angle_unit, "other angle rows")

    for element, table, symbol in _tables(dsr):
        expected = _expected_unit(dsr, symbol)
        for e in table:
            if e.unit != expected:
                found += _unit_conflict(element, e.row_key, {"bound": e.bound}, e.unit, expected, f"unit of {symbol}")

    for p in dsr.parameters:
        canonical = CANONICAL_UNITS.get(p.symbol)
        if canonical and is_unit(p.unit) and p.unit != canonical:
            found.append(DefectFinding(Category.CONTRADICTION, Element.PARAMETERS, p.symbol, "unit",
                                       f"{p.symbol} is measured in {canonical}, declared as {p.unit}"))
        role = "performance" if p.symbol in PERFORMANCE_SYMBOLS else "state" if p.symbol in STATE_SYMBOLS else None
        if role and p.role != role:
            found.append(DefectFinding(Category.CONTRADICTION, Element.PARAMETERS, p.symbol, "role",
                                       f"{p.symbol} is a {role} variable, declared as {p.role}"))
    return found


def check_adequacy(dsr: TakeOffDsr, baseline: ConstraintSet) -> list[DefectFinding]:
    found = []
    for row in dsr.conditions:
        constraint = baseline.get(row.symbol)
        if constraint is None:
            if row.symbol in baseline.allowed_symbols:
                found.append(DefectFinding(Category.TRACEABILITY, Element.CONDITIONS, row.symbol, "symbol",
                                           f"{row.symbol} has no domain constraint in the baseline"))
            continue
        for name in RANGE_CELLS:
            cell = getattr(row, name)
            if is_number(cell) and not constraint.admits(cell):
                found.append(
                    DefectFinding(Category.INCORRECT_DOMAIN_LAW, Element.CONDITIONS, row.symbol, name,
                                  f"{row.symbol}: {name} {_show(cell)} outside admissible "
                                  f"[{_show(constraint.min)}, {_show(constraint.max)}] {constraint.unit}")
                )

    for element, table, symbol in _tables(dsr):
        constraint = baseline.get(symbol)
        for e in table:
            if not is_number(e.bound):
                continue
            if e.bound < 0 or (constraint is not None and not constraint.admits(e.bound)):
                found.append(DefectFinding(Category.INCORRECT_DOMAIN_LAW, element, e.row_key, "bound",
                                           f"{element.value} {e.row_key}: bound {_show(e.bound)} is not a realistic deviation"))
    return found


def check_pertinence(dsr: TakeOffDsr, baseline: ConstraintSet) -> list[DefectFinding]:
    found = []
    # deviation variables belong to the pattern itself, whatever the baseline lists
    pertinent = baseline.allowed_symbols | set(PERFORMANCE_SYMBOLS)
    for row in dsr.conditions:
        if row.symbol not in pertinent:
            found.append(DefectFinding(Category.SUPERFLUOUS, Element.CONDITIONS, row.symbol, WHOLE_ROW,
                                       f"{row.symbol} is not a take-off parameter"))
    for p in dsr.parameters:
        if p.symbol not in pertinent:
            found.append(DefectFinding(Category.SUPERFLUOUS, Element.PARAMETERS, p.symbol, WHOLE_ROW,
                                       f"{p.symbol} is not a take-off parameter"))
    for element, table, _ in _tables(dsr):
        ceiling = always_bound(table)
        if not is_number(ceiling):
            continue
        for e in table:
            if not e.is_always and is_number(e.bound) and e.bound > ceiling:
                found.append(
                    DefectFinding(Category.SUPERFLUOUS, element, e.row_key, "bound",
                                  f"{element.value} {e.row_key}: bound {_show(e.bound)} is looser than the "
                                  f"'always' bound {_show(ceiling)} and never takes effect",
                                  severity=WARNING)
                )
    return found


def check_traceability(dsr: TakeOffDsr) -> list[DefectFinding]:
    found = []
    declared = {p.symbol for p in dsr.parameters}
    for row in dsr.conditions:
        if row.symbol not in declared:
            found.append(DefectFinding(Category.TRACEABILITY, Element.CONDITIONS, row.symbol, "symbol",
                                       f"{row.symbol} is used but not declared in the maneuver parameters"))
    for element, table, symbol in _tables(dsr):
        if table and symbol not in declared:
            found.append(DefectFinding(Category.TRACEABILITY, element, WHOLE_ROW, "symbol",
                                       f"{element.value} constrains {symbol}, which is not declared"))
    return found


def run_all_checks(dsr: TakeOffDsr, baseline: ConstraintSet) -> DefectReport:
    merged = {}
    for f in (
        check_omission(dsr)
        + check_imprecision(dsr)
        + check_contradiction(dsr)
        + check_adequacy(dsr, baseline)
        + check_pertinence(dsr, baseline)
        + check_traceability(dsr)
    ):
        merged.setdefault(f.key, f)
    findings = tuple(sorted(merged.values(), key=DefectFinding.sort_key))

    ready = (
        not any(f.severity == ERROR for f in findings)
        and all(r.dbt_clean for r in dsr.conditions)
        and all(is_number(always_bound(table)) for _, table, _ in _tables(dsr))
    )
    return DefectReport(dsr.id, findings, ready)
