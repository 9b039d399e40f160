"""Defect-based testing: partition, sample, simulate, score, consolidate.

Defect values are plain floats: a finite non-negative number, or
``math.inf`` when the scenario violates its bound. Float ordering then
gives the required total order, and ``inf`` absorbs under addition.
"""
from __future__ import annotations

import bisect
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .dsr_model import TakeOffDsr, always_bound, format_number, is_number, load_json
from .sim import EmptyTrajectory, Trajectory, altitude_deviation_series

MASK64 = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
AXES = ("theta", "psi", "h")
# stride between partitions in the sub-seed derivation
SEED_STRIDE = 1 << 6


class InvalidSpec(ValueError):
    pass


class OutOfRange(ValueError):
    pass


class NotDbtReady(ValueError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class EmptyInput(ValueError):
    pass


# -- seeded randomness -------------------------------------------------------

def _mix64(z: int) -> int:
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK64
    return z ^ (z >> 31)


def splitmix64(x: int) -> int:
    """First output of a SplitMix64 generator seeded with ``x``."""
    return _mix64((x + GAMMA) & MASK64)


class SplitMix64:
    def __init__(self, seed: int):
        self.state = seed & MASK64

    def next_u64(self) -> int:
        self.state = (self.state + GAMMA) & MASK64
        return _mix64(self.state)

    def uniform(self) -> float:
        """Uniform double in [0, 1) with 53 random bits."""
        return (self.next_u64() >> 11) * 2.0**-53


def derive_sub_seed(master_seed: int, partition_ordinal: int, scenario_index: int) -> int:
    inner = splitmix64((partition_ordinal * SEED_STRIDE + scenario_index + 1) & MASK64)
    return splitmix64((master_seed & MASK64) ^ inner)


# -- partitions --------------------------------------------------------------

@dataclass(frozen=True)
class Interval:
    lo: float
    hi: float
    closed_left: bool

    def __contains__(self, v) -> bool:
        if self.closed_left:
            return self.lo <= v <= self.hi
        return self.lo < v <= self.hi

    @property
    def label(self) -> str:
        left = "[" if self.closed_left else "]"
        return f"{left}{format_number(self.lo)},{format_number(self.hi)}]"

    def sample(self, u: float) -> float:
        """Map ``u`` in [0, 1) affinely into the interval."""
        width = self.hi - self.lo
        if self.closed_left:
            return min(self.lo + u * width, self.hi)
        # anchored at the closed end so u = 0 lands on hi, never on lo
        v = self.hi - u * width
        if v <= self.lo:
            v = math.nextafter(self.lo, math.inf)
        return min(v, self.hi)


def axis_intervals(breaks) -> list[Interval]:
    return [Interval(float(a), float(b), i == 0) for i, (a, b) in enumerate(zip(breaks, breaks[1:]))]


@dataclass(frozen=True)
class PartitionSpec:
    theta_breaks: tuple[float, ...]
    psi_breaks: tuple[float, ...]
    h_breaks: tuple[float, ...]

    def __post_init__(self):
        for axis in AXES:
            raw = getattr(self, f"{axis}_breaks")
            try:
                breaks = tuple(float(b) for b in raw)
            except (TypeError, ValueError):
                raise InvalidSpec(f"{axis}_breaks must be a list of numbers") from None
            if len(breaks) < 2:
                raise InvalidSpec(f"{axis}_breaks needs at least 2 entries")
            if not all(math.isfinite(b) for b in breaks):
                raise InvalidSpec(f"{axis}_breaks must be finite")
            if any(b >= c for b, c in zip(breaks, breaks[1:])):
                raise InvalidSpec(f"{axis}_breaks must be strictly increasing")
            object.__setattr__(self, f"{axis}_breaks", breaks)

    @property
    def shape(self) -> tuple[int, int, int]:
        return tuple(len(getattr(self, f"{a}_breaks")) - 1 for a in AXES)

    def breaks(self, axis: str) -> tuple[float, ...]:
        return getattr(self, f"{axis}_breaks")

    def to_dict(self) -> dict:
        return {f"{a}_breaks": list(self.breaks(a)) for a in AXES}

    @classmethod
    def from_dict(cls, obj) -> "PartitionSpec":
        keys = {f"{a}_breaks" for a in AXES}
        if not isinstance(obj, dict) or set(obj) != keys:
            raise InvalidSpec(f"partition spec must have exactly the fields {sorted(keys)}")
        return cls(**obj)

    @classmethod
    def from_json(cls, data) -> "PartitionSpec":
        return cls.from_dict(load_json(data))


DEFAULT_PARTITION_SPEC = PartitionSpec((0, 6, 12, 20), (0, 120, 240, 360), (0, 1, 2, 3))


@dataclass(frozen=True)
class Partition:
    index: tuple[int, int, int]
    ordinal: int
    theta_iv: Interval
    psi_iv: Interval
    h_iv: Interval

    def __contains__(self, point) -> bool:
        theta, psi, h = point
        return theta in self.theta_iv and psi in self.psi_iv and h in self.h_iv

    def to_dict(self) -> dict:
        return {
            "ordinal": self.ordinal,
            "index": list(self.index),
            "theta": self.theta_iv.label,
            "psi": self.psi_iv.label,
            "h": self.h_iv.label,
        }


def build_partitions(spec: PartitionSpec) -> list[Partition]:
    """Cartesian grid of axis intervals, theta outermost and h innermost."""
    thetas, psis, hs = (axis_intervals(spec.breaks(a)) for a in AXES)
    parts = []
    for i, ti in enumerate(thetas):
        for j, pj in enumerate(psis):
            for k, hk in enumerate(hs):
                parts.append(Partition((i, j, k), len(parts), ti, pj, hk))
    return parts


def _axis_index(breaks, v, axis) -> int:
    if not (breaks[0] <= v <= breaks[-1]):
        raise OutOfRange(f"{axis} = {v} outside [{breaks[0]}, {breaks[-1]}]")
    if v == breaks[0]:
        return 0
    return bisect.bisect_left(breaks, v) - 1


def partition_index(spec: PartitionSpec, theta0, psi0, h_target) -> tuple[int, int, int]:
    return tuple(_axis_index(spec.breaks(a), float(v), a) for a, v in zip(AXES, (theta0, psi0, h_target)))


def flat_ordinal(spec: PartitionSpec, index) -> int:
    _, n_psi, n_h = spec.shape
    i, j, k = index
    return (i * n_psi + j) * n_h + k


def check_spec_against_dsr(spec: PartitionSpec, dsr: TakeOffDsr):
    """Outer breaks must stay inside the ranges the requirement admits."""
    limits = {"theta": ("initial_min", "initial_max"), "psi": ("initial_min", "initial_max"), "h": ("final_min", "final_max")}
    for axis, (lo_cell, hi_cell) in limits.items():
        row = dsr.row(axis)
        if row is None:
            raise InvalidSpec(f"requirement has no conditions row for {axis}")
        lo, hi = getattr(row, lo_cell), getattr(row, hi_cell)
        breaks = spec.breaks(axis)
        if not (is_number(lo) and is_number(hi)) or breaks[0] < lo or breaks[-1] > hi:
            raise InvalidSpec(f"{axis} breaks [{breaks[0]}, {breaks[-1]}] exceed the admitted range [{lo}, {hi}]")


# -- scenarios ---------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    theta0: float
    psi0: float
    phi0: float
    h_target: float
    partition_index: tuple[int, int, int]
    scenario_index: int
    sub_seed: int

    def to_dict(self) -> dict:
        return {
            "theta0": self.theta0,
            "psi0": self.psi0,
            "phi0": self.phi0,
            "h_target": self.h_target,
            "partition_index": list(self.partition_index),
            "scenario_index": self.scenario_index,
            "sub_seed": self.sub_seed,
        }

    @classmethod
    def from_dict(cls, d) -> "Scenario":
        return cls(
            float(d["theta0"]),
            float(d["psi0"]),
            float(d["phi0"]),
            float(d["h_target"]),
            tuple(d["partition_index"]),
            int(d["scenario_index"]),
            int(d["sub_seed"]),
        )


def generate_scenarios(partition: Partition, n: int, master_seed: int) -> list[Scenario]:
    if n < 1:
        raise ValueError("n must be at least 1")
    out = []
    for s in range(n):
        seed = derive_sub_seed(master_seed, partition.ordinal, s)
        rng = SplitMix64(seed)
        theta = partition.theta_iv.sample(rng.uniform())
        psi = partition.psi_iv.sample(rng.uniform())
        h = partition.h_iv.sample(rng.uniform())
        out.append(Scenario(theta, psi, 0.0, h, partition.index, s, seed))
    return out


# -- scoring -----------------------------------------------------------------

class DefectValues(NamedTuple):
    horizontal: float
    altitude: float
    max_horizontal_dev: float
    max_altitude_dev: float | None


def defect_value(margin: float) -> float:
    """Reciprocal margin; a margin of zero or less is a violation."""
    return math.inf if margin <= 0 else 1.0 / margin


def bound_series(table, t: np.ndarray) -> np.ndarray:
    """Vectorised effective bound at each time in ``t`` (inf where none applies)."""
    bound = np.full(t.shape, math.inf)
    for e in table:
        if e.is_always:
            bound = np.minimum(bound, e.bound)
        else:
            bound = np.where(t >= e.when, np.minimum(bound, e.bound), bound)
    return bound


def _require_scoreable(dsr: TakeOffDsr):
    for name in ("horizontal_deviation", "altitude_deviation"):
        table = getattr(dsr, name)
        if not is_number(always_bound(table)) or not all(is_number(e.bound) for e in table):
            raise NotDbtReady(f"{name} table needs a numeric 'always' bound and numeric entries")


def compute_defect_value(trajectory: Trajectory, dsr: TakeOffDsr, h_target: float) -> DefectValues:
    _require_scoreable(dsr)
    if len(trajectory) == 0:
        raise EmptyTrajectory("trajectory has no samples")

    hdev = np.hypot(trajectory.x, trajectory.y)
    h_margin = float(np.min(bound_series(dsr.horizontal_deviation, trajectory.t) - hdev))

    series = altitude_deviation_series(trajectory, h_target)
    if series is None:
        dfb_alt, max_adev = math.inf, None
    else:
        t_rebased, adev = series
        a_margin = float(np.min(bound_series(dsr.altitude_deviation, t_rebased) - adev))
        dfb_alt, max_adev = defect_value(a_margin), float(np.max(adev))
    return DefectValues(defect_value(h_margin), dfb_alt, float(np.max(hdev)), max_adev)


def consolidate(values) -> float:
    """Sum of scenario defect values, left to right; ``inf`` absorbs."""
    values = list(values)
    if not values:
        raise EmptyInput("nothing to consolidate")
    total = 0.0
    for v in values:
        if v == math.inf:
            return math.inf
        total += v
    return total


# -- campaigns ---------------------------------------------------------------

@dataclass(frozen=True)
class ScenarioOutcome:
    scenario: Scenario
    max_horizontal_dev: float
    max_altitude_dev: float | None
    dfb_horizontal: float
    dfb_altitude: float


@dataclass(frozen=True)
class PartitionOutcome:
    partition: Partition
    dfb_horizontal: float
    dfb_altitude: float
    violations_horizontal: int
    violations_altitude: int


def _dfb_out(v: float):
    return "inf" if v == math.inf else v


def _dfb_in(v) -> float:
    if v == "inf":
        return math.inf
    v = float(v)
    if not (math.isfinite(v) and v >= 0):
        raise ValueError(f"bad defect value {v!r}")
    return v


@dataclass(frozen=True)
class CampaignResult:
    dsr_id: str
    spec: PartitionSpec
    master_seed: int
    scenarios_per_partition: int
    per_scenario: tuple[ScenarioOutcome, ...]
    per_partition: tuple[PartitionOutcome, ...]
    backend: dict | None = None

    def to_dict(self) -> dict:
        return {
            "dsr_id": self.dsr_id,
            "spec": self.spec.to_dict(),
            "master_seed": self.master_seed,
            "scenarios_per_partition": self.scenarios_per_partition,
            "backend": self.backend,
            "per_scenario": [
                {
                    "scenario": o.scenario.to_dict(),
                    "max_horizontal_dev": o.max_horizontal_dev,
                    "max_altitude_dev": o.max_altitude_dev,
                    "dfb_horizontal": _dfb_out(o.dfb_horizontal),
                    "dfb_altitude": _dfb_out(o.dfb_altitude),
                }
                for o in self.per_scenario
            ],
            "per_partition": [
                {
                    **p.partition.to_dict(),
                    "dfb_horizontal": _dfb_out(p.dfb_horizontal),
                    "dfb_altitude": _dfb_out(p.dfb_altitude),
                    "violations_horizontal": p.violations_horizontal,
                    "violations_altitude": p.violations_altitude,
                }
                for p in self.per_partition
            ],
        }

    def to_json(self) -> bytes:
        return (json.dumps(self.to_dict(), indent=2, allow_nan=False) + "\n").encode("utf-8")

    @classmethod
    def from_json(cls, data) -> "CampaignResult":
        d = load_json(data)
        spec = PartitionSpec.from_dict(d["spec"])
        parts = {p.ordinal: p for p in build_partitions(spec)}
        per_scenario = tuple(
            ScenarioOutcome(
                Scenario.from_dict(o["scenario"]),
                float(o["max_horizontal_dev"]),
                None if o["max_altitude_dev"] is None else float(o["max_altitude_dev"]),
                _dfb_in(o["dfb_horizontal"]),
                _dfb_in(o["dfb_altitude"]),
            )
            for o in d["per_scenario"]
        )
        per_partition = tuple(
            PartitionOutcome(
                parts[int(p["ordinal"])],
                _dfb_in(p["dfb_horizontal"]),
                _dfb_in(p["dfb_altitude"]),
                int(p["violations_horizontal"]),
                int(p["violations_altitude"]),
            )
            for p in d["per_partition"]
        )
        return cls(
            d["dsr_id"], spec, int(d["master_seed"]), int(d["scenarios_per_partition"]),
            per_scenario, per_partition, d.get("backend"),
        )


def run_campaign(dsr: TakeOffDsr, spec: PartitionSpec, n: int, master_seed: int, backend, baseline=None, jobs: int = 1) -> CampaignResult:
    """QA gate, partitioning, sampling, simulation and scoring, end to end.

    The requirement is checked against ``baseline`` (the packaged take-off
    baseline when omitted) and the campaign refuses to run on a defective
    requirement. ``jobs`` only affects wall time, never the result.
    """
    from .qa import load_default_baseline, run_all_checks

    report = run_all_checks(dsr, baseline if baseline is not None else load_default_baseline())
    if not report.dbt_ready:
        raise NotDbtReady(f"requirement {dsr.id!r} is not ready for testing ({len(report.findings)} findings)", report)
    check_spec_against_dsr(spec, dsr)
    if n < 1:
        raise ValueError("scenarios_per_partition must be at least 1")

    partitions = build_partitions(spec)
    scenarios = [s for p in partitions for s in generate_scenarios(p, n, master_seed)]

    def score(job):
        ordinal, scenario = job
        traj = backend(scenario, ordinal)
        return compute_defect_value(traj, dsr, scenario.h_target)

    jobs_list = list(enumerate(scenarios))
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            scores = list(pool.map(score, jobs_list))
    else:
        scores = [score(j) for j in jobs_list]

    per_scenario = tuple(
        ScenarioOutcome(s, v.max_horizontal_dev, v.max_altitude_dev, v.horizontal, v.altitude)
        for s, v in zip(scenarios, scores)
    )
    per_partition = []
    for p in partitions:
        mine = per_scenario[p.ordinal * n:(p.ordinal + 1) * n]
        hs = [o.dfb_horizontal for o in mine]
        als = [o.dfb_altitude for o in mine]
        per_partition.append(
            PartitionOutcome(
                p, consolidate(hs), consolidate(als),
                sum(v == math.inf for v in hs), sum(v == math.inf for v in als),
            )
        )
    describe = getattr(backend, "describe", None)
    return CampaignResult(
        dsr.id, spec, master_seed, n, per_scenario, tuple(per_partition),
        describe() if describe else None,
    )
