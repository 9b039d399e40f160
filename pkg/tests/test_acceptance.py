"""Exit criteria for the toolkit, one test per criterion.

Each test prints a ``[PASS]``/``[FAIL]`` line (visible with ``pytest -s`` or
in the terminal summary of ``pytest -v -rA``).
"""
import contextlib
import functools
import json
import math
import operator
import random
import time

import numpy as np
import pytest

from dsrkit.cli import main
from dsrkit.dbt import (
    DEFAULT_PARTITION_SPEC,
    build_partitions,
    compute_defect_value,
    consolidate,
    generate_scenarios,
    partition_index,
    run_campaign,
)
from dsrkit.dsr_model import ALWAYS, DeviationEntry
from dsrkit.sim import BuiltinBackend, ModelParams, Trajectory, simulate

from conftest import data_path

INF = math.inf


@pytest.fixture
def criterion(capsys):
    @contextlib.contextmanager
    def run(name):
        try:
            yield
        except BaseException as exc:
            with capsys.disabled():
                print(f"\n[FAIL] {name}: {exc!r}")
            raise
        with capsys.disabled():
            print(f"\n[PASS] {name}")

    return run


def in_interval(breaks, k, v):
    lo, hi = breaks[k], breaks[k + 1]
    return lo <= v <= hi if k == 0 else lo < v <= hi


def containing_partitions(point):
    spec = DEFAULT_PARTITION_SPEC
    return [
        (i, j, k)
        for i in range(3) for j in range(3) for k in range(3)
        if in_interval(spec.theta_breaks, i, point[0])
        and in_interval(spec.psi_breaks, j, point[1])
        and in_interval(spec.h_breaks, k, point[2])
    ]


def test_defective_reproduction(criterion, capsys, tmp_path):
    baseline = tmp_path / "baseline.json"
    baseline.write_text(json.dumps({
        "allowed_symbols": ["theta", "psi", "phi", "h"],
        "constraints": [
            {"symbol": "theta", "min": 0, "max": 20, "unit": "degree", "rationale": ""},
            {"symbol": "psi", "min": 0, "max": 360, "unit": "degree", "rationale": ""},
            {"symbol": "phi", "min": 0, "max": 0, "unit": "degree", "rationale": ""},
            {"symbol": "h", "min": 0, "max": 3, "unit": "meter", "rationale": ""},
        ],
    }))
    with criterion("Defective conditions table: findings on exactly the 8 red cells with expected categories"):
        status = main(["validate", data_path("takeoff_defective.dsr.json"), "--baseline", str(baseline), "--format", "json"])
        report = json.loads(capsys.readouterr().out)
        assert status == 1
        by_cell = {}
        for f in report["findings"]:
            assert f["element"] == "Conditions"
            by_cell.setdefault((f["row"], f["cell"]), set()).add(f["category"])
        red = {
            ("theta", "initial_max"): {"IncorrectDomainLaw"},
            ("psi", "initial_min"): {"Imprecise"},
            ("phi", "initial_max"): {"Omission"},
            ("phi", "unit"): {"Omission"},
            ("h", "initial_min"): {"Omission"},
            ("h", "initial_max"): {"Omission"},
            ("h", "final_min"): {"IncorrectDomainLaw"},
        }
        assert set(by_cell) == set(red) | {("phi", "initial_min")}
        for cell, categories in red.items():
            assert by_cell[cell] == categories, cell
        # the 0.001 roll cell: unit contradiction, plus the range reading under phi in [0, 0]
        assert "Contradiction" in by_cell[("phi", "initial_min")]
        assert by_cell[("phi", "initial_min")] <= {"Contradiction", "IncorrectDomainLaw"}


def test_campaign_scale(criterion, clean_dsr, tmp_path, capsys):
    with criterion("Campaign scale: 27 partitions x 2 scenarios in under 5 s"):
        start = time.perf_counter()
        status = main(["campaign", data_path("takeoff_clean.dsr.json"), data_path("takeoff_partitions.json"),
                       "--seed", "42", "--scenarios-per-partition", "2", "--out", str(tmp_path)])
        elapsed = time.perf_counter() - start
        assert status == 0
        result = json.loads((tmp_path / "campaign.json").read_text())
        assert len(result["per_scenario"]) == 54
        assert len(result["per_partition"]) == 27
        assert all("dfb_horizontal" in p and "dfb_altitude" in p for p in result["per_partition"])
        assert elapsed < 5.0, f"{elapsed:.2f} s"


def test_defect_formula_equivalence(criterion, clean_dsr):
    import dataclasses

    rng = random.Random(20240601)
    with criterion("Defect-formula equivalence on 1000 random (bound, max deviation) pairs"):
        for n in range(1000):
            delta = rng.uniform(0.01, 10.0)
            max_dev = delta if n % 50 == 0 else rng.uniform(0.0, 2.0 * delta)
            dsr = dataclasses.replace(clean_dsr, horizontal_deviation=(DeviationEntry(ALWAYS, delta, "meter"),))
            dev = np.array([0.0, rng.uniform(0, max_dev), max_dev, rng.uniform(0, max_dev)])
            zeros = np.zeros(4)
            traj = Trajectory(1.0, np.arange(4.0), dev, zeros, np.full(4, 9.0), zeros, zeros, zeros)
            got = compute_defect_value(traj, dsr, 1.0).horizontal
            if max_dev < delta:
                expected = 1.0 / (delta - max_dev)
                assert got != INF and abs(got - expected) <= 1e-12 * abs(expected), (delta, max_dev)
            else:
                assert got == INF, (delta, max_dev)


def test_consolidation_oracle(criterion):
    rng = random.Random(7)
    with criterion("Consolidation equals brute-force fold on 1000 random lists"):
        for _ in range(1000):
            values = [INF if rng.random() < 0.08 else rng.uniform(0, 100) for _ in range(rng.randint(1, 12))]
            expected = functools.reduce(operator.add, values, 0.0)
            assert consolidate(values) == expected
            if INF in values:
                assert consolidate(values) == INF


def test_partition_properties(criterion):
    spec = DEFAULT_PARTITION_SPEC
    rng = random.Random(3)

    def coordinate(breaks):
        # a quarter of the draws sit exactly on a break
        return rng.choice(breaks) if rng.random() < 0.25 else rng.uniform(breaks[0], breaks[-1])

    with criterion("Partition tiling, scenario containment and the (7.4, 101, 2.3) example"):
        for _ in range(10_000):
            point = tuple(coordinate(spec.breaks(a)) for a in ("theta", "psi", "h"))
            assert containing_partitions(point) == [partition_index(spec, *point)], point

        parts = build_partitions(spec)
        per = -(-10_000 // len(parts))
        scenarios = [s for p in parts for s in generate_scenarios(p, per, 42)]
        assert len(scenarios) >= 10_000
        for s in scenarios:
            assert partition_index(spec, s.theta0, s.psi0, s.h_target) == s.partition_index

        assert partition_index(spec, 7.4, 101, 2.3) == (1, 0, 2)


def test_simulator_checks(criterion):
    with criterion("Simulator: zero tilt gives zero drift, overshoot formula, altitude convergence"):
        for psi in (0.0, 90.0, 233.0):
            traj = simulate(_scenario(0.0, psi, 2.0))
            assert np.all(np.hypot(traj.x, traj.y) == 0.0)

        for zeta in (0.3, 0.6, 0.8):
            params = ModelParams(zeta=zeta, dt=0.01)
            h = 2.0
            traj = simulate(_scenario(5.0, 0.0, h), params)
            sampled = traj.z.max() / h - 1.0
            analytic = math.exp(-math.pi * zeta / math.sqrt(1 - zeta**2))
            assert abs(sampled - analytic) <= 1e-3 * analytic, (zeta, sampled, analytic)

        for h in (0.5, 1.0, 2.0, 3.0):
            traj = simulate(_scenario(10.0, 45.0, h))
            assert abs(traj.z[-1] - h) < 0.01 * h


def _scenario(theta0, psi0, h):
    from dsrkit.dbt import Scenario

    return Scenario(theta0, psi0, 0.0, h, (0, 0, 0), 0, 0)


def test_determinism_across_jobs(criterion, tmp_path, capsys):
    with criterion("Determinism: --jobs 1 and --jobs 8 give byte-identical outputs"):
        outputs = []
        for jobs in (1, 8):
            out = tmp_path / f"jobs{jobs}"
            assert main(["campaign", data_path("takeoff_clean.dsr.json"), data_path("takeoff_partitions.json"),
                         "--seed", "42", "--jobs", str(jobs), "--out", str(out)]) == 0
            outputs.append({p.name: p.read_bytes() for p in sorted(out.iterdir())})
        assert len(outputs[0]) == 7
        assert outputs[0] == outputs[1]


def test_heatmap_gradient(criterion, clean_dsr):
    with criterion("Heat-map gradient along theta; ]6,12] and ]12,20] infinite; [0,6] mixed across seeds"):
        first_band = set()
        for seed in range(10):
            result = run_campaign(clean_dsr, DEFAULT_PARTITION_SPEC, 2, seed, BuiltinBackend())
            grid = {p.partition.index: p.dfb_horizontal for p in result.per_partition}
            for j in range(3):
                for k in range(3):
                    column = [grid[(i, j, k)] for i in range(3)]
                    assert column == sorted(column), (seed, j, k, column)
                    assert column[1] == INF and column[2] == INF
                    first_band.add(column[0] == INF)
        assert first_band == {True, False}
