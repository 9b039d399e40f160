"""Closed-form quadcopter take-off response and simulation backends.

The model stands in for a full flight-dynamics simulator:

* altitude follows the unit step response of a second-order system scaled
  by the target height,
* pitch and roll relax exponentially towards level, yaw stays put,
* the vehicle drifts horizontally along its initial heading by an amount
  that grows with the initial pitch and saturates.

External simulators plug in through :class:`ExternalBackend`, which trades
one JSON file and one CSV file per scenario with a user command.
"""
from __future__ import annotations

import csv
import io
import json
import math
import shlex
import subprocess
from dataclasses import dataclass
from pathlib import Path

import numpy as np

TRAJECTORY_COLUMNS = ("t", "x", "y", "z", "theta", "psi", "phi")


class InvalidParams(ValueError):
    pass


class EmptyTrajectory(ValueError):
    pass


class BackendFailure(RuntimeError):
    def __init__(self, ordinal: int, reason: str):
        super().__init__(f"backend failed on scenario {ordinal}: {reason}")
        self.ordinal = ordinal
        self.reason = reason


@dataclass(frozen=True)
class ModelParams:
    zeta: float = 0.6
    omega_n: float = 1.5
    tau_att: float = 1.0
    c_drift: float = 3.0
    dt: float = 0.01
    t_end: float = 20.0

    def validate(self):
        values = (self.zeta, self.omega_n, self.tau_att, self.c_drift, self.dt, self.t_end)
        if not all(math.isfinite(v) for v in values):
            raise InvalidParams("model parameters must be finite")
        if not 0 < self.zeta <= 1:
            raise InvalidParams(f"zeta must lie in (0, 1], got {self.zeta}")
        if self.omega_n <= 0 or self.tau_att <= 0 or self.dt <= 0:
            raise InvalidParams("omega_n, tau_att and dt must be positive")
        if self.c_drift < 0:
            raise InvalidParams("c_drift must be non-negative")
        if self.t_end <= self.dt:
            raise InvalidParams("t_end must exceed dt")

    @property
    def overshoot_ratio(self) -> float:
        """Peak overshoot of the unit step response, as a fraction of the step."""
        if self.zeta >= 1:
            return 0.0
        return math.exp(-math.pi * self.zeta / math.sqrt(1 - self.zeta**2))


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Sampled take-off; every field except ``dt`` is a 1-D float array."""

    dt: float
    t: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    theta: np.ndarray
    psi: np.ndarray
    phi: np.ndarray

    def __post_init__(self):
        n = len(self.t)
        for name in TRAJECTORY_COLUMNS:
            arr = np.array(getattr(self, name), dtype=float)
            if arr.shape != (n,):
                raise ValueError(f"trajectory column {name!r} has shape {arr.shape}, expected ({n},)")
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    def __len__(self):
        return len(self.t)

    def __eq__(self, other):
        if not isinstance(other, Trajectory):
            return NotImplemented
        return self.dt == other.dt and all(
            np.array_equal(getattr(self, c), getattr(other, c)) for c in TRAJECTORY_COLUMNS
        )

    def to_csv(self) -> str:
        out = io.StringIO()
        out.write(",".join(TRAJECTORY_COLUMNS) + "\n")
        columns = [getattr(self, c).tolist() for c in TRAJECTORY_COLUMNS]
        for row in zip(*columns):
            out.write(",".join(repr(v) for v in row) + "\n")
        return out.getvalue()

    @classmethod
    def from_csv(cls, text: str, dt: float | None = None) -> "Trajectory":
        """Parse the ``t,x,y,z,theta,psi,phi`` CSV exchange format.

        Raises ValueError on a wrong header, ragged rows, non-numeric or
        non-finite values, or non-increasing time stamps.
        """
        reader = csv.reader(io.StringIO(text))
        header = next(reader, None)
        if header is None or [h.strip() for h in header] != list(TRAJECTORY_COLUMNS):
            raise ValueError(f"bad trajectory header {header!r}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(TRAJECTORY_COLUMNS):
                raise ValueError(f"line {lineno}: expected {len(TRAJECTORY_COLUMNS)} fields, got {len(row)}")
            try:
                values = [float(v) for v in row]
            except ValueError:
                raise ValueError(f"line {lineno}: non-numeric field") from None
            if not all(math.isfinite(v) for v in values):
                raise ValueError(f"line {lineno}: non-finite value")
            rows.append(values)
        if not rows:
            raise ValueError("trajectory has no samples")
        data = np.array(rows, dtype=float)
        t = data[:, 0]
        if np.any(np.diff(t) <= 0):
            raise ValueError("time stamps must be strictly increasing")
        if dt is None:
            dt = float(t[1] - t[0]) if len(t) > 1 else 0.0
        return cls(dt, *(data[:, i] for i in range(len(TRAJECTORY_COLUMNS))))


def step_response(t: np.ndarray, zeta: float, omega_n: float) -> np.ndarray:
    """Unit step response of a second-order system with unit DC gain."""
    t = np.asarray(t, dtype=float)
    if zeta >= 1:
        return 1.0 - (1.0 + omega_n * t) * np.exp(-omega_n * t)
    root = math.sqrt(1.0 - zeta**2)
    omega_d = omega_n * root
    return 1.0 - np.exp(-zeta * omega_n * t) / root * np.sin(omega_d * t + math.acos(zeta))


def sample_times(dt: float, t_end: float) -> np.ndarray:
    # the tolerance keeps t_end itself when t_end/dt is integral up to rounding
    n = int(math.floor(t_end / dt + 1e-9)) + 1
    return np.arange(n, dtype=float) * dt


def simulate(scenario, params: ModelParams = ModelParams()) -> Trajectory:
    params.validate()
    theta0, psi0, phi0, h = (float(scenario.theta0), float(scenario.psi0), float(scenario.phi0), float(scenario.h_target))
    if not all(math.isfinite(v) for v in (theta0, psi0, phi0, h)):
        raise InvalidParams("scenario values must be finite")

    t = sample_times(params.dt, params.t_end)
    decay = np.exp(-t / params.tau_att)
    drift = params.c_drift * math.sin(math.radians(theta0)) * (1.0 - decay)
    return Trajectory(
        dt=params.dt,
        t=t,
        x=drift * math.cos(math.radians(psi0)),
        y=drift * math.sin(math.radians(psi0)),
        z=h * step_response(t, params.zeta, params.omega_n),
        theta=theta0 * decay,
        psi=np.full_like(t, psi0),
        phi=phi0 * decay,
    )


def max_horizontal_deviation(traj: Trajectory) -> float:
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no samples")
    return float(np.max(np.hypot(traj.x, traj.y)))


def altitude_deviation_series(traj: Trajectory, h_target: float):
    """Altitude error from the first sample at or above ``h_target`` onwards.

    Returns ``(t_rebased, dev)`` arrays with time measured from that sample,
    or None if the target height is never reached.
    """
    if len(traj) == 0:
        raise EmptyTrajectory("trajectory has no samples")
    reached = np.flatnonzero(traj.z >= h_target)
    if reached.size == 0:
        return None
    k = reached[0]
    return traj.t[k:] - traj.t[k], np.abs(traj.z[k:] - h_target)


class BuiltinBackend:
    """Runs the closed-form model in-process."""

    def __init__(self, params: ModelParams = ModelParams()):
        params.validate()
        self.params = params

    def __call__(self, scenario, ordinal: int) -> Trajectory:
        return simulate(scenario, self.params)

    def describe(self) -> dict:
        p = self.params
        return {
            "kind": "builtin",
            "zeta": p.zeta,
            "omega_n": p.omega_n,
            "tau_att": p.tau_att,
            "c_drift": p.c_drift,
            "dt": p.dt,
            "t_end": p.t_end,
        }


def scenario_payload(scenario, dt: float, t_end: float) -> dict:
    return {
        "theta0": scenario.theta0,
        "psi0": scenario.psi0,
        "phi0": scenario.phi0,
        "h_target": scenario.h_target,
        "dt": dt,
        "t_end": t_end,
    }


class ExternalBackend:
    """Delegates each scenario to an external command via files in ``workdir``.

    For scenario ``k`` the command is run as ``<command> <workdir>/scenario_k.json``
    (with ``workdir`` as current directory) and must leave
    ``<workdir>/trajectory_k.csv`` behind.
    """

    def __init__(self, command: str, workdir, dt: float = 0.01, t_end: float = 20.0, timeout: float | None = None):
        self.argv = shlex.split(command)
        if not self.argv:
            raise ValueError("empty backend command")
        self.command = command
        self.workdir = Path(workdir)
        self.dt = dt
        self.t_end = t_end
        self.timeout = timeout

    def __call__(self, scenario, ordinal: int) -> Trajectory:
        self.workdir.mkdir(parents=True, exist_ok=True)
        scenario_path = self.workdir / f"scenario_{ordinal}.json"
        trajectory_path = self.workdir / f"trajectory_{ordinal}.csv"
        scenario_path.write_text(json.dumps(scenario_payload(scenario, self.dt, self.t_end), indent=2) + "\n")
        if trajectory_path.exists():
            trajectory_path.unlink()
        try:
            proc = subprocess.run(
                self.argv + [str(scenario_path.resolve())],
                cwd=self.workdir,
                capture_output=True,
                text=True,
                timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise BackendFailure(ordinal, str(exc)) from None
        if proc.returncode != 0:
            detail = proc.stderr.strip().splitlines()[-1:] or [""]
            raise BackendFailure(ordinal, f"exit status {proc.returncode} {detail[0]}".rstrip())
        try:
            return Trajectory.from_csv(trajectory_path.read_text(), dt=self.dt)
        except OSError as exc:
            raise BackendFailure(ordinal, f"cannot read {trajectory_path.name}: {exc.strerror}") from None
        except ValueError as exc:
            raise BackendFailure(ordinal, f"malformed {trajectory_path.name}: {exc}") from None

    def describe(self) -> dict:
        return {"kind": "external", "command": self.command, "dt": self.dt, "t_end": self.t_end}
