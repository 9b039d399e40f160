import math
import sys
from types import SimpleNamespace

import numpy as np
import pytest
from scipy import signal

from dsrkit.sim import (
    BackendFailure,
    BuiltinBackend,
    EmptyTrajectory,
    ExternalBackend,
    InvalidParams,
    ModelParams,
    Trajectory,
    altitude_deviation_series,
    max_horizontal_deviation,
    simulate,
    step_response,
)


def scenario(theta0=10.0, psi0=45.0, phi0=0.0, h_target=2.0):
    return SimpleNamespace(theta0=theta0, psi0=psi0, phi0=phi0, h_target=h_target)


def test_sampling_grid_and_initial_state():
    traj = simulate(scenario(theta0=7.0, psi0=30.0, phi0=1.5))
    assert len(traj) == 2001
    assert traj.t[0] == 0.0 and traj.t[-1] == pytest.approx(20.0)
    assert np.all(np.diff(traj.t) > 0)
    assert (traj.x[0], traj.y[0], traj.z[0]) == (0.0, 0.0, 0.0)
    assert (traj.theta[0], traj.psi[0], traj.phi[0]) == (7.0, 30.0, 1.5)


def test_zero_tilt_means_zero_drift():
    traj = simulate(scenario(theta0=0.0, psi0=200.0))
    assert np.all(traj.x == 0) and np.all(traj.y == 0)
    assert max_horizontal_deviation(traj) == 0.0


@pytest.mark.parametrize("zeta", [0.3, 0.6, 0.9, 1.0])
def test_step_response_matches_lti_oracle(zeta):
    wn = 1.5
    t = np.linspace(0, 20, 2001)
    _, y = signal.step(signal.lti([wn**2], [1, 2 * zeta * wn, wn**2]), T=t)
    assert np.max(np.abs(step_response(t, zeta, wn) - y)) < 1e-9


def test_overshoot_default_params():
    params = ModelParams()
    # closed form: exp(-pi*0.6/0.8)
    assert params.overshoot_ratio == pytest.approx(0.09478, abs=1e-5)
    traj = simulate(scenario(h_target=2.0), params)
    assert traj.z.max() == pytest.approx(2.1896, abs=1e-4)
    # cross-check against dense sampling of the response
    dense = step_response(np.linspace(0, 20, 200001), params.zeta, params.omega_n)
    assert dense.max() - 1 == pytest.approx(params.overshoot_ratio, rel=1e-6)


def test_drift_limit_along_heading():
    traj = simulate(scenario(theta0=20.0, psi0=90.0), ModelParams(c_drift=3.0, tau_att=1.0))
    limit = 3 * math.sin(math.radians(20))
    assert limit == pytest.approx(1.02606, abs=1e-5)
    assert traj.y[-1] == pytest.approx(limit, abs=1e-6)
    assert abs(traj.x[-1]) < 1e-6


def test_monotone_drift_max_at_last_sample():
    traj = simulate(scenario(theta0=12.0))
    d = np.hypot(traj.x, traj.y)
    assert np.all(np.diff(d) >= 0)
    assert max_horizontal_deviation(traj) == d[-1]


def test_hand_built_trajectory_max():
    traj = Trajectory(1.0, [0, 1, 2], [0, 0.5, 0.3], [0, 0, 0], [0, 1, 1], [0, 0, 0], [0, 0, 0], [0, 0, 0])
    assert max_horizontal_deviation(traj) == 0.5


def test_altitude_convergence():
    for h in (0.5, 2.0, 3.0):
        traj = simulate(scenario(h_target=h))
        assert abs(traj.z[-1] - h) < 0.01 * h


def test_altitude_series_from_crossing():
    traj = simulate(scenario(h_target=2.0))
    t_rebased, dev = altitude_deviation_series(traj, 2.0)
    k = np.flatnonzero(traj.z >= 2.0)[0]
    assert t_rebased[0] == 0.0 and len(dev) == len(traj) - k
    # first sample is within one step of the exact crossing
    slope = np.max(np.abs(np.diff(traj.z))) / traj.dt
    assert dev[0] <= slope * traj.dt
    assert dev.max() == pytest.approx(2 * ModelParams().overshoot_ratio, rel=1e-3)


def test_altitude_never_reached():
    traj = simulate(scenario(h_target=2.0), ModelParams(t_end=0.5))
    assert altitude_deviation_series(traj, 2.0) is None


def test_critically_damped_no_overshoot():
    traj = simulate(scenario(h_target=2.0), ModelParams(zeta=1.0))
    s = traj.z / 2.0
    assert np.all(np.diff(s) >= 0) and s.max() <= 1.0
    series = altitude_deviation_series(traj, 2.0)
    # 1 - s(t) at the end of the horizon, before rounding to exactly 1
    assert series is None or series[1].max() < 1e-9


@pytest.mark.parametrize("bad", [
    dict(zeta=0.0), dict(zeta=1.2), dict(omega_n=0.0), dict(tau_att=-1.0),
    dict(c_drift=-0.1), dict(dt=0.0), dict(t_end=0.01), dict(dt=float("nan")),
])
def test_invalid_params(bad):
    with pytest.raises(InvalidParams):
        simulate(scenario(), ModelParams(**bad))


def test_empty_trajectory_errors():
    empty = Trajectory(0.01, [], [], [], [], [], [], [])
    with pytest.raises(EmptyTrajectory):
        max_horizontal_deviation(empty)
    with pytest.raises(EmptyTrajectory):
        altitude_deviation_series(empty, 1.0)


def test_determinism_and_csv_round_trip():
    a = simulate(scenario(theta0=3.3, psi0=271.1, h_target=1.7))
    b = simulate(scenario(theta0=3.3, psi0=271.1, h_target=1.7))
    assert a == b and a.to_csv() == b.to_csv()
    back = Trajectory.from_csv(a.to_csv(), dt=a.dt)
    assert back == a


def test_trajectory_arrays_read_only():
    traj = simulate(scenario())
    with pytest.raises(ValueError):
        traj.z[0] = 1.0


@pytest.mark.parametrize("text", [
    "t,x,y\n0,0,0\n",
    "t,x,y,z,theta,psi,phi\n",
    "t,x,y,z,theta,psi,phi\n0,0,0,0,0,0\n",
    "t,x,y,z,theta,psi,phi\n0,0,0,0,0,0,abc\n",
    "t,x,y,z,theta,psi,phi\n0,0,0,0,0,0,0\n0,0,0,0,0,0,0\n",
    "t,x,y,z,theta,psi,phi\n0,0,0,0,0,0,nan\n",
])
def test_malformed_csv(text):
    with pytest.raises(ValueError):
        Trajectory.from_csv(text)


# -- backends ------------------------------------------------------------------

BACKEND_SCRIPT = """
import json, sys
from pathlib import Path
from types import SimpleNamespace
from dsrkit.sim import ModelParams, simulate

path = Path(sys.argv[1])
s = json.loads(path.read_text())
traj = simulate(SimpleNamespace(**{k: s[k] for k in ("theta0", "psi0", "phi0", "h_target")}),
                ModelParams(dt=s["dt"], t_end=s["t_end"]))
ordinal = path.stem.split("_")[1]
(path.parent / f"trajectory_{ordinal}.csv").write_text(traj.to_csv())
"""


@pytest.fixture
def backend_script(tmp_path):
    script = tmp_path / "backend.py"
    script.write_text(BACKEND_SCRIPT)
    return script


def test_external_backend_matches_builtin(tmp_path, backend_script):
    ext = ExternalBackend(f"{sys.executable} {backend_script}", tmp_path / "work")
    s = scenario(theta0=4.2, psi0=100.0, h_target=2.6)
    assert ext(s, 7) == BuiltinBackend()(s, 7)
    assert (tmp_path / "work" / "scenario_7.json").exists()
    assert (tmp_path / "work" / "trajectory_7.csv").exists()


def test_external_backend_nonzero_exit(tmp_path):
    ext = ExternalBackend(f"{sys.executable} -c 'import sys; sys.exit(3)'", tmp_path)
    with pytest.raises(BackendFailure) as info:
        ext(scenario(), 5)
    assert info.value.ordinal == 5 and "exit status 3" in str(info.value)


def test_external_backend_malformed_output(tmp_path):
    writer = tmp_path / "bad.py"
    writer.write_text("import sys, pathlib\np = pathlib.Path(sys.argv[1])\n"
                      "(p.parent / 'trajectory_2.csv').write_text('t,x\\n0,1\\n')\n")
    with pytest.raises(BackendFailure, match="malformed"):
        ExternalBackend(f"{sys.executable} {writer}", tmp_path / "w")(scenario(), 2)


def test_external_backend_missing_output(tmp_path):
    with pytest.raises(BackendFailure, match="cannot read"):
        ExternalBackend(f"{sys.executable} -c pass", tmp_path)(scenario(), 0)
