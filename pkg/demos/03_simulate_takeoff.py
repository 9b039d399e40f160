"""Simulate individual take-offs with the closed-form response model.

Run from the repository root:  python demos/03_simulate_takeoff.py
Writes takeoff.png next to the script when matplotlib is installed.
"""
from pathlib import Path

import numpy as np

from dsrkit import ModelParams, Scenario, simulate
from dsrkit.sim import altitude_deviation_series, max_horizontal_deviation

params = ModelParams()
print(f"zeta={params.zeta}, omega_n={params.omega_n}: overshoot ratio {params.overshoot_ratio:.4f}")

runs = {}
for theta0 in (0.0, 1.5, 5.0, 15.0):
    s = Scenario(theta0, 90.0, 0.0, 2.0, (0, 0, 0), 0, 0)
    traj = simulate(s, params)
    runs[theta0] = traj
    drift_at_3s = np.hypot(traj.x, traj.y)[traj.t >= 3.0][0]
    t_rel, dev = altitude_deviation_series(traj, s.h_target)
    print(f"theta0={theta0:5.1f} deg: max drift {max_horizontal_deviation(traj):.3f} m, "
          f"drift at 3 s {drift_at_3s:.3f} m, max altitude error after reaching 2 m {dev.max():.3f} m")

# %% Plot altitude and drift if matplotlib is around.
try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    plt = None

if plt is not None:
    fig, (ax1, ax2) = plt.subplots(1, 2, figsize=(10, 4))
    for theta0, traj in runs.items():
        ax1.plot(traj.t, traj.z, label=f"theta0={theta0}")
        ax2.plot(traj.t, np.hypot(traj.x, traj.y), label=f"theta0={theta0}")
    ax1.set(xlabel="t [s]", ylabel="z [m]", title="altitude")
    ax2.axhline(0.1, color="k", ls="--", lw=0.8)
    ax2.set(xlabel="t [s]", ylabel="|(x, y)| [m]", title="horizontal deviation")
    ax2.legend()
    out = Path(__file__).with_name("takeoff.png")
    fig.tight_layout()
    fig.savefig(out, dpi=120)
    print("wrote", out)
