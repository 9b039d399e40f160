"""Partition the take-off input space and draw reproducible scenarios.

Run from the repository root:  python demos/02_partition_and_sample.py
"""
from dsrkit import DEFAULT_PARTITION_SPEC, build_partitions, generate_scenarios, partition_index

parts = build_partitions(DEFAULT_PARTITION_SPEC)
print(f"{len(parts)} partitions; first interval on each axis is closed, the rest left-open")
for p in parts[:4]:
    print(f"  #{p.ordinal:<2} {p.index}  theta {p.theta_iv.label:<8} psi {p.psi_iv.label:<10} h {p.h_iv.label}")

# %% Points on a shared edge belong to the lower partition.
for point in [(7.4, 101, 2.3), (6.0, 120.0, 1.0), (6.001, 120.0, 1.0)]:
    print(point, "->", partition_index(DEFAULT_PARTITION_SPEC, *point))

# %% Two scenarios per partition; the same master seed always yields the same draws.
scenarios = [s for p in parts for s in generate_scenarios(p, 2, master_seed=42)]
print(f"\n{len(scenarios)} scenarios, e.g.")
for s in scenarios[:3]:
    print(f"  theta0={s.theta0:7.3f}  psi0={s.psi0:8.3f}  h={s.h_target:5.3f}  seed={s.sub_seed:#018x}")
