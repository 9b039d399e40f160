"""Parse Take-Off Performance DSRs and check them for domain-specific defects.

Run from the repository root:  python demos/01_check_requirement.py
"""
from importlib import resources

from dsrkit import load_default_baseline, parse_dsr_document, run_all_checks
from dsrkit.dsr_model import effective_bound
from dsrkit.report import render_defect_report_text

data = resources.files("dsrkit.data")
baseline = load_default_baseline()

# %% The clean exemplar: every cell numeric, in range, with consistent units.
clean = parse_dsr_document(data.joinpath("takeoff_clean.dsr.json").read_bytes())
for row in clean.conditions:
    print(f"{row.symbol:>6}: initial [{row.initial_min}, {row.initial_max}]  "
          f"final [{row.final_min}, {row.final_max}]  {row.unit}")
print(render_defect_report_text(run_all_checks(clean, baseline)))

# %% The deviation tables combine by taking the tightest bound in force.
for t in (0.0, 2.9, 3.0, 10.0):
    print(f"horizontal bound at t={t:>4} s: {effective_bound(clean.horizontal_deviation, t)} m")

# %% The defective variant: the four-row conditions table with seeded defects.
defective = parse_dsr_document(data.joinpath("takeoff_defective.dsr.json").read_bytes())
report = run_all_checks(defective, baseline)
print()
print(render_defect_report_text(report))
print("ready for defect-based testing:", report.dbt_ready)
