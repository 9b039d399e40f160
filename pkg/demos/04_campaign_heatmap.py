"""Run a full defect-based testing campaign and render its heat maps.

Run from the repository root:  python demos/04_campaign_heatmap.py [out_dir]
"""
import sys
from importlib import resources
from pathlib import Path

from dsrkit import (
    DEFAULT_PARTITION_SPEC,
    BuiltinBackend,
    build_heatmap,
    parse_dsr_document,
    render_heatmap_csv,
    render_heatmap_svg,
    render_heatmap_text,
    run_campaign,
)

out_dir = Path(sys.argv[1] if len(sys.argv) > 1 else "campaign_demo")
out_dir.mkdir(exist_ok=True)

dsr = parse_dsr_document(resources.files("dsrkit.data").joinpath("takeoff_clean.dsr.json").read_bytes())
result = run_campaign(dsr, DEFAULT_PARTITION_SPEC, 2, 42, BuiltinBackend(), jobs=4)

# %% Per-partition defect values: 'inf' means at least one scenario broke a bound.
print("partition   theta     psi        h       dfb(horizontal)   dfb(altitude)")
for p in result.per_partition:
    part = p.partition
    print(f"{str(part.index):<11} {part.theta_iv.label:<9} {part.psi_iv.label:<10} {part.h_iv.label:<7} "
          f"{p.dfb_horizontal:>15.4g}   {p.dfb_altitude:>13.4g}")

# %% Heat maps, one slice per height band.
for metric in ("horizontal", "altitude"):
    slices = build_heatmap(result, metric)
    print(f"\n{metric}\n" + render_heatmap_text(slices))
    (out_dir / f"heatmap_{metric}.csv").write_bytes(render_heatmap_csv(slices))
    (out_dir / f"heatmap_{metric}.svg").write_bytes(render_heatmap_svg(slices))
(out_dir / "campaign.json").write_bytes(result.to_json())
print("outputs in", out_dir)
