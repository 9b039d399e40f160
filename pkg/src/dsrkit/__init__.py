"""Take-Off Performance domain-specific requirements: parse, check, and test against them."""
from .dbt import (
    DEFAULT_PARTITION_SPEC,
    CampaignResult,
    Partition,
    PartitionSpec,
    Scenario,
    build_partitions,
    compute_defect_value,
    consolidate,
    generate_scenarios,
    partition_index,
    run_campaign,
)
from .dsr_model import TakeOffDsr, effective_bound, parse_dsr_document, serialize_dsr_document
from .qa import ConstraintSet, DefectReport, load_default_baseline, run_all_checks
from .report import build_heatmap, render_heatmap_csv, render_heatmap_svg, render_heatmap_text
from .sim import BuiltinBackend, ExternalBackend, ModelParams, Trajectory, simulate

__version__ = "0.1.0"
