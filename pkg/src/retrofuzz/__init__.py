"""Retrospection engine for continuous-fuzzing campaigns.

Given a bug found by a continuous fuzzer, reconstruct the earliest
environment (target commit x fuzzer commit x syscall-description snapshot)
in which it was findable, name the commit that revealed it and why, and
split its lifetime into the hidden delay (d1) and the exposed delay (d2).
The shipped session backend is a synthetic world with known ground truth.
"""

from .analytics import (
    CampaignStats,
    DelayPair,
    campaign_stats,
    compute_delays,
    d1_settling_estimate,
    factor_distribution,
    independence_check,
)
from .history import (
    Commit,
    CommitAxis,
    PatchRuleTable,
    ToolchainTable,
    commits_between,
    linearize_first_parent,
    nearest_stable,
    representative_for_day,
    toolchain_for_date,
)
from .oracle import (
    BugTruth,
    FuzzBudget,
    FuzzEnvironment,
    SessionOutcome,
    SyntheticWorld,
    calibrate_budget,
    estimate_d2_vs_vms,
    run_session,
)
from .records import BugRecord, ProbeResult, RetrospectionReport, SYZBOT_START
from .retrospect import (
    EngineConfig,
    Retrospector,
    WorldBackend,
    bisect_earliest_success,
    classify_factor,
    detect_blocking_candidates,
    group_duplicates,
)
from .syzlang import (
    DescriptionCorpus,
    FocusedSet,
    focus,
    parse_descriptions,
    relevant_description_commits,
    resource_usage,
)
from .worldgen import WorldSpec, generate_world

__version__ = "0.1.0"
