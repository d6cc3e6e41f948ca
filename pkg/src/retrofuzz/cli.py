"""Operator surface.

Commands: ``simulate-world`` builds a synthetic campaign world; ``focus``
narrows description sources for a reproducer; ``retrospect`` analyzes one
bug; ``campaign`` runs every bug through retrospection with a shared
persistent cache; ``vm-study`` writes the VM-scaling curve; ``stats``
aggregates finished reports into the analytics tables; ``cache`` inspects or
clears the session cache. Flags override config-file values; the cache path
can also come from ``RETROFUZZ_CACHE``.
"""

from __future__ import annotations

import argparse
import datetime as dt
import hashlib
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from . import analytics, storage
from .history import HistoryError, load_axis_file
from .oracle import OracleError, SyntheticWorld, estimate_d2_vs_vms
from .records import (
    RecordError,
    RetrospectionReport,
    SYZBOT_START,
    load_bug_records,
    load_report,
    dump_report,
    sanity_check_bug,
)
from .retrospect import (
    EngineConfig,
    Retrospector,
    WorldBackend,
    build_fix_index,
    group_duplicates,
)
from .storage import CacheLog, DocumentError, MemoryCache
from .syzlang import (
    DEFAULT_MANDATORY_CALLS,
    SyzlangError,
    focus,
    load_description_dir,
    parse_descriptions,
)
from .worldgen import WorldSpec, WorldSpecError, generate_world

log = logging.getLogger(__name__)

_USER_ERRORS = (
    DocumentError,
    HistoryError,
    OracleError,
    RecordError,
    SyzlangError,
    WorldSpecError,
    analytics.AnalyticsError,
)


def _config_hash(resolved: dict) -> str:
    return hashlib.sha256(storage.canonical_json(resolved).encode()).hexdigest()[:16]


def _provenance(args, keys) -> dict:
    resolved = {}
    for k in keys:
        v = getattr(args, k, None)
        if isinstance(v, (Path, dt.date)):
            v = str(v)
        resolved[k] = v
    return {"config_hash": _config_hash(resolved), "seed": getattr(args, "seed", None)}


def _load_world(path) -> SyntheticWorld:
    return SyntheticWorld.from_doc(storage.read_document(path, "world"))


def _cache_for(args):
    path = getattr(args, "cache", None) or os.environ.get("RETROFUZZ_CACHE")
    return CacheLog(path) if path else MemoryCache()


def _apply_config_file(args) -> None:
    """File values fill in flags the user left unset (flags win)."""
    if not getattr(args, "config", None):
        return
    values = storage.load_kv(args.config)
    for key, value in values.items():
        attr = key.replace("-", "_")
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, value)


def _fill_defaults(args) -> None:
    for attr, default in (("blocking_threshold", 0.5), ("parallelism", 1)):
        if hasattr(args, attr) and getattr(args, attr) is None:
            setattr(args, attr, default)


# -- commands ----------------------------------------------------------------


def cmd_simulate_world(args) -> int:
    spec_doc = storage.load_kv(args.spec) if args.spec else {}
    spec = WorldSpec.from_doc(spec_doc)
    if args.bugs is not None:
        spec.bug_count = args.bugs
    if args.seed is not None:
        spec.seed = args.seed
    args.seed = spec.seed
    world = generate_world(spec)
    body = world.to_doc()
    body.update(_provenance(args, ("spec", "bugs")))
    storage.write_document(args.out, "world", body)
    print(f"world: {len(world.records)} bugs, seed {spec.seed} -> {args.out}")
    return 0


def cmd_focus(args) -> int:
    sources = load_description_dir(args.descriptions)
    corpus = parse_descriptions(sources, legacy_inout=args.legacy_inout)
    calls = tuple(c.strip() for c in args.calls.split(",") if c.strip())
    mandatory = DEFAULT_MANDATORY_CALLS
    if args.mandatory is not None:
        mandatory = tuple(c.strip() for c in args.mandatory.split(",") if c.strip())
    focused = focus(corpus, calls, mandatory)
    Path(args.out).write_text(focused.export_text())
    print(
        f"focused: {len(focused.calls)} calls, {len(focused.types)} types, "
        f"hash {focused.identity_hash()[:12]} -> {args.out}"
    )
    return 0


def _require_world_mode(args) -> None:
    ingest = [getattr(args, k, None) for k in ("bugs_file", "target_axis", "fuzzer_axis", "descriptions")]
    have_ingest = any(ingest)
    have_world = bool(getattr(args, "world", None))
    if have_world == have_ingest:
        raise DocumentError(
            "exactly one of --world or the ingest flags "
            "(--bugs-file/--target-axis/--fuzzer-axis/--descriptions) is required"
        )
    if have_ingest:
        if not all(ingest):
            raise DocumentError(
                "ingest mode needs --bugs-file, --target-axis, --fuzzer-axis, and --descriptions"
            )
        target = load_axis_file(args.target_axis, "target")
        load_axis_file(args.fuzzer_axis, "fuzzer")
        parse_descriptions(load_description_dir(args.descriptions))
        bugs = load_bug_records(args.bugs_file)
        problems = []
        for bug in bugs:
            problems += [f"{bug.id}: {p}" for p in sanity_check_bug(bug, target)]
        for p in problems:
            print(f"ingest: {p}", file=sys.stderr)
        raise DocumentError(
            "ingested inputs parsed, but retrospection needs a fuzzing backend; "
            "the shipped backend is the synthetic world (see simulate-world)"
        )


def _engine_for(world, args):
    retry = not world.deterministic if args.retry is None else bool(args.retry)
    config = EngineConfig(
        blocking_threshold=args.blocking_threshold,
        retry_failed_probes=retry,
    )
    return Retrospector(
        WorldBackend(world),
        cache=_cache_for(args),
        config=config,
        fix_index=build_fix_index(world.records.values()),
    )


def cmd_retrospect(args) -> int:
    _require_world_mode(args)
    world = _load_world(args.world)
    if args.bug not in world.records:
        raise DocumentError(f"bug {args.bug!r} not in world {args.world}")
    engine = _engine_for(world, args)
    report = engine.run(world.records[args.bug])
    args.seed = world.seed
    dump_report(report, args.out, provenance=_provenance(args, ("world", "bug")))
    print(
        f"{report.bug_id}: {report.status}"
        + (
            f", {report.factor_class} at {report.revealing_commit} "
            f"(d1={report.d1_days}d d2={report.d2_days}d)"
            if report.completed
            else ""
        )
    )
    return 0


def cmd_campaign(args) -> int:
    _require_world_mode(args)
    world = _load_world(args.world)
    engine = _engine_for(world, args)
    outdir = Path(args.out)
    reports_dir = outdir / "reports"
    reports_dir.mkdir(parents=True, exist_ok=True)
    args.seed = world.seed
    provenance = _provenance(args, ("world", "parallelism", "blocking_threshold"))

    bugs = sorted(world.records.values(), key=lambda b: b.id)
    groups, suggestions = group_duplicates(bugs)

    reports: dict[str, RetrospectionReport] = {}
    with ThreadPoolExecutor(max_workers=max(1, args.parallelism)) as pool:
        for report in pool.map(engine.run, bugs):
            reports[report.bug_id] = report
    for bug_id, report in sorted(reports.items()):
        dump_report(report, reports_dir / f"{bug_id}.json", provenance=provenance)

    statuses: dict[str, int] = {}
    manual = 0
    for report in reports.values():
        statuses[report.status] = statuses.get(report.status, 0) + 1
        if report.factor_class == "needs_manual_review":
            manual += 1
    index_body = {
        "bug_count": len(bugs),
        "statuses": statuses,
        "needs_manual_review": manual,
        "duplicate_groups": {root: members for root, members in sorted(groups.items()) if len(members) > 1},
        "duplicate_suggestions": [list(s) for s in suggestions],
        "bugs": {
            bug_id: {
                "status": r.status,
                "factor_class": r.factor_class,
                "revealing_commit": r.revealing_commit,
                "revealing_axis": r.revealing_axis,
                "d1_days": r.d1_days,
                "d2_days": r.d2_days,
                "probes": len(r.session_log),
            }
            for bug_id, r in sorted(reports.items())
        },
    }
    index_body.update(provenance)
    storage.write_document(outdir / "campaign_index.json", "campaign-index", index_body)

    completed = statuses.get("completed", 0)
    print(
        f"campaign: {completed}/{len(bugs)} completed, "
        f"{manual} flagged for manual review -> {outdir}"
    )
    return 0 if completed == len(bugs) else 2


def cmd_vm_study(args) -> int:
    world = _load_world(args.world)
    vm_counts = [int(v) for v in args.vm_counts.split(",") if v.strip()]
    curve = estimate_d2_vs_vms(world, vm_counts, args.samples, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    analytics.write_vm_curve(curve, out)
    args.seed = world.seed if args.seed is None else args.seed
    prov = _provenance(args, ("world", "vm_counts", "samples"))
    storage.write_document(out.with_suffix(".provenance.json"), "provenance", prov)
    print(f"vm-study: {len(curve)} points -> {out}")
    return 0


def cmd_stats(args) -> int:
    reports_dir = Path(args.reports)
    if (reports_dir / "reports").is_dir():
        reports_dir = reports_dir / "reports"
    paths = sorted(reports_dir.glob("*.json"))
    if not paths:
        raise DocumentError(f"no report documents under {reports_dir}")
    reports = [load_report(p) for p in paths]
    pairs = [
        analytics.compute_delays(r, epoch=args.epoch) for r in reports if r.completed
    ]
    if not pairs:
        raise analytics.AnalyticsError("no completed reports to aggregate")
    stats = analytics.campaign_stats(pairs)
    outdir = Path(args.out)
    written = analytics.write_stats_tables(stats, outdir)
    body = stats.to_doc()
    body.update(_provenance(args, ("reports", "epoch")))
    storage.write_document(outdir / "stats.json", "campaign-stats", body)
    print(
        f"stats: {stats.bug_count} bugs, hidden share {stats.hidden_share * 100:.2f}%, "
        f"best r^2 {stats.r2_best:.4f} -> {outdir} ({', '.join(written)})"
    )
    return 0


def cmd_cache(args) -> int:
    path = args.cache or os.environ.get("RETROFUZZ_CACHE")
    if not path:
        raise DocumentError("cache command needs --cache or RETROFUZZ_CACHE")
    cache = CacheLog(path)
    if args.action == "inspect":
        print(json.dumps(cache.stats(), indent=2, sort_keys=True))
    else:
        cache.clear()
        print(f"cache cleared: {path}")
    return 0


# -- argument plumbing ---------------------------------------------------------


def _add_world_mode_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--world", help="world document from simulate-world")
    p.add_argument("--bugs-file", dest="bugs_file", help="bug-records document (ingest mode)")
    p.add_argument("--target-axis", dest="target_axis", help="target axis file (ingest mode)")
    p.add_argument("--fuzzer-axis", dest="fuzzer_axis", help="fuzzer axis file (ingest mode)")
    p.add_argument("--descriptions", help="description sources (ingest mode)")
    p.add_argument("--cache", help="persistent session cache path")
    p.add_argument("--config", help="key-value config file; flags override")
    p.add_argument("--blocking-threshold", dest="blocking_threshold", type=float, default=None)
    p.add_argument(
        "--retry",
        type=int,
        choices=(0, 1),
        default=None,
        help="force probe retries on/off (default: off for deterministic worlds)",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="retrofuzz",
        description="Retrospect continuous-fuzzing bugs: earliest findable environment, "
        "revealing commit and factor, hidden/exposed delays.",
    )
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate-world", help="generate a synthetic world with ground truth")
    p.add_argument("--spec", help="key-value world spec file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--bugs", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_simulate_world)

    p = sub.add_parser("focus", help="write the focused description subset for a reproducer")
    p.add_argument("--descriptions", required=True)
    p.add_argument("--calls", required=True, help="comma-separated reproducer syscalls")
    p.add_argument("--legacy-inout", dest="legacy_inout", action="store_true")
    p.add_argument("--mandatory", default=None, help="override mandatory calls (comma-separated)")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_focus)

    p = sub.add_parser("retrospect", help="retrospect a single bug")
    _add_world_mode_flags(p)
    p.add_argument("--bug", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_retrospect)

    p = sub.add_parser("campaign", help="retrospect every bug in the world")
    _add_world_mode_flags(p)
    p.add_argument("--out", required=True)
    p.add_argument("--parallelism", type=int, default=None)
    p.set_defaults(func=cmd_campaign)

    p = sub.add_parser("vm-study", help="simulate mean exposed delay vs VM count")
    p.add_argument("--world", required=True)
    p.add_argument("--vm-counts", dest="vm_counts", default="5,10,20,40,80")
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_vm_study)

    p = sub.add_parser("stats", help="aggregate reports into the analytics tables")
    p.add_argument("--reports", required=True, help="campaign output dir or reports dir")
    p.add_argument("--epoch", type=dt.date.fromisoformat, default=SYZBOT_START)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("cache", help="inspect or clear the session cache")
    p.add_argument("action", choices=("inspect", "clear"))
    p.add_argument("--cache", default=None)
    p.set_defaults(func=cmd_cache)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        _apply_config_file(args)
        _fill_defaults(args)
        return args.func(args)
    except _USER_ERRORS as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
