"""memadvisor command line.

    memadvisor validate PROFILE
    memadvisor classify PROFILE [--kb PATH]
    memadvisor predict (--category C | --workload ID) --input-mb N [cluster flags]
    memadvisor kb put PROFILE | kb get ID | kb list
    memadvisor simulate --category C --input-mb N --capacity-mb M [--seed S]
    memadvisor evaluate --category C --input-mb N [--trials T --seed S --baseline-mb B]

Every command accepts ``--json`` to print one machine-readable report.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from memadvisor import __version__
from memadvisor.classifier import Category, classify_profile
from memadvisor.ingest import ProfileError, load_profiles, profile_digest, validate_for_classification
from memadvisor.knowledge_base import ENV_VAR, KbEntry, KbError, KnowledgeBase
from memadvisor.metrics import InsufficientRunsError
from memadvisor.predictor import ClusterConfig, plan
from memadvisor.simulator import BASELINE_BYTES, evaluate_plan, generate, simulate
from memadvisor.units import MB, bytes_to_mb, bytes_to_mb_ceil, mb_to_bytes


class CliError(Exception):
    pass


@dataclass
class Report:
    command: str
    inputs: dict[str, Any]
    result: dict[str, Any]
    warnings: list[str] = field(default_factory=list)

    def to_json(self) -> str:
        return json.dumps(
            {"command": self.command, "inputs": self.inputs, "result": self.result, "warnings": self.warnings},
            indent=2,
            sort_keys=True,
        )

    @classmethod
    def from_json(cls, text: str) -> "Report":
        d = json.loads(text)
        return cls(d["command"], d["inputs"], d["result"], d["warnings"])


# --- argument helpers -------------------------------------------------------


def _positive_mb(text: str) -> int:
    try:
        return mb_to_bytes(text)
    except (ValueError, ArithmeticError):
        raise argparse.ArgumentTypeError(f"expected a positive size in MB, got {text!r}") from None


def _nonneg_mb(text: str) -> int:
    if text.strip() in ("0", "0.0"):
        return 0
    return _positive_mb(text)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {text!r}")
    return v


def _category(text: str) -> Category:
    try:
        return Category.parse(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _add_cluster_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("cluster configuration")
    g.add_argument("--block-mb", type=_positive_mb, default=128 * MB, metavar="MB",
                   help="HDFS block size, Size_block (default 128)")
    g.add_argument("--tasks-per-executor", type=_positive_int, default=4, metavar="N",
                   help="concurrent tasks per executor, Task_ex; spark.executor.cores (default 4)")
    g.add_argument("--parallelism", type=_positive_int, default=4, metavar="N",
                   help="total shuffle-stage tasks; spark.default.parallelism (default 4)")
    g.add_argument("--cache-input", action=argparse.BooleanOptionalAction, default=True,
                   help="input is cached in executor memory, beta=1")
    g.add_argument("--reserved-mb", type=_nonneg_mb, default=300 * MB, metavar="MB",
                   help="reserved memory RM (default 300)")


def _cluster_config(args: argparse.Namespace) -> ClusterConfig:
    try:
        return ClusterConfig(
            block_size_bytes=args.block_mb,
            tasks_per_executor=args.tasks_per_executor,
            parallelism=args.parallelism,
            cache_input=args.cache_input,
            reserved_memory_bytes=args.reserved_mb,
        )
    except ValueError as exc:
        raise CliError(f"invalid configuration: {exc}") from None


def _kb(args: argparse.Namespace, required: bool = True) -> KnowledgeBase | None:
    path = getattr(args, "kb", None) or os.environ.get(ENV_VAR)
    if path is None and not required:
        return None
    return KnowledgeBase(path)


def _mb(n: int | Fraction) -> str:
    return f"{bytes_to_mb(n):.2f} MB"


# --- commands ---------------------------------------------------------------


def cmd_validate(args: argparse.Namespace) -> tuple[Report, str]:
    ps = load_profiles(args.profile)
    rep = validate_for_classification(ps)
    text = f"{ps.workload_id}: {rep.runs} run(s); {rep.summary()}"
    return Report("validate", {"profile": args.profile}, rep.to_dict(), list(rep.warnings)), text


def cmd_classify(args: argparse.Namespace, command: str = "classify") -> tuple[Report, str]:
    ps = load_profiles(args.profile)
    warnings = list(validate_for_classification(ps).warnings)
    try:
        result = classify_profile(ps)
    except InsufficientRunsError as exc:
        raise CliError(f"{exc}; add a second profiling run") from None
    lines = [
        f"workload     {ps.workload_id}",
        f"category     {result.category.value}",
        f"alpha        {float(result.alpha_mean):.6g}",
        f"inc_shuf     {'n/a' if result.inc_shuf is None else format(float(result.inc_shuf), '.6g')}",
        f"factor_shuf  {result.factor_shuf}",
    ]
    out = {"workload_id": ps.workload_id, "classification": result.to_dict()}
    kb = _kb(args, required=command == "kb put")
    if kb is not None:
        stored = kb.put(KbEntry.create(ps.workload_id, result, profile_digest(ps)))
        out["stored"] = {"path": str(kb.path), "replaced": stored.replaced}
        lines.append(f"stored in {kb.path}" + (" (replaced)" if stored.replaced else ""))
    return Report(command, {"profile": args.profile}, out, warnings), "\n".join(lines)


def cmd_predict(args: argparse.Namespace) -> tuple[Report, str]:
    cfg = _cluster_config(args)
    if args.category is not None:
        category = args.category
        source = "flag"
    else:
        kb = _kb(args)
        entry = kb.get(args.workload)
        if entry is None:
            known = ", ".join(e.workload_id for e in kb.list()) or "none"
            raise CliError(f"unknown workload {args.workload!r} in {kb.path}; known ids: {known}")
        category = entry.classification.category
        source = f"kb:{kb.path}"
    p = plan(category, args.input_mb, cfg)
    lines = [
        f"category            {category.value} (factor {category.factor})",
        f"input               {_mb(p.input_bytes)}",
        f"executors           {p.num_executors}",
        f"predicted shuffle   {_mb(p.predicted_shuffle_bytes)}",
        f"first stage         {_mb(p.mem_first_stage_bytes)}",
        f"other stages        {_mb(p.mem_other_stages_bytes)}",
        f"spark memory        {_mb(p.mem_spark_bytes)}",
        f"user memory         {_mb(p.user_memory_bytes)}",
        f"reserved            {_mb(p.reserved_bytes)}",
        f"executor memory     {p.capacity_mb} MB  (spark.executor.memory={p.capacity_mb}m)",
    ]
    inputs = {
        "category": category.value,
        "category_source": source,
        "input_bytes": args.input_mb,
        "config": cfg.to_dict(),
    }
    return Report("predict", inputs, p.to_dict()), "\n".join(lines)


def cmd_kb(args: argparse.Namespace) -> tuple[Report, str]:
    kb = _kb(args)
    if args.kb_command == "put":
        return cmd_classify(args, command="kb put")
    if args.kb_command == "get":
        entry = kb.get(args.workload)
        if entry is None:
            raise CliError(f"no entry for {args.workload!r} in {kb.path}")
        c = entry.classification
        text = f"{entry.workload_id}: {c.category.value} factor {c.factor_shuf} ({entry.created_at})"
        return Report("kb get", {"workload_id": args.workload, "kb": str(kb.path)}, entry.to_dict()), text
    entries = kb.list()
    text = "\n".join(
        f"{e.workload_id}\t{e.classification.category.value}\t{e.classification.factor_shuf}" for e in entries
    ) or "(empty)"
    return Report("kb list", {"kb": str(kb.path)}, {"entries": [e.to_dict() for e in entries]}), text


def cmd_simulate(args: argparse.Namespace) -> tuple[Report, str]:
    cfg = _cluster_config(args)
    spec = generate(args.category, args.input_mb, args.stages, args.seed, cap_at_factor=args.in_band)
    capacity = args.capacity_mb if args.capacity_mb is not None else plan(args.category, args.input_mb, cfg).capacity_bytes
    try:
        res = simulate(spec, capacity, cfg)
    except ValueError as exc:
        raise CliError(str(exc)) from None
    lines = [f"stage {t.stage_index}: {_mb(t.occupancy_bytes)}" for t in res.timeline]
    lines += [
        f"capacity  {bytes_to_mb_ceil(capacity)} MB (spark share {_mb(res.spark_share_bytes)})",
        f"peak      {_mb(res.peak_executor_bytes)}",
        f"headroom  {_mb(res.headroom_bytes)}",
        f"spilled   {_mb(res.spilled_bytes)}",
        f"oom       {'yes' if res.oom else 'no'}",
    ]
    inputs = {
        "category": args.category.value,
        "input_bytes": args.input_mb,
        "stages": args.stages,
        "seed": args.seed,
        "in_band": args.in_band,
        "config": cfg.to_dict(),
    }
    result = {"spec": {"per_stage_shuffle_bytes": list(spec.per_stage_shuffle_bytes)}, **res.to_dict()}
    return Report("simulate", inputs, result), "\n".join(lines)


def cmd_evaluate(args: argparse.Namespace) -> tuple[Report, str]:
    cfg = _cluster_config(args)
    rep = evaluate_plan(
        args.category,
        args.input_mb,
        cfg,
        trials=args.trials,
        seed=args.seed,
        baseline_bytes=args.baseline_mb,
        cap_at_factor=args.in_band,
    )

    def row(name, s):
        return (
            f"{name:<9}{bytes_to_mb_ceil(s.capacity_bytes):>8} MB  oom {s.oom_rate:6.1%}  "
            f"spill {s.spill_rate:6.1%}  waste {s.mean_waste_ratio:6.1%}"
        )

    lines = [
        f"{args.category.value} at {_mb(args.input_mb)}, {args.trials} trial(s), seed {args.seed}",
        row("plan", rep.planned),
        row("baseline", rep.baseline),
        f"savings vs baseline {rep.savings_ratio:.1%}",
    ]
    warnings = []
    if rep.savings_ratio <= 0:
        warnings.append("planned capacity is not below the baseline")
    inputs = {
        "category": args.category.value,
        "input_bytes": args.input_mb,
        "trials": args.trials,
        "seed": args.seed,
        "baseline_bytes": args.baseline_mb,
        "in_band": args.in_band,
        "config": cfg.to_dict(),
    }
    return Report("evaluate", inputs, rep.to_dict(), warnings), "\n".join(lines)


# --- parser -----------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--json", action="store_true", help="print a single JSON report")
    kb_flag = argparse.ArgumentParser(add_help=False)
    kb_flag.add_argument("--kb", metavar="PATH", help=f"knowledge base file (or set {ENV_VAR})")

    parser = argparse.ArgumentParser(
        prog="memadvisor",
        description="Classify analytic workloads by data expansion and size executor memory "
        "(the advised value is spark.executor.memory).",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", parents=[common], help="check a profile file")
    p.add_argument("profile")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("classify", parents=[common, kb_flag], help="classify a profiled workload")
    p.add_argument("profile")
    p.set_defaults(func=cmd_classify)

    p = sub.add_parser("predict", parents=[common, kb_flag], help="predict executor memory capacity")
    who = p.add_mutually_exclusive_group(required=True)
    who.add_argument("--category", type=_category, help="shrinking, medium, expanding-medium or expanding-rapid")
    who.add_argument("--workload", metavar="ID", help="look the category up in the knowledge base")
    p.add_argument("--input-mb", type=_positive_mb, required=True, metavar="MB", help="target input size")
    _add_cluster_flags(p)
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("kb", help="manage the knowledge base")
    kb_sub = p.add_subparsers(dest="kb_command", required=True)
    q = kb_sub.add_parser("put", parents=[common, kb_flag], help="classify a profile and store it")
    q.add_argument("profile")
    q = kb_sub.add_parser("get", parents=[common, kb_flag], help="show one entry")
    q.add_argument("workload")
    kb_sub.add_parser("list", parents=[common, kb_flag], help="list entries")
    p.set_defaults(func=cmd_kb)

    for name, func, helptext in (
        ("simulate", cmd_simulate, "simulate one synthetic workload"),
        ("evaluate", cmd_evaluate, "compare planned capacity to a fixed baseline"),
    ):
        p = sub.add_parser(name, parents=[common], help=helptext)
        p.add_argument("--category", type=_category, required=True)
        p.add_argument("--input-mb", type=_positive_mb, required=True, metavar="MB")
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--in-band", action="store_true",
                       help="keep every stage's shuffle within factor x input")
        _add_cluster_flags(p)
        p.set_defaults(func=func)
        if name == "simulate":
            p.add_argument("--stages", type=_positive_int, default=4)
            p.add_argument("--capacity-mb", type=_positive_mb, default=None, metavar="MB",
                           help="capacity to test (default: the predicted plan)")
        else:
            p.add_argument("--trials", type=_positive_int, default=100)
            p.add_argument("--baseline-mb", type=_positive_mb, default=BASELINE_BYTES, metavar="MB")
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        report, text = args.func(args)
    except (CliError, ProfileError, KbError, ValueError, OverflowError, OSError) as exc:
        print(f"memadvisor: error: {exc}", file=sys.stderr)
        return 1
    print(report.to_json() if args.json else text)
    if not args.json:
        for w in report.warnings:
            print(f"warning: {w}", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
