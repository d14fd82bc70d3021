"""Profile record parsing and validation.

A profile file holds one JSON object per line, each describing a single
run of one workload at one input size::

    {"workload_id": "wl", "input_bytes": 10485760, "cached_input": true,
     "stages": [{"stage_index": 0, "shuffle_read_bytes": 0, "shuffle_write_bytes": 0}, ...]}

Lines starting with ``#`` and blank lines are ignored.
"""

from __future__ import annotations

import hashlib
import io
import json
from dataclasses import dataclass, field
from typing import IO, Iterable

__all__ = [
    "ProfileError",
    "ProfileSet",
    "RunProfile",
    "StageRecord",
    "ValidationReport",
    "dump_profiles",
    "load_profiles",
    "parse_profiles",
    "profile_digest",
    "validate_for_classification",
]

_RUN_KEYS = {"workload_id", "input_bytes", "cached_input", "stages"}
_STAGE_KEYS = {"stage_index", "shuffle_read_bytes", "shuffle_write_bytes"}


class ProfileError(ValueError):
    """Raised for any malformed or inconsistent profile input."""

    def __init__(self, message: str, line: int | None = None, field: str | None = None):
        self.line = line
        self.field = field
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field is not None:
            where.append(f"field {field!r}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)


@dataclass(frozen=True)
class StageRecord:
    stage_index: int
    shuffle_read_bytes: int
    shuffle_write_bytes: int

    def __post_init__(self) -> None:
        for name in ("stage_index", "shuffle_read_bytes", "shuffle_write_bytes"):
            v = getattr(self, name)
            if not _is_int(v) or v < 0:
                raise ProfileError(f"must be a non-negative integer, got {v!r}", field=name)


@dataclass(frozen=True)
class RunProfile:
    workload_id: str
    input_bytes: int
    stages: tuple[StageRecord, ...]
    cached_input: bool = False

    def __post_init__(self) -> None:
        if not isinstance(self.workload_id, str) or not self.workload_id:
            raise ProfileError("must be a non-empty string", field="workload_id")
        if not _is_int(self.input_bytes) or self.input_bytes <= 0:
            raise ProfileError(f"must be a positive integer, got {self.input_bytes!r}", field="input_bytes")
        if not isinstance(self.cached_input, bool):
            raise ProfileError("must be a boolean", field="cached_input")
        object.__setattr__(self, "stages", tuple(self.stages))
        if not self.stages:
            raise ProfileError("a run needs at least one stage", field="stages")
        indices = [s.stage_index for s in self.stages]
        if indices != list(range(len(indices))):
            raise ProfileError(f"stage_index values must be 0..{len(indices) - 1} in order, got {indices}", field="stages")


@dataclass(frozen=True)
class ProfileSet:
    """All profiling runs of one workload, ascending by input size."""

    workload_id: str
    runs: tuple[RunProfile, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        object.__setattr__(self, "runs", tuple(self.runs))
        if not self.runs:
            raise ProfileError("a profile set needs at least one run")
        for r in self.runs:
            if r.workload_id != self.workload_id:
                raise ProfileError(f"mixed workload ids: {self.workload_id!r} and {r.workload_id!r}", field="workload_id")
        sizes = [r.input_bytes for r in self.runs]
        for a, b in zip(sizes, sizes[1:]):
            if b <= a:
                raise ProfileError(f"input_bytes must be strictly ascending, got {a} then {b}", field="input_bytes")

    @classmethod
    def from_runs(cls, runs: Iterable[RunProfile]) -> "ProfileSet":
        """Build a set from runs in any order; duplicates of input size are rejected."""
        runs = list(runs)
        if not runs:
            raise ProfileError("no runs")
        ordered = sorted(runs, key=lambda r: r.input_bytes)
        for a, b in zip(ordered, ordered[1:]):
            if a.input_bytes == b.input_bytes:
                raise ProfileError(f"duplicate input_bytes {a.input_bytes}", field="input_bytes")
        return cls(ordered[0].workload_id, tuple(ordered))


@dataclass(frozen=True)
class ValidationReport:
    workload_id: str
    runs: int
    alpha_computable: bool
    inc_shuf_computable: bool
    warnings: tuple[str, ...] = ()

    def summary(self) -> str:
        inc = "inc_shuf computable" if self.inc_shuf_computable else "inc_shuf NOT computable"
        alpha = "α computable" if self.alpha_computable else "α NOT computable"
        return f"{alpha}, {inc}"

    def to_dict(self) -> dict:
        return {
            "workload_id": self.workload_id,
            "runs": self.runs,
            "alpha_computable": self.alpha_computable,
            "inc_shuf_computable": self.inc_shuf_computable,
            "warnings": list(self.warnings),
        }


def _is_int(v: object) -> bool:
    return isinstance(v, int) and not isinstance(v, bool)


def _parse_stage(obj: object, lineno: int, pos: int) -> StageRecord:
    if not isinstance(obj, dict):
        raise ProfileError(f"stage {pos} must be an object", line=lineno, field="stages")
    missing = _STAGE_KEYS - obj.keys()
    if missing:
        raise ProfileError("missing", line=lineno, field=f"stages[{pos}].{sorted(missing)[0]}")
    extra = obj.keys() - _STAGE_KEYS
    if extra:
        raise ProfileError("unknown key", line=lineno, field=f"stages[{pos}].{sorted(extra)[0]}")
    for key in ("stage_index", "shuffle_read_bytes", "shuffle_write_bytes"):
        v = obj[key]
        if not _is_int(v) or v < 0:
            raise ProfileError(f"must be a non-negative integer, got {v!r}", line=lineno, field=f"stages[{pos}].{key}")
    return StageRecord(obj["stage_index"], obj["shuffle_read_bytes"], obj["shuffle_write_bytes"])


def _parse_line(text: str, lineno: int) -> RunProfile:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProfileError(f"invalid JSON ({exc.msg})", line=lineno) from None
    if not isinstance(obj, dict):
        raise ProfileError("record must be a JSON object", line=lineno)
    missing = _RUN_KEYS - obj.keys()
    if missing:
        raise ProfileError("missing", line=lineno, field=sorted(missing)[0])
    extra = obj.keys() - _RUN_KEYS
    if extra:
        raise ProfileError("unknown key", line=lineno, field=sorted(extra)[0])
    if not isinstance(obj["workload_id"], str) or not obj["workload_id"]:
        raise ProfileError("must be a non-empty string", line=lineno, field="workload_id")
    if not _is_int(obj["input_bytes"]) or obj["input_bytes"] <= 0:
        raise ProfileError(f"must be a positive integer, got {obj['input_bytes']!r}", line=lineno, field="input_bytes")
    if not isinstance(obj["cached_input"], bool):
        raise ProfileError("must be a boolean", line=lineno, field="cached_input")
    if not isinstance(obj["stages"], list) or not obj["stages"]:
        raise ProfileError("must be a non-empty list", line=lineno, field="stages")
    stages = tuple(_parse_stage(s, lineno, i) for i, s in enumerate(obj["stages"]))
    try:
        return RunProfile(obj["workload_id"], obj["input_bytes"], stages, obj["cached_input"])
    except ProfileError as exc:
        raise ProfileError(str(exc), line=lineno, field=exc.field) from None


def parse_profiles(source: IO[bytes] | IO[str] | bytes | str) -> ProfileSet:
    """Parse a profile stream into a ProfileSet sorted by input size.

    Accepts a binary or text stream, or the raw content itself. Raises
    ProfileError carrying the offending line number for any bad record.
    """
    if isinstance(source, (bytes, str)):
        data = source
    else:
        data = source.read()
    if isinstance(data, bytes):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise ProfileError(f"not UTF-8 ({exc.reason})") from None

    runs: list[RunProfile] = []
    seen: dict[int, int] = {}
    for lineno, raw in enumerate(io.StringIO(data), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        run = _parse_line(line, lineno)
        if runs and run.workload_id != runs[0].workload_id:
            raise ProfileError(
                f"mixed workload ids: {runs[0].workload_id!r} and {run.workload_id!r}",
                line=lineno,
                field="workload_id",
            )
        if run.input_bytes in seen:
            raise ProfileError(
                f"duplicate input_bytes {run.input_bytes} (first on line {seen[run.input_bytes]})",
                line=lineno,
                field="input_bytes",
            )
        seen[run.input_bytes] = lineno
        runs.append(run)
    if not runs:
        raise ProfileError("empty profile: no run records found")
    return ProfileSet.from_runs(runs)


def load_profiles(path) -> ProfileSet:
    with open(path, "rb") as fh:
        return parse_profiles(fh)


def run_to_dict(run: RunProfile) -> dict:
    return {
        "workload_id": run.workload_id,
        "input_bytes": run.input_bytes,
        "cached_input": run.cached_input,
        "stages": [
            {
                "stage_index": s.stage_index,
                "shuffle_read_bytes": s.shuffle_read_bytes,
                "shuffle_write_bytes": s.shuffle_write_bytes,
            }
            for s in run.stages
        ],
    }


def dump_profiles(ps: ProfileSet) -> str:
    """Serialize back to the line format; parse_profiles(dump_profiles(ps)) == ps."""
    return "".join(json.dumps(run_to_dict(r), sort_keys=True) + "\n" for r in ps.runs)


def profile_digest(ps: ProfileSet) -> str:
    """sha256 of the canonical serialization."""
    return "sha256:" + hashlib.sha256(dump_profiles(ps).encode("utf-8")).hexdigest()


def validate_for_classification(ps: ProfileSet) -> ValidationReport:
    warnings = []
    if all(s.shuffle_read_bytes + s.shuffle_write_bytes == 0 for r in ps.runs for s in r.stages):
        warnings.append("degenerate: α = 0 in all runs")
    n = len(ps.runs)
    if n < 2:
        warnings.append("only one run: the Expanding class cannot be subdivided; add a second profiling run")
    return ValidationReport(
        workload_id=ps.workload_id,
        runs=n,
        alpha_computable=n >= 1,
        inc_shuf_computable=n >= 2,
        warnings=tuple(warnings),
    )
