"""Canonical file formats and validation.

Everything crosses process boundaries as JSON (sessions, trials, fit
results, configuration) or CSV (tabular reports). Writes are atomic via
temp-file-and-rename. Session files are the interchange format between the
experiment service, the browser client, and the fitting pipeline.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np

from .env import Condition, TreeTopology, Trial, condition_presets, get_condition

SCHEMA_VERSION = 1
BONUS_DOLLARS_PER_POINT = 0.002
OUT_DIR_ENV_VAR = "METAPLAN_OUT_DIR"
DEFAULT_TRIALS = 35


class DataError(Exception):
    """Malformed or inconsistent input data."""


class ConfigError(Exception):
    """Invalid run configuration."""


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_DIR_ENV_VAR, "out"))


def atomic_write_text(path: Path | str, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def atomic_write_json(path: Path | str, obj: object) -> None:
    atomic_write_text(path, json.dumps(obj, indent=2, sort_keys=True) + "\n")


def write_csv(path: Path | str, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(_csv_cell(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def _csv_cell(x: object) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


def trial_to_json(trial: Trial) -> dict:
    return {
        "topology": trial.topology.to_json(),
        "condition_label": trial.condition.label,
        "trial_index": trial.trial_index,
        "ground_truth": {str(n): int(v) for n, v in sorted(trial.ground_truth.items())},
    }


def trial_from_json(obj: Mapping) -> Trial:
    topology = TreeTopology.from_json(obj["topology"])
    condition = get_condition(obj["condition_label"])
    ground_truth = {int(n): int(v) for n, v in obj["ground_truth"].items()}
    return Trial(topology, condition, ground_truth, int(obj["trial_index"]))


@dataclass(frozen=True)
class TrialRecord:
    """One completed trial as stored in a session file."""

    trial_index: int
    ground_truth: Mapping[int, int]
    clicks: tuple[int, ...]
    chosen_path: tuple[int, ...]
    score: int


@dataclass(frozen=True)
class ParticipantData:
    """One participant's (or simulated agent's) full session."""

    participant_id: str
    condition: Condition
    topology: TreeTopology
    records: tuple[TrialRecord, ...]

    @property
    def n_trials(self) -> int:
        return len(self.records)

    def click_counts(self) -> np.ndarray:
        return np.array([len(r.clicks) for r in self.records])

    def total_score(self) -> int:
        return int(sum(r.score for r in self.records))

    def trials(self) -> list[Trial]:
        """The participant's own trials, for simulation on identical mazes."""
        return [
            Trial(self.topology, self.condition, dict(r.ground_truth), r.trial_index)
            for r in self.records
        ]


def bonus_dollars(total_score: int) -> float:
    return max(0, total_score) * BONUS_DOLLARS_PER_POINT


def session_to_json(data: ParticipantData) -> dict:
    trials = []
    cumulative = 0
    for rec in data.records:
        cumulative += rec.score
        trials.append(
            {
                "trial_index": rec.trial_index,
                "ground_truth": {str(n): int(v) for n, v in sorted(rec.ground_truth.items())},
                "clicks": list(rec.clicks),
                "chosen_path": list(rec.chosen_path),
                "score": rec.score,
                "bonus_points": cumulative,
            }
        )
    total = data.total_score()
    return {
        "schema_version": SCHEMA_VERSION,
        "participant_id": data.participant_id,
        "condition": data.condition.label,
        "n_trials": data.n_trials,
        "topology": data.topology.to_json(),
        "trials": trials,
        "total_score": total,
        "bonus_dollars": bonus_dollars(total),
    }


def session_from_json(obj: Mapping) -> ParticipantData:
    try:
        version = obj["schema_version"]
        if version != SCHEMA_VERSION:
            raise DataError(f"unsupported schema_version {version}")
        condition = get_condition(obj["condition"])
        topology = TreeTopology.from_json(obj["topology"])
        records = tuple(
            TrialRecord(
                trial_index=int(t["trial_index"]),
                ground_truth={int(n): int(v) for n, v in t["ground_truth"].items()},
                clicks=tuple(int(c) for c in t["clicks"]),
                chosen_path=tuple(int(n) for n in t["chosen_path"]),
                score=int(t["score"]),
            )
            for t in obj["trials"]
        )
        return ParticipantData(str(obj["participant_id"]), condition, topology, records)
    except DataError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise DataError(f"malformed session file: {exc}") from exc


def save_session(path: Path | str, data: ParticipantData) -> None:
    atomic_write_json(path, session_to_json(data))


def load_session(path: Path | str) -> ParticipantData:
    path = Path(path)
    try:
        obj = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise DataError(f"{path}: invalid JSON: {exc}") from exc
    return session_from_json(obj)


def load_sessions(data_path: Path | str) -> list[ParticipantData]:
    """Load one session file or every ``*.json`` session in a directory."""
    data_path = Path(data_path)
    if data_path.is_dir():
        files = sorted(data_path.glob("*.json"))
        if not files:
            raise DataError(f"no session files in {data_path}")
        return [load_session(f) for f in files]
    return [load_session(data_path)]


@dataclass
class ValidationReport:
    ok: bool
    violations: list[str]
    excluded: bool

    def __str__(self) -> str:
        status = "ok" if self.ok else "invalid"
        flags = " [excluded: no planning in any trial]" if self.excluded else ""
        body = "".join(f"\n  - {v}" for v in self.violations)
        return f"{status}{flags}{body}"


def validate_session(source: Mapping | Path | str) -> ValidationReport:
    """Check every session-file invariant.

    Structural problems (missing keys, unknown condition) raise DataError;
    value-level inconsistencies are returned as violations. The exclusion
    flag marks participants who never clicked in any trial.
    """
    if isinstance(source, (str, Path)):
        obj = json.loads(Path(source).read_text())
    else:
        obj = source
    data = session_from_json(obj)
    violations: list[str] = []

    declared = int(obj.get("n_trials", DEFAULT_TRIALS))
    if data.n_trials != declared:
        violations.append(f"file declares {declared} trials but contains {data.n_trials}")

    topo = data.topology
    cond = data.condition
    reward_set = set(cond.reward_set)
    cumulative = 0
    for pos, (rec, raw) in enumerate(zip(data.records, obj["trials"])):
        tag = f"trial {rec.trial_index}"
        if rec.trial_index != pos:
            violations.append(f"{tag}: expected trial_index {pos}")
        missing = [n for n in topo.non_root if n not in rec.ground_truth]
        if missing:
            violations.append(f"{tag}: ground_truth missing nodes {missing}")
        bad_values = {n: v for n, v in rec.ground_truth.items() if v not in reward_set}
        if bad_values:
            violations.append(f"{tag}: values outside reward set: {bad_values}")
        if len(set(rec.clicks)) != len(rec.clicks):
            violations.append(f"{tag}: duplicate clicks")
        bad_clicks = [c for c in rec.clicks if c not in topo.parent]
        if bad_clicks:
            violations.append(f"{tag}: clicks on unknown/root nodes {bad_clicks}")
        if rec.chosen_path not in topo.paths:
            violations.append(f"{tag}: chosen_path is not a root-to-leaf path")
        else:
            expected = sum(rec.ground_truth.get(n, 0) for n in rec.chosen_path)
            expected += cond.click_cost * len(rec.clicks)
            if rec.score != expected:
                violations.append(
                    f"{tag}: score {rec.score} != path sum + click costs ({expected})"
                )
        cumulative += rec.score
        if "bonus_points" in raw and raw["bonus_points"] != cumulative:
            violations.append(
                f"{tag}: bonus_points {raw['bonus_points']} != cumulative score {cumulative}"
            )

    if "total_score" in obj and obj["total_score"] != cumulative:
        violations.append(f"total_score {obj['total_score']} != {cumulative}")
    if "bonus_dollars" in obj and abs(obj["bonus_dollars"] - bonus_dollars(cumulative)) > 1e-9:
        violations.append("bonus_dollars inconsistent with max(0, total_score) * 0.002")

    excluded = all(len(r.clicks) == 0 for r in data.records)
    return ValidationReport(ok=not violations, violations=violations, excluded=excluded)


@dataclass
class RunConfig:
    """Defaults shared by the CLI commands; overridable per flag."""

    variants: tuple[str, ...] = ("rf_pr",)
    condition: str | None = None
    agents: int = 50
    trials: int = DEFAULT_TRIALS
    budget: int = 400
    sims: int = 30
    seed: int = 0
    out_dir: str | None = None
    topology_branching: tuple[int, ...] = (3, 1, 2)
    params: dict = field(default_factory=dict)

    def topology(self) -> TreeTopology:
        return TreeTopology.from_branching(self.topology_branching)


def load_config(path: Path | str) -> RunConfig:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError("config must be a JSON object")
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = dict(obj)
    for key in ("variants", "topology_branching"):
        if key in kwargs:
            kwargs[key] = tuple(kwargs[key])
    try:
        cfg = RunConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    if cfg.agents < 1 or cfg.trials < 1 or cfg.budget < 1 or cfg.sims < 1:
        raise ConfigError("agents, trials, budget, and sims must be >= 1")
    if cfg.condition is not None and cfg.condition not in {
        c.label for c in condition_presets()
    }:
        raise ConfigError(f"unknown condition {cfg.condition!r}")
    return cfg
