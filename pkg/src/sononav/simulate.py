"""Scenario harness: scripted tool motion, tracking noise, trial metrics.

A scenario scripts the virtual tool as pose keyframes per target
(positions interpolate linearly, pointing axes along the geodesic) and a
Gaussian tracking-noise model with a fixed seed, so every run is
deterministic. The harness steps the engine at the tick rate, detects the
alignment start (first entry into the working area) and the drill start
(final phase sustained for a dwell), and reduces each target to one
metrics row.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace

import numpy as np
import yaml

from .config import EngineConfig
from .engine import NavigationEngine
from .fsm import Phase, TransitionKind, ZoneThresholds
from .geometry import (
    AnatomicalFrame,
    ErrorVector,
    PlannedTrajectory,
    Pose,
    quat_from_rotvec,
    quat_multiply,
    quat_normalize,
    quat_pointing,
    quat_rotate,
    quat_slerp,
)
from .session import SessionLog, SessionRecord, TargetPlan


@dataclass(frozen=True)
class NoiseModel:
    """Independent Gaussian jitter per tick on position (mm, per axis)
    and orientation (rotation vector, degrees)."""

    position_sigma_mm: float = 0.0
    orientation_sigma_deg: float = 0.0
    seed: int = 0


@dataclass(frozen=True)
class Keyframe:
    t: float
    position: np.ndarray
    axis: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "position",
                           np.asarray(self.position, dtype=float))
        object.__setattr__(self, "axis", np.asarray(self.axis, dtype=float))


@dataclass(frozen=True)
class MotionScript:
    """Keyframed tool motion against one labelled target."""

    target_label: str
    keyframes: tuple[Keyframe, ...]

    def __post_init__(self):
        if len(self.keyframes) < 2:
            raise ValueError("script needs at least two keyframes")
        times = [k.t for k in self.keyframes]
        if times != sorted(times) or len(set(times)) != len(times):
            raise ValueError("keyframe times must be strictly increasing")
        if not math.isfinite(times[-1]):
            raise ValueError("script duration must be finite")

    @property
    def duration_s(self) -> float:
        return self.keyframes[-1].t - self.keyframes[0].t

    def pose_at(self, t: float) -> Pose:
        frames = self.keyframes
        t = min(max(t, frames[0].t), frames[-1].t)
        hi = 1
        while hi < len(frames) - 1 and frames[hi].t < t:
            hi += 1
        a, b = frames[hi - 1], frames[hi]
        u = 0.0 if b.t == a.t else (t - a.t) / (b.t - a.t)
        position = (1.0 - u) * a.position + u * b.position
        orientation = quat_slerp(quat_pointing(a.axis), quat_pointing(b.axis), u)
        return Pose(position, quat_normalize(orientation))


@dataclass(frozen=True)
class Scenario:
    name: str
    plan: TargetPlan
    scripts: tuple[MotionScript, ...]
    noise: NoiseModel = NoiseModel()
    tick_rate_hz: float = 50.0

    def __post_init__(self):
        if self.tick_rate_hz <= 0:
            raise ValueError("tick rate must be positive")
        for script in self.scripts:
            if script.target_label not in self.plan.labels:
                raise ValueError(f"script target {script.target_label!r} not in plan")


@dataclass
class TrialMetrics:
    """One row per target: timing, final error, event bookkeeping."""

    target_label: str
    alignment_time_s: float | None
    first_enter_ep_s: float | None
    drill_start_s: float | None
    final_error: ErrorVector | None
    transition_counts: dict = field(default_factory=dict)
    event_timeline: list = field(default_factory=list)  # (timestamp_s, event str)


def _noisy(pose: Pose, noise: NoiseModel, rng) -> Pose:
    position = pose.position
    orientation = pose.orientation
    if noise.position_sigma_mm > 0:
        position = position + rng.normal(0.0, noise.position_sigma_mm, 3)
    if noise.orientation_sigma_deg > 0:
        rotvec = rng.normal(0.0, math.radians(noise.orientation_sigma_deg), 3)
        orientation = quat_normalize(
            quat_multiply(quat_from_rotvec(rotvec), orientation))
    if position is pose.position and orientation is pose.orientation:
        return pose
    return Pose(position, orientation)


def run_scenario(scenario: Scenario,
                 config: EngineConfig = EngineConfig()
                 ) -> tuple[SessionLog, list[TrialMetrics]]:
    """Step the engine over the noisy script; one metrics row per script."""
    if scenario.tick_rate_hz != config.tick_rate_hz:
        config = replace(config, tick_rate_hz=scenario.tick_rate_hz)
    engine = NavigationEngine(scenario.plan, config)
    rng = np.random.default_rng(scenario.noise.seed)
    log = SessionLog(plan=scenario.plan, meta={
        "scenario": scenario.name,
        "config": config.to_dict(),
        "noise": {"position_sigma_mm": scenario.noise.position_sigma_mm,
                  "orientation_sigma_deg": scenario.noise.orientation_sigma_deg,
                  "seed": scenario.noise.seed},
    })
    metrics: list[TrialMetrics] = []
    for script in scenario.scripts:
        target_id = scenario.plan.labels.index(script.target_label)
        engine.select_target(target_id)
        engine.reset_alignment()  # repeat trials on one target start fresh
        ticks = int(round(script.duration_s * scenario.tick_rate_hz)) + 1
        records = []
        for k in range(ticks):
            t_script = script.keyframes[0].t + k / scenario.tick_rate_hz
            pose = _noisy(script.pose_at(t_script), scenario.noise, rng)
            records.append(engine.process(pose, target_id))
        log.records.extend(records)
        metrics.append(metrics_from_records(records, script.target_label, config))
    return log, metrics


def metrics_from_records(records: list[SessionRecord], label: str,
                         config: EngineConfig) -> TrialMetrics:
    """Reduce one target's record stream to a metrics row.

    Drill start is the first tick of the first FP stretch sustained for
    the configured dwell; alignment time runs from the first entry into
    the working area to the drill start. A run that never sustains FP
    reports alignment_time None and the last tick's error.
    """
    dwell_ticks = max(1, int(math.ceil(config.drill_dwell_s * config.tick_rate_hz)))
    first_enter_ep = None
    drill_start = None
    final_error = None
    counts: dict[str, int] = {}
    timeline: list[tuple[float, str]] = []
    fp_run: list[SessionRecord] = []
    for rec in records:
        for event in rec.events:
            text = str(event)
            counts[text] = counts.get(text, 0) + 1
            timeline.append((rec.timestamp_s, text))
            if (event.kind is TransitionKind.ENTER_EP
                    and first_enter_ep is None):
                first_enter_ep = rec.timestamp_s
        if rec.phase is Phase.FP:
            fp_run.append(rec)
            if drill_start is None and len(fp_run) >= dwell_ticks:
                drill_start = fp_run[0].timestamp_s
                final_error = fp_run[0].error
        else:
            fp_run = []
    alignment_time = None
    if drill_start is not None and first_enter_ep is not None:
        alignment_time = drill_start - first_enter_ep
    if final_error is None and records:
        final_error = records[-1].error
    return TrialMetrics(
        target_label=label,
        alignment_time_s=alignment_time,
        first_enter_ep_s=first_enter_ep,
        drill_start_s=drill_start,
        final_error=final_error,
        transition_counts=counts,
        event_timeline=timeline,
    )


def metrics_from_log(log: SessionLog, config: EngineConfig) -> list[TrialMetrics]:
    """Per-target metrics for an already-recorded session."""
    by_target: dict[int, list[SessionRecord]] = {}
    for rec in log.records:
        by_target.setdefault(rec.target_id, []).append(rec)
    return [metrics_from_records(records, log.plan.labels[tid], config)
            for tid, records in sorted(by_target.items())]


REPORT_COLUMNS = ["label", "n", "n_no_alignment",
                  "alignment_time_mean_s", "alignment_time_sd_s",
                  "final_d_mean_mm", "final_d_sd_mm",
                  "final_theta_mean_deg", "final_theta_sd_deg"]


def report(metrics: list[TrialMetrics],
           group_labels: list[str] | None = None) -> tuple[str, str]:
    """Summarize metrics rows per label as (text table, CSV).

    Rows without an alignment time are excluded from the time statistics
    and counted in the n_no_alignment column.
    """
    if not metrics:
        raise ValueError("report needs at least one metrics row")
    if group_labels is None:
        group_labels = [m.target_label for m in metrics]
    if len(group_labels) != len(metrics):
        raise ValueError("one group label per metrics row required")

    def mean_sd(values):
        if not values:
            return float("nan"), float("nan")
        mean = sum(values) / len(values)
        if len(values) < 2:
            return mean, 0.0
        sd = math.sqrt(sum((v - mean) ** 2 for v in values) / (len(values) - 1))
        return mean, sd

    groups: dict[str, list[TrialMetrics]] = {}
    for label, row in zip(group_labels, metrics):
        groups.setdefault(label, []).append(row)

    out_rows = []
    for label in sorted(groups):
        members = groups[label]
        times = [m.alignment_time_s for m in members if m.alignment_time_s is not None]
        ds = [m.final_error.d for m in members if m.final_error is not None]
        thetas = [m.final_error.theta for m in members if m.final_error is not None]
        t_mean, t_sd = mean_sd(times)
        d_mean, d_sd = mean_sd(ds)
        th_mean, th_sd = mean_sd(thetas)
        out_rows.append({
            "label": label, "n": len(members),
            "n_no_alignment": len(members) - len(times),
            "alignment_time_mean_s": t_mean, "alignment_time_sd_s": t_sd,
            "final_d_mean_mm": d_mean, "final_d_sd_mm": d_sd,
            "final_theta_mean_deg": th_mean, "final_theta_sd_deg": th_sd,
        })

    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=REPORT_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for row in out_rows:
        writer.writerow(row)

    widths = {c: len(c) for c in REPORT_COLUMNS}
    rendered = []
    for row in out_rows:
        cells = {c: (f"{row[c]:.3f}" if isinstance(row[c], float) else str(row[c]))
                 for c in REPORT_COLUMNS}
        for c in REPORT_COLUMNS:
            widths[c] = max(widths[c], len(cells[c]))
        rendered.append(cells)
    lines = ["  ".join(c.ljust(widths[c]) for c in REPORT_COLUMNS)]
    lines += ["  ".join(cells[c].ljust(widths[c]) for c in REPORT_COLUMNS)
              for cells in rendered]
    return "\n".join(lines) + "\n", buf.getvalue()


# ---------------------------------------------------------------------------
# scenario files
# ---------------------------------------------------------------------------

def scenario_to_dict(scenario: Scenario) -> dict:
    return {
        "name": scenario.name,
        "tick_rate_hz": scenario.tick_rate_hz,
        "noise": {"position_sigma_mm": scenario.noise.position_sigma_mm,
                  "orientation_sigma_deg": scenario.noise.orientation_sigma_deg,
                  "seed": scenario.noise.seed},
        "plan": scenario.plan.to_dict(),
        "scripts": [
            {"target": s.target_label,
             "keyframes": [{"t": k.t, "position": [float(v) for v in k.position],
                            "axis": [float(v) for v in k.axis]}
                           for k in s.keyframes]}
            for s in scenario.scripts],
    }


def scenario_from_dict(data: dict) -> Scenario:
    noise = NoiseModel(**(data.get("noise") or {}))
    plan = TargetPlan.from_dict(data["plan"])
    scripts = tuple(
        MotionScript(
            target_label=entry["target"],
            keyframes=tuple(Keyframe(k["t"], k["position"], k["axis"])
                            for k in entry["keyframes"]))
        for entry in data["scripts"])
    return Scenario(name=data.get("name", "scenario"), plan=plan, scripts=scripts,
                    noise=noise, tick_rate_hz=data.get("tick_rate_hz", 50.0))


def load_scenario(path) -> Scenario:
    with open(path, "r", encoding="utf-8") as fh:
        data = yaml.safe_load(fh)
    if not isinstance(data, dict):
        raise ValueError("scenario file root must be a mapping")
    return scenario_from_dict(data)


def save_scenario(path, scenario: Scenario) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        yaml.safe_dump(scenario_to_dict(scenario), fh, sort_keys=False)


def demo_scenario() -> Scenario:
    """The shipped convergence demo: approach, tip alignment, angle
    alignment, then a hold long past the drill dwell."""
    frame = AnatomicalFrame.identity()
    direction = np.array([0.15, 0.97, -0.2])
    direction = direction / np.linalg.norm(direction)
    entry = np.array([12.0, 40.0, -8.0])
    target = PlannedTrajectory(entry, direction)
    plan = TargetPlan((target,), ("L3-left",), frame)

    tilted = quat_rotate(quat_from_rotvec(np.radians([12.0, 0.0, 16.0])), direction)
    start = entry + np.array([30.0, -6.0, 18.0])
    near = entry + 0.2 * np.array([1.0, 0.0, 0.0])
    held = entry + 0.1 * np.array([1.0, 0.0, 0.0])
    script = MotionScript("L3-left", (
        Keyframe(0.0, start, tilted),
        Keyframe(3.0, near, tilted),
        Keyframe(6.0, held, direction),
        Keyframe(8.0, held, direction),
    ))
    return Scenario(name="demo", plan=plan, scripts=(script,))
