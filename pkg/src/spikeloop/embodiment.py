"""Stimulation protocols coupling the network to an environment.

Two tasks are provided:

* a 1D loop task where input neurons are pulsed at a fixed frequency and
  the stimulation is removed either when enough output neurons respond
  (closed mode) or at random (open mode);
* a 2D square-arena robot whose wall-distance sensors set the pulse
  probability of two input neurons and whose wheel speeds are set by
  output-group spike counts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import ConfigurationError

EVENT_PULSE = "pulse"
EVENT_PULSE_LEFT = "pulse_left"
EVENT_PULSE_RIGHT = "pulse_right"
EVENT_REMOVAL_ON = "removal_on"
EVENT_REMOVAL_OFF = "removal_off"


@dataclass(frozen=True)
class LoopTaskConfig:
    """Fixed-frequency stimulation with activity-contingent (closed) or
    random (open) removal.

    Removal triggers in closed mode when strictly more than
    ``response_quorum`` distinct output neurons fire within
    ``response_window_ms`` of a pulse.
    """

    mode: str = "closed"
    stim_frequency_hz: float = 100.0
    stim_amplitude: float = 10.0
    response_window_ms: float = 10.0
    response_quorum: int = 5
    removal_duration_ms: tuple[float, float] = (1000.0, 2000.0)
    open_removal_probability: float = 0.02
    removal_schedule: tuple[tuple[float, float], ...] = ()

    def __post_init__(self) -> None:
        if self.mode not in ("closed", "open", "yoked"):
            raise ConfigurationError(
                f"mode must be 'closed', 'open' or 'yoked', got {self.mode!r}"
            )
        if self.mode == "yoked":
            starts = [start for start, _ in self.removal_schedule]
            if starts != sorted(starts):
                raise ConfigurationError("removal_schedule must be sorted by start time")
            if any(duration <= 0 for _, duration in self.removal_schedule):
                raise ConfigurationError("removal_schedule durations must be positive")
        elif self.removal_schedule:
            raise ConfigurationError("removal_schedule is only valid in yoked mode")
        if self.stim_frequency_hz <= 0:
            raise ConfigurationError("stim_frequency_hz must be positive")
        if self.response_window_ms <= 0:
            raise ConfigurationError("response_window_ms must be positive")
        if self.response_quorum < 0:
            raise ConfigurationError("response_quorum must be non-negative")
        lo, hi = self.removal_duration_ms
        if lo <= 0 or hi < lo:
            raise ConfigurationError("removal_duration_ms must be a positive range")
        if not (0 <= self.open_removal_probability <= 1):
            raise ConfigurationError("open_removal_probability must lie in [0, 1]")

    @property
    def pulse_period_ms(self) -> float:
        return 1000.0 / self.stim_frequency_hz


class LoopTask:
    """Protocol state machine for the 1D stimulation task.

    Drive the run loop as::

        amplitude_due = task.begin_step(now)      # now = time at step end
        spiked = net.step(drive)                  # drive built from amplitude_due
        task.observe_output_spikes(spiked_output_ids, now)

    The event log records (time_ms, kind) with kinds 'pulse',
    'removal_on', 'removal_off'. A response window spans
    [pulse, pulse + window), which at the 100 Hz / 10 ms defaults tiles
    the stimulation period exactly.
    """

    def __init__(self, config: LoopTaskConfig, rng: np.random.Generator):
        self.config = config
        self.rng = rng
        self.active = True
        self.removal_until = -math.inf
        self.last_pulse_time = -math.inf
        self.next_pulse_time = -math.inf  # first pulse is due immediately
        self._window_until = -math.inf
        self._responders: set[int] = set()
        self._schedule_index = 0
        self.events: list[tuple[float, str]] = [(0.0, EVENT_REMOVAL_OFF)]

    def begin_step(self, now: float) -> bool:
        """Advance protocol time to ``now`` (the end time of the step about
        to run). Returns True when a stimulation pulse fires this step."""
        cfg = self.config
        if not self.active and now >= self.removal_until:
            self.active = True
            self.next_pulse_time = now
            self.events.append((now, EVENT_REMOVAL_OFF))
        if cfg.mode == "yoked" and self.active:
            schedule = cfg.removal_schedule
            if self._schedule_index < len(schedule):
                start, duration = schedule[self._schedule_index]
                if now >= start:
                    self._schedule_index += 1
                    self._start_removal(now, duration)
                    return False
        if self.active and now >= self.next_pulse_time:
            self.last_pulse_time = now
            self.next_pulse_time = now + cfg.pulse_period_ms
            self._window_until = now + cfg.response_window_ms
            self._responders.clear()
            self.events.append((now, EVENT_PULSE))
            if cfg.mode == "open" and self.rng.random() < cfg.open_removal_probability:
                self._start_removal(now)
            return True
        return False

    def observe_output_spikes(self, output_spikers: np.ndarray, now: float) -> None:
        """Feed the output-group neurons that spiked at ``now``. In closed
        mode, exceeding the distinct-responder quorum triggers removal."""
        if self.config.mode != "closed" or not self.active:
            return
        if self.last_pulse_time <= now < self._window_until and len(output_spikers):
            self._responders.update(int(i) for i in output_spikers)
            if len(self._responders) > self.config.response_quorum:
                self._start_removal(now)

    def _start_removal(self, now: float, duration: float | None = None) -> None:
        if duration is None:
            lo, hi = self.config.removal_duration_ms
            duration = self.rng.uniform(lo, hi)
        self.active = False
        self.removal_until = now + duration
        self._responders.clear()
        self.events.append((now, EVENT_REMOVAL_ON))


def removal_schedule_from_events(
    events: list[tuple[float, str]],
) -> tuple[tuple[float, float], ...]:
    """Extract (start_ms, duration_ms) removal intervals from an event log,
    for replay by a yoked-mode task. A trailing removal with no matching
    reactivation is dropped."""
    schedule: list[tuple[float, float]] = []
    start: float | None = None
    for time_ms, kind in events:
        if kind == EVENT_REMOVAL_ON and start is None:
            start = time_ms
        elif kind == EVENT_REMOVAL_OFF and start is not None:
            schedule.append((start, time_ms - start))
            start = None
    return tuple(schedule)


def loop_task_step(
    task: LoopTask,
    output_spikes_in_window: np.ndarray,
    now: float,
    input_ids: np.ndarray,
    n_neurons: int,
) -> tuple[np.ndarray | None, LoopTask]:
    """One protocol tick: returns the external drive vector for this step
    (None when no pulse fires) and the advanced task state."""
    drive = None
    if task.begin_step(now):
        drive = np.zeros(n_neurons)
        drive[input_ids] = task.config.stim_amplitude
    task.observe_output_spikes(np.asarray(output_spikes_in_window), now)
    return drive, task


@dataclass(frozen=True)
class ArenaConfig:
    """Square arena, differential-drive robot, and sensorimotor mapping."""

    arena_side_cm: float = 60.0
    robot_radius_cm: float = 2.5
    sensor_max: int = 950
    sensor_threshold: int = 100
    sensor_range_cm: float = 10.0
    sensor_angle_rad: float = math.pi / 6  # sensors point +-30 deg off heading
    control_interval_ms: float = 100.0
    k: float = -0.3
    c_default: float = 12.5
    stim_amplitude: float = 10.0

    def __post_init__(self) -> None:
        if self.robot_radius_cm * 2 >= self.arena_side_cm:
            raise ConfigurationError("robot does not fit in the arena")
        if self.k >= 0:
            raise ConfigurationError("spike-to-speed gain k must be negative")
        if self.c_default <= 0:
            raise ConfigurationError("default wheel speed must be positive")
        if self.sensor_range_cm <= 0 or self.sensor_max <= 0:
            raise ConfigurationError("sensor model constants must be positive")


@dataclass(frozen=True)
class RobotPose:
    x: float
    y: float
    heading: float
    v_left: float = 0.0
    v_right: float = 0.0


def sensor_to_probability(s: float, config: ArenaConfig) -> float:
    """Stimulation probability from a raw sensor value: 0 below the
    threshold, s/S_max otherwise."""
    if not (0 <= s <= config.sensor_max):
        raise ValueError(f"sensor value {s} outside [0, {config.sensor_max}]")
    if s < config.sensor_threshold:
        return 0.0
    return s / config.sensor_max


def spikes_to_wheel_speed(spike_counts: np.ndarray, config: ArenaConfig) -> float:
    """Wheel speed k * sum(counts) + C: forward by default, slowing (and
    eventually reversing) as output activity grows."""
    counts = np.asarray(spike_counts)
    if counts.size and counts.min() < 0:
        raise ValueError("spike counts must be non-negative")
    return config.k * float(counts.sum()) + config.c_default


def _ray_wall_distance(x: float, y: float, direction: float, side: float) -> float:
    """Distance from (x, y) along ``direction`` to the nearest arena wall."""
    cx, cy = math.cos(direction), math.sin(direction)
    best = math.inf
    if cx > 1e-12:
        best = min(best, (side - x) / cx)
    elif cx < -1e-12:
        best = min(best, -x / cx)
    if cy > 1e-12:
        best = min(best, (side - y) / cy)
    elif cy < -1e-12:
        best = min(best, -y / cy)
    return best


def sensor_reading(pose: RobotPose, side: str, config: ArenaConfig) -> int:
    """Raw distance-sensor value: a linear ramp from S_max at wall contact
    to 0 at sensor_range, along a ray +-30 deg off the heading."""
    if side == "left":
        direction = pose.heading + config.sensor_angle_rad
    elif side == "right":
        direction = pose.heading - config.sensor_angle_rad
    else:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    wall = _ray_wall_distance(pose.x, pose.y, direction, config.arena_side_cm)
    d = max(wall - config.robot_radius_cm, 0.0)
    raw = round(config.sensor_max * max(0.0, 1.0 - d / config.sensor_range_cm))
    return int(min(max(raw, 0), config.sensor_max))


def robot_kinematics_step(pose: RobotPose, dt_s: float, config: ArenaConfig) -> RobotPose:
    """Differential-drive update over ``dt_s`` seconds (wheel base =
    2 * robot radius), followed by wall-collision clamping."""
    vl, vr = pose.v_left, pose.v_right
    v = 0.5 * (vl + vr)
    omega = (vr - vl) / (2.0 * config.robot_radius_cm)
    th = pose.heading
    if abs(omega) < 1e-12:
        x = pose.x + v * math.cos(th) * dt_s
        y = pose.y + v * math.sin(th) * dt_s
        th_new = th
    else:
        th_new = th + omega * dt_s
        r = v / omega
        x = pose.x + r * (math.sin(th_new) - math.sin(th))
        y = pose.y - r * (math.cos(th_new) - math.cos(th))
    lo = config.robot_radius_cm
    hi = config.arena_side_cm - config.robot_radius_cm
    x = min(max(x, lo), hi)
    y = min(max(y, lo), hi)
    return RobotPose(x=x, y=y, heading=th_new, v_left=vl, v_right=vr)


class ArenaTask:
    """Arena world state advanced once per control interval.

    On each tick the robot pose is integrated over the elapsed interval,
    both sensors are read, stimulation of the left/right input neuron is
    Bernoulli-drawn from the sensor probability, and wheel speeds are set
    from the output-group spike counts of the past interval.
    """

    def __init__(
        self,
        config: ArenaConfig,
        rng: np.random.Generator,
        left_input: int,
        right_input: int,
        left_outputs: np.ndarray,
        right_outputs: np.ndarray,
        start_pose: RobotPose | None = None,
    ):
        self.config = config
        self.rng = rng
        self.left_input = left_input
        self.right_input = right_input
        self.left_outputs = np.asarray(left_outputs, dtype=np.intp)
        self.right_outputs = np.asarray(right_outputs, dtype=np.intp)
        if start_pose is None:
            mid = config.arena_side_cm / 2.0
            start_pose = RobotPose(x=mid, y=mid, heading=0.0,
                                   v_left=config.c_default, v_right=config.c_default)
        self.pose = start_pose
        self.next_control_time = config.control_interval_ms
        self.events: list[tuple[float, str]] = []
        self.pose_log: list[tuple[float, RobotPose]] = [(0.0, start_pose)]
        self._pulse_left = False
        self._pulse_right = False

    def control_tick(self, now: float, output_counts: np.ndarray) -> None:
        """Run one 100 ms control cycle at time ``now`` given per-output-
        neuron spike counts integrated over the elapsed interval."""
        cfg = self.config
        self.pose = robot_kinematics_step(self.pose, cfg.control_interval_ms / 1000.0, cfg)

        p_left = sensor_to_probability(sensor_reading(self.pose, "left", cfg), cfg)
        p_right = sensor_to_probability(sensor_reading(self.pose, "right", cfg), cfg)
        self._pulse_left = self.rng.random() < p_left
        self._pulse_right = self.rng.random() < p_right
        if self._pulse_left:
            self.events.append((now, EVENT_PULSE_LEFT))
        if self._pulse_right:
            self.events.append((now, EVENT_PULSE_RIGHT))

        v_left = spikes_to_wheel_speed(output_counts[self.left_outputs], cfg)
        v_right = spikes_to_wheel_speed(output_counts[self.right_outputs], cfg)
        self.pose = replace(self.pose, v_left=v_left, v_right=v_right)
        self.pose_log.append((now, self.pose))
        self.next_control_time = now + cfg.control_interval_ms

    def drive_for_step(self, n_neurons: int) -> np.ndarray | None:
        """Drive vector for the step right after a control tick (pulses are
        applied for exactly one simulation step), then cleared."""
        if not (self._pulse_left or self._pulse_right):
            return None
        drive = np.zeros(n_neurons)
        if self._pulse_left:
            drive[self.left_input] = self.config.stim_amplitude
        if self._pulse_right:
            drive[self.right_input] = self.config.stim_amplitude
        self._pulse_left = self._pulse_right = False
        return drive
