"""Stimulation protocol state machine, sensor model, and robot kinematics."""

import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from spikeloop import (
    ArenaConfig,
    ArenaTask,
    ConfigurationError,
    LoopTask,
    LoopTaskConfig,
    RobotPose,
    robot_kinematics_step,
    sensor_reading,
    sensor_to_probability,
    spikes_to_wheel_speed,
)
from spikeloop.embodiment import (
    EVENT_PULSE,
    EVENT_REMOVAL_OFF,
    EVENT_REMOVAL_ON,
    loop_task_step,
)


def make_task(**kwargs):
    cfg = LoopTaskConfig(**kwargs)
    return LoopTask(cfg, np.random.default_rng(0))


def drive_pulses(task, until_ms, dt=0.5, responders=None):
    """Advance the protocol clock, feeding ``responders`` (id -> time) if
    given. Returns the pulse times."""
    pulses = []
    steps = int(until_ms / dt)
    for k in range(steps):
        now = (k + 1) * dt
        if task.begin_step(now):
            pulses.append(now)
        if responders:
            due = [i for (i, t) in responders if t == now]
            if due:
                task.observe_output_spikes(np.array(due), now)
    return pulses


# ------------------------------------------------------------ loop protocol


def test_pulses_at_100hz():
    task = make_task()
    pulses = drive_pulses(task, 100.0)
    assert pulses == [0.5 + 10.0 * k for k in range(10)]


def test_quorum_is_strict_and_counts_distinct_neurons():
    # Exactly 5 distinct responders: no removal.
    task = make_task()
    hits = [(10 + i, 2.0) for i in range(5)]
    drive_pulses(task, 50.0, responders=hits)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in task.events)

    # 6 distinct responders inside the window: removal.
    task = make_task()
    hits = [(10 + i, 2.0) for i in range(6)]
    drive_pulses(task, 50.0, responders=hits)
    assert any(kind == EVENT_REMOVAL_ON for _, kind in task.events)

    # 10 spikes of a single neuron never trigger removal.
    task = make_task()
    hits = [(10, 1.0 + 0.5 * i) for i in range(10)]
    drive_pulses(task, 50.0, responders=hits)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in task.events)


def test_responses_outside_window_ignored():
    task = make_task()
    # First pulse at 0.5 ms; the window closes at 10.5 ms.
    hits = [(10 + i, 11.0) for i in range(8)]
    drive_pulses(task, 9.9, responders=hits)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in task.events)


def test_removal_pauses_pulses_then_resumes():
    task = make_task(removal_duration_ms=(100.0, 100.0))
    hits = [(10 + i, 2.0) for i in range(7)]
    drive_pulses(task, 200.0, responders=hits)
    kinds = dict((k, [t for t, kk in task.events if kk == k]) for k in
                 (EVENT_PULSE, EVENT_REMOVAL_ON, EVENT_REMOVAL_OFF))
    assert kinds[EVENT_REMOVAL_ON] == [2.0]
    # Removal lifts exactly 100 ms later; log starts with the t=0 marker.
    assert kinds[EVENT_REMOVAL_OFF] == [0.0, 102.0]
    # No pulse falls inside the removal interval.
    assert not any(2.0 < t < 102.0 for t in kinds[EVENT_PULSE])
    # Stimulation resumes immediately at reactivation.
    assert 102.0 in kinds[EVENT_PULSE]


def test_no_pulse_while_removed_protocol_safety():
    task = make_task(mode="open", open_removal_probability=0.1)
    drive_pulses(task, 5000.0)
    active = None
    # The log is append-ordered; same-timestamp reactivation emits
    # removal_off before the resuming pulse.
    for t, kind in task.events:
        if kind == EVENT_REMOVAL_OFF:
            active = True
        elif kind == EVENT_REMOVAL_ON:
            active = False
        elif kind == EVENT_PULSE:
            assert active, f"pulse at {t} during removal"


def test_open_mode_boundary_probabilities():
    never = make_task(mode="open", open_removal_probability=0.0)
    drive_pulses(never, 2000.0)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in never.events)

    always = make_task(mode="open", open_removal_probability=1.0)
    drive_pulses(always, 50.0)
    on = [t for t, kind in always.events if kind == EVENT_REMOVAL_ON]
    assert on and on[0] == 0.5  # removed right at the first pulse


def test_open_mode_ignores_output_activity():
    task = make_task(mode="open", open_removal_probability=0.0)
    hits = [(10 + i, 2.0) for i in range(10)]
    drive_pulses(task, 100.0, responders=hits)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in task.events)


def test_loop_task_step_emits_drive_vector():
    task = make_task()
    drive, task = loop_task_step(task, np.array([]), 0.5, np.arange(10), 100)
    assert drive is not None
    assert np.all(drive[:10] == 10.0) and np.all(drive[10:] == 0.0)
    drive, task = loop_task_step(task, np.array([]), 1.0, np.arange(10), 100)
    assert drive is None


def test_loop_config_validation():
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(mode="yoked-ish")
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(stim_frequency_hz=0.0)
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(removal_duration_ms=(2000.0, 1000.0))
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(open_removal_probability=1.5)
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(mode="yoked", removal_schedule=((50.0, 100.0), (20.0, 100.0)))
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(mode="yoked", removal_schedule=((50.0, 0.0),))
    with pytest.raises(ConfigurationError):
        LoopTaskConfig(mode="closed", removal_schedule=((50.0, 100.0),))


def test_yoked_mode_replays_schedule_exactly():
    schedule = ((20.0, 100.0), (300.0, 50.0))
    task = make_task(mode="yoked", removal_schedule=schedule)
    drive_pulses(task, 500.0)
    ons = [t for t, kind in task.events if kind == EVENT_REMOVAL_ON]
    offs = [t for t, kind in task.events if kind == EVENT_REMOVAL_OFF]
    assert ons == [20.0, 300.0]
    assert offs == [0.0, 120.0, 350.0]
    # No pulses fall inside the replayed removal windows.
    pulses = [t for t, kind in task.events if kind == EVENT_PULSE]
    for start, duration in schedule:
        assert not any(start <= t < start + duration for t in pulses)


def test_yoked_mode_ignores_output_activity():
    task = make_task(mode="yoked", removal_schedule=((200.0, 100.0),))
    hits = [(10 + i, 2.0) for i in range(10)]
    drive_pulses(task, 150.0, responders=hits)
    assert not any(kind == EVENT_REMOVAL_ON for _, kind in task.events)


def test_removal_schedule_round_trips_through_event_log():
    from spikeloop import removal_schedule_from_events

    source = make_task(mode="open", open_removal_probability=0.1)
    drive_pulses(source, 5000.0)
    schedule = removal_schedule_from_events(source.events)
    assert schedule  # the 0.1 probability makes removals overwhelmingly likely
    assert all(duration >= 1000.0 for _, duration in schedule)

    replay = make_task(mode="yoked", removal_schedule=schedule)
    drive_pulses(replay, 5000.0)
    assert removal_schedule_from_events(replay.events) == schedule


# ------------------------------------------------------------ sensor model


def test_sensor_probability_examples():
    cfg = ArenaConfig()
    assert sensor_to_probability(50, cfg) == 0.0
    assert sensor_to_probability(950, cfg) == 1.0
    assert sensor_to_probability(475, cfg) == 0.5
    with pytest.raises(ValueError):
        sensor_to_probability(951, cfg)
    with pytest.raises(ValueError):
        sensor_to_probability(-1, cfg)


@given(s=st.integers(0, 950))
def test_sensor_probability_always_unit_interval(s):
    p = sensor_to_probability(s, ArenaConfig())
    assert 0.0 <= p <= 1.0


def test_wheel_speed_examples():
    cfg = ArenaConfig()
    assert spikes_to_wheel_speed(np.zeros(10), cfg) == 12.5
    assert spikes_to_wheel_speed(np.array([10]), cfg) == pytest.approx(9.5)
    assert spikes_to_wheel_speed(np.array([25, 25]), cfg) == pytest.approx(-2.5)
    with pytest.raises(ValueError):
        spikes_to_wheel_speed(np.array([-1]), cfg)


@given(counts=st.lists(st.integers(0, 50), min_size=1, max_size=10))
def test_wheel_speed_affine_in_total_count(counts):
    cfg = ArenaConfig()
    speed = spikes_to_wheel_speed(np.array(counts), cfg)
    assert speed == pytest.approx(cfg.k * sum(counts) + cfg.c_default)


def test_sensor_reading_boundaries():
    cfg = ArenaConfig()
    # Facing the far wall from the center: distance >> range -> 0.
    mid = cfg.arena_side_cm / 2
    assert sensor_reading(RobotPose(mid, mid, 0.0), "left", cfg) == 0

    # Robot touching the right wall, sensor ray angled 30 deg off the
    # normal: d = wall/cos(30) - r.
    pose = RobotPose(cfg.arena_side_cm - cfg.robot_radius_cm, mid, 0.0)
    wall = cfg.robot_radius_cm / math.cos(cfg.sensor_angle_rad)
    d = wall - cfg.robot_radius_cm
    expected = round(cfg.sensor_max * (1.0 - d / cfg.sensor_range_cm))
    assert sensor_reading(pose, "left", cfg) == expected

    # Head-on contact (heading straight at the wall) saturates the ramp
    # only when the ray length equals the radius -> d = 0 -> S_max.
    contact = RobotPose(cfg.arena_side_cm - cfg.robot_radius_cm, mid, 0.0)
    straight = ArenaConfig(sensor_angle_rad=0.0)
    assert sensor_reading(contact, "left", straight) == straight.sensor_max

    with pytest.raises(ValueError):
        sensor_reading(contact, "front", cfg)


def test_sensor_reading_half_range():
    cfg = ArenaConfig(sensor_angle_rad=0.0)
    x = cfg.arena_side_cm - cfg.robot_radius_cm - cfg.sensor_range_cm / 2
    pose = RobotPose(x, cfg.arena_side_cm / 2, 0.0)
    assert sensor_reading(pose, "right", cfg) == 475


# ------------------------------------------------------------ kinematics


def test_straight_translation():
    cfg = ArenaConfig()
    pose = RobotPose(30.0, 30.0, 0.3, v_left=10.0, v_right=10.0)
    out = robot_kinematics_step(pose, 1.0, cfg)
    assert out.x == pytest.approx(30.0 + 10.0 * math.cos(0.3))
    assert out.y == pytest.approx(30.0 + 10.0 * math.sin(0.3))
    assert out.heading == pytest.approx(0.3)


def test_pure_rotation_keeps_position():
    cfg = ArenaConfig()
    pose = RobotPose(30.0, 30.0, 1.0, v_left=-5.0, v_right=5.0)
    out = robot_kinematics_step(pose, 0.5, cfg)
    assert out.x == pytest.approx(30.0)
    assert out.y == pytest.approx(30.0)
    omega = 10.0 / (2.0 * cfg.robot_radius_cm)
    assert out.heading == pytest.approx(1.0 + omega * 0.5)


def test_wall_clamp():
    cfg = ArenaConfig()
    pose = RobotPose(cfg.arena_side_cm - cfg.robot_radius_cm, 30.0, 0.0,
                     v_left=12.5, v_right=12.5)
    out = robot_kinematics_step(pose, 1.0, cfg)
    assert out.x == cfg.arena_side_cm - cfg.robot_radius_cm
    assert out.y == pytest.approx(30.0)


@given(
    x=st.floats(2.5, 57.5),
    y=st.floats(2.5, 57.5),
    heading=st.floats(-math.pi, math.pi),
    vl=st.floats(-20.0, 20.0),
    vr=st.floats(-20.0, 20.0),
)
def test_pose_always_stays_inside_arena(x, y, heading, vl, vr):
    cfg = ArenaConfig()
    pose = RobotPose(x, y, heading, v_left=vl, v_right=vr)
    for _ in range(5):
        pose = robot_kinematics_step(pose, 0.1, cfg)
        assert cfg.robot_radius_cm <= pose.x <= cfg.arena_side_cm - cfg.robot_radius_cm
        assert cfg.robot_radius_cm <= pose.y <= cfg.arena_side_cm - cfg.robot_radius_cm


def test_arena_config_validation():
    with pytest.raises(ConfigurationError):
        ArenaConfig(robot_radius_cm=30.0)
    with pytest.raises(ConfigurationError):
        ArenaConfig(k=0.1)
    with pytest.raises(ConfigurationError):
        ArenaConfig(c_default=0.0)


# ------------------------------------------------------------ arena task


def make_arena(seed=0, **kwargs):
    cfg = ArenaConfig(**kwargs)
    return ArenaTask(
        cfg,
        np.random.default_rng(seed),
        left_input=0,
        right_input=1,
        left_outputs=np.arange(2, 12),
        right_outputs=np.arange(12, 22),
    )


def test_quiet_interval_drives_straight_at_default_speed():
    task = make_arena()
    task.control_tick(100.0, np.zeros(80))
    assert task.pose.v_left == 12.5
    assert task.pose.v_right == 12.5
    # Center start, heading 0: moved straight along +x by 12.5 cm/s * 0.1 s.
    assert task.pose.x == pytest.approx(31.25)
    assert task.pose.y == pytest.approx(30.0)
    assert task.drive_for_step(100) is None


def test_wall_contact_stimulates_every_interval():
    task = make_arena(sensor_angle_rad=0.0)
    cfg = task.config
    task.pose = RobotPose(
        cfg.arena_side_cm - cfg.robot_radius_cm, 30.0, 0.0,
        v_left=12.5, v_right=12.5,
    )
    pulses = 0
    for i in range(20):
        task.control_tick(100.0 * (i + 1), np.zeros(80))
        drive = task.drive_for_step(100)
        if drive is not None and drive[0] == cfg.stim_amplitude:
            pulses += 1
    assert pulses == 20  # facing-sensor probability is exactly 1 at contact


def test_output_activity_slows_wheels():
    task = make_arena()
    counts = np.zeros(80)
    counts[2:12] = 5  # left outputs only
    task.control_tick(100.0, counts)
    assert task.pose.v_left == pytest.approx(-0.3 * 50 + 12.5)
    assert task.pose.v_right == pytest.approx(12.5)
