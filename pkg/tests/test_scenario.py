import numpy as np
import pytest

from teleopsim.config import load_config
from teleopsim.errors import ConfigError
from teleopsim.locomotion import FootStance
from teleopsim.scenario import (LiveSource, budget_data, render_bandwidth_report,
                                report_to_json, run_live, run_scenario)
from teleopsim.trace import OperatorTrace, TraceSample, load_trace

from conftest import CONFIGS, TRACES


@pytest.fixture(scope="module")
def bench():
    return load_config(CONFIGS / "bench")


@pytest.fixture(scope="module")
def starlink():
    return load_config(CONFIGS / "starlink")


def idle_trace(config, duration_s=2.0, rate=100):
    loco = config.avatar.locomotion
    stance = FootStance(tuple(loco.nominal_left), tuple(loco.nominal_right))
    hand = (0.57, 0.1, 0.65)
    glove = (0.0,) * config.avatar.glove_map.glove_joints
    samples = tuple(TraceSample(i / rate, stance, hand, glove)
                    for i in range(int(duration_s * rate)))
    return OperatorTrace(samples)


class TestRunScenario:
    def test_idle_trace_keeps_robot_at_origin(self, bench):
        report = run_scenario(bench, idle_trace(bench))
        assert report["final_pose"] == [0.0, 0.0, 0.0]
        assert report["triplet_nonzero_count"] == 0
        assert all(row[1:] == [0.0, 0.0, 0.0] for row in report["trajectory"])

    def test_constant_velocity_euler_oracle(self, bench):
        trace = load_trace(TRACES / "constant_v.trace")
        report = run_scenario(bench, trace)
        # 0.2 m/s for exactly 5 s of active command
        assert abs(report["final_pose"][0] - 1.0) < 1e-6
        assert abs(report["final_pose"][1]) < 1e-6

    def test_same_pose_through_starlink_link(self, bench, starlink):
        trace = load_trace(TRACES / "constant_v.trace")
        ref = run_scenario(bench, trace)
        delayed = run_scenario(starlink, trace)
        assert delayed["final_pose"] == pytest.approx(ref["final_pose"], abs=1e-9)
        lat = delayed["streams_measured"]["wearable"]["latency"]
        assert lat["mean_ms"] == pytest.approx(507.093333, abs=1.0)

    def test_reach_and_place_hits_all_waypoints(self, starlink):
        trace = load_trace(TRACES / "reach_and_place.trace")
        report = run_scenario(starlink, trace)
        assert all(wp["reached"] for wp in report["waypoints"])
        assert report["ik"]["max_residual"] < 1e-6
        assert report["final_pose"] == [0.0, 0.0, 0.0]

    def test_deterministic_reports_byte_identical(self, starlink):
        trace = load_trace(TRACES / "constant_v.trace")
        a = report_to_json(run_scenario(starlink, trace))
        b = report_to_json(run_scenario(starlink, trace))
        assert a == b

    def test_glove_joint_mismatch_rejected(self, bench):
        bad = OperatorTrace((TraceSample(0.0, FootStance((0, 0.1), (0, -0.1)),
                                         (0.5, 0.1, 0.6), (0.0,)),))
        with pytest.raises(ConfigError):
            run_scenario(bench, bad)

    def test_decimation_visible_in_bridge_stats(self, starlink):
        report = run_scenario(starlink, idle_trace(starlink, duration_s=2.0))
        stats = report["bridge"]["A:/operator/wearable->B:hand/targets"]
        # 200 samples at 100 Hz decimated to 10 Hz
        assert stats["relayed"] + stats["suppressed"] == 200
        assert 19 <= stats["relayed"] <= 21


class TestBudget:
    def test_starlink_command_path_under_cap(self, starlink):
        data = budget_data(starlink)
        assert data["command_path_bps"] < 300_000
        assert data["command_path_stability"]["gloves"]["stable"]

    def test_render_contains_totals(self, starlink):
        text = render_bandwidth_report(starlink)
        assert "COMMAND PATH" in text
        assert "out-of-band" in text


class TestLiveMode:
    def test_recorded_live_session_replays_identically(self, bench):
        loco = bench.avatar.locomotion
        idle = FootStance(tuple(loco.nominal_left), tuple(loco.nominal_right))
        forward = FootStance((loco.idle_radius + 0.15, loco.nominal_left[1]),
                             tuple(loco.nominal_right))
        source = LiveSource(bench.avatar.glove_map.glove_joints, idle)

        def script(t_ns, src):
            if t_ns >= 1_500_000_000:
                src.stance = idle
            elif t_ns >= 500_000_000:
                src.stance = forward

        live_report = run_live(bench, source, duration_s=2.5, on_step=script)
        assert live_report["final_pose"][0] > 0.1

        replay_report = run_scenario(bench, source.recorded_trace())
        live_traj = np.array(live_report["trajectory"])
        replay_traj = np.array(replay_report["trajectory"])
        n = min(len(live_traj), len(replay_traj))
        np.testing.assert_allclose(live_traj[:n], replay_traj[:n], atol=1e-9)
        np.testing.assert_allclose(live_report["final_pose"],
                                   replay_report["final_pose"], atol=1e-9)
