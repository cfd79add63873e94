"""Tests for the PI lane-keeping law and the speed policy."""

import math

import numpy as np
import pytest

from src.minicar.control import pi_step, speed_policy
from src.minicar.core.models import ControllerConfig, LateralError, PiState

DT = 0.05


@pytest.fixture
def cfg():
    return ControllerConfig()


def _valid(e):
    return LateralError(e=e, valid=True, rows=4)


INVALID = LateralError(e=0.0, valid=False, rows=0)


class TestPiStep:
    """Test the discrete PI law."""

    def test_matches_rectangle_sum(self, cfg):
        errors = [3.0, -1.0, 4.0, 2.5, -0.5]
        state = PiState()
        for e in errors:
            _, state = pi_step(state, _valid(e), DT, cfg)
        integral = sum(e * DT for e in errors)
        assert state.integral == pytest.approx(integral)
        assert state.output == pytest.approx(cfg.kp * errors[-1] + cfg.ki * integral)

    def test_right_of_line_steers_left(self, cfg):
        steering, _ = pi_step(PiState(), _valid(10.0), DT, cfg)
        assert steering > 0.0
        steering, _ = pi_step(PiState(), _valid(-10.0), DT, cfg)
        assert steering < 0.0

    def test_steering_scale(self, cfg):
        steering, state = pi_step(PiState(), _valid(2.0), DT, cfg)
        assert steering == pytest.approx(cfg.steer_scale * state.output)

    def test_integral_is_clamped(self, cfg):
        state = PiState()
        for _ in range(100):
            _, state = pi_step(state, _valid(1000.0), DT, cfg)
        assert state.integral == pytest.approx(cfg.i_max)

    def test_steering_is_clamped(self, cfg):
        steering, _ = pi_step(PiState(), _valid(1e6), DT, cfg)
        assert steering == pytest.approx(cfg.max_steer_left)
        steering, _ = pi_step(PiState(), _valid(-1e6), DT, cfg)
        assert steering == pytest.approx(-cfg.max_steer_right)

    def test_no_valid_error_yet(self, cfg):
        steering, state = pi_step(PiState(), INVALID, DT, cfg)
        assert steering == 0.0
        assert state.held_e is None
        assert state.age == pytest.approx(DT)

    def test_hold_then_decay(self):
        cfg = ControllerConfig(hold_time=0.5, decay=0.5)
        dt = 0.125
        _, state = pi_step(PiState(), _valid(8.0), dt, cfg)
        held = []
        for _ in range(6):
            _, state = pi_step(state, INVALID, dt, cfg)
            held.append(state.held_e)
        assert held == [8.0, 8.0, 8.0, 8.0, 4.0, 2.0]

    def test_valid_error_resets_hold(self, cfg):
        _, state = pi_step(PiState(), _valid(8.0), DT, cfg)
        _, state = pi_step(state, INVALID, DT, cfg)
        _, state = pi_step(state, _valid(1.0), DT, cfg)
        assert state.held_e == 1.0
        assert state.age == 0.0

    def test_rejects_non_positive_dt(self, cfg):
        with pytest.raises(ValueError):
            pi_step(PiState(), _valid(1.0), 0.0, cfg)


class TestSpeedPolicy:
    """Test curvature-dependent speed."""

    def test_override_wins(self, cfg):
        assert speed_policy(0.01, 0.3, cfg) == 0.3

    def test_cruise_without_curvature(self, cfg):
        assert speed_policy(None, None, cfg) == cfg.cruise_speed
        assert speed_policy(0.0, None, cfg) == pytest.approx(cfg.cruise_speed)

    def test_slows_in_curves(self, cfg):
        assert speed_policy(5e-4, None, cfg) == pytest.approx(0.75)
        assert speed_policy(-5e-4, None, cfg) == pytest.approx(0.75)

    def test_floor_at_min_speed(self, cfg):
        assert speed_policy(0.01, None, cfg) == pytest.approx(cfg.min_speed)


class TestDiscreteSum:
    """PI output against the clamped rectangle sum on random sequences."""

    def test_random_sequences(self, cfg):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            errors = rng.uniform(-20.0, 20.0, int(rng.integers(1, 30)))
            state = PiState()
            integral = 0.0
            for e in errors:
                steering, state = pi_step(state, _valid(float(e)), DT, cfg)
                integral = min(max(integral + float(e) * DT, -cfg.i_max), cfg.i_max)
            output = cfg.kp * float(errors[-1]) + cfg.ki * integral
            assert state.integral == pytest.approx(integral, abs=1e-12)
            assert state.output == pytest.approx(output, abs=1e-9)
            limit = cfg.max_steer_left if output > 0 else cfg.max_steer_right
            expected = math.copysign(min(abs(cfg.steer_scale * output), limit), output)
            assert steering == pytest.approx(expected, abs=1e-12)

    def test_constant_error_for_one_second(self, cfg):
        state = PiState()
        for _ in range(20):
            _, state = pi_step(state, _valid(0.1), DT, cfg)
        assert state.output == pytest.approx(1.10)
