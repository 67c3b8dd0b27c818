import numpy as np
import pytest

from angiodiff.schedule import (
    PAPER_BETA_END,
    PAPER_BETA_START,
    PAPER_T,
    NoiseSchedule,
    ScheduleError,
    build_schedule,
    schedule_from_betas,
)


def test_single_step_schedule():
    s = build_schedule(T=1, beta_start=0.5, beta_end=0.5)
    assert s.T == 1
    assert s.alpha_bar.tolist() == [0.5]


def test_three_step_hand_product():
    s = schedule_from_betas(np.array([0.1, 0.2, 0.3]))
    np.testing.assert_allclose(s.alpha_bar, [0.9, 0.72, 0.504], rtol=0, atol=1e-15)


def test_paper_schedule_endpoints_and_monotonicity():
    s = build_schedule(PAPER_T, PAPER_BETA_START, PAPER_BETA_END)
    assert s.T == 1000
    assert s.beta[0] == pytest.approx(0.0015, abs=0)
    assert s.beta[-1] == pytest.approx(0.0195, abs=0)
    assert np.all(np.diff(s.beta) >= 0)
    assert np.all(np.diff(s.alpha_bar) < 0)


def test_invariants_hold_for_all_t():
    s = build_schedule(PAPER_T, PAPER_BETA_START, PAPER_BETA_END)
    assert np.all(s.beta > 0) and np.all(s.beta < 1)
    assert np.all(s.alpha == 1.0 - s.beta)
    assert s.alpha_bar[0] == 1.0 - s.beta[0]
    # alpha_bar really is the running product
    np.testing.assert_allclose(s.alpha_bar, np.cumprod(1.0 - s.beta), rtol=0, atol=0)


@pytest.mark.parametrize("T,b0,b1", [
    (0, 0.1, 0.2),
    (10, 0.0, 0.2),
    (10, 0.2, 0.1),
    (10, 0.1, 1.0),
    (10, -0.1, 0.2),
    (10, float("nan"), 0.2),
])
def test_build_schedule_rejects_bad_params(T, b0, b1):
    with pytest.raises(ScheduleError):
        build_schedule(T, b0, b1)


def test_scalar_lookups_are_one_based():
    s = schedule_from_betas(np.array([0.1, 0.2, 0.3]))
    assert s.beta_at(1) == 0.1
    assert s.alpha_at(3) == pytest.approx(0.7)
    assert s.alpha_bar_at(2) == pytest.approx(0.72)
    with pytest.raises(ScheduleError):
        s.beta_at(0)
    with pytest.raises(ScheduleError):
        s.beta_at(4)


def test_schedule_validates_table_shapes():
    with pytest.raises(ScheduleError):
        NoiseSchedule(T=2, beta=np.array([0.1]), alpha=np.array([0.9]),
                      alpha_bar=np.array([0.9]))
