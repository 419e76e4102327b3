import math

import numpy as np
import pytest

from conftest import random_box
from polarobb.codec import encode
from polarobb.descent import (
    FitConfig,
    angle_baseline_loss,
    boundary_sweep_compare,
    fit_polar,
    max_jump,
    polar_loss,
    rotation_sweep,
    trace_from_csv,
    trace_to_csv,
)
from polarobb.geom import BoxParam, OrientedBox
from polarobb.loss import smooth_l1

BOX = OrientedBox.from_params(100.0, 80.0, 40.0, 15.0, 0.0)


def losses(trace):
    return np.array([r.loss for r in trace])


def monotone_while_descending(trace, floor=1e-3):
    """Stepwise non-increase while the loss is above ``floor`` times its start."""
    loss = losses(trace)
    active = loss[:-1] > floor * loss[0]
    return bool(np.all(np.diff(loss)[active] <= 1e-9 * loss[0]))


def test_zero_perturbation_is_stationary():
    trace = fit_polar(BOX, FitConfig(steps=5, init_perturbation=0.0))
    assert len(trace) == 6
    assert all(r.loss == 0.0 for r in trace)
    assert all(np.array_equal(r.params, encode(BOX).distances) for r in trace)


def test_fit_is_deterministic():
    a = fit_polar(BOX, FitConfig(seed=3))
    b = fit_polar(BOX, FitConfig(seed=3))
    assert trace_to_csv(a) == trace_to_csv(b)
    assert trace_to_csv(a) != trace_to_csv(fit_polar(BOX, FitConfig(seed=4)))


def test_fit_converges():
    trace = fit_polar(BOX, FitConfig(seed=1))
    assert trace[-1].iou >= 0.99
    assert trace[-1].loss < 1e-3 * trace[0].loss


def test_boundary_pair_final_losses():
    for seed in range(5):
        cfg = FitConfig(seed=seed)
        plus = fit_polar(BOX.rotated(0.001), cfg)[-1].loss
        minus = fit_polar(BOX.rotated(-0.001), cfg)[-1].loss
        assert abs(plus - minus) <= 1e-3


def test_monotone_with_fallback(rng):
    # the IOU weight is recomputed each step and grows without bound as the
    # smooth-L1 part vanishes, so the check covers the descent phase only
    for seed in range(40):
        gt = random_box(rng)
        ok = monotone_while_descending(fit_polar(gt, FitConfig(seed=seed)))
        ok = ok or monotone_while_descending(fit_polar(gt, FitConfig(learning_rate=0.02, seed=seed)))
        assert ok, seed


def test_frozen_weight_step_decreases_surrogate(rng):
    # one small step along the returned gradient lowers w * L_s with w held fixed
    for _ in range(20):
        gt = random_box(rng)
        target = encode(gt).distances
        pred = target * (1 + rng.uniform(-0.3, 0.3, size=8))
        loss, grad, _ = polar_loss(pred, target, gt)
        w = loss / float(smooth_l1(pred, target)[0].sum())
        nxt = pred - 1e-3 * grad
        assert w * float(smooth_l1(nxt, target)[0].sum()) < loss


def test_trace_csv_roundtrip():
    trace = fit_polar(BOX, FitConfig(steps=10, seed=2))
    text = trace_to_csv(trace)
    assert text.splitlines()[0] == "step,loss,iou"
    rows = trace_from_csv(text)
    assert [r[0] for r in rows] == list(range(11))
    for (_, loss, iou), rec in zip(rows, trace):
        assert loss == pytest.approx(rec.loss, rel=1e-11)
        assert iou == pytest.approx(rec.iou, rel=1e-11)


def test_fit_config_validation():
    with pytest.raises(ValueError):
        FitConfig(steps=0)
    with pytest.raises(ValueError):
        FitConfig(learning_rate=0.0)


def test_baseline_examples():
    p = BoxParam(10.0, 20.0, 8.0, 4.0, 0.3)
    assert angle_baseline_loss(p, p) == 0.0
    assert angle_baseline_loss(BoxParam(11.0, 20.0, 8.0, 4.0, 0.3), p) == 0.5


def test_baseline_penalizes_equivalent_boxes():
    a = OrientedBox.from_params(0.0, 0.0, 10.0, 9.0, 0.01)
    b = a.rotated(-0.02)
    pa, pb = BoxParam.from_box(a), BoxParam.from_box(b)
    assert pb.alpha == pytest.approx(math.pi / 2 - 0.01, abs=1e-9)
    assert (pb.w, pb.h) == pytest.approx((9.0, 10.0))
    assert angle_baseline_loss(pa, pb) >= smooth_l1(math.pi / 2 - 0.02, 0.0)[0]
    # nearly the same box, so the polar loss stays small
    loss, _, iou = polar_loss(encode(a).distances, encode(b).distances, b)
    assert iou > 0.97 and loss < 0.5


def test_sweep_compare_zero_at_identity():
    polar, base = boundary_sweep_compare(BOX, [0.0])
    assert polar.y[0] == 0.0 and base.y[0] == 0.0
    assert polar.label == "polar_loss" and base.label == "angle_baseline_loss"


def test_square_polar_curve_vanishes_at_quarter_turns():
    sq = OrientedBox.from_params(0.0, 0.0, 12.0, 12.0)
    polar, _ = boundary_sweep_compare(sq, [0.0, math.pi / 2, math.pi, 3 * math.pi / 2])
    assert np.all(polar.y < 1e-9)


def test_polar_curve_has_no_jumps_over_half_turn():
    proto = OrientedBox.from_params(0.0, 0.0, 20.0, 10.0)
    polar, base = boundary_sweep_compare(proto, rotation_sweep(0.0, math.pi, 1e-3))
    d = np.abs(np.diff(polar.y))
    # local slope * step taken from the neighbouring differences
    local = np.maximum(np.r_[d[1:], 0.0], np.r_[0.0, d[:-1]])
    assert np.all(d <= 10 * local + 1e-12)
    jumps = np.abs(np.diff(base.y))
    k = int(np.argmax(jumps))
    assert jumps[k] >= 1.0
    assert polar.x[k] == pytest.approx(math.pi / 2, abs=2e-3)


def test_boundary_window_ratio():
    proto = OrientedBox.from_params(0.0, 0.0, 2.0, 1.0)
    polar, base = boundary_sweep_compare(proto, rotation_sweep(-0.1, 0.1, 1e-3))
    # measured 1.26e-3 against 2.07
    assert max_jump(base) >= 1000 * max_jump(polar)


def test_rotation_sweep_inclusive():
    s = rotation_sweep(-0.1, 0.1, 1e-3)
    assert len(s) == 201
    assert s[0] == -0.1 and s[-1] == pytest.approx(0.1)
