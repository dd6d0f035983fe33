import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from seageo import (
    AssociationConfig,
    BBox,
    Detection,
    DomainError,
    TimeOrderError,
    TrackerParams,
    TrackState,
    associate,
    association_score,
    bottom_center,
    gating_probability,
    kf_predict,
    kf_update,
    track_sequence,
)
from seageo.planarmap import PixelPoint
from seageo.tracker import effective_p_c, init_state

unit = st.floats(0.0, 1.0)


def det(frame, t, u, v, w=12.0, h=5.0, score=0.9, p_c=0.9):
    """Detection whose bottom-center lands exactly at (u, v)."""
    return Detection(frame, t, BBox(u - w / 2.0, v - h, w, h), score, p_c)


def make_state(mean, cov=None, t=0.0):
    if cov is None:
        cov = np.eye(5)
    return TrackState(np.asarray(mean, dtype=float), np.asarray(cov, dtype=float), t)


# ---------------------------------------------------------------------------
# bottom center

def test_bottom_center_basic():
    assert bottom_center(BBox(0, 0, 10, 4)) == PixelPoint(5.0, 4.0)


def test_bottom_center_negative_corner():
    assert bottom_center(BBox(-3, -3, 6, 3)) == PixelPoint(0.0, 0.0)


def test_bbox_invariants():
    with pytest.raises(DomainError):
        BBox(100, 200, 0.0, 5)
    with pytest.raises(DomainError):
        BBox(100, 200, 5, -1)


def test_detection_score_ranges():
    with pytest.raises(DomainError):
        Detection(0, 0.0, BBox(0, 0, 1, 1), 1.2, None)
    with pytest.raises(DomainError):
        Detection(0, 0.0, BBox(0, 0, 1, 1), 0.5, -0.1)


def test_effective_p_c_fallbacks():
    assert effective_p_c(Detection(0, 0.0, BBox(0, 0, 1, 1), 0.7, 0.3)) == 0.3
    assert effective_p_c(Detection(0, 0.0, BBox(0, 0, 1, 1), 0.7, None)) == 0.7
    assert effective_p_c(Detection(0, 0.0, BBox(0, 0, 1, 1), None, None)) == 0.5


# ---------------------------------------------------------------------------
# predict

def test_predict_zero_interval():
    s = make_state([1, 2, 3, 4, 5], np.diag([1.0, 2, 3, 4, 5]))
    out = kf_predict(s, 0.0, q=10.0, q_w=1.0)
    assert np.array_equal(out.mean, s.mean)
    assert np.array_equal(out.cov, s.cov)


def test_predict_linear_propagation_q0():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    P = A @ A.T  # a generic PSD covariance
    s = make_state([0, 0, 10, 2, -1], P)
    out = kf_predict(s, 1.0, q=0.0, q_w=0.0)
    assert out.mean == pytest.approx([2.0, -1.0, 10.0, 2.0, -1.0], abs=1e-12)
    # oracle: explicit F P F^T
    F = np.eye(5)
    F[0, 3] = 1.0
    F[1, 4] = 1.0
    expected = F @ P @ F.T
    assert np.abs(out.cov - expected).max() < 1e-12


def test_predict_process_noise_inflates_diagonal():
    s = make_state([0, 0, 10, 2, -1], np.diag([1.0, 1, 1, 1, 1]))
    quiet = kf_predict(s, 1.0, q=0.0, q_w=0.0)
    noisy = kf_predict(s, 1.0, q=3.0, q_w=0.5)
    assert np.all(np.diag(noisy.cov) >= np.diag(quiet.cov))
    assert noisy.cov[2, 2] > quiet.cov[2, 2]


def test_predict_time_order_error():
    s = make_state([0, 0, 10, 0, 0], t=5.0)
    with pytest.raises(TimeOrderError):
        kf_predict(s, 4.9, q=0.0)


# ---------------------------------------------------------------------------
# update

def test_update_uninformative_measurement():
    s = make_state([10, 20, 5, 1, 2], np.diag([1.0, 1, 1, 1, 1]))
    big = 1e12
    out = kf_update(s, (50.0, 50.0, 50.0), (big, big, big), width_floor=0.0)
    assert np.abs(out.mean - s.mean).max() < 1e-6


def test_update_uninformative_prior():
    s = make_state([10, 20, 5, 0, 0], np.diag([1e12, 1e12, 1e12, 1.0, 1.0]))
    out = kf_update(s, (42.0, 43.0, 44.0), (1.0, 1.0, 1.0), width_floor=0.0)
    assert out.mean[:3] == pytest.approx([42.0, 43.0, 44.0], abs=1e-6)


def test_update_scalar_midpoint():
    # oracle: 1-D Kalman with prior var 1 and measurement var 1 has gain 1/2
    s = make_state([10, 20, 5, 0, 0], np.diag([1.0, 1.0, 1.0, 1e-12, 1e-12]))
    out = kf_update(s, (12.0, 24.0, 7.0), (1.0, 1.0, 1.0), width_floor=0.0)
    assert out.mean[:3] == pytest.approx([11.0, 22.0, 6.0], abs=1e-9)
    assert np.diag(out.cov)[:3] == pytest.approx([0.5, 0.5, 0.5], abs=1e-9)


def test_update_posterior_variance_never_grows():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(5, 5))
    P = A @ A.T + np.eye(5)
    s = make_state([0, 0, 10, 0, 0], P)
    out = kf_update(s, (1.0, -1.0, 11.0), (4.0, 4.0, 16.0))
    assert np.all(np.diag(out.cov) <= np.diag(P) + 1e-12)
    assert out.frames_coasted == 0


def test_update_width_floor():
    s = make_state([0, 0, 2.0, 0, 0], np.diag([1.0, 1, 1, 1, 1]))
    out = kf_update(s, (0.0, 0.0, -50.0), (1.0, 1.0, 1e-6), width_floor=1.5)
    assert out.mean[2] == 1.5


# ---------------------------------------------------------------------------
# scoring

def test_gating_zero_distance():
    assert gating_probability(PixelPoint(3, 4), PixelPoint(3, 4), 10.0) == 1.0


def test_gating_one_sigma():
    p = gating_probability(PixelPoint(0, 0), PixelPoint(10, 0), 10.0)
    assert p == pytest.approx(math.exp(-1.0), abs=1e-12)


def test_gating_two_sigma():
    p = gating_probability(PixelPoint(0, 0), PixelPoint(0, 20), 10.0)
    assert p == pytest.approx(math.exp(-4.0), abs=1e-12)


def test_association_score_examples():
    assert association_score(1.0, 1.0, 0.3) == pytest.approx(1.0, abs=1e-12)
    assert association_score(1.0, 0.0, 0.5) == pytest.approx(0.5, abs=1e-12)
    assert association_score(0.9, math.exp(-1.0), 0.5) == pytest.approx(0.6339397, abs=1e-6)


@given(p_c=unit, p_k=unit, alpha=unit)
@settings(max_examples=300)
def test_association_score_convex_bounds(p_c, p_k, alpha):
    p = association_score(p_c, p_k, alpha)
    assert min(p_c, p_k) - 1e-12 <= p <= max(p_c, p_k) + 1e-12


@given(p_c=unit, p_k=unit, alpha=unit, bump=st.floats(0.0, 0.5))
@settings(max_examples=300)
def test_association_score_monotone_in_each_input(p_c, p_k, alpha, bump):
    base = association_score(p_c, p_k, alpha)
    assert association_score(min(1.0, p_c + bump), p_k, alpha) >= base - 1e-12
    assert association_score(p_c, min(1.0, p_k + bump), alpha) >= base - 1e-12


@given(
    d1=st.floats(0.0, 100.0),
    d2=st.floats(0.0, 100.0),
    sigma=st.floats(5.0, 50.0),  # keeps d^2/sigma^2 clear of exp underflow
)
@settings(max_examples=200)
def test_gating_monotone_in_distance(d1, d2, sigma):
    p1 = gating_probability(PixelPoint(0, 0), PixelPoint(d1, 0), sigma)
    p2 = gating_probability(PixelPoint(0, 0), PixelPoint(d2, 0), sigma)
    if d1 < d2:
        assert p1 >= p2
    assert 0.0 < p1 <= 1.0
    assert gating_probability(PixelPoint(0, 0), PixelPoint(0, 0), sigma) == 1.0


def test_gating_strictly_decreasing_on_grid():
    distances = [0.0, 0.5, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0]
    for sigma in (5.0, 10.0, 25.0):
        ps = [gating_probability(PixelPoint(0, 0), PixelPoint(d, 0), sigma) for d in distances]
        assert all(a > b for a, b in zip(ps, ps[1:]))


def test_sigma_scaling_preserves_argmax_for_equal_p_c():
    s = make_state([100, 100, 10, 0, 0])
    dets = [det(0, 0.0, 103.0, 100.0, p_c=0.7), det(0, 0.0, 109.0, 100.0, p_c=0.7)]
    for sigma in (1.0, 5.0, 10.0, 50.0):
        chosen, _ = associate(s, dets, AssociationConfig(sigma=sigma, p_thr=0.01))
        assert chosen is dets[0]


# ---------------------------------------------------------------------------
# association

def test_associate_empty():
    s = make_state([0, 0, 10, 0, 0])
    assert associate(s, [], AssociationConfig()) == (None, 0.0)


def test_associate_perfect_match():
    s = make_state([100, 100, 10, 0, 0])
    d = det(3, 0.1, 100.0, 100.0, p_c=1.0)
    chosen, score = associate(s, [d], AssociationConfig())
    assert chosen is d
    assert score == pytest.approx(1.0, abs=1e-12)


def test_associate_prefers_high_p_c_over_distractor():
    # oracle: direct score arithmetic with alpha=0.5, sigma=10, d=5 for both
    s = make_state([100, 100, 10, 0, 0])
    target = det(0, 0.0, 105.0, 100.0, p_c=0.9)
    distractor = det(0, 0.0, 95.0, 100.0, p_c=0.2)
    chosen, score = associate(s, [distractor, target], AssociationConfig())
    p_k = math.exp(-25.0 / 100.0)
    assert chosen is target
    assert score == pytest.approx(0.5 * 0.9 + 0.5 * p_k, abs=1e-12)
    assert 0.5 * 0.2 + 0.5 * p_k < 0.51 < score


def test_associate_below_threshold_coasts():
    s = make_state([100, 100, 10, 0, 0])
    far = det(0, 0.0, 400.0, 100.0, p_c=0.9)
    chosen, score = associate(s, [far], AssociationConfig())
    assert chosen is None
    assert score == pytest.approx(0.45, abs=1e-9)


def test_associate_tie_breaks_by_distance_then_order():
    s = make_state([100, 100, 10, 0, 0])
    near = det(0, 0.0, 102.0, 100.0, p_c=0.8)
    far = det(0, 0.0, 106.0, 100.0, p_c=0.8)
    chosen, _ = associate(s, [far, near], AssociationConfig())
    assert chosen is near
    # exactly symmetric pair: input order wins
    left = det(0, 0.0, 98.0, 100.0, p_c=0.8)
    right = det(0, 0.0, 102.0, 100.0, p_c=0.8)
    chosen, _ = associate(s, [left, right], AssociationConfig())
    assert chosen is left


def test_associate_rejects_mixed_frames():
    s = make_state([0, 0, 10, 0, 0])
    with pytest.raises(DomainError):
        associate(s, [det(0, 0.0, 0, 0), det(1, 0.1, 0, 0)], AssociationConfig())


# ---------------------------------------------------------------------------
# sequences

def linear_stream(n_frames, fps=10.0, u0=100.0, v0=200.0, vu=20.0, vv=-10.0, p_c=0.95):
    frames = []
    for i in range(n_frames):
        t = i / fps
        frames.append((i, t, [det(i, t, u0 + vu * t, v0 + vv * t, p_c=p_c)]))
    return frames


EXACT_PARAMS = TrackerParams(r_xy_px=0.01, r_w_px=0.02, q_px=0.0, q_w_px=0.0)


def test_sequence_noiseless_convergence():
    frames = linear_stream(40)
    steps = track_sequence(frames, frames[0][2][0], AssociationConfig(), EXACT_PARAMS)
    assert all(s.chosen is not None for s in steps)
    errs = []
    for (i, t, dets), step in zip(frames, steps):
        bc = bottom_center(dets[0].bbox)
        errs.append(math.hypot(step.state.mean[0] - bc.u, step.state.mean[1] - bc.v))
    assert errs[20] < 1e-6
    # monotone decay in norm once the gains settle
    for a, b in zip(errs[5:-1], errs[6:]):
        assert b <= a + 1e-9


def test_sequence_crossing_identity_preserved():
    frames = []
    for i in range(60):
        t = i / 10.0
        target = det(i, t, 100.0 + 20.0 * t, 200.0, p_c=0.95)
        crosser = det(i, t, 220.0 - 20.0 * t, 200.0, p_c=0.05)
        frames.append((i, t, [crosser, target]))
    steps = track_sequence(frames, frames[0][2][1], AssociationConfig(), EXACT_PARAMS)
    for step in steps:
        assert step.chosen is not None
        assert step.chosen.p_c == 0.95


def test_sequence_occlusion_coast_and_reacquire():
    frames = linear_stream(50)
    gapped = [(i, t, [] if 20 <= i < 28 else dets) for i, t, dets in frames]
    steps = track_sequence(gapped, gapped[0][2][0], AssociationConfig(), EXACT_PARAMS)
    assert all(s.coasted for s in steps[20:28])
    assert not any(s.lost for s in steps)  # 8 < max_coast_frames
    assert steps[28].chosen is not None
    # prediction carried the track through the gap, so reacquisition is the
    # update path, not a reinitialization
    assert steps[28].state.frames_coasted == 0
    tail_err = abs(steps[-1].state.mean[0] - bottom_center(frames[-1][2][0].bbox).u)
    assert tail_err < 1e-3


def test_sequence_loss_and_reinitialization():
    frames = linear_stream(80)
    gapped = [(i, t, [] if 10 <= i < 60 else dets) for i, t, dets in frames]
    cfg = AssociationConfig(max_coast_frames=5)
    steps = track_sequence(gapped, gapped[0][2][0], cfg, EXACT_PARAMS)
    assert steps[30].lost
    assert steps[60].chosen is not None and not steps[60].lost
    bc = bottom_center(frames[60][2][0].bbox)
    assert steps[60].state.mean[0] == pytest.approx(bc.u, abs=1e-9)
    assert steps[60].state.mean[3] == 0.0  # reinitialized with zero velocity


def test_sequence_time_order_error():
    frames = [(0, 0.0, [det(0, 0.0, 10, 10)]), (1, -0.1, [det(1, -0.1, 11, 10)])]
    with pytest.raises(TimeOrderError):
        track_sequence(frames, frames[0][2][0])


def test_sequence_covariance_stays_symmetric_psd():
    frames = linear_stream(60)
    steps = track_sequence(frames, frames[0][2][0])
    for step in steps:
        c = step.state.cov
        assert np.abs(c - c.T).max() < 1e-9
        assert np.linalg.eigvalsh(c).min() >= -1e-9


def test_sequence_determinism_bit_identical():
    frames = linear_stream(50)
    a = track_sequence(frames, frames[0][2][0])
    b = track_sequence(frames, frames[0][2][0])
    for sa, sb in zip(a, b):
        assert np.array_equal(sa.state.mean, sb.state.mean)
        assert np.array_equal(sa.state.cov, sb.state.cov)
        assert sa.score == sb.score


def test_init_state_uses_detection():
    d = det(0, 1.5, 320.0, 240.0, w=30.0)
    s = init_state(d, TrackerParams())
    assert s.mean[0] == 320.0 and s.mean[1] == 240.0 and s.mean[2] == 30.0
    assert s.mean[3] == 0.0 and s.mean[4] == 0.0
    assert s.last_t == 1.5
