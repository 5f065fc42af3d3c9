from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.signal import savgol_filter

from bradyquant.exceptions import DegenerateFrame, InvalidFilterConfig, NoCyclesDetected
from bradyquant.landmarks import Recording
from bradyquant.signal import (
    ExtremaConfig,
    ExtremaSet,
    SmoothedSeries,
    cycles,
    debug_csv,
    detect_extrema,
    distance_signal,
    extract_cycles,
    palm_length,
    savgol_smooth,
    savgol_weights,
)
from bradyquant.synth import SeverityProfile, generate
from conftest import hand_frame


def rational_savgol(window, polyorder):
    """Centre weights e0^T (V^T V)^-1 V^T by exact Gauss-Jordan elimination."""
    half = window // 2
    V = [[Fraction(k - half) ** j for j in range(polyorder + 1)] for k in range(window)]
    m = polyorder + 1
    A = [[sum(V[k][i] * V[k][j] for k in range(window)) for j in range(m)] + [Fraction(int(i == 0))]
         for i in range(m)]
    for c in range(m):
        piv = next(r for r in range(c, m) if A[r][c] != 0)
        A[c], A[piv] = A[piv], A[c]
        A[c] = [v / A[c][c] for v in A[c]]
        for r in range(m):
            if r != c and A[r][c] != 0:
                A[r] = [a - A[r][c] * b for a, b in zip(A[r], A[c])]
    row = [A[i][m] for i in range(m)]  # (V^T V)^-1 e0, symmetric inverse
    return [sum(row[j] * V[k][j] for j in range(m)) for k in range(window)]


@pytest.mark.parametrize("window,order,expected", [
    (5, 2, [Fraction(v, 35) for v in (-3, 12, 17, 12, -3)]),
    (7, 3, [Fraction(v, 21) for v in (-2, 3, 6, 7, 6, 3, -2)]),
])
def test_interior_weights_against_exact_oracle(window, order, expected):
    oracle = rational_savgol(window, order)
    assert oracle == expected
    assert np.max(np.abs(savgol_weights(window, order) - np.array(oracle, dtype=float))) < 1e-12


@pytest.mark.parametrize("window,order", [(5, 2), (5, 4), (7, 3), (9, 2), (11, 5)])
def test_weight_moments(window, order):
    w = savgol_weights(window, order)
    offsets = np.arange(window) - window // 2
    assert abs(w.sum() - 1) < 1e-12
    assert abs(w @ offsets) < 1e-12


@pytest.mark.parametrize("window,order", [(5, 2), (7, 3), (5, 4), (9, 4)])
def test_boundaries_match_scipy_interp(window, order):
    y = np.random.default_rng(window + order).normal(size=40)
    ours = savgol_smooth(y, window, order).values
    assert np.allclose(ours, savgol_filter(y, window, order, mode="interp"), atol=1e-10)


@given(st.sampled_from([(5, 2), (7, 3), (5, 4), (9, 3)]), st.integers(9, 40),
       st.lists(st.floats(-3, 3), min_size=5, max_size=5))
def test_polynomials_pass_through(wp, n, coef):
    window, order = wp
    t = np.linspace(-1, 1, n)
    y = np.polyval(coef[: order + 1], t) + 5.0
    out = savgol_smooth(y, window, order).values
    assert np.max(np.abs(out - y)) <= 1e-9 * max(1.0, np.max(np.abs(y)))


@given(st.integers(7, 30), st.floats(-5, 5), st.floats(-5, 5), st.integers(0, 2**16))
def test_linearity(n, a, b, seed):
    rng = np.random.default_rng(seed)
    s1, s2 = rng.normal(size=n), rng.normal(size=n)
    lhs = savgol_smooth(a * s1 + b * s2, 7, 3).values
    rhs = a * savgol_smooth(s1, 7, 3).values + b * savgol_smooth(s2, 7, 3).values
    assert np.allclose(lhs, rhs, rtol=1e-9, atol=1e-9)


def test_invalid_filter():
    for window, order, n in ((4, 2, 10), (5, 5, 10), (7, 3, 5), (5, -1, 10)):
        with pytest.raises(InvalidFilterConfig):
            savgol_smooth(np.zeros(n), window, order)


def test_palm_length_examples():
    assert palm_length(hand_frame(p1=(0, 0, 0), p9=(0, 10, 0))) == 10.0
    assert palm_length(hand_frame(p1=(1, 2, 2), p9=(4, 6, 2))) == 5.0
    with pytest.raises(DegenerateFrame):
        palm_length(hand_frame(p1=(3, 3, 3), p9=(3, 3, 3)))


def _one_frame(movement, side="right", **pts):
    return Recording(movement, side, 30.0, [0.0], hand_frame(**pts)[None])


def test_distance_examples():
    ft = _one_frame("finger_tapping", p4=(3, 4, 0), p8=(0, 0, 0))
    assert distance_signal(ft).values[0] == pytest.approx(0.5, abs=1e-15)
    hm = _one_frame("hand_movement", p1=(0, 0, 0), p9=(0, 7, 0), p12=(0, 0, 7))
    assert distance_signal(hm).values[0] == pytest.approx(1.0, abs=1e-15)
    # palm normal (p5-p0)x(p17-p0) has negative z for the right hand: facing the body
    ra = _one_frame("rapid_am", p0=(0, 0, 0), p5=(0, 4, 0), p17=(4, 4, 0))
    assert distance_signal(ra).values[0] == pytest.approx(-0.4, abs=1e-15)
    assert distance_signal(_one_frame("rapid_am", "left", p0=(0, 0, 0), p5=(0, 4, 0),
                                      p17=(4, 4, 0))).values[0] == pytest.approx(0.4)


def test_degenerate_frame_index():
    pts = np.stack([hand_frame(), hand_frame(p9=(0, 0, 0))])
    with pytest.raises(DegenerateFrame) as info:
        distance_signal(Recording("finger_tapping", "left", 30.0, [0, 1 / 30], pts))
    assert info.value.frame == 1


@pytest.mark.parametrize("movement", ["finger_tapping", "hand_movement", "rapid_am"])
@given(c=st.floats(0.01, 100))
def test_scale_invariance(movement, c):
    r = generate(SeverityProfile(noise_sd=0.05, seed=3), movement, n_cycles=4).recording
    scaled = Recording(r.movement, r.side, r.fps, r.times, r.points * c)
    a, b = distance_signal(r).values, distance_signal(scaled).values
    assert np.allclose(a, b, rtol=1e-9, atol=0)


def test_sine_extrema():
    t = np.arange(300) / 100
    e = detect_extrema(np.sin(2 * np.pi * t))
    assert len(e.peaks) == 3
    assert np.all(np.abs(e.peaks - np.array([25, 125, 225])) <= 1)


def test_ramp_has_no_cycles():
    with pytest.raises(NoCyclesDetected):
        detect_extrema(np.linspace(0, 1, 50))


def test_spike_removed():
    t = np.arange(300) / 100
    clean = np.sin(2 * np.pi * t)
    spiked = clean.copy()
    spiked[60] += 0.02 * (clean.max() - clean.min())
    a, b = detect_extrema(clean), detect_extrema(spiked)
    assert np.array_equal(a.peaks, b.peaks) and np.array_equal(a.troughs, b.troughs)


def _alternates(e, v):
    marks = sorted([(i, 1) for i in e.peaks] + [(i, 0) for i in e.troughs])
    kinds = [k for _, k in marks]
    if any(x == y for x, y in zip(kinds, kinds[1:])):
        return False
    for j, (i, k) in enumerate(marks):
        if k == 1:
            for nb in (j - 1, j + 1):
                if 0 <= nb < len(marks) and not v[i] > v[marks[nb][0]]:
                    return False
    return True


@given(st.integers(0, 2**20), st.floats(0.0, 0.3), st.integers(2, 8))
def test_extrema_alternate(seed, noise, n_waves):
    rng = np.random.default_rng(seed)
    t = np.arange(240) / 30
    v = np.sin(2 * np.pi * n_waves * t / 8) + 0.3 * np.sin(2 * np.pi * rng.uniform(1, 3) * t)
    v += noise * rng.normal(size=t.size)
    sm = savgol_smooth(v, 7, 3)
    try:
        e = detect_extrema(sm, ExtremaConfig())
    except NoCyclesDetected:
        return
    assert _alternates(e, sm.values)


def test_cycles_example():
    v = np.zeros(31)
    v[[0, 15, 30]] = 1.0
    s = SmoothedSeries(v, 7, 3, 30.0)
    c = cycles(s, ExtremaSet(np.array([0, 15, 30]), np.array([7, 22])))
    assert c.amplitudes.tolist() == [1.0, 1.0, 1.0]
    assert c.intervals.tolist() == [0.5, 0.5]


def test_truncation_to_ten():
    t = np.arange(13 * 30) / 30
    v = 0.5 - 0.5 * np.cos(2 * np.pi * (t + 0.5))
    s = SmoothedSeries(v, 7, 3, 30.0)
    e = detect_extrema(v)
    assert len(e.peaks) >= 12
    c = cycles(s, e)
    assert len(c.amplitudes) == 10 and len(c.intervals) == 9
    assert np.all(c.amplitudes > 0) and np.all(c.intervals > 0)


def test_decaying_envelope():
    fps = 30.0
    t = np.arange(int(10.5 * fps)) / fps
    env = 1.0 - 0.5 * t / 10
    v = env * (1 - np.cos(2 * np.pi * t)) / 2
    sm = savgol_smooth(v, 7, 3)
    sm = SmoothedSeries(sm.values, 7, 3, fps)
    c = cycles(sm, detect_extrema(sm))
    assert len(c.amplitudes) == 10
    assert np.all(np.diff(c.amplitudes) < 0)
    analytic = 1.0 - 0.5 * (np.arange(10) + 0.5) / 10
    assert np.all(np.abs(c.amplitudes / analytic - 1) < 0.05)


def test_cycles_deterministic_and_debug_dump():
    r = generate(SeverityProfile(noise_sd=0.03, seed=9), "hand_movement").recording
    a, b = extract_cycles(r), extract_cycles(r)
    assert a.cycles.amplitudes.tobytes() == b.cycles.amplitudes.tobytes()
    assert a.cycles.intervals.tobytes() == b.cycles.intervals.tobytes()
    lines = debug_csv(a).splitlines()
    assert lines[0] == "frame,raw,smoothed,is_peak,is_trough"
    assert len(lines) == r.n_frames + 1
    assert sum(int(x.split(",")[3]) for x in lines[1:]) == len(a.extrema.peaks)
