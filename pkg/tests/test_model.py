import math

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st
from scipy import integrate
from scipy.stats import qmc

from franson_lhv.model import (
    LABELS,
    LEFT_CHART,
    RIGHT_CHART,
    TWO_PI,
    HiddenVariablePair,
    Label,
    Settings,
    Timing,
    classify_left,
    classify_right,
    lobe_height,
    r_sections,
    reduce_angle,
    respond_arrays,
    respond_pair,
    shift_left,
    shift_right,
)

PI = math.pi
angles = st.floats(0.0, TWO_PI, exclude_max=True)
unit = st.floats(0.0, 1.0, exclude_max=True)

P_E, M_E, P_L, M_L = LABELS


def test_label_order_and_fields():
    assert [str(lab) for lab in LABELS] == ["+E", "-E", "+L", "-L"]
    for lab in LABELS:
        assert Label.of(lab.sign, lab.timing) is lab


@pytest.mark.parametrize("x", [-1e-300, -TWO_PI, 4 * PI, -1e-17, 7.5, -7.5])
def test_reduce_angle_is_canonical(x):
    y = reduce_angle(x)
    assert 0.0 <= y < TWO_PI
    assert math.isclose(math.cos(y), math.cos(x), abs_tol=1e-12)


@pytest.mark.parametrize(
    "phi, phi1, expected", [(PI / 2, 0.0, PI / 2), (0.0, PI / 4, 7 * PI / 4), (3 * PI / 2, PI / 2, PI)]
)
def test_shift_left(phi, phi1, expected):
    assert shift_left(phi, phi1) == pytest.approx(expected, abs=1e-15)


@pytest.mark.parametrize(
    "phi, phi2, expected", [(PI / 2, 0.0, PI / 2), (7 * PI / 4, PI / 2, PI / 4), (PI / 4, PI / 4, PI / 2)]
)
def test_shift_right(phi, phi2, expected):
    assert shift_right(phi, phi2) == pytest.approx(expected, abs=1e-15)


def test_lobe_height():
    assert lobe_height(PI / 2) == pytest.approx(0.3926990817, abs=1e-10)
    assert lobe_height(0.0) == 0.0
    assert lobe_height(3 * PI / 2) == pytest.approx(PI / 8)


@pytest.mark.parametrize(
    "phi, r, expected",
    [(PI / 2, 0.2, P_E), (3 * PI / 2, 0.2, M_E), (PI / 2, 0.8, P_L), (0.0, 0.3, M_L)],
)
def test_classify_left_examples(phi, r, expected):
    assert classify_left(phi, r) is expected


@pytest.mark.parametrize("phi, r, expected", [(PI / 4, 0.3, P_E), (5 * PI / 4, 0.7, M_L), (PI / 4, 0.6, P_L)])
def test_classify_right_examples(phi, r, expected):
    assert classify_right(phi, r) is expected


def test_respond_pair_examples():
    assert respond_pair(HiddenVariablePair(PI / 2, 0.2), Settings(0, 0)) == (P_E, P_E)
    assert respond_pair(HiddenVariablePair(3 * PI / 2, 0.7), Settings(0, 0)) == (M_L, M_L)
    left, right = respond_pair(HiddenVariablePair(PI / 2, 0.2), Settings(PI / 2, 0))
    assert left is P_L
    assert right is P_E


def test_hidden_variable_pair_rejects_r_out_of_range():
    with pytest.raises(ValueError):
        HiddenVariablePair(0.0, 1.0)


def test_settings_psi_is_reduced_sum():
    s = Settings(3 * PI / 2, PI)
    assert s.psi == pytest.approx(PI / 2)
    assert Settings(-PI / 4, 0).phi1 == pytest.approx(7 * PI / 4)


def test_partition_on_quasi_random_points():
    pts = qmc.Sobol(d=2, scramble=True, seed=11).random(2**20)
    phi, r = TWO_PI * pts[:, 0], pts[:, 1]
    for chart in (LEFT_CHART, RIGHT_CHART):
        codes = chart.classify_array(phi, r)
        assert codes.shape == phi.shape
        assert set(np.unique(codes)) <= {0, 1, 2, 3}


@given(angles, unit)
def test_scalar_and_vector_classifiers_agree(phi, r):
    for chart in (LEFT_CHART, RIGHT_CHART):
        assert chart.classify_array(np.array([phi]), np.array([r]))[0] == chart.classify(phi, r)


def _off_boundary(phi, r):
    h = lobe_height(phi)
    edges = [0.0, h, 0.25 + h / 2, 0.5, 0.75 - h / 2, 1 - h, 1.0]
    return min(abs(r - e) for e in edges) > 1e-9 and min(abs(phi - a) for a in (0, PI, TWO_PI)) > 1e-9


@given(angles, unit)
def test_left_pi_shift_flips_sign(phi, r):
    assume(_off_boundary(phi, r))
    a = classify_left(phi, r)
    b = classify_left(reduce_angle(phi + PI), r)
    assert b.sign == -a.sign
    assert b.timing == a.timing


@given(angles, unit)
def test_left_r_mirror_flips_timing(phi, r):
    assume(_off_boundary(phi, r) and r > 0)
    a = classify_left(phi, r)
    b = classify_left(phi, 1.0 - r)
    assert b.sign == a.sign
    assert b.timing != a.timing


@given(angles, unit)
def test_right_chart_symmetries(phi, r):
    assume(abs(r - 0.5) > 1e-12 and r > 0 and min(abs(phi - PI), phi, TWO_PI - phi) > 1e-12)
    a = classify_right(phi, r)
    assert classify_right(reduce_angle(phi + PI), r).sign == -a.sign
    assert classify_right(phi, 1.0 - r).timing != a.timing


def test_locality_over_settings_grid():
    g = np.random.default_rng(5)
    phi, r = g.uniform(0, TWO_PI, 5000), g.random(5000)
    grid = np.linspace(0, TWO_PI, 9)
    for p1 in grid:
        base_left, _ = respond_arrays(phi, r, Settings(p1, 0.0))
        for p2 in grid:
            left, _ = respond_arrays(phi, r, Settings(p1, p2))
            assert np.array_equal(left, base_left)
    for p2 in grid:
        _, base_right = respond_arrays(phi, r, Settings(0.0, p2))
        for p1 in grid:
            _, right = respond_arrays(phi, r, Settings(p1, p2))
            assert np.array_equal(right, base_right)


@pytest.mark.parametrize("chart", [LEFT_CHART, RIGHT_CHART], ids=["left", "right"])
@pytest.mark.parametrize("label", LABELS, ids=str)
def test_label_areas(chart, label):
    def length(phi):
        return sum(b - a for a, b, lab in r_sections(chart, phi) if lab is label)

    area = sum(
        integrate.quad(length, lo, hi, epsabs=1e-13, epsrel=1e-13)[0] for lo, hi in [(0, PI), (PI, TWO_PI)]
    )
    assert abs(area - PI / 2) < 1e-9


def test_r_sections_at_zero():
    assert r_sections(LEFT_CHART, 0.0) == [(0.0, 0.25, P_L), (0.25, 0.5, M_L), (0.5, 0.75, M_E), (0.75, 1.0, P_E)]


def test_r_sections_at_quarter_turn():
    secs = r_sections(LEFT_CHART, PI / 2)
    assert len(secs) == 6
    breaks = [b for _, b, _ in secs[:-1]]
    h, mid = PI / 8, 0.25 + PI / 16
    assert breaks == pytest.approx([h, mid, 0.5, 1 - mid, 1 - h], abs=1e-15)
    assert breaks == pytest.approx([0.3927, 0.4463, 0.5, 0.5537, 0.6073], abs=5e-5)
    for a, b, lab in secs:
        for r in np.linspace(a, b, 7)[:-1]:
            assert classify_left(PI / 2, r) is lab


def test_r_sections_right_chart():
    for phi in (0.3, 4.0):
        secs = r_sections(RIGHT_CHART, phi)
        assert [(a, b) for a, b, _ in secs] == [(0.0, 0.5), (0.5, 1.0)]
        assert [lab.timing for _, _, lab in secs] == [Timing.EARLY, Timing.LATE]


def test_sections_cover_unit_interval_without_gaps():
    phi = np.linspace(0, TWO_PI, 1001)
    lo, hi, _ = LEFT_CHART.section_table(phi)
    assert np.all(hi >= lo)
    assert np.allclose(lo[1:], hi[:-1], atol=0)
    assert np.all(lo[0] == 0) and np.all(hi[-1] == 1)


@pytest.mark.parametrize("chart", [LEFT_CHART, RIGHT_CHART], ids=["left", "right"])
def test_section_lookup_matches_pointwise_classification(chart):
    g = np.random.default_rng(2024)
    phi, r = g.uniform(0, TWO_PI, 10**5), g.random(10**5)
    lo, hi, labels = chart.section_table(phi)
    inside = (lo <= r) & (r < hi)
    assert np.all(inside.sum(axis=0) == 1)
    looked_up = labels[inside.argmax(axis=0), np.arange(phi.size)]
    assert np.array_equal(looked_up, chart.classify_array(phi, r))
