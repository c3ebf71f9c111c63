import io
import math

import numpy as np
import pytest

from franson_lhv.model import Settings
from franson_lhv.simulator import (
    EVENT_HEADER,
    ConfigError,
    EventStream,
    SimConfig,
    Tag,
    coincidence_sort,
    efficiency_diagnostic,
    events_text,
    fs_to_decimal,
    generate_stream,
    read_events,
    remove_right_analyzer,
    run_chsh,
    summarize,
    to_fs,
    truth_tags,
    write_events,
)

PI = math.pi
GRID8 = [k * PI / 4 for k in range(8)]


@pytest.fixture(scope="module")
def small():
    return SimConfig(n_pairs=100_000, seed=42)


@pytest.fixture(scope="module")
def stream(small):
    return generate_stream(small, Settings(0.7, 0.4))


@pytest.mark.parametrize(
    "changes, fragment",
    [
        ({"delta_t_arm": 5e-12}, "delta_t_arm >= 10*t_coh"),
        ({"mean_interval": 5e-9}, "mean_interval >= 10*delta_t_arm"),
        ({"coincidence_window": 1e-12}, "2*t_coh < coincidence_window"),
        ({"coincidence_window": 2e-9}, "coincidence_window < delta_t_arm"),
        ({"n_pairs": 0}, "n_pairs"),
    ],
)
def test_config_violations_name_the_inequality(changes, fragment):
    with pytest.raises(ConfigError, match=fragment.replace("*", r"\*")):
        SimConfig(**changes)


def test_default_config_is_exact_classifier():
    assert SimConfig().classification_is_exact


def test_fs_to_decimal():
    assert fs_to_decimal(0) == "0.000000000000000"
    assert fs_to_decimal(1) == "0.000000000000001"
    assert fs_to_decimal(to_fs(1.5)) == "1.500000000000000"
    assert fs_to_decimal(-5) == "-0.000000000000005"


def test_detection_times_follow_timing_labels(stream, small):
    j, d = to_fs(small.t_coh), to_fs(small.delta_t_arm)
    dt = stream.right_t - stream.left_t
    same = stream.left_timing == stream.right_timing
    assert np.all(np.abs(dt[same]) <= 2 * j)
    el = (stream.left_timing == 0) & (stream.right_timing == 1)
    assert np.all(np.abs(dt[el] - d) <= 2 * j)
    le = (stream.left_timing == 1) & (stream.right_timing == 0)
    assert np.all(np.abs(dt[le] + d) <= 2 * j)
    base = stream.t_emit + to_fs(small.transit)
    assert np.all(stream.left_t >= base - j)
    assert np.all(stream.left_t - base - d * stream.left_timing.astype(np.int64) <= j)


def test_emission_times_exponential(stream, small):
    gaps = np.diff(stream.t_emit)
    assert np.all(gaps >= 0)
    mean = to_fs(small.mean_interval)
    assert abs(gaps.mean() - mean) < 5 * mean / math.sqrt(gaps.size)
    assert stream[5].pair_id == 5


@pytest.mark.parametrize("psi", GRID8)
def test_coincident_fraction_half(psi):
    n = 100_000
    s = summarize(generate_stream(SimConfig(n_pairs=n, seed=1), Settings(psi, 0)))
    assert abs(s.coincident_fraction - 0.5) < 5 * math.sqrt(0.25 / n)


def test_remove_right_analyzer(small):
    n = small.n_pairs
    for phi1 in (0.0, 1.3, PI):
        st = remove_right_analyzer(small, Settings(phi1, 0.9))
        assert np.all(st.right_sign == 1)
        assert np.all(st.right_timing == 0)
        assert abs(np.mean(st.left_timing == 0) - 0.5) < 5 * math.sqrt(0.25 / n)
        assert abs(np.mean(st.left_sign == 1) - 0.5) < 5 * math.sqrt(0.25 / n)


def test_remove_right_leaves_left_record_unchanged(small):
    with_bs = generate_stream(small, Settings(0.3, 1.0))
    without = remove_right_analyzer(small, Settings(0.3, 1.0))
    assert np.array_equal(with_bs.left_sign, without.left_sign)
    assert np.array_equal(with_bs.left_t, without.left_t)


def _handmade(dt_fs):
    n = len(dt_fs)
    z = np.zeros(n, dtype=np.int64)
    return EventStream(
        pair_id=np.arange(n),
        t_emit=z,
        left_sign=np.ones(n, dtype=np.int8),
        left_t=z + 10**7,
        right_sign=np.ones(n, dtype=np.int8),
        right_t=z + 10**7 + np.asarray(dt_fs, dtype=np.int64),
        left_timing=z.astype(np.int8),
        right_timing=z.astype(np.int8),
        settings=Settings(),
        config=SimConfig(n_pairs=n),
    )


def test_coincidence_sort_examples():
    d = to_fs(1e-9)
    tags = coincidence_sort(_handmade([0, d, -d, 1000]))
    assert tags.tolist() == [Tag.COINCIDENT, Tag.LEFT_EARLY_RIGHT_LATE, Tag.LEFT_LATE_RIGHT_EARLY, Tag.COINCIDENT]


def test_coincidence_sort_matches_truth(stream):
    tags = coincidence_sort(stream)
    assert np.array_equal(tags, truth_tags(stream))
    coinc = tags == Tag.COINCIDENT
    assert np.all(stream.left_timing[coinc] == stream.right_timing[coinc])
    assert np.all(stream.left_timing[~coinc] != stream.right_timing[~coinc])


@pytest.mark.slow
@pytest.mark.parametrize("psi", GRID8)
def test_correlation_estimates_on_grid(psi):
    s = summarize(generate_stream(SimConfig(seed=3), Settings(psi, 0)))
    assert abs(s.postselected - math.cos(psi)) <= 4 * s.postselected_se
    assert abs(s.all_events - math.cos(psi) / 2) <= 4 * s.all_events_se
    # each mixed-timing sign class is 1/16 of the pairs
    n = s.n_pairs
    sigma = math.sqrt(n * (1 / 16) * (15 / 16))
    mixed = s.counts[np.ix_([0, 1], [2, 3])].ravel().tolist() + s.counts[np.ix_([2, 3], [0, 1])].ravel().tolist()
    for c in mixed:
        assert abs(c - n / 16) < 4 * sigma


@pytest.mark.slow
def test_no_signaling_at_event_level():
    n = 10**6
    config = SimConfig(n_pairs=n, seed=8)
    sigma = math.sqrt(0.25 / n)
    runs = [generate_stream(config, Settings(0.5, p2), run=k) for k, p2 in enumerate((0.0, 1.0, 2.5))]
    runs.append(remove_right_analyzer(config, Settings(0.5, 0.0), run=9))
    for st in runs:
        assert abs(np.mean(st.left_sign == 1) - 0.5) < 4 * sigma
        assert abs(np.mean(st.left_timing == 0) - 0.5) < 4 * sigma


def test_stream_determinism(small):
    a = events_text(generate_stream(small, Settings(1.0, 2.0)))
    b = events_text(generate_stream(small, Settings(1.0, 2.0)))
    assert a == b
    c = events_text(generate_stream(small.replace(seed=43), Settings(1.0, 2.0)))
    assert a != c


def test_stream_independent_of_worker_count():
    config = SimConfig(n_pairs=150_000, seed=4)
    a = generate_stream(config, Settings(0.2, 0.3), workers=1)
    b = generate_stream(config, Settings(0.2, 0.3), workers=4)
    for name in ("t_emit", "left_t", "right_t", "left_sign", "right_sign"):
        assert np.array_equal(getattr(a, name), getattr(b, name))


def test_event_export_roundtrip(small):
    st = generate_stream(small.replace(n_pairs=50), Settings(0.1, 0.2))
    buf = io.StringIO()
    write_events(st, buf, comment="manifest: manifest.json")
    text = buf.getvalue()
    assert text.splitlines()[0] == "# manifest: manifest.json"
    assert text.splitlines()[1] == ",".join(EVENT_HEADER)
    rows = read_events(io.StringIO(text))
    assert len(rows) == 50
    assert int(rows[3]["left_sign"]) == st.left_sign[3]
    assert rows[3]["left_t_s"] == fs_to_decimal(int(st.left_t[3]))
    assert {r["tag"] for r in rows} <= {"C", "EL", "LE"}


def test_run_chsh_degenerate_angles():
    rep = run_chsh(SimConfig(n_pairs=200_000, seed=5), (0, 0, 0, 0))
    assert rep.postselected_s == pytest.approx(2.0, abs=1e-12)
    assert abs(rep.all_events_s - 1.0) < 0.01
    assert rep.oracle == {"postselected": pytest.approx(2.0), "all_events": pytest.approx(1.0)}


def test_efficiency_diagnostic():
    fraction, single, threshold = efficiency_diagnostic()
    assert fraction == 0.5
    assert single == pytest.approx(0.70710678, abs=1e-8)
    assert threshold == pytest.approx(0.82842712, abs=1e-8)
    assert single < threshold
