import numpy as np
import pytest

from breakseg.breakpoint_error import breakpoint_error
from breakseg.segmentation import phi_breaks
from breakseg.signals import (
    Segment,
    Signal,
    TrueModel,
    make_true_signal,
    sample_signal,
    true_breakpoints,
)


@pytest.fixture
def two_break_model():
    return TrueModel(500, (Segment(300, 0.0, 1.0), Segment(400, 3.0, 1.0), Segment(500, 0.0, 1.0)))


def test_seven_segment_model():
    model = make_true_signal(70000, 10000, (-1, 0, 1, 0, -1, 0, 1), 1.0)
    assert true_breakpoints(model) == list(range(10000, 70000, 10000))
    assert len(model.segments) == 7


def test_breaks_from_segment_ends(two_break_model):
    model = TrueModel(22, ((4, 0.0, 1.0), (14, 1.0, 1.0), (22, 0.0, 1.0)))
    assert true_breakpoints(model) == [4, 14]
    assert true_breakpoints(two_break_model) == [300, 400]


def test_single_segment():
    model = make_true_signal(10, 10, (0.0,))
    assert true_breakpoints(model) == []


def test_last_segment_may_be_short():
    model = make_true_signal(25, 10, (0.0, 1.0))
    assert [s.end for s in model.segments] == [10, 20, 25]
    assert model.segments[2].mean == 0.0


@pytest.mark.parametrize("kwargs", [
    dict(P=1, break_spacing=1, means=(0,)),
    dict(P=10, break_spacing=0, means=(0,)),
    dict(P=10, break_spacing=2, means=()),
    dict(P=10, break_spacing=2, means=(0, 1), sds=0.0),
    dict(P=10, break_spacing=2, means=(0, 1), sds=(1.0, -1.0)),
    dict(P=10, break_spacing=2, means=(0, 0), sds=1.0),
])
def test_make_true_signal_rejects(kwargs):
    with pytest.raises(ValueError):
        make_true_signal(**kwargs)


def test_variance_change_model_is_valid():
    model = make_true_signal(500, 250, (0.0,), (1.0, 3.0))
    assert true_breakpoints(model) == [250]


def test_sample_deterministic(two_break_model):
    a = sample_signal(two_break_model, 100, seed=7)
    b = sample_signal(two_break_model, 100, seed=7)
    assert a == b
    assert a != sample_signal(two_break_model, 100, seed=8)


def test_sample_noise_free_is_exact():
    model = TrueModel(50, ((20, 1.0, 0.0), (50, -2.0, 0.0)))
    sig = sample_signal(model, 50, seed=0)
    np.testing.assert_array_equal(sig.positions, np.arange(1, 51))
    np.testing.assert_array_equal(sig.values, model.means_at(sig.positions))


@pytest.mark.parametrize("scheme", ["uniform-spaced", "uniform-random"])
def test_sample_positions(two_break_model, scheme):
    sig = sample_signal(two_break_model, 100, seed=1, scheme=scheme)
    assert len(sig) == 100
    assert sig.positions[0] >= 1 and sig.positions[-1] <= 500
    assert np.all(np.diff(sig.positions) > 0)


def test_sample_mean_first_segment(two_break_model):
    sig = sample_signal(two_break_model, 100, seed=123)
    first = sig.values[sig.positions <= 300]
    assert abs(first.mean() - 0.0) <= 3 * 1.0 / np.sqrt(len(first))


@pytest.mark.parametrize("d", [0, 501])
def test_sample_rejects_bad_counts(two_break_model, d):
    with pytest.raises(ValueError):
        sample_signal(two_break_model, d, seed=0)


def test_noise_free_recovers_breaks_exactly():
    model = TrueModel(40, ((10, 0.0, 0.0), (25, 2.0, 0.0), (40, -1.0, 0.0)))
    sig = sample_signal(model, 40, seed=0)
    guesses = phi_breaks(sig.values, sig.positions)
    assert breakpoint_error(model.breaks, model.P, guesses).total == 0


def test_crop():
    model = make_true_signal(7000, 1000, (-1, 0, 1, 0))
    short = model.crop(2500)
    assert short.P == 2500 and short.breaks == [1000, 2000]
    assert model.crop(1000).breaks == []


def test_round_trips(tmp_path, two_break_model):
    sig = sample_signal(two_break_model, 30, seed=3)
    sig.to_csv(tmp_path / "s.csv", header_lines=["seed=3"])
    text = (tmp_path / "s.csv").read_text().splitlines()
    assert text[0] == "# seed=3" and text[1] == "position,value"
    assert Signal.from_csv(tmp_path / "s.csv") == sig
    two_break_model.to_json(tmp_path / "m.json", seed=3)
    assert TrueModel.from_json(tmp_path / "m.json") == two_break_model


def test_signal_validation():
    with pytest.raises(ValueError):
        Signal([2, 1], [0.0, 0.0])
    with pytest.raises(ValueError):
        Signal([1, 2], [0.0, np.nan])
    with pytest.raises(ValueError):
        Signal([], [])
