import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from breakseg.annotation import (
    Annotation,
    AnnotationSet,
    complete_error,
    incomplete_error,
    negative_regions,
    read_annotations,
    write_annotations,
    zero_one_error,
)

# sample regions for a signal on 100 positions: none, one, at least one, none
REGIONS = AnnotationSet([
    Annotation(5, 10, 0, 0),
    Annotation(20, 30, 1, 1),
    Annotation(40, 70, 1, math.inf),
    Annotation(80, 99, 0, 0),
])


def test_incomplete_exact_hit():
    assert incomplete_error([Annotation(20, 30)], [25]).total == 0


def test_incomplete_false_positives():
    err = incomplete_error([Annotation(20, 30)], [21, 25, 29])
    assert (err.fp, err.fn, err.total) == (2, 0, 2)


def test_incomplete_mixed_regions():
    err = incomplete_error(REGIONS, [7, 25, 50])
    assert (err.fp, err.fn, err.total) == (1, 0, 1)


def test_unbounded_region_never_false_positive():
    assert incomplete_error(REGIONS, [41, 45, 50, 60, 25]).total == 0


def test_guesses_outside_regions_are_free():
    assert incomplete_error([Annotation(20, 30)], [25, 3, 90]).total == 0


def test_negative_regions_examples():
    assert list(negative_regions([Annotation(20, 30)], 100)) == [
        Annotation(1, 19, 0, 0), Annotation(31, 99, 0, 0)]
    assert list(negative_regions([Annotation(1, 9)], 10)) == []
    assert list(negative_regions([Annotation(1, 5), Annotation(6, 9)], 10)) == []
    assert list(negative_regions([], 10)) == [Annotation(1, 9, 0, 0)]


def test_negative_regions_reject_overlap():
    with pytest.raises(ValueError):
        negative_regions([Annotation(1, 5), Annotation(5, 9)], 20)


def test_complete_error_examples():
    assert complete_error([Annotation(2, 6)], [4]) == 0
    assert complete_error([Annotation(2, 6)], [10]) == 2


def test_complete_error_rejects_non_unit():
    with pytest.raises(ValueError):
        complete_error([Annotation(2, 6, 0, 0)], [4])


def test_zero_one_examples():
    assert zero_one_error([Annotation(20, 30)], [21, 25, 29]) == 1
    assert zero_one_error(REGIONS, [25, 50]) == 0
    assert zero_one_error(REGIONS, []) == 2


def test_annotation_validation():
    with pytest.raises(ValueError):
        Annotation(5, 4)
    with pytest.raises(ValueError):
        Annotation(1, 4, 2, 1)


def test_complete_flag():
    assert AnnotationSet([Annotation(1, 3), Annotation(5, 8)]).complete
    assert not AnnotationSet([Annotation(1, 5), Annotation(5, 8)]).complete
    assert not REGIONS.complete


def test_csv_round_trip(tmp_path):
    path = tmp_path / "ann.csv"
    write_annotations(REGIONS, path)
    assert path.read_text().splitlines()[3] == "40,70,1,"
    assert read_annotations(path) == REGIONS


@st.composite
def complete_sets(draw):
    P = draw(st.integers(3, 80))
    cuts = sorted(draw(st.sets(st.integers(1, P - 1), max_size=10)))
    regions = []
    # pair consecutive cut points into disjoint closed intervals
    for lo, hi in zip(cuts[0::2], cuts[1::2]):
        regions.append(Annotation(lo, hi))
    if len(cuts) % 2:
        regions.append(Annotation(cuts[-1], cuts[-1]))
    G = draw(st.sets(st.integers(1, P - 1), max_size=15))
    return AnnotationSet(regions), P, sorted(G)


@settings(max_examples=300, deadline=None)
@given(complete_sets())
def test_complete_equals_incomplete_with_negatives(inst):
    A, P, G = inst
    full = A + negative_regions(A, P)
    assert incomplete_error(full, G).total == complete_error(A, G)


@settings(max_examples=200, deadline=None)
@given(complete_sets())
def test_zero_one_bounds(inst):
    A, P, G = inst
    full = A + negative_regions(A, P)
    z = zero_one_error(full, G)
    assert z <= incomplete_error(full, G).total
    assert z <= len(full)


@settings(max_examples=200, deadline=None)
@given(complete_sets(), st.data())
def test_dropping_annotations_never_increases(inst, data):
    A, P, G = inst
    full = list(A + negative_regions(A, P))
    keep = data.draw(st.lists(st.booleans(), min_size=len(full), max_size=len(full)))
    subset = [a for a, k in zip(full, keep) if k]
    assert incomplete_error(subset, G).total <= incomplete_error(full, G).total


def test_zero_one_is_thresholded_per_region():
    rng = np.random.default_rng(0)
    for _ in range(200):
        lo = int(rng.integers(1, 50))
        lowest = int(rng.integers(0, 3))
        ann = Annotation(lo, lo + int(rng.integers(0, 20)), lowest, lowest + int(rng.integers(0, 3)))
        G = sorted(set(rng.integers(1, 80, size=int(rng.integers(0, 10))).tolist()))
        err = incomplete_error([ann], G)
        assert zero_one_error([ann], G) == int(err.fp > 0) + int(err.fn > 0)
        assert min(err.fp, err.fn) == 0
