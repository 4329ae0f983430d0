import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from idsor.core import FilterMask, LabelSet
from idsor.errors import AlignmentError, ConfigError
from idsor.evaluation import (
    EvalReport,
    SweepEntry,
    best_entry,
    encode_sweep_csv,
    evaluate,
    expand_grid,
    sweep,
)
from idsor.filters import run_filter

from conftest import random_cloud

SNOW = 110


def labels_from(pos):
    return LabelSet(np.where(pos, SNOW, 40))


def oracle(keep, pos):
    tp = fp = tn = fn = 0
    for k, p in zip(keep, pos):
        if not k and p:
            tp += 1
        elif not k:
            fp += 1
        elif p:
            fn += 1
        else:
            tn += 1
    return tp, fp, tn, fn


def test_perfect_filter():
    pos = np.array([1, 0, 0, 1, 0], bool)
    rep = evaluate(FilterMask(~pos), labels_from(pos))
    assert (rep.tp, rep.fp, rep.tn, rep.fn) == (2, 0, 3, 0)
    assert rep.precision == 1.0 and rep.recall == 1.0


def test_worked_counts():
    # 14 weather points, 9 removed; 1 scene point removed out of 86
    pos = np.r_[np.ones(14, bool), np.zeros(86, bool)]
    keep = np.ones(100, bool)
    keep[:9] = False
    keep[14] = False
    rep = evaluate(FilterMask(keep), labels_from(pos))
    assert (rep.tp, rep.fp, rep.tn, rep.fn) == (9, 1, 85, 5)
    assert rep.precision == pytest.approx(0.9)
    assert rep.recall == pytest.approx(9 / 14)


def test_nothing_removed():
    pos = np.array([1, 0, 1], bool)
    rep = evaluate(FilterMask(np.ones(3, bool)), labels_from(pos))
    assert rep.precision is None and rep.recall == 0.0


def test_no_weather():
    rep = evaluate(FilterMask(np.array([0, 1], bool)), labels_from(np.zeros(2, bool)))
    assert rep.recall is None and rep.precision == 0.0


def test_alignment():
    with pytest.raises(AlignmentError):
        evaluate(FilterMask(np.ones(3, bool)), labels_from(np.ones(4, bool)))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(0, 300))
def test_matches_oracle_and_invariants(seed, n):
    rng = np.random.default_rng(seed)
    keep = rng.random(n) < rng.random()
    pos = rng.random(n) < rng.random()
    labels = labels_from(pos)
    rep = evaluate(FilterMask(keep), labels)
    assert (rep.tp, rep.fp, rep.tn, rep.fn) == oracle(keep, pos)
    assert rep.n == n

    all_kept = evaluate(FilterMask(np.ones(n, bool)), labels)
    assert all_kept.tp == all_kept.fp == 0 and all_kept.precision is None
    none_kept = evaluate(FilterMask(np.zeros(n, bool)), labels)
    assert none_kept.tn == none_kept.fn == 0
    if pos.any():
        assert none_kept.recall == 1.0

    comp = evaluate(FilterMask(~keep), labels)
    assert (comp.tp, comp.fp, comp.tn, comp.fn) == (rep.fn, rep.tn, rep.fp, rep.tp)


def test_expand_grid_order():
    got = expand_grid({"s": [1, 2], "rho": [10, 100]})
    assert got == [
        {"s": 1, "rho": 10},
        {"s": 1, "rho": 100},
        {"s": 2, "rho": 10},
        {"s": 2, "rho": 100},
    ]
    with pytest.raises(ConfigError):
        expand_grid({})
    with pytest.raises(ConfigError, match="rho"):
        expand_grid({"s": [1], "rho": []})


def _entry(order, prec_counts):
    tp, fp, tn, fn = prec_counts
    return SweepEntry(order, {"s": order}, EvalReport(tp, fp, tn, fn))


def test_sweep_single_point_equals_evaluate(rng):
    cloud = random_cloud(rng, 300)
    labels = labels_from(rng.random(300) < 0.2)
    entries = sweep(cloud, labels, "idsor", {"rho": [50.0]}, base={"s": 1.2})
    assert len(entries) == 1
    assert entries[0].config == {"s": 1.2, "rho": 50.0}
    ref = evaluate(run_filter("idsor", cloud, {"rho": 50, "s": 1.2}), labels)
    assert entries[0].report == ref


def test_sweep_sorted_and_complete(rng):
    cloud = random_cloud(rng, 300)
    labels = labels_from(rng.random(300) < 0.2)
    grid = {"s": [0.5, 1.0, 2.0], "rho": [0.0, 100.0]}
    entries = sweep(cloud, labels, "idsor", grid)
    assert sorted(e.order for e in entries) == list(range(6))
    keys = [(-e.report.recall, -(e.report.precision or -1), e.order) for e in entries]
    assert keys == sorted(keys)
    with pytest.raises(AlignmentError):
        sweep(cloud, labels_from(np.ones(5, bool)), "idsor", grid)
    with pytest.raises(ConfigError):
        sweep(cloud, labels, "idsor", {"bogus": [1]})


def test_best_entry():
    a = _entry(0, (90, 10, 0, 10))  # p .9  r .9
    b = _entry(1, (85, 1, 0, 15))   # p .988 r .85
    c = _entry(2, (95, 20, 0, 5))   # p .826 r .95
    d = _entry(3, (90, 5, 0, 10))   # p .947 r .9
    assert best_entry([a, b, c, d], 0.9) is d
    assert best_entry([a, b, c, d], 0.8) is b
    assert best_entry([b], 0.9) is None
    assert best_entry([], 0.9) is None


def test_sweep_csv():
    entries = [
        SweepEntry(0, {"s": 1.0, "rho": 10.0}, EvalReport(9, 1, 85, 5)),
        SweepEntry(1, {"s": 2.0, "rho": 10.0}, EvalReport(0, 0, 86, 14)),
    ]
    text = encode_sweep_csv(entries).decode()
    assert text.splitlines() == [
        "s,rho,tp,fp,tn,fn,precision,recall",
        "1,10,9,1,85,5,0.9,0.642857",
        "2,10,0,0,86,14,nan,0",
    ]
