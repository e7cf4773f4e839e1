import gc

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from osequences.checkpoint import CheckpointError, load_layer, read_header, save_layer
from osequences.combinatorics import EnumerationBudgetError, count_opnkd_oracle, enumerate_o_sequences
from osequences.engine import (
    TRACKER,
    CountTable,
    EngineOptions,
    TruncPoly,
    _from_truncpoly,
    _mul_acc,
    _pack,
    _to_truncpoly,
    ad_via_closed_sums,
    init_layer_p1,
    next_layer,
    o_values_from_layer,
    od_via_closed_sums,
    poly_mul_trunc,
    run_iterative,
)


def naive_product(a, b, D):
    full = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            full[i + j] += x * y
    return (full + [0] * (D + 1))[:D + 1]


def layers_up_to(p_max, D):
    layer = init_layer_p1(D)
    out = {1: layer}
    while layer.p < p_max:
        layer = next_layer(layer)
        out[layer.p] = layer
    return out


# --- truncated products -----------------------------------------------------


def test_poly_mul_trunc_examples():
    t = TruncPoly.from_terms({1: 1}, 3)
    assert poly_mul_trunc(t, t, 3).coeffs == [0, 0, 1, 0]
    a = TruncPoly.from_terms({1: 1, 2: 1}, 3)
    assert poly_mul_trunc(a, a, 3).coeffs == [0, 0, 1, 2]
    assert poly_mul_trunc(TruncPoly.zero(3), a, 3).is_zero()


def test_poly_mul_trunc_rejects_mismatched_caps():
    with pytest.raises(ValueError):
        poly_mul_trunc(TruncPoly.zero(3), TruncPoly.zero(4), 3)


def test_truncpoly_validation():
    with pytest.raises(ValueError):
        TruncPoly([0, 1], 3)
    with pytest.raises(ValueError):
        TruncPoly([0, -1], 1)


sparse_coeffs = st.one_of(st.just(0), st.integers(min_value=0, max_value=2**128))


@st.composite
def poly_pairs(draw):
    D = draw(st.integers(min_value=0, max_value=64))
    a = draw(st.lists(sparse_coeffs, min_size=D + 1, max_size=D + 1))
    b = draw(st.lists(sparse_coeffs, min_size=D + 1, max_size=D + 1))
    return D, a, b


@settings(max_examples=60, deadline=None)
@given(poly_pairs())
def test_poly_mul_trunc_matches_full_product(pair):
    D, a, b = pair
    got = poly_mul_trunc(TruncPoly(a, D), TruncPoly(b, D), D)
    assert got.coeffs == naive_product(a, b, D)


@settings(max_examples=60, deadline=None)
@given(poly_pairs())
def test_sparse_kernel_matches_reference(pair):
    D, a, b = pair
    x, y = _from_truncpoly(TruncPoly(a, D)), _from_truncpoly(TruncPoly(b, D))
    acc = np.zeros(D + 1, dtype=object)
    if x is not None and y is not None:
        _mul_acc(acc, x, y, D)
    assert [int(c) for c in acc] == poly_mul_trunc(TruncPoly(a, D), TruncPoly(b, D), D).coeffs


def test_pack_trims_and_round_trips():
    assert _pack(np.zeros(5, dtype=object)) is None
    lo, c = _pack(np.array([0, 0, 3, 0, 4, 0], dtype=object))
    assert lo == 2 and list(c) == [3, 0, 4]
    assert _to_truncpoly((lo, c), 5).coeffs == [0, 0, 3, 0, 4, 0]


# --- layers -----------------------------------------------------------------


def test_init_layer_examples():
    layer = init_layer_p1(3)
    assert layer.entry(2, 1).coeffs == [0, 0, 1, 0]
    assert layer.entry(1, 2).is_zero()
    assert init_layer_p1(2).entry(1, 1).coeffs == [0, 0, 1]
    # (2, 2) would need t^3 > t^D
    assert init_layer_p1(2).coefficient(2, 2, 3) == 0
    with pytest.raises(ValueError):
        init_layer_p1(0)


def test_next_layer_examples():
    assert next_layer(init_layer_p1(2)).coefficient(1, 0, 2) == 1
    layer2 = next_layer(init_layer_p1(4))
    assert layer2.coefficient(3, 0, 4) == count_opnkd_oracle(2, 3, 0, 4)
    with pytest.raises(ValueError):
        next_layer(init_layer_p1(4), D=5)


def test_layer_entries_match_oracle():
    D = 10
    layers = layers_up_to(4, D)
    for p, layer in layers.items():
        for n in range(0, 9):
            for k in range(0, n + 1):
                poly = layer.entry(n, k)
                assert poly[0] == 0
                for d in range(1, D + 1):
                    assert poly[d] == count_opnkd_oracle(p, n, k, d), (p, n, k, d)


def test_entries_beyond_min_n_d_vanish():
    layers = layers_up_to(5, 12)
    for p, layer in layers.items():
        for n in range(12):
            for k in range(n + 1):
                for d in range(1, 13):
                    if k > min(n, d - 1):
                        assert layer.coefficient(n, k, d) == 0


def test_layer_entry_index_errors():
    layer = init_layer_p1(3)
    with pytest.raises(IndexError):
        layer.entry(3, 0)
    assert layer.coefficient(5, 0, 1) == 0


# --- full runs --------------------------------------------------------------


def test_run_iterative_examples():
    assert run_iterative(1).O == [1]
    assert run_iterative(2).O == [1, 1]
    table = run_iterative(6)
    assert table.O == [1, 1, 2, 3, 5, 8]
    assert table.A == [0, 0, 1, 1, 2, 3]
    with pytest.raises(ValueError):
        run_iterative(0)


def test_run_iterative_matches_enumeration():
    table = run_iterative(14)
    assert table.O == [len(enumerate_o_sequences(d)) for d in range(1, 15)]


def test_o_equals_previous_plus_a():
    table = run_iterative(40)
    for d in range(3, 41):
        assert table.o(d) == table.o(d - 1) + table.a(d)
    assert table.a(1) == table.a(2) == 0
    assert table.O == sorted(table.O)


def test_o_values_recoverable_from_any_later_layer():
    layers = layers_up_to(7, 12)
    expected = run_iterative(12).O
    for p, layer in layers.items():
        assert o_values_from_layer(layer) == expected[:p]


def test_count_table_validates_length():
    with pytest.raises(ValueError):
        CountTable(3, [1, 1])


def test_two_layers_resident():
    gc.collect()
    TRACKER.reset()
    base = TRACKER.live
    run_iterative(30)
    assert TRACKER.peak - base <= 2


def test_threads_do_not_change_results():
    assert run_iterative(45, EngineOptions(threads=4)).O == run_iterative(45).O


# --- closed sums ------------------------------------------------------------


@pytest.mark.parametrize("d", range(3, 11))
def test_closed_sums_match_engine(d):
    table = run_iterative(10)
    assert od_via_closed_sums(d) == table.o(d)
    assert ad_via_closed_sums(d) == table.a(d)


def test_closed_sum_examples():
    assert (od_via_closed_sums(3), ad_via_closed_sums(3)) == (2, 1)
    assert (od_via_closed_sums(5), ad_via_closed_sums(5)) == (5, 2)
    assert ad_via_closed_sums(4) == 1


def test_closed_sum_limits():
    with pytest.raises(ValueError):
        od_via_closed_sums(2)
    with pytest.raises(EnumerationBudgetError):
        od_via_closed_sums(13)


# --- checkpoints ------------------------------------------------------------


def test_checkpoint_round_trip(tmp_path):
    layer = init_layer_p1(5)
    path = save_layer(layer, tmp_path / "l.bin")
    assert read_header(path) == (1, 1, 5)
    assert load_layer(path).same_as(layer)


def test_checkpoint_round_trip_big_coefficients(tmp_path):
    layer = layers_up_to(6, 40)[6]
    path = save_layer(layer, tmp_path / "l6.bin")
    back = load_layer(path, expected_D=40)
    assert back.same_as(layer)
    assert next_layer(back).same_as(next_layer(layer))


def test_checkpoint_wrong_d(tmp_path):
    path = save_layer(init_layer_p1(5), tmp_path / "l.bin")
    with pytest.raises(CheckpointError, match="D=5"):
        load_layer(path, expected_D=6)


def test_checkpoint_truncated(tmp_path):
    path = save_layer(layers_up_to(3, 12)[3], tmp_path / "l.bin")
    raw = path.read_bytes()
    for cut in (len(raw) - 1, len(raw) // 2, 30, 10):
        path.write_bytes(raw[:cut])
        with pytest.raises(CheckpointError):
            load_layer(path)


def test_checkpoint_bad_header(tmp_path):
    path = save_layer(init_layer_p1(3), tmp_path / "l.bin")
    raw = bytearray(path.read_bytes())
    bad = tmp_path / "bad.bin"
    bad.write_bytes(b"XXXXXXXX" + raw[8:])
    with pytest.raises(CheckpointError, match="magic"):
        load_layer(bad)
    raw[8] = 99
    bad.write_bytes(bytes(raw))
    with pytest.raises(CheckpointError, match="version"):
        load_layer(bad)
    bad.write_bytes(path.read_bytes() + b"\0")
    with pytest.raises(CheckpointError, match="trailing"):
        load_layer(bad)


def test_resume_from_checkpoint(tmp_path):
    cold = run_iterative(30)
    opts = EngineOptions(checkpoint_dir=tmp_path, checkpoint_every=10)
    first = run_iterative(30, opts)
    assert sorted(p.name for p in tmp_path.iterdir()) == ["layer_00010.bin", "layer_00020.bin"]
    seen = []
    resumed = run_iterative(30, EngineOptions(checkpoint_dir=tmp_path, progress=lambda p, _: seen.append(p)))
    assert seen[0] == 21
    assert cold.O == first.O == resumed.O
