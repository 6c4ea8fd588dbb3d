import numpy as np
import pytest
from hypothesis import given, strategies as st

from conftest import random_graph
from pcnoma.factor_graph import (FactorGraph, fn_degrees, format_graph, get_graph, load_graph,
                                 neighbors_of_fn, neighbors_of_vn, parse_graph, pdma_2x3, prune,
                                 save_graph, scma_4x6)

PRUNED_12 = np.array([
    [0, 0, 1, 0, 1, 0],
    [0, 0, 1, 0, 0, 1],
    [0, 0, 0, 1, 0, 1],
    [0, 0, 0, 1, 1, 0],
])


def test_scma_degrees():
    g = scma_4x6()
    assert list(fn_degrees(g)) == [3, 3, 3, 3]
    assert list(fn_degrees(g, {1, 2})) == [2, 2, 2, 2]
    assert g.overloading == pytest.approx(1.5)


def test_prune_scma_users_1_2():
    np.testing.assert_array_equal(prune(scma_4x6(), [1, 2]), PRUNED_12)


def test_pdma_pruned_degrees():
    assert list(fn_degrees(pdma_2x3(), {1})) == [1, 1]


def test_prune_identity_and_full():
    g = scma_4x6()
    np.testing.assert_array_equal(prune(g, []), g.matrix)
    assert not prune(g, range(1, 7)).any()


def test_neighbors():
    assert neighbors_of_fn(pdma_2x3(), 1) == {1, 2}
    assert neighbors_of_vn(pdma_2x3(), 1) == {1, 2}
    assert neighbors_of_fn(scma_4x6(), 1, {2}) == {3, 5}


@pytest.mark.parametrize("bad", [[0], [7], [1, 1]])
def test_bad_detected_sets(bad):
    with pytest.raises(ValueError):
        fn_degrees(scma_4x6(), bad)


def test_index_errors():
    with pytest.raises(ValueError):
        neighbors_of_fn(pdma_2x3(), 3)
    with pytest.raises(ValueError):
        neighbors_of_vn(pdma_2x3(), 0)


@pytest.mark.parametrize("m", [[[1, 0], [1, 0]], [[1, 1], [0, 0]], [[2, 1]], [[]]])
def test_invalid_matrices(m):
    with pytest.raises(ValueError):
        FactorGraph(m)


def test_matrix_is_read_only():
    g = pdma_2x3()
    with pytest.raises(ValueError):
        g.matrix[0, 0] = 0


def test_graph_file_round_trip(tmp_path):
    g = scma_4x6()
    assert format_graph(g).splitlines()[0] == "4 6"
    path = tmp_path / "g.txt"
    save_graph(g, path)
    h = load_graph(path)
    np.testing.assert_array_equal(h.matrix, g.matrix)
    assert get_graph(str(path)) == h


def test_parse_errors():
    with pytest.raises(ValueError):
        parse_graph("2 3\n1 1 0\n")
    with pytest.raises(KeyError, match="nope"):
        get_graph("nope")


@given(st.data())
def test_prune_properties(data):
    g = random_graph(data.draw, st)
    users = list(range(1, g.num_users + 1))
    D = data.draw(st.sets(st.sampled_from(users)))
    E = D | data.draw(st.sets(st.sampled_from(users)))
    once = prune(g, D)
    # idempotent: zeroing the same columns again changes nothing
    again = once.copy()
    again[:, [v - 1 for v in D]] = 0
    np.testing.assert_array_equal(again, once)
    np.testing.assert_array_equal(prune(g, D), once)
    assert (fn_degrees(g, E) <= fn_degrees(g, D)).all()
    assert fn_degrees(g).sum() == g.vn_degrees.sum() == g.matrix.sum()
    for v in D:
        assert not once[:, v - 1].any()
