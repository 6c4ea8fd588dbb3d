import numpy as np
import pytest
from scipy.special import logsumexp

from pcnoma.detector import (cancel_received, exhaustive_llrs, max_star, mpa_beliefs, mpa_detect,
                             sc_mpa, standard_mpa)
from pcnoma.factor_graph import FactorGraph, pdma_2x3, scma_4x6
from pcnoma.noma_phy import (Codebook, NomaSystem, default_system, draw_symbols, gen_channel,
                             noise_var_from_snr, superpose)


def _transmit(system, n, snr_db, seed, channel="awgn"):
    rng = np.random.default_rng(seed)
    labels, bits = draw_symbols(system, n, rng)
    h = gen_channel(channel, system.num_users, system.num_pre, n, rng)
    x = system.map_labels(labels)
    n0 = noise_var_from_snr(snr_db)
    return superpose(x, h, n0, rng), h, x, bits, n0


def test_max_star():
    assert max_star([1.5]) == 1.5
    assert max_star([0.0, 0.0]) == pytest.approx(np.log(2))
    assert max_star([0.0, -np.inf]) == 0.0
    with pytest.raises(ValueError):
        max_star([])


def test_cancel_received():
    system = default_system(pdma_2x3())
    y, h, x, _, _ = _transmit(system, 20, 100.0, 0)
    np.testing.assert_array_equal(cancel_received(y, h, {}), y)
    yc = cancel_received(y, h, {v: x[:, v - 1] for v in (1, 2, 3)})
    np.testing.assert_allclose(yc, 0, atol=1e-4)
    exact = superpose(x[:, 1:], h[:, 1:], 0.0)
    np.testing.assert_allclose(cancel_received(exact + (h[:, 0] * x[:, 0]), h, {1: x[:, 0]}), exact)
    with pytest.raises(ValueError):
        cancel_received(y, h, {1: x[:5, 0]})


@pytest.mark.parametrize("snr_db", [0.0, 5.0, 10.0])
def test_tree_graph_matches_exhaustive(snr_db):
    system = default_system(pdma_2x3())
    y, h, _, _, n0 = _transmit(system, 1000, snr_db, 11)
    np.testing.assert_allclose(standard_mpa(y, system, h, n0), exhaustive_llrs(y, system, h, n0), atol=1e-9)


def test_pruned_tree_matches_exhaustive():
    system = default_system(pdma_2x3())
    y, h, x, _, n0 = _transmit(system, 500, 3.0, 12, "rayleigh")
    y2 = cancel_received(y, h, {2: x[:, 1]})
    got = sc_mpa(y2, system, h, n0, [2], target=1)
    np.testing.assert_allclose(got, exhaustive_llrs(y2, system, h, n0, [2])[:, 0], atol=1e-9)


def test_sc_mpa_target_must_be_undetected():
    system = default_system(pdma_2x3())
    y, h, _, _, n0 = _transmit(system, 4, 3.0, 1)
    with pytest.raises(ValueError):
        sc_mpa(y, system, h, n0, [1], target=1)


def test_single_remaining_user_noiseless():
    system = default_system(scma_4x6())
    y, h, x, bits, _ = _transmit(system, 200, 100.0, 2)
    others = {v: x[:, v - 1] for v in range(2, 7)}
    llr = sc_mpa(cancel_received(y, h, others), system, h, 0.01, list(others), target=1)
    np.testing.assert_array_equal(llr < 0, bits[:, 0, :] == 1)
    assert np.abs(llr).min() >= 10


def test_loopy_graph_sign_agreement():
    system = default_system(scma_4x6())
    y, h, _, _, n0 = _transmit(system, 10_000, 8.0, 3)
    a = standard_mpa(y, system, h, n0)
    # chunked: the joint-label table is large
    b = np.concatenate([exhaustive_llrs(y[i:i + 500], system, h[i:i + 500], n0)
                        for i in range(0, len(y), 500)])
    assert np.mean(np.sign(a) == np.sign(b)) >= 0.95


def test_single_user_graph_standard_equals_sc():
    system = NomaSystem(FactorGraph(np.array([[1], [1]])),
                        (Codebook(1, np.array([[1, 1], [1, -1], [-1, 1], [-1, -1]]) / np.sqrt(2)),))
    y, h, _, _, n0 = _transmit(system, 100, 2.0, 4)
    np.testing.assert_array_equal(standard_mpa(y, system, h, n0)[:, 0], sc_mpa(y, system, h, n0, [], 1))


def test_messages_are_normalized():
    system = default_system(scma_4x6())
    y, h, _, _, n0 = _transmit(system, 50, 4.0, 5)
    trace = []
    mpa_beliefs(y, system, h, n0, [2], iterations=3, trace=trace)
    assert len(trace) == 3
    for rnd in trace:
        for table in list(rnd["f2v"].values()) + list(rnd["v2f"].values()):
            np.testing.assert_allclose(logsumexp(table, axis=-1), 0.0, atol=1e-9)
        # pruned user 2 owns no edges
        assert all(v != 2 for (_, v) in rnd["f2v"]) and all(v != 2 for (v, _) in rnd["v2f"])


def test_user_enumeration_order_invariant():
    system = default_system(scma_4x6())
    y, h, _, _, n0 = _transmit(system, 100, 6.0, 6)
    perm = [5, 3, 1, 0, 2, 4]
    g2 = FactorGraph(system.graph.matrix[:, perm])
    cbs = [Codebook(i + 1, system.codebooks[p].codewords) for i, p in enumerate(perm)]
    s2 = NomaSystem(g2, tuple(cbs))
    a = standard_mpa(y, system, h, n0)
    b = standard_mpa(y, s2, h[:, perm], n0)
    np.testing.assert_allclose(b, a[:, perm], atol=1e-9)


def test_monotone_cancellation_with_correct_feedback():
    system = default_system(pdma_2x3())
    y, h, x, bits, n0 = _transmit(system, 10_000, 4.0, 7)
    order = (2, 3, 1)
    means = []
    for k, s in enumerate(order):
        det = list(order[:k])
        y_hat = cancel_received(y, h, {v: x[:, v - 1] for v in det})
        llr = sc_mpa(y_hat, system, h, n0, det, s)
        means.append(np.mean(np.abs(llr)))
    assert means[0] <= means[1] <= means[2]


def test_detect_zero_for_detected_users():
    system = default_system(pdma_2x3())
    y, h, _, _, n0 = _transmit(system, 10, 4.0, 8)
    assert not mpa_detect(y, system, h, n0, [3])[:, 2].any()
