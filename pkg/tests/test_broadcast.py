"""Tests for the broadcast-coding layer: channel models, rate bookkeeping,
seeded codebook builds, degree diagnostics, encoding and decoding, error-rate
estimation, and the single-letter zero-error code."""

import random

import numpy as np
import pytest

from graphbc.bigraph import GraphParams, validate
from graphbc.broadcast import (
    BroadcastChannel,
    ChannelCodeConfig,
    blackwell_channel,
    blackwell_exact_code,
    build_channel_code,
    channel_decode,
    channel_encode,
    channel_transmit,
    estimate_error_rate,
    exact_code_error,
    full_support_blackwell_aux,
    identity_channel,
    matched_blackwell_aux,
    rate_facts,
)
from graphbc.errors import InvalidMessageError
from graphbc.probability import ConditionalPmf, FiniteAlphabet, compose_chain


def matched_joint():
    aux = matched_blackwell_aux()
    ch = blackwell_channel()
    return compose_chain(aux.pz, aux.puv_given_z, aux.px_given_zuv, ch.transition)


def full_support_joint():
    aux = full_support_blackwell_aux()
    ch = blackwell_channel()
    return compose_chain(aux.pz, aux.puv_given_z, aux.px_given_zuv, ch.transition)


def symmetric_config(n, eps, r, seed, **kw):
    return ChannelCodeConfig(n, eps, 1.0, 0.0, r, r, matched_blackwell_aux(),
                             seed=seed, **kw)


def flip_pair_channel(flip):
    """Binary channel; each receiver sees the input flipped independently
    with probability flip."""
    f = FiniteAlphabet(2)
    rows = np.zeros((2, 2, 2))
    for s in range(2):
        for a in range(2):
            for b in range(2):
                rows[s, a, b] = ((1 - flip if a == s else flip)
                                 * (1 - flip if b == s else flip))
    return BroadcastChannel(f, f, f, ConditionalPmf((f,), (f, f), rows))


def pooled_violation_fraction(codebook, diagnostics):
    rep = diagnostics.degree_report
    total = codebook.left_bins + codebook.right_bins
    return (len(rep.left_violations) + len(rep.right_violations)) / total


class TestChannels:
    def test_blackwell_shapes(self):
        ch = blackwell_channel()
        assert ch.x_alphabet.size == 3
        assert ch.y1_alphabet.size == 2
        assert ch.y2_alphabet.size == 2
        # deterministic: every input puts all mass on one output pair
        assert np.all(ch.transition.rows.max(axis=(1, 2)) == 1.0)

    def test_blackwell_transmit_map(self):
        ch = blackwell_channel()
        rng = random.Random(0)
        y1, y2 = channel_transmit(ch, np.array([0, 0, 1]), rng)
        assert y1.tolist() == [0, 0, 0]
        assert y2.tolist() == [0, 0, 1]
        y1, y2 = channel_transmit(ch, np.array([2, 1, 0]), rng)
        assert y1.tolist() == [1, 0, 0]
        assert y2.tolist() == [1, 1, 0]

    def test_identity_transmit(self):
        ch = identity_channel(4)
        rng = random.Random(1)
        xn = np.array([3, 0, 2, 2, 1])
        y1, y2 = channel_transmit(ch, xn, rng)
        assert np.array_equal(y1, xn)
        assert np.array_equal(y2, xn)

    def test_noisy_transmit_flip_rate(self):
        # empirical flip fraction within 3 sigma of the channel parameter
        ch = flip_pair_channel(0.2)
        rng = random.Random(123)
        y1, y2 = channel_transmit(ch, np.zeros(2000, dtype=np.int64), rng)
        band = 3 * np.sqrt(0.2 * 0.8 / 2000)
        assert abs(y1.mean() - 0.2) < band
        assert abs(y2.mean() - 0.2) < band


class TestRateFacts:
    def test_matched_values(self):
        facts = rate_facts(matched_joint(), symmetric_config(8, 0.44, 0.406, 0))
        assert facts.i_left == pytest.approx(0.9182958340544896, abs=1e-12)
        assert facts.i_right == pytest.approx(0.9182958340544896, abs=1e-12)
        assert facts.i_pair == pytest.approx(0.25162916738782304, abs=1e-12)
        assert facts.degree_sum == pytest.approx(0.7049625007211561, abs=1e-12)
        assert facts.r1p == pytest.approx(0.29896250072115604, abs=1e-12)
        assert facts.r2p == facts.r1p

    def test_full_support_values(self):
        cfg = ChannelCodeConfig(8, 0.26, 1.0, 0.0, 0.57, 0.42,
                                full_support_blackwell_aux(), seed=0)
        facts = rate_facts(full_support_joint(), cfg)
        assert facts.i_left == pytest.approx(0.9999278640456615, abs=1e-12)
        assert facts.i_right == pytest.approx(0.6815101887362596, abs=1e-12)
        assert facts.i_pair == pytest.approx(0.20322601813614338, abs=1e-12)
        assert facts.degree_sum == pytest.approx(0.9582120346457776, abs=1e-12)
        assert facts.r1p == pytest.approx(0.5382120346457777, abs=1e-12)
        assert facts.r2p == pytest.approx(0.3882120346457777, abs=1e-12)

    def test_degree_compensation_clamps_at_zero(self):
        facts = rate_facts(matched_joint(), symmetric_config(8, 0.44, 0.406, 0))
        wide = rate_facts(matched_joint(),
                          ChannelCodeConfig(8, 0.75, 1.0, 0.0, 0.05, 0.05,
                                            matched_blackwell_aux(), seed=0,
                                            enforce_region=False))
        assert facts.r1p > 0
        assert wide.degree_sum >= 0
        assert wide.r1p == max(0.0, wide.degree_sum - 0.05)

    def test_region_enforcement(self):
        ch = blackwell_channel()
        # above the per-receiver cap
        with pytest.raises(ValueError):
            build_channel_code(ch, symmetric_config(8, 0.44, 0.6, 0))
        # sum of private rates below the degree sum
        with pytest.raises(ValueError):
            build_channel_code(ch, symmetric_config(8, 0.44, 0.3, 0))
        # same rates pass with enforcement off
        build_channel_code(ch, symmetric_config(8, 0.44, 0.3, 0,
                                                enforce_region=False))

    def test_effective_slacks(self):
        cfg = symmetric_config(8, 0.44, 0.406, 0)
        assert cfg.effective_decode_eps == pytest.approx(0.88)
        assert cfg.effective_x_draw_eps(3) == pytest.approx(1.32)
        over = ChannelCodeConfig(8, 0.44, 1.0, 0.0, 0.406, 0.406,
                                 matched_blackwell_aux(), seed=0,
                                 decode_eps=0.5, x_draw_eps=0.9)
        assert over.effective_decode_eps == 0.5
        assert over.effective_x_draw_eps(3) == 0.9


class TestBuild:
    def test_deterministic_given_seed(self):
        ch = blackwell_channel()
        a, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        b, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        assert np.array_equal(a.graph.edge_codes(), b.graph.edge_codes())
        assert set(a.codewords) == set(b.codewords)
        for code in a.codewords:
            assert np.array_equal(a.codewords[code], b.codewords[code])

    def test_seed_changes_draws(self):
        ch = blackwell_channel()
        a, _ = build_channel_code(ch, symmetric_config(12, 0.44, 0.406, 0))
        b, _ = build_channel_code(ch, symmetric_config(12, 0.44, 0.406, 1))
        assert not np.array_equal(a.graph.edge_codes(), b.graph.edge_codes())

    def test_bin_partition_shapes(self):
        ch = blackwell_channel()
        cbk, diag = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        assert cbk.block_count == 1
        assert cbk.left_bins == 9
        assert cbk.right_bins == 9
        assert cbk.bin_size_left == 1
        assert cbk.bin_size_right == 1
        assert len(cbk.u_collections) == cbk.block_count
        assert cbk.u_collections[0].shape == (9, 8)
        assert cbk.v_collections[0].shape == (9, 8)
        assert set(np.unique(cbk.u_collections[0])) <= {0, 1}
        assert diag.bin_size_left == cbk.bin_size_left
        assert diag.super_bins.total_edges == cbk.graph.edge_count

    def test_realized_rates_match_counts(self):
        ch = blackwell_channel()
        cbk, diag = build_channel_code(ch, symmetric_config(10, 0.44, 0.406, 3))
        assert diag.realized_r1 == pytest.approx(np.log2(cbk.left_bins) / 10)
        assert diag.realized_r2 == pytest.approx(np.log2(cbk.right_bins) / 10)
        assert diag.realized_r0 == 0.0

    def test_edge_message_enumerates_block_pairs(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        for code in cbk.graph.edge_codes():
            m, i, j = cbk.edge_message(int(code))
            assert m == 1
            assert 1 <= i <= cbk.left_bins
            assert 1 <= j <= cbk.right_bins

    def test_codewords_follow_deterministic_input_map(self):
        # with a deterministic input layer the drawn codeword is the
        # symbol-wise image of the chosen row pair
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        image = {(0, 0): 0, (0, 1): 1, (1, 1): 2}
        for code in cbk.graph.edge_codes():
            iu, iv = cbk.chosen_pairs[int(code)]
            u = cbk.u_collections[0][iu]
            v = cbk.v_collections[0][iv]
            want = [image[(a, b)] for a, b in zip(u, v)]
            assert cbk.codewords[int(code)].tolist() == want


class TestDegreeDiagnostics:
    def test_report_agrees_with_graph_validation(self):
        # excluding the reported violators, the graph passes the generic
        # band check run with the same slack
        ch = blackwell_channel()
        cfg = ChannelCodeConfig(8, 0.26, 1.0, 0.0, 0.57, 0.42,
                                full_support_blackwell_aux(), seed=0)
        cbk, diag = build_channel_code(ch, cfg)
        rep = diag.degree_report
        params = GraphParams(1, cbk.left_bins, cbk.right_bins,
                             2 ** (8 * rep.r1p), 2 ** (8 * rep.r2p),
                             2 ** (8 * rep.eps_prime))
        vrep = validate(cbk.graph, params)
        assert vrep.size_ok
        assert vrep.cross_block_edges == ()
        assert (sorted(v for v, _ in rep.left_violations)
                == sorted(v for v, _ in vrep.left_degree_violations))
        assert (sorted(v for v, _ in rep.right_violations)
                == sorted(v for v, _ in vrep.right_degree_violations))

    def test_full_support_fractions_at_short_block(self):
        ch = blackwell_channel()
        cfg = ChannelCodeConfig(8, 0.26, 1.0, 0.0, 0.57, 0.42,
                                full_support_blackwell_aux(), seed=0)
        cbk, diag = build_channel_code(ch, cfg)
        rep = diag.degree_report
        assert rep.left_fraction == pytest.approx(0.5217391304347826)
        assert rep.right_fraction == pytest.approx(0.5)

    def test_full_support_concentration_improves_with_block_length(self):
        ch = blackwell_channel()
        means = {}
        for n in (8, 12):
            fr = []
            for seed in range(5):
                cfg = ChannelCodeConfig(n, 0.26, 1.0, 0.0, 0.57, 0.42,
                                        full_support_blackwell_aux(), seed=seed)
                cbk, diag = build_channel_code(ch, cfg)
                fr.append(pooled_violation_fraction(cbk, diag))
            means[n] = np.mean(fr)
        assert means[8] == pytest.approx(0.557576, abs=1e-4)
        assert means[12] == pytest.approx(0.008219, abs=1e-4)
        assert means[12] < 0.05 < means[8]

    def test_matched_half_rate_does_not_concentrate_at_short_block(self):
        # the uniform-input pairing needs longer blocks: the hard zero cell
        # makes realized degrees spread far beyond the band at n=8, so over
        # a third of the vertices violate for every seed
        ch = blackwell_channel()
        fr = []
        for seed in range(5):
            cfg = ChannelCodeConfig(8, 0.34, 0.5, 0.0, 0.5, 0.5,
                                    matched_blackwell_aux(), seed=seed)
            cbk, diag = build_channel_code(ch, cfg)
            fr.append(pooled_violation_fraction(cbk, diag))
        assert min(fr) > 1 / 3
        assert np.mean(fr) == pytest.approx(0.5, abs=1e-4)


class TestEncodeDecode:
    def test_encode_rejects_non_edges(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        present = {cbk.edge_message(int(c)) for c in cbk.graph.edge_codes()}
        missing = next((1, i, j)
                       for i in range(1, cbk.left_bins + 1)
                       for j in range(1, cbk.right_bins + 1)
                       if (1, i, j) not in present)
        with pytest.raises(InvalidMessageError):
            channel_encode(cbk, *missing)

    def test_noiseless_roundtrip(self):
        # deterministic channel: both receivers recover block and bin on
        # every edge of this codebook
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        rng = random.Random(7)
        assert cbk.graph.edge_count == 5
        for code in cbk.graph.edge_codes():
            m, i, j = cbk.edge_message(int(code))
            xn = channel_encode(cbk, m, i, j)
            y1, y2 = channel_transmit(ch, xn, rng)
            assert channel_decode(cbk, 1, y1) == (m, i)
            assert channel_decode(cbk, 2, y2) == (m, j)

    def test_decode_rejects_atypical_output(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        assert channel_decode(cbk, 1, np.ones(8, dtype=np.int64)) is None


class TestErrorRate:
    def test_zero_errors_on_clean_codebook(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 0))
        est = estimate_error_rate(cbk, ch, trials=300, rng=random.Random(1000))
        assert est.tau == 0.0
        assert est.errors == 0
        assert est.trials == 300
        assert est.wilson_low == pytest.approx(0.0, abs=1e-12)
        assert 0 < est.wilson_high < 0.02

    def test_empty_graph_counts_every_trial_failed(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.406, 6))
        assert cbk.graph.edge_count == 0
        est = estimate_error_rate(cbk, ch, trials=50, rng=random.Random(5))
        assert est.tau == 1.0
        assert est.errors == 50
        assert est.receiver1_errors == 50
        assert est.wilson_low == pytest.approx(0.9286524008666414)
        assert est.wilson_high == 1.0

    def test_thread_count_does_not_change_results(self):
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(12, 0.44, 0.406, 1))
        one = estimate_error_rate(cbk, ch, trials=400, rng=random.Random(42),
                                  threads=1)
        again = estimate_error_rate(cbk, ch, trials=400, rng=random.Random(42),
                                    threads=1)
        three = estimate_error_rate(cbk, ch, trials=400, rng=random.Random(42),
                                    threads=3)
        assert one == again
        assert one == three

    def test_rates_beyond_caps_fail_often(self):
        # pushing both private rates far past their caps leaves the decoders
        # swamped with indistinguishable rows
        ch = blackwell_channel()
        cbk, _ = build_channel_code(ch, symmetric_config(8, 0.44, 0.9, 3,
                                                         enforce_region=False))
        est = estimate_error_rate(cbk, ch, trials=200, rng=random.Random(11))
        assert est.tau == pytest.approx(0.91)
        assert est.wilson_low > 0.5

    def test_error_rate_trend_regression(self):
        ch = blackwell_channel()
        taus = {}
        for n in (8, 12):
            cbk, _ = build_channel_code(ch, symmetric_config(n, 0.44, 0.406, 0))
            est = estimate_error_rate(cbk, ch, trials=300,
                                      rng=random.Random(1000))
            taus[n] = est.tau
        assert taus[8] == 0.0
        assert taus[12] == 0.0


class TestExactCode:
    def test_three_edges_zero_error(self):
        code = blackwell_exact_code()
        assert code.graph.edge_count == 3
        assert exact_code_error(code) == 0.0

    def test_removing_a_decoder_entry_breaks_it(self):
        code = blackwell_exact_code()
        broken = type(code)(code.graph, code.encoder,
                            {0: 1, 1: 0}, code.decoder2, code.channel)
        assert exact_code_error(broken) > 0.5
