"""Oracle and property tests for rate-region evaluation, membership search,
common-information optimization, and the separation arithmetic."""

import math

import numpy as np
import pytest

from graphbc import regions
from graphbc.broadcast import (
    AuxChain,
    BroadcastChannel,
    blackwell_channel,
    identity_channel,
    matched_blackwell_aux,
)
from graphbc.graywyner import SourcePair, constant_common_layer, triangular_source
from graphbc.probability import (
    ConditionalPmf,
    FiniteAlphabet,
    JointPmf,
    extend,
    mutual_information,
)

ALPHA = 0.9182958340544896  # binary entropy of 1/3
BETA = 0.6666666666666665   # log2(3) - ALPHA
LOG3 = 1.584962500721156
CROSS = 0.25162916738782304  # pair information of the triangular law


def uniform_input(channel):
    size = channel.x_alphabet.size
    return JointPmf((channel.x_alphabet,), np.full(size, 1.0 / size))


def corner_point():
    return regions.RateTuple5(0.0, ALPHA, ALPHA, BETA, BETA)


def random_deterministic_channel(rng, x_size=4, y_size=3):
    rows = np.zeros((x_size, y_size, y_size))
    f1 = rng.integers(0, y_size, size=x_size)
    f2 = rng.integers(0, y_size, size=x_size)
    rows[np.arange(x_size), f1, f2] = 1.0
    x, y = FiniteAlphabet(x_size), FiniteAlphabet(y_size)
    return BroadcastChannel(x, y, y, ConditionalPmf((x,), (y, y), rows))


def random_source(rng):
    mass = rng.dirichlet(np.ones(4)).reshape(2, 2)
    b = FiniteAlphabet(2)
    return SourcePair(b, b, JointPmf((b, b), mass))


def random_layer(rng, source, z_size):
    s, t = source.s_alphabet.size, source.t_alphabet.size
    rows = rng.dirichlet(np.ones(z_size), size=s * t).reshape(s, t, z_size)
    return ConditionalPmf((source.s_alphabet, source.t_alphabet),
                          (FiniteAlphabet(z_size),), rows)


class TestRateTuple:
    def test_round_trip_and_residual(self):
        pt = regions.RateTuple5(0.1, 0.9, 0.8, 0.5, 0.4)
        assert pt.as_tuple() == (0.1, 0.9, 0.8, 0.5, 0.4)
        assert pt.coupling_residual == pytest.approx(0.0, abs=1e-12)
        skew = regions.RateTuple5(0.0, 1.0, 0.2, 0.9, 0.0)
        assert skew.coupling_residual == pytest.approx(-0.1)

    def test_rejects_bad_rates(self):
        with pytest.raises(ValueError):
            regions.RateTuple5(-0.1, 0, 0, 0, 0)
        with pytest.raises(ValueError, match="left degree"):
            regions.RateTuple5(0, 0.3, 1.0, 0.4, 1.0)
        with pytest.raises(ValueError, match="right degree"):
            regions.RateTuple5(0, 1.0, 0.3, 1.0, 0.4)


class TestRegionSpec:
    def test_unknown_kind(self):
        with pytest.raises(ValueError, match="unknown region kind"):
            regions.RegionSpec("outer_space", channel=blackwell_channel())

    def test_missing_problem_data(self):
        with pytest.raises(ValueError, match="requires a channel"):
            regions.RegionSpec("marton")
        with pytest.raises(ValueError, match="requires a source"):
            regions.RegionSpec("gw_inner")
        with pytest.raises(ValueError, match="requires a source"):
            regions.RegionSpec("han_costa", channel=blackwell_channel())

    def test_default_sizes(self):
        ch, src = blackwell_channel(), triangular_source()
        spec = regions.RegionSpec("marton", channel=ch)
        assert (spec.z_size, spec.u_size, spec.v_size) == (5, 5, 5)
        assert regions.RegionSpec("semi_det", channel=ch).v_size == 5
        assert regions.RegionSpec("gw_outer", source=src).z_size == 4
        hc = regions.RegionSpec("han_costa", channel=ch, source=src)
        assert (hc.w_size, hc.u_size, hc.v_size) == (4, 4, 4)

    def test_size_caps(self):
        ch, src = blackwell_channel(), triangular_source()
        with pytest.raises(ValueError, match="semi_det auxiliary size"):
            regions.RegionSpec("semi_det", channel=ch, v_size=6)
        with pytest.raises(ValueError, match="shared-layer size"):
            regions.RegionSpec("gw_classic", source=src, z_size=5)
        with pytest.raises(ValueError, match=">= 1"):
            regions.RegionSpec("gw_classic", source=src, z_size=0)


class TestEvaluate:
    def test_det_bc_uniform_blackwell(self):
        rec = regions.det_bc_constraints(blackwell_channel(),
                                         uniform_input(blackwell_channel()))
        assert rec.direction == "caps"
        assert rec.bound("common") == 0.0
        assert rec.bound("left_private") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("right_private") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("degree_sum") == pytest.approx(LOG3, abs=1e-12)

    def test_gw_kinds_constant_layer(self):
        src = triangular_source()
        layer = constant_common_layer(src)
        inner = regions.evaluate_constraints(
            regions.RegionSpec("gw_inner", source=src, z_size=1), layer)
        assert inner.direction == "floors"
        assert inner.bound("common") == pytest.approx(0.0, abs=1e-12)
        assert inner.bound("left_private") == pytest.approx(ALPHA, abs=1e-12)
        assert inner.bound("right_private") == pytest.approx(ALPHA, abs=1e-12)
        assert inner.bound("left_degree") == pytest.approx(BETA, abs=1e-12)
        assert inner.bound("right_degree") == pytest.approx(BETA, abs=1e-12)
        classic = regions.evaluate_constraints(
            regions.RegionSpec("gw_classic", source=src, z_size=1), layer)
        assert [n for n, _ in classic.bounds] == ["common", "left_private",
                                                  "right_private"]
        outer = regions.evaluate_constraints(
            regions.RegionSpec("gw_outer", source=src, z_size=1), layer)
        assert outer.bound("degree_sum") == pytest.approx(LOG3, abs=1e-12)

    def test_bc_inner_matched_aux(self):
        spec = regions.RegionSpec("bc_inner", channel=blackwell_channel(),
                                  z_size=1, u_size=2, v_size=2)
        rec = regions.evaluate_constraints(spec, matched_blackwell_aux())
        assert rec.bound("common") == 0.0
        assert rec.bound("left_private") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("right_private") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("degree_sum") == pytest.approx(LOG3, abs=1e-12)
        assert rec.quantity("i_cross_given_shared") == pytest.approx(CROSS,
                                                                     abs=1e-12)

    def test_marton_matched_aux(self):
        spec = regions.RegionSpec("marton", channel=blackwell_channel(),
                                  z_size=1, u_size=2, v_size=2)
        rec = regions.evaluate_constraints(spec, matched_blackwell_aux())
        assert rec.bound("common") == 0.0
        assert rec.bound("common_plus_left") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("common_plus_right") == pytest.approx(ALPHA, abs=1e-12)
        assert rec.bound("total") == pytest.approx(LOG3, abs=1e-12)

    def test_marton_degenerate_aux_is_zero_corner(self):
        ch = blackwell_channel()
        one = FiniteAlphabet(1)
        aux = AuxChain(
            JointPmf((one,), np.ones(1)),
            ConditionalPmf((one,), (one, one), np.ones((1, 1, 1))),
            ConditionalPmf((one, one, one), (ch.x_alphabet,),
                           np.full((1, 1, 1, 3), 1.0 / 3)))
        for kind in ("marton", "bc_inner"):
            spec = regions.RegionSpec(kind, channel=ch, z_size=1, u_size=1,
                                      v_size=1)
            rec = regions.evaluate_constraints(spec, aux)
            assert all(abs(v) < 1e-12 for _, v in rec.bounds)

    def test_han_costa_pair_channel_witness(self):
        # independent fair bits carried intact through a four-input identity
        # channel, the shared aux naming the pair; all three bounds are tight
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b), np.full((2, 2), 0.25)))
        ch = identity_channel(4)
        w = FiniteAlphabet(4)
        one = FiniteAlphabet(1)
        to_aux_rows = np.zeros((2, 2, 4, 1, 1))
        for s in range(2):
            for t in range(2):
                to_aux_rows[s, t, 2 * s + t, 0, 0] = 1.0
        to_input_rows = np.eye(4).reshape(4, 1, 1, 4)
        aux = (ConditionalPmf((b, b), (w, one, one), to_aux_rows),
               ConditionalPmf((w, one, one), (ch.x_alphabet,), to_input_rows))
        spec = regions.RegionSpec("han_costa", channel=ch, source=src,
                                  w_size=4, u_size=1, v_size=1)
        rec = regions.evaluate_constraints(spec, aux)
        assert rec.bound("left_entropy") == pytest.approx(1.0, abs=1e-12)
        assert rec.bound("right_entropy") == pytest.approx(1.0, abs=1e-12)
        assert rec.bound("pair_entropy") == pytest.approx(2.0, abs=1e-12)
        assert regions.satisfies(rec, regions.RateTuple5(0, 0, 0, 0, 0))

    def test_dimension_mismatches(self):
        ch, src = blackwell_channel(), triangular_source()
        with pytest.raises(ValueError, match="auxiliary parameters"):
            regions.evaluate_constraints(
                regions.RegionSpec("det_bc", channel=ch),
                JointPmf((FiniteAlphabet(4),), np.full(4, 0.25)))
        with pytest.raises(ValueError, match="auxiliary parameters"):
            regions.evaluate_constraints(
                regions.RegionSpec("gw_inner", source=src, z_size=2),
                random_layer(np.random.default_rng(0), src, 3))
        with pytest.raises(ValueError, match="auxiliary parameters"):
            regions.evaluate_constraints(
                regions.RegionSpec("marton", channel=ch),
                uniform_input(ch))

    def test_mirrored_aux_matches_det_bc(self):
        ch = blackwell_channel()
        px = uniform_input(ch)
        mirrored = regions.semi_det_constraints(
            ch, regions.mirror_right_output_aux(ch, px))
        direct = regions.det_bc_constraints(ch, px)
        for name in ("common", "left_private", "right_private", "degree_sum"):
            assert mirrored.bound(name) == pytest.approx(direct.bound(name),
                                                         abs=1e-12)

    def test_mirror_aux_size_check(self):
        ch = blackwell_channel()
        with pytest.raises(ValueError, match="input law"):
            regions.mirror_right_output_aux(
                ch, JointPmf((FiniteAlphabet(2),), np.array([0.5, 0.5])))


class TestPointTesting:
    def test_corner_slacks_are_zero(self):
        ch = blackwell_channel()
        rec = regions.det_bc_constraints(ch, uniform_input(ch))
        slacks = dict(regions.point_slacks(rec, corner_point()))
        assert set(slacks) == {"common", "left_private", "right_private",
                               "degree_sum"}
        for value in slacks.values():
            assert value == pytest.approx(0.0, abs=1e-12)
        assert regions.satisfies(rec, corner_point())

    def test_floor_direction(self):
        src = triangular_source()
        spec = regions.RegionSpec("gw_inner", source=src, z_size=1)
        rec = regions.evaluate_constraints(spec, constant_common_layer(src))
        assert regions.satisfies(rec, corner_point())
        shy = regions.RateTuple5(0.0, ALPHA - 0.01, ALPHA, BETA - 0.01, BETA)
        assert not regions.satisfies(rec, shy)
        slacks = dict(regions.point_slacks(rec, shy))
        assert slacks["left_private"] == pytest.approx(-0.01, abs=1e-9)

    def test_marton_total_binds(self):
        spec = regions.RegionSpec("marton", channel=blackwell_channel(),
                                  z_size=1, u_size=2, v_size=2)
        rec = regions.evaluate_constraints(spec, matched_blackwell_aux())
        greedy = regions.RateTuple5(0.0, ALPHA, ALPHA, 0.0, 0.0)
        slacks = dict(regions.point_slacks(rec, greedy))
        assert slacks["total"] == pytest.approx(LOG3 - 2 * ALPHA, abs=1e-12)
        assert not regions.satisfies(rec, greedy)

    def test_han_costa_slacks_ignore_point(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b), np.full((2, 2), 0.25)))
        result = regions.han_costa_check(src, identity_channel(4), w_size=4,
                                         u_size=1, v_size=1, restarts=5)
        rec = result.record
        a = regions.point_slacks(rec, regions.RateTuple5(0, 0, 0, 0, 0))
        c = regions.point_slacks(rec, regions.RateTuple5(0.3, 0.9, 0.9, 0.1, 0.1))
        assert a == c


class TestMembership:
    def test_corner_in_det_bc(self):
        result = regions.membership(corner_point(),
                                    regions.RegionSpec("det_bc",
                                                       channel=blackwell_channel()))
        assert result.is_member and result.status == "member"
        assert result.margin >= -1e-9
        assert result.restarts_used == 1
        assert np.allclose(result.witness.mass, 1.0 / 3, atol=1e-12)

    def test_corner_in_gw_inner(self):
        result = regions.membership(
            corner_point(),
            regions.RegionSpec("gw_inner", source=triangular_source(), z_size=2))
        assert result.is_member
        assert result.margin >= -1e-9
        assert isinstance(result.witness, ConditionalPmf)
        assert regions.satisfies(result.record, corner_point())

    def test_bc_inner_interior_point(self):
        spec = regions.RegionSpec("bc_inner", channel=blackwell_channel(),
                                  z_size=1, u_size=2, v_size=2)
        point = regions.RateTuple5(0.0, 0.5, 0.5, 0.4, 0.4)
        result = regions.membership(point, spec, restarts=8, cycles=25)
        assert result.is_member
        assert regions.satisfies(result.record, point)

    def test_unattainable_cap_reports_margin(self):
        # receiver 1 sees one bit per use, so no input law reaches rate 1.2
        point = regions.RateTuple5(0.0, 1.2, 0.3, 0.9, 0.0)
        result = regions.membership(
            point, regions.RegionSpec("det_bc", channel=blackwell_channel()),
            restarts=4, cycles=8)
        assert result.status == "not-found-within-budget"
        assert result.witness is None
        assert result.record is not None
        assert result.margin == pytest.approx(-0.2, abs=1e-6)

    def test_coupling_gate(self):
        point = regions.RateTuple5(0.0, 1.0, 0.2, 0.9, 0.0)  # residual -0.1
        result = regions.membership(
            point, regions.RegionSpec("det_bc", channel=blackwell_channel()))
        assert result.status == "not-found-within-budget"
        assert result.restarts_used == 0
        assert result.margin == pytest.approx(-0.1, abs=1e-12)

    def test_budget_validation(self):
        with pytest.raises(ValueError, match="restart"):
            regions.membership(corner_point(),
                               regions.RegionSpec("det_bc",
                                                  channel=blackwell_channel()),
                               restarts=0)


class TestWyner:
    def test_triangular_small_layer(self):
        w = regions.wyner_common_information(triangular_source(), 2,
                                             restarts=40, seed=0)
        assert w.feasible
        assert w.conditional_mi <= 1e-6
        assert w.bits == pytest.approx(2.0 / 3.0, abs=1e-3)
        joint = extend(triangular_source().joint, w.witness, (0, 1))
        assert mutual_information(joint, (0, 1), (2,)) == pytest.approx(
            w.bits, abs=1e-12)

    def test_identical_pair(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b),
                                        np.array([[0.5, 0.0], [0.0, 0.5]])))
        w = regions.wyner_common_information(src, 2, restarts=20, seed=0)
        assert w.feasible
        assert w.bits == pytest.approx(1.0, abs=1e-6)

    def test_independent_pair(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b), np.full((2, 2), 0.25)))
        w = regions.wyner_common_information(src, 2, restarts=5, seed=0)
        assert w.feasible
        assert w.bits == pytest.approx(0.0, abs=1e-9)

    def test_single_layer_infeasible(self):
        w = regions.wyner_common_information(triangular_source(), 1,
                                             restarts=3, seed=0)
        assert not w.feasible
        assert w.bits == math.inf
        assert w.conditional_mi == pytest.approx(CROSS, abs=1e-9)

    def test_larger_layer_never_hurts(self):
        src = triangular_source()
        w2 = regions.wyner_common_information(src, 2, restarts=40, seed=0)
        padded = np.concatenate([w2.witness.rows.reshape(4, 2),
                                 np.zeros((4, 1))], axis=1)
        w3 = regions.wyner_common_information(src, 3, restarts=30, seed=0,
                                              initial_rows=padded)
        assert w3.bits <= w2.bits + 1e-6

    def test_argument_validation(self):
        with pytest.raises(ValueError, match=">= 1"):
            regions.wyner_common_information(triangular_source(), 0)
        with pytest.raises(ValueError, match="non-negative"):
            regions.wyner_common_information(triangular_source(), 2,
                                             restarts=1,
                                             initial_rows=-np.ones((4, 2)))


class TestSeparation:
    def test_triangular_arithmetic(self):
        rec = regions.separation_gap_check(triangular_source(), restarts=60,
                                           seed=0)
        assert rec.pair_entropy == pytest.approx(LOG3, abs=1e-12)
        assert rec.common_information == pytest.approx(2.0 / 3.0, abs=5e-3)
        assert rec.sum_rate_bound == pytest.approx(LOG3 + 2.0 / 3.0, abs=5e-3)
        assert rec.per_receiver_bound == pytest.approx(rec.sum_rate_bound / 2)
        assert rec.forces_rate_above_one
        assert rec.wyner.feasible

    def test_independent_pair_fits(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b), np.full((2, 2), 0.25)))
        rec = regions.separation_gap_check(src, restarts=10, seed=0)
        assert rec.sum_rate_bound == pytest.approx(2.0, abs=1e-6)
        assert not rec.forces_rate_above_one

    def test_identical_pair_fits(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b),
                                        np.array([[0.5, 0.0], [0.0, 0.5]])))
        rec = regions.separation_gap_check(src, restarts=10, seed=0)
        assert rec.sum_rate_bound == pytest.approx(2.0, abs=1e-6)
        assert not rec.forces_rate_above_one


class TestRefutation:
    def test_zero_tuple_refuted(self):
        result = regions.refute_gw_outer(regions.RateTuple5(0, 0, 0, 0, 0),
                                         triangular_source(), restarts=10,
                                         cycles=20, seed=0)
        assert result.refuted
        assert result.best_margin < -0.5
        assert result.evaluations > 0
        assert "floor" in result.reason

    def test_corner_not_refuted(self):
        result = regions.refute_gw_outer(corner_point(), triangular_source(),
                                         restarts=5, cycles=20, seed=0)
        assert not result.refuted
        assert result.best_margin >= -1e-9

    def test_uncoupled_point_refuted_outright(self):
        point = regions.RateTuple5(0.0, 1.0, 0.2, 0.9, 0.0)
        result = regions.refute_gw_outer(point, triangular_source())
        assert result.refuted
        assert result.reason == "degree coupling violated"
        assert result.evaluations == 0


class TestHanCostaSearch:
    def test_exact_fit_found_fast(self):
        b = FiniteAlphabet(2)
        src = SourcePair(b, b, JointPmf((b, b), np.full((2, 2), 0.25)))
        result = regions.han_costa_check(src, identity_channel(4), w_size=4,
                                         u_size=1, v_size=1, restarts=5)
        assert result.is_member
        assert result.margin >= -1e-9
        assert result.point == regions.RateTuple5(0, 0, 0, 0, 0)

    def test_triangular_over_blackwell(self):
        # the exact zero-error map exists, and the sufficient conditions
        # admit a witness at modest auxiliary sizes
        result = regions.han_costa_check(triangular_source(),
                                         blackwell_channel(), w_size=3,
                                         u_size=2, v_size=2, restarts=6,
                                         cycles=20, seed=0)
        assert result.is_member
        assert result.margin >= -1e-9


class TestInvariants:
    def test_inner_floors_imply_outer_floors(self):
        rng = np.random.default_rng(42)
        for trial in range(100):
            src = random_source(rng)
            z_size = int(rng.integers(1, 5))
            layer = random_layer(rng, src, z_size)
            inner = regions.evaluate_constraints(
                regions.RegionSpec("gw_inner", source=src, z_size=z_size), layer)
            outer = regions.evaluate_constraints(
                regions.RegionSpec("gw_outer", source=src, z_size=z_size), layer)
            chain_gap = (inner.bound("left_private")
                         + inner.bound("right_degree")
                         - outer.bound("degree_sum"))
            assert abs(chain_gap) <= 1e-9
            point = regions.RateTuple5(inner.bound("common"),
                                       inner.bound("left_private"),
                                       inner.bound("right_private"),
                                       inner.bound("left_degree"),
                                       inner.bound("right_degree"))
            assert regions.satisfies(outer, point, tol=1e-9)

    def test_bounds_permutation_covariant(self):
        rng = np.random.default_rng(7)
        ch = blackwell_channel()
        perm = np.array([2, 0, 1])
        rows = ch.transition.rows[perm]
        permuted = BroadcastChannel(ch.x_alphabet, ch.y1_alphabet,
                                    ch.y2_alphabet,
                                    ConditionalPmf((ch.x_alphabet,),
                                                   (ch.y1_alphabet,
                                                    ch.y2_alphabet), rows))
        weights = rng.dirichlet(np.ones(3))
        a = regions.det_bc_constraints(ch, JointPmf((ch.x_alphabet,), weights))
        b = regions.det_bc_constraints(
            permuted, JointPmf((ch.x_alphabet,), weights[perm]))
        for name in ("left_private", "right_private", "degree_sum"):
            assert abs(a.bound(name) - b.bound(name)) <= 1e-10

    def test_layer_relabel_covariant(self):
        rng = np.random.default_rng(11)
        src = triangular_source()
        layer = random_layer(rng, src, 3)
        swapped = ConditionalPmf(layer.given_axes, layer.output_axes,
                                 layer.rows[:, :, [2, 0, 1]])
        spec = regions.RegionSpec("gw_inner", source=src, z_size=3)
        a = regions.evaluate_constraints(spec, layer)
        b = regions.evaluate_constraints(spec, swapped)
        for name, value in a.bounds:
            assert abs(value - b.bound(name)) <= 1e-10

    def test_semi_det_collapses_on_deterministic_channels(self):
        rng = np.random.default_rng(2024)
        for trial in range(10):
            ch = random_deterministic_channel(rng,
                                              x_size=int(rng.integers(2, 6)))
            px = JointPmf((ch.x_alphabet,),
                          rng.dirichlet(np.ones(ch.x_alphabet.size)))
            direct = regions.det_bc_constraints(ch, px)
            mirrored = regions.semi_det_constraints(
                ch, regions.mirror_right_output_aux(ch, px))
            for name in ("common", "left_private", "right_private",
                         "degree_sum"):
                assert abs(direct.bound(name)
                           - mirrored.bound(name)) <= 1e-10
