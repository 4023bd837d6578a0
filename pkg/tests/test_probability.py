"""Pmf containers, entropies, composition, and the text format."""

import math

import numpy as np
import pytest

from graphbc.probability import (
    ConditionalPmf,
    FiniteAlphabet,
    JointPmf,
    binary_entropy,
    compose_chain,
    entropy,
    extend,
    load_pmf,
    mutual_information,
    save_pmf,
)

B2 = FiniteAlphabet(2)
LOG2_3 = math.log2(3.0)
H_THIRD = binary_entropy(1.0 / 3.0)  # = log2(3) - 2/3


def triangular() -> JointPmf:
    # three equiprobable cells, the (1,0) cell impossible
    return JointPmf((B2, B2), np.array([[1, 1], [0, 1]]) / 3.0)


def blackwell_transition() -> ConditionalPmf:
    rows = np.zeros((3, 2, 2))
    rows[0, 0, 0] = 1.0
    rows[1, 0, 1] = 1.0
    rows[2, 1, 1] = 1.0
    return ConditionalPmf((FiniteAlphabet(3),), (B2, B2), rows)


def test_binary_entropy_basics():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0
    assert binary_entropy(1.0) == 0.0
    assert abs(binary_entropy(1 / 3) - (LOG2_3 - 2 / 3)) < 1e-12
    with pytest.raises(ValueError):
        binary_entropy(1.5)


def test_triangular_entropies():
    p = triangular()
    assert abs(entropy(p, [0, 1]) - LOG2_3) < 1e-12
    assert abs(entropy(p, [0]) - H_THIRD) < 1e-12
    assert abs(entropy(p, [1]) - H_THIRD) < 1e-12
    # chain rule leaves exactly 2/3 of a bit for T given S
    assert abs(entropy(p, [1], [0]) - 2 / 3) < 1e-12
    assert abs(mutual_information(p, [0], [1]) - (2 * H_THIRD - LOG2_3)) < 1e-12


def test_deterministic_and_independent_cases():
    ident = JointPmf((B2, B2), np.diag([0.5, 0.5]))
    assert abs(entropy(ident, [0], [1])) < 1e-12
    assert abs(mutual_information(ident, [0], [1]) - 1.0) < 1e-12
    indep = JointPmf((B2, B2), np.full((2, 2), 0.25))
    assert mutual_information(indep, [0], [1]) == 0.0


def test_constructor_validation():
    with pytest.raises(ValueError):
        JointPmf((B2,), np.array([0.7, 0.7]))
    with pytest.raises(ValueError):
        JointPmf((B2,), np.array([1.5, -0.5]))
    with pytest.raises(ValueError):
        JointPmf((B2, B2), np.array([0.5, 0.5]))
    with pytest.raises(ValueError):
        FiniteAlphabet(0)
    with pytest.raises(ValueError):
        ConditionalPmf((B2,), (B2,), np.array([[0.6, 0.6], [0.5, 0.5]]))


def test_normalization_tolerance_is_tight():
    off = np.array([0.5, 0.5 + 5e-12])
    with pytest.raises(ValueError):
        JointPmf((B2,), off)
    JointPmf((B2,), np.array([0.5, 0.5 + 5e-13]))  # inside 1e-12


def test_mass_is_frozen_and_copied():
    src = np.array([0.5, 0.5])
    p = JointPmf((B2,), src)
    src[0] = 0.9  # caller's array stays writable, pmf unaffected
    assert p.mass[0] == 0.5
    with pytest.raises(ValueError):
        p.mass[0] = 0.1


def test_marginal_order_and_values():
    p = triangular()
    ps = p.marginal([0])
    assert np.allclose(ps.mass, [2 / 3, 1 / 3])
    swapped = p.marginal([1, 0])
    assert np.allclose(swapped.mass, p.mass.T)


def test_random_pmfs_information_inequalities():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n_axes = rng.integers(2, 5)
        sizes = tuple(int(rng.integers(2, 4)) for _ in range(n_axes))
        mass = rng.dirichlet(np.ones(int(np.prod(sizes)))).reshape(sizes)
        p = JointPmf(tuple(FiniteAlphabet(s) for s in sizes), mass)
        h_joint = entropy(p, range(n_axes))
        assert h_joint >= 0
        assert h_joint <= sum(math.log2(s) for s in sizes) + 1e-9
        i = mutual_information(p, [0], [1])
        assert i >= 0.0
        # conditioning cannot raise entropy
        assert entropy(p, [0], [1]) <= entropy(p, [0]) + 1e-12
        # chain rule
        assert abs(entropy(p, [0, 1]) - entropy(p, [0]) - entropy(p, [1], [0])) < 1e-9


def test_compose_chain_blackwell_uniform_input():
    z = JointPmf((FiniteAlphabet(1),), np.array([1.0]))
    # u,v pinned to the channel outputs of a uniform x
    puv = ConditionalPmf((FiniteAlphabet(1),), (B2, B2),
                         np.array([[[1, 1], [0, 1]]]) / 3.0)
    px_rows = np.zeros((1, 2, 2, 3))
    px_rows[0, 0, 0, 0] = 1.0
    px_rows[0, 0, 1, 1] = 1.0
    px_rows[0, 1, 1, 2] = 1.0
    px_rows[0, 1, 0, 0] = 1.0  # zero-mass conditioning row, any valid row works
    px = ConditionalPmf((FiniteAlphabet(1), B2, B2), (FiniteAlphabet(3),), px_rows)
    joint = compose_chain(z, puv, px, blackwell_transition())
    assert joint.sizes == (1, 2, 2, 3, 2, 2)
    pair = joint.marginal([4, 5])
    assert np.allclose(pair.mass, triangular().mass, atol=1e-12)
    assert abs(entropy(joint, [4], [0]) - H_THIRD) < 1e-12
    assert abs(mutual_information(joint, [1], [4], [0]) - H_THIRD) < 1e-12
    # composed marginals keep the looser tolerance on re-wrapping
    assert abs(entropy(joint, [3]) - LOG2_3) < 1e-12


def test_extend_shape_checks():
    p = triangular()
    cond = ConditionalPmf((FiniteAlphabet(3),), (B2,), np.full((3, 2), 0.5))
    with pytest.raises(ValueError):
        extend(p, cond, [0])


def test_pmf_file_round_trip(tmp_path):
    path = tmp_path / "tri.pmf"
    save_pmf(triangular(), path)
    back = load_pmf(path)
    assert isinstance(back, JointPmf)
    assert back.sizes == (2, 2)
    assert np.array_equal(back.mass, triangular().mass)
    cpath = tmp_path / "bw.pmf"
    save_pmf(blackwell_transition(), cpath)
    cback = load_pmf(cpath)
    assert isinstance(cback, ConditionalPmf)
    assert np.array_equal(cback.rows, blackwell_transition().rows)


def test_pmf_file_fractions_and_comments(tmp_path):
    path = tmp_path / "frac.pmf"
    path.write_text("# triangular\nkind joint\naxes 2 2\nmass 1/3 1/3\nmass 0 1/3\n")
    p = load_pmf(path)
    assert abs(float(p.mass.sum()) - 1.0) < 1e-15
    assert p.mass[1, 0] == 0.0


def test_pmf_file_malformed(tmp_path):
    bad = tmp_path / "bad.pmf"
    bad.write_text("kind joint\naxes 2 2\nmass 0.5 0.5\n")
    with pytest.raises(ValueError):
        load_pmf(bad)
    bad.write_text("kind sideways\naxes 2\nmass 1\n")
    with pytest.raises(ValueError):
        load_pmf(bad)
