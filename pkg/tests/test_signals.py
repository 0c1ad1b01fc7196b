import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dsisd import (BPSK, QPSK, NoiseSpec, SymbolFrame, add_noise, forward_model, generate_data,
                   generate_pilots, make_frame, project_constellation)
from dsisd.errors import DimensionError, PilotDeficiencyError
from dsisd.signals import noise_variance

from conftest import crandn
from oracles import forward_loop


def test_pilots_single_antenna():
    np.testing.assert_allclose(generate_pilots(1, 1), [[1.0]])


def test_pilots_two_by_two():
    np.testing.assert_allclose(generate_pilots(2, 2), [[1, 1], [1, -1]], atol=1e-15)


@pytest.mark.parametrize("k,t1", [(1, 3), (4, 4), (4, 7), (3, 10)])
def test_pilots_orthogonal_unit_modulus(k, t1):
    p = generate_pilots(k, t1)
    np.testing.assert_allclose(np.abs(p), 1.0, rtol=1e-15)
    np.testing.assert_allclose(p @ p.conj().T, t1 * np.eye(k), atol=1e-12)


def test_pilot_deficiency():
    with pytest.raises(PilotDeficiencyError):
        generate_pilots(4, 3)
    with pytest.raises(PilotDeficiencyError):
        SymbolFrame(np.ones((2, 3)), np.ones((2, 1)), BPSK)


def test_data_in_constellation_and_seeded():
    d = generate_data(QPSK, 3, 50, seed=4)
    assert d.shape == (3, 50)
    assert QPSK.contains(d).all()
    np.testing.assert_array_equal(d, generate_data(QPSK, 3, 50, seed=4))
    assert not np.array_equal(d, generate_data(QPSK, 3, 50, seed=5))


def test_frame_layout():
    fr = make_frame(BPSK, 4, 10, seed=1)
    assert (fr.k_tx, fr.t1, fr.t) == (4, 4, 10)
    np.testing.assert_array_equal(fr.x_t[:, :4], fr.pilots)
    np.testing.assert_array_equal(fr.x_t[:, 4:], fr.data)
    with pytest.raises(ValueError):
        make_frame(BPSK, 4, 3)


def test_frame_rejects_off_alphabet_data():
    with pytest.raises(ValueError):
        SymbolFrame(generate_pilots(2, 2), np.full((2, 3), 0.5 + 0j), BPSK)


def test_forward_matches_triple_loop(rng):
    p_tx, p_rx, f = crandn(rng, 2, 5), crandn(rng, 3, 5), crandn(rng, 5)
    x = crandn(rng, 2, 7)
    np.testing.assert_allclose(forward_model(f, p_tx, p_rx, x), forward_loop(f, p_tx, p_rx, x),
                               rtol=1e-12)


def test_forward_single_scatterer_is_outer_product():
    p_tx = np.array([[2.0 + 0j]])
    p_rx = np.array([[1.0 + 1j], [3.0]])
    y = forward_model(np.array([0.5]), p_tx, p_rx, np.array([[1.0, -1.0]]))
    np.testing.assert_allclose(y, [[1 + 1j, -1 - 1j], [3, -3]])


def test_forward_shape_errors(rng):
    with pytest.raises(DimensionError):
        forward_model(crandn(rng, 4), crandn(rng, 2, 5), crandn(rng, 3, 5), crandn(rng, 2, 3))
    with pytest.raises(DimensionError):
        forward_model(crandn(rng, 5), crandn(rng, 2, 5), crandn(rng, 3, 5), crandn(rng, 3, 3))


@settings(max_examples=25)
@given(st.integers(0, 2 ** 31), st.complex_numbers(max_magnitude=10, allow_nan=False,
                                                      allow_infinity=False))
def test_forward_bilinear(seed, alpha):
    g = np.random.default_rng(seed)
    p_tx, p_rx = crandn(g, 2, 4), crandn(g, 3, 4)
    f1, f2, x1, x2 = crandn(g, 4), crandn(g, 4), crandn(g, 2, 3), crandn(g, 2, 3)
    fw = lambda f, x: forward_model(f, p_tx, p_rx, x)  # noqa: E731
    np.testing.assert_allclose(fw(f1 + alpha * f2, x1), fw(f1, x1) + alpha * fw(f2, x1),
                               rtol=1e-9, atol=1e-9)
    np.testing.assert_allclose(fw(f1, x1 + alpha * x2), fw(f1, x1) + alpha * fw(f1, x2),
                               rtol=1e-9, atol=1e-9)


def test_noise_infinite_snr_is_identity(rng):
    y = crandn(rng, 3, 4)
    out = add_noise(y, y, NoiseSpec(math.inf, 3))
    np.testing.assert_array_equal(out, y)
    assert out is not y


def test_noise_power_at_zero_db():
    y = np.ones((8, 20000), dtype=complex)
    out = add_noise(y, y, NoiseSpec(0.0, 11))
    ratio = np.mean(np.abs(out - y) ** 2) / np.mean(np.abs(y) ** 2)
    assert ratio == pytest.approx(1.0, rel=0.05)


def test_noise_variance_formula():
    sig = np.full((2, 5), 2.0 + 0j)
    assert noise_variance(sig, 10.0) == pytest.approx(0.4)


def test_noise_seeds_independent_and_reproducible():
    y = np.ones((4, 2000), dtype=complex)
    a = add_noise(y, y, NoiseSpec(0.0, 1)) - y
    b = add_noise(y, y, NoiseSpec(0.0, 2)) - y
    np.testing.assert_array_equal(a, add_noise(y, y, NoiseSpec(0.0, 1)) - y)
    corr = abs(np.vdot(a, b)) / (np.linalg.norm(a) * np.linalg.norm(b))
    assert corr < 0.05
    # real and imaginary parts carry equal power
    assert np.mean(a.real ** 2) == pytest.approx(np.mean(a.imag ** 2), rel=0.1)


def test_projection_examples():
    np.testing.assert_array_equal(project_constellation([0.3 - 2j, -0.01 + 5j], BPSK), [1, -1])
    s = 1 / math.sqrt(2)
    np.testing.assert_allclose(project_constellation([2 + 0.1j, -0.2 - 3j], QPSK),
                               [s + 1j * s, -s - 1j * s])


def test_projection_ties_go_to_smallest_angle():
    assert project_constellation([1j], BPSK)[0] == 1
    assert project_constellation([0j], BPSK)[0] == 1
    # on the positive real axis QPSK points at +45 and -45 (315) deg tie; +45 wins
    assert project_constellation([1.0 + 0j], QPSK)[0] == QPSK.points[0]


@given(st.lists(st.complex_numbers(max_magnitude=1e3, allow_nan=False, allow_infinity=False),
                min_size=1, max_size=20), st.sampled_from([BPSK, QPSK]))
def test_projection_idempotent_and_in_alphabet(xs, const):
    p = project_constellation(np.array(xs), const)
    assert const.contains(p).all()
    np.testing.assert_array_equal(project_constellation(p, const), p)


def test_bits_labels():
    assert BPSK.bits_per_symbol == 1
    assert QPSK.bits_per_symbol == 2
    # Gray labelling: neighbours differ in exactly one bit
    b = np.array(QPSK.bits)
    for i in range(4):
        assert np.sum(b[i] != b[(i + 1) % 4]) == 1
