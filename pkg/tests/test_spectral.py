import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nclab.errors import UsageError
from nclab.spectral import (
    SingularSpectrum,
    dixmier_quotients,
    eigenvalues_hermitian,
    l1inf_norm,
    singular_values,
    trace_estimate,
    write_spectrum_csv,
)


def harmonic(N):
    return sum(1.0 / j for j in range(1, N + 1))


# ---------------------------------------------------------------------------
# singular values


def test_diagonal_reordering():
    s = singular_values(np.diag([3.0, 1.0, 2.0]))
    assert s.values.tolist() == [3.0, 2.0, 1.0]


def test_antidiagonal_2x2():
    s = singular_values(np.array([[0.0, 2.0], [2.0, 0.0]]))
    assert s.values == pytest.approx([2.0, 2.0])


def test_permutation_matrix_all_ones():
    P = np.eye(5)[[3, 0, 4, 1, 2]]
    assert singular_values(P).values == pytest.approx(np.ones(5))


def test_rejects_non_finite():
    with pytest.raises(UsageError):
        singular_values(np.array([[np.nan, 0.0], [0.0, 1.0]]))


@given(st.integers(2, 6), st.integers(0, 10))
@settings(max_examples=40, deadline=None)
def test_permutation_invariance(size, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(size, size)) + 1j * rng.normal(size=(size, size))
    perm = rng.permutation(size)
    P = np.eye(size)[perm]
    sa = singular_values(A).values
    sp = singular_values(P @ A @ P.T).values
    assert np.max(np.abs(sa - sp)) < 1e-13 * max(sa[0], 1.0)


@given(st.floats(-5, 5), st.integers(0, 10))
@settings(max_examples=40, deadline=None)
def test_scale_equivariance(c, seed):
    rng = np.random.default_rng(seed)
    A = rng.normal(size=(4, 4))
    sa = singular_values(A).values
    sc = singular_values(c * A).values
    assert np.max(np.abs(sc - abs(c) * sa)) < 1e-12 * max(1.0, abs(c) * sa[0])


def test_positive_diagonal_exact():
    d = np.array([0.5, 4.0, 2.0, 1.0])
    s = singular_values(np.diag(d))
    assert np.array_equal(s.values, np.sort(d)[::-1])


# ---------------------------------------------------------------------------
# Hermitian eigenvalues


def test_hermitian_signed():
    w = eigenvalues_hermitian(np.diag([1.0, -1.0]))
    assert w.tolist() == [1.0, -1.0]


def test_hermitian_identity():
    assert eigenvalues_hermitian(np.eye(5)).tolist() == [1.0] * 5


def test_hermitian_rejects_asymmetric():
    A = np.array([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(UsageError, match="asymmetry"):
        eigenvalues_hermitian(A)


def test_symmetrized_tridiagonal_example():
    # symmetrization of the cosine-modulated bracket operator at M=64:
    # eigenvalues real, and the negative part stays above -0.05
    from nclab.dsl import to_symbol
    from nclab.lattice import TruncationBox
    from nclab.quantize import QuadratureGrid, assemble_toroidal
    from nclab.symbols import flip

    sigma = to_symbol(
        "(1+0.5*cos(2*pi*x1))*<xi>^(-1)", n=1, order=-1,
        classical_terms=[(-1, "1+0.5*cos(2*pi*x1)")],
    )
    A = assemble_toroidal(flip(sigma), TruncationBox(1, 64), QuadratureGrid(1, 512))
    H = 0.5 * (A.entries + A.entries.conj().T)
    w = eigenvalues_hermitian(H)
    assert np.all(np.isreal(w))
    assert w[-1] > -0.05


# ---------------------------------------------------------------------------
# Dixmier quotients and the ideal norm


def test_quotient_harmonic_oracle():
    s = np.array([1.0 / j for j in range(1, 11)])
    got = dixmier_quotients(s)
    want_10 = harmonic(10) / math.log(10)  # direct-summation oracle
    assert got[-1] == pytest.approx(want_10, abs=1e-12)
    assert got[-1] == pytest.approx(1.2720, abs=5e-4)


def test_quotient_square_summable_oracle():
    s = np.array([j**-2.0 for j in range(1, 1001)])
    got = dixmier_quotients(s)
    want = sum(s) / math.log(1000)
    assert got[-1] == pytest.approx(want, abs=1e-12)
    assert got[-1] == pytest.approx(0.2380, abs=5e-4)


def test_quotient_zero_sequence():
    got = dixmier_quotients(np.zeros(50))
    assert np.all(got == 0.0)


def test_quotient_needs_two_values():
    with pytest.raises(UsageError):
        dixmier_quotients(np.array([1.0]))


def test_l1inf_harmonic():
    s = np.array([1.0 / j for j in range(1, 10001)])
    # scan oracle: D_N decreasing for the harmonic sequence, sup at N=2
    scan = max(sum(s[:N]) / math.log(N) for N in range(2, 200))
    assert l1inf_norm(s) == pytest.approx(scan, rel=1e-12)
    assert l1inf_norm(s) == pytest.approx(1.5 / math.log(2), abs=1e-6)


def test_l1inf_rank_one():
    s = np.zeros(100)
    s[0] = 1.0
    assert l1inf_norm(s) == pytest.approx(1.0 / math.log(2), abs=1e-12)


def test_l1inf_zero():
    assert l1inf_norm(np.zeros(10)) == 0.0


# ---------------------------------------------------------------------------
# trace estimation


def test_trace_estimate_2_over_j():
    s = 2.0 / np.arange(1, 10001)
    summary = trace_estimate(s, discard_fraction=0.0)
    assert summary.trace_estimate == pytest.approx(2.0, abs=1e-3)
    assert summary.fit_rms < 1e-3


def test_trace_estimate_trace_class_vanishes():
    s = np.arange(1, 10001) ** -2.0
    summary = trace_estimate(s, discard_fraction=0.0)
    assert abs(summary.trace_estimate) < 0.02


def test_trace_estimate_bracket_diagonal():
    # eigenvalue enumeration oracle: diag <k>^-1 over |k| <= 20000
    k = np.arange(-20000, 20001)
    s = np.sort((1.0 + k.astype(float) ** 2) ** -0.5)[::-1]
    summary = trace_estimate(s, discard_fraction=0.0)
    assert summary.trace_estimate == pytest.approx(2.0, abs=0.10)


def test_trace_estimate_scales_linearly():
    s = 1.0 / np.arange(1, 2001)
    c1 = trace_estimate(s, discard_fraction=0.0).trace_estimate
    c3 = trace_estimate(3.0 * s, discard_fraction=0.0).trace_estimate
    assert c3 == pytest.approx(3.0 * c1, rel=1e-12)


def test_trace_estimate_window_checks():
    with pytest.raises(UsageError):
        trace_estimate(np.ones(30), discard_fraction=0.9)  # usable too short
    with pytest.raises(UsageError):
        trace_estimate(np.ones(100), window_fraction=(0.5, 0.4))


def test_partial_sums_monotone_and_quotients_decreasing():
    s = 1.0 / np.arange(1, 5001)
    summary = trace_estimate(s, discard_fraction=0.0)
    assert np.all(np.diff(summary.partial_sums) >= 0)
    assert np.all(np.diff(summary.quotients) <= 1e-15)


def test_spectrum_invariants():
    with pytest.raises(UsageError):
        SingularSpectrum(np.array([1.0, 2.0]), 2)  # increasing
    with pytest.raises(UsageError):
        SingularSpectrum(np.array([1.0, -0.5]), 2)  # negative


def test_write_spectrum_csv(tmp_path):
    path = tmp_path / "spectrum.csv"
    write_spectrum_csv(path, np.array([1.0, 0.5, 0.25]))
    lines = path.read_text().splitlines()
    assert lines[0] == "N,s_N,S_N,D_N"
    assert lines[1].startswith("1,1,1,nan")
    n, s, S, D = lines[2].split(",")
    assert float(D) == pytest.approx(1.5 / math.log(2))
