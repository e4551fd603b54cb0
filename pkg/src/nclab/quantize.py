"""Truncated matrix assembly for the two quantizations and the Fourier
conjugation between them.

Pinned transform conventions (all 2*pi factors in exponents):

* forward transform l2(Z^n) -> L2(T^n):  (F f)(xi) = sum_k f(k) e^{-2 pi i k.xi},
  with inverse f(k) = integral e^{+2 pi i k.xi} (F f)(xi) dxi;
* discrete quantization, delta basis:  entry [n', k] equals the torus
  integral of sigma(n', xi) e^{2 pi i (n'-k).xi};
* toroidal quantization, Fourier-mode basis e_m(x) = e^{2 pi i m.x}:
  entry [eta, m] is the (eta - m)-th x-Fourier coefficient of tau(., m).

Under these conventions conjugating a Fourier-mode matrix A by the
lattice transform is the index negation B[n', k] = A[-n', -k]; combined
with the adjoint and the flip map it reproduces the discrete matrix
exactly (up to quadrature roundoff), which verify_identity measures.

Torus integrals use the Q-point tensor rectangle rule per axis, i.e.
one FFT per row/column; this is exact for trigonometric polynomials of
degree < Q/2 and spectrally accurate otherwise.  Rows (columns) are
independent, so assembly parallelizes without changing results.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .errors import UsageError
from .lattice import TruncationBox
from .symbols import DISCRETE, TOROIDAL, Symbol, flip

LATTICE_DELTA = "lattice_delta"
FOURIER_MODE = "fourier_mode"

BINARY_MAGIC = b"NCRM"


@dataclass(frozen=True)
class QuadratureGrid:
    """Uniform torus grid: Q points per axis at j/Q, weight Q^-n."""

    n: int
    q: int

    def __post_init__(self):
        if self.q < 2 or self.q % 2:
            raise UsageError(f"grid size must be even and >= 2, got {self.q}")

    def points(self) -> np.ndarray:
        axes = [np.arange(self.q) / self.q] * self.n
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1).reshape(-1, self.n)


def default_grid_size(M: int) -> int:
    """Smallest power of two >= max(64, 4*(2M+1)): offsets reach +-2M,
    and the doubled margin keeps aliasing below spectral tolerance."""
    target = max(64, 4 * (2 * M + 1))
    q = 64
    while q < target:
        q *= 2
    return q


@dataclass(frozen=True)
class OperatorMatrix:
    """Dense complex matrix plus the index maps tying rows/columns to
    the box enumeration, in either basis."""

    entries: np.ndarray
    box: TruncationBox
    basis: str

    def __post_init__(self):
        S = self.box.size
        if self.entries.shape != (S, S):
            raise UsageError(f"matrix shape {self.entries.shape} != box size {S}")
        if self.basis not in (LATTICE_DELTA, FOURIER_MODE):
            raise UsageError(f"unknown basis tag {self.basis!r}")


def _check_grid(box: TruncationBox, grid: QuadratureGrid) -> QuadratureGrid:
    if grid is None:
        grid = QuadratureGrid(box.n, default_grid_size(box.M))
    if grid.n != box.n:
        raise UsageError("grid and box dimensions differ")
    if grid.q < max(2, 4 * box.M + 2):
        raise UsageError(
            f"grid size {grid.q} undersized: offsets up to {2 * box.M} per axis "
            f"need at least {4 * box.M + 2} points to stay distinct"
        )
    return grid


def _sample(symbol_func, first, pts: np.ndarray) -> np.ndarray:
    vals = np.asarray(symbol_func(np.asarray(first, dtype=float), pts))
    if vals.shape != (len(pts),):
        vals = np.broadcast_to(vals, (len(pts),))
    return vals.astype(complex)


def assemble_discrete(
    sigma: Symbol, box: TruncationBox, grid: QuadratureGrid | None = None
) -> OperatorMatrix:
    """Matrix of the discrete quantization of sigma(n', xi) in the
    standard l2 basis: row n' is the FFT of xi -> sigma(n', xi), read
    at offsets k - n'."""
    if sigma.side != DISCRETE:
        raise UsageError("assemble_discrete expects a discrete-side symbol")
    grid = _check_grid(box, grid)
    Q, n = grid.q, box.n
    pts = grid.points()
    box_pts = box.points()
    S = box.size
    out = np.empty((S, S), dtype=complex)
    shape = (Q,) * n
    for i, nprime in enumerate(box_pts):
        samples = _sample(sigma.func, nprime, pts).reshape(shape)
        coeff = np.fft.fftn(samples) / Q**n  # coeff[j] ~ hat(sigma)(j)
        offsets = np.mod(box_pts - nprime, Q)
        out[i, :] = coeff.ravel()[np.ravel_multi_index(tuple(offsets.T), shape)]
    return OperatorMatrix(out, box, LATTICE_DELTA)


def assemble_toroidal(
    tau: Symbol, box: TruncationBox, grid: QuadratureGrid | None = None
) -> OperatorMatrix:
    """Matrix of the toroidal quantization of tau(x, k) in the Fourier
    basis: column m holds the x-Fourier coefficients of tau(., m) at
    offsets eta - m."""
    if tau.side != TOROIDAL:
        raise UsageError("assemble_toroidal expects a toroidal-side symbol")
    grid = _check_grid(box, grid)
    Q, n = grid.q, box.n
    pts = grid.points()
    box_pts = box.points()
    S = box.size
    out = np.empty((S, S), dtype=complex)
    shape = (Q,) * n
    for j, m in enumerate(box_pts):
        samples = _sample(tau.func, m, pts).reshape(shape)
        coeff = np.fft.fftn(samples) / Q**n
        offsets = np.mod(box_pts - m, Q)
        out[:, j] = coeff.ravel()[np.ravel_multi_index(tuple(offsets.T), shape)]
    return OperatorMatrix(out, box, FOURIER_MODE)


def adjoint(A: OperatorMatrix) -> OperatorMatrix:
    """Conjugate transpose; basis tag preserved."""
    return OperatorMatrix(A.entries.conj().T.copy(), A.box, A.basis)


def conjugate_by_fourier(A: OperatorMatrix) -> OperatorMatrix:
    """Conjugate a Fourier-mode matrix by the lattice Fourier transform.

    With the pinned conventions F maps the mode e_{-k} to the delta at
    k, so the conjugated matrix is B[n', k] = A[-n', -k]: conjugation
    by the (unitary) negation permutation.  Singular values are
    preserved exactly.
    """
    if A.basis != FOURIER_MODE:
        raise UsageError("conjugate_by_fourier expects a Fourier-mode matrix")
    perm = A.box.negation_permutation()
    return OperatorMatrix(A.entries[np.ix_(perm, perm)], A.box, LATTICE_DELTA)


@dataclass(frozen=True)
class IdentityReport:
    """Entrywise deviation between the directly assembled discrete
    matrix and the Fourier-conjugated adjoint of the toroidal one."""

    full_deviation: float
    interior_deviation: float
    bandwidth: int
    box: TruncationBox
    grid_q: int


def verify_identity(
    sigma: Symbol, box: TruncationBox, grid: QuadratureGrid | None = None
) -> IdentityReport:
    """Check the conjugation identity relating the two quantizations:
    assemble sigma directly, and via flip -> toroidal -> adjoint ->
    Fourier conjugation; report max |difference| over the full matrix
    and over the interior block (indices with |index| <= M - b, where
    b is the observed band width of the discrete matrix)."""
    grid = _check_grid(box, grid)
    D = assemble_discrete(sigma, box, grid)
    B = conjugate_by_fourier(adjoint(assemble_toroidal(flip(sigma), box, grid)))
    dev = np.abs(D.entries - B.entries)
    full = float(dev.max())

    b = _band_width(D)
    pts = D.box.points()
    interior = np.max(np.abs(pts), axis=1) <= D.box.M - b
    if interior.any():
        inner = float(dev[np.ix_(interior, interior)].max())
    else:
        inner = float("nan")
    return IdentityReport(full, inner, b, box, grid.q)


def _band_width(A: OperatorMatrix, rel_tol: float = 1e-13) -> int:
    """Largest Chebyshev offset |row - col| carrying a significant
    entry; equals the x-Fourier bandwidth for band-limited symbols."""
    pts = A.box.points()
    mags = np.abs(A.entries)
    thr = rel_tol * mags.max()
    rows, cols = np.nonzero(mags > thr)
    if len(rows) == 0:
        return 0
    cheb = np.max(np.abs(pts[rows] - pts[cols]), axis=1)
    return int(cheb.max())


# ---------------------------------------------------------------------------
# Export formats


def write_matrix_csv(path, A: OperatorMatrix) -> None:
    """Entries as `row,col,re,im` with a header, %.17g precision."""
    S = A.box.size
    rows, cols = np.divmod(np.arange(S * S), S)
    re = A.entries.real.ravel()
    im = A.entries.imag.ravel()
    with open(path, "w", newline="") as fh:
        fh.write("row,col,re,im\n")
        for r, c, a, b in zip(rows, cols, re, im):
            fh.write(f"{r},{c},{a:.17g},{b:.17g}\n")


def write_matrix_binary(path, A: OperatorMatrix) -> None:
    """Binary layout: 16-byte header (magic 'NCRM', u32 n, u32 M, u32
    reserved=0, little endian), then row-major float64 interleaved
    re/im pairs."""
    header = BINARY_MAGIC + struct.pack("<III", A.box.n, A.box.M, 0)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(A.entries, dtype="<c16").tobytes())


def read_matrix_binary(path, basis: str = LATTICE_DELTA) -> OperatorMatrix:
    """Inverse of write_matrix_binary (basis is not stored in the file)."""
    with open(path, "rb") as fh:
        header = fh.read(16)
        if len(header) != 16 or header[:4] != BINARY_MAGIC:
            raise UsageError(f"{path}: not a matrix file (bad magic)")
        n, M, _ = struct.unpack("<III", header[4:])
        box = TruncationBox(n, M)
        S = box.size
        data = np.frombuffer(fh.read(), dtype="<c16")
    if data.size != S * S:
        raise UsageError(f"{path}: truncated matrix payload")
    return OperatorMatrix(data.reshape(S, S).astype(complex), box, basis)
