"""Symbols on Z^n x T^n and T^n x R^n: flip map, difference calculus,
decay-class estimation and homogeneous structure.

A Symbol wraps an evaluation map ``func(first, second)`` where
``first`` is the frequency-like variable (a lattice point on the
discrete side, a real frequency on the toroidal side) and ``second``
is the torus point; the last axis of each argument is the coordinate
axis and arguments broadcast.  Two side tags:

* ``discrete``:  sigma(n', x) with n' in Z^n, stored as func(n', x);
* ``toroidal``:  tau(x, k) with k the frequency, stored as func(k, x).

The flip map transports one to the other:  tau(x, k) = conj(sigma(-k, x)).

Symbols are immutable and their evaluation maps must be pure, so all
operations here are safe to call concurrently.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace
from typing import Callable, Optional

import numpy as np

from .errors import NonConvergenceError, UsageError
from .lattice import multi_index

DISCRETE = "discrete"
TOROIDAL = "toroidal"

# Pinned parameters of the numeric homogeneous-component extraction:
# probe radii T, 2T, 4T, 8T with Richardson extrapolation in 1/t.
EXTRACTION_BASE_T = 2.0**10
EXTRACTION_LEVELS = 4
EXTRACTION_TOL = 1e-6


@dataclass(frozen=True)
class ClassicalTerm:
    """One homogeneous term: degree d and angular part a_d(x, theta),
    defined for |theta| = 1."""

    degree: float
    angular: Callable  # (x, theta) -> complex, broadcasting


@dataclass(frozen=True)
class ClassicalStructure:
    """Declared homogeneous expansion, valid for |frequency| >= cutoff_radius:

        symbol(k, x) = sum_j |k|^(d_j) * angular_j(x, k/|k|) + remainder(k, x)

    with degrees strictly descending by one.
    """

    terms: tuple[ClassicalTerm, ...]
    cutoff_radius: float = 1.0
    remainder: Optional[Callable] = None  # (first, x) -> complex
    remainder_order: Optional[float] = None

    def __post_init__(self):
        if self.cutoff_radius <= 0:
            raise UsageError("cutoff radius must be positive")
        degs = [t.degree for t in self.terms]
        for j in range(1, len(degs)):
            if abs(degs[j] - (degs[0] - j)) > 1e-9:
                raise UsageError(
                    f"homogeneous degrees must descend by 1: got {degs}"
                )

    def component(self, degree: float) -> Optional[ClassicalTerm]:
        for t in self.terms:
            if abs(t.degree - degree) <= 1e-9:
                return t
        return None


@dataclass(frozen=True)
class Symbol:
    """Evaluable symbol with order/type metadata.

    func(first, second) must be pure, total on its domain, and accept
    numpy arrays (broadcasting) for batched evaluation.
    """

    func: Callable
    order: float
    rho: float = 1.0
    delta: float = 0.0
    side: str = DISCRETE
    classical: Optional[ClassicalStructure] = None

    def __post_init__(self):
        if self.side not in (DISCRETE, TOROIDAL):
            raise UsageError(f"unknown side tag {self.side!r}")
        if not (0.0 <= self.rho <= 1.0 and 0.0 <= self.delta <= 1.0):
            raise UsageError("type parameters rho, delta must lie in [0,1]")
        if self.classical is not None and self.classical.terms:
            lead = self.classical.terms[0].degree
            if abs(lead - self.order) > 1e-9:
                raise UsageError(
                    f"leading declared degree {lead} differs from order {self.order}"
                )

    def __call__(self, first, second):
        return self.func(first, second)


def _eval_batch(sigma: Symbol, first, second, size: int) -> np.ndarray:
    """Evaluate and broadcast to a flat complex batch of length size
    (symbols that ignore one argument may return scalars)."""
    return _eval_batch_raw(sigma.func, first, second, size)


# ---------------------------------------------------------------------------
# Flip


def flip(sigma: Symbol) -> Symbol:
    """Transport a discrete symbol to the toroidal side:

        tau(x, k) = conj(sigma(-k, x))

    Order and (rho, delta) are copied; declared homogeneous terms are
    conjugated with theta -> -theta.
    """
    if sigma.side != DISCRETE:
        raise UsageError("flip expects a discrete-side symbol")

    base = sigma.func

    def tau_func(k, x):
        return np.conj(base(-np.asarray(k, dtype=float), x))

    classical = None
    if sigma.classical is not None:
        flipped_terms = tuple(
            ClassicalTerm(t.degree, _flip_angular(t.angular)) for t in sigma.classical.terms
        )
        remainder = sigma.classical.remainder
        if remainder is not None:
            rem = remainder

            def remainder(k, x):
                return np.conj(rem(-np.asarray(k, dtype=float), x))

        classical = ClassicalStructure(
            flipped_terms,
            sigma.classical.cutoff_radius,
            remainder,
            sigma.classical.remainder_order,
        )

    return Symbol(tau_func, sigma.order, sigma.rho, sigma.delta, TOROIDAL, classical)


def _flip_angular(angular: Callable) -> Callable:
    def flipped(x, theta):
        return np.conj(angular(x, -np.asarray(theta, dtype=float)))

    return flipped


# ---------------------------------------------------------------------------
# Difference calculus in the frequency variable


def difference(sigma: Symbol, alpha) -> Symbol:
    """Forward difference Delta^alpha in the first variable, exact:

        (Delta_j f)(k) = f(k + e_j) - f(k)

    composed per axis.  Expanded as the alternating binomial sum
    sum_{g <= alpha} (-1)^{|alpha - g|} C(alpha, g) f(k + g).
    """
    alpha = multi_index(alpha)
    if np.all(alpha == 0):
        return sigma

    offsets = []
    coeffs = []
    for gamma in itertools.product(*(range(a + 1) for a in alpha)):
        g = np.array(gamma, dtype=int)
        c = (-1.0) ** int(np.sum(alpha - g))
        c *= float(np.prod([math.comb(int(a), int(gi)) for a, gi in zip(alpha, g)]))
        offsets.append(g)
        coeffs.append(c)
    offsets = np.array(offsets, dtype=float)
    coeffs = np.array(coeffs)

    base = sigma.func

    def diff_func(first, x):
        first = np.asarray(first, dtype=float)
        acc = coeffs[0] * np.asarray(base(first + offsets[0], x))
        for c, g in zip(coeffs[1:], offsets[1:]):
            acc = acc + c * np.asarray(base(first + g, x))
        return acc

    new_order = sigma.order - sigma.rho * float(np.sum(alpha))
    return Symbol(diff_func, new_order, sigma.rho, sigma.delta, sigma.side, None)


# ---------------------------------------------------------------------------
# Spectral x-derivatives


def partial_x(sigma: Symbol, beta, grid_size: int) -> Symbol:
    """d^beta/dx^beta by spectral differentiation: sample x on the
    uniform grid_size-grid per axis, scale the Fourier coefficient at
    mode j by prod_a (2*pi*i*j_a)^(beta_a), resynthesize.  Exact for
    trigonometric polynomials of degree < grid_size/2.
    """
    beta = multi_index(beta)
    n = beta.size
    Q = int(grid_size)
    if Q < 2:
        raise UsageError(f"grid size must be >= 2, got {Q}")
    if Q % 2:
        raise UsageError(f"grid size must be even, got {Q}")
    if np.all(beta == 0):
        return sigma

    freqs = np.fft.fftfreq(Q, d=1.0 / Q)  # 0..Q/2-1, -Q/2..-1
    mult = np.ones((Q,) * n, dtype=complex)
    for axis in range(n):
        f = (2j * np.pi * freqs) ** int(beta[axis])
        if beta[axis] % 2:
            f[Q // 2] = 0.0  # odd derivative of the unmatched Nyquist mode
        shape = [1] * n
        shape[axis] = Q
        mult = mult * f.reshape(shape)

    axes = [np.arange(Q) / Q] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.stack(mesh, axis=-1).reshape(-1, n)
    base = sigma.func
    cache: dict[tuple, np.ndarray] = {}

    def coefficients(first_pt: np.ndarray) -> np.ndarray:
        key = tuple(np.asarray(first_pt, dtype=float).ravel().tolist())
        got = cache.get(key)
        if got is None:
            samples = _eval_batch_raw(base, first_pt, grid_pts, Q**n).reshape((Q,) * n)
            got = np.fft.fftn(samples) / Q**n * mult
            cache[key] = got
        return got

    def synthesize(chat: np.ndarray, x: np.ndarray) -> np.ndarray:
        pts = np.asarray(x, dtype=float)
        squeeze = pts.ndim == 1
        pts = pts.reshape(-1, n)
        cur = np.broadcast_to(chat, (pts.shape[0],) + chat.shape)
        for axis in range(n):
            phase = np.exp(2j * np.pi * np.outer(pts[:, axis], freqs))
            cur = np.einsum("pj,pj...->p...", phase, cur)
        return cur[0] if squeeze else cur

    def deriv_func(first, x):
        first = np.asarray(first, dtype=float)
        if first.ndim <= 1:
            return synthesize(coefficients(first), x)
        flat = first.reshape(-1, first.shape[-1])
        xs = np.broadcast_to(np.asarray(x, dtype=float), flat.shape[:1] + (n,))
        out = np.array(
            [synthesize(coefficients(f), xi) for f, xi in zip(flat, xs)]
        )
        return out.reshape(first.shape[:-1])

    new_order = sigma.order + sigma.delta * float(np.sum(beta))
    return Symbol(deriv_func, new_order, sigma.rho, sigma.delta, sigma.side, None)


def _eval_batch_raw(func, first, second, size: int) -> np.ndarray:
    vals = np.asarray(func(first, second))
    if vals.shape != (size,):
        vals = np.broadcast_to(vals, (size,))
    return vals.astype(complex)


# ---------------------------------------------------------------------------
# Decay-class (seminorm) estimation


@dataclass(frozen=True)
class SeminormReport:
    """Observed decay of |Delta^alpha d^beta sigma| against the weight
    (1+|n'|)^(m - rho|alpha| + delta|beta|)."""

    alpha: tuple[int, ...]
    beta: tuple[int, ...]
    window: tuple[int, int]
    sup_ratio: float
    fitted_exponent: float
    residual: float


def seminorm_estimate(
    sigma: Symbol,
    alpha,
    beta,
    window: tuple[int, int],
    x_grid: int = 16,
    deriv_grid: int = 32,
) -> SeminormReport:
    """Scan lattice radii r_min <= |n'| <= r_max and a uniform torus
    grid; report the sup of the weighted ratio and the least-squares
    decay exponent of the per-shell sup against log(1+r).
    """
    alpha = multi_index(alpha)
    beta = multi_index(beta)
    n = alpha.size
    if beta.size != n:
        raise UsageError("alpha and beta must have equal length")
    r_min, r_max = int(window[0]), int(window[1])
    if r_max < r_min or r_min < 0:
        raise UsageError(f"empty window [{r_min}, {r_max}]")

    g = difference(sigma, alpha)
    if np.any(beta > 0):
        g = partial_x(g, beta, deriv_grid)

    pts = _window_points(n, r_min, r_max)
    radii = np.sqrt(np.sum(pts.astype(float) ** 2, axis=-1))
    shells = np.rint(radii).astype(int)

    xs = _torus_grid(n, x_grid)
    sup_pointwise = np.zeros(len(pts))
    if np.any(beta > 0):
        # spectral derivative caches per first-argument: iterate points
        for i, p in enumerate(pts):
            vals = np.abs(np.asarray(g.func(p.astype(float), xs)))
            sup_pointwise[i] = np.max(vals)
    else:
        for x in xs:
            vals = np.abs(_eval_batch(g, pts.astype(float), x, len(pts)))
            np.maximum(sup_pointwise, vals, out=sup_pointwise)

    exponent = sigma.order - sigma.rho * float(np.sum(alpha)) + sigma.delta * float(np.sum(beta))
    weights = (1.0 + radii) ** (-exponent)
    sup_ratio = float(np.max(sup_pointwise * weights))

    shell_ids = np.unique(shells)
    shell_sup = np.array([np.max(sup_pointwise[shells == s]) for s in shell_ids])
    keep = shell_sup > 0
    if np.count_nonzero(keep) >= 2:
        lx = np.log1p(shell_ids[keep].astype(float))
        ly = np.log(shell_sup[keep])
        slope, intercept = np.polyfit(lx, ly, 1)
        resid = float(np.sqrt(np.mean((ly - (slope * lx + intercept)) ** 2)))
        fitted = float(slope)
    else:
        fitted, resid = float("nan"), float("nan")

    return SeminormReport(
        tuple(int(a) for a in alpha),
        tuple(int(b) for b in beta),
        (r_min, r_max),
        sup_ratio,
        fitted,
        resid,
    )


def _window_points(n: int, r_min: int, r_max: int) -> np.ndarray:
    axis = np.arange(-r_max, r_max + 1)
    grids = np.meshgrid(*([axis] * n), indexing="ij")
    pts = np.stack(grids, axis=-1).reshape(-1, n)
    norms = np.sqrt(np.sum(pts.astype(float) ** 2, axis=-1))
    mask = (norms >= r_min) & (norms <= r_max)
    if not np.any(mask):
        raise UsageError(f"no lattice points with {r_min} <= |n'| <= {r_max}")
    return pts[mask]


def _torus_grid(n: int, per_axis: int) -> np.ndarray:
    axes = [np.arange(per_axis) / per_axis] * n
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, n)


# ---------------------------------------------------------------------------
# Homogeneous components


def homogeneous_component(
    sigma: Symbol,
    degree: float,
    x,
    theta,
    base_t: float = EXTRACTION_BASE_T,
    tol: float = EXTRACTION_TOL,
):
    """Degree-`degree` homogeneous component at (x, theta), |theta| = 1.

    Prefers a declared term of that degree; otherwise extracts it
    numerically from t^(-degree) * sigma(t*theta, x) at t = T, 2T, 4T,
    8T with Richardson extrapolation in 1/t.  x may be a batch.
    """
    theta = np.asarray(theta, dtype=float)
    if abs(np.sqrt(np.sum(theta**2)) - 1.0) > 1e-12:
        raise UsageError(f"theta must be a unit vector, |theta| = {np.linalg.norm(theta)}")

    if sigma.classical is not None:
        term = sigma.classical.component(degree)
        if term is not None:
            return term.angular(x, theta)

    estimates = []
    for k in range(EXTRACTION_LEVELS):
        t = base_t * 2.0**k
        v = np.asarray(sigma.func(t * theta, x), dtype=complex)
        estimates.append(t ** (-degree) * v)

    # Richardson tableau for an expansion in powers of 1/t
    rows = [np.asarray(e) for e in estimates]
    diag = [rows[0]]
    prev = rows
    for j in range(1, EXTRACTION_LEVELS):
        nxt = []
        for k in range(len(prev) - 1):
            nxt.append((2.0**j * prev[k + 1] - prev[k]) / (2.0**j - 1.0))
        diag.append(nxt[0])
        prev = nxt
    result = prev[0]

    drift = float(np.max(np.abs(result - diag[-2])))
    if drift > 10.0 * tol:
        raise NonConvergenceError(
            f"homogeneous extraction did not settle: drift {drift:.3e} > {10 * tol:.1e}"
        )
    return result


# ---------------------------------------------------------------------------
# Finite modification


def finite_modify(sigma: Symbol, patch: dict) -> Symbol:
    """Override the symbol at finitely many lattice points (first
    variable); a finite-rank change, invisible to the Dixmier trace.
    Keys are lattice points (tuples or ints), values the new constants.
    The classical structure is unchanged."""
    if not patch:
        return sigma

    norm_patch = {}
    for key, val in patch.items():
        k = np.atleast_1d(np.asarray(key, dtype=float))
        norm_patch[tuple(k.tolist())] = complex(val)
    pts = np.array(list(norm_patch.keys()), dtype=float)
    vals = np.array(list(norm_patch.values()), dtype=complex)
    base = sigma.func

    def patched(first, x):
        # the base symbol is never evaluated at patched points (it may
        # be singular there); batched first with aligned batched x is
        # subset consistently
        first = np.asarray(first, dtype=float)
        single = first.ndim <= 1
        flat = first.reshape(1, -1) if single else first.reshape(-1, pts.shape[1])
        hits = np.all(np.abs(flat[:, None, :] - pts[None, :, :]) < 1e-9, axis=-1)
        any_hit = hits.any(axis=1)
        if single:
            if any_hit[0]:
                return vals[int(np.argmax(hits[0]))]
            return base(first, x)
        if not any_hit.any():
            return base(first, x)
        out = np.empty(flat.shape[0], dtype=complex)
        out[any_hit] = vals[np.argmax(hits[any_hit], axis=1)]
        if (~any_hit).any():
            xa = np.asarray(x, dtype=float)
            sub_x = xa[~any_hit] if xa.ndim >= 2 and xa.shape[0] == flat.shape[0] else xa
            sub = np.asarray(base(flat[~any_hit], sub_x), dtype=complex)
            out[~any_hit] = np.broadcast_to(sub, (int((~any_hit).sum()),))
        return out.reshape(first.shape[:-1])

    return replace(sigma, func=patched)


def regularize_at_origin(sigma: Symbol, n: int) -> Symbol:
    """Patch the origin of a symbol whose homogeneous expression is
    singular at 0 with the angular average of its declared leading
    term at |k| = 1.  A finite-rank change, so the Dixmier trace and
    the residue are unaffected."""
    if sigma.classical is None or not sigma.classical.terms:
        raise UsageError("origin regularization needs a declared leading term")
    lead = sigma.classical.terms[0]
    if n == 1:
        thetas = np.array([[1.0], [-1.0]])
    else:
        ang = np.linspace(0.0, 2.0 * np.pi, 64, endpoint=False)
        if n == 2:
            thetas = np.stack([np.cos(ang), np.sin(ang)], axis=-1)
        else:
            thetas = _fibonacci_sphere(128)
    x0 = np.zeros(n)
    avg = np.mean([complex(np.asarray(lead.angular(x0, th)).reshape(())) for th in thetas])
    return finite_modify(sigma, {tuple([0.0] * n): avg})


def _fibonacci_sphere(count: int) -> np.ndarray:
    i = np.arange(count) + 0.5
    phi = np.arccos(1 - 2 * i / count)
    golden = np.pi * (1 + 5**0.5)
    th = golden * i
    return np.stack(
        [np.cos(th) * np.sin(phi), np.sin(th) * np.sin(phi), np.cos(phi)], axis=-1
    )
