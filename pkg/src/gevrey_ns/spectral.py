"""Fourier representation of mean-zero, divergence-free velocity fields on the 2D torus.

The domain is fixed to [0, 2pi)^2.  A field is stored as two complex
coefficient arrays u1hat, u2hat over the integer wavenumber lattice
xi in {-n/2+1, ..., n/2}^2 in standard FFT ordering, with the convention

    u(x) = sum_xi uhat(xi) exp(i xi . x).

The unpaired Nyquist row/column is kept identically zero, so every retained
mode has a conjugate partner and real fields are exactly Hermitian.  With
this convention Parseval reads

    int |u|^2 dx = (2 pi)^2 sum_xi |uhat(xi)|^2.

L2-type norms are evaluated spectrally; the L4 norm is evaluated by
quadrature on a 2x-oversampled physical grid so that quartic products do
not alias.  The quadratic advection term uses the 2/3-rule: inputs and
outputs are truncated to |xi|_inf <= k_cut with 3 k_cut < n, which makes the
retained product modes an exact convolution of the truncated inputs.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
import scipy.fft as sfft

from .errors import ConfigurationError, FieldInvariantError, GridMismatchError

TWO_PI = 2.0 * np.pi


def _fft_workers() -> int:
    """Worker count for FFT calls, capped by GEVREY_NS_THREADS (default 1)."""
    raw = os.environ.get("GEVREY_NS_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _readonly(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Grid:
    """Wavenumber bookkeeping for an n x n spectral grid on [0, 2pi)^2.

    Attributes:
        n: modes per dimension (even, >= 8).
        freqs: integer frequencies in FFT order, shape (n,).
        k1, k2: broadcastable wavenumber arrays, shapes (n, 1) and (1, n).
        k_sq: |xi|^2, shape (n, n).
        inv_k_sq: 1/|xi|^2 with the zero mode set to 0.
        keep: mask that removes the Nyquist row/column.
        dealias: 2/3-rule mask |xi|_inf <= k_cut (Nyquist removed as well).
        k_cut: dealiasing cutoff, the largest k with 3k < n.
    """

    n: int
    freqs: np.ndarray
    k1: np.ndarray
    k2: np.ndarray
    k_sq: np.ndarray
    inv_k_sq: np.ndarray
    keep: np.ndarray
    dealias: np.ndarray
    k_cut: int

    def __post_init__(self):
        for name in ("freqs", "k1", "k2", "k_sq", "inv_k_sq", "keep", "dealias"):
            _readonly(getattr(self, name))

    # Derived layouts used by the rfft fast path and oversampled quadrature.

    @property
    def half_cols(self) -> int:
        return self.n // 2 + 1

    def half(self, a: np.ndarray) -> np.ndarray:
        """Non-negative-frequency columns of a full coefficient array."""
        return a[:, : self.half_cols]

    def full_from_half(self, h: np.ndarray) -> np.ndarray:
        """Rebuild the full Hermitian lattice from rfft-layout coefficients."""
        n = self.n
        full = np.empty((n, n), dtype=complex)
        full[:, : self.half_cols] = h
        neg_rows = (-np.arange(n)) % n
        cols = np.arange(self.half_cols, n)
        full[:, self.half_cols:] = np.conj(h[neg_rows][:, n - cols])
        return full

    def oversample_rows(self, m: int) -> np.ndarray:
        """Row indices embedding this grid's frequencies into an m-point grid."""
        return self.freqs % m


def make_grid(n: int) -> Grid:
    """Build the wavenumber lattice for n modes per dimension.

    Raises ConfigurationError unless n is an even integer >= 8.
    """
    if not isinstance(n, (int, np.integer)):
        raise ConfigurationError(f"grid size must be an integer, got {n!r}")
    n = int(n)
    if n % 2 != 0 or n < 8:
        raise ConfigurationError(f"grid size must be even and >= 8, got {n}")
    freqs = np.rint(np.fft.fftfreq(n, d=1.0 / n)).astype(np.int64)
    k1 = freqs.astype(float).reshape(n, 1)
    k2 = freqs.astype(float).reshape(1, n)
    k_sq = k1 * k1 + k2 * k2
    inv = np.zeros_like(k_sq)
    nz = k_sq > 0
    inv[nz] = 1.0 / k_sq[nz]
    nyq = n // 2
    keep = np.ones((n, n), dtype=bool)
    keep[nyq, :] = False
    keep[:, nyq] = False
    k_cut = (n - 1) // 3
    dealias = (np.abs(k1) <= k_cut) & (np.abs(k2) <= k_cut) & keep
    return Grid(n=n, freqs=freqs, k1=k1, k2=k2, k_sq=k_sq, inv_k_sq=inv,
                keep=keep, dealias=dealias, k_cut=k_cut)


@dataclass(frozen=True)
class SpectralVelocity:
    """Mean-zero, divergence-free velocity field as Fourier coefficients.

    Instances are immutable; arithmetic returns new fields on the same grid.
    Construction does not validate; use validate_field for the invariant
    check (Hermitian symmetry, zero mean, zero divergence, zero Nyquist).
    """

    grid: Grid
    u1: np.ndarray
    u2: np.ndarray

    def __post_init__(self):
        _readonly(self.u1)
        _readonly(self.u2)

    def __add__(self, other: "SpectralVelocity") -> "SpectralVelocity":
        _require_same_grid(self, other)
        return SpectralVelocity(self.grid, self.u1 + other.u1, self.u2 + other.u2)

    def __sub__(self, other: "SpectralVelocity") -> "SpectralVelocity":
        _require_same_grid(self, other)
        return SpectralVelocity(self.grid, self.u1 - other.u1, self.u2 - other.u2)

    def __mul__(self, c: float) -> "SpectralVelocity":
        return SpectralVelocity(self.grid, self.u1 * c, self.u2 * c)

    __rmul__ = __mul__

    def max_amplitude(self) -> float:
        return max(float(np.max(np.abs(self.u1))), float(np.max(np.abs(self.u2))))


def _require_same_grid(a: SpectralVelocity, b: SpectralVelocity) -> None:
    if a.grid.n != b.grid.n:
        raise GridMismatchError(f"grid mismatch: n={a.grid.n} vs n={b.grid.n}")


def _clean(grid: Grid, u1: np.ndarray, u2: np.ndarray) -> SpectralVelocity:
    """Construct a field with the zero-mean and Nyquist constraints applied."""
    u1 = np.where(grid.keep, u1, 0.0 + 0.0j)
    u2 = np.where(grid.keep, u2, 0.0 + 0.0j)
    u1[0, 0] = 0.0
    u2[0, 0] = 0.0
    return SpectralVelocity(grid, u1, u2)


def mirror_coefficients(a: np.ndarray) -> np.ndarray:
    """Return conj(a(-xi)), the Hermitian mirror of a full coefficient array."""
    return np.conj(np.roll(a[::-1, ::-1], 1, axis=(0, 1)))


def hermitian_defect(a: np.ndarray) -> float:
    """Max absolute deviation of a from its Hermitian mirror."""
    return float(np.max(np.abs(a - mirror_coefficients(a))))


def divergence_defect(v: SpectralVelocity) -> float:
    """Max |xi . uhat(xi)| over the lattice."""
    g = v.grid
    return float(np.max(np.abs(g.k1 * v.u1 + g.k2 * v.u2)))


def validate_field(v: SpectralVelocity, hermitian_tol: float = 1e-12,
                   div_tol: float = 1e-10) -> None:
    """Check the structural invariants; raise FieldInvariantError on failure.

    Hermitian symmetry is relative to the largest coefficient amplitude,
    the mean must vanish exactly, the Nyquist row/column must be exactly
    zero, and the divergence must satisfy |xi.uhat| <= div_tol * max|uhat|.
    """
    g = v.grid
    scale = max(v.max_amplitude(), 1e-300)
    for name, a in (("u1", v.u1), ("u2", v.u2)):
        if a.shape != (g.n, g.n):
            raise FieldInvariantError(f"{name} has shape {a.shape}, expected {(g.n, g.n)}")
        if a[0, 0] != 0:
            raise FieldInvariantError(f"{name} mean mode is {a[0, 0]!r}, must be exactly 0")
        nyq = g.n // 2
        if np.any(a[nyq, :] != 0) or np.any(a[:, nyq] != 0):
            raise FieldInvariantError(f"{name} has nonzero Nyquist modes")
        defect = hermitian_defect(a)
        if defect > hermitian_tol * scale:
            raise FieldInvariantError(
                f"{name} Hermitian defect {defect:.3e} exceeds {hermitian_tol:.1e} * {scale:.3e}")
    div = divergence_defect(v)
    if div > div_tol * scale:
        raise FieldInvariantError(
            f"divergence defect {div:.3e} exceeds {div_tol:.1e} * {scale:.3e}")


# ---------------------------------------------------------------------------
# Transforms
# ---------------------------------------------------------------------------

def to_physical(v: SpectralVelocity, oversample: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Evaluate the velocity on an (oversample*n)^2 physical grid.

    Valid for Hermitian fields (the rfft half-spectrum path is used).
    """
    g = v.grid
    n = g.n
    if oversample == 1:
        w = _fft_workers()
        scale = float(n) * n
        return (sfft.irfft2(g.half(v.u1), s=(n, n), workers=w) * scale,
                sfft.irfft2(g.half(v.u2), s=(n, n), workers=w) * scale)
    m = oversample * n
    rows = g.oversample_rows(m)
    cols = np.arange(g.half_cols)
    out = []
    w = _fft_workers()
    for a in (v.u1, v.u2):
        pad = np.zeros((m, m // 2 + 1), dtype=complex)
        pad[np.ix_(rows, cols)] = g.half(a)
        out.append(sfft.irfft2(pad, s=(m, m), workers=w) * (float(m) * m))
    return out[0], out[1]


def from_physical(grid: Grid, U1: np.ndarray, U2: np.ndarray) -> SpectralVelocity:
    """Transform real physical-space samples to a coefficient field.

    The result is exactly Hermitian by construction; the mean and Nyquist
    modes are zeroed.  Divergence-freeness is the caller's responsibility
    (use leray_project when unsure).
    """
    n = grid.n
    w = _fft_workers()
    h1 = sfft.rfft2(np.asarray(U1, dtype=float), workers=w) / (float(n) * n)
    h2 = sfft.rfft2(np.asarray(U2, dtype=float), workers=w) / (float(n) * n)
    return _clean(grid, grid.full_from_half(h1), grid.full_from_half(h2))


def transform_roundtrip(v: SpectralVelocity) -> SpectralVelocity:
    """Physical-space roundtrip; reproduces the coefficients to ~1e-15."""
    U1, U2 = to_physical(v)
    return from_physical(v.grid, U1, U2)


# ---------------------------------------------------------------------------
# Projection, norms, advection
# ---------------------------------------------------------------------------

def leray_project(grid: Grid, u1: np.ndarray, u2: np.ndarray) -> SpectralVelocity:
    """Modewise orthogonal projection onto divergence-free fields.

    P(xi) = I - xi xi^T / |xi|^2 and P(0) = 0, so the output is mean-zero
    and divergence-free; gradients are annihilated and divergence-free
    inputs are fixed.
    """
    g = grid
    s = (g.k1 * u1 + g.k2 * u2) * g.inv_k_sq
    return _clean(g, u1 - g.k1 * s, u2 - g.k2 * s)


def leray(v: SpectralVelocity) -> SpectralVelocity:
    return leray_project(v.grid, v.u1, v.u2)


def laplacian(v: SpectralVelocity) -> SpectralVelocity:
    return SpectralVelocity(v.grid, -v.grid.k_sq * v.u1, -v.grid.k_sq * v.u2)


def norm_l2(v: SpectralVelocity) -> float:
    """L2 norm via Parseval."""
    s = np.sum(np.abs(v.u1) ** 2) + np.sum(np.abs(v.u2) ** 2)
    return TWO_PI * float(np.sqrt(s))


def norm_grad_l2(v: SpectralVelocity) -> float:
    """L2 norm of the gradient: (2pi)^2 sum |xi|^2 |uhat|^2, square-rooted."""
    s = np.sum(v.grid.k_sq * (np.abs(v.u1) ** 2 + np.abs(v.u2) ** 2))
    return TWO_PI * float(np.sqrt(s))


def norm_l4(v: SpectralVelocity) -> float:
    """L4 norm by quadrature on a 2x-oversampled physical grid."""
    U1, U2 = to_physical(v, oversample=2)
    m = 2 * v.grid.n
    q = U1 * U1 + U2 * U2
    integral = float(np.sum(q * q)) * (TWO_PI / m) ** 2
    return integral ** 0.25


def inner_l2(a: SpectralVelocity, b: SpectralVelocity) -> float:
    """Parseval inner product int a . b dx."""
    _require_same_grid(a, b)
    s = np.sum(np.conj(a.u1) * b.u1 + np.conj(a.u2) * b.u2)
    return (TWO_PI ** 2) * float(np.real(s))


def _scrub(d: np.ndarray, product_scale: float) -> np.ndarray:
    """Zero coefficients at the FFT roundoff floor of the product transform.

    Amplitudes below 1e-12 of the largest product coefficient are pure
    rounding noise (the transforms are accurate to ~1e-15 relative); left in
    place they sit at high wavenumbers and get amplified by |xi|^2 per level
    of the derivative recursion, which would destroy the closed-form flows.
    Scrubbing is positively homogeneous, so bilinearity holds exactly under
    scaling and to 1e-12 relative under addition.
    """
    if product_scale > 0.0:
        d[np.abs(d) < 1e-12 * product_scale] = 0.0
    return d


def _project_div_half(grid: Grid, T):
    """From product coefficients T = (T11, T12, T22) to -P div, rfft layout.

    T_ji holds the symmetric products needed for div(a (x) b)_i = d_j (a_j b_i)
    when T12 serves both off-diagonal slots.  Returns a (2, n, hc) stack.
    """
    hc = grid.half_cols
    mask = grid.dealias[:, :hc]
    k1 = grid.k1
    k2h = grid.k2[:, :hc]
    d = np.empty((2,) + T[0].shape, dtype=complex)
    d[0] = 1j * (k1 * T[0] + k2h * T[1]) * mask
    d[1] = 1j * (k1 * T[1] + k2h * T[2]) * mask
    s = (k1 * d[0] + k2h * d[1]) * grid.inv_k_sq[:, :hc]
    d[0] -= k1 * s
    d[1] -= k2h * s
    np.negative(d, out=d)
    return _scrub(d, float(np.max(np.abs(T))))


def _advect_same(grid: Grid, uh):
    """-P div(u (x) u) on a masked (2, n, hc) rfft-layout stack."""
    n = grid.n
    w = _fft_workers()
    scale = float(n) * n
    U = sfft.irfft2(uh, s=(n, n), axes=(-2, -1), workers=w) * scale
    P = np.empty((3, n, n))
    np.multiply(U[0], U[0], out=P[0])
    np.multiply(U[0], U[1], out=P[1])
    np.multiply(U[1], U[1], out=P[2])
    T = sfft.rfft2(P, axes=(-2, -1), workers=w)
    T *= 1.0 / scale
    return _project_div_half(grid, T)


def _advect_pair(grid: Grid, ah, bh, symmetric: bool):
    """-P div(a (x) b) (or the a<->b symmetrized sum) on masked stacks."""
    n = grid.n
    w = _fft_workers()
    scale = float(n) * n
    both = np.concatenate([ah, bh])
    U = sfft.irfft2(both, s=(n, n), axes=(-2, -1), workers=w) * scale
    A1, A2, B1, B2 = U
    if symmetric:
        P = np.stack([2.0 * A1 * B1, A1 * B2 + A2 * B1, 2.0 * A2 * B2])
        T = sfft.rfft2(P, axes=(-2, -1), workers=w)
        T *= 1.0 / scale
        return _project_div_half(grid, T)
    P = np.stack([A1 * B1, A1 * B2, A2 * B1, A2 * B2])
    T = sfft.rfft2(P, axes=(-2, -1), workers=w)
    T *= 1.0 / scale
    hc = grid.half_cols
    mask = grid.dealias[:, :hc]
    k1 = grid.k1
    k2h = grid.k2[:, :hc]
    d = np.empty((2, n, hc), dtype=complex)
    d[0] = 1j * (k1 * T[0] + k2h * T[2]) * mask
    d[1] = 1j * (k1 * T[1] + k2h * T[3]) * mask
    s = (k1 * d[0] + k2h * d[1]) * grid.inv_k_sq[:, :hc]
    d[0] -= k1 * s
    d[1] -= k2h * s
    np.negative(d, out=d)
    return _scrub(d, float(np.max(np.abs(T))))


def _masked_half_stack(v: SpectralVelocity) -> np.ndarray:
    g = v.grid
    mask = g.dealias[:, :g.half_cols]
    return np.stack([g.half(v.u1) * mask, g.half(v.u2) * mask])


def _field_from_half_stack(g: Grid, d: np.ndarray) -> SpectralVelocity:
    return _clean(g, g.full_from_half(d[0]), g.full_from_half(d[1]))


def nonlinear_term(a: SpectralVelocity, b: SpectralVelocity) -> SpectralVelocity:
    """Leray-projected advection -P div(a (x) b) with 2/3-rule dealiasing.

    Products are formed in physical space on the n-grid; with inputs
    truncated to |xi|_inf <= k_cut and 3 k_cut < n, the retained output
    modes are the exact convolution of the truncated inputs.  Bilinear in
    (a, b); the output is divergence-free.  Raises GridMismatchError if the
    grids differ.
    """
    _require_same_grid(a, b)
    g = a.grid
    if b is a:
        d = _advect_same(g, _masked_half_stack(a))
    else:
        d = _advect_pair(g, _masked_half_stack(a), _masked_half_stack(b), symmetric=False)
    return _field_from_half_stack(g, d)


def nonlinear_symmetric(a: SpectralVelocity, b: SpectralVelocity) -> SpectralVelocity:
    """-P div(a (x) b + b (x) a); equals nonlinear_term(a,b) + nonlinear_term(b,a)."""
    _require_same_grid(a, b)
    g = a.grid
    d = _advect_pair(g, _masked_half_stack(a), _masked_half_stack(b), symmetric=True)
    return _field_from_half_stack(g, d)


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def physical_grid(n: int) -> tuple[np.ndarray, np.ndarray]:
    x = np.arange(n) * (TWO_PI / n)
    return np.meshgrid(x, x, indexing="ij")


def taylor_green(grid: Grid, amplitude: float = 1.0) -> SpectralVelocity:
    """The vortex A (sin x cos y, -cos x sin y); its advection is a pure gradient.

    Coefficients are placed analytically (exact zeros off the four corner
    modes), so derivative stacks built on this field stay clean.
    """
    if amplitude <= 0:
        raise ConfigurationError("taylor_green amplitude must be positive")
    n = grid.n
    u1 = np.zeros((n, n), dtype=complex)
    u2 = np.zeros((n, n), dtype=complex)
    q = 0.25j * amplitude
    for s1 in (1, -1):
        for s2 in (1, -1):
            u1[s1 % n, s2 % n] = -q * s1
            u2[s1 % n, s2 % n] = q * s2
    return SpectralVelocity(grid, u1, u2)


def shear_flow(grid: Grid, amplitude: float = 1.0) -> SpectralVelocity:
    """The single-mode shear A (sin y, 0); u.grad u vanishes identically."""
    if amplitude <= 0:
        raise ConfigurationError("shear amplitude must be positive")
    n = grid.n
    u1 = np.zeros((n, n), dtype=complex)
    u2 = np.zeros((n, n), dtype=complex)
    u1[0, 1] = -0.5j * amplitude
    u1[0, -1 % n] = 0.5j * amplitude
    return SpectralVelocity(grid, u1, u2)


def random_spectrum_field(grid: Grid, decay: float, k_max: float, seed: int,
                          l2_norm: float | None = None) -> SpectralVelocity:
    """Random divergence-free field with |uhat(xi)| ~ |xi|^-decay up to |xi| <= k_max.

    Complex Gaussian amplitudes are Hermitian-symmetrized, Leray-projected,
    and optionally rescaled to a requested L2 norm.  Deterministic for a
    fixed seed.
    """
    if k_max < 1:
        raise ConfigurationError("random_spectrum needs k_max >= 1")
    rng = np.random.default_rng(seed)
    n = grid.n
    raw = rng.standard_normal((4, n, n))
    g1 = raw[0] + 1j * raw[1]
    g2 = raw[2] + 1j * raw[3]
    g1 = 0.5 * (g1 + mirror_coefficients(g1))
    g2 = 0.5 * (g2 + mirror_coefficients(g2))
    r = np.sqrt(grid.k_sq)
    with np.errstate(divide="ignore"):
        amp = np.where((r > 0) & (r <= k_max), r ** (-float(decay)), 0.0)
    v = leray_project(grid, g1 * amp, g2 * amp)
    if l2_norm is not None:
        base = norm_l2(v)
        if base == 0.0:
            raise ConfigurationError("random field is identically zero, cannot rescale")
        v = v * (float(l2_norm) / base)
    return v


_INITIAL_DATA_KEYS = {
    "taylor_green": {"amplitude"},
    "shear": {"amplitude"},
    "random_spectrum": {"decay", "k_max", "seed", "l2_norm"},
}


def make_initial_data(grid: Grid, spec: dict) -> SpectralVelocity:
    """Build initial data from a declarative description.

    spec is a dict with key "kind" in {taylor_green, shear, random_spectrum}
    plus that generator's parameters; unknown kinds or keys are rejected.
    """
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigurationError(f"initial data spec must be a dict with a 'kind', got {spec!r}")
    kind = spec["kind"]
    if kind not in _INITIAL_DATA_KEYS:
        raise ConfigurationError(f"unknown initial data kind {kind!r}")
    extra = set(spec) - _INITIAL_DATA_KEYS[kind] - {"kind"}
    if extra:
        raise ConfigurationError(f"unknown keys for {kind}: {sorted(extra)}")
    if kind == "taylor_green":
        return taylor_green(grid, float(spec.get("amplitude", 1.0)))
    if kind == "shear":
        return shear_flow(grid, float(spec.get("amplitude", 1.0)))
    missing = {"decay", "k_max", "seed"} - set(spec)
    if missing:
        raise ConfigurationError(f"random_spectrum needs keys {sorted(missing)}")
    l2 = spec.get("l2_norm")
    return random_spectrum_field(grid, float(spec["decay"]), float(spec["k_max"]),
                                 int(spec["seed"]), None if l2 is None else float(l2))


def mode_energies(v: SpectralVelocity) -> tuple[np.ndarray, np.ndarray]:
    """Energy (2pi)^2 |uhat|^2 grouped by the integer eigenvalue |xi|^2.

    Returns (lams, energies) with lams the sorted distinct |xi|^2 > 0 that
    carry energy.  Shells below 1e-28 of the total are rounding noise from
    physical-space construction and are dropped, so sum(energies) matches
    norm_l2(v)^2 to that relative accuracy.
    """
    lam = np.rint(v.grid.k_sq).astype(np.int64).ravel()
    e = (TWO_PI ** 2) * (np.abs(v.u1) ** 2 + np.abs(v.u2) ** 2).ravel()
    acc = np.bincount(lam, weights=e)
    floor = 1e-28 * float(np.sum(acc))
    lams = np.nonzero(acc > floor)[0]
    lams = lams[lams > 0]
    return lams.astype(float), acc[lams.astype(np.int64)]
