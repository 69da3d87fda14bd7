"""Mixed Fourier-Hermite coefficient space for A = -dxx - dyy + y^2.

The x line is truncated to the torus [-Lx, Lx) so the x transform is an
FFT; this is an approximation of the whole-line setting and is accurate
for the exponentially localized data used throughout (wrap-around below
1e-12 at the default Lx = 16).  Frozen conventions:

* grid           x_m = -Lx + 2 Lx m / Nx,  m = 0..Nx-1
* frequencies    xi_j = pi j / Lx,  j in [-Nx/2, Nx/2)
* expansion      u(x,y) = sum_{j,k} c[j,k] e^{i xi_j x} h_k(y) / sqrt(2 Lx)

Both transforms are unitary, so ||u||_{L^2}^2 = sum |c|^2 exactly for
band-limited fields, and the operator acts diagonally with symbol
lambda = xi^2 + 2k + 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache

import numpy as np

from .errors import (
    InvalidArgument,
    NumericalError,
    ResolutionError,
    ShapeError,
    Unsupported,
)
from .hermite import HermiteBasis, hermite_basis

__all__ = [
    "BasisSpec",
    "SpectralField",
    "Multiplier",
    "Trajectory",
    "BourgainParams",
    "make_spec",
    "unit_mode",
    "to_spectral",
    "to_physical",
    "apply_multiplier",
    "sobolev_norm",
    "equivalent_norm",
    "lp_cutoff",
    "lp_project",
    "indicator_project",
    "smooth_step",
    "default_window",
    "bourgain_norm",
    "bourgain_norm_modes",
    "grid_weights",
    "grid_lp_norm",
]


# ---------------------------------------------------------------------------
# basis specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class BasisSpec:
    """Discretization of the coefficient space.

    Attributes
    ----------
    Lx : float
        Half-period of the x torus.
    Nx : int
        Fourier mode count (even).
    basis : HermiteBasis
        Hermite modes and quadrature rule for the y direction.
    """

    Lx: float
    Nx: int
    basis: HermiteBasis

    def __post_init__(self):
        if self.Lx <= 0:
            raise InvalidArgument(f"Lx must be positive, got {self.Lx}")
        if self.Nx < 2 or self.Nx % 2:
            raise InvalidArgument(f"Nx must be even and >= 2, got {self.Nx}")

    @property
    def K(self) -> int:
        return self.basis.K

    @cached_property
    def j_index(self) -> np.ndarray:
        return np.fft.fftfreq(self.Nx, 1.0 / self.Nx).astype(np.int64)

    @cached_property
    def xi(self) -> np.ndarray:
        return math.pi * self.j_index / self.Lx

    @cached_property
    def x(self) -> np.ndarray:
        return -self.Lx + 2.0 * self.Lx * np.arange(self.Nx) / self.Nx

    @cached_property
    def lam(self) -> np.ndarray:
        """Eigenvalues xi_j^2 + 2k + 1 on the (Nx, K) mode grid."""
        k = np.arange(self.K)
        return self.xi[:, None] ** 2 + (2 * k + 1)[None, :]

    @cached_property
    def lam_max(self) -> float:
        return float((math.pi * self.Nx / (2 * self.Lx)) ** 2 + 2 * self.K - 1)

    @cached_property
    def _alt(self) -> np.ndarray:
        # e^{-i xi_j x_0} = (-1)^j accounts for the grid starting at -Lx
        return np.where(self.j_index % 2 == 0, 1.0, -1.0)

    @cached_property
    def pad_Nx(self) -> int:
        # 3/2 zero padding in x (2/3 dealiasing rule)
        return (3 * self.Nx) // 2

    @cached_property
    def _alt_pad(self) -> np.ndarray:
        jp = np.fft.fftfreq(self.pad_Nx, 1.0 / self.pad_Nx).astype(np.int64)
        return np.where(jp % 2 == 0, 1.0, -1.0)

    @cached_property
    def _pad_slots(self) -> np.ndarray:
        # positions of the Nx retained modes inside the padded index set
        h = self.Nx // 2
        return np.concatenate([np.arange(h), np.arange(self.pad_Nx - h, self.pad_Nx)])


def make_spec(Lx: float = 16.0, Nx: int = 256, K: int = 128, quad_nodes: int | None = None) -> BasisSpec:
    """Build a BasisSpec; the quadrature rule defaults to 2K nodes."""
    return BasisSpec(Lx, Nx, hermite_basis(K, quad_nodes))


# ---------------------------------------------------------------------------
# fields
# ---------------------------------------------------------------------------


@dataclass
class SpectralField:
    """Complex coefficient array c[j, k] on a BasisSpec."""

    spec: BasisSpec
    c: np.ndarray

    def __post_init__(self):
        self.c = np.ascontiguousarray(self.c, dtype=complex)
        if self.c.shape != (self.spec.Nx, self.spec.K):
            raise ShapeError(
                f"coefficients shape {self.c.shape} != {(self.spec.Nx, self.spec.K)}"
            )

    def copy(self) -> "SpectralField":
        return SpectralField(self.spec, self.c.copy())

    def norm(self) -> float:
        """L^2 norm (discrete Parseval)."""
        return float(np.linalg.norm(self.c))

    def _check_same(self, other):
        if other.spec is not self.spec and (
            other.spec.Lx != self.spec.Lx
            or other.spec.Nx != self.spec.Nx
            or other.spec.K != self.spec.K
        ):
            raise InvalidArgument("fields live on different specs")

    def __add__(self, other):
        self._check_same(other)
        return SpectralField(self.spec, self.c + other.c)

    def __sub__(self, other):
        self._check_same(other)
        return SpectralField(self.spec, self.c - other.c)

    def __mul__(self, scalar):
        return SpectralField(self.spec, self.c * scalar)

    __rmul__ = __mul__


def unit_mode(spec: BasisSpec, j: int, k: int) -> SpectralField:
    """Field with a single unit coefficient at integer frequency j, mode k."""
    c = np.zeros((spec.Nx, spec.K), dtype=complex)
    row = np.nonzero(spec.j_index == j)[0]
    if row.size == 0 or not 0 <= k < spec.K:
        raise InvalidArgument(f"mode (j={j}, k={k}) not resolved by spec")
    c[row[0], k] = 1.0
    return SpectralField(spec, c)


# ---------------------------------------------------------------------------
# transforms
# ---------------------------------------------------------------------------


def synthesize_grid(c: np.ndarray, spec: BasisSpec, padded: bool = False) -> np.ndarray:
    """Coefficients (Nx, K) -> physical samples on the (Mx, n) grid.

    With ``padded`` the x grid has 3Nx/2 points (zero-padded spectrum),
    which is what the cubic nonlinearity uses for dealiasing.
    """
    if padded:
        Mx = spec.pad_Nx
        cx = np.zeros((Mx, c.shape[1]), dtype=complex)
        cx[spec._pad_slots] = c
        alt = spec._alt_pad
    else:
        Mx = spec.Nx
        cx = c
        alt = spec._alt
    fx = np.fft.ifft(alt[:, None] * cx, axis=0) * (Mx / math.sqrt(2 * spec.Lx))
    return fx @ spec.basis.table


def analyze_grid(samples: np.ndarray, spec: BasisSpec, padded: bool = False) -> np.ndarray:
    """Physical samples on the (Mx, n) grid -> coefficients (Nx, K)."""
    Mx = spec.pad_Nx if padded else spec.Nx
    if samples.shape != (Mx, spec.basis.rule.n):
        raise ShapeError(
            f"sample grid {samples.shape} != {(Mx, spec.basis.rule.n)}"
        )
    fy = samples @ spec.basis.analysis
    alt = spec._alt_pad if padded else spec._alt
    cx = alt[:, None] * np.fft.fft(fy, axis=0) * (math.sqrt(2 * spec.Lx) / Mx)
    if padded:
        cx = cx[spec._pad_slots]
    return cx


def to_spectral(samples: np.ndarray, spec: BasisSpec) -> SpectralField:
    """Physical samples u(x_m, y_i) -> SpectralField (unitary transforms)."""
    return SpectralField(spec, analyze_grid(np.asarray(samples, dtype=complex), spec))


def to_physical(field: SpectralField) -> np.ndarray:
    """SpectralField -> physical samples on the (Nx, n) grid."""
    return synthesize_grid(field.c, field.spec)


def grid_weights(spec: BasisSpec, padded: bool = False) -> np.ndarray:
    """Quadrature weights on the physical grid: (2Lx/Mx) * w_i e^{y_i^2}."""
    Mx = spec.pad_Nx if padded else spec.Nx
    return np.broadcast_to(
        (2 * spec.Lx / Mx) * spec.basis.rule.comp_weights, (Mx, spec.basis.rule.n)
    )


def grid_lp_norm(samples: np.ndarray, spec: BasisSpec, p: float, padded: bool = False) -> float:
    """L^p norm of grid samples by quadrature (p >= 1, or inf)."""
    if np.isinf(p):
        return float(np.abs(samples).max())
    w = grid_weights(spec, padded)
    return float(((np.abs(samples) ** p) * w).sum() ** (1.0 / p))


# ---------------------------------------------------------------------------
# multipliers and diagonal calculus
# ---------------------------------------------------------------------------


class Multiplier:
    """Diagonal symbol m(xi, k) acting on coefficient space."""

    def __init__(self, symbol, name: str = "m"):
        self.symbol = symbol
        self.name = name

    def values(self, spec: BasisSpec) -> np.ndarray:
        k = np.arange(spec.K)
        return np.asarray(self.symbol(spec.xi[:, None], k[None, :]))

    def __mul__(self, other: "Multiplier") -> "Multiplier":
        return Multiplier(
            lambda xi, k: self.symbol(xi, k) * other.symbol(xi, k),
            name=f"{self.name}*{other.name}",
        )

    # common symbols ------------------------------------------------------

    @staticmethod
    def identity() -> "Multiplier":
        return Multiplier(lambda xi, k: np.ones(np.broadcast(xi, k).shape), "1")

    @staticmethod
    def a_power(s: float) -> "Multiplier":
        """(xi^2 + 2k + 1)^(s/2), the fractional power of A."""
        return Multiplier(lambda xi, k: (xi**2 + 2 * k + 1) ** (s / 2.0), f"A^{s/2}")

    @staticmethod
    def heat(t: float) -> "Multiplier":
        return Multiplier(lambda xi, k: np.exp(-t * (xi**2 + 2 * k + 1)), f"e^-{t}A")

    @staticmethod
    def schrodinger(t: float) -> "Multiplier":
        return Multiplier(lambda xi, k: np.exp(1j * t * (xi**2 + 2 * k + 1)), f"e^i{t}A")


def apply_multiplier(field: SpectralField, m: Multiplier) -> SpectralField:
    """c'[j,k] = m(xi_j, k) c[j,k].

    Raises NumericalError if the symbol is non-finite at a populated mode;
    unpopulated modes with a non-finite symbol contribute zero.
    """
    vals = m.values(field.spec)
    bad = ~np.isfinite(vals)
    if bad.any():
        populated = field.c != 0
        if (bad & populated).any():
            raise NumericalError(f"symbol {m.name} is non-finite at a populated mode")
        vals = np.where(bad, 0.0, vals)
    return SpectralField(field.spec, vals * field.c)


def sobolev_norm(field: SpectralField, s: float) -> float:
    """A-adapted Sobolev norm (sum (xi^2+2k+1)^s |c|^2)^(1/2)."""
    lam = field.spec.lam
    return float(math.sqrt(((lam**s) * np.abs(field.c) ** 2).sum()))


@lru_cache(maxsize=8)
def _flat_y_eig(K: int):
    """Eigendecomposition of -d^2/dy^2 compressed to the first K modes.

    Ladder form: diagonal (2k+1)/2, second off-diagonal -sqrt((k+1)(k+2))/2.
    """
    T = np.zeros((K, K))
    k = np.arange(K)
    T[k, k] = (2 * k + 1) / 2.0
    kk = np.arange(K - 2)
    off = -np.sqrt((kk + 1) * (kk + 2)) / 2.0
    T[kk, kk + 2] = off
    T[kk + 2, kk] = off
    w, V = np.linalg.eigh(T)
    w = np.clip(w, 0.0, None)
    w.setflags(write=False)
    V.setflags(write=False)
    return w, V


def equivalent_norm(field: SpectralField, s: float) -> float:
    """Flat-norm side of the Sobolev equivalence: (||D^s u||^2 + ||<y>^s u||^2)^(1/2).

    D^s carries the flat Fourier symbol (xi^2 + eta^2)^(s/2), realized
    exactly on the truncated basis through the eigendecomposition of the
    compressed flat Laplacian; <y>^s multiplies pointwise on the grid.
    """
    if s < 0:
        raise Unsupported(f"equivalent_norm requires s >= 0, got {s}")
    spec = field.spec
    if s == 0:
        dsq = float((np.abs(field.c) ** 2).sum())
    else:
        w, V = _flat_y_eig(spec.K)
        ct = field.c @ V
        flat = spec.xi[:, None] ** 2 + w[None, :]
        dsq = float(((flat**s) * np.abs(ct) ** 2).sum())
    samples = to_physical(field)
    ysq = 1.0 + spec.basis.rule.nodes**2
    msq = float(
        ((ysq**s)[None, :] * np.abs(samples) ** 2 * grid_weights(spec)).sum()
    )
    return math.sqrt(dsq + msq)


# ---------------------------------------------------------------------------
# Littlewood-Paley projectors
# ---------------------------------------------------------------------------


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1.

    Frozen closed form S(t) = r(t) / (r(t) + r(1-t)) with r(t) = exp(-1/t);
    all derivatives vanish at both endpoints.
    """
    t = np.asarray(t, dtype=float)
    tt = np.clip(t, 0.0, 1.0)
    with np.errstate(divide="ignore", over="ignore"):
        a = np.where(tt > 0.0, np.exp(-1.0 / np.where(tt > 0.0, tt, 1.0)), 0.0)
        b = np.where(tt < 1.0, np.exp(-1.0 / np.where(tt < 1.0, 1.0 - tt, 1.0)), 0.0)
    return a / (a + b)


def lp_cutoff(x):
    """Frozen smooth cutoff: phi(x) = 1 on [0,1], 0 on [2,inf), monotone.

    phi(x) = 1 - S(x - 1) on (1, 2) with the smooth_step S above.
    """
    x = np.asarray(x, dtype=float)
    return 1.0 - smooth_step(x - 1.0)


def _dyadic_ok(N: int) -> bool:
    return isinstance(N, (int, np.integer)) and N >= 1 and (N & (N - 1)) == 0


def lp_project(field: SpectralField, N: int, kind: str = "S") -> SpectralField:
    """Littlewood-Paley projector S_N (kind='S') or Delta_N (kind='delta').

    S_N multiplies by phi(lambda/N^2); Delta_N by
    psi_N(lambda) = phi(lambda/N^2) - phi(4 lambda/N^2).  The N=1 block is
    folded into S_1, so Delta_N requires N >= 2.  The family telescopes:
    S_1 + sum_{N=2..Nmax} Delta_N = S_{Nmax}.
    """
    if not _dyadic_ok(N):
        raise InvalidArgument(f"N must be a dyadic integer (1, 2, 4, ...), got {N}")
    lam = field.spec.lam
    if kind == "S":
        m = lp_cutoff(lam / N**2)
    elif kind in ("delta", "D"):
        if N < 2:
            raise InvalidArgument("Delta_N requires N >= 2 (N=1 is folded into S_1)")
        m = lp_cutoff(lam / N**2) - lp_cutoff(4.0 * lam / N**2)
    else:
        raise InvalidArgument(f"kind must be 'S' or 'delta', got {kind!r}")
    return SpectralField(field.spec, m * field.c)


def indicator_project(field: SpectralField, lam: int) -> SpectralField:
    """Sharp projector onto modes with sqrt(xi^2+2k+1) in [lam, lam+1)."""
    if lam < 0:
        raise InvalidArgument(f"lambda must be >= 0, got {lam}")
    root = np.sqrt(field.spec.lam)
    mask = (root >= lam) & (root < lam + 1)
    return SpectralField(field.spec, np.where(mask, field.c, 0.0))


# ---------------------------------------------------------------------------
# trajectories and Bourgain norms
# ---------------------------------------------------------------------------


@dataclass
class Trajectory:
    """Uniformly sampled time series of coefficient arrays."""

    spec: BasisSpec
    t0: float
    dt: float
    coeffs: np.ndarray  # (frames, Nx, K) complex

    def __post_init__(self):
        self.coeffs = np.ascontiguousarray(self.coeffs, dtype=complex)
        if self.coeffs.ndim != 3 or self.coeffs.shape[0] < 2:
            raise ShapeError("trajectory needs at least 2 frames of (Nx, K) arrays")
        if self.coeffs.shape[1:] != (self.spec.Nx, self.spec.K):
            raise ShapeError(
                f"frame shape {self.coeffs.shape[1:]} != {(self.spec.Nx, self.spec.K)}"
            )
        if self.dt <= 0:
            raise InvalidArgument("dt must be positive")

    @property
    def nframes(self) -> int:
        return self.coeffs.shape[0]

    @property
    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.nframes)

    def frame(self, i: int) -> SpectralField:
        return SpectralField(self.spec, self.coeffs[i].copy())

    @classmethod
    def from_fields(cls, fields, t0: float, dt: float) -> "Trajectory":
        return cls(fields[0].spec, t0, dt, np.stack([f.c for f in fields]))


@dataclass
class BourgainParams:
    """Parameters of the windowed X^{s,b} norm.

    ``window`` maps normalized time theta in [0,1] to [0,1] and must
    vanish at both ends; the default is the frozen cutoff profile equal
    to 1 on the middle half of the interval.  ``pad`` zero-pads the time
    DFT to refine the modulation frequency grid.
    """

    s: float
    b: float
    window: object = None
    pad: int = 4

    def __post_init__(self):
        if not 0.0 <= self.b <= 1.0:
            raise InvalidArgument(f"b must lie in [0, 1], got {self.b}")
        if self.pad < 1:
            raise InvalidArgument("pad must be >= 1")

    def window_values(self, nframes: int) -> np.ndarray:
        theta = np.arange(nframes) / (nframes - 1)
        chi = default_window(theta) if self.window is None else np.asarray(self.window(theta), dtype=float)
        if chi.shape != (nframes,):
            raise ShapeError("window must return one value per frame")
        if chi.min() < 0 or chi.max() > 1 + 1e-12:
            raise InvalidArgument("window values must lie in [0, 1]")
        if abs(chi[0]) > 1e-12 or abs(chi[-1]) > 1e-12:
            raise InvalidArgument("window must vanish at the frame range ends")
        return chi


def default_window(theta):
    """Frozen time cutoff: 1 on [1/4, 3/4], smooth to 0 at 0 and 1."""
    theta = np.asarray(theta, dtype=float)
    return smooth_step(4.0 * theta) * smooth_step(4.0 * (1.0 - theta))


_AGREEMENT_TOL = 1e-8


def bourgain_norm_modes(
    coeffs: np.ndarray,
    lam: np.ndarray,
    dt: float,
    params: BourgainParams,
    chunk: int = 8192,
) -> tuple[float, float]:
    """Windowed X^{s,b} norm of mode time series.

    ``coeffs`` has shape (frames, modes) with eigenvalues ``lam`` per
    column.  Two equivalent computational forms are evaluated and both
    returned (preferred shifted-weight form first): (i) conjugation by
    the free flow followed by the time DFT with weight <tau>^{2b}, and
    (ii) the direct DFT of the windowed series with weight
    <tau + lambda>^{2b}.  The conjugation phase uses the eigenvalue
    rounded to the DFT frequency lattice so the two forms are exactly
    equivalent finite sums; their agreement cross-checks the code paths.

    Raises ResolutionError if fewer than 16 frames are given, if the
    phase Nyquist bound dt*max(lam) <= pi fails, or if the two forms
    disagree beyond 1e-8 relative.
    """
    coeffs = np.asarray(coeffs, dtype=complex)
    F, M = coeffs.shape
    if F < 16:
        raise ResolutionError(f"Bourgain norm needs >= 16 frames, got {F}")
    lam = np.asarray(lam, dtype=float)
    if lam.shape != (M,):
        raise ShapeError("one eigenvalue per mode column required")
    if M and dt * lam.max() > math.pi * (1 + 1e-12):
        raise ResolutionError(
            f"phase Nyquist violated: dt*lam_max = {dt * lam.max():.3g} > pi"
        )
    chi = params.window_values(F)
    Fp = F * params.pad
    tau = 2 * math.pi * np.fft.fftfreq(Fp, d=dt)
    dtau = 2 * math.pi / (Fp * dt)
    t = dt * np.arange(F)
    shift = np.round(lam / dtau).astype(np.int64)
    lam_r = shift * dtau
    sw = (1.0 + lam**2) ** (params.s / 2.0)  # <lambda>^s, per mode
    tw = (1.0 + tau**2) ** params.b  # <tau>^{2b}, per bin
    idx_base = np.arange(Fp)

    a2 = 0.0
    b2 = 0.0
    buf = np.zeros((Fp, min(chunk, M)), dtype=complex)
    for lo in range(0, M, chunk):
        hi = min(lo + chunk, M)
        blk = buf[:, : hi - lo]
        blk[F:] = 0.0
        # form A: conjugate by the (lattice-rounded) free flow
        blk[:F] = chi[:, None] * coeffs[:, lo:hi] * np.exp(-1j * np.outer(t, lam_r[lo:hi]))
        vh = np.fft.ifft(blk, axis=0)
        a2 += float((tw[:, None] * sw[None, lo:hi] * (vh.real**2 + vh.imag**2)).sum())
        # form B: direct transform, weight shifted per mode (wrapped lattice)
        blk[:F] = chi[:, None] * coeffs[:, lo:hi]
        vh = np.fft.ifft(blk, axis=0)
        wshift = tw[(idx_base[:, None] + shift[None, lo:hi]) % Fp]
        b2 += float((wshift * sw[None, lo:hi] * (vh.real**2 + vh.imag**2)).sum())
    # ifft carries 1/Fp; |dt*Fp*ifft|^2 summed over bins /(Fp*dt) = dt*Fp*sum|ifft|^2
    scale = dt * Fp
    normB = math.sqrt(b2 * scale)
    normA = math.sqrt(a2 * scale)
    if normB > 0 and abs(normA - normB) > _AGREEMENT_TOL * normB:
        raise ResolutionError(
            "Bourgain norm computational forms disagree: "
            f"{normA:.12e} vs {normB:.12e}"
        )
    return normB, normA


def bourgain_norm(traj: Trajectory, params: BourgainParams, chunk: int = 8192) -> float:
    """Windowed X^{s,b} norm of a trajectory (preferred-form value)."""
    if traj.nframes < 16:
        raise ResolutionError(f"Bourgain norm needs >= 16 frames, got {traj.nframes}")
    if traj.dt * traj.spec.lam_max > math.pi * (1 + 1e-12):
        raise ResolutionError(
            "phase Nyquist violated: dt*lam_max = "
            f"{traj.dt * traj.spec.lam_max:.3g} > pi"
        )
    F = traj.nframes
    flat = traj.coeffs.reshape(F, -1)
    lam = traj.spec.lam.reshape(-1)
    populated = np.any(flat != 0, axis=0)
    if not populated.any():
        return 0.0
    value, _ = bourgain_norm_modes(flat[:, populated], lam[populated], traj.dt, params, chunk)
    return value
