"""Monte-Carlo measurement of the scaling laws of the core inequalities.

Each ``verify_*`` op samples random spectrally-localized data, evaluates
both sides of an inequality, and fits the dyadic-parameter exponent of
the ratio (or checks stability under resolution doubling when the claim
is plain boundedness).  Constants are always reported and never
asserted: verdicts rest on fitted exponents and stability only; noisy
two-sided fits with R^2 < 0.9 come back INCONCLUSIVE rather than FAIL.

Data and discretization choices (documented, seed-deterministic):

* On the x torus the free flow has exact frequency resonances, so the
  x-localized sector of a dyadic block contributes no bilinear decay for
  random data (on the full line that decay comes from dispersion the
  torus cannot represent).  The bilinear laws are therefore probed on
  the Hermite-dominated core of each block, lambda in [N^2/2, N^2] with
  2k+1 carrying the scale, which caps the measurable dyadic range at
  N <= 16 (the core needs K ~ N^2/2 Hermite modes; N = 64 would need
  K ~ 8192, far beyond desk scale).
* Bilinear time integrals are evaluated in mode space through the exact
  quadruple-overlap kernel (the y overlaps of mode pairs and the closed
  form of int_0^T e^{it Delta} dt), equivalent to the trapezoid
  trajectory route, which is retained and cross-checked in the tests.
* Bernstein cells draw reproducing-kernel bumps at random centers: an
  i.i.d. Gaussian field has L^q/L^p ratios independent of the block, so
  only concentrated data can exhibit the s + 2/p - 2/q gain.
* Hermite-dominated almost-orthogonality pairings decay to ~1e-150
  while grid quadrature carries a ~1e-16 roundoff floor; those cells use
  an exact finite closed form for the quadruple overlaps (polynomial
  linearization + Gaussian generating function) carried in log space,
  cross-validated against quadrature where both resolve.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from functools import lru_cache
from math import lgamma

import numpy as np

from . import __version__
from .errors import EmptySample, InvalidArgument
from .hermite import hermite_basis
from .spectral import (
    BasisSpec,
    BourgainParams,
    SpectralField,
    analyze_grid,
    bourgain_norm_modes,
    grid_lp_norm,
    grid_weights,
    lp_cutoff,
    make_spec,
    synthesize_grid,
)

__all__ = [
    "SweepPlan",
    "EstimateReport",
    "verify_strichartz",
    "verify_bilinear_h1",
    "verify_bilinear_l2",
    "verify_bilinear_bourgain",
    "verify_almost_orthogonality",
    "verify_bernstein",
    "verify_trilinear",
    "log_quadruple_overlap",
    "fit_loglog",
    "bilinear_lhs_trajectory",
]

_LOG2 = math.log(2.0)
_LOGPI = math.log(math.pi)


# ---------------------------------------------------------------------------
# plans and reports
# ---------------------------------------------------------------------------


@dataclass
class SweepPlan:
    """Knobs shared by the estimate experiments.

    ``M``/``N_values`` are the dyadic sets for the bilinear sweeps;
    ``lambda0_values`` drive the almost-orthogonality cells.  ``b`` is
    the modulation exponent for the b < 1/2 estimates, ``b_embed`` for
    the embedding-type ones.
    """

    samples: int = 32
    seed: int = 0
    T: float = 1.0
    b: float = 0.4
    b_embed: float = 0.6
    bprime: float = 0.35
    delta: float = 0.1
    eps: float = 0.1
    M: int = 4
    N_values: tuple = (8, 16, 32, 64)
    lambda0_values: tuple = (16, 32, 64)
    frames_per_unit: int = 128
    threads: int = 1

    def __post_init__(self):
        self.N_values = tuple(int(n) for n in self.N_values)
        self.lambda0_values = tuple(int(v) for v in self.lambda0_values)
        if self.samples < 8:
            raise InvalidArgument("plans need at least 8 samples per cell")
        if self.T <= 0:
            raise InvalidArgument("sweep horizon must be positive")
        for N in self.N_values:
            if not _dyadic(N):
                raise InvalidArgument(f"N values must be dyadic, got {N}")
        if not _dyadic(self.M):
            raise InvalidArgument(f"M must be dyadic, got {self.M}")
        if self.N_values and self.M > min(self.N_values):
            raise InvalidArgument("plan requires M <= N for every cell")

    def echo(self) -> dict:
        d = asdict(self)
        d["N_values"] = list(self.N_values)
        d["lambda0_values"] = list(self.lambda0_values)
        return d


@dataclass
class EstimateReport:
    """Serializable result of one estimate experiment."""

    experiment: str
    plan: dict
    cells: list
    fit: dict | None
    stability: dict | None
    verdict: str
    constants: dict
    version: str = __version__

    def to_json_dict(self) -> dict:
        return {
            "experiment": self.experiment,
            "plan": self.plan,
            "cells": self.cells,
            "fit": self.fit,
            "stability": self.stability,
            "verdict": self.verdict,
            "constants": self.constants,
            "version": self.version,
        }

    def csv_columns(self) -> dict:
        keys = [
            k
            for k in self.cells[0]
            if not isinstance(self.cells[0][k], (list, str))
        ]
        cols = {k: [] for k in keys}
        cols["sample"] = []
        cols["value"] = []
        for cell in self.cells:
            vals = cell.get("values", [cell.get("max")])
            for i, v in enumerate(vals):
                for k in keys:
                    cols[k].append(cell[k])
                cols["sample"].append(i)
                cols["value"].append(v)
        return cols


def _dyadic(N) -> bool:
    return isinstance(N, (int, np.integer)) and N >= 1 and (N & (N - 1)) == 0


def fit_loglog(xs, ys):
    """Least-squares slope of y against log(x) with R^2 (y already log)."""
    lx = np.log(np.asarray(xs, dtype=float))
    ly = np.asarray(ys, dtype=float)
    slope, intercept = np.polyfit(lx, ly, 1)
    pred = slope * lx + intercept
    ss_res = ((ly - pred) ** 2).sum()
    ss_tot = ((ly - ly.mean()) ** 2).sum()
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return float(slope), float(intercept), float(r2)


def _slope_verdict(slope, expected, tol, r2) -> str:
    if r2 < 0.9:
        return "INCONCLUSIVE"
    return "PASS" if abs(slope - expected) <= tol else "FAIL"


def _cell_rng(seed, *idx):
    return np.random.default_rng(
        np.random.SeedSequence([int(seed)] + [int(i) for i in idx])
    )


def _run_cells(fn, cells, threads):
    if threads <= 1:
        return [fn(c) for c in cells]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, cells))


def _embed_rows(c, small: BasisSpec, big: BasisSpec) -> np.ndarray:
    """Map coefficients onto a finer-x spec (same Lx, K; Nx multiplied)."""
    out = np.zeros((big.Nx, big.K), dtype=complex)
    out[small.j_index % big.Nx, : small.K] = c
    return out


# ---------------------------------------------------------------------------
# random data generators
# ---------------------------------------------------------------------------


def _ball_field(spec: BasisSpec, lam_cap: float, rng, decay: float = 0.0) -> SpectralField:
    """Unit-norm iid field populated on lambda <= lam_cap."""
    mask = spec.lam <= lam_cap
    c = np.zeros((spec.Nx, spec.K), dtype=complex)
    cnt = int(mask.sum())
    c[mask] = rng.normal(size=cnt) + 1j * rng.normal(size=cnt)
    if decay:
        c *= spec.lam ** (-decay / 2.0)
    f = SpectralField(spec, c)
    return f * (1.0 / f.norm())


def _core_block_modes(N: int, lx: float, rng, max_modes: int):
    """Random unit sample on the Hermite-carried core of the N block.

    Modes satisfy lambda = xi_j^2 + 2k + 1 in [N^2/2, N^2] (where the
    block profile equals 1, so the sample is exactly Delta_N-localized)
    with 2k+1 >= lambda/2 carrying the scale.  Returns (j, k, coeffs,
    lam) arrays for a random subset of at most ``max_modes`` modes.
    """
    lo, hi = N * N / 2.0, float(N * N)
    jmax = int(math.floor(math.sqrt(hi / 2.0) * lx / math.pi))
    modes = []
    for j in range(-jmax, jmax + 1):
        xi2 = (math.pi * j / lx) ** 2
        kmin = int(math.ceil((max(lo - xi2, lo / 2.0) - 1) / 2.0))
        kmax = int(math.floor((hi - xi2 - 1) / 2.0))
        for k in range(max(kmin, 0), kmax + 1):
            lam = xi2 + 2 * k + 1
            if lo <= lam <= hi and 2 * k + 1 >= lam / 2.0:
                modes.append((j, k, lam))
    if not modes:
        raise EmptySample(f"block N={N} has no core modes at Lx={lx}")
    if len(modes) > max_modes:
        pick = rng.choice(len(modes), size=max_modes, replace=False)
        modes = [modes[i] for i in sorted(pick)]
    j = np.array([m[0] for m in modes], dtype=np.int64)
    k = np.array([m[1] for m in modes], dtype=np.int64)
    lam = np.array([m[2] for m in modes])
    c = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    c = c.astype(complex) / np.linalg.norm(c)
    return j, k, c, lam


# ---------------------------------------------------------------------------
# Strichartz
# ---------------------------------------------------------------------------


def _admissible(q: float, r: float) -> bool:
    if not (2 < q <= math.inf and 2 <= r < math.inf):
        return False
    lhs = 0.0 if math.isinf(q) else 2.0 / q
    return abs(lhs - 2.0 * (0.5 - 1.0 / r)) < 1e-12


def _free_lqlr(phi: SpectralField, q, r, T, frames, eval_spec=None) -> float:
    """||e^{itA} phi||_{L^q((0,T); L^r)} by trajectory quadrature.

    ``eval_spec`` supplies a finer x grid for the L^r quadrature (|u|^r
    has r times the data bandwidth).
    """
    spec = phi.spec
    big = eval_spec if eval_spec is not None else spec
    dt = T / (frames - 1)
    vals = np.empty(frames)
    for i in range(frames):
        c = np.exp(1j * (i * dt) * spec.lam) * phi.c
        if r == 2:
            vals[i] = float(np.linalg.norm(c))
        else:
            u = synthesize_grid(_embed_rows(c, spec, big), big)
            vals[i] = grid_lp_norm(u, big, r)
    if math.isinf(q):
        return float(vals.max())
    w = np.full(frames, dt)
    w[0] = w[-1] = dt / 2
    return float((w * vals**q).sum() ** (1.0 / q))


def verify_strichartz(
    spec: BasisSpec | None, q: float, r: float, plan: SweepPlan, check_stability: bool = True
) -> EstimateReport:
    """Boundedness of the local L^q L^r norm of the free flow on unit data.

    Reports the max/mean ratio over random unit-L^2 data populated on
    lambda <= lam_max/2 and, when ``check_stability``, the change of the
    max ratio when Nx and K double (the data cap doubles with them).
    """
    if not _admissible(q, r):
        raise InvalidArgument(f"(q, r) = ({q}, {r}) is not admissible")
    base = spec if spec is not None else make_spec(Lx=8.0, Nx=64, K=32)
    frames = int(plan.frames_per_unit * plan.T) + 1

    def run(sp):
        big = make_spec(Lx=sp.Lx, Nx=4 * sp.Nx, K=sp.K, quad_nodes=sp.basis.rule.n)
        ratios = []
        for s_idx in range(plan.samples):
            rng = _cell_rng(plan.seed, 0, s_idx)
            phi = _ball_field(sp, sp.lam_max / 2.0, rng)
            ratios.append(_free_lqlr(phi, q, r, plan.T, frames, big))
        return np.array(ratios)

    base_ratios = run(base)
    cells = [
        {
            "q": -1.0 if math.isinf(q) else q,
            "r": r,
            "Nx": base.Nx,
            "K": base.K,
            "max": float(base_ratios.max()),
            "mean": float(base_ratios.mean()),
            "values": [float(v) for v in base_ratios],
        }
    ]
    stability = None
    verdict = "PASS"
    if check_stability:
        fine = make_spec(Lx=base.Lx, Nx=2 * base.Nx, K=2 * base.K)
        fine_ratios = run(fine)
        factor = float(fine_ratios.max() / base_ratios.max())
        stability = {
            "base_max": float(base_ratios.max()),
            "doubled_max": float(fine_ratios.max()),
            "factor": factor,
        }
        cells.append(
            {
                "q": -1.0 if math.isinf(q) else q,
                "r": r,
                "Nx": fine.Nx,
                "K": fine.K,
                "max": float(fine_ratios.max()),
                "mean": float(fine_ratios.mean()),
                "values": [float(v) for v in fine_ratios],
            }
        )
        verdict = "PASS" if max(factor, 1.0 / factor) < 2.0 else "FAIL"
    return EstimateReport(
        "strichartz",
        {**plan.echo(), "q": "inf" if math.isinf(q) else q, "r": r},
        cells,
        None,
        stability,
        verdict,
        {"max_ratio": float(base_ratios.max())},
    )


# ---------------------------------------------------------------------------
# bilinear estimates: exact mode-space kernel
# ---------------------------------------------------------------------------


@lru_cache(maxsize=4)
def _triple_overlap_table(ka_max: int, kb_max: int):
    """G[kb, ka, m] = int h_ka h_kb h_m dy for m = 0..ka_max+kb_max+31.

    The product of two Hermite *functions* carries the weight e^{-y^2},
    so its expansion over {h_m} is infinite; the coefficients decay like
    3^{-(m - ka - kb)/2} past m = ka + kb and the table keeps a 32-mode
    tail margin, which truncates the completeness sum
    sum_m G(ka,kb;m) G(ka',kb';m) = int h_ka h_kb h_ka' h_kb' dy
    below 1e-14.
    """
    m_dim = ka_max + kb_max + 32
    n = 2 * (ka_max + kb_max + m_dim) + 16
    basis = hermite_basis(m_dim, n=max(n, 2 * m_dim))
    tab = basis.table
    w = basis.rule.comp_weights
    G = np.empty((kb_max + 1, ka_max + 1, m_dim))
    for kb in range(kb_max + 1):
        base = tab[: ka_max + 1] * (tab[kb] * w)[None, :]
        G[kb] = base @ tab[:m_dim].T
    return G


def _phase_integral(D: np.ndarray, T: float) -> np.ndarray:
    """int_0^T e^{i t D} dt elementwise, with the D -> 0 limit."""
    small = np.abs(D) < 1e-12
    Ds = np.where(small, 1.0, D)
    out = (np.exp(1j * T * Ds) - 1.0) / (1j * Ds)
    return np.where(small, T + 0.0j, out)


def _bilinear_lhs_modes(a, b, lx, T, sobolev_s, kernel=None, k_bounds=None):
    """int_0^T ||(e^{itA}u_a)(e^{itA}u_b)||_{H^s}^2 dt, exact in time.

    ``a``/``b`` are (j, k, coeffs, lam) mode tuples.  Expands the product
    over its exact Hermite modes via the triple-overlap table and sums
    the quadruple interactions with the closed-form phase integral
    (``kernel`` overrides it with a tabulated window kernel of Delta).
    """
    ja, ka, ca, la = a
    jb, kb, cb, lb = b
    if k_bounds is None:
        k_bounds = (int(ka.max()), int(kb.max()))
    G = _triple_overlap_table(*k_bounds)
    m_dim = G.shape[2]
    # all pairs, grouped by the total x frequency
    jp = (ja[:, None] + jb[None, :]).ravel()
    kap = np.broadcast_to(ka[:, None], (ka.size, kb.size)).ravel()
    kbp = np.broadcast_to(kb[None, :], (ka.size, kb.size)).ravel()
    zp = (ca[:, None] * cb[None, :]).ravel()
    lp = (la[:, None] + lb[None, :]).ravel()
    total = 0.0
    for n in np.unique(jp):
        sel = jp == n
        z = zp[sel]
        lam_tot = lp[sel]
        Mm = G[kbp[sel], kap[sel], :]
        if sobolev_s == 0:
            W = Mm @ Mm.T
        else:
            xi_n = math.pi * n / lx
            m = np.arange(m_dim)
            weight = (xi_n**2 + 2 * m + 1) ** sobolev_s
            W = (Mm * weight[None, :]) @ Mm.T
        D = lam_tot[:, None] - lam_tot[None, :]
        S = kernel(D) if kernel is not None else _phase_integral(D, T)
        total += float(np.real((z[:, None] * np.conj(z)[None, :]) * S * W).sum())
    return total / (2.0 * lx)


def bilinear_lhs_trajectory(a, b, lx, T, sobolev_s, frames, spec, prod_spec):
    """Trajectory/trapezoid route for the same bilinear time integral.

    Retained as the independent cross-check of the mode-space kernel:
    synthesizes both free evolutions per frame, multiplies on the grid,
    analyzes the product and integrates the squared H^s norm.
    """
    ja, ka, ca, la = a
    jb, kb, cb, lb = b
    c1 = np.zeros((spec.Nx, spec.K), dtype=complex)
    c1[ja % spec.Nx, ka] = ca
    c2 = np.zeros((spec.Nx, spec.K), dtype=complex)
    c2[jb % spec.Nx, kb] = cb
    dt = T / (frames - 1)
    vals = np.empty(frames)
    for i in range(frames):
        ph = np.exp(1j * (i * dt) * spec.lam)
        u = synthesize_grid(_embed_rows(ph * c1, spec, prod_spec), prod_spec)
        v = synthesize_grid(_embed_rows(ph * c2, spec, prod_spec), prod_spec)
        cw = analyze_grid(u * v, prod_spec)
        vals[i] = float((prod_spec.lam**sobolev_s * np.abs(cw) ** 2).sum())
    w = np.full(frames, dt)
    w[0] = w[-1] = dt / 2
    return float((w * vals).sum())


_BILINEAR_LX = 2.0
_BILINEAR_MAX_MODES = 256


def _verify_bilinear_free(name, sobolev_s, expected_slope, plan):
    M = plan.M

    def run_cell(args):
        ci, N = args
        rng = _cell_rng(plan.seed, ci)
        vals = []
        for _ in range(plan.samples):
            a = _core_block_modes(N, _BILINEAR_LX, rng, _BILINEAR_MAX_MODES)
            b = _core_block_modes(M, _BILINEAR_LX, rng, 64)
            if not np.abs(a[2]).sum() or not np.abs(b[2]).sum():
                raise EmptySample("bilinear factor is identically zero")
            kb_cell = ((N * N - 1) // 2, (M * M - 1) // 2)
            vals.append(
                _bilinear_lhs_modes(
                    a, b, _BILINEAR_LX, plan.T, sobolev_s, k_bounds=kb_cell
                )
            )
        return vals

    results = _run_cells(run_cell, list(enumerate(plan.N_values)), plan.threads)
    cells = []
    for N, vals in zip(plan.N_values, results):
        arr = np.array(vals)
        norm_factor = M * N if name == "bilinear-h1" else M / N
        cells.append(
            {
                "M": M,
                "N": N,
                "max": float(arr.max()),
                "mean": float(arr.mean()),
                "ratio_max": float(arr.max() / norm_factor),
                "ratio_mean": float(arr.mean() / norm_factor),
                "values": [float(v) for v in arr],
            }
        )
    means = [c["mean"] for c in cells]
    if len(cells) >= 2:
        slope, intercept, r2 = fit_loglog(plan.N_values, np.log(means))
        tol = 0.3
        fit = {
            "slope": slope,
            "intercept": intercept,
            "r2": r2,
            "expected": expected_slope,
            "tolerance": tol,
        }
        verdict = _slope_verdict(slope, expected_slope, tol, r2)
    else:
        fit = None
        verdict = "PASS" if all(np.isfinite(means)) else "FAIL"
    return EstimateReport(
        name,
        plan.echo(),
        cells,
        fit,
        None,
        verdict,
        {"max_ratio": max(c["ratio_max"] for c in cells)},
    )


def verify_bilinear_h1(spec: BasisSpec | None, plan: SweepPlan) -> EstimateReport:
    """H^1 bilinear law: int ||u_N v_M||_{H^1}^2 dt ~ C_T M N on unit blocks."""
    return _verify_bilinear_free("bilinear-h1", 1.0, 1.0, plan)


def verify_bilinear_l2(spec: BasisSpec | None, plan: SweepPlan) -> EstimateReport:
    """L^2 bilinear law: int ||u_N v_M||_{L^2}^2 dt ~ C_T M / N on unit blocks."""
    return _verify_bilinear_free("bilinear-l2", 0.0, -1.0, plan)


# ---------------------------------------------------------------------------
# bilinear estimate in Bourgain norms
# ---------------------------------------------------------------------------


def _scalar_envelope(F, T, rng, b, band=8):
    """One random band-limited modulation envelope on the frame grid."""
    t = np.linspace(0.0, T, F)
    env = np.zeros(F, dtype=complex)
    for l in range(-band, band + 1):
        g = rng.normal() + 1j * rng.normal()
        env += g * np.exp(2j * math.pi * l * t / T) / (1.0 + abs(l)) ** (b + 0.55)
    return env


def _window_kernel(weight_t, t):
    """Tabulated S_w(Delta) = int w(t) e^{i t Delta} dt with interpolation.

    The Delta grid step 0.1/T is fine against the kernel's 2 pi / T
    oscillation scale, so linear interpolation is safe at the few-1e-3
    level, ample for ratio statistics.
    """
    T = float(t[-1])
    dt = float(t[1] - t[0])
    wts = np.full(t.size, dt)
    wts[0] = wts[-1] = dt / 2.0
    wq = weight_t * wts
    state = {"dmax": -1.0, "tab": None}

    def kernel(D):
        dmax = float(np.abs(D).max()) if D.size else 1.0
        if state["tab"] is None or state["dmax"] < dmax:
            step = 0.1 / T
            deltas = np.arange(-dmax - step, dmax + 2 * step, step)
            state["tab"] = (deltas, np.exp(1j * np.outer(deltas, t)) @ wq)
            state["dmax"] = dmax
        deltas, table = state["tab"]
        return np.interp(D, deltas, table.real) + 1j * np.interp(D, deltas, table.imag)

    return kernel


def verify_bilinear_bourgain(spec: BasisSpec | None, plan: SweepPlan) -> EstimateReport:
    """Bourgain-norm bilinear law on modulated free solutions.

    Data are Delta_N-localized free flows times one random H^b-type
    scalar envelope per field; the ratio is
    ||(chi u_N)(chi v_M)||_{L^2 L^2} / (M^d (M/N)^{1/2-d} X_N X_M) with
    X the windowed X^{0,b} norms.  The fitted N slope of the
    unnormalized ratio is expected at -(1/2 - d).
    """
    d = plan.delta
    M = plan.M
    T = plan.T / 2.0
    params = BourgainParams(0.0, plan.b, pad=4)

    def run_cell(args):
        ci, N = args
        rng = _cell_rng(plan.seed, 100 + ci)
        lam_cap = float(N * N)
        F = max(96, int(math.ceil(T * lam_cap / 2.5)) + 1)
        dt = T / (F - 1)
        t = np.linspace(0.0, T, F)
        chi = params.window_values(F)
        out = []
        for _ in range(plan.samples):
            a = _core_block_modes(N, _BILINEAR_LX, rng, _BILINEAR_MAX_MODES)
            b_modes = _core_block_modes(M, _BILINEAR_LX, rng, 64)
            ga = _scalar_envelope(F, T, rng, plan.b)
            gb = _scalar_envelope(F, T, rng, plan.b)
            ua = ga[:, None] * np.exp(1j * np.outer(t, a[3])) * a[2][None, :]
            vb = gb[:, None] * np.exp(1j * np.outer(t, b_modes[3])) * b_modes[2][None, :]
            xn, _ = bourgain_norm_modes(ua, a[3], dt, params)
            xm, _ = bourgain_norm_modes(vb, b_modes[3], dt, params)
            # windowed product norm via the mode kernel: the time factor
            # of every quadruple is int chi^2 |ga|^2 |gb|^2 e^{itD} dt
            wt = (chi**2) * np.abs(ga) ** 2 * np.abs(gb) ** 2
            kernel = _window_kernel(wt, t)
            lhs_sq = _bilinear_lhs_modes(
                a, b_modes, _BILINEAR_LX, T, 0.0, kernel=kernel,
                k_bounds=((N * N - 1) // 2, (M * M - 1) // 2),
            )
            lhs = math.sqrt(max(lhs_sq, 0.0))
            out.append(lhs / (xn * xm))
        return out

    results = _run_cells(run_cell, list(enumerate(plan.N_values)), plan.threads)
    cells = []
    for N, vals in zip(plan.N_values, results):
        arr = np.array(vals)
        norm = M**d * (M / N) ** (0.5 - d)
        cells.append(
            {
                "M": M,
                "N": N,
                "max": float(arr.max()),
                "mean": float(arr.mean()),
                "ratio_max": float(arr.max() / norm),
                "ratio_mean": float(arr.mean() / norm),
                "values": [float(v) for v in arr],
            }
        )
    means = [c["mean"] for c in cells]
    slope, intercept, r2 = fit_loglog(plan.N_values, np.log(means))
    expected = -(0.5 - d)
    fit = {
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
        "expected": expected,
        "tolerance": 0.2,
    }
    verdict = _slope_verdict(slope, expected, 0.2, r2)
    return EstimateReport(
        "bilinear-bourgain",
        plan.echo(),
        cells,
        fit,
        None,
        verdict,
        {"max_ratio": max(c["ratio_max"] for c in cells)},
    )


# ---------------------------------------------------------------------------
# almost orthogonality (Hermite-dominated cells in exact log arithmetic)
# ---------------------------------------------------------------------------


def _poly_product_coeffs(k_list):
    """Exact integer expansion of prod_i H_{k_i} over {H_m}."""
    coeffs = {k_list[0]: 1}
    for knext in k_list[1:]:
        new = {}
        for m, c0 in coeffs.items():
            a, b = m, knext
            for l in range(min(a, b) + 1):
                lc = (2**l) * math.factorial(l) * math.comb(a, l) * math.comb(b, l)
                key = a + b - 2 * l
                new[key] = new.get(key, 0) + c0 * lc
        coeffs = new
    return coeffs


_lgamma_table_arr = np.zeros(0)


def _lgamma_table(n: int) -> np.ndarray:
    """lgamma(k+1) for k = 0..n as a lookup array."""
    global _lgamma_table_arr
    if _lgamma_table_arr.size <= n:
        from scipy.special import gammaln

        _lgamma_table_arr = gammaln(np.arange(2 * n + 2) + 1.0)
    return _lgamma_table_arr


def _log_I_pq(p_arr, q, lgam):
    """(sign, log|I|) of I(p,q) = int H_p H_q e^{-2y^2} dy over an array of p.

    From the generating function: I(p,q) = sqrt(pi/2) p! q! *
    sum_c (-1/2)^{(p-c)/2} (-1/2)^{(q-c)/2} / (((p-c)/2)! ((q-c)/2)! c!)
    over c = q, q-2, ...; zero unless p = q (mod 2).
    """
    p_arr = np.asarray(p_arr, dtype=np.int64)
    out_sign = np.zeros(p_arr.size)
    out_log = np.full(p_arr.size, -np.inf)
    ok = (p_arr + q) % 2 == 0
    if not ok.any():
        return out_sign, out_log
    p = p_arr[ok]
    cs = np.arange(q % 2, q + 1, 2)
    logs = np.full((cs.size, p.size), -np.inf)
    signs = np.zeros((cs.size, p.size))
    for i, c in enumerate(cs):
        valid = p >= c
        a = (p - c) // 2
        b = (q - c) // 2
        logs[i, valid] = (
            lgam[p[valid]] + lgam[q] - (a[valid] + b) * _LOG2
            - lgam[a[valid]] - lgam[b] - lgam[c]
        )
        signs[i] = np.where(valid, (-1.0) ** (a + b), 0.0)
    mx = logs.max(axis=0)
    with np.errstate(invalid="ignore"):
        ssum = (signs * np.exp(logs - mx[None, :])).sum(axis=0)
    nz = (ssum != 0.0) & np.isfinite(mx)
    sub_sign = np.zeros(p.size)
    sub_log = np.full(p.size, -np.inf)
    sub_sign[nz] = np.sign(ssum[nz])
    sub_log[nz] = mx[nz] + np.log(np.abs(ssum[nz])) + 0.5 * math.log(math.pi / 2.0)
    out_sign[ok] = sub_sign
    out_log[ok] = sub_log
    return out_sign, out_log


def log_quadruple_overlap(k0_arr, k1, k2, k3):
    """(sign, log|.|) of int h_{k0} h_{k1} h_{k2} h_{k3} dy, vectorized in k0.

    Exact finite closed form (Hermite-polynomial linearization of the
    three low factors plus the Gaussian generating-function integral)
    carried in log space; accurate in the Hermite-dominated regime
    k0 >> k1+k2+k3 where quadrature sits below its double-precision
    noise floor.
    """
    k0_arr = np.asarray(k0_arr, dtype=np.int64)
    prod = _poly_product_coeffs([int(k1), int(k2), int(k3)])
    ms = [m for m, beta in sorted(prod.items()) if beta]
    lgam = _lgamma_table(int(k0_arr.max()) + max(ms) + 2)
    term_logs = np.full((len(ms), k0_arr.size), -np.inf)
    term_signs = np.zeros((len(ms), k0_arr.size))
    for i, m in enumerate(ms):
        sgn, lg = _log_I_pq(k0_arr, m, lgam)
        term_logs[i] = math.log(prod[m]) + lg
        term_signs[i] = sgn
    mx = term_logs.max(axis=0)
    with np.errstate(invalid="ignore"):
        ssum = (term_signs * np.exp(term_logs - mx[None, :])).sum(axis=0)
    lognorm = -0.5 * sum(
        k * _LOG2 + lgamma(k + 1) + 0.5 * _LOGPI for k in (k1, k2, k3)
    )
    k0n = -0.5 * (k0_arr * _LOG2 + lgam[k0_arr] + 0.5 * _LOGPI)
    total_sign = np.zeros(k0_arr.size)
    total_log = np.full(k0_arr.size, -np.inf)
    ok = (ssum != 0.0) & np.isfinite(mx)
    total_sign[ok] = np.sign(ssum[ok])
    total_log[ok] = mx[ok] + np.log(np.abs(ssum[ok])) + lognorm + k0n[ok]
    return total_sign, total_log


def _shell_modes(lam: int, lx: float, rng, max_modes: int, k_filter=None):
    """Random unit-coefficient modes on the [lam, lam+1) shell.

    Returns (j, k, coeff) arrays; population is a stratified random
    subset of at most ``max_modes`` shell modes (the pairing is a
    sup-over-data claim, so any unit sample is admissible).
    """
    jmax = int(math.floor((lam + 1) * lx / math.pi))
    modes = []
    for j in range(-jmax, jmax + 1):
        xi2 = (math.pi * j / lx) ** 2
        hi = (lam + 1) ** 2 - xi2 - 1
        if hi <= 0:
            continue
        kmin = max(0, int(math.ceil((lam * lam - xi2 - 1) / 2.0)))
        kmax = int(math.ceil(hi / 2.0)) - 1
        for k in range(kmin, kmax + 1):
            val = xi2 + 2 * k + 1
            if lam * lam <= val < (lam + 1) ** 2:
                if k_filter is None or k_filter(j, k):
                    modes.append((j, k))
    if not modes:
        raise EmptySample(f"shell [{lam}, {lam+1}) holds no admissible modes")
    if len(modes) > max_modes:
        pick = rng.choice(len(modes), size=max_modes, replace=False)
        modes = [modes[i] for i in sorted(pick)]
    j = np.array([m[0] for m in modes])
    k = np.array([m[1] for m in modes])
    c = rng.normal(size=len(modes)) + 1j * rng.normal(size=len(modes))
    c = c.astype(complex) / np.linalg.norm(c)
    return j, k, c


def _hermite_dominated_pairing(lam0, lam_low, lx, rng, max_low=8, cache=None):
    """log10 |pairing| for one Hermite-dominated sample, exact log path."""
    low = [_shell_modes(lam_low, lx, rng, max_low) for _ in range(3)]
    # f0: Hermite-dominated slice of the lam0 shell, only reachable x rows
    jr = sum(int(abs(low[i][0]).max()) for i in range(3))
    f0_cols = {}
    for j0 in range(-jr, jr + 1):
        xi2 = (math.pi * j0 / lx) ** 2
        kmin = max(
            int(math.ceil((lam0 * lam0 / 2.0 - 1) / 2.0)),
            int(math.ceil((lam0 * lam0 - xi2 - 1) / 2.0)),
        )
        kmax = int(math.ceil(((lam0 + 1) ** 2 - xi2 - 1) / 2.0)) - 1
        if kmax >= kmin:
            ks = np.arange(kmin, kmax + 1)
            cs = rng.normal(size=ks.size) + 1j * rng.normal(size=ks.size)
            f0_cols[j0] = (ks, cs)
    if not f0_cols:
        raise EmptySample("Hermite-dominated slice is empty")
    total = sum(float((np.abs(c) ** 2).sum()) for _, c in f0_cols.values())
    scale0 = 1.0 / math.sqrt(total)
    # overlaps cached per sorted low k-triple over the global k0 range,
    # then sliced per x column; pairing accumulated in log space
    k0_lo = int(math.ceil((lam0 * lam0 / 2.0 - 1) / 2.0))
    k0_hi = int(math.ceil(((lam0 + 1) ** 2 - 1) / 2.0)) - 1
    k0_all = np.arange(k0_lo, k0_hi + 1)
    if cache is None:
        cache = {}
    logs_all = []
    phases_all = []
    j1s, k1s, c1s = low[0]
    j2s, k2s, c2s = low[1]
    j3s, k3s, c3s = low[2]
    for i1 in range(j1s.size):
        for i2 in range(j2s.size):
            for i3 in range(j3s.size):
                j0 = -(int(j1s[i1]) + int(j2s[i2]) + int(j3s[i3]))
                col = f0_cols.get(j0)
                if col is None:
                    continue
                ks0, cs0 = col
                key = tuple(sorted((int(k1s[i1]), int(k2s[i2]), int(k3s[i3]))))
                ent = cache.get(key)
                if ent is None:
                    ent = log_quadruple_overlap(k0_all, *key)
                    cache[key] = ent
                sgn, lg = ent
                sl = slice(int(ks0[0]) - k0_lo, int(ks0[-1]) - k0_lo + 1)
                sgn, lg = sgn[sl], lg[sl]
                cc = cs0 * scale0 * (c1s[i1] * c2s[i2] * c3s[i3])
                good = np.isfinite(lg)
                if good.any():
                    logs_all.append(lg[good])
                    phases_all.append(sgn[good] * cc[good])
    if not logs_all:
        return -math.inf
    logs = np.concatenate(logs_all)
    phases = np.concatenate(phases_all)
    mx = logs.max()
    s = (phases * np.exp(logs - mx)).sum()
    if s == 0:
        return -math.inf
    return (mx + math.log(abs(s)) - math.log(2 * lx)) / math.log(10.0)


def _x_dominated_pairing(lam0, lam_low, lx, rng):
    """Grid-quadrature pairing with the f0 spectrum forced x-dominated."""
    jmax0 = int(math.floor((lam0 + 1) * lx / math.pi))
    nx = 1
    while nx < 4 * jmax0 + 16:
        nx *= 2
    kdim = max(32, ((lam_low + 1) ** 2 - 1) // 2 + 2)
    spec = make_spec(Lx=lx, Nx=nx, K=kdim)

    def xdom(j, k):
        return k < kdim and (math.pi * j / lx) ** 2 >= lam0 * lam0 / 2.0

    fields = [_shell_modes(lam0, lx, rng, 24, k_filter=xdom)]
    for _ in range(3):
        fields.append(_shell_modes(lam_low, lx, rng, 12))
    grids = []
    for j, k, c in fields:
        cc = np.zeros((spec.Nx, spec.K), dtype=complex)
        cc[j % spec.Nx, k] = c
        grids.append(synthesize_grid(cc, spec))
    gw = grid_weights(spec)
    val = (grids[0] * grids[1] * grids[2] * grids[3] * gw).sum()
    return abs(complex(val))


def verify_almost_orthogonality(
    spec: BasisSpec | None,
    plan: SweepPlan,
    diagnostic: bool = False,
    lambda_equal: int = 6,
) -> EstimateReport:
    """Decay of the quadruple pairing of indicator-localized fields.

    For each lambda0 the low shells sit at lambda0 // 8 (the frozen
    admissibility constant C0 = 8).  Hermite-dominated cells use the
    exact log-space overlap evaluator; x-dominated cells use grid
    quadrature and must vanish to roundoff.  Super-polynomial decay is
    convex in log-log, so the one-sided verdict uses the weakest
    consecutive-pair slope rather than the global least-squares fit.
    With ``diagnostic`` an extra unconstrained cell at
    lambda0 = lambda1 = ``lambda_equal`` is recorded (never asserted).
    """
    lx = 2.0
    cells = []
    for ci, lam0 in enumerate(plan.lambda0_values):
        lam_low = lam0 // 8
        if lam0 < 8 * lam_low or lam_low < 1:
            raise InvalidArgument(
                f"lambda0 = {lam0} violates the C0 = 8 separation (lambda_low = {lam_low})"
            )
        rng = _cell_rng(plan.seed, 200 + ci)
        logs = []
        xvals = []
        cell_cache = {}
        for _ in range(plan.samples):
            logs.append(
                _hermite_dominated_pairing(lam0, lam_low, lx, rng, cache=cell_cache)
            )
            xvals.append(_x_dominated_pairing(lam0, lam_low, lx, rng))
        finite = [v for v in logs if math.isfinite(v)]
        cells.append(
            {
                "lambda0": lam0,
                "lambda_low": lam_low,
                "log10_max": max(finite) if finite else -999.0,
                "log10_mean": float(np.mean(finite)) if finite else -999.0,
                "x_dominated_max": float(max(xvals)),
                "values": [float(v) for v in logs],
            }
        )
    lam0s = [c["lambda0"] for c in cells]
    ln_vals = np.array([c["log10_max"] for c in cells]) * math.log(10.0)
    if len(cells) >= 2:
        slope, intercept, r2 = fit_loglog(lam0s, ln_vals)
    else:
        slope, intercept, r2 = -math.inf, 0.0, 1.0
    lx0 = np.log(np.asarray(lam0s, dtype=float))
    pairwise = (ln_vals[1:] - ln_vals[:-1]) / (lx0[1:] - lx0[:-1])
    weakest = float(pairwise.max()) if pairwise.size else slope
    fit = {
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
        "weakest_pair_slope": weakest,
        "expected": -8.0,
        "tolerance": 0.0,
        "one_sided": True,
    }
    x_ok = all(c["x_dominated_max"] < 1e-12 for c in cells)
    verdict = "PASS" if (weakest <= -8.0 and x_ok) else "FAIL"
    constants = {"x_dominated_max": max(c["x_dominated_max"] for c in cells)}
    if diagnostic:
        rng = _cell_rng(plan.seed, 999)
        vals = []
        sp = make_spec(Lx=lx, Nx=64, K=2 * (lambda_equal + 1) ** 2)
        gw = grid_weights(sp)
        for _ in range(plan.samples):
            grids = []
            for _f in range(4):
                j, k, c = _shell_modes(lambda_equal, lx, rng, 24)
                cc = np.zeros((sp.Nx, sp.K), dtype=complex)
                cc[j % sp.Nx, k] = c
                grids.append(synthesize_grid(cc, sp))
            vals.append(
                abs(complex((grids[0] * grids[1] * grids[2] * grids[3] * gw).sum()))
            )
        constants["diagnostic_equal_shell_max"] = float(max(vals))
    return EstimateReport(
        "almost-orth", plan.echo(), cells, fit, None, verdict, constants
    )


# ---------------------------------------------------------------------------
# Bernstein exponents
# ---------------------------------------------------------------------------


def _kernel_field(spec: BasisSpec, cap: int, rng) -> SpectralField:
    """Reproducing-kernel bump of the S_cap ball at a random center."""
    from .hermite import _hermite_values

    x0 = rng.uniform(-spec.Lx / 4, spec.Lx / 4)
    y0 = rng.uniform(-1.0, 1.0)
    hy = _hermite_values(np.array([y0]), spec.K - 1)[:, 0]
    c = np.exp(-1j * spec.xi * x0)[:, None] * hy[None, :]
    c = c * lp_cutoff(spec.lam / cap**2)
    f = SpectralField(spec, c)
    return f * (1.0 / f.norm())


def verify_bernstein(
    spec: BasisSpec | None, p: float, q: float, s: float, plan: SweepPlan
) -> EstimateReport:
    """Fitted N-exponent of ||A^{s/2} S_N u||_{L^q} / ||u||_{L^p}.

    Data are reproducing-kernel bumps of the S_{2N} ball at random
    centers (see module docstring).  Both directions must concentrate at
    scale 1/N, so each cell carries K = 2 (2N)^2 Hermite modes and the
    sweep caps at N = 16.
    """
    if not (1 < p <= q < math.inf):
        raise InvalidArgument(f"need 1 < p <= q < inf, got p={p}, q={q}")
    if s not in (0, 1, 2):
        raise InvalidArgument(f"s must be one of 0, 1, 2, got {s}")
    n_values = tuple(N for N in plan.N_values if N <= 16) or (4, 8, 16)
    samples = max(8, plan.samples // 4)
    expected = s + 2.0 / p - 2.0 / q

    def run_cell(args):
        ci, N = args
        kdim = 2 * (2 * N) ** 2
        nx = 128
        while nx < (2 * q) * (2 * math.sqrt(2) * N) * 4.0 / math.pi:
            nx *= 2
        cell_spec = spec if spec is not None else make_spec(
            Lx=4.0, Nx=nx, K=kdim, quad_nodes=2 * kdim
        )
        rng = _cell_rng(plan.seed, 300 + ci)
        vals = []
        for _ in range(samples):
            u = _kernel_field(cell_spec, 2 * N, rng)
            up = synthesize_grid(u.c, cell_spec)
            lp_norm = grid_lp_norm(up, cell_spec, p)
            m = lp_cutoff(cell_spec.lam / N**2) * cell_spec.lam ** (s / 2.0)
            g = synthesize_grid(m * u.c, cell_spec)
            lq_norm = grid_lp_norm(g, cell_spec, q)
            vals.append(lq_norm / lp_norm)
        return vals

    results = _run_cells(run_cell, list(enumerate(n_values)), plan.threads)
    cells = []
    for N, vals in zip(n_values, results):
        arr = np.array(vals)
        norm = N**expected
        cells.append(
            {
                "N": N,
                "p": p,
                "q": q,
                "s": s,
                "max": float(arr.max()),
                "mean": float(arr.mean()),
                "ratio_max": float(arr.max() / norm),
                "values": [float(v) for v in arr],
            }
        )
    means = [c["mean"] for c in cells]
    slope, intercept, r2 = fit_loglog(n_values, np.log(means))
    fit = {
        "slope": slope,
        "intercept": intercept,
        "r2": r2,
        "expected": expected,
        "tolerance": 0.15,
    }
    verdict = _slope_verdict(slope, expected, 0.15, r2)
    return EstimateReport(
        "bernstein",
        {**plan.echo(), "p": p, "q": q, "s": s},
        cells,
        fit,
        None,
        verdict,
        {"max_ratio": max(c["ratio_max"] for c in cells)},
    )


# ---------------------------------------------------------------------------
# trilinear estimate via its dual pairing
# ---------------------------------------------------------------------------


def verify_trilinear(
    spec: BasisSpec | None, plan: SweepPlan, check_stability: bool = True
) -> EstimateReport:
    """Dual-pairing trilinear ratio and its stability under doubling.

    ratio = |int int u1 u2 conj(u3) conj(u0) dz dt| /
            (||u0||_{X^{-s,b'}} ||u1||_{X^{s,b}} ||u2||_{X^{e,b}} ||u3||_{X^{e,b}})
    with s=1, e=plan.eps, b=plan.b_embed, b'=plan.bprime on random
    modulated free solutions; the pairing carries the same window as the
    norms (one factor of chi per field).
    """
    s, e, b, bp = 1.0, plan.eps, plan.b_embed, plan.bprime

    def run(sp):
        lam_cap = sp.lam_max / 2.0
        F = int(math.ceil(plan.T * sp.lam_max / math.pi)) + 2
        dt = plan.T / (F - 1)
        t = np.linspace(0.0, plan.T, F)
        big = make_spec(Lx=sp.Lx, Nx=4 * sp.Nx, K=sp.K, quad_nodes=sp.basis.rule.n)
        gw = grid_weights(big)
        chi = BourgainParams(0.0, 0.0).window_values(F)
        stride = max(1, F // (int(plan.frames_per_unit * plan.T) + 1))
        idx = np.arange(0, F, stride)
        if idx[-1] != F - 1:
            idx = np.append(idx, F - 1)
        ratios = []
        for s_idx in range(plan.samples):
            rng = _cell_rng(plan.seed, 400, s_idx)
            fields = []
            for decay in (s + 1.0, s + 1.0, e + 1.0, e + 1.0):
                f = _ball_field(sp, lam_cap, rng, decay=2 * decay)
                rows, cols = np.nonzero(f.c)
                lam = sp.lam[rows, cols]
                env = _scalar_envelope(F, plan.T, rng, b, band=4)
                coeffs = env[:, None] * np.exp(1j * np.outer(t, lam)) * f.c[rows, cols][None, :]
                fields.append((rows, cols, lam, coeffs))
            norms = []
            for (rows, cols, lam, coeffs), (ss, bb) in zip(
                fields, ((-s, bp), (s, b), (e, b), (e, b))
            ):
                val, _ = bourgain_norm_modes(coeffs, lam, dt, BourgainParams(ss, bb, pad=4))
                norms.append(val)
            vals = []
            for i in idx:
                gs = []
                for rows, cols, lam, coeffs in fields:
                    cc = np.zeros((sp.Nx, sp.K), dtype=complex)
                    cc[rows, cols] = coeffs[i]
                    gs.append(synthesize_grid(_embed_rows(cc, sp, big), big))
                integ = gs[1] * gs[2] * np.conj(gs[3]) * np.conj(gs[0])
                vals.append(complex((integ * gw).sum()) * chi[i] ** 4)
            pairing = abs(np.trapezoid(np.array(vals), t[idx]))
            denom = math.prod(norms)
            ratios.append(pairing / denom if denom > 0 else 0.0)
        return np.array(ratios)

    base = spec if spec is not None else make_spec(Lx=4.0, Nx=32, K=16)
    base_ratios = run(base)
    cells = [
        {
            "Nx": base.Nx,
            "K": base.K,
            "max": float(base_ratios.max()),
            "mean": float(base_ratios.mean()),
            "values": [float(v) for v in base_ratios],
        }
    ]
    stability = None
    verdict = "PASS"
    if check_stability:
        fine = make_spec(Lx=base.Lx, Nx=2 * base.Nx, K=2 * base.K)
        fine_ratios = run(fine)
        factor = float(fine_ratios.max() / base_ratios.max())
        cells.append(
            {
                "Nx": fine.Nx,
                "K": fine.K,
                "max": float(fine_ratios.max()),
                "mean": float(fine_ratios.mean()),
                "values": [float(v) for v in fine_ratios],
            }
        )
        stability = {
            "base_max": float(base_ratios.max()),
            "doubled_max": float(fine_ratios.max()),
            "factor": factor,
        }
        verdict = "PASS" if max(factor, 1.0 / factor) < 2.0 else "FAIL"
    return EstimateReport(
        "trilinear",
        {**plan.echo(), "s": s, "eps": e, "b": b, "bprime": bp},
        cells,
        None,
        stability,
        verdict,
        {"max_ratio": float(base_ratios.max())},
    )
