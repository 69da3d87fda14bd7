import math

import numpy as np
import pytest

from phnls.errors import AssumptionViolated, InvalidArgument, ResolutionError, Unsupported
from phnls.evolve import (
    DEFOCUSING,
    InitialData,
    SimConfig,
    cubic_project,
    make_initial,
    simulate,
)
from phnls.growth import (
    EnergyTermSpec,
    comparability_check,
    energy_derivative_check,
    growth_bound,
    modified_energy_term,
    track_growth,
)
from phnls.spectral import SpectralField, grid_weights, make_spec, synthesize_grid


@pytest.fixture(scope="module")
def spec():
    return make_spec(Lx=8.0, Nx=64, K=32)


@pytest.fixture(scope="module")
def gaussian(spec):
    return make_initial(spec, InitialData(amplitude=1.0))


class TestGrowthTracking:
    def test_bound_values(self):
        assert growth_bound(1) == pytest.approx(2.0 / 3.0)
        assert growth_bound(2) == pytest.approx(2.0)

    def test_linear_control_alpha_zero(self, spec):
        cfg = SimConfig(spec, coupling=0.0, dt=2e-3, t_end=1.0, stride=100)
        rep = track_growth(cfg, 1, 20.0, 500)
        assert abs(rep.alpha) <= 0.01
        assert rep.verdict == "PASS"

    def test_small_amplitude_perturbative(self, spec):
        cfg = SimConfig(
            spec, dt=2e-3, t_end=1.0, stride=100, initial=InitialData(amplitude=1e-3)
        )
        rep = track_growth(cfg, 1, 20.0, 500)
        assert abs(rep.alpha) <= 0.05

    def test_h1_assumption_checked(self, spec, monkeypatch):
        import phnls.growth as g

        monkeypatch.setattr(g, "H1_RATIO_LIMIT", 1.0 + 1e-9)
        cfg = SimConfig(spec, dt=2e-3, t_end=1.0, stride=100,
                        initial=InitialData(amplitude=1.5))
        with pytest.raises(AssumptionViolated):
            track_growth(cfg, 1, 5.0, 250)

    def test_k_guard(self, spec):
        cfg = SimConfig(spec, dt=2e-3, t_end=1.0, stride=100)
        with pytest.raises(InvalidArgument):
            track_growth(cfg, 3, 5.0, 100)

    def test_series_monotone_time(self, spec):
        cfg = SimConfig(spec, dt=2e-3, t_end=1.0, stride=100)
        rep = track_growth(cfg, 1, 4.0, 100)
        assert (np.diff(rep.series["t"]) > 0).all()

    def test_conservation_reasserted(self, spec):
        cfg = SimConfig(spec, dt=1e-3, t_end=1.0, stride=100)
        rep = track_growth(cfg, 1, 5.0, 100)
        mass = rep.series["mass"]
        assert np.abs(mass - mass[0]).max() <= 1e-10 * mass[0]


class TestComparability:
    def test_k1_s0_algebraic_identity(self, spec, gaussian):
        lhs, rhs = comparability_check(gaussian, 1, 0, DEFOCUSING)
        assert lhs == pytest.approx(cubic_project(gaussian).norm(), rel=1e-10)
        from phnls.spectral import sobolev_norm

        assert rhs == pytest.approx(sobolev_norm(gaussian, 1.0), rel=1e-13)

    def test_zero_field(self, spec):
        z = SpectralField(spec, np.zeros((spec.Nx, spec.K)))
        lhs, rhs = comparability_check(z, 1, 0, DEFOCUSING)
        assert lhs == 0.0 and rhs == 0.0

    def test_ratio_band_along_trajectory(self, spec):
        cfg = SimConfig(spec, dt=1e-3, t_end=1.0, stride=100,
                        initial=InitialData(amplitude=1.0))
        res = simulate(cfg)
        ratios = []
        for i in range(res.trajectory.nframes):
            lhs, rhs = comparability_check(res.trajectory.frame(i), 1, 0, DEFOCUSING)
            ratios.append(lhs / rhs)
        assert max(ratios) / min(ratios) < 3.0

    def test_caps(self, gaussian):
        with pytest.raises(Unsupported):
            comparability_check(gaussian, 3, 0, DEFOCUSING)
        with pytest.raises(InvalidArgument):
            comparability_check(gaussian, 1, 3, DEFOCUSING)


class TestModifiedEnergyTerms:
    def test_zero_field(self, spec):
        z = SpectralField(spec, np.zeros((spec.Nx, spec.K)))
        term = EnergyTermSpec(k=0)
        assert modified_energy_term(z, term, DEFOCUSING) == 0.0

    def test_quartic_mass(self, gaussian, spec):
        term = EnergyTermSpec(k=0, conjugation=("u", "ubar", "u", "ubar"))
        val = modified_energy_term(gaussian, term, DEFOCUSING)
        g = synthesize_grid(gaussian.c, spec)
        ref = float((np.abs(g) ** 4 * grid_weights(spec)).sum())
        assert val.real == pytest.approx(ref, rel=1e-12)
        assert abs(val.imag) < 1e-12 * ref
        assert val.real >= 0

    def test_dx_matches_refined_grid(self, gaussian):
        # refined-grid quadrature oracle: same term on a doubled grid
        term = EnergyTermSpec(k=0, L="dx", conjugation=("u", "ubar", "u", "ubar"))
        val = modified_energy_term(gaussian, term, DEFOCUSING)
        fine_spec = make_spec(Lx=8.0, Nx=128, K=64)
        fine = make_initial(fine_spec, InitialData(amplitude=1.0))
        ref = modified_energy_term(fine, term.__class__(k=0, L="dx",
                                   conjugation=("u", "ubar", "u", "ubar")), DEFOCUSING)
        assert val.real == pytest.approx(ref.real, rel=1e-8, abs=1e-10)

    def test_multi_index_validation(self):
        with pytest.raises(InvalidArgument):
            EnergyTermSpec(k=1, orders=(0, 0, 0), term_type="R")
        with pytest.raises(InvalidArgument):
            EnergyTermSpec(k=1, orders=(0, 0, 0, 1))
        with pytest.raises(InvalidArgument):
            EnergyTermSpec(k=1, orders=(1, 1, 0), term_type="S")
        with pytest.raises(Unsupported):
            EnergyTermSpec(k=8, orders=(8, 0, 0), term_type="S")
        EnergyTermSpec(k=1, orders=(1, 0, 0), term_type="S")
        EnergyTermSpec(k=1, orders=(0, 1, 1), term_type="R")


class TestEnergyDerivative:
    def test_linear_run_both_sides_vanish(self, spec):
        cfg = SimConfig(spec, coupling=0.0, dt=1e-3, t_end=0.1, stride=10)
        res = simulate(cfg)
        chk = energy_derivative_check(res.trajectory, 0, DEFOCUSING, coupling=0.0)
        assert np.abs(chk["lhs"]).max() < 1e-8
        assert np.abs(chk["rhs"]).max() < 1e-10

    def test_zero_trajectory(self, spec):
        from phnls.spectral import Trajectory

        frames = np.zeros((5, spec.Nx, spec.K), dtype=complex)
        traj = Trajectory(spec, 0.0, 1e-2, frames)
        chk = energy_derivative_check(traj, 0, DEFOCUSING)
        assert chk["max_abs_residual"] == 0.0

    def test_richardson_ratio(self, spec):
        residuals = []
        for stride in (10, 5):
            cfg = SimConfig(spec, dt=1e-3, t_end=0.1, stride=stride,
                            initial=InitialData(amplitude=1.0))
            res = simulate(cfg)
            chk = energy_derivative_check(res.trajectory, 0, DEFOCUSING)
            residuals.append(chk["max_abs_residual"])
        assert residuals[0] / residuals[1] == pytest.approx(4.0, abs=1.0)

    def test_stride_guard(self, spec):
        cfg = SimConfig(spec, dt=1e-3, t_end=0.5, stride=100)
        res = simulate(cfg)
        with pytest.raises(ResolutionError):
            energy_derivative_check(res.trajectory, 0, DEFOCUSING)

    def test_k_guard(self, spec):
        cfg = SimConfig(spec, dt=1e-3, t_end=0.05, stride=5)
        res = simulate(cfg)
        with pytest.raises(InvalidArgument):
            energy_derivative_check(res.trajectory, 2, DEFOCUSING)
