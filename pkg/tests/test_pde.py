"""Spatial discretization and reaction-diffusion time stepping."""

import warnings

import numpy as np
import pytest

from rdlab import CompetitionModel, InvariantViolation
from rdlab.pde import (
    Domain1D,
    Field,
    default_dt,
    evolve,
    flatness,
    grad_l2_norm,
    laplacian_apply,
    neumann_eigenvalue,
    spatial_average,
)
from rdlab.scalar import dirichlet_steady_profile
from tests.conftest import reference_phi_values


def _interval(N, L=1.0, bc="neumann"):
    return Domain1D(kind="interval", length=L, N=N, bc=bc)


def _eigenfunction_defect(domain, u, lam):
    """Sup norm of (Laplacian u + lam u) over interior nodes."""
    applied = laplacian_apply(domain, u)
    return float(np.max(np.abs(applied[1:-1] + lam * u[1:-1])))


class TestLaplacian:
    def test_neumann_mode_h_convergence(self):
        # cos(3 pi x): defect must drop fourfold when h halves
        defects = []
        for N in (64, 128):
            dom = _interval(N)
            x = dom.grid()
            lam = neumann_eigenvalue(1.0, 3)
            defects.append(_eigenfunction_defect(dom, np.cos(3 * np.pi * x), lam))
        ratio = defects[0] / defects[1]
        assert 3.5 < ratio < 4.5

    def test_dirichlet_mode_h_convergence(self):
        defects = []
        for N in (64, 128):
            dom = _interval(N, L=2.0, bc="dirichlet")
            x = dom.grid()
            lam = (2.0 * np.pi / 2.0) ** 2
            defects.append(_eigenfunction_defect(dom, np.sin(2.0 * np.pi * x / 2.0), lam))
        ratio = defects[0] / defects[1]
        assert 3.5 < ratio < 4.5

    def test_radial_mode_h_convergence(self):
        # first radial eigenfunction J0(j0 r / R) of the disk, m = 2
        from scipy.special import j0, jn_zeros

        j0_1 = jn_zeros(0, 1)[0]
        defects = []
        for N in (64, 128):
            dom = Domain1D(kind="radial", length=1.0, N=N, bc="dirichlet", m=2)
            r = dom.grid()
            lam = j0_1**2
            defects.append(_eigenfunction_defect(dom, j0(j0_1 * r), lam))
        ratio = defects[0] / defects[1]
        assert 3.5 < ratio < 4.5

    def test_neumann_eigenvalue_formula(self):
        assert neumann_eigenvalue(1.0, 1) == pytest.approx(np.pi**2, rel=1e-15)
        assert neumann_eigenvalue(2.0, 3) == pytest.approx((1.5 * np.pi) ** 2, rel=1e-15)


class TestFieldDiagnostics:
    def test_reference_phi_averages_are_exact_rationals(self):
        dom = _interval(512)
        field = Field(dom, reference_phi_values(dom.grid()))
        exact = np.array([1.0 / 10.0, 1.0 / 105.0, 1.0 / 30.0])
        assert np.max(np.abs(spatial_average(field) - exact)) < 1e-10

    def test_gradient_norm_on_cosine_mode(self):
        # ||d/dx cos(k pi x)||_L2 on [0, 1] is k pi / sqrt(2)
        dom = _interval(256)
        x = dom.grid()
        for k in (1, 2, 3):
            field = Field(dom, np.cos(k * np.pi * x)[None, :])
            assert grad_l2_norm(field) == pytest.approx(
                k * np.pi / np.sqrt(2.0), rel=1e-3
            )

    def test_flatness_is_max_oscillation(self):
        dom = _interval(32)
        x = dom.grid()
        field = Field(dom, np.array([0.5 + 0.25 * np.cos(np.pi * x), np.ones_like(x)]))
        assert flatness(field) == pytest.approx(0.5, abs=1e-12)

    def test_field_shape_validation(self):
        dom = _interval(32)
        with pytest.raises(ValueError):
            Field(dom, np.zeros((2, 10)))


class TestEvolveValidation:
    def test_species_count_mismatch_rejected(self, reference_model):
        dom = _interval(32)
        phi = Field(dom, np.ones((2, 34)) * 0.1)
        with pytest.raises(ValueError):
            evolve(reference_model, dom, phi, 1.0)

    def test_negative_initial_field_rejected(self, reference_model):
        dom = _interval(32)
        values = np.full((3, 34), 0.1)
        values[1, 5] = -0.2
        with pytest.raises(ValueError):
            evolve(reference_model, dom, phi=Field(dom, values), t_end=1.0)

    def test_nonzero_boundary_slope_warns(self, reference_model):
        dom = _interval(64)
        x = dom.grid()
        values = np.array([0.2 + 0.1 * x, 0.1 + 0.05 * x, 0.1 * np.ones_like(x)])
        with pytest.warns(UserWarning, match="boundary slope"):
            evolve(reference_model, dom, Field(dom, values), 0.01, dt=0.005)

    def test_smooth_compatible_data_does_not_warn(self, reference_model):
        # zero-slope polynomial data: the one-sided stencil's own truncation
        # error must not trip the compatibility check at fine resolution
        dom = _interval(512)
        phi = Field(dom, reference_phi_values(dom.grid()))
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            evolve(reference_model, dom, phi, 0.002, dt=0.001)

    def test_dirichlet_boundary_pinning_warns(self, reference_model):
        dom = _interval(32, bc="dirichlet")
        phi = Field(dom, np.full((3, 34), 0.1))
        with pytest.warns(UserWarning, match="pinned"):
            evolve(reference_model, dom, phi, 0.02, dt=0.01)

    def test_default_dt_formula(self, reference_model):
        dom = _interval(99)  # h = 0.01
        expected = min(1e-2, dom.h**2 / (2.0 * 2e-3) * 10.0)
        assert default_dt(dom, reference_model) == pytest.approx(expected, rel=1e-12)


class TestEvolveAccuracy:
    def test_dt_halving_is_second_order(self, reference_model):
        # Strang splitting: halving dt must cut the error about fourfold
        dom = _interval(64)
        phi = Field(dom, reference_phi_values(dom.grid()))
        finals = {}
        for dt in (0.02, 0.01, 0.0025):
            traj = evolve(reference_model, dom, phi, 1.0, dt=dt, snapshots=2)
            finals[dt] = traj.fields[-1]
        err_coarse = np.max(np.abs(finals[0.02] - finals[0.0025]))
        err_fine = np.max(np.abs(finals[0.01] - finals[0.0025]))
        # reference at dt/8: its own error contributes ~1.6% to the ratio
        assert 3.3 < err_coarse / err_fine < 4.7

    def test_heat_mode_decay_rate(self):
        # reaction off: u = 1 + eps cos(pi x) decays at exactly d pi^2
        from rdlab.analysis import decay_fit

        model = CompetitionModel(a=np.eye(3) * 2.0 + 0.1, d=np.full(3, 0.3))
        dom = _interval(128)
        x = dom.grid()
        phi = Field(dom, np.tile(1.0 + 0.1 * np.cos(np.pi * x), (3, 1)))
        traj = evolve(model, dom, phi, 1.2, dt=0.002, include_reaction=False)
        rate, _ = decay_fit(traj, window=(0.1, 1.0))
        assert rate == pytest.approx(0.3 * np.pi**2, rel=0.02)

    def test_constant_equilibrium_is_preserved(self, reference_model):
        from rdlab.model import condition_report

        P1 = condition_report(reference_model).interior_point
        dom = _interval(32)
        phi = Field(dom, np.tile(P1[:, None], (1, 34)))
        traj = evolve(reference_model, dom, phi, 20.0, dt=0.01)
        drift = np.max(np.abs(traj.fields[-1] - P1[:, None]))
        assert drift < 1e-9

    def test_dirichlet_subcritical_interval_decays_to_zero(self):
        # below the threshold length the only steady state is extinction
        model = CompetitionModel(a=np.array([[1.0]]), d=np.array([0.1]))
        dom = Domain1D(kind="interval", length=0.9, N=64, bc="dirichlet")
        x = dom.grid()
        phi = Field(dom, (0.5 * np.sin(np.pi * x / 0.9))[None, :])
        traj = evolve(model, dom, phi, 50.0, dt=0.005)
        assert float(np.max(traj.fields[-1])) < 1e-3

    def test_dirichlet_supercritical_bump_approaches_steady_profile(self):
        # above threshold the bump heads for the nonconstant steady state
        model = CompetitionModel(a=np.array([[1.0]]), d=np.array([0.1]))
        dom = Domain1D(kind="interval", length=2.0, N=128, bc="dirichlet")
        x = dom.grid()
        phi = Field(dom, (0.5 * np.sin(np.pi * x / 2.0))[None, :])
        traj = evolve(model, dom, phi, 60.0, dt=0.002)
        profile = dirichlet_steady_profile(2.0, 0.1)
        target = np.interp(x, profile.x, profile.u)
        err = float(np.max(np.abs(traj.fields[-1][0] - target)))
        assert err < 5e-3
        assert float(traj.fields[-1].min()) >= -1e-8

    def test_negativity_guard_raises_without_clamping(self):
        # Crank-Nicolson at large diffusion number undershoots a Dirichlet
        # bump below -1e-8; the guard must raise instead of clamping
        model = CompetitionModel(a=np.array([[1.0]]), d=np.array([0.1]))
        dom = Domain1D(kind="interval", length=2.0, N=128, bc="dirichlet")
        x = dom.grid()
        phi = Field(dom, (0.5 * np.sin(np.pi * x / 2.0))[None, :])
        with pytest.raises(InvariantViolation):
            evolve(model, dom, phi, 200.0, dt=0.01)


class TestProbes:
    def test_probe_traces_match_snapshots_at_nodes(self, reference_model):
        dom = _interval(64)
        phi = Field(dom, reference_phi_values(dom.grid()))
        x = dom.grid()
        probe_x = [float(x[13]), float(x[40])]
        traj = evolve(reference_model, dom, phi, 1.0, dt=0.01, probes=probe_x)
        assert traj.probe_values.shape[1:] == (3, 2)
        # at t = 0 the probe values sample the initial field exactly
        expected0 = reference_phi_values(np.array(probe_x))
        assert np.max(np.abs(traj.probe_values[0] - expected0)) < 1e-12

    def test_probe_stride_subsamples_times(self, reference_model):
        dom = _interval(32)
        phi = Field(dom, reference_phi_values(dom.grid()))
        t1 = evolve(reference_model, dom, phi, 0.5, dt=0.01, probe_stride=1)
        t5 = evolve(reference_model, dom, phi, 0.5, dt=0.01, probe_stride=5)
        assert t1.probe_times.size == 51
        assert t5.probe_times.size == 11
        assert np.allclose(t5.probe_times, t1.probe_times[::5])

    def test_probe_outside_domain_rejected(self, reference_model):
        dom = _interval(32)
        phi = Field(dom, reference_phi_values(dom.grid()))
        with pytest.raises(ValueError):
            evolve(reference_model, dom, phi, 0.1, probes=[1.5])

    def test_snapshot_count_and_endpoints(self, reference_model):
        dom = _interval(32)
        phi = Field(dom, reference_phi_values(dom.grid()))
        traj = evolve(reference_model, dom, phi, 1.0, dt=0.01, snapshots=50)
        assert traj.times[0] == 0.0
        assert traj.times[-1] == pytest.approx(1.0)
        assert np.max(np.abs(traj.fields[0] - phi.values)) == 0.0
