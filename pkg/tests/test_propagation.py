import numpy as np
import pytest

from spinsplit.analytic import EffectivePotential, stage_unitary
from spinsplit.fields import BichromaticWave, Envelope, MonoStandingWave
from spinsplit.observables import channel_report
from spinsplit.propagation import (
    ModeLatticeEngine,
    PacketSpec,
    PropagationConfig,
    Scenario,
    ScenarioError,
    default_timestep,
    run_scenario,
    stage_pulse_areas,
    step_effective,
    step_full_field,
    step_mode_lattice,
    timestep_ceiling,
    with_backend,
)
from spinsplit.states import (
    SPIN_Y_PLUS,
    SpatialGrid,
    gaussian_packet,
    spin_expectations,
)
from spinsplit.units import MC2_EV, fs_to_natural, um_to_natural

K = 200.0
RABI_MONO_200 = 200.0**2 / (8.0 * MC2_EV)
RABI_BI = 2.35e4**2 * 2.35e4 * 200.0 / (2.0 * MC2_EV**3)


def mono_stage(area, ea0=200.0, chi=0.0, rise_fs=0.5, start_fs=1.0):
    rise = fs_to_natural(rise_fs)
    omega = RABI_MONO_200 * (ea0 / 200.0) ** 2
    plateau = area / omega - 2 * (3 / 8) * rise
    return MonoStandingWave(ea0=ea0, photon_energy=K, chi=chi,
                            envelope=Envelope(rise, plateau, rise),
                            start=fs_to_natural(start_fs))


def bi_stage(area, rise_fs=0.5, start_fs=1.0):
    rise = fs_to_natural(rise_fs)
    plateau = area / RABI_BI - 2 * (5 / 16) * rise
    return BichromaticWave(ea1=2.35e4, ea2=2.35e4, photon_energy=K,
                           envelope=Envelope(rise, plateau, rise),
                           start=fs_to_natural(start_fs))


def effective_scenario(stages, *, width_um=0.08, spin="up", momentum=2 * K,
                       points=4096, length_um=1.2, tail_fs=1.0, **cfg):
    end = max((s.end for s in stages), default=0.0) + fs_to_natural(tail_fs)
    config = PropagationConfig(backend="effective", grid_points=points,
                               grid_length=um_to_natural(length_um), **cfg)
    packet = PacketSpec(center=0.0, width=um_to_natural(width_um),
                        momentum=momentum, spin=np.asarray(
                            {"up": [1, 0], "y+": SPIN_Y_PLUS}.get(spin, spin), dtype=complex))
    return Scenario(packet=packet, stages=stages, duration=end, config=config)


class TestFreeSpreading:
    def test_gaussian_width_growth(self):
        # sigma(t)^2 = sigma0^2 (1 + (t / 2 m sigma0^2)^2) over 500 fs
        grid_len = um_to_natural(0.3)
        sigma0 = um_to_natural(0.01)
        config = PropagationConfig(backend="full-field", grid_points=1024,
                                   grid_length=grid_len, keep_snapshots=True,
                                   snapshot_every=fs_to_natural(100.0))
        scn = Scenario(packet=PacketSpec(0.0, sigma0, 0.0), stages=[],
                       duration=fs_to_natural(500.0), config=config)
        result = run_scenario(scn)
        for t, psi in result.snapshots:
            expected = sigma0**2 * (1.0 + (t / (2.0 * MC2_EV * sigma0**2)) ** 2)
            assert psi.position_variance() == pytest.approx(expected, rel=1e-6)

    def test_drifting_packet_moves_ballistically(self):
        grid_len = um_to_natural(1.0)
        sigma0 = um_to_natural(0.02)
        p0 = 400.0
        config = PropagationConfig(backend="effective", grid_points=2048,
                                   grid_length=grid_len)
        scn = Scenario(packet=PacketSpec(0.0, sigma0, p0), stages=[],
                       duration=fs_to_natural(300.0), config=config)
        result = run_scenario(scn)
        expected = p0 / MC2_EV * scn.duration
        assert result.final_psi.position_expectation() == pytest.approx(
            expected, abs=2 * result.final_psi.grid.spacing)


class TestEffectiveBackend:
    def test_mono_quarter_rabi_splits_evenly(self):
        scn = effective_scenario([mono_stage(np.pi / 2)])
        rep = run_scenario(scn).final_report
        assert rep.pop_plus == pytest.approx(0.5, abs=0.01)
        assert rep.pop_minus == pytest.approx(0.5, abs=0.01)
        # spin untouched by the scalar lattice
        assert rep.bloch_minus[2] == pytest.approx(1.0, abs=1e-8)

    def test_mono_pi_transfers_fully(self):
        # width 0.2 um keeps the packet momentum spread well inside the Bragg
        # resonance (residual ~ (4 k sigma_p / m Omega)^2 ~ 0.6%)
        scn = effective_scenario([mono_stage(np.pi)], width_um=0.2, length_um=3.0,
                                 points=8192)
        rep = run_scenario(scn).final_report
        assert rep.pop_minus > 0.99

    def test_bichromatic_pi_fully_reflects_and_flips_spin(self):
        scn = effective_scenario([bi_stage(np.pi)], width_um=0.2, length_um=3.0,
                                 points=8192)
        rep = run_scenario(scn).final_report
        assert rep.pop_minus > 0.99
        assert rep.bloch_minus[2] == pytest.approx(-1.0, abs=1e-6)  # z-flip

    def test_bichromatic_preserves_sigma_y_eigenstate(self):
        scn = effective_scenario([bi_stage(np.pi)], spin="y+", width_um=0.2,
                                 length_um=3.0, points=8192)
        result = run_scenario(scn)
        rep = result.final_report
        assert rep.pop_minus > 0.99
        assert rep.sy_minus == pytest.approx(1.0, abs=1e-6)
        ts = result.timeseries
        assert np.max(np.abs(ts.sy_total - ts.sy_total[0])) < 1e-8

    def test_empty_potential_is_free(self):
        grid = SpatialGrid(um_to_natural(1.0), 1024)
        psi = gaussian_packet(grid, 0.0, um_to_natural(0.03), 0.0, "up")
        out = step_effective(psi, [], fs_to_natural(1.0))
        # only kinetic phases: density at t=~0 unchanged to high accuracy
        assert out.norm() == pytest.approx(1.0, abs=1e-12)


class TestStepFullField:
    def test_norm_preserved_per_step(self):
        grid = SpatialGrid(um_to_natural(1.2), 4096, field_wavenumber=K)
        psi = gaussian_packet(grid, 0.0, um_to_natural(0.08), 2 * K, "up")
        stage = mono_stage(np.pi / 2)
        dt = np.pi / (64.0 * K)
        out = step_full_field(psi, [stage], stage.start + 1.0, dt)
        assert out.norm() == pytest.approx(1.0, abs=1e-12)

    def test_timestep_ceiling_enforced(self):
        grid = SpatialGrid(um_to_natural(1.2), 4096, field_wavenumber=K)
        psi = gaussian_packet(grid, 0.0, um_to_natural(0.08), 2 * K, "up")
        from spinsplit.propagation import PropagationError

        with pytest.raises(PropagationError):
            step_full_field(psi, [mono_stage(np.pi / 2)], 0.0, 1.0)

    def test_zero_field_matches_free_gaussian(self):
        grid = SpatialGrid(um_to_natural(0.3), 1024)
        sigma0 = um_to_natural(0.01)
        psi = gaussian_packet(grid, 0.0, sigma0, 0.0, "up")
        t_total = fs_to_natural(200.0)
        for _ in range(100):
            psi = step_full_field(psi, [], 0.0, t_total / 100)
        expected = sigma0**2 * (1.0 + (t_total / (2.0 * MC2_EV * sigma0**2)) ** 2)
        assert psi.position_variance() == pytest.approx(expected, rel=1e-6)


class TestTimeReversal:
    def test_effective_backward_recovers_initial(self):
        grid = SpatialGrid(um_to_natural(1.2), 4096, field_wavenumber=K)
        psi0 = gaussian_packet(grid, 0.0, um_to_natural(0.08), 2 * K, "y+")
        pots = [EffectivePotential.mono(200.0, K, chi=0.4),
                EffectivePotential.bichromatic(2.35e4, 2.35e4, K)]
        dt = 0.001 / RABI_MONO_200
        psi = psi0
        for _ in range(400):
            psi = step_effective(psi, pots, dt)
        for _ in range(400):
            psi = step_effective(psi, pots, -dt)
        overlap = np.abs(np.sum(np.conj(psi0.psi) * psi.psi) * grid.spacing) ** 2
        assert overlap > 1.0 - 1e-6


class TestModeLattice:
    def test_zero_field_amplitudes_constant(self):
        c0 = np.zeros((9, 2), dtype=complex)
        c0[6] = SPIN_Y_PLUS
        c1 = step_mode_lattice(c0, [], 0.0, 0.05, wavenumber=K)
        np.testing.assert_array_equal(c0, c1)

    def test_restricted_two_modes_match_analytic(self):
        # N=2 with the static bichromatic lattice is exactly the analytic
        # two-level problem; integrate a pi/2 area and compare amplitudes.
        pot = EffectivePotential.bichromatic(2.35e4, 2.35e4, K)
        omega = pot.strength
        engine = ModeLatticeEngine(K, 2, potentials=[(pot, 1, None)],
                                   field_model="effective")
        c = engine.initial_state(+2, "up")
        theta = np.pi / 2
        t_total = theta / omega
        n = 400
        dt = t_total / n
        for i in range(n):
            c = engine.gl2_step(c, i * dt, dt)
        expected_vec = stage_unitary("bichromatic", theta).matrix @ np.array(
            [0, 0, 1, 0], dtype=complex)
        got = np.concatenate([c[0], c[4]])
        np.testing.assert_allclose(got, expected_vec, atol=1e-8)

    def test_restricted_mono_rabi_trace(self):
        pot = EffectivePotential.mono(200.0, K, chi=0.0)
        engine = ModeLatticeEngine(K, 2, potentials=[(pot, 1, None)],
                                   field_model="effective")
        c = engine.initial_state(+2, "up")
        omega = pot.strength
        t_total = np.pi / omega  # full transfer
        n = 600
        dt = t_total / n
        for i in range(n):
            c = engine.gl2_step(c, i * dt, dt)
        assert float(np.sum(np.abs(c[0]) ** 2)) == pytest.approx(1.0, abs=1e-8)

    def test_norm_conserved_at_large_coupling(self):
        # the implicit Gauss step must hold the norm even when lambda*dt ~ 0.4
        engine = ModeLatticeEngine(1600.0, 6, potentials=[
            (EffectivePotential("monochromatic", 500.0, 1600.0, 0.0), 1, None)],
            field_model="effective")
        c = engine.initial_state(+2, "up")
        dt = 8e-4  # lambda*dt ~ 0.4 for the 500 eV lattice
        for i in range(2000):
            c = engine.gl2_step(c, i * dt, dt)
        assert float(np.sum(np.abs(c) ** 2)) == pytest.approx(1.0, abs=1e-10)


class TestScenarioValidation:
    def test_same_kind_overlap_rejected(self):
        s1 = mono_stage(np.pi / 2, start_fs=1.0)
        s2 = mono_stage(np.pi / 2, start_fs=2.0)
        scn = effective_scenario([s1, s2], tail_fs=200.0)
        with pytest.raises(ScenarioError):
            scn.validate()

    def test_stage_beyond_duration_rejected(self):
        scn = effective_scenario([mono_stage(np.pi / 2)])
        scn.duration = scn.stages[0].end - 1.0
        with pytest.raises(ScenarioError):
            scn.validate()

    def test_unsorted_stages_rejected(self):
        s1 = mono_stage(np.pi / 4, start_fs=50.0)
        s2 = bi_stage(np.pi / 4, start_fs=1.0)
        scn = effective_scenario([s1, s2], tail_fs=300.0)
        with pytest.raises(ScenarioError):
            scn.validate()

    def test_mode_lattice_needs_common_photon_energy(self):
        s1 = bi_stage(np.pi / 4, start_fs=1.0)
        s2 = MonoStandingWave(ea0=200.0, photon_energy=150.0, chi=0.0,
                              envelope=Envelope(0.0, 10.0, 0.0), start=s1.end + 1.0)
        scn = effective_scenario([s1, s2], tail_fs=200.0)
        scn.config.backend = "mode-lattice"
        with pytest.raises(ScenarioError):
            scn.validate()

    def test_off_lattice_momentum_rejected_for_modes(self):
        scn = effective_scenario([mono_stage(np.pi / 2)], momentum=2 * K + 17.0)
        scn.config.backend = "mode-lattice"
        with pytest.raises(ScenarioError):
            scn.validate()

    def test_dt_ceiling_respected_by_runner(self):
        scn = effective_scenario([mono_stage(np.pi / 2)])
        scn.config.dt = 5.0 / RABI_MONO_200
        with pytest.raises(ScenarioError):
            run_scenario(scn)

    def test_bad_backend_rejected(self):
        with pytest.raises(ScenarioError):
            PropagationConfig(backend="magic")

    def test_mixed_kind_overlap_allowed(self):
        s1 = bi_stage(np.pi / 4, start_fs=1.0)
        s2 = mono_stage(np.pi / 4, start_fs=2.0)
        scn = effective_scenario([s1, s2], tail_fs=300.0)
        scn.validate()


class TestTimestepPolicy:
    def test_full_field_default_below_ceiling(self):
        stages = [mono_stage(np.pi / 2)]
        assert default_timestep("full-field", stages, 1.0) <= timestep_ceiling(
            "full-field", stages)
        assert default_timestep("full-field", stages, 1.0) == pytest.approx(
            np.pi / (64 * K), rel=1e-12)

    def test_effective_default(self):
        stages = [mono_stage(np.pi / 2)]
        assert default_timestep("effective", stages, 1.0) == pytest.approx(
            1e-3 / RABI_MONO_200, rel=1e-12)


class TestStagePulseAreas:
    def test_envelope_powers(self):
        s_m = mono_stage(np.pi)
        s_b = bi_stage(np.pi / 2)
        areas = dict()
        for s, om, teff, theta in stage_pulse_areas([s_b, s_m]):
            areas[s.kind] = theta
        assert areas["monochromatic"] == pytest.approx(np.pi, rel=1e-12)
        assert areas["bichromatic"] == pytest.approx(np.pi / 2, rel=1e-12)


@pytest.mark.parametrize("backend", ["full-field", "effective"])
def test_timestep_convergence_desk_scale(backend):
    # halving dt moves the final channel populations by < 1e-4
    from spinsplit.scenario import load_scenario

    scn, _ = load_scenario("desk-mono", backend=backend)
    r1 = run_scenario(scn)
    dt = default_timestep(backend, scn.stages, 1.0)
    scn2, _ = load_scenario("desk-mono", backend=backend)
    scn2.config.dt = dt / 2.0
    r2 = run_scenario(scn2)
    assert abs(r1.final_report.pop_plus - r2.final_report.pop_plus) < 1e-4
    assert abs(r1.final_report.pop_minus - r2.final_report.pop_minus) < 1e-4
