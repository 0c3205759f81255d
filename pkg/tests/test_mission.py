"""Flight-plan structure: phase sequencing, durations, linkage bookkeeping,
launch geometry, and target-orbit quantities."""

import numpy as np
import pytest

from ascentopt.environment import EarthModel
from ascentopt.mission import (DEFAULT_MESH, FIXED_DURATIONS,
                               GuidanceMode, LaunchSite, Schedule,
                               SplashDownSpec, TargetOrbit, build_phase_plan,
                               initial_state, pitch_over_azimuth)
from ascentopt.vehicle import vega_vehicle

EARTH = EarthModel()
VEH = vega_vehicle()
TARGET = TargetOrbit(EARTH.r_earth + 700e3, np.pi / 2)


def plan_for(splash=None, **kwargs):
    return build_phase_plan(VEH, Schedule(), TARGET,
                            SplashDownSpec(splash), **kwargs)


class TestPhaseSequence:
    def test_unconstrained_has_twelve_phases(self):
        plan = plan_for()
        assert len(plan.phases) == 12
        assert not plan.has_return

    def test_constrained_appends_return_phase(self):
        plan = plan_for(np.radians(60.0))
        assert len(plan.phases) == 13
        assert plan.has_return
        assert plan.phases[-1].guidance is GuidanceMode.RETURN

    def test_guidance_modes(self):
        plan = plan_for(np.radians(60.0))
        modes = {p.index: p.guidance for p in plan}
        assert modes[1] is GuidanceMode.VERTICAL
        assert all(modes[i] is GuidanceMode.OPTIMAL for i in (2, 7, 8, 10, 12))
        assert all(modes[i] is GuidanceMode.ZLGT for i in (3, 5))
        assert all(modes[i] is GuidanceMode.COAST for i in (4, 6, 9, 11))

    def test_free_phases(self):
        assert plan_for().free_indices == (10, 11, 12)
        assert plan_for(np.radians(60.0)).free_indices == (10, 11, 12, 13)

    def test_fixed_durations_match_flight_sequence(self):
        plan = plan_for()
        for i, dt in enumerate(FIXED_DURATIONS, start=1):
            assert plan.phase(i).fixed
            assert plan.phase(i).duration == dt

    def test_stage_burn_budget_consistency(self):
        # phases 1-3 span the full stage-1 burn, phase 5 the stage-2 burn,
        # phases 7-8 the stage-3 burn
        plan = plan_for()
        d = {p.index: p.duration for p in plan}
        assert d[1] + d[2] + d[3] == pytest.approx(VEH.stages[0].t_b)
        assert d[5] == pytest.approx(VEH.stages[1].t_b)
        assert d[7] + d[8] == pytest.approx(VEH.stages[2].t_b)

    def test_mass_drops(self):
        plan = plan_for()
        drops = {p.index: p.mass_drop_before for p in plan}
        assert drops[4] == VEH.stages[0].m_dry
        assert drops[6] == VEH.stages[1].m_dry
        assert drops[8] == VEH.m_fairing
        assert drops[9] == VEH.stages[2].m_dry
        assert sum(drops.values()) == pytest.approx(
            VEH.stages[0].m_dry + VEH.stages[1].m_dry + VEH.m_fairing
            + VEH.stages[2].m_dry)

    def test_heat_flux_window(self):
        plan = plan_for(np.radians(60.0))
        constrained = {p.index for p in plan if p.heat_flux_constrained}
        assert constrained == {8, 9, 10, 11, 12}


class TestBurnClock:
    def test_final_burn_split_offsets(self):
        # phase 10 ignites the fourth stage; phase 12 finishes its burn,
        # so its ignition clock is t_b4 minus its own duration
        plan = plan_for()
        assert plan.t_b4 == VEH.stages[3].t_b
        p10, p12 = plan.phase(10), plan.phase(12)
        sigma12 = 150.0
        assert plan.burn_offset(p10, 999.0) == 0.0
        assert plan.burn_offset(p12, sigma12) == pytest.approx(
            plan.t_b4 - sigma12)

    def test_third_stage_second_arc_offset(self):
        plan = plan_for()
        assert plan.phase(8).burn_clock_offset == pytest.approx(
            plan.phase(7).duration)

    def test_schedule_guess_consistency(self):
        plan = plan_for()
        assert plan.phase(10).duration == pytest.approx(
            VEH.stages[3].t_b - 200.0)

    def test_overlong_final_split_rejected(self):
        with pytest.raises(ValueError):
            build_phase_plan(VEH, Schedule(dt12_guess=502.2), TARGET,
                             SplashDownSpec())


class TestMesh:
    def test_default_orders(self):
        plan = plan_for(np.radians(60.0))
        for p in plan:
            if p.index == 13:
                assert p.mesh_p == (10,) * 10
            elif p.index in DEFAULT_MESH:
                h, order = DEFAULT_MESH[p.index]
                assert p.mesh_p == (order,) * h
            else:
                assert p.mesh_h == 1

    def test_node_counts(self):
        plan = plan_for()
        p8 = plan.phase(8)
        assert p8.n_collocation_nodes == sum(p8.mesh_p)
        assert p8.n_state_nodes == sum(p8.mesh_p) + 1

    def test_overrides(self):
        plan = plan_for(mesh_overrides={8: (2, 10)})
        assert plan.phase(8).mesh_p == (10, 10)


class TestLaunchGeometry:
    def test_initial_state_on_equator(self):
        r0, v0 = initial_state(EARTH, LaunchSite())
        assert np.allclose(r0, [EARTH.r_earth, 0.0, 0.0])
        assert np.allclose(v0, [0.0, EARTH.omega * EARTH.r_earth, 0.0])

    def test_initial_speed_at_latitude(self):
        lat = np.radians(45.0)
        r0, v0 = initial_state(EARTH, LaunchSite(lat))
        assert np.linalg.norm(r0) == pytest.approx(EARTH.r_earth)
        assert np.linalg.norm(v0) == pytest.approx(
            EARTH.omega * EARTH.r_earth * np.cos(lat))

    def test_polar_azimuth_is_due_north(self):
        assert pitch_over_azimuth(np.pi / 2, 0.0) == pytest.approx(0.0)

    def test_equatorial_orbit_from_equator_is_due_east(self):
        assert pitch_over_azimuth(0.0, 0.0) == pytest.approx(np.pi / 2)

    def test_unreachable_inclination_rejected(self):
        with pytest.raises(ValueError):
            pitch_over_azimuth(np.radians(10.0), np.radians(45.0))


class TestTargetOrbit:
    def test_polar_target_has_zero_axial_momentum(self):
        # cos(pi/2) rounds to ~6e-17, scaled by sqrt(mu a) ~ 5e10 m^2/s
        assert TARGET.h_z_des(EARTH) == pytest.approx(0.0, abs=1e-4)

    def test_axial_momentum_general(self):
        t = TargetOrbit(EARTH.r_earth + 500e3, np.radians(51.6))
        expected = np.cos(t.i_des) * np.sqrt(EARTH.mu * t.a_des)
        assert t.h_z_des(EARTH) == pytest.approx(expected, rel=1e-12)

    def test_invalid_inputs_rejected(self):
        with pytest.raises(ValueError):
            TargetOrbit(EARTH.r_earth + 500e3, -0.1)
        with pytest.raises(ValueError):
            TargetOrbit(1000.0, np.pi / 2).h_z_des(EARTH)
        with pytest.raises(ValueError):
            SplashDownSpec(latitude=2.0)
        with pytest.raises(ValueError):
            LaunchSite(latitude=-2.0)
