"""Force evaluation and the three integrators, against hand-derived oracles."""

import math
import threading

import numpy as np
import pytest

from springsim.engine import (
    DivergenceError,
    Engine,
    ForceSlab,
    contact_force,
    simulate,
    spring_force,
    total_force,
)
from springsim.model import ActuationGroup, ContactPlane, Scene, contact_floor


def falling_mass(dt=0.01, m=1.0):
    scene = Scene(dt=dt)
    scene.add_mass((0.0, 0.0, 0.0), m=m)
    return scene


def axial_oscillator(dt, displacement=0.5, k=1.0, m=1.0):
    """Anchor at origin, unit rest length along x: exactly linear dynamics
    (u(t) = u0*cos(sqrt(k/m)*t)) as long as the mass never reaches the
    anchor, so keep |u0| well below the rest length."""
    scene = Scene(gravity=(0.0, 0.0, 0.0), dt=dt)
    a = scene.add_mass((0.0, 0.0, 0.0), fixed=True)
    b = scene.add_mass((1.0 + displacement, 0.0, 0.0), m=m)
    scene.add_spring(a, b, k=k, l0=1.0)
    return scene, b


class TestSpringForce:
    def test_at_rest_length(self):
        np.testing.assert_array_equal(spring_force((0, 0, 0), (1, 0, 0), 100.0, 1.0),
                                      np.zeros(3))

    def test_tension_pulls_toward_partner(self):
        f = spring_force((0, 0, 0), (2, 0, 0), 100.0, 1.0)
        np.testing.assert_allclose(f, [100.0, 0.0, 0.0])

    def test_compression_pushes_apart(self):
        f = spring_force((0, 0, 0), (0.5, 0, 0), 100.0, 1.0)
        np.testing.assert_allclose(f, [-50.0, 0.0, 0.0])

    def test_newtons_third_law(self):
        xi, xj = (0.2, -0.4, 1.0), (1.1, 0.3, -0.2)
        fi = spring_force(xi, xj, 37.0, 0.8)
        fj = spring_force(xj, xi, 37.0, 0.8)
        np.testing.assert_array_equal(fi, -fj)

    def test_coincident_endpoints_zero_force(self):
        np.testing.assert_array_equal(spring_force((1, 1, 1), (1, 1, 1), 1e4, 1.0),
                                      np.zeros(3))

    def test_degenerate_spring_counted_not_faulted(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0))
        scene.add_mass((0, 0, 0))
        scene.add_mass((0, 0, 0))
        scene.add_spring(0, 1, k=100.0, l0=1.0)
        engine = Engine(scene, integrator="euler")
        engine.step(3)
        assert engine.degenerate_springs == 3
        np.testing.assert_array_equal(engine.v, np.zeros((2, 3)))


class TestTotalForce:
    def test_isolated_mass_feels_gravity(self):
        scene = Scene()
        scene.add_mass((5.0, 2.0, 1.0), m=0.1)
        np.testing.assert_allclose(total_force(scene, 0), [0.0, -0.981, 0.0])

    def test_equilibrium_is_zero(self, oscillator):
        np.testing.assert_allclose(total_force(oscillator, 1), np.zeros(3), atol=1e-12)

    def test_external_force_passthrough(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0))
        scene.add_mass((0, 0, 0), f_ext=(1.0, 2.0, 3.0))
        np.testing.assert_allclose(total_force(scene, 0), [1.0, 2.0, 3.0])

    def test_spring_and_gravity_superpose(self):
        scene = Scene()
        a = scene.add_mass((0, 1, 0), fixed=True)
        b = scene.add_mass((0, -0.5, 0), m=0.1)  # stretched 0.5 past rest
        scene.add_spring(a, b, k=10.0, l0=1.0)
        np.testing.assert_allclose(total_force(scene, b), [0.0, 5.0 - 0.981, 0.0])


class TestContact:
    plane = ContactPlane(normal=(0.0, 1.0, 0.0), offset=0.0, penalty=1e5, friction=0.5)

    def test_above_plane_no_force(self):
        f = contact_force((0, 0.1, 0), (0, -1, 0), 0.1, self.plane, 1e-4)
        np.testing.assert_array_equal(f, np.zeros(3))

    def test_penalty_magnitude(self):
        f = contact_force((0, -0.01, 0), (0, 0, 0), 0.1, self.plane, 1e-4)
        np.testing.assert_allclose(f, [0.0, 1000.0, 0.0])

    def test_frictionless_force_is_normal(self):
        frictionless = ContactPlane(normal=(0.0, 1.0, 0.0), penalty=1e5)
        f = contact_force((0, -0.01, 0), (3.0, 0.0, -2.0), 0.1, frictionless, 1e-4)
        assert f[0] == 0.0 and f[2] == 0.0
        assert f[1] == pytest.approx(1000.0)

    def test_friction_opposes_tangential_velocity(self):
        f = contact_force((0, -0.01, 0), (2.0, 0.0, 0.0), 10.0, self.plane, 1e-4)
        # mu*Fn = 500 < |v_t|*m/dt = 2e5: Coulomb regime
        np.testing.assert_allclose(f, [-500.0, 1000.0, 0.0])

    def test_friction_clamped_to_stopping_force(self):
        # light, slow mass: mu*Fn = 500 would reverse it; clamp wins
        f = contact_force((0, -0.01, 0), (0.001, 0.0, 0.0), 0.1, self.plane, 1.0)
        np.testing.assert_allclose(f, [-0.0001, 1000.0, 0.0])

    def test_sliding_block_decelerates_on_floor(self):
        scene = Scene(planes=[contact_floor(penalty=1e6, friction=0.3)], dt=1e-4)
        scene.add_mass((0.0, -1e-5, 0.0), m=0.1, v=(1.0, 0.0, 0.0))
        engine = Engine(scene, integrator="euler")
        engine.step(2000)
        assert engine.v[0, 0] < 1.0  # friction ate forward momentum


class TestEuler:
    def test_force_free_drift(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=0.1)
        scene.add_mass((0, 0, 0), v=(1.0, 0.0, 0.0))
        engine = Engine(scene, integrator="euler")
        engine.step()
        np.testing.assert_allclose(engine.x[0], [0.1, 0.0, 0.0])
        np.testing.assert_allclose(engine.v[0], [1.0, 0.0, 0.0])

    def test_free_fall_single_step(self):
        engine = Engine(falling_mass(dt=0.01), integrator="euler")
        engine.step()
        assert engine.x[0, 1] == 0.0  # position uses the pre-step velocity
        assert engine.v[0, 1] == pytest.approx(-0.0981)

    def test_fixed_mass_immovable(self):
        scene = Scene()
        scene.add_mass((1.0, 2.0, 3.0), fixed=True, f_ext=(1e6, 0, 0))
        engine = Engine(scene, integrator="euler")
        engine.step(10)
        np.testing.assert_array_equal(engine.x[0], [1.0, 2.0, 3.0])
        np.testing.assert_array_equal(engine.v[0], np.zeros(3))

    def test_damping_scales_velocity(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=0.1, damping=0.1)
        scene.add_mass((0, 0, 0), v=(1.0, 0.0, 0.0))
        engine = Engine(scene, integrator="euler")
        engine.step()
        assert engine.v[0, 0] == pytest.approx(0.9)


class TestVerlet:
    def test_bootstrap_step(self):
        engine = Engine(falling_mass(dt=0.01), integrator="verlet")
        engine.step()
        assert engine.x[0, 1] == pytest.approx(-4.905e-4)

    def test_recurrence_with_zero_force(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=1.0)
        scene.add_mass((1.0, 0.0, 0.0))
        engine = Engine(scene, integrator="verlet")
        engine.x_prev = np.array([[0.9, 0.0, 0.0]])
        engine.step()
        # x_new = 2*1.0 - 0.9
        assert engine.x[0, 0] == pytest.approx(1.1)

    def test_exact_for_constant_force(self):
        engine = Engine(falling_mass(dt=0.01), integrator="verlet")
        engine.step(100)
        t = engine.t
        assert t == pytest.approx(1.0)
        assert engine.x[0, 1] == pytest.approx(-0.5 * 9.81 * t * t, abs=1e-10)

    def test_velocity_is_central_difference(self):
        scene, b = axial_oscillator(dt=0.01)
        engine = Engine(scene, integrator="verlet")
        engine.step(5)
        # after step n the reported v is (x_n - x_{n-2}) / (2 dt); check
        # against an independent position replay
        replay = Engine(scene, integrator="verlet")
        xs = [replay.x.copy()]
        for _ in range(5):
            replay.step()
            xs.append(replay.x.copy())
        central = (xs[5] - xs[3]) / (2 * 0.01)
        np.testing.assert_allclose(engine.v[b], central[b], rtol=0, atol=0)

    def test_prev_buffer_populated_after_first_step(self):
        engine = Engine(falling_mass(), integrator="verlet")
        assert engine.state.prev_positions is None
        engine.step()
        assert engine.state.prev_positions is not None

    def test_damped_form_decays_amplitude(self):
        scene, b = axial_oscillator(dt=0.001, displacement=0.5)
        scene.damping = 0.01
        engine = Engine(scene, integrator="verlet")
        engine.step(2000)
        assert abs(engine.x[b, 0] - 1.0) < 0.5  # strictly shrunk from u0=0.5
        # and the undamped twin does not shrink
        scene.damping = 0.0
        free = Engine(scene, integrator="verlet")
        free.step(2000)
        amp = 0.0
        for _ in range(6500):  # scan a full period (2*pi/omega = 6283 steps)
            free.step()
            amp = max(amp, abs(free.x[b, 0] - 1.0))
        assert amp > 0.49


class TestRK4:
    def test_force_free_drift(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=0.1)
        scene.add_mass((0, 0, 0), v=(1.0, 0.0, 0.0))
        engine = Engine(scene, integrator="rk4")
        engine.step()
        np.testing.assert_allclose(engine.x[0], [0.1, 0.0, 0.0])

    def test_free_fall_exact(self):
        engine = Engine(falling_mass(dt=0.02), integrator="rk4")
        engine.step(50)
        assert engine.x[0, 1] == pytest.approx(-0.5 * 9.81, abs=1e-12)

    def test_harmonic_oscillator_one_period_error(self):
        scene, b = axial_oscillator(dt=0.01)  # omega = 1
        engine = Engine(scene, integrator="rk4")
        steps = 628
        engine.step(steps)
        t = steps * 0.01
        exact = 1.0 + 0.5 * math.cos(t)
        assert abs(engine.x[b, 0] - exact) < 1e-8

    def test_fixed_mass_immovable_through_stages(self):
        scene, _ = axial_oscillator(dt=0.01, displacement=0.4)
        engine = Engine(scene, integrator="rk4")
        engine.step(50)
        np.testing.assert_array_equal(engine.x[0], [0.0, 0.0, 0.0])


class TestStateBookkeeping:
    def test_time_is_step_count_times_dt(self):
        engine = Engine(falling_mass(dt=0.1), integrator="euler")
        for n in range(1, 6):
            engine.step()
            assert engine.t == n * 0.1
            assert engine.n == n

    def test_divergence_names_mass_and_step(self):
        # absurd dt on a stiff spring blows up fast
        scene, b = axial_oscillator(dt=10.0, k=1e4, m=0.01)
        engine = Engine(scene, integrator="euler")
        with pytest.raises(DivergenceError) as err:
            engine.step(10000)
        assert err.value.mass_id == b
        assert err.value.step > 0
        assert "smaller dt" in str(err.value)

    def test_anchor_positions_bit_identical_across_run(self):
        scene = Scene()
        a = scene.add_mass((0.1, 0.2, 0.3), fixed=True)
        b = scene.add_mass((0.1, -0.9, 0.3), m=0.1)
        scene.add_spring(a, b, k=1000.0)
        before = np.array(scene.masses[a].x)
        engine = Engine(scene, integrator="verlet")
        engine.step(500)
        assert engine.x[a].tobytes() == before.tobytes()


class TestForceSlab:
    def test_single_spring_writes_one_slot_per_endpoint(self):
        x = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        slab = ForceSlab.for_degrees([1, 1])
        slab.fill(x, np.array([0]), np.array([1]), np.array([100.0]), np.array([1.0]))
        np.testing.assert_array_equal(slab.counter, [1, 1])
        np.testing.assert_array_equal(slab.slots[0, 0], [100.0, 0.0, 0.0])
        np.testing.assert_array_equal(slab.slots[1, 0], -slab.slots[0, 0])
        assert slab.slot_spring[0, 0] == 0 == slab.slot_spring[1, 0]

    def test_sum_resets_counters(self):
        x = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        slab = ForceSlab.for_degrees([1, 1])
        slab.fill(x, np.array([0]), np.array([1]), np.array([100.0]), np.array([1.0]))
        acc = np.zeros((2, 3))
        slab.sum_into(acc, deterministic=True)
        np.testing.assert_array_equal(acc[0], [100.0, 0.0, 0.0])
        np.testing.assert_array_equal(slab.counter, [0, 0])

    def test_capacity_includes_constraint_headroom(self):
        slab = ForceSlab.for_degrees([26, 3])
        np.testing.assert_array_equal(slab.capacity, [30, 7])

    def test_overflow_faults(self):
        x = np.array([[0.0, 0.0, 0.0], [2.0, 0.0, 0.0]])
        slab = ForceSlab.for_degrees([1, 1])
        slab.capacity[:] = 0  # sabotage the bookkeeping
        with pytest.raises(RuntimeError, match="overflow"):
            slab.fill(x, np.array([0]), np.array([1]), np.array([100.0]), np.array([1.0]))


class TestActuation:
    def test_sinusoid_drives_oscillation(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=1e-3)
        a = scene.add_mass((0, 0, 0), fixed=True)
        b = scene.add_mass((1, 0, 0), m=0.1)
        scene.add_group(ActuationGroup("muscle", amplitude=0.1, frequency=5.0))
        scene.add_spring(a, b, k=100.0, group="muscle")
        res = simulate(scene, 1.0, traces=[b], integrator="verlet")
        x = res.positions[b][:, 0]
        assert x.max() > 1.02 and x.min() < 0.98

    def test_constant_expansion_shifts_equilibrium(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=1e-3, damping=0.05)
        a = scene.add_mass((0, 0, 0), fixed=True)
        b = scene.add_mass((1, 0, 0), m=0.1)
        scene.add_group(ActuationGroup("grow", mode="constant-expansion", amplitude=0.2))
        scene.add_spring(a, b, k=100.0, group="grow")
        engine = Engine(scene, integrator="verlet")
        engine.step(5000)
        assert engine.x[b, 0] == pytest.approx(1.2, abs=1e-3)


class TestSimulate:
    def test_zero_duration_changes_nothing(self):
        scene = falling_mass()
        res = simulate(scene, 0.0, traces=[0], integrator="euler")
        assert res.engine.n == 0
        assert len(res.times) == 1
        np.testing.assert_array_equal(res.positions[0][0], [0.0, 0.0, 0.0])

    def test_free_fall_one_second(self):
        res = simulate(falling_mass(dt=1e-3), 1.0, traces=[0], integrator="verlet")
        assert res.engine.x[0, 1] == pytest.approx(-4.905, abs=1e-3)

    def test_verlet_samples_lag_one_step(self):
        res = simulate(falling_mass(dt=0.01), 0.05, traces=[0], integrator="verlet")
        # 5 steps -> samples for steps 0..4; engine sits at step 5
        assert res.engine.n == 5
        np.testing.assert_allclose(res.times, [0.0, 0.01, 0.02, 0.03, 0.04])

    def test_sample_every(self):
        res = simulate(falling_mass(dt=0.01), 0.1, traces=[0], integrator="euler",
                       sample_every=5)
        np.testing.assert_allclose(res.times, [0.0, 0.05, 0.1])

    def test_continuation_keeps_absolute_time(self):
        scene = falling_mass(dt=0.01)
        first = simulate(scene, 0.05, traces=[0], integrator="euler")
        second = simulate(scene, 0.05, traces=[0], engine=first.engine)
        assert second.times[0] == pytest.approx(0.06)
        assert second.engine.n == 10

    def test_trace_csv_format(self, tmp_path):
        res = simulate(falling_mass(dt=0.01), 0.03, traces=[0], integrator="euler")
        path = tmp_path / "trace.csv"
        res.write_csv(path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == "t,0.x,0.y,0.z,epe,gpe,ke,total"
        assert len(lines) == 1 + 4
        # >= 15 significant digits survive a round-trip
        value = float(lines[2].split(",")[2])
        assert value == res.positions[0][1, 1]

    def test_commands_applied_between_steps(self):
        scene = falling_mass(dt=0.01)
        engine = Engine(scene, integrator="euler")
        engine.post_command({"op": "set-damping", "value": 0.5})
        engine.step()
        assert engine.damping == 0.5

    def test_stop_command_halts_run(self):
        scene = falling_mass(dt=0.01)
        engine = Engine(scene, integrator="euler")
        engine.post_command({"op": "stop"})
        res = simulate(scene, 1.0, engine=engine)
        assert res.engine.n == 1  # the stop lands at the first step boundary

    def test_pause_resume_roundtrip(self):
        scene = falling_mass(dt=0.01)
        engine = Engine(scene, integrator="euler")
        engine.post_command({"op": "pause"})
        engine.step()  # applies pause (stepping once first)
        assert engine.paused
        done = threading.Event()

        def finish():
            simulate(scene, 0.05, engine=engine)
            done.set()

        worker = threading.Thread(target=finish)
        worker.start()
        assert not done.wait(0.1)  # parked
        engine.post_command({"op": "resume"})
        assert done.wait(5.0)
        worker.join()
        assert engine.n == 6

    def test_bad_command_reported_not_fatal(self):
        engine = Engine(falling_mass(), integrator="euler")
        engine.post_command({"op": "warp-reality"})
        engine.step()
        assert engine.command_errors and "warp-reality" in engine.command_errors[0]


class TestMomentum:
    def test_isolated_pair_conserves_momentum(self, two_mass_free):
        engine = Engine(two_mass_free, integrator="euler")
        p0 = (engine.m[:, None] * engine.v).sum(axis=0)
        scale = 0.0
        for _ in range(500):
            f = engine.forces(engine.x, engine.v, engine.t)
            scale = max(scale, np.abs(f).sum())
            engine.step()
        p1 = (engine.m[:, None] * engine.v).sum(axis=0)
        assert np.abs(f.sum(axis=0)).max() <= 1e-9 * max(scale, 1.0)
        np.testing.assert_allclose(p1, p0, atol=1e-9 * max(scale, 1.0))


@pytest.mark.slow
class TestStability:
    def test_default_timestep_oscillator_bounded_for_a_million_steps(self):
        scene = Scene(gravity=(0.0, 0.0, 0.0), dt=1e-4)
        a = scene.add_mass((0.0, 0.0, 0.0), fixed=True)
        b = scene.add_mass((1.01, 0.0, 0.0), m=0.1)
        scene.add_spring(a, b, k=10000.0, l0=1.0)
        engine = Engine(scene, integrator="verlet")
        for _ in range(100):
            engine.step(10_000)
            assert np.abs(engine.x[b] - [1.0, 0.0, 0.0]).max() < 0.1
        assert engine.n == 1_000_000
