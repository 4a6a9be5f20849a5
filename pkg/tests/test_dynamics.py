import json
import math

import numpy as np
import pytest
from scipy.linalg import expm

from spinglass.errors import DefinitenessError, InstanceFormatError
from spinglass.dynamics import (
    ClockSystem,
    FixedPointCode,
    SystemSpec,
    build_clock_system,
    complex_to_real,
    decode_fixed_point,
    encode_fixed_point,
    exact_trajectory,
    literal_energy_coefficients,
    load_system_spec,
    nearest_bits,
    objective_value,
    quadratic_objective,
    qubit_rotation_spec,
    simulate_pipeline,
    step_propagators,
    truncate_coefficients,
)
from spinglass.model import QuboInstance, qubo_energy

RABI = [(1, 0), (0, 1), (-1, 0), (0, -1)]


class TestPropagators:
    def test_quarter_rotation(self):
        (U,) = step_propagators(qubit_rotation_spec(2))
        assert np.allclose(U @ [1, 0], [0, 1], atol=1e-15)

    def test_zero_generator(self):
        spec = SystemSpec(np.zeros((3, 3)), np.ones(3), N=4)
        assert all(np.array_equal(U, np.eye(3)) for U in step_propagators(spec))

    def test_midpoint_second_order(self):
        # commuting K(t) = t * K0, so the exact step is exp(K0 (t1^2 - t0^2) / 2)
        K0 = np.array([[0.0, -1.0], [1.0, 0.0]])
        spec = SystemSpec(lambda t: (1.0 + t * t) * K0, [1.0, 0.0], times=[0.0, 1.0])
        exact = expm(K0 * (1.0 + 1.0 / 3.0))
        errs = [np.linalg.norm(step_propagators(spec, s)[0] - exact) for s in (4, 8)]
        assert errs[0] / errs[1] == pytest.approx(4.0, rel=0.05)

    def test_bad_substeps(self):
        with pytest.raises(ValueError):
            step_propagators(qubit_rotation_spec(2), 0)

    def test_non_square(self):
        with pytest.raises(ValueError):
            SystemSpec(np.zeros((2, 3)), [1, 0], N=2)


class TestComplexEmbedding:
    def test_imaginary_unit(self):
        E = complex_to_real(np.array([[1j]]))
        assert np.array_equal(E, [[0, -1], [1, 0]])
        assert np.array_equal(E @ E, -np.eye(2))

    def test_real_input_doubles(self):
        E = complex_to_real(np.array([[2.0, 3.0]]))
        assert np.array_equal(E, [[2, 0, 3, 0], [0, 2, 0, 3]])

    def test_homomorphism(self, rng):
        A = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        B = rng.normal(size=(3, 3)) + 1j * rng.normal(size=(3, 3))
        assert np.allclose(complex_to_real(A @ B), complex_to_real(A) @ complex_to_real(B), atol=1e-12)
        assert np.allclose(complex_to_real(A + B), complex_to_real(A) + complex_to_real(B), atol=1e-12)


class TestClock:
    def test_identity_two_points(self):
        cs = build_clock_system([np.eye(2)], [1.0, 0.0])
        x = np.linalg.solve(cs.A, cs.phi)
        assert np.allclose(x, [1, 0, 1, 0])

    @pytest.mark.parametrize("N", [4, 6])
    def test_residual_at_exact_trajectory(self, N):
        U = step_propagators(qubit_rotation_spec(N))
        cs = build_clock_system(U, [1.0, 0.0])
        assert cs.A.shape == (2 * N, 2 * N)
        psi = exact_trajectory(U, [1.0, 0.0]).ravel()
        assert np.linalg.norm(cs.A @ psi - cs.phi) <= 1e-12

    def test_complex_system(self):
        K = -1j * np.array([[0.0, 1.0], [1.0, 0.0]])
        spec = SystemSpec(K, [1.0, 0.0], N=3, field="complex")
        U = step_propagators(spec)
        cs = build_clock_system(U, spec.psi0)
        psi = exact_trajectory(U, spec.psi0)
        x = complex_to_real(psi.ravel())
        assert cs.complex_embedded and np.linalg.norm(cs.A @ x - cs.phi) <= 1e-12

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            build_clock_system([np.eye(3)], [1.0, 0.0])


class TestObjective:
    def test_identity_minimizers(self):
        cs = ClockSystem(np.eye(3), np.array([1.0, 0.0, 0.0]), 1, 3)
        for form in ("lsq", "energy"):
            G, c, _ = quadratic_objective(cs, form)
            assert np.allclose(np.linalg.solve(G, c), [1, 0, 0])

    def test_lsq_zero_at_exact(self):
        U = step_propagators(qubit_rotation_spec(4))
        cs = build_clock_system(U, [1.0, 0.0])
        G, c, k = quadratic_objective(cs)
        assert abs(objective_value(G, c, k, exact_trajectory(U, [1.0, 0.0]).ravel())) <= 1e-20 + 1e-15

    def test_spd_forms_agree(self, rng):
        M = rng.normal(size=(4, 4))
        A = M @ M.T + 4 * np.eye(4)
        phi = rng.normal(size=4)
        cs = ClockSystem(A, phi, 1, 4)
        direct = np.linalg.solve(A, phi)
        for form in ("lsq", "energy"):
            G, c, _ = quadratic_objective(cs, form)
            assert np.allclose(np.linalg.solve(G, c), direct, atol=1e-10)

    def test_energy_needs_definite(self):
        cs = ClockSystem(np.diag([1.0, -2.0]), np.ones(2), 1, 2)
        with pytest.raises(DefinitenessError) as info:
            quadratic_objective(cs, "energy")
        assert info.value.eigenvalue == -2.0


class TestFixedPoint:
    @pytest.mark.parametrize("bits,x", [((0, 0), -1.0), ((0, 1), 0.0), ((1, 0), 1.0), ((1, 1), 2.0)])
    def test_decode(self, bits, x):
        assert decode_fixed_point(bits, FixedPointCode(0, 2)).tolist() == [x]

    @pytest.mark.parametrize("D,R", [(0, 2), (1, 3), (-1, 4)])
    def test_grid_round_trip(self, D, R):
        code = FixedPointCode(D, R)
        grid = code.grid()
        assert np.array_equal(decode_fixed_point(nearest_bits(grid, code), code), grid)

    def test_literal_coefficient(self):
        b, _, _ = literal_energy_coefficients(np.ones((1, 1)), np.zeros(1), 0, 2)
        assert b[0, 0, 0, 0] == 2.0

    def test_variable_count(self):
        U = step_propagators(qubit_rotation_spec(6))
        G, c, k = quadratic_objective(build_clock_system(U, [1.0, 0.0]))
        q, varmap = encode_fixed_point(G, c, k, FixedPointCode(0, 2))
        assert q.n == 24 and varmap.shape == (12, 2)

    @pytest.mark.parametrize("form", ["lsq", "energy"])
    def test_encoding_consistency(self, form, rng):
        M = rng.normal(size=(2, 2))
        cs = ClockSystem(M @ M.T + 2 * np.eye(2), rng.normal(size=2), 1, 2)
        G, c, k = quadratic_objective(cs, form)
        code = FixedPointCode(0, 2)
        q, varmap = encode_fixed_point(G, c, k, code)
        for w in range(16):
            bits = np.array([(w >> int(v)) & 1 for v in varmap.ravel()])
            x = decode_fixed_point(bits, code)
            assert qubo_energy(q, w) == pytest.approx(objective_value(G, c, k, x), abs=1e-10)


class TestTruncation:
    def test_values(self):
        q = truncate_coefficients(QuboInstance(2, {0: 0.123, 1: -0.987}, {(0, 1): 3.0}), 1)
        assert q.b == {0: 0.1, 1: -0.9} and q.a == {(0, 1): 3.0}

    def test_integers_unchanged(self):
        q = QuboInstance(2, {0: 4.0}, {(0, 1): -2.0})
        assert truncate_coefficients(q, 0) == q

    def test_negative_digits(self):
        with pytest.raises(ValueError):
            truncate_coefficients(QuboInstance(1), -1)


class TestPipeline:
    def test_four_point_rabi(self):
        traj = simulate_pipeline(qubit_rotation_spec(4), FixedPointCode(0, 2))
        assert traj.normalized.tolist() == [list(p) for p in RABI]

    def test_zero_generator_constant(self):
        spec = SystemSpec(np.zeros((2, 2)), [0.0, 1.0], N=3)
        traj = simulate_pipeline(spec, FixedPointCode(0, 2))
        assert traj.normalized.tolist() == [[0, 1]] * 3

    def test_truncation_sweep(self):
        spec, code = qubit_rotation_spec(4), FixedPointCode(0, 2)
        base = simulate_pipeline(spec, code)
        six = simulate_pipeline(spec, code, options={"truncate": 6})
        assert np.array_equal(base.raw, six.raw)

    def test_energy_form_on_rotation(self):
        traj = simulate_pipeline(qubit_rotation_spec(4), FixedPointCode(0, 2), options={"objective": "energy"})
        assert traj.normalized.tolist() == [list(p) for p in RABI]

    def test_energy_form_rejected(self):
        spec = SystemSpec(3.0 * np.eye(2), [1.0, 0.0], N=2)
        with pytest.raises(DefinitenessError):
            simulate_pipeline(spec, FixedPointCode(0, 2), options={"objective": "energy"})

    def test_json_spec(self, tmp_path):
        path = tmp_path / "spec.json"
        path.write_text(json.dumps({"L": 2, "field": "real", "K": [[0, -math.pi / 2], [math.pi / 2, 0]],
                                    "psi0": [1, 0], "N": 4, "R": 2, "D": 0}))
        spec, code = load_system_spec(path)
        assert spec.N == 4 and code == FixedPointCode(0, 2)

    def test_json_spec_invalid(self):
        with pytest.raises(InstanceFormatError):
            load_system_spec({"K": [[0]], "psi0": [1, 0], "N": 2})
