#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
test_oracle.py

Tests for the discretized operator and its spectral data.
"""

import math
import os
import sys
import unittest
from unittest.mock import patch

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

try:
    from magweyl import oracle
    from magweyl.asymptote import integrate_weyl
    from magweyl.config import ScenarioSection
    from magweyl.errors import GuardViolation, ValidationError
    from magweyl.fields import CoefficientSet, Field
    from magweyl.oracle import (
        assemble,
        check_guards,
        cluster_centres,
        effective_degeneracy,
        eigensolve,
        gauge_check,
        landau_levels,
        lattice_level_shift,
        load_eigenvalues,
        lowest_cluster_count,
        minimal_interior_nodes,
        observed_order,
        save_eigenvalues,
        spectral_count,
    )
    from magweyl.scenarios import build_scenario, scenario_grid
except ImportError as e:
    print(f"Warning: Could not import oracle module: {e}")
    oracle = None


def coeffs_on(grid, V=1.0, F=1.0, g12=0.0, g22=1.0):
    return CoefficientSet(
        grid,
        Field.constant(1.0, "g11"),
        Field.constant(g12, "g12"),
        Field.constant(g22, "g22"),
        Field.polynomial([[0.0, -0.5 * F]], "A1"),
        Field.polynomial([[0.0], [0.5 * F]], "A2"),
        Field.constant(V, "V"),
    )


@unittest.skipIf(oracle is None, "magweyl.oracle module not available for testing.")
class TestAssembly(unittest.TestCase):
    """Operator assembly and the resolution guards."""

    def test_dirichlet_laplacian(self):
        """mu = 0, V = 0 reduces to the five-point Dirichlet Laplacian."""
        grid = scenario_grid(20, 1.0)
        h, a = 0.1, grid.a
        sd = eigensolve(assemble(coeffs_on(grid, V=0.0, F=0.0), grid, 0.0, h))
        expected = 0.5 * h * h * 2.0 * (2.0 / a**2) * (1.0 - math.cos(math.pi * a / 2.0))
        self.assertAlmostEqual(sd.eigenvalues[0] / expected, 1.0, places=10)

    def test_hermitian_bitwise(self):
        grid = scenario_grid(20, 1.0)
        op = assemble(coeffs_on(grid, g12=0.2, g22=1.2), grid, 1.0, 0.1)
        self.assertEqual(op.dimension, 400)
        self.assertEqual(op.max_asymmetry(), 0.0)
        self.assertIn("flux_per_plaquette", op.guard_margins)
        self.assertLessEqual(max(op.guard_margins.values()), 1.0)

    def test_guard_violation(self):
        grid = scenario_grid(20, 1.0)
        with self.assertRaisesRegex(GuardViolation, "interior nodes per axis"):
            assemble(coeffs_on(grid), grid, 100.0, 0.01)

    def test_minimal_interior_nodes(self):
        need = minimal_interior_nodes(2.0, 8.0, 0.05, 1.0)
        self.assertEqual(need, 63)
        check_guards(scenario_grid(need, 1.0), 8.0, 0.05, 1.0)
        with self.assertRaises(GuardViolation):
            check_guards(scenario_grid(need - 3, 1.0), 8.0, 0.05, 1.0)

    def test_invalid_parameters(self):
        grid = scenario_grid(10, 1.0)
        with self.assertRaises(ValidationError):
            assemble(coeffs_on(grid), grid, 1.0, 0.0)


@unittest.skipIf(oracle is None, "magweyl.oracle module not available for testing.")
class TestEigensolve(unittest.TestCase):
    """Dense Hermitian eigensolve and spectral counting."""

    @classmethod
    def setUpClass(cls):
        cls.grid = scenario_grid(20, 1.0)
        cls.coeffs = coeffs_on(cls.grid)
        cls.sd = eigensolve(assemble(cls.coeffs, cls.grid, 1.0, 0.1))

    def test_small_hermitian(self):
        sd = eigensolve(np.array([[0.0, 1j], [-1j, 0.0]]))
        np.testing.assert_allclose(sd.eigenvalues, [-1.0, 1.0], atol=1e-14)
        sd = eigensolve(np.diag([3.0, -2.0, 1.0]))
        np.testing.assert_allclose(sd.eigenvalues, [-2.0, 1.0, 3.0])

    def test_desk_scale_cap(self):
        with patch.object(oracle, "DESK_SCALE_MAX_N", 3):
            with self.assertRaisesRegex(GuardViolation, "desk-scale"):
                eigensolve(np.eye(4))

    def test_sorted_and_orthonormal(self):
        self.assertTrue(np.all(np.diff(self.sd.eigenvalues) >= 0))
        self.assertLess(self.sd.orthonormality_error(), 1e-10)

    def test_completeness(self):
        """psi = 1 and tau = inf count every eigenvalue."""
        self.assertAlmostEqual(spectral_count(self.sd, 1.0, math.inf), 400.0, delta=1e-9)
        below = self.sd.eigenvalues[0] - 1.0
        self.assertEqual(spectral_count(self.sd, 1.0, below), 0.0)

    def test_psi_must_share_grid(self):
        other = build_scenario(
            ScenarioSection(name="landau", builtin="constant_field"), scenario_grid(12, 1.0), 1.0, 0.1
        )
        with self.assertRaises(ValidationError):
            spectral_count(self.sd, other.psi, 0.0)


@unittest.skipIf(oracle is None, "magweyl.oracle module not available for testing.")
class TestGauge(unittest.TestCase):
    """Spectrum under A -> A + grad(chi)."""

    def setUp(self):
        self.grid = scenario_grid(20, 1.0)
        self.coeffs = coeffs_on(self.grid)

    def test_constant_chi(self):
        self.assertEqual(gauge_check(self.coeffs, self.grid, 1.0, 0.1, Field.constant(0.3, "chi")), 0.0)

    def test_linear_and_bilinear_chi(self):
        """Link phases integrate these gauges exactly along every edge."""
        for table in ([[0.0], [1.0]], [[0.0, 0.0], [0.0, 1.0]]):
            chi = Field.polynomial(table, "chi")
            self.assertLess(gauge_check(self.coeffs, self.grid, 1.0, 0.1, chi), 1e-9)

    def test_gauge_error_refines(self):
        chi = Field.polynomial([[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [0.0, 1.0]], "chi")  # x^3 y
        errors = []
        for n in (15, 31):
            grid = scenario_grid(n, 1.0)
            errors.append(gauge_check(coeffs_on(grid), grid, 1.0, 0.1, chi))
        self.assertGreater(errors[0], 0.0)
        self.assertGreaterEqual(observed_order(*errors), 1.5)


@unittest.skipIf(oracle is None, "magweyl.oracle module not available for testing.")
class TestLandauHelpers(unittest.TestCase):
    """Closed-form helpers and the eigenvalue cache."""

    def test_landau_levels(self):
        np.testing.assert_allclose(landau_levels(1.0, 1.0, 8.0, 0.05, 3), [-0.3, 0.1, 0.5])

    def test_lattice_shift_sign(self):
        self.assertLess(lattice_level_shift(0, 8.0, 0.05, 1.0, 0.03), 0.0)
        self.assertAlmostEqual(lattice_level_shift(0, 1.0, 1.0, 1.0, 1.0), -1.0 / 8.0)

    def test_cluster_centres(self):
        values = np.array([0.0, 0.01, 0.02, 0.4, 1.0, 1.01])
        centres, sizes = cluster_centres(values, np.array([0.0, 1.0, 3.0]), 1.0)
        np.testing.assert_allclose(centres[:2], [0.01, 1.005])
        self.assertTrue(math.isnan(centres[2]))
        self.assertEqual(sizes.tolist(), [3, 2, 0])

    def test_observed_order(self):
        self.assertAlmostEqual(observed_order(0.4, 0.1), 2.0)

    def test_eigenvalue_cache(self):
        import tempfile

        values = np.array([-0.5, 0.25, 3.0])
        with tempfile.TemporaryDirectory() as tmpdir:
            path = os.path.join(tmpdir, "cache", "values.bin")
            save_eigenvalues(path, values)
            np.testing.assert_array_equal(load_eigenvalues(path), values)
            with open(path, "r+b") as f:
                f.truncate(10)
            with self.assertRaises(ValidationError):
                load_eigenvalues(path)


@pytest.mark.slow
@unittest.skipIf(oracle is None, "magweyl.oracle module not available for testing.")
class TestLandauSpectrum(unittest.TestCase):
    """Constant field V = F = 1 at mu = 8, h = 0.05 on a 64 x 64 interior grid."""

    @classmethod
    def setUpClass(cls):
        cls.mu, cls.h = 8.0, 0.05
        cls.grid = scenario_grid(64, 1.0)
        cls.scenario = build_scenario(
            ScenarioSection(name="landau", builtin="constant_field"), cls.grid, cls.mu, cls.h
        )
        cls.sd = eigensolve(assemble(cls.scenario.coeffs, cls.grid, cls.mu, cls.h))
        cls.spacing = cls.mu * cls.h
        cls.levels = landau_levels(1.0, 1.0, cls.mu, cls.h, 4)
        cls.centres, _ = cluster_centres(cls.sd.eigenvalues, cls.levels, cls.spacing)

    def shifted(self, n):
        kinetic = 0.5 * (2 * n + 1) * self.spacing
        return self.levels[n] + kinetic * lattice_level_shift(n, self.mu, self.h, 1.0, self.grid.a)

    def test_lowest_cluster(self):
        self.assertLess(abs(self.centres[0] - self.levels[0]), 0.05 * self.spacing)

    def test_shifted_clusters(self):
        self.assertLess(abs(self.centres[1] - self.shifted(1)), 0.05 * self.spacing)
        for n in (2, 3):
            self.assertLess(
                abs(self.centres[n] - self.shifted(n)), abs(self.centres[n] - self.levels[n])
            )

    def test_count_against_weyl(self):
        exact = spectral_count(self.sd, self.scenario.psi, 0.0)
        weyl = integrate_weyl(self.scenario.coeffs, self.scenario.psi, 0.0, self.mu, self.h)
        self.assertAlmostEqual(exact / weyl, 1.0, delta=0.05)

    def test_lowest_cluster_degeneracy(self):
        count = lowest_cluster_count(self.sd.eigenvalues, 1.0, 1.0, self.mu, self.h)
        expected = effective_degeneracy(2.0, self.mu, self.h, 1.0)
        self.assertAlmostEqual(count / expected, 1.0, delta=0.1)


if __name__ == "__main__":
    unittest.main()
