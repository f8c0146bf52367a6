#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
test_scenarios.py

Tests for the built-in scenarios and the potential transforms.
"""

import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

try:
    from scipy.integrate import simpson

    from magweyl import scenarios
    from magweyl.config import ScenarioSection
    from magweyl.errors import ScenarioLoadError, ValidationError
    from magweyl.scenarios import (
        BUILDERS,
        add_polynomial,
        bump_integral,
        build_scenario,
        make_psi,
        scenario_grid,
        seeded_perturbation,
    )
except ImportError as e:
    print(f"Warning: Could not import scenarios module: {e}")
    scenarios = None


@unittest.skipIf(scenarios is None, "magweyl.scenarios module not available for testing.")
class TestCutoff(unittest.TestCase):
    """The smooth bump psi."""

    def test_bump_integral_against_grid(self):
        grid = scenario_grid(96, 1.0)
        psi = make_psi(grid)
        inner = simpson(psi.values, x=grid.ys, axis=1)
        total = simpson(inner, x=grid.xs)
        self.assertAlmostEqual(total / bump_integral(0.45), 1.0, delta=1e-4)

    def test_bump_integral_scaling(self):
        self.assertAlmostEqual(bump_integral(0.3) / bump_integral(0.45), (0.3 / 0.45) ** 2)

    def test_bump_shape(self):
        psi = make_psi(scenario_grid(16, 1.0))
        self.assertAlmostEqual(float(psi.at(0.0, 0.0)), 1.0)
        self.assertEqual(float(psi.at(0.45, 0.0)), 0.0)
        self.assertEqual(float(psi.at(0.6, 0.1)), 0.0)

    def test_support_limit(self):
        with self.assertRaisesRegex(ValidationError, "B\\(0, 1/2\\)"):
            make_psi(scenario_grid(16, 1.0), (0.2, 0.0), 0.45)
        make_psi(scenario_grid(16, 1.0), (0.2, 0.0), 0.3)


@unittest.skipIf(scenarios is None, "magweyl.scenarios module not available for testing.")
class TestBuiltins(unittest.TestCase):
    """Construction and validation of each scenario."""

    def test_every_builtin_validates(self):
        grid = scenario_grid(16, 1.0)
        for builtin in BUILDERS:
            with self.subTest(builtin=builtin):
                scenario = build_scenario(ScenarioSection(name=builtin, builtin=builtin), grid, 1.0, 0.1)
                self.assertEqual(scenario.builtin, builtin)
                self.assertFalse(scenario.level_shift_mode)
                self.assertEqual(scenario.psi.grid, grid)

    def test_scenario_grid(self):
        grid = scenario_grid(16, 1.0)
        self.assertEqual(grid.shape, (18, 18))
        self.assertAlmostEqual(grid.a, 2.0 / 17.0)

    def test_params_override(self):
        section = ScenarioSection(name="s", builtin="saddle", params={"axx": 0.5, "ayy": -0.1})
        coeffs = build_scenario(section, scenario_grid(16, 1.0), 1.0, 0.1).coeffs
        self.assertAlmostEqual(float(coeffs.V(1.0, 1.0)), 1.4)

    def test_polynomial_scenario(self):
        section = ScenarioSection(
            name="poly",
            builtin="polynomial",
            polynomials={"A1": [[0.0, -0.5]], "A2": [[0.0], [0.5]], "V": [[1.0, 0.0], [0.0, 0.1]]},
        )
        coeffs = build_scenario(section, scenario_grid(16, 1.0), 1.0, 0.1).coeffs
        self.assertAlmostEqual(float(coeffs.V(0.5, 0.4)), 1.02)
        np.testing.assert_allclose(coeffs.sample("F"), 1.0)

    def test_intensity_violation(self):
        section = ScenarioSection(
            name="null-line", builtin="polynomial", polynomials={"A2": [[0.0], [0.0], [1.0]]}
        )
        with self.assertRaisesRegex(ValidationError, "F >= epsilon0"):
            build_scenario(section, scenario_grid(15, 1.0), 1.0, 0.1)

    def test_potential_violation(self):
        section = ScenarioSection(name="flat", builtin="constant_field", params={"V": 0.0})
        with self.assertRaisesRegex(ValidationError, "V ≥ ε₀"):
            build_scenario(section, scenario_grid(16, 1.0), 1.0, 0.1)

    def test_unknown_builtin(self):
        with self.assertRaisesRegex(ScenarioLoadError, "Unknown builtin"):
            build_scenario(ScenarioSection(name="x", builtin="donut"), scenario_grid(16, 1.0), 1.0, 0.1)

    def test_psi_from_section(self):
        section = ScenarioSection(name="s", builtin="constant_field", psi={"center": [0.1, 0.0], "radius": 0.3})
        psi = build_scenario(section, scenario_grid(16, 1.0), 1.0, 0.1).psi
        self.assertAlmostEqual(float(psi.at(0.1, 0.0)), 1.0)
        self.assertEqual(float(psi.at(-0.25, 0.0)), 0.0)


@unittest.skipIf(scenarios is None, "magweyl.scenarios module not available for testing.")
class TestPotentialTransforms(unittest.TestCase):
    """Level-shifted and perturbed potentials."""

    def test_level_shift_potential(self):
        """V = (2 nbar + 1) mu h F + W."""
        section = ScenarioSection(name="shift", builtin="constant_field", level_shift={"nbar": 1, "W": [[0.5]]})
        scenario = build_scenario(section, scenario_grid(16, 1.0), 2.0, 0.1)
        self.assertTrue(scenario.level_shift_mode)
        self.assertEqual(scenario.nbar, 1)
        self.assertAlmostEqual(float(scenario.coeffs.V(0.3, -0.2)), 3.0 * 0.2 + 0.5)
        self.assertTrue(scenario.coeffs.V.has_analytic_derivatives)

    def test_level_shift_allows_negative_potential(self):
        section = ScenarioSection(name="shift", builtin="constant_field", level_shift={"nbar": 0, "W": [[-2.0]]})
        scenario = build_scenario(section, scenario_grid(16, 1.0), 2.0, 0.1)
        self.assertLess(float(scenario.coeffs.V(0.0, 0.0)), 0.0)

    def test_seeded_perturbation_deterministic(self):
        np.testing.assert_array_equal(seeded_perturbation(7, 0.1), seeded_perturbation(7, 0.1))
        self.assertFalse(np.array_equal(seeded_perturbation(7, 0.1), seeded_perturbation(8, 0.1)))
        table = seeded_perturbation(7, 0.1)
        self.assertEqual(table[0, 0], 0.0)
        self.assertEqual(table.shape, (3, 3))

    def test_perturbation_needs_seed(self):
        section = ScenarioSection(name="p", builtin="saddle", perturbation=0.05)
        grid = scenario_grid(16, 1.0)
        plain = build_scenario(section, grid, 1.0, 0.1).coeffs
        seeded = build_scenario(section, grid, 1.0, 0.1, seed=7).coeffs
        again = build_scenario(section, grid, 1.0, 0.1, seed=7).coeffs
        self.assertAlmostEqual(float(plain.V(0.3, 0.2)), 1.0 + 0.2 * 0.09 - 0.4 * 0.04)
        self.assertNotEqual(float(seeded.V(0.3, 0.2)), float(plain.V(0.3, 0.2)))
        self.assertEqual(float(seeded.V(0.3, 0.2)), float(again.V(0.3, 0.2)))

    def test_add_polynomial_keeps_derivatives(self):
        V = build_scenario(
            ScenarioSection(name="f", builtin="saddle_family"), scenario_grid(16, 1.0), 1.0, 0.1
        ).coeffs.V
        shifted = add_polynomial(V, np.array([[0.0, 0.0], [0.0, 1.0]]))
        self.assertTrue(shifted.has_analytic_derivatives)
        gx, gy = V.gradient(0.2, 0.3)
        sx, sy = shifted.gradient(0.2, 0.3)
        self.assertAlmostEqual(float(sx - gx), 0.3)
        self.assertAlmostEqual(float(sy - gy), 0.2)


if __name__ == "__main__":
    unittest.main()
