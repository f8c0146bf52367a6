#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
test_critpoints.py

Tests for locating and classifying the critical points of V/F.
"""

import logging
import math
import os
import sys
import unittest

import numpy as np

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

try:
    from magweyl import critpoints
    from magweyl.config import ScenarioSection
    from magweyl.critpoints import Kind, find_critical_points, hessian_data, interior_saddles, newton_refine
    from magweyl.errors import ValidationError
    from magweyl.fields import CoefficientSet, Field, Grid2D
    from magweyl.scenarios import build_scenario, scenario_grid
except ImportError as e:
    print(f"Warning: Could not import critpoints module: {e}")
    critpoints = None


def coeffs_with(V_table, A2_table=None, nodes=17):
    grid = Grid2D.square(nodes, 1.0)
    if A2_table is None:
        A1 = Field.polynomial([[0.0, -0.5]], "A1")
        A2 = Field.polynomial([[0.0], [0.5]], "A2")
    else:
        A1 = Field.constant(0.0, "A1")
        A2 = Field.polynomial(A2_table, "A2")
    return CoefficientSet(
        grid,
        Field.constant(1.0, "g11"),
        Field.constant(0.0, "g12"),
        Field.constant(1.0, "g22"),
        A1,
        A2,
        Field.polynomial(V_table, "V"),
    )


@unittest.skipIf(critpoints is None, "magweyl.critpoints module not available for testing.")
class TestFindCriticalPoints(unittest.TestCase):
    """Seeding, Newton refinement, merging and classification."""

    def test_harmonic_saddle(self):
        points = find_critical_points(coeffs_with([[1.0, 0.0], [0.0, 1.0]]))  # 1 + xy
        self.assertEqual(len(points), 1)
        cp = points[0]
        np.testing.assert_allclose(cp.location, [0.0, 0.0], atol=1e-12)
        self.assertIs(cp.kind, Kind.SADDLE)
        self.assertAlmostEqual(cp.det_hessian, -1.0)
        self.assertAlmostEqual(cp.k, 1.0)
        self.assertFalse(cp.boundary_unreliable)

    def test_minimum(self):
        points = find_critical_points(coeffs_with([[1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]))
        self.assertEqual(len(points), 1)
        self.assertIs(points[0].kind, Kind.MINIMUM)
        self.assertAlmostEqual(points[0].k, 2.0)

    def test_no_critical_point(self):
        self.assertEqual(find_critical_points(coeffs_with([[2.0], [1.0]])), [])

    def test_flat_ratio_has_no_points(self):
        """Constant V/F has no isolated critical points."""
        self.assertEqual(find_critical_points(coeffs_with([[1.0]])), [])
        grid = scenario_grid(15, 1.0)
        sphere = build_scenario(ScenarioSection(name="sphere", builtin="sphere"), grid, 1.0, 0.1)
        self.assertEqual(find_critical_points(sphere.coeffs), [])

    def test_degenerate_point_is_an_error(self):
        coeffs = coeffs_with([[1.0, 0.0, 1e-4], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with self.assertRaisesRegex(ValidationError, "degenerate critical point"):
            find_critical_points(coeffs, nondeg_tol=1e-3)

    def test_boundary_point_is_flagged(self):
        coeffs = coeffs_with([[1.0, -0.5], [0.0, 1.0]])  # 1 + (x - 0.5) y
        with self.assertLogs("magweyl.critpoints", level=logging.WARNING):
            points = find_critical_points(coeffs, search_radius=0.5)
        self.assertEqual(len(points), 1)
        self.assertTrue(points[0].boundary_unreliable)
        self.assertEqual(interior_saddles(points), [])

    def test_search_radius_validated(self):
        with self.assertRaises(ValidationError):
            find_critical_points(coeffs_with([[1.0]]), search_radius=1.5)

    def test_saddle_family_with_workers(self):
        """cos(pi x) cos(pi y) has four saddles at (+-1/2, +-1/2) and a maximum at 0."""
        grid = scenario_grid(15, 1.0)
        coeffs = build_scenario(
            ScenarioSection(name="family", builtin="saddle_family"), grid, 1.0, 0.1
        ).coeffs
        serial = find_critical_points(coeffs)
        pooled = find_critical_points(coeffs, workers=3)
        saddles = interior_saddles(serial)
        self.assertEqual(len(saddles), 4)
        locations = sorted(tuple(np.round(cp.location, 8)) for cp in saddles)
        expected = sorted((sx * 0.5, sy * 0.5) for sx in (-1, 1) for sy in (-1, 1))
        np.testing.assert_allclose(locations, expected, atol=1e-8)
        maxima = [cp for cp in serial if cp.kind is Kind.MAXIMUM]
        self.assertEqual(len(maxima), 1)
        np.testing.assert_allclose(maxima[0].location, [0.0, 0.0], atol=1e-10)
        np.testing.assert_allclose(
            [cp.location for cp in serial], [cp.location for cp in pooled], atol=1e-12
        )

    def test_point_in_boundary_cell_is_discarded(self):
        coeffs = coeffs_with([[1.0, -0.95], [0.0, 1.0]])  # 1 + (x - 0.95) y
        with self.assertLogs("magweyl.critpoints", level=logging.WARNING) as logs:
            points = find_critical_points(coeffs)
        self.assertEqual(points, [])
        self.assertTrue(any("boundary cell" in line for line in logs.output))

    def test_classification_invariant_under_common_scaling(self):
        """V -> s V and F -> s F with s = 1 + 0.2 x leave V/F and its critical points unchanged."""
        rng = np.random.default_rng(23)
        for _ in range(5):
            a, b, c = rng.uniform(0.5, 1.5), rng.uniform(-0.3, 0.3), rng.uniform(-1.5, -0.5)
            table = np.array([[1.0, 0.0, c], [0.0, b, 0.0], [a, 0.0, 0.0]])
            scaled = np.zeros((4, 3))
            scaled[:-1] += table
            scaled[1:] += 0.2 * table
            base = find_critical_points(coeffs_with(table, A2_table=[[0.0], [1.0]]))
            other = find_critical_points(coeffs_with(scaled, A2_table=[[0.0], [1.0], [0.1]]))
            self.assertEqual([cp.kind for cp in base], [cp.kind for cp in other])
            for p, q in zip(base, other):
                np.testing.assert_allclose(p.location, q.location, atol=1e-8)
                np.testing.assert_allclose(p.hessian, q.hessian, rtol=1e-6, atol=1e-8)


@unittest.skipIf(critpoints is None, "magweyl.critpoints module not available for testing.")
class TestHessianData(unittest.TestCase):
    """Local data at a given location."""

    def test_saddle_values(self):
        cp = hessian_data(coeffs_with([[1.0, 0.0, -2.0], [0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), (0.0, 0.0))
        self.assertAlmostEqual(cp.det_hessian, -8.0)
        self.assertAlmostEqual(cp.k, 2.0 * math.sqrt(2.0))
        self.assertIs(cp.kind, Kind.SADDLE)
        self.assertAlmostEqual(cp.omega1_value, 0.5, places=8)
        self.assertAlmostEqual(cp.lap_vf_value, -2.0, places=8)
        self.assertAlmostEqual(cp.curvature_value, 0.0, places=8)

    def test_maximum_of_ratio(self):
        """V = 1 and F = 1 + x^2 + y^2 make V/F peak at the origin."""
        A2 = [[0.0, 0.0, 0.0], [1.0, 0.0, 1.0], [0.0, 0.0, 0.0], [1.0 / 3.0, 0.0, 0.0]]
        cp = hessian_data(coeffs_with([[1.0]], A2_table=A2), (0.0, 0.0))
        self.assertIs(cp.kind, Kind.MAXIMUM)
        np.testing.assert_allclose(cp.hessian, [[-2.0, 0.0], [0.0, -2.0]], atol=1e-12)
        self.assertAlmostEqual(cp.k, 2.0)
        self.assertAlmostEqual(cp.F_value, 1.0)

    def test_not_critical(self):
        cp = hessian_data(coeffs_with([[1.0, 0.0], [0.0, 1.0]]), (0.3, 0.0))
        self.assertIs(cp.kind, Kind.NONE)
        self.assertAlmostEqual(cp.gradient_norm, 0.3)

    def test_outside_grid(self):
        with self.assertRaises(ValidationError):
            hessian_data(coeffs_with([[1.0]]), (1.5, 0.0))

    def test_boundary_location_rejected(self):
        """A location must stay one cell away from the grid boundary."""
        coeffs = coeffs_with([[1.0, 0.0], [0.0, 1.0]])
        for location in ((1.0, 0.0), (0.0, -1.0), (1.0 - 0.5 * coeffs.grid.a, 0.2)):
            with self.subTest(location=location):
                with self.assertRaisesRegex(ValidationError, "grid interior"):
                    hessian_data(coeffs, location)
        cp = hessian_data(coeffs, (1.0 - coeffs.grid.a, 0.0))
        self.assertIs(cp.kind, Kind.NONE)

    def test_kind_matches_hessian_eigenvalues(self):
        """100 random quadratics 1 + a x^2 + b x y + c y^2 classified at the origin."""
        rng = np.random.default_rng(29)
        checked = 0
        while checked < 100:
            a, b, c = rng.uniform(-2.0, 2.0, 3)
            H = np.array([[2.0 * a, b], [b, 2.0 * c]])
            if abs(np.linalg.det(H)) < 0.05:
                continue
            cp = hessian_data(coeffs_with([[1.0, 0.0, c], [0.0, b, 0.0], [a, 0.0, 0.0]]), (0.0, 0.0))
            eig = np.linalg.eigvalsh(H)
            if np.all(eig > 0):
                expected = Kind.MINIMUM
            elif np.all(eig < 0):
                expected = Kind.MAXIMUM
            else:
                expected = Kind.SADDLE
            self.assertIs(cp.kind, expected, msg=f"a={a}, b={b}, c={c}")
            np.testing.assert_allclose(cp.hessian, H, atol=1e-9)
            checked += 1

    def test_to_dict(self):
        data = hessian_data(coeffs_with([[1.0, 0.0], [0.0, 1.0]]), (0.0, 0.0)).to_dict()
        self.assertEqual(data["kind"], "saddle")
        self.assertEqual(data["location"], [0.0, 0.0])
        self.assertIn("omega1_value", data)


@unittest.skipIf(critpoints is None, "magweyl.critpoints module not available for testing.")
class TestNewtonRefine(unittest.TestCase):
    def test_converges_near_saddle_family_points(self):
        grid = scenario_grid(15, 1.0)
        coeffs = build_scenario(
            ScenarioSection(name="family", builtin="saddle_family"), grid, 1.0, 0.1
        ).coeffs
        targets = [(sx * 0.5, sy * 0.5) for sx in (-1, 1) for sy in (-1, 1)] + [(0.0, 0.0)]
        for target in targets:
            for angle in np.linspace(0.0, 2.0 * np.pi, 8, endpoint=False):
                seed = (target[0] + 0.1 * np.cos(angle), target[1] + 0.1 * np.sin(angle))
                with self.subTest(target=target, angle=angle):
                    point, iterations = newton_refine(coeffs, seed, max_iter=20)
                    self.assertIsNotNone(point)
                    self.assertLessEqual(iterations, 20)
                    np.testing.assert_allclose(point, target, atol=1e-8)


if __name__ == "__main__":
    unittest.main()
