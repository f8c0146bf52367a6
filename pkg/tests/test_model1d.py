#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
test_model1d.py

Tests for the one-dimensional effective symbols, their quantization and the
phase-space counts of the saddle model.
"""

import math
import os
import sys
import unittest

import numpy as np
import pytest

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

try:
    from magweyl import model1d
    from magweyl.errors import GuardViolation, ValidationError
    from magweyl.model1d import (
        EXTREMUM,
        SADDLE,
        SaddleModelParams,
        SectionProfile,
        Symbol1D,
        fit_log_signature,
        landau_symbol,
        log_signature_deltas,
        model_count,
        phasespace_count,
        quantization_asymmetry,
        quantized_count,
        saddle_area,
        saddle_area_expansion,
        saddle_log_coefficient,
        saddle_sweep,
        saddle_symbol,
        weyl_quantize,
    )
except ImportError as e:
    print(f"Warning: Could not import model1d module: {e}")
    model1d = None


def harmonic(hbar, L, rho):
    return Symbol1D(lambda x, xi: x * x + xi * xi, hbar, L, L, rho)


@unittest.skipIf(model1d is None, "magweyl.model1d module not available for testing.")
class TestSymbols(unittest.TestCase):
    """Effective symbols and their parameters."""

    def test_landau_symbol_constant_profile(self):
        profile = SectionProfile.constant(1.0)
        sym1 = landau_symbol(profile, 1, 4.0, 0.1)
        sym0 = landau_symbol(profile, 0, 4.0, 0.1)
        self.assertAlmostEqual(float(sym1(0.2, -0.3)), 0.2)
        self.assertAlmostEqual(float(sym0(0.2, -0.3)), -0.6)
        self.assertAlmostEqual(sym1.hbar, 0.025)

    def test_landau_symbol_saddle_profile(self):
        profile = SectionProfile.saddle(1.0, 2.0, omega1=0.5)
        sym = landau_symbol(profile, 0, 10.0, 0.1)
        self.assertAlmostEqual(float(sym(0.5, 0.5)), -(1.0 - 0.5) + 1.0 + 0.005)

    def test_landau_symbol_needs_profile(self):
        with self.assertRaises(ValidationError):
            landau_symbol(None, 0, 4.0, 0.1)
        with self.assertRaises(ValidationError):
            landau_symbol(SectionProfile.constant(1.0), -1, 4.0, 0.1)

    def test_rho_inside_box(self):
        with self.assertRaises(ValidationError):
            Symbol1D(lambda x, xi: x * xi, 0.01, 1.0, 0.5, 0.8)

    def test_model_shift(self):
        p = SaddleModelParams(0.01, 2.0, 0.4, 10.0, 0.01)
        self.assertAlmostEqual(p.shift, 0.4 / (100.0 * 2.0))
        with self.assertRaises(ValidationError):
            SaddleModelParams(0.01, 0.0, 0.4, 10.0, 0.01)


@unittest.skipIf(model1d is None, "magweyl.model1d module not available for testing.")
class TestQuantization(unittest.TestCase):
    """Weyl quantization by Fourier collocation."""

    def test_constant_symbol(self):
        sym = Symbol1D(lambda x, xi: 2.5 + 0.0 * x, 0.05, 1.0, 1.0, 1.0)
        np.testing.assert_allclose(weyl_quantize(sym, 32), 2.5 * np.eye(32), atol=1e-12)

    def test_harmonic_oscillator(self):
        """x^2 + xi^2 has eigenvalues (2m + 1) hbar."""
        values = np.linalg.eigvalsh(weyl_quantize(harmonic(0.05, 3.0, 1.0), 256))
        np.testing.assert_allclose(values[:5], 0.05 * (2 * np.arange(5) + 1), atol=1e-3)

    def test_saddle_symbol_hermitian(self):
        sym = saddle_symbol(0.0, 0.05, 1.0)
        for n_modes in (64, 128, 256):
            self.assertLess(quantization_asymmetry(sym, n_modes), 1e-10)

    def test_saddle_spectrum_symmetric(self):
        values = np.linalg.eigvalsh(weyl_quantize(saddle_symbol(0.0, 0.05, 1.0), 128))
        np.testing.assert_allclose(values, -values[::-1], atol=1e-10)

    def test_mode_count_range(self):
        with self.assertRaises(ValidationError):
            weyl_quantize(harmonic(0.05, 3.0, 1.0), 1)

    def test_level_touching_box_edge(self):
        with self.assertRaisesRegex(GuardViolation, "box boundary"):
            weyl_quantize(saddle_symbol(0.0, 0.05, 1.0), 64, level=0.0)

    def test_quantized_against_phase_space(self):
        sym = harmonic(0.01, 1.5, 1.0)
        exact = quantized_count(sym, 256, 0.255)
        r = math.sqrt(0.255)
        semiclassical = phasespace_count(sym, 0.255, [-r, r])
        self.assertEqual(exact, 13)
        self.assertAlmostEqual(semiclassical, 12.75, delta=1e-4)
        self.assertLessEqual(abs(exact - semiclassical), 3.0)

    @pytest.mark.slow
    def test_confined_saddle_against_phase_space(self):
        """x xi + x^4 + xi^4 at level 0.05 on 1024 modes: counts agree within 3."""
        sym = Symbol1D(lambda x, xi: x * xi + x**4 + xi**4, 0.01, 2.0, 2.0, 2.0)
        exact = quantized_count(sym, 1024, 0.05)
        semiclassical = phasespace_count(sym, 0.05)
        self.assertGreater(semiclassical, 10.0)
        self.assertLessEqual(abs(exact - semiclassical), 3.0)


@unittest.skipIf(model1d is None, "magweyl.model1d module not available for testing.")
class TestPhaseSpace(unittest.TestCase):
    """Sublevel areas inside the diamond |x| + |xi| <= rho."""

    def test_half_diamond(self):
        count = model_count(SADDLE, 0.0, 0.01, 1.5)
        expected = 1.5**2 / (2.0 * math.pi * 0.01)
        self.assertAlmostEqual(count / expected, 1.0, delta=1e-8)

    def test_empty_sublevel(self):
        sym = Symbol1D(lambda x, xi: 1.0 + 0.0 * x, 0.01, 1.0, 1.0, 1.0)
        self.assertEqual(phasespace_count(sym, 0.0), 0.0)

    def test_closed_form_area(self):
        for w in (0.01, -0.01):
            count = model_count(SADDLE, w, 0.01, 0.5)
            expected = saddle_area(w, 0.5) / (2.0 * math.pi * 0.01)
            self.assertAlmostEqual(count / expected, 1.0, delta=1e-7, msg=f"w={w}")

    def test_area_expansion(self):
        w, rho = 1e-3, 1.0
        self.assertAlmostEqual(
            saddle_area(w, rho) - saddle_area(0.0, rho), saddle_area_expansion(w, rho), delta=1e-7
        )

    def test_closed_form_range(self):
        with self.assertRaises(ValidationError):
            saddle_area(0.1, 0.5)

    def test_unknown_model(self):
        with self.assertRaises(ValidationError):
            model_count("ridge", 0.0, 0.01, 1.0)

    def test_count_nonincreasing_in_offset(self):
        counts = [model_count(SADDLE, w, 0.01, 1.0) for w in np.linspace(-0.2, 0.2, 9)]
        for before, after in zip(counts, counts[1:]):
            self.assertLessEqual(after, before + 1e-6)
        self.assertLess(counts[-1], counts[0])


@unittest.skipIf(model1d is None, "magweyl.model1d module not available for testing.")
class TestSaddleModel(unittest.TestCase):
    """Logarithmic response of the count to a shift of the level offset."""

    def test_no_perturbation(self):
        measured, predicted = saddle_log_coefficient(SaddleModelParams(0.01, 1.0, 0.0, 100.0, 0.01), 2.0)
        self.assertEqual(measured, 0.0)
        self.assertAlmostEqual(predicted, math.log(2.0 / (0.1 + 0.01)) / (2.0 * math.pi * 0.01))

    def test_extremum_has_no_log(self):
        """A disc grows linearly: the coefficient stays at -1/(2 hbar)."""
        hbar = 0.01
        measured = [
            saddle_log_coefficient(SaddleModelParams(w, 1.0, 0.1, 100.0, hbar), 0.5, EXTREMUM)[0]
            for w in (-1e-2, -1e-3)
        ]
        for value in measured:
            self.assertAlmostEqual(value * (-2.0 * hbar), 1.0, delta=1e-2)
        self.assertLess(abs(measured[0] - measured[1]) / abs(measured[0]), 1e-2)

    def test_perturbative_guard(self):
        with self.assertRaises(GuardViolation):
            saddle_log_coefficient(SaddleModelParams(1e-4, 1.0, 10.0, 10.0, 0.01), 2.0)

    def test_sweep_sorted_and_pooled(self):
        ws = [0.02, 0.005, 0.01]
        serial = saddle_sweep(ws, 1.0, 0.1, 100.0, 0.01, 1.0)
        pooled = saddle_sweep(ws, 1.0, 0.1, 100.0, 0.01, 1.0, workers=3)
        self.assertEqual([row.w for row in serial], [0.005, 0.01, 0.02])
        self.assertEqual(serial, pooled)
        for row in serial:
            self.assertLess(row.count_perturbed, row.count_unperturbed)

    def test_log_signature_fit(self):
        """Count differences follow -(pi hbar)^-1 w log(1/w) plus a linear term."""
        hbar, rho = 0.01, 2.0
        ws = np.logspace(-4, -1, 7)
        deltas = log_signature_deltas(ws, hbar, rho)
        c1, c2, residual = fit_log_signature(ws, deltas)
        self.assertLessEqual(residual, 0.02)
        self.assertAlmostEqual(c1 * math.pi * hbar, -1.0, delta=0.1)

    def test_fit_needs_points(self):
        with self.assertRaises(ValidationError):
            fit_log_signature([0.1, 0.2], [1.0, 2.0])


if __name__ == "__main__":
    unittest.main()
