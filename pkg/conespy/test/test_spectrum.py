"""
Copyright (c) 2024, the conespy authors
All rights reserved.

Redistribution and use in source and binary forms, with or without
modification, are permitted provided that the following conditions are met:
    * Redistributions of source code must retain the above copyright
      notice, this list of conditions and the following disclaimer.
    * Redistributions in binary form must reproduce the above copyright
      notice, this list of conditions and the following disclaimer in the
      documentation and/or other materials provided with the distribution.
    * Neither the name of the conespy authors nor the
      names of its contributors may be used to endorse or promote products
      derived from this software without specific prior written permission.

THIS SOFTWARE IS PROVIDED BY THE COPYRIGHT HOLDERS AND CONTRIBUTORS "AS IS" AND
ANY EXPRESS OR IMPLIED WARRANTIES, INCLUDING, BUT NOT LIMITED TO, THE IMPLIED
WARRANTIES OF MERCHANTABILITY AND FITNESS FOR A PARTICULAR PURPOSE ARE
DISCLAIMED. IN NO EVENT SHALL THE CONESPY AUTHORS BE LIABLE FOR ANY
DIRECT, INDIRECT, INCIDENTAL, SPECIAL, EXEMPLARY, OR CONSEQUENTIAL DAMAGES
(INCLUDING, BUT NOT LIMITED TO, PROCUREMENT OF SUBSTITUTE GOODS OR SERVICES;
LOSS OF USE, DATA, OR PROFITS; OR BUSINESS INTERRUPTION) HOWEVER CAUSED AND
ON ANY THEORY OF LIABILITY, WHETHER IN CONTRACT, STRICT LIABILITY, OR TORT
(INCLUDING NEGLIGENCE OR OTHERWISE) ARISING IN ANY WAY OUT OF THE USE OF THIS
SOFTWARE, EVEN IF ADVISED OF THE POSSIBILITY OF SUCH DAMAGE.
"""
from unittest import TestCase

import numpy as np
from numpy.polynomial import Polynomial

from ..cone import quadratic_cone
from ..exceptions import ConfigError, DomainError, SpectrumError
from ..spectrum import (SampledRadial, alpha_plus, build_mode, cutoff_overlap_decay, cutoff_profile, eigen_residual,
                        in_weighted_h1, order_and_select, project)
from ..utils import log_grid
from ..wspace import build_quadrature, inner_product_W


class ClosedFormTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cone = quadratic_cone(3, 3)
        cls.quad = build_quadrature(7, 80)
        cls.spectrum = order_and_select(cls.cone, 3.0, cls.quad)

    def test_simons_constants(self):
        spectrum = self.spectrum
        self.assertAlmostEqual(spectrum.alpha, -2.0, places=12)
        self.assertEqual(spectrum.l, 3)
        self.assertEqual(spectrum.i_1, 2)
        self.assertAlmostEqual(spectrum.lambda_l, 0.5, places=12)
        self.assertAlmostEqual(spectrum.delta_l, 1.0, places=12)
        self.assertAlmostEqual(spectrum.sigma_l, 1.0 / 6.0, places=12)
        self.assertAlmostEqual(spectrum.c_l, 2.0, places=12)

    def test_ordering(self):
        eigenvalues = [mode.eigenvalue for mode in self.spectrum.modes]
        self.assertEqual(eigenvalues, sorted(eigenvalues))
        self.assertEqual(len(eigenvalues), 5)
        self.assertEqual(len(self.spectrum.unstable_modes), 2)
        self.assertEqual(self.spectrum.mode_l.to_row()[:4], [2, 1, -2.0, 0.5])

    def test_to_dict(self):
        data = self.spectrum.to_dict()
        self.assertEqual(data["l"], 3)
        self.assertEqual(data["i_1"], 2)
        self.assertAlmostEqual(data["c_l"], 2.0, places=12)

    def test_forced_index(self):
        self.assertEqual(order_and_select(self.cone, 3.0, self.quad, l=4).i_1, 3)
        for l in (1, 99):
            with self.assertRaises(SpectrumError):
                order_and_select(self.cone, 3.0, self.quad, l=l)

    def test_cutoff_without_gap(self):
        with self.assertRaises(SpectrumError):
            order_and_select(self.cone, 0.5, self.quad)

    def test_alpha_plus(self):
        self.assertAlmostEqual(alpha_plus(-6.0, 7), -2.0, places=12)
        self.assertAlmostEqual(alpha_plus(0.0, 7), 0.0, places=12)
        self.assertTrue(in_weighted_h1(-2.0, 7))
        self.assertFalse(in_weighted_h1(-2.5, 7))
        with self.assertRaises(SpectrumError):
            alpha_plus(-7.0, 7)

    def test_link_index_range(self):
        with self.assertRaises(ConfigError):
            build_mode(self.cone, 0, 2, self.quad)


class ModeTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cone = quadratic_cone(3, 3, max_degree=1)
        cls.quad = build_quadrature(7, 80)
        modes = []
        for j in (1, 2, 3):
            modes.extend(build_mode(cls.cone, i, j, cls.quad) for i in range(5))
        cls.modes = modes

    def test_gram_matrix(self):
        gram = np.array([[inner_product_W(a.radial(), b.radial(), self.cone, self.quad) for b in self.modes]
                         for a in self.modes])
        self.assertEqual(gram.shape, (15, 15))
        self.assertLess(np.max(np.abs(gram - np.eye(15))), 1e-8)

    def test_kummer_profile_agrees(self):
        y = log_grid(1e-3, 20.0, 60)
        for mode in self.modes:
            if mode.eigenvalue > 5:
                continue
            scale = mode.c_norm * y ** mode.alpha_j * Polynomial(np.abs(mode.polynomial.coef))(y)
            self.assertLess(np.max(np.abs(mode.kummer_profile(y) - mode.profile(y)) / scale), 1e-12)

    def test_eigen_residual(self):
        y = np.linspace(0.5, 5.0, 10)
        for mode in self.modes:
            mu = self.cone.link.mu[mode.j - 1]
            self.assertLess(np.max(np.abs(eigen_residual(mode, mu, y))), 1e-4)


class ProjectionTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cone = quadratic_cone(3, 3)
        cls.quad = build_quadrature(7, 80)
        cls.spectrum = order_and_select(cls.cone, 3.0, cls.quad)

    def test_radial_projection(self):
        mode = self.spectrum.mode_l
        self.assertAlmostEqual(project(mode.radial(), mode, self.quad), 1.0, places=12)
        other = self.spectrum.modes[0]
        self.assertAlmostEqual(project(mode.radial(), other, self.quad), 0.0, places=12)

    def test_sampled_projection(self):
        mode = self.spectrum.mode_l
        y = log_grid(1e-4, 40.0, 4000)
        samples = SampledRadial(y, mode.profile(y))
        self.assertAlmostEqual(project(samples, mode, self.quad), 1.0, delta=1e-4)

    def test_compact_projection(self):
        mode = self.spectrum.mode_l
        y = log_grid(1e-3, 40.0, 4001)
        samples = SampledRadial(y, mode.profile(y), compact=True)
        self.assertAlmostEqual(project(samples, mode, None), 1.0, delta=1e-6)
        self.assertEqual(project(SampledRadial(y, mode.profile(y), link_index=2), mode, None), 0.0)

    def test_sampled_domain(self):
        mode = self.spectrum.mode_l
        with self.assertRaises(DomainError):
            SampledRadial([1.0, 2.0, 3.0], [0.0, 0.0, 0.0])
        with self.assertRaises(DomainError):
            SampledRadial([0.0, 1.0, 2.0, 3.0], [0.0] * 4)
        with self.assertRaises(DomainError):
            SampledRadial([1.0, 3.0, 2.0, 4.0], [0.0] * 4)
        y = np.linspace(1.0, 5.0, 50)
        with self.assertRaises(DomainError):
            project(SampledRadial(y, mode.profile(y)), mode, self.quad)

    def test_cutoff_profile(self):
        s, beta, rho, sigma = 10.0, 1.0, 0.5, 1.0 / 6.0
        inner = np.exp(-sigma * s)
        self.assertEqual(float(cutoff_profile(np.array([0.5 * beta * inner]), s, beta, rho, sigma)[0]), 0.0)
        self.assertEqual(float(cutoff_profile(np.array([10.0]), s, beta, rho, sigma)[0]), 1.0)
        self.assertEqual(float(cutoff_profile(np.array([2.0 * rho * np.exp(s / 2.0)]), s, beta, rho, sigma)[0]),
                         0.0)

    def test_overlap_decay_rate(self):
        mode = self.spectrum.mode_l
        decay = cutoff_overlap_decay(mode, mode, 1.0, 0.5, self.spectrum.sigma_l, np.linspace(15.0, 40.0, 11))
        self.assertFalse(decay.converged)
        self.assertAlmostEqual(decay.expected, 0.5, places=12)
        self.assertLess(abs(decay.exponent - decay.expected) / decay.expected, 0.1)

    def test_overlap_between_links(self):
        cone = quadratic_cone(3, 3, max_degree=1)
        a = build_mode(cone, 0, 1, self.quad)
        b = build_mode(cone, 0, 2, self.quad)
        decay = cutoff_overlap_decay(a, b, 1.0, 0.5, 1.0 / 6.0, np.linspace(2.0, 4.0, 5))
        self.assertTrue(decay.converged)
        self.assertIsNone(decay.exponent)
        with self.assertRaises(DomainError):
            cutoff_overlap_decay(a, b, 1.0, 0.5, 1.0 / 6.0, [3.0, 2.0])
