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
import math
from unittest import TestCase

import numpy as np

from ..cone import ConeSpec, LinkSpec, quadratic_cone
from ..exceptions import ConfigError, DomainError, FitError
from ..foliation import (ConeFrame, ProfileCurve, arclength_at_radius, axis_start, cone_angle, fit_asymptotics,
                         foliation_distance, graph_start_radius, integrate_profile, jacobi_field_positivity,
                         leaf_family, leaf_geometry, profile_curvature, rescale_leaf, shoot_leaf,
                         tip_dirichlet_eigen)


class ProfileTest(TestCase):

    def test_cone_line_is_minimal(self):
        theta = cone_angle(3, 3)
        self.assertAlmostEqual(theta, math.pi / 4.0, places=14)
        r = np.array([0.5, 1.0, 7.0])
        curvature = profile_curvature(3, 3, r * math.cos(theta), r * math.sin(theta), np.full(3, theta))
        self.assertLess(np.max(np.abs(curvature)), 1e-14)

    def test_frame_round_trip(self):
        frame = ConeFrame(3, 4)
        s, t = frame.to_st(2.0, 0.3)
        a, b = frame.from_st(s, t)
        self.assertAlmostEqual(a, 2.0, places=14)
        self.assertAlmostEqual(b, 0.3, places=14)
        self.assertEqual(frame.rhs(0.0, [1.0, 0.0, 0.0]), [1.0, -0.0, 0.0])

    def test_axis_start(self):
        s, t, phi = axis_start(3, 3, 1.0, 1e-4)
        self.assertAlmostEqual(s, 1.0, places=7)
        self.assertAlmostEqual(t, 1e-4, places=10)
        self.assertAlmostEqual(phi, math.pi / 2.0, places=3)

    def test_cone_equilibrium(self):
        solution = integrate_profile(ConeFrame(3, 3), [1.0, 0.0, 0.0], (0.0, 10.0), dense_output=False)
        self.assertLess(np.max(np.abs(solution.y[1])), 1e-13)
        self.assertLess(np.max(np.abs(solution.y[2])), 1e-13)
        self.assertAlmostEqual(solution.y[0][-1], 11.0, places=8)

    def test_shooting_arguments(self):
        for args in ((1, 3, 1.0, 1e-2, 10.0), (3, 3, 0.0, 1e-2, 10.0), (3, 3, 1.0, 0.0, 10.0), (3, 3, 1.0, 1e-2, 1.5)):
            with self.assertRaises(ConfigError):
                shoot_leaf(*args)

    def test_leaves_do_not_intersect(self):
        curves = [shoot_leaf(3, 3, s0, 1e-2, 50.0) for s0 in (0.5, 1.0, 2.0)]
        self.assertGreater(foliation_distance(curves), 0.0)
        for curve in curves:
            self.assertGreater(np.min(curve.psi), 0.0)
            self.assertAlmostEqual(curve.sigma[1] - curve.sigma[0], 1e-2, places=12)

    def test_degenerate_fits(self):
        sigma = np.linspace(0.0, 10.0, 101)
        vertical = ProfileCurve(3, 3, sigma, np.ones_like(sigma), sigma, np.full_like(sigma, math.pi / 2.0),
                                np.zeros_like(sigma), 0.1)
        with self.assertRaises(FitError):
            fit_asymptotics(vertical)
        with self.assertRaises(FitError):
            graph_start_radius(vertical)


class LeafTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.cone = quadratic_cone(3, 3)
        cls.leaf = leaf_family(cls.cone)

    def test_normalization(self):
        leaf = self.leaf
        self.assertEqual(leaf.kappa, 1.0)
        self.assertAlmostEqual(leaf.fit_c, 1.0, places=8)
        self.assertAlmostEqual(leaf.alpha, -2.0, places=12)
        self.assertLess(abs(leaf.fit_alpha + 2.0), 0.05)
        self.assertGreater(leaf.fit_alpha_tilde, 0.0)
        self.assertGreater(leaf.R_s, leaf.tip)
        self.assertGreater(leaf.tip, 0.0)

    def test_jacobi_field_is_positive(self):
        self.assertGreater(jacobi_field_positivity(self.leaf), 0.0)

    def test_rescale(self):
        scaled = rescale_leaf(self.leaf, 2.0)
        factor = 2.0 ** (1.0 / 3.0)
        self.assertEqual(scaled.kappa, 2.0)
        self.assertAlmostEqual(scaled.tip / self.leaf.tip, factor, places=12)
        self.assertAlmostEqual(scaled.R_s / self.leaf.R_s, factor, places=12)
        self.assertAlmostEqual(scaled.fit_c / self.leaf.fit_c, 2.0, places=12)
        with self.assertRaises(DomainError):
            rescale_leaf(self.leaf, 0.0)

    def test_arclength_at_radius(self):
        curve = self.leaf.curve
        self.assertEqual(arclength_at_radius(curve, self.leaf.tip), 0.0)
        sigma = arclength_at_radius(curve, 10.0)
        self.assertGreater(sigma, 10.0 - self.leaf.tip)
        with self.assertRaises(DomainError):
            arclength_at_radius(curve, 2.0 * float(curve.radius[-1]))

    def test_geometry_samples(self):
        sigma = np.linspace(0.1, 5.0, 20)
        s, t, phi, dphi, a2 = leaf_geometry(self.leaf.curve, sigma)
        self.assertTrue(np.all(s > 0) and np.all(t > 0))
        self.assertTrue(np.all(a2 >= dphi ** 2))

    def test_tip_eigenpair(self):
        eigen = tip_dirichlet_eigen(self.leaf, 4.0 * self.leaf.tip)
        self.assertGreater(eigen.lambda_1, 0.0)
        self.assertAlmostEqual(float(np.max(eigen.phi)), 1.0, places=12)
        self.assertGreaterEqual(float(np.min(eigen.phi)), -1e-8)
        with self.assertRaises(DomainError):
            tip_dirichlet_eigen(self.leaf, self.leaf.tip)

    def test_needs_quadratic_cone(self):
        cone = ConeSpec(7, LinkSpec(6, [-6.0], 6.0, 1.0))
        with self.assertRaises(ConfigError):
            leaf_family(cone)
