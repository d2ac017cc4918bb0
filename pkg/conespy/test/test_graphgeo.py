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

from ..cone import cone_A2, quadratic_cone
from ..exceptions import GraphConditionError
from ..foliation import ConeFrame, cone_angle, profile_curvature, shoot_leaf
from ..graphgeo import (BaseCurve, GraphChart, cone_chart, error_term, graph_curvature_norm, graph_mean_curvature,
                        graph_metric, monge_normal_product, normal_product)


def power_graph(p, q, r, eps, power):
    """eps r^power over the cone with exact derivatives"""

    u = eps * r ** power
    return cone_chart(p, q, r, u, eps * power * r ** (power - 1.0), eps * power * (power - 1.0) * r ** (power - 2.0))


class ConeBaseTest(TestCase):

    def test_cone_curvature(self):
        r = np.array([0.5, 1.0, 4.0])
        for p, q in ((3, 3), (3, 4), (5, 2)):
            base = BaseCurve.cone(p, q, r)
            cone = quadratic_cone(p, q)
            self.assertTrue(np.allclose(base.A2, [cone_A2(cone, y) for y in r], rtol=1e-13))
            self.assertTrue(np.allclose(base.drift, (p + q) / r, rtol=1e-13))

    def test_rotated_cone_line(self):
        eps, p, q = 0.1, 3, 4
        r = np.linspace(1.0, 3.0, 21)
        chart = cone_chart(p, q, r, eps * r, np.full_like(r, eps), np.zeros_like(r))

        g_ss, g_pp, g_qq = graph_metric(chart)
        self.assertTrue(np.allclose(g_ss, 1.0 + eps ** 2, rtol=1e-14))
        self.assertTrue(np.allclose(normal_product(chart), 1.0 / math.sqrt(1.0 + eps ** 2), rtol=1e-14))
        self.assertTrue(np.allclose(monge_normal_product(chart), 1.0 / math.sqrt(1.0 + eps ** 2), rtol=1e-12))

        phi = cone_angle(p, q) - math.atan(eps)
        rho = r * math.sqrt(1.0 + eps ** 2)
        expected = (p * math.tan(phi) - q / math.tan(phi)) / rho
        self.assertTrue(np.allclose(graph_mean_curvature(chart), expected, rtol=1e-12))
        self.assertTrue(np.allclose(g_pp, (rho * math.cos(phi)) ** 2, rtol=1e-12))
        self.assertTrue(np.allclose(g_qq, (rho * math.sin(phi)) ** 2, rtol=1e-12))
        norm = graph_curvature_norm(chart)
        self.assertTrue(np.allclose(norm ** 2, (p * math.tan(phi) ** 2 + q / math.tan(phi) ** 2) / rho ** 2,
                                    rtol=1e-12))

    def test_finite_difference_derivatives(self):
        eps, power = 0.05, -2.0
        errors = []
        for points in (41, 81):
            r = np.linspace(1.0, 3.0, points)
            exact = power_graph(3, 3, r, eps, power)
            approx = cone_chart(3, 3, r, exact.u)
            errors.append(np.max(np.abs(error_term(approx)[3:-3] - error_term(exact)[3:-3])))
        order = math.log(errors[0] / errors[1], 2.0)
        self.assertGreater(order, 1.7)


class ErrorTermTest(TestCase):

    r = np.array([1.0, 1.5, 2.0, 3.0])

    def _scaling(self, p, q, eps):
        big = np.max(np.abs(error_term(power_graph(p, q, self.r, eps, -2.0))))
        small = np.max(np.abs(error_term(power_graph(p, q, self.r, eps / 2.0, -2.0))))
        return math.log(big / small, 2.0)

    def test_quadratic_for_unequal_factors(self):
        self.assertLess(abs(self._scaling(3, 4, 1e-3) - 2.0), 0.05)

    def test_cubic_for_equal_factors(self):
        self.assertLess(abs(self._scaling(3, 3, 1e-2) - 3.0), 0.05)

    def test_dilation(self):
        # u_lam(r) = lam u(r / lam) is the same graph dilated by lam
        eps, lam = 0.05, 2.0
        base = power_graph(3, 4, self.r, eps, -2.0)
        r = lam * self.r
        dilated = cone_chart(3, 4, r, lam * eps * (r / lam) ** -2.0, -2.0 * eps * (r / lam) ** -3.0,
                             6.0 * eps * (r / lam) ** -4.0 / lam)
        self.assertTrue(np.allclose(error_term(dilated), error_term(base) / lam, rtol=1e-10))


class LeafOverConeTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.curve = shoot_leaf(3, 3, 1.0, 1e-2, 50.0)

    def test_leaf_is_a_minimal_graph(self):
        curve = self.curve
        frame = ConeFrame(3, 3)
        delta = curve.delta
        graph = (np.abs(delta) < math.radians(5.0)) & (curve.radius > 5.0)
        a, b = frame.from_st(curve.s[graph], curve.t[graph])
        dphi = profile_curvature(3, 3, curve.s[graph], curve.t[graph], curve.phi[graph])
        cos_delta = np.cos(delta[graph])
        chart = cone_chart(3, 3, a, b, -np.tan(delta[graph]), -dphi / cos_delta ** 3)

        self.assertTrue(np.allclose(normal_product(chart), cos_delta, rtol=1e-12))
        self.assertLess(np.max(np.abs(graph_mean_curvature(chart))), 1e-10)

    def test_dilation_field_is_jacobi(self):
        base = BaseCurve.leaf(self.curve, np.linspace(0.5, 20.0, 40))
        w = base.s * np.cos(base.phi) + base.t * np.sin(base.phi)
        u = base.s * np.sin(base.phi) - base.t * np.cos(base.phi)
        du = base.dphi * w
        d2u = base.d2phi * w + base.dphi - base.dphi ** 2 * u
        self.assertLess(np.max(np.abs(base.jacobi(u, du, d2u))), 1e-9)

    def test_zero_graph_on_leaf(self):
        base = BaseCurve.leaf(self.curve, np.linspace(0.5, 20.0, 40))
        chart = GraphChart(base, np.zeros(40), np.zeros(40), np.zeros(40))
        self.assertLess(np.max(np.abs(graph_mean_curvature(chart))), 1e-10)
        self.assertTrue(np.allclose(graph_curvature_norm(chart) ** 2, base.A2, rtol=1e-12))


class GraphConditionTest(TestCase):

    def test_sphere_factor_collapses(self):
        r = np.array([1.0, 2.0])
        with self.assertRaises(GraphConditionError):
            graph_metric(cone_chart(3, 3, r, -10.0 * r, np.full(2, -10.0), np.zeros(2)))

    def test_fold_over_base(self):
        sigma = np.array([1.0, 1.1, 1.2])
        base = BaseCurve(3, 3, sigma, sigma, sigma, np.full(3, math.pi / 4), np.ones(3), np.zeros(3))
        chart = GraphChart(base, np.full(3, -2.0), np.zeros(3), np.zeros(3))
        with self.assertRaises(GraphConditionError):
            normal_product(chart)

    def test_near_fold(self):
        r = np.array([1.0, 2.0])
        chart = cone_chart(3, 3, r, np.zeros(2), np.full(2, 1e3), np.zeros(2))
        with self.assertRaises(GraphConditionError):
            graph_mean_curvature(chart)
