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
import logging

import numpy as np

from .exceptions import GraphConditionError
from .foliation import cone_angle, leaf_geometry, profile_curvature_derivative

LOG = logging.getLogger(__name__)

FOLD_THRESHOLD = 0.01


class BaseCurve(object):

    """
    Equivariant base hypersurface through its unit-speed profile (s(sigma), t(sigma)) with
    tangent angle phi and unit normal (sin phi, -cos phi).
    """

    def __init__(self, p, q, sigma, s, t, phi, dphi, d2phi):
        self.p = int(p)
        self.q = int(q)
        self.sigma = np.asarray(sigma, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.dphi = np.asarray(dphi, dtype=float)
        self.d2phi = np.asarray(d2phi, dtype=float)

    @classmethod
    def cone(cls, p, q, r):
        r = np.asarray(r, dtype=float)
        theta = cone_angle(p, q)
        zero = np.zeros_like(r)
        return cls(p, q, r, r * np.cos(theta), r * np.sin(theta), zero + theta, zero, zero)

    @classmethod
    def leaf(cls, curve, sigma=None):
        if sigma is None:
            sigma = curve.sigma[1:]
        s, t, phi, dphi, _ = leaf_geometry(curve, sigma)
        d2phi = profile_curvature_derivative(curve.p, curve.q, s, t, phi)
        return cls(curve.p, curve.q, sigma, s, t, phi, dphi, d2phi)

    @property
    def normal(self):
        return np.sin(self.phi), -np.cos(self.phi)

    def principal_curvatures(self):
        """(k_sigma, k_p, k_q); |A|^2 = k_sigma^2 + p k_p^2 + q k_q^2"""

        return self.dphi, np.sin(self.phi) / self.s, -np.cos(self.phi) / self.t

    @property
    def A2(self):
        k_sigma, k_p, k_q = self.principal_curvatures()
        return k_sigma ** 2 + self.p * k_p ** 2 + self.q * k_q ** 2

    @property
    def drift(self):
        """First-order coefficient of the Laplacian for equivariant functions"""

        return self.p * np.cos(self.phi) / self.s + self.q * np.sin(self.phi) / self.t

    def laplacian(self, u, du, d2u):
        return d2u + self.drift * du

    def jacobi(self, u, du, d2u):
        return self.laplacian(u, du, d2u) + self.A2 * u


class GraphChart(object):

    """
    Normal graph u over a base curve. Missing derivatives are taken with second-order
    differences in the base arclength.
    """

    def __init__(self, base, u, du=None, d2u=None):
        self.base = base
        self.u = np.asarray(u, dtype=float)
        if du is None:
            du = np.gradient(self.u, base.sigma, edge_order=2)
        if d2u is None:
            d2u = np.gradient(du, base.sigma, edge_order=2)
        self.du = np.asarray(du, dtype=float)
        self.d2u = np.asarray(d2u, dtype=float)

    def stretch(self):
        """1 + u k_sigma, the tangential stretch of the graph"""

        return 1.0 + self.u * self.base.dphi

    def position(self):
        nu_s, nu_t = self.base.normal
        return self.base.s + self.u * nu_s, self.base.t + self.u * nu_t

    def tilt(self):
        """Angle between the base tangent and the graph tangent"""

        return np.arctan2(self.du, self.stretch())

    def graph_angle(self):
        return self.base.phi - self.tilt()


def _pick(values, index):
    return values if index is None else values[index]


def graph_metric(chart, index=None):
    """
    (g_sigma_sigma, g_pp, g_qq): the profile direction and the two sphere factors per unit
    round metric.
    """
    k_sigma, k_p, k_q = chart.base.principal_curvatures()
    stretch = chart.stretch()
    g_ss = stretch ** 2 + chart.du ** 2
    s_bar = chart.base.s * (1.0 + chart.u * k_p)
    t_bar = chart.base.t * (1.0 + chart.u * k_q)
    if np.any(stretch <= 0) or np.any(s_bar <= 0) or np.any(t_bar < 0):
        raise GraphConditionError("Graph metric is not positive definite", module="graphgeo")
    return _pick(g_ss, index), _pick(s_bar ** 2, index), _pick(t_bar ** 2, index)


def normal_product(chart, index=None):
    """V = nu . nu_bar"""

    stretch = chart.stretch()
    if np.any(stretch <= 0):
        raise GraphConditionError("Graph folds over its base (1 + u k <= 0)", module="graphgeo")
    return _pick(stretch / np.hypot(stretch, chart.du), index)


def monge_normal_product(chart):
    """V from finite differences of the graph positions, projected on the base frame"""

    s_bar, t_bar = chart.position()
    ds = np.gradient(s_bar, chart.base.sigma, edge_order=2)
    dt = np.gradient(t_bar, chart.base.sigma, edge_order=2)
    nu_s, nu_t = chart.base.normal
    tangential = ds * np.cos(chart.base.phi) + dt * np.sin(chart.base.phi)
    normal = ds * nu_s + dt * nu_t
    return 1.0 / np.sqrt(1.0 + (normal / tangential) ** 2)


def _graph_curvatures(chart):
    base = chart.base
    v = normal_product(chart)
    if np.any(v <= FOLD_THRESHOLD):
        raise GraphConditionError("Graph is near a fold: min V = {:.3g}".format(float(np.min(v))),
                                  module="graphgeo")
    stretch = chart.stretch()
    dstretch = chart.du * base.dphi + chart.u * base.d2phi
    speed2 = stretch ** 2 + chart.du ** 2
    dphi_bar = base.dphi - (stretch * chart.d2u - chart.du * dstretch) / speed2
    phi_bar = chart.graph_angle()
    s_bar, t_bar = chart.position()
    return dphi_bar / np.sqrt(speed2), np.sin(phi_bar) / s_bar, -np.cos(phi_bar) / t_bar


def graph_mean_curvature(chart, index=None):
    """H of the graph with the normal continuing the base normal"""

    k_sigma, k_p, k_q = _graph_curvatures(chart)
    return _pick(k_sigma + chart.base.p * k_p + chart.base.q * k_q, index)


def graph_curvature_norm(chart, index=None):
    """|A| of the graph"""

    k_sigma, k_p, k_q = _graph_curvatures(chart)
    return _pick(np.sqrt(k_sigma ** 2 + chart.base.p * k_p ** 2 + chart.base.q * k_q ** 2), index)


def error_term(chart, index=None):
    """E(u) = -H/V - (Delta u + |A|^2 u)"""

    h_bar = graph_mean_curvature(chart)
    v = normal_product(chart)
    linear = chart.base.jacobi(chart.u, chart.du, chart.d2u)
    return _pick(-h_bar / v - linear, index)


def error_term_diffusivity(chart):
    """|dE/du''| = |1/g_sigma_sigma - 1|, the part of the second-order term left explicit"""

    g_ss = chart.stretch() ** 2 + chart.du ** 2
    return np.abs(1.0 / g_ss - 1.0)


def cone_chart(p, q, r, u, du=None, d2u=None):
    return GraphChart(BaseCurve.cone(p, q, r), u, du, d2u)


def leaf_chart(leaf, u, sigma=None, du=None, d2u=None):
    return GraphChart(BaseCurve.leaf(leaf.curve, sigma), u, du, d2u)
