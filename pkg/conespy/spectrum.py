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
import math
from collections import namedtuple

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate
from scipy.interpolate import PchipInterpolator

from .exceptions import ConfigError, DomainError, SpectrumError
from .specfun import KummerParams, kummer_m, polynomial_coefficients
from .utils import fit_slope, smooth_cutoff
from .wspace import POLYNOMIAL, RadialFunction

LOG = logging.getLogger(__name__)

DEVIATION_FLOOR = 1e-14


def alpha_plus(mu_j, n):
    """Admissible root of alpha^2 + (n-2) alpha - mu_j = 0"""

    discriminant = (n - 2) ** 2 + 4.0 * mu_j
    if discriminant < 0:
        raise SpectrumError("Indicial discriminant {} < 0 for mu={} n={}".format(discriminant, mu_j, n),
                            module="spectrum")
    return (-(n - 2) + math.sqrt(discriminant)) / 2.0


def in_weighted_h1(alpha, n):
    return 2 * alpha - 2 > -n


class EigenMode(object):

    """
    Eigenpair (i, j) of L_C: phi = c y^alpha (1 + sum_m (-1)^m K_m y^{2m}) omega_j with
    eigenvalue -(1 - alpha)/2 + i.
    """

    def __init__(self, i, j, n, alpha_j, K, c_norm):
        self.i = int(i)
        self.j = int(j)
        self.n = int(n)
        self.alpha_j = float(alpha_j)
        self.K = tuple(K)
        self.c_norm = float(c_norm)
        coefficients = np.zeros(2 * self.i + 1)
        coefficients[0] = 1.0
        for m, k_m in enumerate(self.K, start=1):
            coefficients[2 * m] = (-1) ** m * k_m
        self.polynomial = Polynomial(coefficients)

    @property
    def eigenvalue(self):
        return -(1.0 - self.alpha_j) / 2.0 + self.i

    def core(self, y):
        return self.c_norm * self.polynomial(np.asarray(y, dtype=float))

    def core_derivative(self, y):
        return self.c_norm * self.polynomial.deriv()(np.asarray(y, dtype=float))

    def profile(self, y):
        y = np.asarray(y, dtype=float)
        return y ** self.alpha_j * self.core(y)

    def kummer_profile(self, y):
        """Same function through Kummer's series, for cross-checks"""

        params = KummerParams(-self.i, self.alpha_j + self.n / 2.0)
        y = np.atleast_1d(np.asarray(y, dtype=float))
        values = np.array([kummer_m(params, v ** 2 / 4.0) for v in y])
        return self.c_norm * y ** self.alpha_j * values

    def radial(self):
        return RadialFunction(self.core, self.alpha_j, self.j, POLYNOMIAL, core_derivative=self.core_derivative)

    def to_row(self):
        return [self.i, self.j, self.alpha_j, self.eigenvalue, self.c_norm] + list(self.K)

    def __repr__(self):
        return "<{self.__class__.__name__}: i={self.i} j={self.j} lambda={self.eigenvalue}>".format(self=self)


def build_mode(cone, i, j, quad):
    if not 1 <= j <= len(cone.link.mu):
        raise ConfigError("Link index {} outside the {} supplied eigenvalues".format(j, len(cone.link.mu)),
                          module="spectrum")
    n = cone.n
    alpha = alpha_plus(cone.link.mu[j - 1], n)
    if not in_weighted_h1(alpha, n):
        raise SpectrumError("Mode (i={}, j={}) with alpha={} is not in H^1_W (2 alpha - 2 <= -n)".format(
            i, j, alpha), module="spectrum")
    b = alpha + n / 2.0
    K = [k_m / 4.0 ** m for m, k_m in enumerate(polynomial_coefficients(i, b), start=1)]
    mode = EigenMode(i, j, n, alpha, K, 1.0)
    rule = quad.shifted(2.0 * alpha)
    norm2 = float(np.dot(rule.weights, mode.polynomial(rule.nodes) ** 2))
    mode.c_norm = 1.0 / math.sqrt(norm2)
    return mode


def eigen_residual(mode, mu, y, h=1e-4):
    """
    L_C phi + lambda phi on the radial line with centered differences of relative step h,
    normalized by max(1, |phi|).
    """
    y = np.asarray(y, dtype=float)
    step = h * y
    f = mode.profile(y)
    f_plus = mode.profile(y + step)
    f_minus = mode.profile(y - step)
    d1 = (f_plus - f_minus) / (2 * step)
    d2 = (f_plus - 2 * f + f_minus) / step ** 2
    residual = d2 + (mode.n - 1) / y * d1 - mu / y ** 2 * f + 0.5 * (f - y * d1) + mode.eigenvalue * f
    return residual / np.maximum(1.0, np.abs(f))


class OrderedSpectrum(object):

    """
    Modes sorted by eigenvalue with the selected index l: lambda_l = lambda_{i_1, 1} > 0 followed
    by a strictly positive gap delta_l.
    """

    def __init__(self, modes, l, delta_l, m_of_l, i_k, sigma_l, i_1, alpha, n):
        self.modes = tuple(modes)
        self.l = int(l)
        self.delta_l = float(delta_l)
        self.m_of_l = int(m_of_l)
        self.i_k = dict(i_k)
        self.sigma_l = float(sigma_l)
        self.i_1 = int(i_1)
        self.alpha = float(alpha)
        self.n = int(n)

    @property
    def mode_l(self):
        return self.modes[self.l - 1]

    @property
    def lambda_l(self):
        return self.mode_l.eigenvalue

    @property
    def unstable_modes(self):
        """phi_1, ..., phi_{l-1}"""

        return self.modes[:self.l - 1]

    @property
    def c_l(self):
        return 0.5 + 1.0 / (4.0 * self.sigma_l)

    def to_dict(self):
        return {
            "l": self.l,
            "i_1": self.i_1,
            "lambda_l": self.lambda_l,
            "delta_l": self.delta_l,
            "sigma_l": self.sigma_l,
            "c_l": self.c_l,
            "m_of_l": self.m_of_l,
            "i_k": dict((str(k), v) for k, v in self.i_k.items()),
            "alpha": self.alpha,
        }


def _sort_key(mode):
    return (round(mode.eigenvalue, 12), mode.j, mode.i)


def order_and_select(cone, lambda_cutoff, quad, l=None):
    """
    Every mode with eigenvalue <= lambda_cutoff, sorted with ties broken by (j, i), plus the
    index bookkeeping around the selected l. A forced `l` is validated instead of searched.
    """
    n = cone.n
    alpha = alpha_plus(cone.link.mu[0], n)
    if not in_weighted_h1(alpha, n):
        raise SpectrumError("First link mode is not in H^1_W for {!r}".format(cone), module="spectrum")

    modes = []
    for j in range(1, len(cone.link.mu) + 1):
        alpha_j = alpha_plus(cone.link.mu[j - 1], n)
        if not in_weighted_h1(alpha_j, n):
            LOG.warning("Skipping link index %d: alpha=%.6g is outside H^1_W", j, alpha_j)
            continue
        i = 0
        while -(1.0 - alpha_j) / 2.0 + i <= lambda_cutoff + 1e-12:
            modes.append(build_mode(cone, i, j, quad))
            i += 1
    modes.sort(key=_sort_key)

    def gap_after(position):
        if position + 1 >= len(modes):
            raise SpectrumError("Cutoff {} leaves no eigenvalue after lambda_l; raise the cutoff".format(
                lambda_cutoff), module="spectrum")
        return modes[position + 1].eigenvalue - modes[position].eigenvalue

    if l is not None:
        position = int(l) - 1
        if not 0 <= position < len(modes):
            raise SpectrumError("Forced l={} outside the {} modes below the cutoff".format(l, len(modes)),
                                module="spectrum")
        chosen = modes[position]
        if chosen.j != 1 or chosen.eigenvalue <= 0:
            raise SpectrumError("Forced l={} is {!r}, not a positive eigenvalue of the first link branch".format(
                l, chosen), module="spectrum")
        if gap_after(position) <= 1e-12:
            raise SpectrumError("Forced l={} has a zero gap; choose a different l".format(l), module="spectrum")
    else:
        position = None
        for index, mode in enumerate(modes):
            if mode.j != 1 or mode.eigenvalue <= 0:
                continue
            if index + 1 < len(modes) and gap_after(index) > 1e-12:
                position = index
                break
            LOG.debug("Skipping %r: no positive gap below the cutoff", mode)
        if position is None:
            raise SpectrumError("No positive eigenvalue of the first link branch with a positive gap below "
                                "cutoff {}".format(lambda_cutoff), module="spectrum")

    chosen = modes[position]
    lambda_l = chosen.eigenvalue
    delta_l = gap_after(position)

    m_of_l = 1
    i_k = {}
    for j in range(2, len(cone.link.mu) + 1):
        base = [mode for mode in modes if mode.j == j]
        if base and base[0].eigenvalue <= lambda_l + 1e-12 and base[0].i == 0:
            m_of_l = j
    for k in range(2, m_of_l + 1):
        below = [mode.i for mode in modes if mode.j == k and mode.eigenvalue < lambda_l - 1e-12]
        i_k[k] = max(below) if below else None

    sigma_l = lambda_l / (1.0 - alpha)
    LOG.info("Selected l=%d (i_1=%d): lambda_l=%.6g delta_l=%.6g sigma_l=%.6g", position + 1, chosen.i, lambda_l,
             delta_l, sigma_l)
    return OrderedSpectrum(modes, position + 1, delta_l, m_of_l, i_k, sigma_l, chosen.i, alpha, n)


class SampledRadial(object):

    """Radial samples v(y_k) on an increasing grid, attached to one link mode"""

    def __init__(self, y, values, link_index=1, compact=False):
        self.y = np.asarray(y, dtype=float)
        self.values = np.asarray(values, dtype=float)
        if self.y.shape != self.values.shape or self.y.size < 4:
            raise DomainError("Sampled function needs matching y/values arrays with at least 4 points",
                              module="spectrum")
        if np.any(np.diff(self.y) <= 0) or self.y[0] <= 0:
            raise DomainError("Sample grid must be positive and increasing", module="spectrum")
        self.link_index = int(link_index)
        self.compact = bool(compact)


def project(v, mode, quad):
    """<v, phi>_W for a RadialFunction or SampledRadial v"""

    if isinstance(v, RadialFunction):
        if v.link_index != mode.j:
            return 0.0
        rule = quad.shifted(v.power + mode.alpha_j)
        return float(np.dot(rule.weights, v.core(rule.nodes) * mode.core(rule.nodes)))

    if v.link_index != mode.j:
        return 0.0
    n = mode.n
    if v.compact:
        x = np.log(v.y)
        integrand = v.values * mode.profile(v.y) * v.y ** n * np.exp(-v.y ** 2 / 4.0)
        return float(integrate.simpson(integrand, x=x))

    rule = quad.shifted(mode.alpha_j)
    inside = (rule.nodes >= v.y[0]) & (rule.nodes <= v.y[-1])
    outside_mass = np.sum(np.abs(rule.weights[~inside] * mode.core(rule.nodes[~inside])))
    if outside_mass > DEVIATION_FLOOR:
        raise DomainError("Samples on [{:.3g}, {:.3g}] miss quadrature nodes carrying weight {:.3g}".format(
            v.y[0], v.y[-1], outside_mass), module="spectrum")
    interpolant = PchipInterpolator(np.log(v.y), v.values)
    values = interpolant(np.log(rule.nodes[inside]))
    return float(np.dot(rule.weights[inside], values * mode.core(rule.nodes[inside])))


def cutoff_profile(y, s, beta, rho, sigma_l):
    """eta(e^{sigma s} y - beta) eta(rho e^{s/2} - y)"""

    y = np.asarray(y, dtype=float)
    return smooth_cutoff(math.exp(sigma_l * s) * y - beta) * smooth_cutoff(rho * math.exp(s / 2.0) - y)


def _complement_integral(mode_a, mode_b, s, beta, rho, sigma_l):
    n = mode_a.n
    power = mode_a.alpha_j + mode_b.alpha_j + n - 1

    def smooth_part(y):
        y = np.asarray(y, dtype=float)
        return (1.0 - cutoff_profile(y, s, beta, rho, sigma_l)) * mode_a.core(y) * mode_b.core(y) * np.exp(
            -y ** 2 / 4.0)

    inner_end = (beta + 1.0) * math.exp(-sigma_l * s)
    outer_start = rho * math.exp(s / 2.0) - 1.0
    inner, _ = integrate.quad(lambda y: float(smooth_part(y)), 0.0, inner_end, weight="alg",
                              wvar=(power, 0.0), epsabs=0.0, epsrel=1e-10, limit=200)
    outer = 0.0
    if outer_start < 60.0:
        outer, _ = integrate.quad(lambda y: float(smooth_part(y) * y ** power), max(outer_start, inner_end),
                                  np.inf, epsabs=0.0, epsrel=1e-10, limit=200)
    return inner + outer


OverlapDecay = namedtuple("OverlapDecay", "exponent converged s deviation expected tail")


def cutoff_overlap_decay(mode_a, mode_b, beta, rho, sigma_l, s_grid, quad=None):
    """
    |<cut phi_a, phi_b>_W - delta_ab| along s_grid with its fitted decay rate. The deviation is
    the complement integral of (1 - cut) phi_a phi_b, evaluated directly so it never suffers
    cancellation against 1. `tail` records int (1 - cut) phi_a^2 dW.
    """
    s = np.asarray(s_grid, dtype=float)
    if np.any(np.diff(s) <= 0):
        raise DomainError("s grid must be increasing", module="spectrum")
    if mode_a.j != mode_b.j:
        deviation = np.zeros_like(s)
    else:
        deviation = np.abs([_complement_integral(mode_a, mode_b, value, beta, rho, sigma_l) for value in s])
    tail = np.array([_complement_integral(mode_a, mode_a, value, beta, rho, sigma_l) for value in s])

    expected = (mode_a.n + mode_a.alpha_j + mode_b.alpha_j) * sigma_l
    usable = deviation > DEVIATION_FLOOR
    if usable.sum() < 2:
        return OverlapDecay(None, True, s, deviation, expected, tail)
    slope, _ = fit_slope(s[usable], np.log(deviation[usable]))
    return OverlapDecay(-slope, False, s, deviation, expected, tail)
