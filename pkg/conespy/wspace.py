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
from concurrent.futures import ThreadPoolExecutor
from functools import lru_cache

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy import special

from .exceptions import ConfigError, DomainError, NumericalError
from .utils import bump, bump_derivative, log_grid

LOG = logging.getLogger(__name__)

MAX_ORDER = 200
# Relative quadrature slack on the Hardy lower bound for eps_tilde
CLOSED_FORM_SLACK = 1e-9

POLYNOMIAL = "polynomial"
GAUSSIAN_BORDERLINE = "gaussian-borderline"


class WeightedQuadrature(object):

    """
    Gauss rule for integrals of f(y) y^(n-1+shift) e^(-y^2/4) over (0, inf). Built from the
    generalized Gauss-Laguerre rule in eta = y^2/4.
    """

    def __init__(self, n, nodes, weights, order, shift=0.0):
        self.n = int(n)
        self.nodes = nodes
        self.weights = weights
        self.order = int(order)
        self.shift = float(shift)

    def integrate(self, f):
        return float(np.dot(self.weights, f(self.nodes)))

    def shifted(self, shift):
        """Same order and dimension, radial weight multiplied by y^shift"""

        return build_quadrature(self.n, self.order, self.shift + shift)

    def __repr__(self):
        return "<{self.__class__.__name__}: n={self.n} order={self.order} shift={self.shift}>".format(self=self)


@lru_cache(maxsize=256)
def _laguerre_rule(order, a):
    eta, weights = special.roots_genlaguerre(order, a)
    return eta, weights


def build_quadrature(n, order, shift=0.0):
    if order < 2:
        raise ConfigError("Quadrature order must be at least 2, got {}".format(order), module="wspace")
    if order > MAX_ORDER:
        raise NumericalError("Quadrature order {} exceeds the stable limit {}".format(order, MAX_ORDER),
                             module="wspace")
    a = (n + shift) / 2.0 - 1.0
    if a <= -1:
        raise DomainError("Weight y^{} is not integrable at the vertex".format(n - 1 + shift), module="wspace")
    eta, weights = _laguerre_rule(int(order), a)
    nodes = 2.0 * np.sqrt(eta)
    weights = 2.0 ** (n - 1 + shift) * weights
    return WeightedQuadrature(n, nodes, weights, order, shift)


class RadialFunction(object):

    """
    f(y) = y^power * core(y) attached to the link eigenfunction omega_{link_index}. Keeping the
    power apart lets the quadrature absorb singular factors exactly.
    """

    def __init__(self, core, power=0.0, link_index=1, decay_class=POLYNOMIAL, core_derivative=None,
                 support=None):
        if decay_class not in (POLYNOMIAL, GAUSSIAN_BORDERLINE):
            raise ConfigError("Unknown decay class {}".format(decay_class), module="wspace")
        self.core = core
        self.power = float(power)
        self.link_index = int(link_index)
        self.decay_class = decay_class
        self.core_derivative = core_derivative
        self.support = support

    def __call__(self, y):
        y = np.asarray(y, dtype=float)
        return y ** self.power * self.core(y)

    def derivative(self):
        """d/dy as a RadialFunction with power lowered by one"""

        if self.core_derivative is None:
            raise DomainError("No derivative supplied for this radial function", module="wspace")
        core, dcore, power = self.core, self.core_derivative, self.power
        return RadialFunction(lambda y: power * core(y) + y * dcore(y), power - 1.0, self.link_index,
                              self.decay_class, support=self.support)

    def scaled(self, factor):
        core, dcore = self.core, self.core_derivative
        return RadialFunction(lambda y: factor * core(y), self.power, self.link_index, self.decay_class,
                              None if dcore is None else (lambda y: factor * dcore(y)), self.support)


def bump_function(center, width, amplitude=1.0, link_index=1):
    """Smooth bump supported in (center - width, center + width)"""

    if center - width <= 0:
        raise DomainError("Bump support must stay away from the vertex", module="wspace")
    return RadialFunction(lambda y: amplitude * bump(y, center, width), 0.0, link_index,
                          core_derivative=lambda y: amplitude * bump_derivative(y, center, width),
                          support=(center - width, center + width))


def inner_product_W(f, g, cone, quad):
    """<f, g>_W over the cone with orthonormal link modes"""

    for factor in (f, g):
        if factor.decay_class != POLYNOMIAL:
            raise DomainError("Refusing a weighted integral of a {} function".format(factor.decay_class),
                              module="wspace")
    if quad.n != cone.n:
        raise ConfigError("Quadrature built for n={} used on a cone with n={}".format(quad.n, cone.n),
                          module="wspace")
    if f.link_index != g.link_index:
        return 0.0
    rule = quad.shifted(f.power + g.power)
    return float(np.dot(rule.weights, f.core(rule.nodes) * g.core(rule.nodes)))


def weighted_norm(f, cone, quad):
    return math.sqrt(inner_product_W(f, f, cone, quad))


def total_weight(n):
    """Integral of y^(n-1) e^(-y^2/4) over the half line"""

    return 2.0 ** (n - 1) * special.gamma(n / 2.0)


def mode_norm_closed_form(alpha, i, n):
    """||y^alpha M(-i; alpha + n/2; y^2/4)||_W^2 through the Laguerre norm"""

    b = alpha + n / 2.0
    return 2.0 ** (n - 1 + 2 * alpha) * math.factorial(i) * special.gamma(b) ** 2 / special.gamma(b + i)


def _legendre_panels(lo, hi, panels=64, points=16):
    x, w = leggauss(points)
    edges = np.linspace(lo, hi, panels + 1)
    half = 0.5 * np.diff(edges)
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return nodes, weights


def hardy_constant(n):
    """Sharp constant of the weighted Hardy-type inequality (ground state y^(-(n-2)/2))"""

    return (n - 2) / 4.0


def hardy_defect(u, n):
    """
    Rayleigh quotient -[int (u'^2 - (n-2)^2 u^2 / (4 y^2)) dW] / int u^2 dW of a compactly
    supported u, i.e. the constant this u forces into the Hardy-type inequality.
    """
    if u.support is None:
        raise DomainError("Hardy defect needs a compactly supported function", module="wspace")
    lo, hi = u.support
    y, w = _legendre_panels(max(lo, 0.0), hi)
    density = w * y ** (n - 1) * np.exp(-y ** 2 / 4.0)
    values = u(y)
    slope = u.derivative()(y)
    mass = np.dot(density, values ** 2)
    if mass == 0:
        raise DomainError("Hardy defect of a function with zero weighted norm", module="wspace")
    energy = np.dot(density, slope ** 2 - (n - 2) ** 2 / (4.0 * y ** 2) * values ** 2)
    return float(-energy / mass)


CoercivityCertificate = namedtuple("CoercivityCertificate",
                                   "eps_tilde C trials seed basis_size max_ratio reference closed_form "
                                   "closed_form_holds")


def certificate_to_dict(certificate, cone):
    data = dict(certificate._asdict())
    data["cone"] = cone.to_dict()
    return data


def _coercivity_forms(cone, basis_size, modes):
    n = cone.n
    centers = log_grid(0.15, 8.0, basis_size)
    ratio = centers[1] / centers[0] if basis_size > 1 else 2.0
    widths = centers * (ratio - 1.0) * 1.5
    widths = np.minimum(widths, 0.9 * centers)

    y, w = _legendre_panels(0.01, float(centers[-1] + widths[-1]), panels=400, points=12)
    density = w * y ** (n - 1) * np.exp(-y ** 2 / 4.0)
    f = np.array([bump(y, c, h) for c, h in zip(centers, widths)])
    df = np.array([bump_derivative(y, c, h) for c, h in zip(centers, widths)])

    gram = np.einsum("ak,bk,k->ab", f, f, density)
    slope = np.einsum("ak,bk,k->ab", df, df, density)
    inverse_square = np.einsum("ak,bk,k->ab", f, f, density / y ** 2)

    size = basis_size * len(modes)
    q_form = np.zeros((size, size))
    g_form = np.zeros((size, size))
    n_form = np.zeros((size, size))
    for index, mu in enumerate(modes):
        block = slice(index * basis_size, (index + 1) * basis_size)
        q_form[block, block] = slope + mu * inverse_square - 0.5 * gram
        g_form[block, block] = slope + (mu + cone.link.sup_A2) * inverse_square
        n_form[block, block] = gram
    return q_form, g_form, n_form


def coercivity_certificate(cone, basis_size=20, trials=200, seed=0, workers=1, link_modes=3):
    """
    Empirical constants (eps_tilde, C) with int -(L_C u) u dW >= eps_tilde int |grad u|^2 dW
    - C int u^2 dW over random bump x link-mode test functions.

    eps_tilde is the smallest trial quotient of the form shifted by (hardy_constant + 1/2) times
    the mass against the gradient form; the weighted Hardy inequality bounds it below by
    margin / (margin + sup|A|^2), reported as closed_form. C is the worst trial ratio at that
    eps_tilde padded by 10%.
    """
    if not cone.strictly_stable:
        raise DomainError("Cone with stability margin {} is not strictly stable".format(cone.stability_margin),
                          module="wspace")

    margin = cone.stability_margin
    closed_form = margin / (margin + cone.link.sup_A2)
    reference = hardy_constant(cone.n) + 0.5
    modes = cone.link.mu[:link_modes]
    q_form, g_form, n_form = _coercivity_forms(cone, basis_size, modes)

    def trial_forms(trial):
        rng = np.random.default_rng([seed, trial])
        coefficients = rng.standard_normal(q_form.shape[0])
        return (float(coefficients @ q_form @ coefficients), float(coefficients @ g_form @ coefficients),
                float(coefficients @ n_form @ coefficients))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            forms = np.array(list(pool.map(trial_forms, range(trials))))
    else:
        forms = np.array([trial_forms(trial) for trial in range(trials)])
    q_values, g_values, n_values = forms.T

    eps_tilde = float(np.min((q_values + reference * n_values) / g_values))
    ratios = (eps_tilde * g_values - q_values) / n_values
    max_ratio = float(np.max(ratios))
    constant = 1.1 * max_ratio if max_ratio > 0 else 0.0
    holds = eps_tilde >= closed_form * (1.0 - CLOSED_FORM_SLACK)
    if not holds:
        LOG.warning("Trial eps_tilde %.6g for %r is below the Hardy lower bound %.6g", eps_tilde, cone, closed_form)
    LOG.info("Coercivity certificate for %r: eps_tilde=%.4g (lower bound %.4g) C=%.4g over %d trials", cone,
             eps_tilde, closed_form, constant, trials)
    return CoercivityCertificate(eps_tilde, constant, trials, seed, basis_size, max_ratio, reference, closed_form,
                                 bool(holds))


MorreyCheck = namedtuple("MorreyCheck", "holds slack implied_constant")

# The bound holds with some universal constant; checks use 1 and report the smallest constant the
# given v needs as implied_constant.
MORREY_CONSTANT = 1.0


def _link_sup(cone, link_index):
    multiplicity = cone.link.multiplicities[link_index - 1]
    return math.sqrt(multiplicity / cone.link.area)


def morrey_check(terms, y, cone, quad):
    """
    Pointwise Morrey bound |v(y)| <= C (y^(-n/2) + e^((y+1)^2/4)) (||grad v||_W + ||v||_W) for
    v = sum c_k phi_k given as (coefficient, mode) pairs, with C = MORREY_CONSTANT. Returns the
    slack rhs - lhs and the ratio lhs / (rhs / C).
    """
    if y <= 0:
        raise DomainError("Morrey bound needs y > 0, got {}".format(y), module="wspace")

    value = 0.0
    norm2 = 0.0
    grad2 = 0.0
    by_link = {}
    for coefficient, mode in terms:
        by_link.setdefault(mode.j, []).append((coefficient, mode))

    for link_index, group in by_link.items():
        mu = cone.link.mu[link_index - 1]
        value += abs(sum(c * float(mode.radial()(y)) for c, mode in group)) * _link_sup(cone, link_index)
        for ca, mode_a in group:
            fa = mode_a.radial()
            dfa = fa.derivative()
            for cb, mode_b in group:
                fb = mode_b.radial()
                dfb = fb.derivative()
                norm2 += ca * cb * inner_product_W(fa, fb, cone, quad)
                grad2 += ca * cb * inner_product_W(dfa, dfb, cone, quad)
                inv = quad.shifted(fa.power + fb.power - 2.0)
                grad2 += ca * cb * (mu + cone.link.sup_A2) * float(
                    np.dot(inv.weights, fa.core(inv.nodes) * fb.core(inv.nodes)))

    weight = (y ** (-cone.n / 2.0) + math.exp((y + 1.0) ** 2 / 4.0)) * (
        math.sqrt(max(grad2, 0.0)) + math.sqrt(max(norm2, 0.0)))
    slack = MORREY_CONSTANT * weight - value
    implied = value / weight if weight > 0 else math.inf
    return MorreyCheck(slack >= 0, slack, implied)
