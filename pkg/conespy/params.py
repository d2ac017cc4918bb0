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
from collections import OrderedDict, namedtuple

from .cone import quadratic_cone
from .exceptions import ConfigError
from .spectrum import alpha_plus, order_and_select
from .wspace import build_quadrature

LOG = logging.getLogger(__name__)

DEFAULT_LAMBDA = 1e3
DEFAULT_BETA = 1e2
DEFAULT_RHO = 1e-2
SWEEP_CUTOFF = 3.0
SWEEP_ORDER = 40

AlphaCondition = namedtuple("AlphaCondition", "passed lhs terms margins")
AdmissibleIntervals = namedtuple("AdmissibleIntervals", "xi theta xi_mid")
DerivedConstants = namedtuple("DerivedConstants", "sigma_l c_l varrho k_tilde")
SimonsAsymptotics = namedtuple("SimonsAsymptotics",
                               "alpha_approx alpha_tilde_approx theta_approx alpha_exact alpha_tilde_exact "
                               "theta_lower alpha_tolerance alpha_tilde_tolerance")

ALPHA_TERMS = ("2(1-a)/(n+2a+4)", "(n-4+2a)/(n+4+2a)", "2(1-a)d/((n+2a+4)l)", "at/(1+at)")


def theta_lower_bound(alpha):
    return (-1.0 - alpha) / (1.0 - alpha)


def varrho_of(alpha, theta):
    return 1.0 - 0.5 * (1.0 - alpha) * (1.0 - theta)


def k_tilde_of(n, alpha, xi, theta):
    return xi - theta * (n / 2.0 + alpha + 2.0) / (1.0 - alpha)


def check_alpha_condition(n, alpha, alpha_tilde, lambda_l, delta_l):
    """
    (-1 - alpha)/(1 - alpha) against the four upper terms; margins are term - lhs in the order of
    ALPHA_TERMS.
    """
    lhs = theta_lower_bound(alpha)
    terms = (
        2.0 * (1.0 - alpha) / (n + 2.0 * alpha + 4.0),
        (n - 4.0 + 2.0 * alpha) / (n + 4.0 + 2.0 * alpha),
        2.0 * (1.0 - alpha) * delta_l / ((n + 2.0 * alpha + 4.0) * lambda_l),
        alpha_tilde / (1.0 + alpha_tilde),
    )
    margins = tuple(term - lhs for term in terms)
    return AlphaCondition(all(margin > 0 for margin in margins), lhs, terms, margins)


def xi_upper_bound(n, alpha, lambda_l, delta_l):
    return min(1.0, (n - 4.0 + 2.0 * alpha) / (2.0 * (1.0 - alpha)), delta_l / lambda_l)


def theta_upper_bound(n, alpha, alpha_tilde, xi):
    return min(2.0 * (1.0 - alpha) * xi / (n + 2.0 * alpha + 4.0), alpha_tilde / (2.0 + alpha_tilde))


def admissible_intervals(n, alpha, alpha_tilde, lambda_l, delta_l):
    """
    Open xi interval and the theta interval at its midpoint; an empty side is returned as None.
    """
    xi_hi = xi_upper_bound(n, alpha, lambda_l, delta_l)
    if xi_hi <= 0:
        return AdmissibleIntervals(None, None, None)
    xi_mid = 0.5 * xi_hi
    theta_lo = max(theta_lower_bound(alpha), 0.0)
    theta_hi = min(theta_upper_bound(n, alpha, alpha_tilde, xi_mid), 1.0)
    theta = (theta_lo, theta_hi) if theta_hi > theta_lo else None
    return AdmissibleIntervals((0.0, xi_hi), theta, xi_mid)


def constraint_margins(n, alpha, alpha_tilde, lambda_l, delta_l, xi, theta):
    """Every printed inequality as (name, margin); a positive margin means it holds"""

    varrho = varrho_of(alpha, theta)
    margins = OrderedDict()
    margins["xi > 0"] = xi
    margins["xi < 1"] = 1.0 - xi
    margins["xi < (n-4+2a)/(2(1-a))"] = (n - 4.0 + 2.0 * alpha) / (2.0 * (1.0 - alpha)) - xi
    margins["xi < delta_l/lambda_l"] = delta_l / lambda_l - xi
    margins["theta > (-1-a)/(1-a)"] = theta - theta_lower_bound(alpha)
    margins["theta < 2(1-a)xi/(n+2a+4)"] = 2.0 * (1.0 - alpha) * xi / (n + 2.0 * alpha + 4.0) - theta
    margins["theta < 2(1-a)xi/(n+2a)"] = 2.0 * (1.0 - alpha) * xi / (n + 2.0 * alpha) - theta
    margins["theta < (1-theta)at/2"] = 0.5 * (1.0 - theta) * alpha_tilde - theta
    margins["varrho > 0"] = varrho
    margins["varrho < theta"] = theta - varrho
    margins["k_tilde > 0"] = k_tilde_of(n, alpha, xi, theta)
    return margins


# The looser (n + 2a) denominator is reported but never enforced.
INFORMATIVE_MARGINS = ("theta < 2(1-a)xi/(n+2a)",)


def derived_constants(spectrum, xi, theta, alpha_tilde=None):
    n, alpha = spectrum.n, spectrum.alpha
    if alpha_tilde is None:
        alpha_tilde = 2.0 - 2.0 * alpha
    margins = constraint_margins(n, alpha, alpha_tilde, spectrum.lambda_l, spectrum.delta_l, xi, theta)
    violated = [name for name, margin in margins.items() if margin <= 0 and name not in INFORMATIVE_MARGINS]
    if violated:
        raise ConfigError("Constants xi={} theta={} violate: {}".format(xi, theta, ", ".join(violated)),
                          module="params")
    return DerivedConstants(spectrum.sigma_l, spectrum.c_l, varrho_of(alpha, theta), k_tilde_of(n, alpha, xi, theta))


def simons_asymptotics(n):
    """Large-n approximations for C_{p,q} with p + q + 1 = n, next to the exact values"""

    n = int(n)
    if n < 50:
        raise ConfigError("Asymptotic constants need n >= 50, got {}".format(n), module="params")
    p = (n - 1) // 2
    q = n - 1 - p
    cone = quadratic_cone(p, q)
    alpha = alpha_plus(cone.mu1, n)
    widen = 1.0 if p == q else 2.0
    return SimonsAsymptotics(-1.0 - 2.0 / (n + 1), 4.0 + 4.0 / (n + 1), 1.0 / (n + 2), alpha, 2.0 - 2.0 * alpha,
                             theta_lower_bound(alpha), widen * 12.0 / n ** 2, widen * 25.0 / n ** 2)


class ParamBundle(object):

    """
    The full constant system of a run with its validity margins. Bundles built with strict=False
    may carry failing margins; `valid` tells them apart.
    """

    def __init__(self, n, alpha, alpha_tilde, lambda_l, delta_l, sigma_l, xi, theta, varrho, k_tilde, c_l,
                 Lambda, beta, rho, t0, i_1=0, margins=None):
        self.n = int(n)
        self.alpha = float(alpha)
        self.alpha_tilde = float(alpha_tilde)
        self.lambda_l = float(lambda_l)
        self.delta_l = float(delta_l)
        self.sigma_l = float(sigma_l)
        self.xi = float(xi)
        self.theta = float(theta)
        self.varrho = float(varrho)
        self.k_tilde = float(k_tilde)
        self.c_l = float(c_l)
        self.Lambda = float(Lambda)
        self.beta = float(beta)
        self.rho = float(rho)
        self.t0 = float(t0)
        self.i_1 = int(i_1)
        self.margins = OrderedDict(margins or ())

    @property
    def valid(self):
        return all(margin > 0 for name, margin in self.margins.items() if name not in INFORMATIVE_MARGINS)

    @property
    def s0(self):
        return -math.log(-self.t0)

    @property
    def tau0(self):
        return (-self.t0) ** (-2.0 * self.sigma_l) / (2.0 * self.sigma_l)

    def to_dict(self):
        data = OrderedDict()
        for key in ("n", "alpha", "alpha_tilde", "lambda_l", "delta_l", "sigma_l", "xi", "theta", "varrho",
                    "k_tilde", "c_l", "Lambda", "beta", "rho", "t0", "i_1"):
            data[key] = getattr(self, key)
        data["valid"] = self.valid
        data["margins"] = OrderedDict(self.margins)
        return data

    @classmethod
    def from_dict(cls, data):
        fields = dict((k, v) for k, v in data.items() if k not in ("valid",))
        return cls(**fields)

    def __repr__(self):
        return "<{self.__class__.__name__}: n={self.n} valid={self.valid}>".format(self=self)


def build_bundle(spectrum, alpha_tilde=None, xi=None, theta=None, Lambda=DEFAULT_LAMBDA, beta=DEFAULT_BETA,
                 rho=DEFAULT_RHO, t0=None, strict=True):
    """
    Assemble a ParamBundle. Missing xi/theta default to the admissible midpoints, or, when the
    admissible set is empty and strict is off, to xi = min(1, delta/lambda)/2 and theta a tenth
    of the way from its lower bound to 1.
    """
    n, alpha = spectrum.n, spectrum.alpha
    lambda_l, delta_l = spectrum.lambda_l, spectrum.delta_l
    if alpha_tilde is None:
        alpha_tilde = 2.0 - 2.0 * alpha
    if not (Lambda > 1 and beta > 1 and 0 < rho < 1):
        raise ConfigError("Need Lambda > 1, beta > 1 and 0 < rho < 1, got {}, {}, {}".format(Lambda, beta, rho),
                          module="params")
    if t0 is None:
        t0 = -1e-3
    if not -1 < t0 < 0:
        raise ConfigError("t0 must lie in (-1, 0), got {}".format(t0), module="params")

    intervals = admissible_intervals(n, alpha, alpha_tilde, lambda_l, delta_l)
    if xi is None:
        xi = intervals.xi_mid if intervals.xi else 0.5 * min(1.0, delta_l / lambda_l)
    if theta is None:
        if intervals.theta and intervals.xi:
            theta = 0.5 * sum(theta_interval_at(n, alpha, alpha_tilde, xi, intervals))
        else:
            lower = max(theta_lower_bound(alpha), 0.0)
            theta = lower + 0.1 * (1.0 - lower)

    margins = constraint_margins(n, alpha, alpha_tilde, lambda_l, delta_l, xi, theta)
    bundle = ParamBundle(n, alpha, alpha_tilde, lambda_l, delta_l, spectrum.sigma_l, xi, theta,
                         varrho_of(alpha, theta), k_tilde_of(n, alpha, xi, theta), spectrum.c_l, Lambda, beta, rho,
                         t0, i_1=spectrum.i_1, margins=margins)
    if not bundle.valid:
        violated = [name for name, margin in margins.items() if margin <= 0 and name not in INFORMATIVE_MARGINS]
        if strict:
            raise ConfigError("Constant system violates: {}".format(", ".join(violated)), module="params")
        if intervals.xi is None:
            LOG.warning("No admissible xi exists for n=%d, alpha=%.4g (upper bound %.4g); using xi=%.4g, "
                        "theta=%.4g, which violate: %s", n, alpha, xi_upper_bound(n, alpha, lambda_l, delta_l), xi,
                        theta, ", ".join(violated))
        else:
            LOG.warning("Using a constant system outside the admissible set: %s", ", ".join(violated))
    return bundle


def theta_interval_at(n, alpha, alpha_tilde, xi, intervals):
    lo = intervals.theta[0]
    hi = min(theta_upper_bound(n, alpha, alpha_tilde, xi), 1.0)
    return lo, hi


def sweep_dimensions(ns, cutoff=SWEEP_CUTOFF, order=SWEEP_ORDER):
    """
    Alpha-condition rows (n, alpha, lhs, margins..., passed) for the Simons-type cones C_{p,q},
    with lambda_l and delta_l from each cone's own spectrum.
    """
    rows = []
    for n in ns:
        p = (int(n) - 1) // 2
        cone = quadratic_cone(p, int(n) - 1 - p)
        spectrum = order_and_select(cone, cutoff, build_quadrature(cone.n, order))
        alpha = spectrum.alpha
        condition = check_alpha_condition(cone.n, alpha, 2.0 - 2.0 * alpha, spectrum.lambda_l, spectrum.delta_l)
        LOG.debug("n=%d: lambda_l=%.6g delta_l=%.6g passed=%s", cone.n, spectrum.lambda_l, spectrum.delta_l,
                  condition.passed)
        rows.append((cone.n, alpha, condition.lhs) + condition.margins + (condition.passed,))
    return rows
