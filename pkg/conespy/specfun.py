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

import numpy as np
from scipy import special

from .exceptions import DomainError, NumericalError, SeriesOverflowError

LOG = logging.getLogger(__name__)

SERIES_TOLERANCE = 1e-13
MAX_SERIES_TERMS = 20000
LOG_FLOAT_MAX = math.log(np.finfo(float).max)


def _is_nonpositive_integer(value):
    return value <= 0 and float(value).is_integer()


class KummerParams(object):

    """
    Parameters (a, b) of Kummer's function M(a; b; xi). For a in {0, -1, -2, ...} the series
    terminates and M is a polynomial of degree -a.
    """

    def __init__(self, a, b):
        if _is_nonpositive_integer(b):
            raise DomainError("Kummer parameter b must not be a nonpositive integer, got {}".format(b),
                              module="specfun")
        self.a = float(a)
        self.b = float(b)

    @property
    def terminating(self):
        return _is_nonpositive_integer(self.a)

    @property
    def degree(self):
        """Polynomial degree of a terminating series, None otherwise"""

        if not self.terminating:
            return None
        return int(-self.a)

    def __repr__(self):
        return "<{self.__class__.__name__}: a={self.a} b={self.b}>".format(self=self)


def rising_factorial(a, m):
    """a (a + 1) ... (a + m - 1); the empty product is 1"""

    if m < 0 or int(m) != m:
        raise DomainError("Rising factorial needs a nonnegative integer order, got {}".format(m),
                          module="specfun")
    return float(np.prod(a + np.arange(int(m), dtype=float)))


def gamma_fn(x):
    """Gamma function; negative non-integers go through reflection inside scipy"""

    if _is_nonpositive_integer(x):
        raise DomainError("Gamma has a pole at {}".format(x), module="specfun")
    return float(special.gamma(x))


def polynomial_coefficients(i, b):
    """
    Coefficients K_1..K_i (all positive) of the terminating series
    M(-i; b; xi) = 1 + sum_m (-1)^m K_m xi^m.
    """
    coefficients = []
    for m in range(1, int(i) + 1):
        coefficients.append((-1) ** m * rising_factorial(-i, m) / (rising_factorial(b, m) * math.factorial(m)))
    return coefficients


def kummer_polynomial(i, b, xi):
    xi = np.asarray(xi, dtype=float)
    total = np.ones_like(xi)
    for m, k_m in enumerate(polynomial_coefficients(i, b), start=1):
        total = total + (-1) ** m * k_m * xi ** m
    return total


def kummer_m(p, xi):
    """
    Series value of M(a; b; xi) for xi >= 0. Terminating parameters are summed exactly, the
    others to relative tolerance SERIES_TOLERANCE.
    """
    xi = float(xi)
    if not math.isfinite(xi) or xi < 0:
        raise DomainError("Kummer series needs a finite xi >= 0, got {}".format(xi), module="specfun")

    term = 1.0
    total = 1.0
    if p.terminating:
        for k in range(p.degree):
            term *= (p.a + k) * xi / ((p.b + k) * (k + 1))
            total += term
        return total

    for k in range(MAX_SERIES_TERMS):
        ratio = (p.a + k) * xi / ((p.b + k) * (k + 1))
        term *= ratio
        total += term
        if not (math.isfinite(term) and math.isfinite(total)):
            raise SeriesOverflowError("Kummer series overflows at xi={}; use the asymptotic form".format(xi),
                                      module="specfun")
        if abs(term) <= SERIES_TOLERANCE * abs(total) and abs(ratio) < 1:
            return total

    raise NumericalError("Kummer series for {} did not settle in {} terms at xi={}".format(
        p, MAX_SERIES_TERMS, xi), module="specfun")


def kummer_ode_residual(p, xi, h):
    """xi M'' + (b - xi) M' - a M with centered differences of step h"""

    if not 0 < h < xi / 4.0:
        raise DomainError("Finite difference step must satisfy 0 < h < xi/4, got h={} xi={}".format(h, xi),
                          module="specfun")
    m_minus = kummer_m(p, xi - h)
    m_center = kummer_m(p, xi)
    m_plus = kummer_m(p, xi + h)
    second = (m_plus - 2.0 * m_center + m_minus) / h ** 2
    first = (m_plus - m_minus) / (2.0 * h)
    return xi * second + (p.b - xi) * first - p.a * m_center

def kummer_asymptotic_log(p, xi):
    """(sign, log |value|) of the leading large-xi form, finite for any xi > 0"""

    if p.terminating:
        raise DomainError("Asymptotic form is invalid for terminating a={}".format(p.a), module="specfun")
    if xi <= 0:
        raise DomainError("Asymptotic form needs xi > 0, got {}".format(xi), module="specfun")
    sign = float(special.gammasgn(p.b) * special.gammasgn(p.a))
    log_value = float(special.gammaln(p.b) - special.gammaln(p.a)) + xi + (p.a - p.b) * math.log(xi)
    return sign, log_value


def kummer_asymptotic(p, xi):
    """Leading large-xi behaviour Gamma(b)/Gamma(a) e^xi xi^(a-b)"""

    sign, log_value = kummer_asymptotic_log(p, xi)
    if log_value > LOG_FLOAT_MAX:
        raise SeriesOverflowError("Asymptotic Kummer value e^{:.4g} at xi={} exceeds the float range; use "
                                  "kummer_asymptotic_log".format(log_value, xi), module="specfun")
    return sign * math.exp(log_value)
