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
import json
import logging
import math

from scipy import special

from .exceptions import ConfigError, DomainError

LOG = logging.getLogger(__name__)


def sphere_area(k, radius=1.0):
    """Area of the round k-sphere of the given radius"""

    return 2.0 * math.pi ** ((k + 1) / 2.0) / special.gamma((k + 1) / 2.0) * radius ** k


def harmonic_multiplicity(k, dim):
    """Dimension of degree-k spherical harmonics on S^dim"""

    if k == 0:
        return 1
    total = math.comb(k + dim, dim)
    if k >= 2:
        total -= math.comb(k - 2 + dim, dim)
    return total


class LinkSpec(object):

    """
    Spectral description of the link of a cone: eigenvalues mu_j of -(Delta + |A|^2) on the link,
    sup |A|^2, area and whether the first eigenfunction is constant.
    """

    def __init__(self, dim, mu, sup_A2, area, symmetric=True, multiplicities=None):
        mu = [float(m) for m in mu]
        if not mu:
            raise ConfigError("A link needs at least one eigenvalue", module="cone")
        if any(b < a for a, b in zip(mu, mu[1:])):
            raise ConfigError("Link eigenvalues must be nondecreasing, got {}".format(mu), module="cone")
        if sup_A2 < 0:
            raise ConfigError("sup_A2 must be nonnegative, got {}".format(sup_A2), module="cone")
        if mu[0] < -sup_A2 - 1e-12:
            raise ConfigError("First link eigenvalue {} is below -sup_A2 = {}".format(mu[0], -sup_A2),
                              module="cone")
        if area <= 0:
            raise ConfigError("Link area must be positive, got {}".format(area), module="cone")
        if multiplicities is not None and len(multiplicities) != len(mu):
            raise ConfigError("Got {} multiplicities for {} eigenvalues".format(len(multiplicities), len(mu)),
                              module="cone")

        self.dim = int(dim)
        self.mu = tuple(mu)
        self.sup_A2 = float(sup_A2)
        self.area = float(area)
        self.symmetric = bool(symmetric)
        self.multiplicities = tuple(int(m) for m in multiplicities) if multiplicities else (1,) * len(mu)

    def to_dict(self):
        return {
            "dim": self.dim,
            "mu": list(self.mu),
            "sup_A2": self.sup_A2,
            "area": self.area,
            "symmetric": self.symmetric,
            "multiplicities": list(self.multiplicities),
        }

    @classmethod
    def from_dict(cls, data):
        try:
            return cls(data["dim"], data["mu"], data["sup_A2"], data["area"],
                       symmetric=data.get("symmetric", True), multiplicities=data.get("multiplicities"))
        except KeyError as exc:
            raise ConfigError("cone.link is missing field {}".format(exc), module="cone")

    def __repr__(self):
        return "<{self.__class__.__name__}: dim={self.dim} mu_1={mu}>".format(self=self, mu=self.mu[0])


class ConeSpec(object):

    """
    A regular hypercone in R^{n+1} described through its link. `factors` holds (p, q) for the
    quadratic cones, which are the only ones with an equivariant profile picture.
    """

    def __init__(self, n, link, factors=None):
        if int(n) < 7:
            raise ConfigError("Cone dimension must be at least 7, got {}".format(n), module="cone")
        if link.dim != int(n) - 1:
            raise ConfigError("Link dimension {} does not match n - 1 = {}".format(link.dim, int(n) - 1),
                              module="cone")
        self.n = int(n)
        self.link = link
        self.factors = tuple(factors) if factors else None

    @property
    def stability_margin(self):
        return self.link.mu[0] + (self.n - 2) ** 2 / 4.0

    @property
    def strictly_stable(self):
        return self.stability_margin > 0

    @property
    def mu1(self):
        return self.link.mu[0]

    @property
    def omega1(self):
        """Constant value of the L^2-normalized first link eigenfunction"""

        return self.link.area ** -0.5

    def to_dict(self):
        data = {"n": self.n, "link": self.link.to_dict()}
        if self.factors:
            data["factors"] = list(self.factors)
        return data

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, data):
        if "p" in data and "q" in data:
            return quadratic_cone(data["p"], data["q"], max_degree=data.get("max_degree", 0))
        try:
            return cls(data["n"], LinkSpec.from_dict(data["link"]), factors=data.get("factors"))
        except KeyError as exc:
            raise ConfigError("cone is missing field {}".format(exc), module="cone")

    @classmethod
    def from_json(cls, value):
        return cls.from_dict(json.loads(value))

    def __repr__(self):
        return "<{self.__class__.__name__}: n={self.n} margin={self.stability_margin}>".format(self=self)


def quadratic_cone(p, q, max_degree=0):
    """
    The cone C_{p,q} over S^p(sqrt(p/(n-1))) x S^q(sqrt(q/(n-1))).

    With max_degree=0 only the O(p+1) x O(q+1)-invariant eigenvalue mu_1 = -(n-1) is listed; a
    positive max_degree adds the products of spherical harmonics up to that degree in each factor.
    """
    p, q = int(p), int(q)
    n = p + q + 1
    if p < 2 or q < 2:
        raise ConfigError("Quadratic cones need p, q >= 2, got ({}, {})".format(p, q), module="cone")
    if n < 7:
        raise ConfigError("C_{{{},{}}} has n = {} < 7 and is not minimizing".format(p, q, n), module="cone")
    if n == 7 and min(p, q) < 3:
        raise ConfigError("C_{{{},{}}} is not minimizing: n = 7 requires p, q >= 3".format(p, q), module="cone")

    area = sphere_area(p, math.sqrt(p / (n - 1.0))) * sphere_area(q, math.sqrt(q / (n - 1.0)))
    levels = {}
    for k in range(int(max_degree) + 1):
        for m in range(int(max_degree) + 1):
            mu = (n - 1) * (k * (k + p - 1.0) / p + m * (m + q - 1.0) / q - 1.0)
            key = round(mu, 10)
            levels[key] = levels.get(key, 0) + harmonic_multiplicity(k, p) * harmonic_multiplicity(m, q)
    mu = sorted(levels)
    link = LinkSpec(n - 1, mu, n - 1, area, symmetric=True, multiplicities=[levels[m] for m in mu])
    LOG.debug("Built C_%d,%d with %d link levels", p, q, len(mu))
    return ConeSpec(n, link, factors=(p, q))


def cone_A2(cone, y):
    """|A_C|^2 at radius y"""

    if y <= 0:
        raise DomainError("Cone curvature is undefined at y = {}".format(y), module="cone")
    return cone.link.sup_A2 / float(y) ** 2


def hessian_r_identities(cone, r):
    """(|grad r|^2, |Hess r|^2) on the cone at radius r"""

    if r <= 0:
        raise DomainError("Radius must be positive, got {}".format(r), module="cone")
    return 1.0, (cone.n - 1) / float(r) ** 2
