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
from scipy.integrate import solve_ivp
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal
from scipy.spatial import cKDTree

from .exceptions import ConfigError, DomainError, FitError, NumericalError, ShootingError
from .spectrum import alpha_plus
from .utils import fit_slope

LOG = logging.getLogger(__name__)

RTOL = 1e-11
ATOL = 1e-13
TANGENT_TOLERANCE = math.radians(5.0)
MIN_FIT_SAMPLES = 30


def cone_angle(p, q):
    """Angle of the cone line t = sqrt(q/p) s in the (s, t) quadrant"""

    return math.atan(math.sqrt(float(q) / p))


def profile_curvature(p, q, s, t, phi):
    """phi' of an equivariant minimal profile, from H = phi' + p sin(phi)/s - q cos(phi)/t = 0"""

    return q * np.cos(phi) / t - p * np.sin(phi) / s


def profile_curvature_derivative(p, q, s, t, phi):
    """d/dsigma of profile_curvature along a unit-speed profile"""

    dphi = profile_curvature(p, q, s, t, phi)
    return (-q * np.sin(phi) * dphi / t - q * np.cos(phi) * np.sin(phi) / t ** 2
            - p * np.cos(phi) * dphi / s + p * np.sin(phi) * np.cos(phi) / s ** 2)


class ConeFrame(object):

    """
    Coordinates (a, b) along and across the cone line; b > 0 on the leaf side. The tangent
    angle is phi = theta_c + delta.
    """

    def __init__(self, p, q):
        self.p = int(p)
        self.q = int(q)
        self.theta = cone_angle(p, q)
        self.c = math.cos(self.theta)
        self.sn = math.sin(self.theta)

    def to_st(self, a, b):
        return a * self.c + b * self.sn, a * self.sn - b * self.c

    def from_st(self, s, t):
        return s * self.c + t * self.sn, s * self.sn - t * self.c

    def rhs(self, sigma, state):
        a, b, delta = state
        s, t = self.to_st(a, b)
        numerator = (self.p + self.q) * (-a * self.c * self.sn * math.sin(delta) + b * (
            self.c * self.sn * math.cos(delta) + (self.c ** 2 - self.sn ** 2) * math.sin(delta)))
        return [math.cos(delta), -math.sin(delta), numerator / (s * t)]


class ProfileCurve(object):

    """
    Unit-speed equivariant profile sampled at a fixed arclength step, starting on the axis t=0.
    `psi` is the signed distance to the cone line.
    """

    def __init__(self, p, q, sigma, s, t, phi, psi, arclength_step):
        self.p = int(p)
        self.q = int(q)
        self.sigma = np.asarray(sigma, dtype=float)
        self.s = np.asarray(s, dtype=float)
        self.t = np.asarray(t, dtype=float)
        self.phi = np.asarray(phi, dtype=float)
        self.psi = np.asarray(psi, dtype=float)
        self.arclength_step = float(arclength_step)

    @property
    def radius(self):
        return np.hypot(self.s, self.t)

    @property
    def samples(self):
        return list(zip(self.s, self.t, self.phi))

    @property
    def delta(self):
        return self.phi - cone_angle(self.p, self.q)

    def scaled(self, factor):
        return ProfileCurve(self.p, self.q, factor * self.sigma, factor * self.s, factor * self.t, self.phi,
                            factor * self.psi, factor * self.arclength_step)

    def interpolants(self):
        """Cubic splines of (s, t, phi) in arclength"""

        return (CubicSpline(self.sigma, self.s), CubicSpline(self.sigma, self.t),
                CubicSpline(self.sigma, self.phi))

    def __len__(self):
        return self.sigma.size


def axis_start(p, q, s0, eps):
    """Regular orthogonal crossing of the axis expanded to arclength eps"""

    k0 = -p / ((q + 1.0) * s0)
    s = s0 - k0 * eps ** 2 / 2.0
    t = eps - k0 ** 2 * eps ** 3 / 6.0
    phi = math.pi / 2.0 + k0 * eps
    return s, t, phi


def integrate_profile(frame, state0, sigma_span, r_max=None, detect_crossing=False, dense_output=True):
    """
    Integrate the profile in cone coordinates (a, b, delta). With detect_crossing the
    integration stops when b changes sign; r_max stops it on the sphere of that radius.
    """
    events = []
    if r_max is not None:
        def reach(sigma, state):
            return math.hypot(state[0], state[1]) - r_max
        reach.terminal = True
        reach.direction = 1
        events.append(reach)
    if detect_crossing:
        def crossing(sigma, state):
            return state[1]
        crossing.terminal = True
        crossing.direction = -1
        events.append(crossing)

    solution = solve_ivp(frame.rhs, sigma_span, state0, method="DOP853", rtol=RTOL, atol=ATOL,
                         dense_output=dense_output, events=events or None)
    if solution.status == -1:
        raise ShootingError("Profile integration failed: {}".format(solution.message), module="foliation")
    return solution


def shoot_leaf(p, q, s0, step, r_max):
    """
    Minimal profile leaving the axis orthogonally at (s0, 0), sampled every `step` of arclength
    until radius r_max.
    """
    if p < 2 or q < 2:
        raise ConfigError("Profiles need p, q >= 2, got ({}, {})".format(p, q), module="foliation")
    if s0 <= 0 or step <= 0:
        raise ConfigError("Need s0 > 0 and step > 0, got s0={} step={}".format(s0, step), module="foliation")
    if r_max <= 2 * s0:
        raise ConfigError("r_max={} must be well beyond s0={}".format(r_max, s0), module="foliation")

    frame = ConeFrame(p, q)
    eps = min(1e-4 * s0, 0.5 * step)
    s, t, phi = axis_start(p, q, s0, eps)
    a, b = frame.from_st(s, t)
    state0 = [a, b, phi - frame.theta]

    solution = integrate_profile(frame, state0, (eps, 4.0 * r_max + s0), r_max=r_max, detect_crossing=True)
    if solution.t_events[1].size:
        raise ShootingError("Leaf from s0={} crosses the cone at arclength {:.6g}".format(
            s0, solution.t_events[1][0]), module="foliation")
    if not solution.t_events[0].size:
        raise ShootingError("Leaf from s0={} never reached r_max={}".format(s0, r_max), module="foliation")

    sigma_end = solution.t_events[0][0]
    count = int(math.floor(sigma_end / step))
    sigma = step * np.arange(1, count + 1)
    early = sigma < eps
    states = np.empty((3, sigma.size))
    if np.any(~early):
        states[:, ~early] = solution.sol(sigma[~early])
    for index in np.nonzero(early)[0]:
        s_e, t_e, phi_e = axis_start(p, q, s0, sigma[index])
        a_e, b_e = frame.from_st(s_e, t_e)
        states[:, index] = (a_e, b_e, phi_e - frame.theta)

    s_samples, t_samples = frame.to_st(states[0], states[1])
    curve = ProfileCurve(p, q,
                         np.concatenate(([0.0], sigma)),
                         np.concatenate(([s0], s_samples)),
                         np.concatenate(([0.0], t_samples)),
                         np.concatenate(([math.pi / 2.0], states[2] + frame.theta)),
                         np.concatenate(([frame.from_st(s0, 0.0)[1]], states[1])),
                         step)
    LOG.debug("Shot C_%d,%d leaf from s0=%g: %d samples to r=%g", p, q, s0, len(curve), r_max)
    return curve


def graph_start_radius(curve):
    """First radius where the tangent is within 5 degrees of the cone direction"""

    close = np.nonzero(np.abs(curve.delta) <= TANGENT_TOLERANCE)[0]
    if not close.size:
        raise FitError("Leaf never aligns with the cone direction", module="foliation")
    return float(curve.radius[close[0]])


AsymptoticFit = namedtuple("AsymptoticFit", "c alpha_fit alpha_tilde_fit")


def fit_asymptotics(curve, cone=None):
    """
    psi ~ c r^alpha on the outer decade; alpha_tilde from the decay of d(psi r^-alpha)/d ln r
    between R_s and ten times R_s.
    """
    psi = curve.psi
    if np.max(np.abs(psi)) == 0:
        raise FitError("Cannot fit a degenerate zero distance", module="foliation")
    r = curve.radius
    R_s = graph_start_radius(curve)
    r_end = r[-1]
    window = (r >= max(r_end / 10.0, R_s)) & (psi > 0)
    if window.sum() < MIN_FIT_SAMPLES:
        raise FitError("Only {} samples in the outer fit window, need {}".format(window.sum(), MIN_FIT_SAMPLES),
                       module="foliation")
    alpha_fit, intercept = fit_slope(np.log(r[window]), np.log(psi[window]))
    c = math.exp(intercept)

    alpha = alpha_plus(cone.mu1, cone.n) if cone is not None else alpha_fit
    graph = (r >= R_s) & (psi > 0)
    r_graph, psi_graph = r[graph], psi[graph]
    order = np.argsort(r_graph)
    r_graph, psi_graph = r_graph[order], psi_graph[order]
    hi = min(r_graph[-1], 10.0 * R_s)
    log_r = np.linspace(math.log(r_graph[0]), math.log(hi), 200)
    g = np.interp(log_r, np.log(r_graph), psi_graph * r_graph ** (-alpha))
    dg = np.abs(np.gradient(g, log_r))
    usable = dg > 1e-12 * np.max(np.abs(g))
    if usable.sum() < MIN_FIT_SAMPLES:
        raise FitError("Correction term is below the integration noise", module="foliation")
    slope, _ = fit_slope(log_r[usable], np.log(dg[usable]))
    return AsymptoticFit(c, alpha_fit, -slope)


class FoliationLeaf(object):

    """
    One leaf S_kappa of the foliation: the profile scaled so that psi ~ kappa r^alpha.
    """

    def __init__(self, curve, kappa, fit_c, fit_alpha, fit_alpha_tilde, R_s, alpha):
        self.curve = curve
        self.kappa = float(kappa)
        self.fit_c = float(fit_c)
        self.fit_alpha = float(fit_alpha)
        self.fit_alpha_tilde = float(fit_alpha_tilde)
        self.R_s = float(R_s)
        self.alpha = float(alpha)

    @property
    def p(self):
        return self.curve.p

    @property
    def q(self):
        return self.curve.q

    @property
    def tip(self):
        """Axis crossing radius"""

        return float(self.curve.s[0])

    def to_dict(self):
        return {
            "p": self.p,
            "q": self.q,
            "kappa": self.kappa,
            "fit_c": self.fit_c,
            "fit_alpha": self.fit_alpha,
            "fit_alpha_tilde": self.fit_alpha_tilde,
            "R_s": self.R_s,
            "alpha": self.alpha,
            "tip": self.tip,
        }

    def __repr__(self):
        return "<{self.__class__.__name__}: C_{self.p},{self.q} kappa={self.kappa}>".format(self=self)


def leaf_family(cone, s0=1.0, step=1e-2, r_max=1e3):
    """The kappa = 1 leaf, normalized so that psi ~ r^alpha"""

    if cone.factors is None:
        raise ConfigError("Foliation leaves need a quadratic cone", module="foliation")
    p, q = cone.factors
    alpha = alpha_plus(cone.mu1, cone.n)
    curve = shoot_leaf(p, q, s0, step, r_max)
    fit = fit_asymptotics(curve, cone)
    factor = fit.c ** (-1.0 / (1.0 - alpha))
    scaled = curve.scaled(factor)
    R_s = graph_start_radius(scaled)
    LOG.info("Leaf of C_%d,%d: c=%.6g alpha_fit=%.6g alpha_tilde_fit=%.4g, normalized by %.6g", p, q, fit.c,
             fit.alpha_fit, fit.alpha_tilde_fit, factor)
    return FoliationLeaf(scaled, 1.0, fit.c * factor ** (1.0 - alpha), fit.alpha_fit, fit.alpha_tilde_fit, R_s,
                         alpha)


def rescale_leaf(leaf, kappa):
    if kappa <= 0:
        raise DomainError("Leaf scale kappa must be positive, got {}".format(kappa), module="foliation")
    factor = kappa ** (1.0 / (1.0 - leaf.alpha))
    return FoliationLeaf(leaf.curve.scaled(factor), leaf.kappa * kappa, leaf.fit_c * kappa, leaf.fit_alpha,
                         leaf.fit_alpha_tilde, leaf.R_s * factor, leaf.alpha)


def arclength_at_radius(curve, radius):
    r = curve.radius
    beyond = np.nonzero(r >= radius)[0]
    if not beyond.size:
        raise DomainError("Leaf sampled only to r={:.6g} < {}".format(r[-1], radius), module="foliation")
    k = beyond[0]
    if k == 0:
        return 0.0
    weight = (radius - r[k - 1]) / (r[k] - r[k - 1])
    return float(curve.sigma[k - 1] + weight * (curve.sigma[k] - curve.sigma[k - 1]))


def leaf_geometry(curve, sigma):
    """(s, t, phi, phi', |A|^2) of the profile at the arclengths `sigma`"""

    spline_s, spline_t, spline_phi = curve.interpolants()
    s, t, phi = spline_s(sigma), spline_t(sigma), spline_phi(sigma)
    dphi = profile_curvature(curve.p, curve.q, s, t, phi)
    a2 = dphi ** 2 + curve.p * np.sin(phi) ** 2 / s ** 2 + curve.q * np.cos(phi) ** 2 / t ** 2
    return s, t, phi, dphi, a2


TipEigen = namedtuple("TipEigen", "lambda_1 sigma phi radius")


def tip_dirichlet_eigen(leaf, radius, cells=400, max_spacing=0.02):
    """
    First Dirichlet eigenpair of -(Delta + |A|^2) on the leaf inside the given radius. Finite
    volumes in arclength with the face weight s^p t^q, so the axis is a natural no-flux end.
    phi is positive and scaled to max 1.
    """
    if radius < 2.0 * leaf.tip:
        raise DomainError("Radius {} does not cover the tip at {}".format(radius, leaf.tip), module="foliation")
    curve = leaf.curve
    p, q = curve.p, curve.q
    sigma_end = arclength_at_radius(curve, radius)
    cells = max(int(cells), int(math.ceil(sigma_end / max_spacing)))
    h = sigma_end / cells
    centers = (np.arange(cells) + 0.5) * h
    faces = np.arange(1, cells + 1) * h

    s, t, _, _, a2 = leaf_geometry(curve, centers)
    spline_s, spline_t, _ = curve.interpolants()
    face_weight = spline_s(faces) ** p * spline_t(faces) ** q
    mass = s ** p * t ** q * h

    diagonal = -a2 * mass
    flux = face_weight / h
    diagonal[:-1] += flux[:-1]
    diagonal[1:] += flux[:-1]
    diagonal[-1] += 2.0 * flux[-1]
    off = -flux[:-1]

    scale = 1.0 / np.sqrt(mass)
    values, vectors = eigh_tridiagonal(diagonal * scale ** 2, off * scale[:-1] * scale[1:], select="i",
                                       select_range=(0, 0))
    lambda_1 = float(values[0])
    if lambda_1 <= 0:
        raise NumericalError("First Dirichlet eigenvalue {} <= 0 on a stable leaf".format(lambda_1),
                             module="foliation")
    phi = vectors[:, 0] * scale
    phi = phi / phi[np.argmax(np.abs(phi))]
    if np.min(phi) < -1e-8:
        raise NumericalError("First Dirichlet eigenfunction changes sign", module="foliation")
    return TipEigen(lambda_1, centers, phi, float(radius))


def support_function(curve, flip=False):
    """<S, nu> with nu = (sin phi, -cos phi), the Jacobi field of dilations"""

    sign = -1.0 if flip else 1.0
    return sign * (curve.s * np.sin(curve.phi) - curve.t * np.cos(curve.phi))


def jacobi_field_positivity(leaf, flip=False):
    """Minimum of <S, nu> over the leaf samples"""

    return float(np.min(support_function(leaf.curve, flip=flip)))


def foliation_distance(curves):
    """Smallest distance between samples of two different curves"""

    best = np.inf
    trees = [cKDTree(np.column_stack((curve.s, curve.t))) for curve in curves]
    for i, curve in enumerate(curves):
        points = np.column_stack((curve.s, curve.t))
        for j in range(i + 1, len(curves)):
            distance, _ = trees[j].query(points)
            best = min(best, float(np.min(distance)))
    return best
