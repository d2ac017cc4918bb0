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
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from scipy.interpolate import CubicSpline, PchipInterpolator
from scipy.linalg import LinAlgError, solve_banded
from scipy.spatial import cKDTree

from .exceptions import (AdmissibilityError, ConfigError, ConvergenceError, DomainError, FitError,
                         GraphConditionError, LinearSolveError, NumericalError)
from .foliation import ConeFrame, arclength_at_radius, rescale_leaf, tip_dirichlet_eigen
from .graphgeo import (BaseCurve, GraphChart, cone_chart, error_term, error_term_diffusivity, graph_curvature_norm,
                       normal_product)
from .spectrum import SampledRadial, cutoff_profile, project
from .utils import decades, fit_loglog, fit_slope, log_grid, smooth_cutoff

LOG = logging.getLogger(__name__)

CFL_FACTOR = 0.4
FD_STEP_FACTOR = 1e-4
BACKTRACK_FACTOR = 0.5
MAX_BACKTRACKS = 30
MIN_DECADES = 1.5
SCHEDULE_LAMBDA_MINUS = 0.99
SCHEDULE_SMALL = 1e-3
# Outer barrier lower-order constant carries a factor 2 of slack over the exact bound at x = 2R sqrt|t|
LOWER_ORDER_SLACK = 2.0
MAX_REPORTED_VIOLATIONS = 10
POLYLINE_REFINE = 4
MIN_POLYLINE_POINTS = 64


class FlowSettings(object):

    """
    Numerical settings of a flow run. Unknown keys and non-positive sizes raise ConfigError with
    the offending field.
    """

    defaults = OrderedDict([
        ("s0", 16.0),
        ("s_end", 22.0),
        ("dt", 1e-3),
        ("outer_points", 4096),
        ("tip_points", 1024),
        ("regrid_interval", 0.1),
        ("snapshot_interval", 0.25),
        ("overlap_tol", 1e-4),
        ("tune", False),
        ("tune_tolerance", 1e-6),
        ("tune_iterations", 30),
        ("ball_radius", None),
        ("workers", 1),
    ])

    def __init__(self, **overrides):
        unknown = set(overrides) - set(self.defaults)
        if unknown:
            raise ConfigError("Unknown flow settings: {}".format(", ".join(sorted(unknown))), module="flowsim")
        values = OrderedDict(self.defaults)
        values.update(overrides)
        for key in ("dt", "regrid_interval", "snapshot_interval", "overlap_tol", "tune_tolerance"):
            if not values[key] > 0:
                raise ConfigError("flow.{} must be positive, got {}".format(key, values[key]), module="flowsim")
        for key in ("outer_points", "tip_points", "tune_iterations", "workers"):
            if int(values[key]) < 1:
                raise ConfigError("flow.{} must be a positive integer, got {}".format(key, values[key]),
                                  module="flowsim")
        if values["outer_points"] < 16 or values["tip_points"] < 16:
            raise ConfigError("flow grids need at least 16 points", module="flowsim")
        if not values["s_end"] > values["s0"]:
            raise ConfigError("flow.s_end must exceed flow.s0, got {} <= {}".format(values["s_end"], values["s0"]),
                              module="flowsim")
        self._values = values

    def __getattr__(self, name):
        try:
            return self.__dict__["_values"][name]
        except KeyError:
            raise AttributeError(name)

    @property
    def t0(self):
        return -math.exp(-self.s0)

    def to_dict(self):
        return OrderedDict(self._values)


def t_of_s(s):
    return -math.exp(-s)


def s_of_t(t):
    if t >= 0:
        raise DomainError("Physical time must be negative, got {}".format(t), module="flowsim")
    return -math.log(-t)


def tau_of_s(s, sigma_l):
    return math.exp(2.0 * sigma_l * s) / (2.0 * sigma_l)


def s_of_tau(tau, sigma_l):
    return math.log(2.0 * sigma_l * tau) / (2.0 * sigma_l)


def tuning_modes(spectrum):
    """Unstable modes the equivariant flow can see: those on the first link branch"""

    modes = [mode for mode in spectrum.unstable_modes if mode.j == 1]
    skipped = len(spectrum.unstable_modes) - len(modes)
    if skipped:
        LOG.info("Equivariant flow ignores %d unstable modes of higher link branches", skipped)
    return modes


class LinearModes(object):

    """
    Linear evolution of the initial intermediate data
    e^{-lambda_l s0} omega_1 sum_k a_k e^{-lambda_k (s - s0)} y^alpha P_k(y), with a_l = 1.
    """

    def __init__(self, s0, lambda_l, omega1, terms):
        self.s0 = float(s0)
        self.lambda_l = float(lambda_l)
        self.omega1 = float(omega1)
        self.terms = list(terms)

    def __call__(self, y, s):
        y = np.asarray(y, dtype=float)
        total = np.zeros_like(y)
        for amplitude, mode in self.terms:
            if amplitude == 0:
                continue
            decay = math.exp(-self.lambda_l * self.s0 - mode.eigenvalue * (s - self.s0))
            total = total + amplitude * decay * y ** mode.alpha_j * mode.polynomial(y)
        return self.omega1 * total


class OuterChart(object):

    """Type I profile v over the cone on a log-uniform grid in y"""

    def __init__(self, y, v):
        self.y = np.asarray(y, dtype=float)
        self.v = np.asarray(v, dtype=float)
        self.h = math.log(self.y[-1] / self.y[0]) / (self.y.size - 1)

    @classmethod
    def over(cls, lo, hi, count, profile):
        y = log_grid(lo, hi, count)
        return cls(y, profile(y))

    def with_values(self, v):
        return OuterChart(self.y, v)

    def log_derivatives(self):
        dv = np.gradient(self.v, self.h, edge_order=2)
        return dv, np.gradient(dv, self.h, edge_order=2)

    def derivatives(self):
        """(v_y, v_yy) from differences in log y"""

        dx, dxx = self.log_derivatives()
        return dx / self.y, (dxx - dx) / self.y ** 2

    def interpolant(self):
        """Monotone cubic in log y, for regridding"""

        return PchipInterpolator(np.log(self.y), self.v)

    def spline(self):
        return CubicSpline(np.log(self.y), self.v)

    def graph(self, factors):
        dv, d2v = self.derivatives()
        return cone_chart(factors[0], factors[1], self.y, self.v, dv, d2v)


class TipChart(object):

    """
    Type II graph w_hat over a fixed leaf, sampled at arclength-uniform cell centers out to the
    given radius. The axis end is a reflection; the last cell carries the Dirichlet value.
    """

    def __init__(self, leaf, radius, h, base, face_weight, cell_weight, w):
        self.leaf = leaf
        self.radius = float(radius)
        self.h = float(h)
        self.base = base
        self.face_weight = face_weight
        self.cell_weight = cell_weight
        self.w = np.asarray(w, dtype=float)

    @classmethod
    def over_leaf(cls, leaf, radius, cells, w=None):
        curve = leaf.curve
        try:
            sigma_end = arclength_at_radius(curve, radius)
        except DomainError:
            raise ConfigError("Leaf sampled to r={:.4g} cannot carry a tip chart of radius {:.4g}; raise "
                              "foliation.r_max".format(float(curve.radius[-1]), radius), module="flowsim")
        h = sigma_end / cells
        centers = (np.arange(cells) + 0.5) * h
        faces = np.arange(1, cells + 1) * h
        base = BaseCurve.leaf(curve, centers)
        spline_s, spline_t, _ = curve.interpolants()
        face_weight = spline_s(faces) ** curve.p * spline_t(faces) ** curve.q
        cell_weight = base.s ** curve.p * base.t ** curve.q
        if w is None:
            w = np.zeros(cells)
        return cls(leaf, radius, h, base, face_weight, cell_weight, w)

    def with_values(self, w):
        return TipChart(self.leaf, self.radius, self.h, self.base, self.face_weight, self.cell_weight, w)

    @property
    def sigma(self):
        return self.base.sigma

    @property
    def cell_radius(self):
        return np.hypot(self.base.s, self.base.t)

    def derivatives(self):
        sigma = np.concatenate(([-self.sigma[0]], self.sigma))
        w = np.concatenate(([self.w[0]], self.w))
        dw = np.gradient(w, sigma, edge_order=2)
        d2w = np.gradient(dw, sigma, edge_order=2)
        return dw[1:], d2w[1:]

    def graph(self):
        dw, d2w = self.derivatives()
        return GraphChart(self.base, self.w, dw, d2w)

    def laplacian_bands(self):
        """(lower, diagonal, upper) of the finite-volume Laplacian with weight s^p t^q"""

        mass = self.cell_weight * self.h
        upper = self.face_weight / (self.h * mass)
        lower = np.zeros_like(upper)
        lower[1:] = self.face_weight[:-1] / (self.h * mass[1:])
        return lower, -(lower + upper), upper


def offsets_along_normals(points, tangents, normals, target):
    """
    Signed distance along each normal line to the polyline `target` (shape (m, 2)), searched
    around the nearest target vertex. Lines that miss the polyline give NaN.
    """
    points = np.asarray(points, dtype=float)
    target = np.asarray(target, dtype=float)
    _, nearest = cKDTree(target).query(points)
    shifts = np.arange(-4, 4)
    start = np.clip(nearest[:, None] + shifts[None, :], 0, target.shape[0] - 2)
    relative0 = target[start] - points[:, None, :]
    relative1 = target[start + 1] - points[:, None, :]
    g0 = np.einsum("kwd,kd->kw", relative0, tangents)
    g1 = np.einsum("kwd,kd->kw", relative1, tangents)
    crossing = (g0 * g1 <= 0) & (g0 != g1)
    distance = np.where(crossing, np.abs(shifts[None, :] + 0.5), np.inf)
    best = np.argmin(distance, axis=1)
    rows = np.arange(points.shape[0])
    found = np.isfinite(distance[rows, best])
    weight = np.zeros(points.shape[0])
    weight[found] = g0[rows, best][found] / (g0[rows, best][found] - g1[rows, best][found])
    hit = relative0[rows, best] + weight[:, None] * (relative1[rows, best] - relative0[rows, best])
    offsets = np.einsum("kd,kd->k", hit, normals)
    offsets[~found] = np.nan
    return offsets


def _base_frame(base):
    points = np.column_stack((base.s, base.t))
    tangents = np.column_stack((np.cos(base.phi), np.sin(base.phi)))
    normals = np.column_stack(base.normal)
    return points, tangents, normals


def _monotone_tail(a, b):
    """The trailing part of (a, b) along which a increases"""

    falling = np.nonzero(np.diff(a) <= 0)[0]
    start = falling[-1] + 1 if falling.size else 0
    return a[start:], b[start:]


def tip_cone_graph(tip, frame):
    """The tip graph written over the cone line: (a, b) along its graphical tail"""

    s_bar, t_bar = tip.graph().position()
    a, b = frame.from_st(s_bar, t_bar)
    return _monotone_tail(a, b)


def tip_cone_spline(tip, frame):
    """Cubic spline b(a) through the tip's graphical tail, with the a range it covers"""

    a, b = tip_cone_graph(tip, frame)
    if a.size < 4:
        raise GraphConditionError("Tip chart has {} graphical cells over the cone".format(a.size), module="flowsim")
    return CubicSpline(a, b), float(a[0]), float(a[-1])


def tip_to_outer(tip, y, s, sigma_l, frame):
    """Outer profile values at type I radii y read off the tip chart"""

    scale = math.exp(sigma_l * s)
    spline, a_lo, a_hi = tip_cone_spline(tip, frame)
    z = scale * np.asarray(y, dtype=float)
    if np.any(z < a_lo) or np.any(z > a_hi):
        raise NumericalError("Tip chart covers z in [{:.4g}, {:.4g}], asked for [{:.4g}, {:.4g}]".format(
            a_lo, a_hi, float(np.min(z)), float(np.max(z))), module="flowsim")
    return spline(z) / scale


def outer_polyline(outer, s, sigma_l, frame, z_range=None):
    """
    Outer graph points in the type II (s, t) quadrant. Inside z_range the outer spline is
    resampled POLYLINE_REFINE times finer than the grid.
    """
    scale = math.exp(sigma_l * s)
    if z_range is None:
        a, b = scale * outer.y, scale * outer.v
    else:
        y_lo = max(z_range[0] / scale, outer.y[0])
        y_hi = min(z_range[1] / scale, outer.y[-1])
        if not y_hi > y_lo:
            return np.empty((0, 2))
        count = int(np.count_nonzero((outer.y >= y_lo) & (outer.y <= y_hi)))
        y = np.exp(np.linspace(math.log(y_lo), math.log(y_hi), max(POLYLINE_REFINE * count, MIN_POLYLINE_POINTS)))
        a, b = scale * y, scale * outer.spline()(np.log(y))
    s_pts, t_pts = frame.to_st(a, b)
    return np.column_stack((s_pts, t_pts))


def outer_to_tip(outer, tip, s, sigma_l, frame, cells=None):
    """Tip values at the given cells (default: the Dirichlet cell) read off the outer chart"""

    if cells is None:
        cells = np.array([tip.w.size - 1])
    points, tangents, normals = _base_frame(tip.base)
    radius = tip.cell_radius[cells]
    target = outer_polyline(outer, s, sigma_l, frame, (0.5 * radius.min(), 2.0 * radius.max()))
    if target.shape[0] < 2:
        raise NumericalError("Outer chart does not reach the tip boundary", module="flowsim")
    offsets = offsets_along_normals(points[cells], tangents[cells], normals[cells], target)
    if np.any(np.isnan(offsets)):
        raise GraphConditionError("Outer graph is not a graph over the leaf near r={:.4g}".format(
            float(radius.max())), module="flowsim")
    return offsets


def blend_window(beta, radius):
    """
    z interval over which the charts hand over: from 2 beta up to beta^2, kept inside the tip
    chart's radius.
    """
    start = 2.0 * beta
    end = min(max(min(beta ** 2, 0.5 * radius), 1.5 * start), 0.9 * radius)
    if not end > start:
        raise ConfigError("Tip radius {:.4g} leaves no overlap beyond 2 beta = {:.4g}".format(radius, start),
                          module="flowsim")
    return start, end


def synchronize(state):
    """
    Blend the two charts over the overlap with a partition of unity and write the blend back
    into both: the tip chart up to 2 beta, the outer chart beyond the end of the blend window.
    """
    if state.tip is None:
        return state
    outer, tip, frame = state.outer, state.tip, state.frame
    scale = math.exp(state.sigma_l * state.s)
    start, end = blend_window(state.params.beta, tip.radius)
    spline, a_lo, _ = tip_cone_spline(tip, frame)

    z = scale * outer.y
    near = z <= end
    if np.any(z[near] < a_lo):
        raise GraphConditionError("Outer chart starts at z={:.4g}, inside the tip's non-graphical part "
                                  "ending at {:.4g}".format(float(z[0]), a_lo), module="flowsim")
    v = outer.v.copy()
    chi = smooth_cutoff((z[near] - start) / (end - start))
    v[near] = (1.0 - chi) * spline(z[near]) / scale + chi * v[near]

    w = tip.w.copy()
    cell_a, _ = frame.from_st(tip.base.s, tip.base.t)
    far = cell_a >= start
    if np.any(far):
        points, tangents, normals = _base_frame(tip.base)
        target = outer_polyline(outer, state.s, state.sigma_l, frame, (0.5 * start, 2.0 * tip.radius))
        offsets = offsets_along_normals(points[far], tangents[far], normals[far], target)
        if np.any(np.isnan(offsets)):
            raise GraphConditionError("Outer graph is not a graph over the leaf beyond z={:.4g}".format(start),
                                      module="flowsim")
        chi = smooth_cutoff((cell_a[far] - start) / (end - start))
        w[far] = (1.0 - chi) * w[far] + chi * offsets
    return state.evolved(state.s, outer.with_values(v), tip.with_values(w))


class FlowState(object):

    """
    Value snapshot of an equivariant flow at type I time s: the outer chart over the cone
    (type I frame) and, when present, the tip chart over the kappa omega_1 leaf (type II frame).
    """

    def __init__(self, s, outer, tip, kappa, params, spectrum, cone, far_field, a=(), lower_boundary=None):
        if cone.factors is None:
            raise ConfigError("The equivariant flow needs a quadratic cone", module="flowsim")
        self.s = float(s)
        self.outer = outer
        self.tip = tip
        self.kappa = float(kappa)
        self.params = params
        self.spectrum = spectrum
        self.cone = cone
        self.far_field = far_field
        self.a = np.asarray(a, dtype=float)
        self.lower_boundary = lower_boundary or far_field
        self.frame = ConeFrame(*cone.factors)

    @property
    def t(self):
        return t_of_s(self.s)

    @property
    def sigma_l(self):
        return self.spectrum.sigma_l

    @property
    def tau(self):
        return tau_of_s(self.s, self.sigma_l)

    @property
    def omega1(self):
        return self.cone.omega1

    @property
    def outer_u(self):
        """Physical (x, u) of the outer chart"""

        scale = math.exp(-self.s / 2.0)
        return scale * self.outer.y, scale * self.outer.v

    def evolved(self, s, outer, tip):
        return FlowState(s, outer, tip, self.kappa, self.params, self.spectrum, self.cone, self.far_field, self.a,
                         self.lower_boundary)

    def to_dict(self):
        data = OrderedDict()
        data["s"] = self.s
        data["t"] = self.t
        data["kappa"] = self.kappa
        data["a"] = self.a.tolist()
        data["params"] = self.params.to_dict()
        data["y"] = self.outer.y.tolist()
        data["v"] = self.outer.v.tolist()
        if self.tip is not None:
            data["tip"] = OrderedDict([("leaf_kappa", self.tip.leaf.kappa), ("radius", self.tip.radius),
                                       ("w", self.tip.w.tolist())])
        return data

    @classmethod
    def from_dict(cls, data, params, spectrum, cone, unit_leaf=None):
        """Rebuild a stored state; the tip chart needs the kappa = 1 leaf it was built over"""

        far_field = initial_far_field(params, spectrum, cone, data.get("a", ()))
        outer = OuterChart(np.array(data["y"]), np.array(data["v"]))
        tip = None
        if data.get("tip") is not None:
            if unit_leaf is None:
                raise ConfigError("Restoring a tip chart needs the foliation leaf", module="flowsim")
            tip_data = data["tip"]
            leaf = rescale_leaf(unit_leaf, tip_data["leaf_kappa"] / unit_leaf.kappa)
            tip = TipChart.over_leaf(leaf, tip_data["radius"], len(tip_data["w"]), np.array(tip_data["w"]))
        return cls(data["s"], outer, tip, data["kappa"], params, spectrum, cone, far_field, data.get("a", ()))

    def __repr__(self):
        return "<{self.__class__.__name__}: s={self.s:.4f} tip={tip}>".format(self=self, tip=self.tip is not None)


def initial_far_field(params, spectrum, cone, a):
    modes = tuning_modes(spectrum)
    a = np.asarray(a, dtype=float)
    if a.size != len(modes):
        raise ConfigError("Expected {} tuning coefficients, got {}".format(len(modes), a.size), module="flowsim")
    terms = [(1.0, spectrum.mode_l)] + list(zip(a, modes))
    return LinearModes(params.s0, spectrum.lambda_l, cone.omega1, terms)


def outer_bounds(params, s):
    return params.beta * math.exp(-params.sigma_l * s) / 2.0, params.rho * math.exp(s / 2.0)


def build_initial_state(params, spectrum, leaf_family, a, cone, settings=None):
    """
    Data at s0: e^{-lambda_l s0} omega_1 (y^alpha P_l + sum a_k y^alpha P_k) in the intermediate
    region, the leaf S_kappa (kappa = 1 + sum a_k) at the tip, glued with eta over z in
    [beta, 2 beta] in the type II frame.
    """
    settings = settings or FlowSettings(s0=params.s0)
    a = np.asarray(a, dtype=float)
    ball = ball_radius(params, settings)
    if a.size and np.linalg.norm(a) >= ball:
        raise DomainError("|a| = {:.3g} outside the tuning ball of radius {:.3g}".format(np.linalg.norm(a), ball),
                          module="flowsim")
    far_field = initial_far_field(params, spectrum, cone, a)
    s0, sigma_l, beta = params.s0, spectrum.sigma_l, params.beta
    kappa = 1.0 + float(np.sum(a))
    if kappa <= 0:
        raise DomainError("Tip scale kappa = {} must be positive".format(kappa), module="flowsim")
    leaf = rescale_leaf(leaf_family, kappa * cone.omega1 / leaf_family.kappa)
    if beta / 2.0 < leaf.R_s:
        raise ConfigError("beta/2 = {:.4g} is inside the non-graphical tip of radius R_s = {:.4g}".format(
            beta / 2.0, leaf.R_s), module="flowsim")
    frame = ConeFrame(*cone.factors)
    scale = math.exp(sigma_l * s0)
    leaf_a, leaf_b = _monotone_tail(*frame.from_st(leaf.curve.s, leaf.curve.t))

    def glued(z):
        z = np.asarray(z, dtype=float)
        chi = smooth_cutoff((z - beta) / beta)
        return (1.0 - chi) * np.interp(z, leaf_a, leaf_b) + chi * scale * far_field(z / scale, s0)

    lo, hi = outer_bounds(params, s0)
    outer = OuterChart.over(lo, hi, settings.outer_points, lambda y: glued(scale * y) / scale)

    tip = TipChart.over_leaf(leaf, 2.0 * beta ** 2, settings.tip_points)
    w = np.zeros(tip.w.size)
    outside = tip.cell_radius > beta
    if np.any(outside):
        z = np.exp(np.linspace(math.log(beta / 2.0), math.log(2.5 * beta ** 2), 8 * settings.tip_points))
        target = np.column_stack(frame.to_st(z, glued(z)))
        points, tangents, normals = _base_frame(tip.base)
        w[outside] = offsets_along_normals(points[outside], tangents[outside], normals[outside], target)
        if np.any(np.isnan(w)):
            raise GraphConditionError("Initial data is not a graph over the leaf", module="flowsim")
    state = synchronize(FlowState(s0, outer, tip.with_values(w), kappa, params, spectrum, cone, far_field, a))

    report = admissibility(state, "x")
    if not report.admissible:
        raise AdmissibilityError("Initial data violates admissibility at {} (ratio {:.3g}); raise Lambda".format(
            report.violations[0][:2], report.worst_ratio), module="flowsim", violations=report.violations)
    LOG.info("Initial state at s0=%.4g: kappa=%.6g, |a|=%.3g, tip radius %.4g", s0, kappa,
             float(np.linalg.norm(a)) if a.size else 0.0, tip.radius)
    return state


def ball_radius(params, settings=None):
    """beta^{-alpha_tilde}, unless the settings override it"""

    if settings is not None and settings.ball_radius is not None:
        return float(settings.ball_radius)
    return params.beta ** (-params.alpha_tilde)


def _solve_tridiagonal(lower, diagonal, upper, rhs):
    bands = np.zeros((3, diagonal.size))
    bands[0, 1:] = upper[:-1]
    bands[1] = diagonal
    bands[2, :-1] = lower[1:]
    try:
        solution = solve_banded((1, 1), bands, rhs)
    except (LinAlgError, ValueError) as exc:
        raise LinearSolveError("Implicit step failed: {}".format(exc), module="flowsim")
    if not np.all(np.isfinite(solution)):
        raise LinearSolveError("Implicit step produced non-finite values", module="flowsim")
    return solution


def outer_operator_bands(y, h, n, mu1):
    """
    L_C = [v_xx + (n-2) v_x - mu_1 v]/y^2 + (v - v_x)/2 in x = ln y; the drift term -v_x/2 is
    upwinded.
    """
    inv = 1.0 / y ** 2
    lower = inv / h ** 2 - (n - 2) * inv / (2.0 * h) + 0.5 / h
    upper = inv / h ** 2 + (n - 2) * inv / (2.0 * h)
    diagonal = -2.0 * inv / h ** 2 - mu1 * inv + 0.5 - 0.5 / h
    return lower, diagonal, upper


def advance_outer(outer, dt, lo_value, hi_value, cone):
    """
    One implicit Euler step for L_C with E(v) explicit and Dirichlet values at both ends.
    """
    n, mu1 = cone.n, cone.mu1
    nonlinear = error_term(outer.graph(cone.factors))
    lower, diagonal, upper = outer_operator_bands(outer.y, outer.h, n, mu1)
    inner = slice(1, -1)
    rhs = outer.v[inner] + dt * nonlinear[inner]
    rhs[0] += dt * lower[1] * lo_value
    rhs[-1] += dt * upper[-2] * hi_value
    solution = _solve_tridiagonal(-dt * lower[inner], 1.0 - dt * diagonal[inner], -dt * upper[inner], rhs)
    return outer.with_values(np.concatenate(([lo_value], solution, [hi_value])))


def advance_tip(tip, s, dt, sigma_l, boundary_value):
    """
    One IMEX step of w_s = (sigma + 1/2)(<S, nu_hat>/V + w) + 2 sigma tau (J w + E_S(w)) with
    J = Delta + |A|^2 implicit.
    """
    stretch = math.exp(2.0 * sigma_l * s)
    growth = sigma_l + 0.5
    chart = tip.graph()
    v = normal_product(chart)
    phi_bar = chart.graph_angle()
    support = (tip.base.s * np.sin(phi_bar) - tip.base.t * np.cos(phi_bar)) / v
    explicit = growth * support + stretch * error_term(chart)

    lower, diagonal, upper = tip.laplacian_bands()
    diagonal = diagonal + tip.base.A2
    inner = slice(0, -1)
    rhs = tip.w[inner] + dt * explicit[inner]
    rhs[-1] += dt * stretch * upper[-2] * boundary_value
    solution = _solve_tridiagonal(-dt * stretch * lower[inner], 1.0 - dt * (stretch * diagonal[inner] + growth),
                                  -dt * stretch * upper[inner], rhs)
    return tip.with_values(np.concatenate((solution, [boundary_value])))


def cfl_limit(state):
    """0.4 h^2 / max|1/g - 1| over both charts, the tip side scaled by 2 sigma tau"""

    limit = np.inf
    diffusivity = np.max(error_term_diffusivity(state.outer.graph(state.cone.factors)))
    if diffusivity > 0:
        spacing = state.outer.y * state.outer.h
        limit = CFL_FACTOR * float(np.min(spacing ** 2)) / diffusivity
    if state.tip is not None:
        diffusivity = np.max(error_term_diffusivity(state.tip.graph())) * math.exp(2.0 * state.sigma_l * state.s)
        if diffusivity > 0:
            limit = min(limit, CFL_FACTOR * state.tip.h ** 2 / diffusivity)
    return limit


def overlap_mismatch(state):
    """
    Largest difference of the two charts over the cone at outer grid points with z in
    [beta, 0.9 R_tip], relative to the size of the graph there.
    """
    if state.tip is None:
        return 0.0
    scale = math.exp(state.sigma_l * state.s)
    spline, a_lo, a_hi = tip_cone_spline(state.tip, state.frame)
    z = scale * state.outer.y
    keep = (z >= max(state.params.beta, a_lo)) & (z <= min(0.9 * state.tip.radius, a_hi))
    if not np.any(keep):
        return 0.0
    outer_b = scale * state.outer.v[keep]
    size = max(float(np.max(np.abs(outer_b))), np.finfo(float).tiny)
    return float(np.max(np.abs(outer_b - spline(z[keep])))) / size


def _boundary_values(state, tip, s_next):
    y_lo, y_hi = state.outer.y[0], state.outer.y[-1]
    if tip is None:
        lo = float(state.lower_boundary(np.array([y_lo]), s_next)[0])
    else:
        lo = float(tip_to_outer(tip, np.array([y_lo]), s_next, state.sigma_l, state.frame)[0])
    hi = float(state.far_field(np.array([y_hi]), s_next)[0])
    return lo, hi


def _raw_step(state, dt):
    s_next = state.s + dt
    tip = state.tip
    if tip is not None:
        boundary = float(outer_to_tip(state.outer, tip, state.s, state.sigma_l, state.frame)[0])
        tip = advance_tip(tip, state.s, dt, state.sigma_l, boundary)
    lo, hi = _boundary_values(state, tip, s_next)
    outer = advance_outer(state.outer, dt, lo, hi, state.cone)
    return state.evolved(s_next, outer, tip)


def step(state, dt, overlap_tol=1e-4):
    """
    Advance the tip chart with its outer value from the outer chart, then the outer chart with
    its inner value from the new tip chart, and blend the two over the overlap. A mismatch above
    overlap_tol before blending triggers one regrid with two half steps before giving up.
    """
    if not dt > 0:
        raise ConfigError("Step size must be positive, got {}".format(dt), module="flowsim")
    limit = cfl_limit(state)
    if dt > limit:
        raise NumericalError("dt={:.3g} exceeds the stability bound {:.3g}".format(dt, limit), module="flowsim")
    new = _raw_step(state, dt)
    mismatch = overlap_mismatch(new)
    if mismatch <= overlap_tol:
        return synchronize(new)
    LOG.debug("Overlap mismatch %.3g at s=%.5f, regridding and retrying", mismatch, state.s)
    retry = regrid(state)
    retry = _raw_step(synchronize(_raw_step(retry, dt / 2.0)), dt / 2.0)
    mismatch = overlap_mismatch(retry)
    if mismatch > overlap_tol:
        raise NumericalError("Charts disagree by {:.3g} > {:.3g} at s={:.5f} after regridding".format(
            mismatch, overlap_tol, retry.s), module="flowsim")
    return synchronize(retry)


def regrid(state, points=None):
    """
    Move the outer grid to [beta e^{-sigma s}/2, rho e^{s/2}]: monotone cubic interpolation
    inside the old grid, the tip chart below it and the far field above it.
    """
    outer = state.outer
    points = points or outer.y.size
    lo, hi = outer_bounds(state.params, state.s)
    y = log_grid(lo, hi, points)
    v = np.empty_like(y)
    inside = (y >= outer.y[0]) & (y <= outer.y[-1])
    v[inside] = outer.interpolant()(np.log(y[inside]))
    below = y < outer.y[0]
    if np.any(below) and state.tip is None:
        v[below] = state.lower_boundary(y[below], state.s)
    elif np.any(below):
        v[below] = tip_to_outer(state.tip, y[below], state.s, state.sigma_l, state.frame)
    above = y > outer.y[-1]
    if np.any(above):
        v[above] = state.far_field(y[above], state.s)
    return state.evolved(state.s, OuterChart(y, v), state.tip)


def simulate(state, s_end, settings, observer=None):
    """
    Step to s_end, regridding every regrid_interval. Returns (final state, snapshots) with a
    snapshot every snapshot_interval; `observer` is called with each snapshot.
    """
    history = [state]
    if observer is not None:
        observer(state)
    next_regrid = state.s + settings.regrid_interval
    next_snapshot = state.s + settings.snapshot_interval
    steps = 0
    while state.s < s_end - 1e-12:
        dt = min(settings.dt, cfl_limit(state), s_end - state.s, next_snapshot - state.s)
        state = step(state, dt, settings.overlap_tol)
        steps += 1
        if state.s >= next_regrid - 1e-12:
            state = regrid(state)
            next_regrid += settings.regrid_interval
        if state.s >= next_snapshot - 1e-12 or state.s >= s_end - 1e-12:
            history.append(state)
            next_snapshot += settings.snapshot_interval
            if observer is not None:
                observer(state)
    LOG.debug("Simulated to s=%.5f in %d steps", state.s, steps)
    return state, history


class RescaledView(object):

    """
    Type I (y, v) at time s or type II (z, w) at time tau of a flow state; pure reindexing.
    """

    def __init__(self, kind, scale_time, coordinates, values, s, sigma_l, tip_values=None):
        self.kind = kind
        self.scale_time = float(scale_time)
        self.coordinates = coordinates
        self.values = values
        self.s = float(s)
        self.sigma_l = float(sigma_l)
        self.tip_values = tip_values

    def _factor(self):
        return math.exp(-self.s / 2.0) if self.kind == "typeI" else math.exp(-(self.sigma_l + 0.5) * self.s)

    def to_physical(self):
        """(t, x, u)"""

        factor = self._factor()
        return t_of_s(self.s), factor * self.coordinates, factor * self.values


def rescale(state, kind):
    if kind == "typeI":
        return RescaledView(kind, state.s, state.outer.y.copy(), state.outer.v.copy(), state.s, state.sigma_l)
    if kind == "typeII":
        scale = math.exp(state.sigma_l * state.s)
        tip_values = None if state.tip is None else (state.tip.sigma.copy(), state.tip.w.copy())
        return RescaledView(kind, state.tau, scale * state.outer.y, scale * state.outer.v, state.s, state.sigma_l,
                            tip_values)
    raise DomainError("Unknown rescaling {!r}; use typeI or typeII".format(kind), module="flowsim")


def _cut_samples(state):
    outer = state.outer
    cut = cutoff_profile(outer.y, state.s, state.params.beta, state.params.rho, state.sigma_l)
    return SampledRadial(outer.y, cut * outer.v / state.omega1, compact=True)


def mode_projection_map(state, spectrum=None):
    """Phi_k = c_k e^{lambda_l s} <cut v, phi_k>_W over the tuning modes"""

    spectrum = spectrum or state.spectrum
    samples = _cut_samples(state)
    growth = math.exp(spectrum.lambda_l * state.s)
    return np.array([mode.c_norm * growth * project(samples, mode, None) for mode in tuning_modes(spectrum)])


def measure_kappa(state):
    """c_l e^{lambda_l s} <cut v, phi_l>_W"""

    mode = state.spectrum.mode_l
    return mode.c_norm * math.exp(state.spectrum.lambda_l * state.s) * project(_cut_samples(state), mode, None)


AdmissibilityReport = namedtuple("AdmissibilityReport", "frame admissible worst_ratio violations")


def admissibility(state, frame="x"):
    """
    Weighted C^2 bound of the outer chart on [beta |t|^{1/2+sigma}, rho] in the x, y or z
    frame. Violations are (coordinate, order, ratio) triples.
    """
    params = state.params
    s, sigma_l = state.s, state.sigma_l
    alpha, lambda_l, i_1 = params.alpha, params.lambda_l, params.i_1
    y = state.outer.y
    dx, dxx = state.outer.log_derivatives()
    scaled = np.vstack((state.outer.v, dx, dxx - dx))
    keep = (y >= params.beta * math.exp(-sigma_l * s) * (1 - 1e-12)) & (y <= params.rho * math.exp(s / 2.0))
    if frame == "y":
        coordinate = y
        values = scaled
        bound = params.Lambda * math.exp(-lambda_l * s) * (y ** alpha + y ** (2 * lambda_l + 1))
    elif frame == "x":
        coordinate = math.exp(-s / 2.0) * y
        values = math.exp(-s / 2.0) * scaled
        bound = params.Lambda * (math.exp(-s) ** i_1 * coordinate ** alpha + coordinate ** (2 * lambda_l + 1))
    elif frame == "z":
        coordinate = math.exp(sigma_l * s) * y
        values = math.exp(sigma_l * s) * scaled
        bound = params.Lambda * (coordinate ** alpha
                                 + coordinate ** (2 * lambda_l + 1) / math.exp(2.0 * sigma_l * s) ** i_1)
    else:
        raise DomainError("Unknown frame {!r}".format(frame), module="flowsim")

    ratio = np.abs(values[:, keep]) / bound[keep]
    coordinate = coordinate[keep]
    worst = float(np.max(ratio)) if ratio.size else 0.0
    orders, points = np.nonzero(ratio >= 1.0)
    violations = [(float(coordinate[k]), int(order), float(ratio[order, k]))
                  for order, k in zip(orders[:MAX_REPORTED_VIOLATIONS], points[:MAX_REPORTED_VIOLATIONS])]
    return AdmissibilityReport(frame, not violations, worst, violations)


C2Diagnostics = namedtuple("C2Diagnostics", "height_ratio slope holds")


def c2_diagnostics(state):
    """|u| <= min{x, 1}/3 and |grad u| <= 1/3 on the outer chart; logged, never enforced"""

    x, u = state.outer_u
    dv, _ = state.outer.derivatives()
    height = float(np.max(3.0 * np.abs(u) / np.minimum(x, 1.0)))
    slope = float(np.max(np.abs(dv)))
    holds = height <= 1.0 and 3.0 * slope <= 1.0
    if holds:
        LOG.debug("C2 bounds at s=%.4f: height ratio %.3g, slope %.3g", state.s, height, slope)
    else:
        LOG.info("C2 bounds fail at s=%.4f: height ratio %.3g, slope %.3g", state.s, height, slope)
    return C2Diagnostics(height, slope, holds)


def sup_curvature(state):
    """sup |A| of the physical surface at time t"""

    if state.tip is not None:
        return math.exp((0.5 + state.sigma_l) * state.s) * float(np.max(graph_curvature_norm(state.tip.graph())))
    return math.exp(state.s / 2.0) * float(np.max(graph_curvature_norm(state.outer.graph(state.cone.factors))))


BlowupFit = namedtuple("BlowupFit", "exponent expected decades")


def blowup_exponent(history, min_decades=MIN_DECADES):
    """Log-log slope of sup |A| against |t|"""

    if not history or any(state.tip is None for state in history):
        raise DomainError("History without a tip chart has no curvature blow-up to fit", module="flowsim")
    times = np.array([-state.t for state in history])
    span = decades(times)
    if span < min_decades:
        raise FitError("History covers {:.2f} decades of |t|, need {}".format(span, min_decades), module="flowsim")
    curvature = np.array([sup_curvature(state) for state in history])
    slope, _ = fit_loglog(times, curvature)
    return BlowupFit(slope, -(0.5 + history[0].sigma_l), span)


DecayFit = namedtuple("DecayFit", "rate reference passed")


def type_one_tracking(history, annulus=(1.0, 4.0), kappa=None):
    """
    Decay rate of sup over the annulus of |v - kappa e^{-lambda_l s} omega_1 y^alpha P_l|; it
    should exceed lambda_l.
    """
    kappa = measure_kappa(history[-1]) if kappa is None else kappa
    mode = history[0].spectrum.mode_l
    lambda_l = history[0].spectrum.lambda_l
    s_values, residuals = [], []
    for state in history:
        y = state.outer.y
        keep = (y >= annulus[0]) & (y <= annulus[1])
        if not np.any(keep):
            continue
        target = kappa * math.exp(-lambda_l * state.s) * state.omega1 * y[keep] ** mode.alpha_j * mode.polynomial(
            y[keep])
        s_values.append(state.s)
        residuals.append(float(np.max(np.abs(state.outer.v[keep] - target))))
    residuals = np.array(residuals)
    usable = residuals > 0
    if usable.sum() < 2:
        raise FitError("Tracking residual vanishes or the annulus is outside the grid", module="flowsim")
    slope, _ = fit_slope(np.array(s_values)[usable], np.log(residuals[usable]))
    return DecayFit(-slope, lambda_l, -slope > lambda_l)


def type_two_decay(history):
    """Decay exponent in tau of sup |w_hat| inside radius 2 beta; compared with 0.8 varrho"""

    taus, sizes = [], []
    for state in history:
        if state.tip is None:
            continue
        inside = state.tip.cell_radius <= 2.0 * state.params.beta
        taus.append(state.tau)
        sizes.append(float(np.max(np.abs(state.tip.w[inside]))))
    slope, _ = fit_loglog(taus, sizes)
    reference = 0.8 * history[0].params.varrho
    return DecayFit(-slope, reference, -slope >= reference)


def refinement_order(coarse, medium, fine):
    """Observed order from solutions at dt, dt/2 and dt/4 sampled at the same points"""

    first = np.max(np.abs(np.asarray(coarse) - np.asarray(medium)))
    second = np.max(np.abs(np.asarray(medium) - np.asarray(fine)))
    if second == 0:
        raise FitError("Refinement differences vanish", module="flowsim")
    return float(np.log2(first / second))


TuningRecord = namedtuple("TuningRecord", "a target_time residual iterations converged")


def finite_difference_jacobian(residual, x, base, step, workers=1):
    """Forward differences, one independent evaluation per column"""

    shifted = [x + step * unit for unit in np.eye(x.size)]
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(residual, shifted))
    else:
        values = [residual(point) for point in shifted]
    return np.column_stack([(value - base) / step for value in values])


def solve_projection_root(residual, x0, ball, step, tol=1e-6, max_iter=30, workers=1):
    """
    Broyden iteration on residual(x) = 0 from a finite-difference Jacobian, halving steps that
    do not reduce |residual|. Leaving the ball of radius `ball` is an error.
    :return: (x, residual(x), iterations, converged)
    """
    x = np.array(x0, dtype=float)
    y = np.asarray(residual(x), dtype=float)
    jac = finite_difference_jacobian(residual, x, y, step, workers)
    for iteration in range(max_iter):
        norm = float(np.linalg.norm(y))
        LOG.debug("Tuning iteration %d: |Phi| = %.3e at |a| = %.3e", iteration, norm, np.linalg.norm(x))
        if norm <= tol:
            return x, y, iteration, True
        try:
            dx = np.linalg.solve(jac, -y)
        except np.linalg.LinAlgError:
            raise ConvergenceError("Projection Jacobian is singular at iteration {}".format(iteration),
                                   module="flowsim")
        for _ in range(MAX_BACKTRACKS):
            candidate = x + dx
            if np.linalg.norm(candidate) >= ball:
                raise ConvergenceError("Iterate |a| = {:.3g} left the ball of radius {:.3g}".format(
                    np.linalg.norm(candidate), ball), module="flowsim")
            y_new = np.asarray(residual(candidate), dtype=float)
            if np.all(np.isfinite(y_new)) and np.linalg.norm(y_new) < norm:
                break
            dx = dx * BACKTRACK_FACTOR
        else:
            raise ConvergenceError("Too many backtracks at iteration {}".format(iteration), module="flowsim")
        jac = jac + np.outer((y_new - y - jac.dot(dx)) / dx.dot(dx), dx)
        x, y = candidate, y_new
    converged = float(np.linalg.norm(y)) <= tol
    if not converged:
        LOG.warning("Tuning stopped after %d iterations with |Phi| = %.3e", max_iter, np.linalg.norm(y))
    return x, y, max_iter, converged


def tune(target_time, params, spectrum, leaf_family, cone, settings=None):
    """Find a with Phi(a, target_time) = 0, each evaluation being a full simulation"""

    settings = settings or FlowSettings(s0=params.s0)
    modes = tuning_modes(spectrum)
    if not modes:
        return TuningRecord(np.zeros(0), target_time, np.zeros(0), 0, True)
    if not params.t0 < target_time < 0:
        raise ConfigError("Tuning target {} must lie in (t0, 0) = ({}, 0)".format(target_time, params.t0),
                          module="flowsim")
    target_s = s_of_t(target_time)
    ball = ball_radius(params, settings)

    def residual(a):
        state = build_initial_state(params, spectrum, leaf_family, a, cone, settings)
        final, _ = simulate(state, target_s, settings)
        return mode_projection_map(final)

    a, values, iterations, converged = solve_projection_root(
        residual, np.zeros(len(modes)), ball, FD_STEP_FACTOR * ball, settings.tune_tolerance,
        settings.tune_iterations, settings.workers)
    LOG.info("Tuned a=%s in %d iterations, |Phi|=%.3e", np.array2string(a, precision=4), iterations,
             np.linalg.norm(values))
    return TuningRecord(a, target_time, values, iterations, converged)


BarrierConstants = namedtuple("BarrierConstants", "R M_l M_prime K C_prime C0_upper C0_lower sign")


def outer_barrier_constants(params, spectrum, kappa, R=None):
    """
    Constants of C0 (x^{2 lambda + 1} - C |t| x^{2 lambda - 1}) omega_1 for the profile sign*u:
    the upper barrier has C = 2 M_l, the lower one C = 0.
    """
    n, alpha, lambda_l = params.n, params.alpha, params.lambda_l
    mu1 = alpha ** 2 + (n - 2) * alpha
    M_l = (2 * lambda_l + 1) * (2 * lambda_l + n - 1) - mu1
    M_prime = (2 * lambda_l - 1) * (2 * lambda_l + n - 3) - mu1
    if R is None:
        R = math.ceil(math.sqrt(2.0 * M_l)) + 1
    if R ** 2 <= M_l / 2.0:
        raise ConfigError("Barrier radius R={} needs R^2 > M_l/2 = {}".format(R, M_l / 2.0), module="flowsim")
    coefficients = spectrum.mode_l.polynomial.coef
    i_1 = spectrum.i_1
    top = coefficients[2 * i_1]
    lower_terms = sum(abs(coefficients[2 * m]) * (4.0 * R ** 2) ** (m - i_1) for m in range(i_1))
    C_prime = LOWER_ORDER_SLACK * R ** 2 * abs(kappa) * lower_terms
    K = abs(top)
    C0_upper = (abs(kappa) * K + C_prime / R ** 2) / (1.0 - M_l / (2.0 * R ** 2))
    C0_lower = abs(kappa) * K - C_prime / R ** 2
    sign = 1.0 if kappa * top >= 0 else -1.0
    return BarrierConstants(R, M_l, M_prime, K, C_prime, C0_upper, C0_lower, sign)


def _barrier_profile(x, abs_t, C0, C, lambda_l, omega1):
    p1, p2 = 2 * lambda_l + 1, 2 * lambda_l - 1
    u = C0 * omega1 * (x ** p1 - C * abs_t * x ** p2)
    du = C0 * omega1 * (p1 * x ** (p1 - 1) - C * abs_t * p2 * x ** (p2 - 1))
    d2u = C0 * omega1 * (p1 * (p1 - 1) * x ** (p1 - 2) - C * abs_t * p2 * (p2 - 1) * x ** (p2 - 2))
    return u, du, d2u


OuterBarrierReport = namedtuple("OuterBarrierReport",
                                "R M_l M_prime C_prime C0_plus C0_minus C_plus C_minus points violations "
                                "supersolution_margin subsolution_margin ok")


def verify_outer_barriers(state, params=None, kappa=None, R=None):
    """
    u_minus <= u <= u_plus on [2R sqrt|t|, rho] and the barrier inequalities with E from the
    cone chart. Margins are normalized: the supersolution margin is
    ((d_t - L)u_plus - E(u_plus)) / (C0 C x^{2 lambda - 1} omega_1 / 4) - 1.
    """
    params = params or state.params
    kappa = measure_kappa(state) if kappa is None else kappa
    constants = outer_barrier_constants(params, state.spectrum, kappa, R)
    lambda_l, omega1, p, q = params.lambda_l, state.omega1, state.cone.factors[0], state.cone.factors[1]
    abs_t = -state.t
    x, u = state.outer_u
    keep = (x >= 2 * constants.R * math.sqrt(abs_t)) & (x <= params.rho)
    x, u = x[keep], u[keep]
    sign = constants.sign
    upper_C = 2.0 * constants.M_l

    violations = []
    super_margin = sub_margin = float("nan")
    if x.size:
        upper, du_up, d2u_up = _barrier_profile(x, abs_t, constants.C0_upper, upper_C, lambda_l, omega1)
        lower, du_lo, d2u_lo = _barrier_profile(x, abs_t, constants.C0_lower, 0.0, lambda_l, omega1)
        signed = sign * u
        bad = np.nonzero((signed > upper) | (signed < lower))[0]
        violations = [(float(x[k]), float(u[k]), float(sign * lower[k]), float(sign * upper[k]))
                      for k in bad[:MAX_REPORTED_VIOLATIONS]]

        scale = x ** (2 * lambda_l - 1) * omega1
        nonlinear = sign * error_term(cone_chart(p, q, x, sign * upper, sign * du_up, sign * d2u_up))
        heat = constants.C0_upper * ((upper_C - constants.M_l) * scale
                                     + upper_C * abs_t * constants.M_prime * scale / x ** 2)
        super_margin = float(np.min((heat - nonlinear) / (0.25 * constants.C0_upper * upper_C * scale))) - 1.0
        nonlinear = sign * error_term(cone_chart(p, q, x, sign * lower, sign * du_lo, sign * d2u_lo))
        heat = -constants.C0_lower * constants.M_l * scale
        sub_margin = float(np.min(-(heat - nonlinear) / (constants.C0_lower * constants.M_l * scale)))
        if violations:
            LOG.warning("Outer barriers violated at %d points at s=%.4f", bad.size, state.s)
    else:
        LOG.warning("Outer barrier window [2R sqrt|t|, rho] holds no grid points at s=%.4f", state.s)

    if sign > 0:
        C0_plus, C0_minus, C_plus, C_minus = constants.C0_upper, constants.C0_lower, upper_C, 0.0
    else:
        C0_plus, C0_minus, C_plus, C_minus = -constants.C0_lower, -constants.C0_upper, 0.0, upper_C
    ok = not violations and super_margin >= 0 and sub_margin >= 0
    return OuterBarrierReport(constants.R, constants.M_l, constants.M_prime, constants.C_prime, C0_plus, C0_minus,
                              C_plus, C_minus, int(x.size), violations, super_margin, sub_margin, ok)


TIP_DELTA = 1e-3
TIP_C_FACTOR = 10.0

TipSchedule = namedtuple("TipSchedule", "lambda_minus lambda_plus d0 d1 violations")


def tip_schedule(params, tau, delta=TIP_DELTA, c_beta=None):
    """lambda_-/+ = 1 -/+ beta^{-at/4}(tau/tau0)^{-varrho} with the normal shifts d0, d1"""

    c_beta = TIP_C_FACTOR * params.beta if c_beta is None else c_beta
    small = params.beta ** (-params.alpha_tilde / 4.0)
    decay = (tau / params.tau0) ** (-params.varrho)
    factor = (2.0 * params.sigma_l * tau) ** (-1.0 + params.varrho) * decay
    lambda_minus = 1.0 - small * decay
    lambda_plus = 1.0 + small * decay
    d0 = c_beta * factor
    d1 = delta * small * factor
    violations = []
    if not SCHEDULE_LAMBDA_MINUS < lambda_minus < 1.0:
        violations.append("lambda_- = {:.6g} not in (0.99, 1)".format(lambda_minus))
    if not 0 < lambda_plus - 1.0 < SCHEDULE_SMALL:
        violations.append("lambda_+ - 1 = {:.3g} not in (0, 1e-3)".format(lambda_plus - 1.0))
    if not 0 < d1 < SCHEDULE_SMALL:
        violations.append("d1 = {:.3g} not in (0, 1e-3)".format(d1))
    return TipSchedule(lambda_minus, lambda_plus, d0, d1, violations)


TipBarrierReport = namedtuple("TipBarrierReport",
                              "tau lambda_minus lambda_plus d0 d1 schedule_violations region_radius "
                              "lower_violations upper_violations chain_margin lower_below_kappa1 ok")


def _cone_offset_at(leaf, frame, z):
    a, b = _monotone_tail(*frame.from_st(leaf.curve.s, leaf.curve.t))
    return float(np.interp(z, a, b))


def _radii(radius, indices):
    return [float(radius[k]) for k in indices[:MAX_REPORTED_VIOLATIONS]]


def verify_tip_barriers(state, leaf_family, params=None, delta=TIP_DELTA, c_beta=None, strict=True):
    """
    w_minus <= w_hat <= w_plus inside radius (2 sigma tau)^{(1-theta)/2}, where w_minus is the
    profile of the leaf dilated by lambda_-^{1/(1-alpha)} and w_plus that of the leaf dilated by
    lambda_+^{1/(1-alpha)} shifted by d0 phi_1 - d1 r along the normal. Also evaluates the lower
    chain for w_plus at R_s and whether the lower barrier lies below S_{kappa_1}.
    """
    params = params or state.params
    if state.tip is None:
        raise DomainError("Tip barriers need a tip chart", module="flowsim")
    tau = state.tau
    schedule = tip_schedule(params, tau, delta, c_beta)
    if schedule.violations:
        if strict:
            raise ConfigError("Tip barrier schedule is invalid at tau={:.4g}: {}".format(
                tau, "; ".join(schedule.violations)), module="flowsim")
        LOG.warning("Tip barrier schedule is invalid at tau=%.4g: %s", tau, "; ".join(schedule.violations))

    tip = state.tip
    leaf = tip.leaf
    alpha = leaf.alpha
    region = min((2.0 * params.sigma_l * tau) ** ((1.0 - params.theta) / 2.0), 0.95 * tip.radius)
    radius = tip.cell_radius
    inside = radius <= region
    points, tangents, normals = _base_frame(tip.base)

    dilate_minus = schedule.lambda_minus ** (1.0 / (1.0 - alpha))
    dilate_plus = schedule.lambda_plus ** (1.0 / (1.0 - alpha))
    curve_points = np.column_stack((leaf.curve.s, leaf.curve.t))
    w_minus = offsets_along_normals(points, tangents, normals, dilate_minus * curve_points)

    eigen = tip_dirichlet_eigen(leaf, region)
    phi_1 = np.interp(tip.sigma, eigen.sigma, eigen.phi, right=0.0)
    shift = schedule.d0 * phi_1 - schedule.d1 * radius
    w_plus = offsets_along_normals(points, tangents, normals, dilate_plus * points + shift[:, None] * normals)

    checked = inside & np.isfinite(w_minus) & np.isfinite(w_plus)
    slack = 1e-12 * max(1.0, float(np.max(np.abs(tip.w))))
    lower_bad = np.nonzero(checked & (tip.w < w_minus - slack))[0]
    upper_bad = np.nonzero(checked & (tip.w > w_plus + slack))[0]

    support = points[:, 0] * normals[:, 0] + points[:, 1] * normals[:, 1]
    graph = checked & (radius >= leaf.R_s)
    omega1 = state.omega1
    chain_margin = float("nan")
    if np.any(graph):
        jacobi = radius[graph] ** alpha * omega1
        C0 = 1.5 * float(np.max(jacobi / support[graph]))
        lower_chain = (dilate_plus - 1.0) * leaf.R_s ** alpha * omega1 / C0 - schedule.d1 * leaf.R_s
        chain_margin = float(np.interp(leaf.R_s, radius[graph], w_plus[graph])) - lower_chain

    kappa_1 = 1.0 - params.beta ** (-params.alpha_tilde / 2.0)
    barrier_leaf = rescale_leaf(leaf, schedule.lambda_minus)
    kappa_1_leaf = rescale_leaf(leaf_family, kappa_1 * omega1 / leaf_family.kappa)
    lower_below = _cone_offset_at(barrier_leaf, state.frame, params.beta) <= _cone_offset_at(
        kappa_1_leaf, state.frame, params.beta)

    ok = (not schedule.violations and not lower_bad.size and not upper_bad.size
          and not chain_margin < 0)
    if lower_bad.size or upper_bad.size:
        LOG.warning("Tip barriers violated at s=%.4f: %d below, %d above", state.s, lower_bad.size, upper_bad.size)
    return TipBarrierReport(tau, schedule.lambda_minus, schedule.lambda_plus, schedule.d0, schedule.d1,
                            schedule.violations, region, _radii(radius, lower_bad), _radii(radius, upper_bad),
                            chain_margin, lower_below, ok)


def snapshot_record(state):
    """One row of the flow table: clocks, curvature, projections, barrier and admissibility flags"""

    record = OrderedDict()
    record["t"] = state.t
    record["s"] = state.s
    record["tau"] = state.tau
    record["sup_A"] = sup_curvature(state)
    record["kappa"] = measure_kappa(state)
    record["phi"] = mode_projection_map(state).tolist()
    barriers = verify_outer_barriers(state, kappa=record["kappa"])
    record["outer_barrier_margin"] = barriers.supersolution_margin
    record["outer_barrier_ok"] = barriers.ok
    record["admissible"] = admissibility(state, "x").admissible
    c2_diagnostics(state)
    return record
