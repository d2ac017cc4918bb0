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
import numpy as np

from .exceptions import FitError


def log_grid(lo, hi, count):
    """Log-uniform grid with `count` points on [lo, hi]"""

    if lo <= 0 or hi <= lo:
        raise ValueError("Log grid needs 0 < lo < hi, got [{}, {}]".format(lo, hi))
    return np.exp(np.linspace(np.log(lo), np.log(hi), int(count)))


def fit_slope(x, y):
    """
    Least-squares line through (x, y).
    :return: (slope, intercept)
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.size < 2:
        raise FitError("A slope fit needs at least two points, got {}".format(x.size), module="utils")
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(intercept)


def fit_loglog(x, y, min_points=2):
    """Slope and prefactor of y ~ c x^k from positive samples"""

    x = np.asarray(x, dtype=float)
    y = np.abs(np.asarray(y, dtype=float))
    keep = (x > 0) & (y > 0) & np.isfinite(y)
    if keep.sum() < min_points:
        raise FitError("Only {} usable samples for a log-log fit, need {}".format(keep.sum(), min_points),
                       module="utils")
    slope, intercept = fit_slope(np.log(x[keep]), np.log(y[keep]))
    return slope, float(np.exp(intercept))


def decades(values):
    values = np.abs(np.asarray(values, dtype=float))
    values = values[values > 0]
    if values.size < 2:
        return 0.0
    return float(np.log10(values.max() / values.min()))


def _transition(x):
    out = np.zeros_like(x)
    positive = x > 0
    out[positive] = np.exp(-1.0 / x[positive])
    return out


def smooth_cutoff(x):
    """
    Smooth nondecreasing eta with eta = 0 on (-inf, 0] and eta = 1 on [1, inf).
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    x = np.atleast_1d(x)
    low = _transition(x)
    high = _transition(1.0 - x)
    res = low / (low + high)
    return float(res[0]) if scalar else res


def bump(y, center, width):
    """Compactly supported smooth bump exp(-1/(1-z^2)) with z = (y-center)/width"""

    y = np.asarray(y, dtype=float)
    z = (y - center) / width
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    out[inside] = np.exp(-1.0 / (1.0 - z[inside] ** 2))
    return out


def bump_derivative(y, center, width):
    y = np.asarray(y, dtype=float)
    z = (y - center) / width
    out = np.zeros_like(z)
    inside = np.abs(z) < 1
    zi = z[inside]
    out[inside] = np.exp(-1.0 / (1.0 - zi ** 2)) * (-2.0 * zi / (1.0 - zi ** 2) ** 2) / width
    return out
