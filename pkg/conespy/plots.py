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
import io
import math

import matplotlib
import numpy as np

matplotlib.use("Agg")
matplotlib.rcParams["svg.hashsalt"] = "conespy"

from matplotlib.figure import Figure  # noqa: E402


def figure_to_svg(figure):
    """SVG text of a figure with a fixed id salt and no date, so reruns give the same bytes"""

    buffer = io.StringIO()
    figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def spectrum_figure(spectrum):
    figure = Figure(figsize=(6.0, 4.0))
    ax = figure.add_subplot(111)
    eigenvalues = [mode.eigenvalue for mode in spectrum.modes]
    index = np.arange(1, len(eigenvalues) + 1)
    branches = sorted(set(mode.j for mode in spectrum.modes))
    for j in branches:
        keep = [k for k, mode in enumerate(spectrum.modes) if mode.j == j]
        ax.plot(index[keep], np.array(eigenvalues)[keep], "o", label="j={}".format(j))
    ax.plot([spectrum.l], [spectrum.lambda_l], "k*", markersize=12, label="l={}".format(spectrum.l))
    ax.axhline(0.0, color="grey", lw=0.5)
    ax.set_xlabel("k")
    ax.set_ylabel("lambda_k")
    ax.legend(loc="upper left")
    figure.tight_layout()
    return figure


def foliation_figure(curves, theta):
    figure = Figure(figsize=(5.0, 5.0))
    ax = figure.add_subplot(111)
    r_max = max(float(np.max(curve.radius)) for curve in curves)
    for index, curve in enumerate(curves):
        ax.plot(curve.s, curve.t, lw=1.0, label="leaf {}".format(index))
    ax.plot([0.0, r_max * math.cos(theta)], [0.0, r_max * math.sin(theta)], "k--", lw=0.8, label="cone")
    ax.set_xlabel("s")
    ax.set_ylabel("t")
    ax.set_aspect("equal")
    ax.legend(loc="upper left")
    figure.tight_layout()
    return figure


def curvature_figure(rows, expected=None):
    """sup |A| against |t| on log axes, with the expected slope through the last point"""

    figure = Figure(figsize=(6.0, 4.0))
    ax = figure.add_subplot(111)
    times = np.array([-row.t for row in rows])
    curvature = np.array([row.sup_A for row in rows])
    ax.loglog(times, curvature, "o-", ms=3, label="sup |A|")
    if expected is not None and times.size:
        ax.loglog(times, curvature[-1] * (times / times[-1]) ** expected, "k--", lw=0.8,
                  label="slope {:.4g}".format(expected))
    ax.invert_xaxis()
    ax.set_xlabel("|t|")
    ax.set_ylabel("sup |A|")
    ax.legend()
    figure.tight_layout()
    return figure


def profile_figure(views):
    """Type I profiles v(y) of several snapshots"""

    figure = Figure(figsize=(6.0, 4.0))
    ax = figure.add_subplot(111)
    for view in views:
        ax.semilogx(view.coordinates, view.values, lw=0.8, label="s={:.2f}".format(view.s))
    ax.set_xlabel("y")
    ax.set_ylabel("v")
    if views:
        ax.legend(fontsize="small")
    figure.tight_layout()
    return figure
