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
import os

from .contenttypes import CurveRow, MarginRow, OverlapRow, SnapshotRow, SpectrumRow, SweepRow
from .interfaces import CsvFile, JsonFile, SvgFile, TextFile


class RunDirectory(object):

    """
    Base run. Owns one output directory and provides means to get/set its artifacts
    """

    manifest = JsonFile("manifest.json")
    error = TextFile("error.txt")

    command = None

    def __init__(self, path):
        self.path = path

    def filepath(self, filename):
        """The full path to a file"""

        return os.path.join(self.path, filename)

    def has(self, filename):
        return os.path.isfile(self.filepath(filename))

    def get_property(self, filename):
        """Opens the file and reads the value"""

        with open(self.filepath(filename)) as f:
            return f.read().strip()

    def set_property(self, filename, value):
        """Creates the directory if needed, then writes the value"""

        if not os.path.isdir(self.path):
            os.makedirs(self.path)
        with open(self.filepath(filename), "w") as f:
            return f.write(str(value))

    def __repr__(self):
        return "<{self.__class__.__name__} {self.path}>".format(self=self)


class SpectrumRun(RunDirectory):

    """
    spectrum.csv    ordered modes below the cutoff
    spectrum.json   index bookkeeping around l
    coercivity.json seeded coercivity certificate
    overlap.csv     cut-off overlap deviation along s, when requested
    spectrum.svg
    """
    command = "spectrum"

    table = CsvFile("spectrum.csv", SpectrumRow)
    summary = JsonFile("spectrum.json")
    certificate = JsonFile("coercivity.json")
    overlap = CsvFile("overlap.csv", OverlapRow)
    figure = SvgFile("spectrum.svg")


class FoliationRun(RunDirectory):
    command = "foliation"

    leaves = CsvFile("leaves.csv", CurveRow)
    summary = JsonFile("foliation.json")
    figure = SvgFile("foliation.svg")


class ParamsRun(RunDirectory):
    command = "check-params"

    margins = CsvFile("margins.csv", MarginRow)
    report = JsonFile("params.json")


class FlowRun(RunDirectory):

    """
    snapshots.csv     one SnapshotRow per snapshot interval
    final_state.json  the last state with what is needed to rebuild it
    flow_report.json  tuning, fits and barrier reports
    """
    command = "flow"

    snapshots = CsvFile("snapshots.csv", SnapshotRow)
    final_state = JsonFile("final_state.json")
    report = JsonFile("flow_report.json")
    curvature_figure = SvgFile("curvature.svg")
    profile_figure = SvgFile("profiles.svg")


class VerifyRun(RunDirectory):
    command = "verify"

    report = JsonFile("verify.json")


class SweepRun(RunDirectory):
    command = "sweep"

    summary = CsvFile("sweep.csv", SweepRow)


RUN_TYPES = dict((run.command, run) for run in (SpectrumRun, FoliationRun, ParamsRun, FlowRun, VerifyRun))


def run_directory(command, path):
    return RUN_TYPES[command](path)
