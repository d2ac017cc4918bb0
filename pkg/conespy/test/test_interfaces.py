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
from collections import OrderedDict
from unittest import TestCase

import mock
import numpy as np

from ..contenttypes import BaseContentType, MarginRow, SnapshotRow, SpectrumRow, SweepRow, join_floats, split_floats
from ..exceptions import ConfigError
from ..interfaces import BaseFileInterface, CsvFile, JsonFile, SvgFile, TextFile, to_json
from ..plots import curvature_figure, figure_to_svg


class FaceHolder(object):
    face = None

    def __init__(self, init_value):
        self.val = init_value
        self.last_filename = None

    def get_property(self, filename):
        self.last_filename = filename
        return self.val

    def set_property(self, filename, val):
        self.last_filename = filename
        self.val = str(val)


class ContentTypesTest(TestCase):

    def test_spectrum_row(self):
        row = SpectrumRow.from_string("2,1,-2.0,0.5,0.1767766952966369,1,1")
        self.assertEqual(row.i, 2)
        self.assertEqual(row.eigenvalue, 0.5)
        self.assertIs(row.selected, True)
        self.assertEqual(str(row), "2,1,-2.0,0.5,0.1767766952966369,1,1")
        self.assertEqual(SpectrumRow.header(), "i,j,alpha,eigenvalue,c_norm,multiplicity,selected")

    def test_floats_keep_their_bits(self):
        value = 1.0 / 3.0
        row = MarginRow("alpha: at/(1+at)", value, False)
        again = MarginRow.from_string(str(row))
        self.assertEqual(again.margin, value)
        self.assertEqual(again, row)
        self.assertNotEqual(again, MarginRow("alpha: at/(1+at)", value, True))

    def test_missing_values(self):
        row = SweepRow("run-000", "flow", "failed", 3, None, "")
        self.assertEqual(str(row), "run-000,flow,failed,3,,")
        again = SweepRow.from_string(str(row))
        self.assertIsNone(again.headline)
        self.assertEqual(again.metrics, "")

    def test_snapshot_projections(self):
        record = OrderedDict([("t", -1e-7), ("s", 16.1), ("tau", 600.0), ("sup_A", 12.5), ("kappa", 1.01),
                              ("phi", [0.25, -1e-9]), ("outer_barrier_margin", 0.1), ("outer_barrier_ok", True),
                              ("admissible", True)])
        row = SnapshotRow.from_record(record)
        self.assertEqual(row.projections, [0.25, -1e-9])
        self.assertEqual(SnapshotRow.from_string(str(row)).projections, [0.25, -1e-9])
        self.assertEqual(split_floats(join_floats(np.array([1.5, 2.0]))), [1.5, 2.0])

    def test_bad_rows(self):
        with self.assertRaises(ConfigError):
            MarginRow.from_string("a,1.0")
        with self.assertRaises(ConfigError):
            MarginRow.from_string("a,one,1")
        with self.assertRaises(ConfigError):
            MarginRow("a", 1.0)
        with self.assertRaises(ConfigError):
            str(MarginRow("a,b", 1.0, True))


class InterfacesTest(TestCase):

    def patch_face(self, **kwargs):
        patch = mock.patch.multiple(FaceHolder, **kwargs)
        patch.start()
        self.addCleanup(patch.stop)

    def test_base(self):
        self.patch_face(face=BaseFileInterface("myfile1"))
        fh = FaceHolder("23")
        self.assertEqual(fh.face, "23")
        fh.face = 44
        self.assertEqual(fh.face, "44")
        self.assertEqual(fh.last_filename, "myfile1")
        self.assertIsInstance(FaceHolder.face, BaseFileInterface)

    def test_access_modes(self):
        with self.assertRaises(RuntimeError):
            BaseFileInterface("both", readonly=True, writeonly=True)
        self.patch_face(face=TextFile("text", readonly=True))
        fh = FaceHolder("x")
        with self.assertRaises(RuntimeError):
            fh.face = "y"

    def test_json(self):
        self.patch_face(face=JsonFile("data.json"))
        fh = FaceHolder("{}")
        fh.face = {"b": np.float64(2.5), "a": np.arange(3), "c": (1, 2)}
        self.assertEqual(fh.val, to_json({"a": [0, 1, 2], "b": 2.5, "c": [1, 2]}))
        self.assertEqual(list(fh.face), ["a", "b", "c"])
        self.assertEqual(fh.face["a"], [0, 1, 2])

        fh.val = "{not json"
        with self.assertRaises(ConfigError):
            fh.face

    def test_csv(self):
        self.patch_face(face=CsvFile("margins.csv", MarginRow))
        fh = FaceHolder("")
        fh.face = [MarginRow("xi", 0.5, True), "theta,-0.25,0"]
        self.assertEqual(fh.val, "name,margin,holds\nxi,0.5,1\ntheta,-0.25,0\n")
        self.assertEqual(fh.face, [MarginRow("xi", 0.5, True), MarginRow("theta", -0.25, False)])

        fh.val = "label,margin,holds\nxi,0.5,1"
        with self.assertRaises(ConfigError):
            fh.face

    def test_csv_needs_a_content_type(self):
        with self.assertRaises(RuntimeError):
            CsvFile("table.csv", dict)
        self.assertTrue(issubclass(MarginRow, BaseContentType))

    def test_svg(self):
        self.patch_face(face=SvgFile("figure.svg"))
        rows = [SnapshotRow(-10.0 ** -k, k, 1.0, 10.0 ** (2 * k / 3.0), 1.0, 0.1, True, True, "") for k in (2, 3, 4)]
        fh = FaceHolder("")
        fh.face = curvature_figure(rows, expected=-2.0 / 3.0)
        self.assertTrue(fh.val.startswith("<?xml"))
        self.assertEqual(fh.val, figure_to_svg(curvature_figure(rows, expected=-2.0 / 3.0)))
        fh.face = "<svg/>"
        self.assertEqual(fh.val, "<svg/>")
