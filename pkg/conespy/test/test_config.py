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
import os
import shutil
import tempfile
from unittest import TestCase

from ..config import FLOW_BETA, RunConfig, load_document, overlay, sweep_entries
from ..exceptions import ConfigError

SIMONS = {"p": 3, "q": 3}


def document(**fields):
    data = {"command": "spectrum", "cone": SIMONS, "output_dir": "out"}
    data.update(fields)
    return data


class RunConfigTest(TestCase):

    def assertConfigError(self, data, message):
        with self.assertRaises(ConfigError) as caught:
            RunConfig.from_dict(data)
        self.assertIn(message, str(caught.exception))

    def test_defaults(self):
        config = RunConfig.from_dict(document())
        self.assertEqual(config.seed, 0)
        self.assertEqual(config.workers, 1)
        self.assertEqual(config.spectrum["cutoff"], 3.0)
        self.assertEqual(config.spectrum["order"], 80)
        self.assertEqual(config.foliation["s0"], [0.5, 1.0, 2.0])
        self.assertIs(config.params["strict"], False)
        self.assertEqual(config.cone_spec().n, 7)
        self.assertEqual(list(config.to_dict())[:5], ["command", "cone", "output_dir", "seed", "workers"])

    def test_null_seed_and_workers(self):
        config = RunConfig.from_dict(document(seed=None, workers=None))
        self.assertEqual((config.seed, config.workers), (0, 1))

    def test_required_fields(self):
        self.assertConfigError({}, "command is required")
        self.assertConfigError(document(command="plot"), "command must be one of")
        self.assertConfigError({"command": "spectrum", "cone": SIMONS}, "output_dir is required")
        self.assertConfigError({"command": "flow", "output_dir": "out"}, "cone is required")
        self.assertConfigError({"command": "verify", "output_dir": "out"}, "verify.run_dir is required")
        self.assertConfigError(document(cone=[3, 3]), "cone must be an object")
        self.assertConfigError([], "must be an object")

    def test_dotted_paths(self):
        self.assertConfigError(document(spectrum={"order": 1}), "spectrum.order")
        self.assertConfigError(document(spectrum={"order": 2.5}), "spectrum.order must be an integer")
        self.assertConfigError(document(spectrum={"cutof": 3.0}), "spectrum.cutof is not a known field")
        self.assertConfigError(document(foliation={"s0": []}), "foliation.s0")
        self.assertConfigError(document(foliation={"s0": [1.0, -1.0]}), "foliation.s0[1]")
        self.assertConfigError(document(foliation={"s0": [1.0, "x"]}), "foliation.s0[1] must be a number")
        self.assertConfigError(document(params={"beta": 0.0}), "params.beta must be positive")
        self.assertConfigError(document(params={"strict": 1}), "params.strict must be true or false")
        self.assertConfigError(document(params=[1]), "params must be an object")
        self.assertConfigError(document(seed=-1), "seed must be nonnegative")
        self.assertConfigError(document(workers=0), "workers must be positive")
        self.assertConfigError(document(colour="red"), "colour is not a known field")

    def test_flow_settings(self):
        config = RunConfig.from_dict(document(command="flow", flow={"dt": 5e-4, "tune": True, "a": [0.0, 0.0]}))
        settings = config.flow_settings()
        self.assertEqual(settings.dt, 5e-4)
        self.assertTrue(settings.tune)
        self.assertEqual(config.flow["a"], [0.0, 0.0])
        self.assertConfigError(document(command="flow", flow={"dt": -1.0}), "flow.dt must be positive")
        self.assertConfigError(document(command="flow", flow={"s_end": 1.0}), "flow.s_end")
        self.assertGreater(FLOW_BETA, 1.0)

    def test_verify_needs_no_cone(self):
        config = RunConfig.from_dict({"command": "verify", "output_dir": "out", "verify": {"run_dir": "runs/a"}})
        self.assertIsNone(config.cone)
        with self.assertRaises(ConfigError):
            config.cone_spec()


class DocumentTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def write(self, name, text):
        path = os.path.join(self.tmp, name)
        with open(path, "w") as f:
            f.write(text)
        return path

    def test_load(self):
        path = self.write("good.json", json.dumps(document()))
        self.assertEqual(load_document(path)["command"], "spectrum")
        with self.assertRaises(ConfigError):
            load_document(self.write("bad.json", "{"))
        with self.assertRaises(ConfigError):
            load_document(self.write("list.json", "[]"))
        with self.assertRaises(ConfigError):
            load_document(os.path.join(self.tmp, "missing.json"))

    def test_overlay(self):
        merged = overlay(document(), output_dir="elsewhere", seed=None, workers=4)
        self.assertEqual(merged["output_dir"], "elsewhere")
        self.assertEqual(merged["workers"], 4)
        self.assertNotIn("seed", merged)

    def test_sweep_entries(self):
        data = document(spectrum={"cutoff": 3.0, "order": 40},
                        runs=[{"spectrum": {"order": 60}}, {"command": "check-params", "output_dir": "mine"}])
        entries = sweep_entries(data, "sweep")
        self.assertEqual(entries[0]["output_dir"], os.path.join("sweep", "run-000"))
        self.assertEqual(entries[0]["spectrum"], {"cutoff": 3.0, "order": 60})
        self.assertEqual(entries[1]["command"], "check-params")
        self.assertEqual(entries[1]["output_dir"], "mine")
        self.assertEqual(data["spectrum"]["order"], 40)
        self.assertNotIn("runs", entries[0])

        with self.assertRaises(ConfigError):
            sweep_entries(document(runs=[]))
        with self.assertRaises(ConfigError):
            sweep_entries(document(runs=[{}]))
        with self.assertRaises(ConfigError):
            sweep_entries(document(runs=["spectrum"]), "sweep")
