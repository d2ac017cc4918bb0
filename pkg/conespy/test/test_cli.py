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

import mock
from scipy.linalg import LinAlgError

from .. import cli, flowsim
from ..cli import build_parser, main, run, summary_row, sweep
from ..controllers import FlowRun, ParamsRun, SpectrumRun, SweepRun, VerifyRun
from ..exceptions import ConfigError
from ..flowsim import FlowState, OuterChart, initial_far_field, outer_bounds

SIMONS = {"p": 3, "q": 3}
CHEAP_SPECTRUM = {"basis_size": 6, "trials": 10}
FLOW_ARTIFACTS = ("snapshots.csv", "final_state.json", "flow_report.json", "curvature.svg", "profiles.svg")


def far_field_start(params, spectrum, leaf, a, cone, settings):
    """Stand-in for the glued initial data: the intermediate region only"""

    far_field = initial_far_field(params, spectrum, cone, a)
    lo, hi = outer_bounds(params, params.s0)
    outer = OuterChart.over(lo, hi, settings.outer_points, lambda y: far_field(y, params.s0))
    return FlowState(params.s0, outer, None, 1.0, params, spectrum, cone, far_field, a)


def stay(state, s_end, settings, observer=None):
    if observer is not None:
        observer(state)
    return state, [state]


class RunTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def out(self, name):
        return os.path.join(self.tmp, name)

    def test_invalid_config(self):
        result = run({})
        self.assertEqual(result.exit_code, 2)
        self.assertEqual(result.status, "invalid")
        self.assertIsNone(result.output_dir)
        self.assertIn("command is required", result.metrics["error"])

    def test_check_params_on_simons(self):
        result = run({"command": "check-params", "cone": SIMONS, "output_dir": self.out("params")})
        self.assertEqual(result.exit_code, 0)
        directory = ParamsRun(self.out("params"))
        margins = directory.margins
        self.assertEqual(margins[1].name, "alpha: (n-4+2a)/(n+4+2a)")
        self.assertAlmostEqual(margins[1].margin, -1.0 / 7.0 - 1.0 / 3.0, places=14)
        self.assertFalse(margins[1].holds)
        self.assertFalse(directory.report["alpha_condition"]["passed"])
        self.assertFalse(directory.report["bundle"]["valid"])
        manifest = directory.manifest
        self.assertEqual(manifest["status"], "ok")
        self.assertEqual(manifest["seed"], 0)
        self.assertEqual(manifest["config"]["command"], "check-params")

    def test_spectrum_on_simons(self):
        result = run({"command": "spectrum", "cone": SIMONS, "output_dir": self.out("spectrum"), "seed": 3,
                      "spectrum": CHEAP_SPECTRUM})
        self.assertEqual(result.exit_code, 0)
        self.assertEqual(result.headline, 0.5)
        directory = SpectrumRun(self.out("spectrum"))
        row = directory.table[2]
        self.assertEqual((row.i, row.j, row.alpha, row.eigenvalue, row.selected), (2, 1, -2.0, 0.5, True))
        self.assertEqual(sum(row.selected for row in directory.table), 1)
        self.assertEqual(directory.summary["lambda_l"]["value"], 0.5)
        self.assertEqual(directory.summary["lambda_l"]["module"], "spectrum")
        self.assertTrue(directory.has("spectrum.svg"))
        self.assertFalse(directory.has("overlap.csv"))

    def test_failure_is_recorded(self):
        result = run({"command": "spectrum", "cone": SIMONS, "output_dir": self.out("no-gap"),
                      "spectrum": {"cutoff": 0.5}})
        self.assertEqual(result.exit_code, 3)
        directory = SpectrumRun(self.out("no-gap"))
        self.assertIn("[spectrum]", directory.error)
        self.assertEqual(directory.manifest["status"], "failed")
        self.assertEqual(directory.manifest["exit_code"], 3)

    def test_flow_then_verify(self):
        patch = mock.patch.multiple(cli, build_initial_state=mock.Mock(side_effect=far_field_start),
                                    simulate=mock.Mock(side_effect=stay), _unit_leaf=mock.Mock(return_value=None))
        with patch:
            result = run({"command": "flow", "cone": SIMONS, "output_dir": self.out("flow"),
                          "flow": {"outer_points": 1024}})
        self.assertEqual(result.exit_code, 0)
        directory = FlowRun(self.out("flow"))
        self.assertEqual(len(directory.snapshots), 1)
        report = directory.report
        self.assertIn("error", report["blowup"])
        self.assertEqual(report["params"]["beta"], 6.0)
        self.assertEqual(report["params"]["rho"], 0.5)
        self.assertTrue(report["admissibility"]["x"]["admissible"])
        self.assertAlmostEqual(directory.final_state["s"], 16.0, places=12)
        self.assertTrue(directory.has("curvature.svg"))

        result = run({"command": "verify", "output_dir": self.out("verify"),
                      "verify": {"run_dir": self.out("flow")}})
        self.assertEqual(result.exit_code, 0)
        report = VerifyRun(self.out("verify")).report
        self.assertIsNone(report["tip_barriers"])
        self.assertEqual(report["outer_barriers"]["violations"], [])

    def test_failed_solve_exits_numerical(self):
        patch = mock.patch.multiple(cli, build_initial_state=mock.Mock(side_effect=far_field_start),
                                    _unit_leaf=mock.Mock(return_value=None))
        with patch, mock.patch.object(flowsim, "solve_banded", side_effect=LinAlgError("singular matrix")):
            result = run({"command": "flow", "cone": SIMONS, "output_dir": self.out("flow-singular"),
                          "flow": {"outer_points": 256}})
        self.assertEqual(result.exit_code, 3)
        self.assertEqual(result.status, "failed")
        directory = FlowRun(self.out("flow-singular"))
        self.assertIn("[flowsim] Implicit step failed", directory.error)
        self.assertEqual(directory.manifest["exit_code"], 3)
        self.assertEqual(len(directory.snapshots), 1)

    def test_verify_flags_inadmissible_state(self):
        source = FlowRun(self.out("flow-bad"))
        with mock.patch.multiple(cli, build_initial_state=mock.Mock(side_effect=far_field_start),
                                 simulate=mock.Mock(side_effect=stay), _unit_leaf=mock.Mock(return_value=None)):
            run({"command": "flow", "cone": SIMONS, "output_dir": source.path, "flow": {"outer_points": 256}})
        stored = source.final_state
        stored["params"]["Lambda"] = 1e-30
        source.final_state = stored

        result = run({"command": "verify", "output_dir": self.out("verify-bad"),
                      "verify": {"run_dir": source.path}})
        self.assertEqual(result.exit_code, 4)
        directory = VerifyRun(self.out("verify-bad"))
        self.assertFalse(directory.report["admissibility"]["x"]["admissible"])
        self.assertTrue(directory.has("error.txt"))

    def test_verify_needs_a_flow_run(self):
        result = run({"command": "verify", "output_dir": self.out("verify-empty"),
                      "verify": {"run_dir": self.out("nothing")}})
        self.assertEqual(result.exit_code, 2)


class RealFlowTest(TestCase):

    config = {"command": "flow", "cone": SIMONS, "seed": 1,
              "flow": {"outer_points": 512, "tip_points": 256, "s_end": 16.1, "regrid_interval": 0.05,
                       "snapshot_interval": 0.05}}

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()
        cls.runs = [run(dict(cls.config, output_dir=os.path.join(cls.tmp, name))) for name in ("first", "second")]

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def test_runs_to_the_end(self):
        for result in self.runs:
            self.assertEqual(result.exit_code, 0, result.metrics)
        directory = FlowRun(self.runs[0].output_dir)
        for name in FLOW_ARTIFACTS:
            self.assertTrue(directory.has(name), name)
        self.assertAlmostEqual(directory.final_state["s"], 16.1, places=9)
        self.assertIsNotNone(directory.final_state["tip"])
        self.assertGreaterEqual(len(directory.snapshots), 3)
        report = directory.report
        for frame in ("x", "y", "z"):
            self.assertTrue(report["admissibility"][frame]["admissible"])
        self.assertIsNotNone(report["tip_barriers"])
        self.assertIn("error", report["blowup"])

    def test_same_seed_same_bytes(self):
        first, second = [result.output_dir for result in self.runs]
        for name in FLOW_ARTIFACTS:
            with open(os.path.join(first, name), "rb") as a, open(os.path.join(second, name), "rb") as b:
                self.assertEqual(a.read(), b.read(), name)

    def test_verify_on_the_artifacts(self):
        out = os.path.join(self.tmp, "verify")
        result = run({"command": "verify", "output_dir": out, "verify": {"run_dir": self.runs[0].output_dir}})
        self.assertIn(result.exit_code, (0, 4))
        report = VerifyRun(out).report
        self.assertAlmostEqual(report["s"], 16.1, places=9)
        self.assertTrue(report["admissibility"]["x"]["admissible"])
        self.assertIsNotNone(report["tip_barriers"])
        self.assertEqual(VerifyRun(out).manifest["exit_code"], result.exit_code)


class SweepTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def configs(self, parent):
        return [{"command": "check-params", "cone": {"p": p, "q": q},
                 "output_dir": os.path.join(self.tmp, parent, "C{}{}".format(p, q))}
                for p, q in ((3, 3), (3, 4), (4, 4), (5, 5))]

    def test_duplicates_are_refused(self):
        config = self.configs("dup")[0]
        with self.assertRaises(ConfigError):
            sweep([config, dict(config)])
        self.assertFalse(os.path.exists(os.path.join(self.tmp, "dup")))

    def test_worker_count_does_not_change_rows(self):
        serial = sweep(self.configs("serial"), workers=1)
        threaded = sweep(self.configs("threaded"), workers=4, summary_dir=os.path.join(self.tmp, "threaded"))
        self.assertEqual([row.values[1:] for row in serial], [row.values[1:] for row in threaded])
        self.assertEqual([row.label for row in threaded], [config["output_dir"] for config in
                                                           self.configs("threaded")])
        self.assertEqual(SweepRun(os.path.join(self.tmp, "threaded")).summary, threaded)

    def test_summary_row(self):
        result = cli.RunResult("out", "flow", "failed", 3, None, {"error": "a, b; c", "kappa": 1.5, "ok": True})
        row = summary_row(result)
        self.assertIsNone(row.headline)
        self.assertEqual(row.metrics, "error=a  b  c;kappa=1.5;ok=1")


class MainTest(TestCase):

    @classmethod
    def setUpClass(cls):
        cls.tmp = tempfile.mkdtemp()

    @classmethod
    def tearDownClass(cls):
        shutil.rmtree(cls.tmp)

    def write(self, name, document):
        path = os.path.join(self.tmp, name)
        with open(path, "w") as f:
            json.dump(document, f)
        return path

    def test_parser(self):
        args = build_parser().parse_args(["flow", "--config", "c.json", "--out", "o", "--seed", "4", "-v"])
        self.assertEqual((args.command, args.config, args.out, args.seed, args.verbose), ("flow", "c.json", "o", 4,
                                                                                           True))

    def test_single_run(self):
        path = self.write("params.json", {"cone": SIMONS})
        out = os.path.join(self.tmp, "single")
        self.assertEqual(main(["check-params", "--config", path, "--out", out, "--seed", "7"]), 0)
        self.assertEqual(ParamsRun(out).manifest["seed"], 7)

    def test_missing_cone(self):
        self.assertEqual(main(["spectrum", "--out", os.path.join(self.tmp, "nocone")]), 2)
        self.assertEqual(main(["spectrum", "--config", os.path.join(self.tmp, "missing.json")]), 2)

    def test_sweep_document(self):
        path = self.write("sweep.json", {"cone": SIMONS, "runs": [{}, {"cone": {"p": 3, "q": 4}}]})
        out = os.path.join(self.tmp, "sweep")
        self.assertEqual(main(["check-params", "--config", path, "--out", out, "--workers", "2"]), 0)
        rows = SweepRun(out).summary
        self.assertEqual([row.command for row in rows], ["check-params", "check-params"])
        self.assertEqual(rows[0].label, os.path.join(out, "run-000"))
        self.assertTrue(ParamsRun(os.path.join(out, "run-001")).has("margins.csv"))
