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
import copy
import json
import numbers
import os
from collections import OrderedDict

from .cone import ConeSpec
from .exceptions import ConfigError
from .flowsim import FlowSettings

COMMANDS = ("spectrum", "foliation", "flow", "check-params", "verify")

NUMBER = "number"
INTEGER = "integer"
FLAG = "flag"
TEXT = "text"
NUMBERS = "numbers"

# Flow runs live at desk scale: beta and rho are far from the constants the existence argument asks for.
FLOW_BETA = 6.0
FLOW_RHO = 0.5

SECTIONS = OrderedDict([
    ("params", OrderedDict([
        ("alpha_tilde", (NUMBER, None)),
        ("xi", (NUMBER, None)),
        ("theta", (NUMBER, None)),
        ("Lambda", (NUMBER, 1e3)),
        ("beta", (NUMBER, None)),
        ("rho", (NUMBER, None)),
        ("t0", (NUMBER, None)),
        ("strict", (FLAG, False)),
    ])),
    ("spectrum", OrderedDict([
        ("cutoff", (NUMBER, 3.0)),
        ("order", (INTEGER, 80)),
        ("l", (INTEGER, None)),
        ("basis_size", (INTEGER, 20)),
        ("trials", (INTEGER, 200)),
        ("overlap", (FLAG, False)),
    ])),
    ("foliation", OrderedDict([
        ("s0", (NUMBERS, [0.5, 1.0, 2.0])),
        ("step", (NUMBER, 1e-2)),
        ("r_max", (NUMBER, 1e3)),
        ("stride", (INTEGER, 10)),
    ])),
    ("flow", OrderedDict(
        [(key, (FLAG if key == "tune" else INTEGER if isinstance(value, int) and not isinstance(value, bool)
                else NUMBER, value)) for key, value in FlowSettings.defaults.items()]
        + [("a", (NUMBERS, None)), ("target_s", (NUMBER, None))])),
    ("verify", OrderedDict([
        ("run_dir", (TEXT, None)),
    ])),
])

TOP_LEVEL = ("command", "cone", "output_dir", "seed", "workers") + tuple(SECTIONS)


def _check(path, kind, value):
    if value is None:
        return value
    if kind == FLAG:
        if not isinstance(value, bool):
            raise ConfigError("{} must be true or false, got {!r}".format(path, value), module="config")
        return value
    if kind == TEXT:
        if not isinstance(value, str):
            raise ConfigError("{} must be a string, got {!r}".format(path, value), module="config")
        return value
    if kind == NUMBERS:
        if not isinstance(value, list):
            raise ConfigError("{} must be a list of numbers, got {!r}".format(path, value), module="config")
        return [_check("{}[{}]".format(path, index), NUMBER, item) for index, item in enumerate(value)]
    if isinstance(value, bool) or not isinstance(value, numbers.Real):
        raise ConfigError("{} must be a number, got {!r}".format(path, value), module="config")
    if kind == INTEGER:
        if int(value) != value:
            raise ConfigError("{} must be an integer, got {!r}".format(path, value), module="config")
        return int(value)
    return float(value)


def _positive(path, value):
    if value is not None and not value > 0:
        raise ConfigError("{} must be positive, got {!r}".format(path, value), module="config")


def _section(name, data):
    schema = SECTIONS[name]
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError("{} must be an object, got {!r}".format(name, data), module="config")
    unknown = sorted(set(data) - set(schema))
    if unknown:
        raise ConfigError("{}.{} is not a known field".format(name, unknown[0]), module="config")
    values = OrderedDict()
    for key, (kind, default) in schema.items():
        value = data.get(key, copy.deepcopy(default))
        values[key] = _check("{}.{}".format(name, key), kind, value)
    return values


class RunConfig(object):

    """
    A validated run description. Sections are filled with their defaults; every violation raises
    ConfigError naming the dotted field path.
    """

    def __init__(self, command, cone, output_dir, seed=0, workers=1, **sections):
        self.command = command
        self.cone = cone
        self.output_dir = output_dir
        self.seed = seed
        self.workers = workers
        for name in SECTIONS:
            setattr(self, name, sections.get(name) or _section(name, None))

    @classmethod
    def from_dict(cls, data):
        if not isinstance(data, dict):
            raise ConfigError("A run config must be an object, got {!r}".format(data), module="config")
        unknown = sorted(set(data) - set(TOP_LEVEL))
        if unknown:
            raise ConfigError("{} is not a known field".format(unknown[0]), module="config")

        command = data.get("command")
        if command is None:
            raise ConfigError("command is required (one of {})".format(", ".join(COMMANDS)), module="config")
        if command not in COMMANDS:
            raise ConfigError("command must be one of {}, got {!r}".format(", ".join(COMMANDS), command),
                              module="config")
        output_dir = data.get("output_dir")
        if output_dir is None:
            raise ConfigError("output_dir is required (use --out)", module="config")
        _check("output_dir", TEXT, output_dir)
        seed = _check("seed", INTEGER, data.get("seed"))
        seed = 0 if seed is None else seed
        if seed < 0:
            raise ConfigError("seed must be nonnegative, got {}".format(seed), module="config")
        workers = _check("workers", INTEGER, data.get("workers"))
        workers = 1 if workers is None else workers
        _positive("workers", workers)

        cone = data.get("cone")
        if command != "verify":
            if cone is None:
                raise ConfigError("cone is required for {}".format(command), module="config")
            if not isinstance(cone, dict):
                raise ConfigError("cone must be an object, got {!r}".format(cone), module="config")

        sections = dict((name, _section(name, data.get(name))) for name in SECTIONS)
        spectrum = sections["spectrum"]
        if spectrum["order"] < 2:
            raise ConfigError("spectrum.order must be at least 2, got {}".format(spectrum["order"]),
                              module="config")
        for key in ("basis_size", "trials", "l"):
            _positive("spectrum.{}".format(key), spectrum[key])
        foliation = sections["foliation"]
        if not foliation["s0"]:
            raise ConfigError("foliation.s0 must list at least one axis height", module="config")
        for index, value in enumerate(foliation["s0"]):
            _positive("foliation.s0[{}]".format(index), value)
        for key in ("step", "r_max", "stride"):
            _positive("foliation.{}".format(key), foliation[key])
        params = sections["params"]
        for key in ("Lambda", "beta", "rho"):
            _positive("params.{}".format(key), params[key])
        if command == "verify" and sections["verify"]["run_dir"] is None:
            raise ConfigError("verify.run_dir is required for verify", module="config")

        config = cls(command, cone, output_dir, seed, workers, **sections)
        if command == "flow":
            config.flow_settings()
        return config

    def flow_settings(self):
        values = dict((key, value) for key, value in self.flow.items() if key in FlowSettings.defaults)
        return FlowSettings(**values)

    def cone_spec(self):
        if self.cone is None:
            raise ConfigError("cone is required for {}".format(self.command), module="config")
        return ConeSpec.from_dict(self.cone)

    def to_dict(self):
        data = OrderedDict()
        data["command"] = self.command
        data["cone"] = self.cone
        data["output_dir"] = self.output_dir
        data["seed"] = self.seed
        data["workers"] = self.workers
        for name in SECTIONS:
            data[name] = OrderedDict(getattr(self, name))
        return data

    def __repr__(self):
        return "<{self.__class__.__name__}: {self.command} -> {self.output_dir}>".format(self=self)


def load_document(path):
    """The JSON object stored at `path`"""

    if not os.path.isfile(path):
        raise ConfigError("Config file {} does not exist".format(path), module="config")
    with open(path) as f:
        try:
            document = json.load(f, object_pairs_hook=OrderedDict)
        except ValueError as exc:
            raise ConfigError("Config file {} is not valid JSON: {}".format(path, exc), module="config")
    if not isinstance(document, dict):
        raise ConfigError("Config file {} must hold an object".format(path), module="config")
    return document


def overlay(document, **flags):
    """Copy of the document with every flag that is not None set on top"""

    merged = OrderedDict(document)
    for key, value in flags.items():
        if value is not None:
            merged[key] = value
    return merged


def sweep_entries(document, output_dir=None):
    """
    The run documents of a sweep: each entry of `runs` over the shared top-level fields, sections
    merged key by key. Entries without an output_dir get run-NNN under output_dir.
    """
    runs = document.get("runs")
    if not isinstance(runs, list) or not runs:
        raise ConfigError("runs must be a non-empty list", module="config")
    shared = OrderedDict((key, value) for key, value in document.items() if key != "runs")
    shared.pop("output_dir", None)
    entries = []
    for index, run in enumerate(runs):
        if not isinstance(run, dict):
            raise ConfigError("runs[{}] must be an object, got {!r}".format(index, run), module="config")
        entry = copy.deepcopy(shared)
        for key, value in run.items():
            if key in SECTIONS and isinstance(value, dict) and isinstance(entry.get(key), dict):
                entry[key] = OrderedDict(entry[key])
                entry[key].update(value)
            else:
                entry[key] = value
        if "output_dir" not in entry:
            if output_dir is None:
                raise ConfigError("runs[{}].output_dir is required (or pass --out)".format(index),
                                  module="config")
            entry["output_dir"] = os.path.join(output_dir, "run-{:03d}".format(index))
        entries.append(entry)
    return entries
