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
from .exceptions import ConfigError


def _format(kind, value):
    if value is None:
        return ""
    if kind is bool:
        return "1" if value else "0"
    if kind is float:
        return repr(float(value))
    if kind is int:
        return str(int(value))
    value = str(value)
    if "," in value or "\n" in value:
        raise ConfigError("Text field {!r} cannot hold commas or newlines".format(value), module="contenttypes")
    return value


def _parse(kind, value):
    if value == "" and kind is not str:
        return None
    if kind is bool:
        return bool(int(value))
    return kind(value)


def join_floats(values):
    """Several floats in one column, separated by semicolons"""

    return ";".join(repr(float(v)) for v in values)


def split_floats(value):
    return [float(v) for v in value.split(";") if v]


class BaseContentType(object):

    """
    One record of a CSV table. Subclasses list their `columns` as (name, type) pairs. Floats are
    written with repr, so a table read back holds the same doubles.
    """
    columns = ()

    def __init__(self, *values):
        if len(values) != len(self.columns):
            raise ConfigError("{} takes {} values, got {}".format(
                self.__class__.__name__, len(self.columns), len(values)), module="contenttypes")
        for (name, kind), value in zip(self.columns, values):
            if value is not None and kind is not str:
                value = kind(value)
            setattr(self, name, value)

    @classmethod
    def header(cls):
        return ",".join(name for name, _ in cls.columns)

    @property
    def values(self):
        return tuple(getattr(self, name) for name, _ in self.columns)

    def __str__(self):
        return ",".join(_format(kind, getattr(self, name)) for name, kind in self.columns)

    def __repr__(self):
        return "<{}: {}>".format(self.__class__.__name__, self)

    def __eq__(self, other):
        return type(self) is type(other) and self.values == other.values

    def __ne__(self, other):
        return not self == other

    __hash__ = None

    @classmethod
    def from_string(cls, value):
        fields = value.strip().split(",")
        if len(fields) != len(cls.columns):
            raise ConfigError("Row {!r} does not match the columns {}".format(value, cls.header()),
                              module="contenttypes")
        try:
            return cls(*[_parse(kind, field) for (_, kind), field in zip(cls.columns, fields)])
        except ValueError:
            raise ConfigError("Row {!r} cannot be converted to {}".format(value, cls.__name__),
                              module="contenttypes")


class SpectrumRow(BaseContentType):
    columns = (("i", int), ("j", int), ("alpha", float), ("eigenvalue", float), ("c_norm", float),
               ("multiplicity", int), ("selected", bool))

    @classmethod
    def from_mode(cls, mode, cone, selected=False):
        return cls(mode.i, mode.j, mode.alpha_j, mode.eigenvalue, mode.c_norm,
                   cone.link.multiplicities[mode.j - 1], selected)


class MarginRow(BaseContentType):

    """name,margin,holds; a margin is rhs - lhs of one inequality"""

    columns = (("name", str), ("margin", float), ("holds", bool))


class CurveRow(BaseContentType):
    columns = (("leaf", int), ("sigma", float), ("s", float), ("t", float), ("phi", float), ("psi", float))


class OverlapRow(BaseContentType):
    columns = (("s", float), ("deviation", float), ("tail", float))


class SnapshotRow(BaseContentType):

    """
    Flow table row. `phi` holds the projections onto the tuning modes joined by semicolons.
    """
    columns = (("t", float), ("s", float), ("tau", float), ("sup_A", float), ("kappa", float),
               ("outer_barrier_margin", float), ("outer_barrier_ok", bool), ("admissible", bool), ("phi", str))

    @classmethod
    def from_record(cls, record):
        return cls(record["t"], record["s"], record["tau"], record["sup_A"], record["kappa"],
                   record["outer_barrier_margin"], record["outer_barrier_ok"], record["admissible"],
                   join_floats(record["phi"]))

    @property
    def projections(self):
        return split_floats(self.phi or "")


class SweepRow(BaseContentType):

    """
    One sweep entry: where it ran, how it ended, its headline number and the remaining metrics as
    name=value pairs joined by semicolons.
    """
    columns = (("label", str), ("command", str), ("status", str), ("exit_code", int), ("headline", float),
               ("metrics", str))
