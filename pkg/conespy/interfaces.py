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
from collections import OrderedDict

import numpy as np

from .contenttypes import BaseContentType
from .exceptions import ConfigError
from .plots import figure_to_svg


class BaseFileInterface(object):

    """
    Basic run artifact, implemented as a python descriptor. Provides means to read and write one file
    of the directory owned by the instance.
    """
    readonly = False
    writeonly = False

    def __init__(self, filename, readonly=None, writeonly=None):
        if readonly and writeonly:
            raise RuntimeError("This interface cannot be both readonly and writeonly")

        self.filename = filename
        self.readonly = readonly or self.readonly
        self.writeonly = writeonly or self.writeonly

    def __get__(self, instance, owner):
        if instance is None:
            return self
        if self.writeonly:
            raise RuntimeError("This interface is writeonly")

        value = instance.get_property(self.filename)
        return self.sanitize_get(value)

    def __set__(self, instance, value):
        if self.readonly:
            raise RuntimeError("This interface is readonly")

        value = self.sanitize_set(value)
        if value is not None:
            return instance.set_property(self.filename, value)

    def sanitize_get(self, value):
        return value

    def sanitize_set(self, value):
        return value


class TextFile(BaseFileInterface):
    """
    Plain text, nothing to convert.
    """
    pass


def _encode(value):
    if isinstance(value, np.ndarray):
        return value.tolist()
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, (set, frozenset, tuple)):
        return list(value)
    raise TypeError("Object of type {} is not JSON serializable".format(type(value).__name__))


def to_json(value):
    return json.dumps(value, indent=2, sort_keys=True, default=_encode)


class JsonFile(BaseFileInterface):

    """
    Mappings and lists as indented JSON with sorted keys; reading keeps the key order of the file.
    """

    def sanitize_get(self, value):
        try:
            return json.loads(value, object_pairs_hook=OrderedDict)
        except ValueError as exc:
            raise ConfigError("{} is not valid JSON: {}".format(self.filename, exc), module="interfaces")

    def sanitize_set(self, value):
        return to_json(value)


class CsvFile(BaseFileInterface):

    """
    A table of BaseContentType rows under a header line. Example:

        i,j,alpha,eigenvalue,c_norm,multiplicity,selected
        2,1,-2.0,0.5,0.1767766952966369,1,1
    """

    def __init__(self, filename, contenttype, readonly=None, writeonly=None):
        if not issubclass(contenttype, BaseContentType):
            raise RuntimeError("Contenttype should be a class inheriting "
                               "from BaseContentType, not {}".format(contenttype))

        self.contenttype = contenttype
        super(CsvFile, self).__init__(filename, readonly=readonly, writeonly=writeonly)

    def sanitize_get(self, value):
        lines = value.split("\n")
        if lines[0].strip() != self.contenttype.header():
            raise ConfigError("{} starts with {!r}, expected the header {!r}".format(
                self.filename, lines[0], self.contenttype.header()), module="interfaces")
        return [self.contenttype.from_string(line) for line in lines[1:] if line.strip()]

    def sanitize_set(self, value):
        rows = []
        for row in value:
            if not isinstance(row, self.contenttype):
                row = self.contenttype.from_string(row)
            rows.append(str(row))
        return "\n".join([self.contenttype.header()] + rows) + "\n"


class SvgFile(BaseFileInterface):

    """
    SVG text. Accepts a matplotlib figure, which is rendered without timestamps.
    """

    def sanitize_set(self, value):
        if hasattr(value, "savefig"):
            return figure_to_svg(value)
        return value
