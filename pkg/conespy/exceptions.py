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

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ADMISSIBILITY = 4


class ConespyError(Exception):

    """
    Base for every error raised by the library. `module` names the producing module so the
    command line can report where a run broke.
    """
    exit_code = 1

    def __init__(self, message, module=None):
        super(ConespyError, self).__init__(message)
        self.module = module

    def __str__(self):
        message = super(ConespyError, self).__str__()
        if self.module:
            return "[{}] {}".format(self.module, message)
        return message


class ConfigError(ConespyError, ValueError):
    exit_code = EXIT_CONFIG


class DomainError(ConespyError, ValueError):
    exit_code = EXIT_CONFIG


class NumericalError(ConespyError, RuntimeError):
    exit_code = EXIT_NUMERICAL


class ShootingError(NumericalError):
    pass


class ConvergenceError(NumericalError):
    pass


class GraphConditionError(NumericalError):
    pass


class SpectrumError(NumericalError):
    pass


class FitError(NumericalError):
    pass


class SeriesOverflowError(NumericalError, OverflowError):
    pass


class LinearSolveError(NumericalError):
    pass


class AdmissibilityError(ConespyError, RuntimeError):

    """
    A constructed or evolved state left the admissible set. `violations` holds the offending
    (location, value, bound) triples.
    """
    exit_code = EXIT_ADMISSIBILITY

    def __init__(self, message, module=None, violations=None):
        super(AdmissibilityError, self).__init__(message, module=module)
        self.violations = violations or []


def exit_code(exc):
    """Maps an exception to the command line exit status"""

    return getattr(exc, "exit_code", 1)
