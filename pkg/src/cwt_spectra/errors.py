"""Exception hierarchy shared by every stage of the pipeline.

Each error carries the name of the stage that raised it and the process
exit status the CLI should use.
"""


class CwtSpectraError(Exception):
    exit_code = 1
    module = "cwt-spectra"

    def __init__(self, message, module=None):
        super().__init__(message)
        if module is not None:
            self.module = module

    def __str__(self):
        return f"[{self.module}] {self.args[0]}"


class InputError(CwtSpectraError, ValueError):
    """Bad user input: malformed CSV, invalid parameters, empty selections."""

    exit_code = 2


class NumericalError(CwtSpectraError, ArithmeticError):
    """A numerical invariant was violated (non-finite output, failed quadrature)."""

    exit_code = 3


class NetworkError(CwtSpectraError, OSError):
    exit_code = 4

    def __init__(self, message, module="data-io", status=None):
        super().__init__(message, module)
        self.status = status
