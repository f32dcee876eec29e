"""Exception hierarchy shared by the library and the command line."""


class InputError(ValueError):
    """Malformed or out-of-range input (CLI exit code 2)."""


class UnsupportedInputError(InputError):
    """Input is well formed but outside what a routine can handle."""


class ResourceError(RuntimeError):
    """A size guard was exceeded (CLI exit code 3)."""
