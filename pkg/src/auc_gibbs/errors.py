from __future__ import annotations


class InputError(ValueError):
    """Invalid scores, files or arguments. The CLI exits with code 2."""


class NumericalError(RuntimeError):
    """A computation could not be carried out in double precision. The CLI exits with code 3."""
