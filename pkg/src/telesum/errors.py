"""Exception hierarchy shared by all modules."""


class TelesumError(Exception):
    """Base class for errors raised by the package."""


class UnsupportedError(TelesumError):
    """Input lies outside the scope of the implemented algorithms."""


class PoleError(TelesumError, ZeroDivisionError):
    """An atom was evaluated at a pole (e.g. 1/binom(n,k) with k > n)."""
