"""Shared exception types."""


class ConelabError(Exception):
    pass


class HomogeneityError(ConelabError):
    """Operation applied to a field of the wrong homogeneity degree."""


class ResolutionExceeded(ConelabError):
    """A quadrature or spectral resolution budget was exceeded."""


class SupportError(ConelabError):
    """A field violates its declared support class beyond tolerance."""
