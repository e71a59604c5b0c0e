"""conelab: a numerical laboratory for infrared-extended free fields on the light cone."""

__version__ = "0.1.0"

from .cone import ConeGrid, HomogeneousConeField, NullDirection, make_grid  # noqa: F401
