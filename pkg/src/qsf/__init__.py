"""q-special functions: Askey-Wilson families, q-series, addition formulas and their verification."""

__version__ = "0.1.0"
