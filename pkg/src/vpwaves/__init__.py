"""Vlasov-Poisson stability, Landau damping and BGK wave construction."""

__version__ = "0.1.0"
