"""Correlation functions of the rank-one Heisenberg vertex algebra
across genera: reduction differentials, chain-condition verification,
and the elliptic and sewing machinery behind them."""

from .series import ExactComplex, SeriesError, TruncatedSeries
from .voa import (
    A_VECTOR,
    OMEGA_VECTOR,
    VACUUM,
    VACUUM_VECTOR,
    FockState,
    FockVector,
    fock_basis,
)

__all__ = [
    "ExactComplex",
    "SeriesError",
    "TruncatedSeries",
    "A_VECTOR",
    "OMEGA_VECTOR",
    "VACUUM",
    "VACUUM_VECTOR",
    "FockState",
    "FockVector",
    "fock_basis",
]
