"""Discrete MCMC with Newton-type proposals."""

from ._core import *  # noqa: F401,F403
from ._core import (
    ConfigError,
    Domain,
    Encoding,
    EnergyModel,
    FacilityLocationModel,
    IsingModel,
    PottsModel,
    ProposalFamily,
    ProposalSpec,
    QuadraticModel,
    TableModel,
    run_chain,
)

__version__ = "0.1.0"
