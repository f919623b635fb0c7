"""Minimax Rényi redundancy of discrete memoryless sources.

Exact small-scale computation of the redundancy game, Jeffreys-type
mixtures, and numerical audits of the supporting inequalities.
"""
from .errors import DomainError, NonDominationError, PreconditionError, SizeError
from .simplex import SimplexPoint, TypeVector, enumerate_types, log_gamma, log_multinomial
from .measures import alpha_mutual_information, renyi_divergence, sundaresan_divergence
from .mixtures import DiscretePrior, ExchangeableMixture, ModifiedPriorSpec, jeffreys_mixture

__all__ = [
    "DomainError", "NonDominationError", "PreconditionError", "SizeError",
    "SimplexPoint", "TypeVector", "enumerate_types", "log_gamma", "log_multinomial",
    "alpha_mutual_information", "renyi_divergence", "sundaresan_divergence",
    "DiscretePrior", "ExchangeableMixture", "ModifiedPriorSpec", "jeffreys_mixture",
]
__version__ = "0.1.0"
