"""
ccpnet - Common causes in local quantum nets

Quantum probability on finite tensor spaces, common-cause construction and
search, Bell correlation, 1+1 Minkowski region calculus, and a lattice net
that demonstrates a common cause localized in the weak past of two regions.
"""

__version__ = "0.1.0"

from .bell import bell_correlation, find_correlated_projections, is_bell_correlated
from .commoncause import (
    CommonCauseCertificate,
    canonical_cause_value,
    construct_canonical_cause,
    search_common_cause,
    verify_common_cause,
)
from .localnet import LatticeNet, base_of, wccp_demo
from .minkowski import DoubleCone, Wedge, localization_region
from .qprob import Projection, State, TensorSpace

__all__ = [
    "CommonCauseCertificate",
    "DoubleCone",
    "LatticeNet",
    "Projection",
    "State",
    "TensorSpace",
    "Wedge",
    "__version__",
    "base_of",
    "bell_correlation",
    "canonical_cause_value",
    "construct_canonical_cause",
    "find_correlated_projections",
    "is_bell_correlated",
    "localization_region",
    "search_common_cause",
    "verify_common_cause",
    "wccp_demo",
]
