"""civicref: multi-agent referendum simulation over transit policy bundles."""

__version__ = "0.1.0"

from .catalog import Catalog, Policy, PolicyMetrics, load_catalog
from .ballots import Ballot, approval_ballot, approval_winner, irv_winner, ranked_ballot

__all__ = [
    "Ballot",
    "Catalog",
    "Policy",
    "PolicyMetrics",
    "approval_ballot",
    "approval_winner",
    "irv_winner",
    "load_catalog",
    "ranked_ballot",
    "__version__",
]
