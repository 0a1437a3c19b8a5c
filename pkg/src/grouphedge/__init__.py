"""Online prediction with groupwise (subsequence) regret guarantees."""

__version__ = "0.1.0"

from .core import (
    ContractError,
    InvariantViolation,
    LossSpec,
    NoActiveExpert,
    ProtocolError,
    Round,
    Rounds,
    clip_unit,
    linear_loss,
    squared_loss,
)
from .eval import LedgerSummary, RegretLedger, summary_table
from .experts import Dag, FtplLearner, Hypercube, VawLearner
from .groupwise import GroupwiseLearner, run_sequence
from .hedge import AdaNormalHedge

__all__ = [
    "AdaNormalHedge",
    "ContractError",
    "Dag",
    "FtplLearner",
    "GroupwiseLearner",
    "Hypercube",
    "InvariantViolation",
    "LedgerSummary",
    "LossSpec",
    "NoActiveExpert",
    "ProtocolError",
    "RegretLedger",
    "Round",
    "Rounds",
    "VawLearner",
    "clip_unit",
    "linear_loss",
    "run_sequence",
    "squared_loss",
    "summary_table",
]
