"""eVABA: validated asynchronous Byzantine agreement with committee-gated
provable broadcasts, plus a deterministic network simulator and harness."""

from .checks import violations
from .committee import Committee, CommitteeSelection, committee_probability
from .crypto import (
    CoinShare, CryptoError, CryptoParams, InsufficientShares, InvalidShare, KeyMaterial,
    MixedMessages, ParamsError, SignShare, ThresholdScheme, ThresholdSignature, deal,
)
from .engine import Party, PartySnapshot, map_to_committee, valid_value
from .harness import ExperimentConfig, ExperimentReport, check_complexity, committee_stats, run_experiment
from .sim import AdversaryConfig, ConfigError, Trace, run

__version__ = "0.1.0"

__all__ = [
    "AdversaryConfig", "CoinShare", "Committee", "CommitteeSelection", "ConfigError", "CryptoError",
    "CryptoParams", "ExperimentConfig", "ExperimentReport", "InsufficientShares", "InvalidShare",
    "KeyMaterial", "MixedMessages", "ParamsError", "Party", "PartySnapshot", "SignShare",
    "ThresholdScheme", "ThresholdSignature", "Trace", "check_complexity", "committee_probability",
    "committee_stats", "deal", "map_to_committee", "run", "run_experiment", "valid_value", "violations",
]
