"""
Policy Service
Scripted ego-policy family and per-run seed derivation
"""
import hashlib
import logging
from typing import List

from ..models.errors import ConfigError
from ..models.scenario import EgoPolicy, PolicyKind

LOG = logging.getLogger(__name__)

KIND_CYCLE = (
    PolicyKind.EARLY_MERGE,
    PolicyKind.LATE_MERGE,
    PolicyKind.TARGET_GAP,
    PolicyKind.HESITANT,
)

# Low-discrepancy fractions spread parameters evenly across each kind
_GOLDEN = 0.6180339887498949
_PLASTIC = 0.7548776662466927


def _fraction(i: int, step: float) -> float:
    return (0.5 + i * step) % 1.0


def derive_seed(base_seed: int, *labels: str) -> int:
    """Stable 32-bit seed for a labelled component of a run"""
    text = ":".join([str(base_seed), *labels])
    return int.from_bytes(hashlib.sha256(text.encode("utf-8")).digest()[:4], "big")


def build_policy(index: int, max_gap_index: int = 12) -> EgoPolicy:
    """
    The index-th member of the family; kinds cycle, parameters interpolate.

    Late mergers and gap targeters drive near the speed limit and early mergers
    slightly below it. Only hesitant egos are slow, so an ego that ends up in an
    empty target lane has either a short run or a large unused speed margin.
    """
    kind = KIND_CYCLE[index % len(KIND_CYCLE)]
    f = _fraction(index, _GOLDEN)
    g = _fraction(index, _PLASTIC)
    policy_id = f"P{index + 1:02d}-{kind.value}"

    if kind is PolicyKind.EARLY_MERGE:
        return EgoPolicy(
            policy_id=policy_id, kind=kind,
            speed_multiplier=0.75 + 0.2 * g,
            commit_distance=350.0 + 450.0 * f,
            gap_acceptance=0.3 + 0.4 * g,
        )
    if kind is PolicyKind.LATE_MERGE:
        return EgoPolicy(
            policy_id=policy_id, kind=kind,
            speed_multiplier=0.95 + 0.05 * g,
            commit_distance=40.0 + 260.0 * f,
            gap_acceptance=0.2 + 0.3 * f,
        )
    if kind is PolicyKind.TARGET_GAP:
        return EgoPolicy(
            policy_id=policy_id, kind=kind,
            speed_multiplier=0.95 + 0.05 * g,
            commit_distance=450.0,
            gap_acceptance=0.4,
            # gap 0 is the late merger's move
            gap_index=min(1 + int(f * max_gap_index), max(max_gap_index, 1)),
        )
    return EgoPolicy(
        policy_id=policy_id, kind=kind,
        speed_multiplier=0.45 + 0.3 * g,
        commit_distance=300.0 + 300.0 * f,
        gap_acceptance=0.7 + 0.6 * f,
        patience=10.0,
    )


def build_policy_family(count: int, max_gap_index: int = 12) -> List[EgoPolicy]:
    """
    Deterministic family of count ego policies spanning efficient to inefficient behavior

    Raises:
        ConfigError: fewer than two policies requested
    """
    if count < 2:
        raise ConfigError(f"need at least two policies to rank, got {count}", key="policy_family.count")
    policies = [build_policy(i, max_gap_index) for i in range(count)]
    LOG.debug("Built %d ego policies", len(policies))
    return policies
