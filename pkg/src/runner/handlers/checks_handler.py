import asyncio

from ergodic.averaging import orthogonality_probe
from ergodic.errors import ConfigError
from ergodic.lattice import GroupElement, verify_past_axioms
from ergodic.systems import BernoulliShiftSystem
from runner.context import RunContext, RunOutcome
from runner.schema import (
    ExperimentConfig,
    build_family,
    build_observables,
    build_system,
    resolve_weights,
)
from runner.utils.decorators import timed_step
from settings import config, get_logger

logger = get_logger(__name__)


def run_verify_past(cfg: ExperimentConfig) -> RunOutcome:
    block = cfg.verify_past
    weights, _ = resolve_weights(block.weights, None, len(block.weights), "verify_past.weights")
    report = verify_past_axioms(weights, block.box_radius)
    logger.info(f"Axiom check w={list(weights.weights)} r={block.box_radius}: {report.past_size} past elements")
    return RunOutcome.judged(report.passed, result=report.to_dict(), weights={"weights": list(weights.weights)})


def run_orthogonality(cfg: ExperimentConfig) -> RunOutcome:
    """
    Exact martingale-difference correlations of one column on a Bernoulli shift.

    Passes when every pair meeting the ordering and measurability preconditions has a vanishing
    correlation (exactly on the rational path).
    """
    block = cfg.orthogonality
    system = build_system(cfg)
    if not isinstance(system, BernoulliShiftSystem):
        raise ConfigError("system.type", "the orthogonality probe runs on Bernoulli shifts")
    observables = build_observables(cfg, system)
    family = build_family(cfg.family, system.d)
    if len(observables) != family.m:
        raise ConfigError("observables", f"expected {family.m} observables, got {len(observables)}")
    if block.column >= family.m:
        raise ConfigError("orthogonality.column", f"column {block.column} outside 0..{family.m - 1}")
    if len(block.anchor) != system.d:
        raise ConfigError("orthogonality.anchor", f"expected {system.d} coordinates, got {len(block.anchor)}")
    if block.residue >= block.modulus:
        raise ConfigError("orthogonality.residue", f"residue {block.residue} is not below modulus {block.modulus}")
    for k, (n, m) in enumerate(block.pairs):
        if min(n, m) < 0 or max(n, m) * block.modulus + block.residue > config.max_orbit_n:
            raise ConfigError(f"orthogonality.pairs.{k}", f"indices ({n}, {m}) outside 0..{config.max_orbit_n}")

    weights, selection = resolve_weights(cfg.weights, family, system.d)
    report = orthogonality_probe(
        system,
        family,
        observables,
        weights,
        GroupElement(tuple(block.anchor)),
        block.column,
        block.pairs,
        modulus=block.modulus,
        residue=block.residue,
        threshold=selection.n2 if selection is not None else None,
        tolerance=block.tolerance,
    )
    weights_report = selection.to_dict() if selection is not None else {"weights": list(weights.weights)}
    return RunOutcome.judged(report.passed, result=report.to_dict(), weights=weights_report)


@timed_step
async def handle_verify_past(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_verify_past, cfg)


@timed_step
async def handle_orthogonality(cfg: ExperimentConfig, context: RunContext) -> RunOutcome:
    return await asyncio.to_thread(run_orthogonality, cfg)
