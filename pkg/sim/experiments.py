"""
Experiment runners
Gain curves, error amplification, traffic overhead and activation histograms
"""

import logging
from collections import Counter
from typing import Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel, Field

from config import Config, Modes
from errors import DomainError
from hierarchy.core import amax_gains, project_doubly_stochastic, propagate_error
from sim.scenario import ScenarioScript, run_scenario
from workflows.scheduler import RuntimeSettings, count_traffic, expected_traffic
from workflows.step import CoordinationRuntime

logger = logging.getLogger(__name__)

GAIN_COLUMNS = ["depth", "unconstrained_median", "unconstrained_q25", "unconstrained_q75",
                "constrained_median", "constrained_min", "constrained_max", "constrained_bwd_max"]
OVERHEAD_COLUMNS = ["n", "mode", "messages", "comparisons"]
ACTIVATION_COLUMNS = ["active_layers", "steps"]


class GainPoint(BaseModel):
    depth: int
    unconstrained_median: float
    unconstrained_q25: float
    unconstrained_q75: float
    constrained_median: float
    constrained_min: float
    constrained_max: float
    constrained_bwd_max: float


class GainCurve(BaseModel):
    """Composite forward gain per depth for both arms"""

    n: int
    trials: int
    seed: int
    low: float
    high: float
    converged: bool
    points: List[GainPoint] = Field(default_factory=list)

    def rows(self) -> List[dict]:
        return [p.model_dump() for p in self.points]


def _chunk_gains(samples: np.ndarray, depth: int, n: int):
    """Per-depth gains of one batch of chains, both arms"""
    projection = project_doubly_stochastic(samples, Config.PROJECTION_TOL, Config.PROJECTION_MAX_ITER)
    composite_u = np.broadcast_to(np.eye(n), (len(samples), n, n)).copy()
    composite_c = composite_u.copy()
    fwd_u, fwd_c, bwd_c = [], [], []
    for k in range(depth):
        composite_u = samples[:, k] @ composite_u
        composite_c = projection.matrix[:, k] @ composite_c
        fwd, _ = amax_gains(composite_u)
        fwd_u.append(fwd)
        fwd, bwd = amax_gains(composite_c)
        fwd_c.append(fwd)
        bwd_c.append(bwd)
    return np.stack(fwd_u), np.stack(fwd_c), np.stack(bwd_c), projection.converged


def gain_experiment(depth: int, trials: int, seed: Optional[int] = None, n: int = 4,
                    low: float = 0.0, high: float = 1.5, chunk_entries: Optional[int] = None) -> GainCurve:
    """
    Sample residual chains and track the composite gain as depth grows.

    The unconstrained arm uses i.i.d. uniform[low, high] entries; the
    constrained arm projects the very same samples onto the doubly
    stochastic set. Trials are drawn in batches of at most chunk_entries
    matrix entries; only the per-depth gains of every trial are kept.
    """
    if depth < 1 or trials < 1 or n < 1:
        raise DomainError(f"Need depth, trials and n >= 1, got depth={depth}, trials={trials}, n={n}")
    if not low < high:
        raise DomainError(f"Empty sampling interval [{low}, {high}]")
    seed = Config.DEFAULT_SEED if seed is None else seed
    chunk_entries = chunk_entries or Config.GAIN_CHUNK_ENTRIES
    batch = max(1, chunk_entries // (depth * n * n))

    rng = np.random.default_rng(seed)
    parts, converged = [], True
    for start in range(0, trials, batch):
        size = min(batch, trials - start)
        samples = rng.uniform(low, high, size=(size, depth, n, n))
        *gains, batch_converged = _chunk_gains(samples, depth, n)
        parts.append(gains)
        converged = converged and batch_converged
    fwd_u, fwd_c, bwd_c = (np.concatenate(arm, axis=1) for arm in zip(*parts))

    points = []
    for k in range(depth):
        q25, median, q75 = np.quantile(fwd_u[k], [0.25, 0.5, 0.75])
        points.append(GainPoint(
            depth=k + 1,
            unconstrained_median=float(median),
            unconstrained_q25=float(q25),
            unconstrained_q75=float(q75),
            constrained_median=float(np.median(fwd_c[k])),
            constrained_min=float(fwd_c[k].min()),
            constrained_max=float(fwd_c[k].max()),
            constrained_bwd_max=float(bwd_c[k].max()),
        ))
    logger.info(f"Gain experiment: depth {depth}, {trials} trials in {len(parts)} batches, "
                f"unconstrained median at depth {depth} {points[-1].unconstrained_median:.3g}")
    return GainCurve(n=n, trials=trials, seed=seed, low=low, high=high,
                     converged=converged, points=points)


def amplification_experiment(eps0: float, chain: Sequence) -> float:
    """Output error over injected Reflex error, everything else error-free"""
    if not eps0 > 0:
        raise DomainError(f"Injected error must be positive, got {eps0}")
    eps = [eps0] + [0.0] * (len(chain) - 1)
    return propagate_error(eps, chain) / eps0


class OverheadRow(BaseModel):
    n: int
    mode: str
    messages: int
    comparisons: int
    expected_messages: int
    expected_comparisons: int

    @property
    def matches(self) -> bool:
        return (self.messages, self.comparisons) == (self.expected_messages, self.expected_comparisons)


def overhead_experiment(n_range: Sequence[int], modes: Sequence[str] = Modes.ALL) -> List[OverheadRow]:
    """One all-active step per (n, mode), tabulated against the closed forms"""
    rows = []
    for n in n_range:
        if n < 1:
            raise DomainError(f"Layer count must be positive, got {n}")
        for mode in modes:
            runtime = CoordinationRuntime(RuntimeSettings(mode=mode, n_layers=n))
            trace = runtime.step(force_active=range(1, n + 1))
            messages, comparisons = count_traffic(trace)
            expected_messages, expected_comparisons = expected_traffic(mode, n)
            rows.append(OverheadRow(n=n, mode=mode, messages=messages, comparisons=comparisons,
                                    expected_messages=expected_messages, expected_comparisons=expected_comparisons))
            if not rows[-1].matches:
                logger.warning(f"Traffic for n={n}, {mode} is ({messages}, {comparisons}), "
                               f"expected ({expected_messages}, {expected_comparisons})")
    return rows


def activation_experiment(script: ScenarioScript, horizon: Optional[int] = None) -> Dict[int, int]:
    """Number of steps per count of active layers"""
    if horizon is not None:
        if horizon < 1:
            raise DomainError(f"Horizon must be at least 1, got {horizon}")
        script = script.model_copy(update={"horizon": horizon})
    report = run_scenario(script, Modes.CTHA)
    counts = Counter(t.n_active for t in report.traces)
    return {k: counts[k] for k in sorted(counts)}


__all__ = [
    "ACTIVATION_COLUMNS",
    "GAIN_COLUMNS",
    "OVERHEAD_COLUMNS",
    "GainCurve",
    "GainPoint",
    "OverheadRow",
    "activation_experiment",
    "amplification_experiment",
    "gain_experiment",
    "overhead_experiment",
]
