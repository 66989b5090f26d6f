"""
Experiment reports
Per-step traces plus aggregates that are always recomputable from them
"""

import csv
import io
from collections import Counter
from typing import Any, Dict, List, Optional, Sequence

from pydantic import BaseModel, Field

from contracts.codec import serialize
from state.models import StepTrace

RUN_COLUMNS = ["step", "active", "messages", "comparisons", "conflicts", "violations_blocked",
               "cache_hits", "gain_fwd", "gain_bwd"]


def aggregates_from(traces: Sequence[StepTrace]) -> Dict[str, Any]:
    """Summary metrics of a run; derived from the traces alone"""
    steps = len(traces)
    proposals = sum(t.n_active for t in traces)
    perturbation = sum(t.perturbation for t in traces)
    propagated = sum(t.propagated_error for t in traces)
    histogram = Counter(t.n_active for t in traces)

    return {
        "steps": steps,
        "conflicts": sum(t.conflicts for t in traces),
        "conflict_rate": sum(t.conflicts > 0 for t in traces) / steps if steps else 0.0,
        "violations_blocked": sum(t.violations_blocked for t in traces),
        "violations_blocked_rate": sum(t.violations_blocked for t in traces) / proposals if proposals else 0.0,
        "error_amplification": propagated / perturbation if perturbation > 0 else None,
        "messages": sum(t.messages_sent + t.messages_received for t in traces),
        "comparisons": sum(t.comparisons for t in traces),
        "cache_hits": sum(t.cache_hits for t in traces),
        "repairs": sum(t.repairs for t in traces),
        "defaults": sum(t.defaults for t in traces),
        "actions_emitted": sum(len(t.emitted) for t in traces),
        "conflicting_pairs_emitted": sum(t.conflicting_pairs_emitted for t in traces),
        "out_of_manifold_emitted": sum(t.out_of_manifold_emitted for t in traces),
        "active_histogram": {str(k): histogram[k] for k in sorted(histogram)},
        "mean_active_layers": proposals / steps if steps else 0.0,
        "gain_fwd_max": max((t.gain_fwd for t in traces), default=1.0),
        "gain_bwd_max": max((t.gain_bwd for t in traces), default=1.0),
    }


def write_csv(rows: Sequence[Dict[str, Any]], columns: Sequence[str]) -> str:
    """Comma-separated text with a header row and CRLF line endings"""
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=list(columns), extrasaction="ignore")
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buffer.getvalue()


class ExperimentReport(BaseModel):
    """Traces of one scenario run in one mode"""

    name: str
    mode: str
    seed: int
    traces: List[StepTrace] = Field(default_factory=list)
    aggregates: Dict[str, Any] = Field(default_factory=dict)

    @classmethod
    def from_traces(cls, name: str, mode: str, seed: int, traces: Sequence[StepTrace]) -> "ExperimentReport":
        return cls(name=name, mode=mode, seed=seed, traces=list(traces), aggregates=aggregates_from(traces))

    def is_consistent(self) -> bool:
        return serialize(self.aggregates) == serialize(aggregates_from(self.traces))

    def trace(self, step: int) -> Optional[StepTrace]:
        return next((t for t in self.traces if t.step == step), None)

    def to_jsonl(self) -> bytes:
        """One canonical trace per line, then the aggregates line"""
        lines = [serialize(t.to_record()) for t in self.traces]
        lines.append(serialize({"aggregates": self.aggregates}))
        return b"\n".join(lines) + b"\n"

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {
                "step": t.step,
                "active": t.n_active,
                "messages": t.messages_sent + t.messages_received,
                "comparisons": t.comparisons,
                "conflicts": t.conflicts,
                "violations_blocked": t.violations_blocked,
                "cache_hits": t.cache_hits,
                "gain_fwd": t.gain_fwd,
                "gain_bwd": t.gain_bwd,
            }
            for t in self.traces
        ]

    def to_csv(self) -> str:
        return write_csv(self.rows(), RUN_COLUMNS)


__all__ = ["ExperimentReport", "RUN_COLUMNS", "aggregates_from", "write_csv"]
