"""
Layered state, inter-layer mappings and stability metrics
All functions are pure; arrays handed out are read-only
"""

import logging
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from errors import DomainError, ShapeError

logger = logging.getLogger(__name__)

# Literal temperature ladder of the four standard layers, fastest first
TEMPERATURE_LADDER: Tuple[float, ...] = (0.1, 0.3, 0.5, 0.7)

DEFAULT_TOL = 1e-9
DEFAULT_MAX_ITER = 1000
ENTRY_FLOOR = 1e-12

LayerPolicyHook = Callable[[np.ndarray], np.ndarray]


def _frozen(values, dtype=float) -> np.ndarray:
    array = np.array(values, dtype=dtype)
    array.setflags(write=False)
    return array


def _require_finite(array: np.ndarray, what: str) -> None:
    if not np.all(np.isfinite(array)):
        raise DomainError(f"{what} contains non-finite entries")


@dataclass(frozen=True)
class LayeredState:
    """The n x d state matrix; row i is the stream of layer i + 1"""

    rows: np.ndarray
    step: int = 0

    def __post_init__(self):
        rows = _frozen(self.rows)
        if rows.ndim != 2 or rows.shape[0] < 1 or rows.shape[1] < 1:
            raise ShapeError(f"Layered state must be a non-empty n x d matrix, got shape {rows.shape}")
        _require_finite(rows, "Layered state")
        if self.step < 0:
            raise DomainError(f"Step must be nonnegative, got {self.step}")
        object.__setattr__(self, "rows", rows)

    @property
    def n(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1]

    @classmethod
    def zeros(cls, n: int, d: int, step: int = 0) -> "LayeredState":
        return cls(np.zeros((n, d)), step)

    def row(self, layer: int) -> np.ndarray:
        """Row of a 1-based layer"""
        return self.rows[layer - 1]

    def row_bytes(self, layer: int) -> bytes:
        return self.rows[layer - 1].tobytes()

    def with_row(self, layer: int, values: Sequence[float]) -> "LayeredState":
        values = np.asarray(values, dtype=float)
        if values.shape != (self.d,):
            raise ShapeError(f"Row for layer {layer} must have length {self.d}, got shape {values.shape}")
        rows = self.rows.copy()
        rows[layer - 1] = values
        return LayeredState(rows, self.step)

    def at_step(self, step: int) -> "LayeredState":
        return LayeredState(self.rows, step)


@dataclass(frozen=True)
class MappingParams:
    """Gating scalars, projections and static biases for one depth of mappings"""

    alpha_pre: float
    alpha_post: float
    alpha_res: float
    theta_pre: np.ndarray
    theta_post: np.ndarray
    theta_res: np.ndarray
    b_pre: np.ndarray
    b_post: np.ndarray
    b_res: np.ndarray

    def __post_init__(self):
        for name in ("theta_pre", "theta_post", "theta_res", "b_pre", "b_post", "b_res"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))
        for name in ("alpha_pre", "alpha_post", "alpha_res"):
            object.__setattr__(self, name, float(getattr(self, name)))
            if not np.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")
        for name in ("theta_pre", "theta_post", "theta_res", "b_pre", "b_post", "b_res"):
            _require_finite(getattr(self, name), name)

    def check_shapes(self, n: int, d: int) -> None:
        expected = {
            "theta_pre": (d,), "theta_post": (d,), "theta_res": (n, d),
            "b_pre": (n,), "b_post": (n,), "b_res": (n, n),
        }
        for name, shape in expected.items():
            actual = getattr(self, name).shape
            if actual != shape:
                raise ShapeError(f"{name} has shape {actual}, expected {shape} for n={n}, d={d}")

    @classmethod
    def static(cls, n: int, d: int) -> "MappingParams":
        """Gating off; biases give the fixed ablation mappings"""
        return cls(
            alpha_pre=0.0, alpha_post=0.0, alpha_res=0.0,
            theta_pre=np.zeros(d), theta_post=np.zeros(d), theta_res=np.zeros((n, d)),
            b_pre=np.full(n, 1.0 / n), b_post=np.ones(n), b_res=np.eye(n),
        )

    @classmethod
    def random(cls, n: int, d: int, rng: np.random.Generator,
               low: float = 0.0, high: float = 1.5, gate: float = 0.1) -> "MappingParams":
        """Seeded parameters with residual biases drawn from uniform[low, high]"""
        return cls(
            alpha_pre=gate, alpha_post=gate, alpha_res=gate,
            theta_pre=rng.standard_normal(d),
            theta_post=rng.standard_normal(d),
            theta_res=rng.standard_normal((n, d)),
            b_pre=rng.uniform(low, high, n),
            b_post=rng.uniform(low, high, n),
            b_res=rng.uniform(low, high, (n, n)),
        )


@dataclass(frozen=True)
class MappingSet:
    """Read-out weights h_pre, write-in weights h_post and residual mixing h_res"""

    h_pre: np.ndarray
    h_post: np.ndarray
    h_res: np.ndarray

    def __post_init__(self):
        h_pre, h_post, h_res = _frozen(self.h_pre), _frozen(self.h_post), _frozen(self.h_res)
        n = h_pre.shape[0] if h_pre.ndim == 1 else -1
        if n < 1 or h_post.shape != (n,) or h_res.shape != (n, n):
            raise ShapeError(
                f"Mapping shapes must be (n,), (n,), (n, n); got {h_pre.shape}, {h_post.shape}, {h_res.shape}"
            )
        for name, array in (("h_pre", h_pre), ("h_post", h_post), ("h_res", h_res)):
            _require_finite(array, name)
        object.__setattr__(self, "h_pre", h_pre)
        object.__setattr__(self, "h_post", h_post)
        object.__setattr__(self, "h_res", h_res)

    @property
    def n(self) -> int:
        return self.h_pre.shape[0]

    def is_doubly_stochastic(self, tol: float = DEFAULT_TOL) -> bool:
        return is_doubly_stochastic(self.h_res, tol)


class Projection(NamedTuple):
    matrix: np.ndarray
    converged: bool
    iterations: int


def logistic(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


def _normalized_rows(rows: np.ndarray) -> np.ndarray:
    mean = rows.mean(axis=1, keepdims=True)
    std = rows.std(axis=1, keepdims=True)
    flat = std < 1e-12
    safe = np.where(flat, 1.0, std)
    return np.where(flat, 0.0, (rows - mean) / safe)


def normalize_state(x: LayeredState) -> LayeredState:
    """Rescale every row to zero mean and unit variance; constant rows become zeros"""
    return LayeredState(_normalized_rows(x.rows), x.step)


def is_doubly_stochastic(h, tol: float = DEFAULT_TOL) -> bool:
    h = np.asarray(h, dtype=float)
    if h.ndim != 2 or h.shape[0] != h.shape[1] or h.size == 0:
        return False
    return bool(
        np.all(h >= 0)
        and np.all(np.abs(h.sum(axis=1) - 1.0) <= tol)
        and np.all(np.abs(h.sum(axis=0) - 1.0) <= tol)
    )


def project_doubly_stochastic(h, tol: float = DEFAULT_TOL, max_iter: int = DEFAULT_MAX_ITER) -> Projection:
    """
    Alternating row/column normalization onto the doubly stochastic set.

    Accepts a single square matrix or a stack (..., n, n); each matrix in a
    stack is projected independently and convergence is reported for the
    whole stack.

    Args:
        h: Square matrix or stack of square matrices
        tol: Allowed deviation of every row and column sum from 1
        max_iter: Maximum number of row+column sweeps

    Returns:
        Projection(matrix, converged, iterations)
    """
    m = np.array(h, dtype=float)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise DomainError(f"Projection needs square matrices, got shape {m.shape}")
    if m.size == 0:
        raise DomainError("Projection of an empty matrix is undefined")
    if tol <= 0 or max_iter < 1:
        raise DomainError(f"Need tol > 0 and max_iter >= 1, got tol={tol}, max_iter={max_iter}")
    _require_finite(m, "Matrix to project")

    m = np.maximum(np.abs(m), ENTRY_FLOOR)
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        m = m / m.sum(axis=-1, keepdims=True)
        m = m / m.sum(axis=-2, keepdims=True)
        row_err = np.abs(m.sum(axis=-1) - 1.0).max()
        col_err = np.abs(m.sum(axis=-2) - 1.0).max()
        if max(row_err, col_err) <= tol:
            converged = True
            break

    if not converged:
        logger.warning(f"Doubly stochastic projection did not converge in {max_iter} sweeps")
    m.setflags(write=False)
    return Projection(m, converged, iterations)


def compute_mappings(x: LayeredState,
                     params: Union[MappingParams, Sequence[MappingParams]],
                     layer: int = 0,
                     constrained: bool = False,
                     tol: float = DEFAULT_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> MappingSet:
    """
    Synthesize the mapping set for one depth from the current state.

    h = alpha * logistic(theta @ normalized(x).T) + b for pre, post and res.
    With constrained=True the residual mixing is projected onto the doubly
    stochastic set.
    """
    if isinstance(params, MappingParams):
        p = params
    else:
        if not 0 <= layer < len(params):
            raise DomainError(f"No mapping parameters for depth {layer} (have {len(params)})")
        p = params[layer]

    p.check_shapes(x.n, x.d)
    x_tilde = _normalized_rows(x.rows)

    h_pre = p.alpha_pre * logistic(p.theta_pre @ x_tilde.T) + p.b_pre
    h_post = p.alpha_post * logistic(p.theta_post @ x_tilde.T) + p.b_post
    h_res = p.alpha_res * logistic(p.theta_res @ x_tilde.T) + p.b_res

    if constrained:
        h_res = project_doubly_stochastic(h_res, tol, max_iter).matrix
    return MappingSet(h_pre, h_post, h_res)


def fixed_mappings(n: int) -> MappingSet:
    """Uniform read-out, unit write-in and identity residual"""
    if n < 1:
        raise DomainError(f"Layer count must be positive, got {n}")
    return MappingSet(np.full(n, 1.0 / n), np.ones(n), np.eye(n))


def propagate_layer(x: LayeredState, m: MappingSet, policy: LayerPolicyHook) -> LayeredState:
    """x' = h_res @ x + outer(h_post, policy(h_pre @ x))"""
    if m.n != x.n:
        raise ShapeError(f"Mapping set is for n={m.n}, state has n={x.n}")
    read = m.h_pre @ x.rows
    out = np.asarray(policy(read), dtype=float)
    if out.shape != (x.d,):
        raise ShapeError(f"Policy returned shape {out.shape}, expected ({x.d},)")
    return LayeredState(m.h_res @ x.rows + np.outer(m.h_post, out), x.step)


def propagate_hierarchy(x: LayeredState,
                        mappings: Sequence[MappingSet],
                        policies: Union[LayerPolicyHook, Sequence[LayerPolicyHook]]) -> LayeredState:
    """Apply propagate_layer through a stack of mapping sets"""
    if callable(policies):
        policies = [policies] * len(mappings)
    if len(policies) != len(mappings):
        raise DomainError(f"Got {len(policies)} policies for {len(mappings)} mapping sets")
    for m, policy in zip(mappings, policies):
        x = propagate_layer(x, m, policy)
    return x


def composite_mapping(res_list: Sequence, from_layer: int, to_layer: int, n: Optional[int] = None) -> np.ndarray:
    """
    Ordered product res[to-1] @ ... @ res[from]; the deepest matrix is applied last.

    An empty range is the identity; an empty list needs the stream count n.
    """
    mats = [np.asarray(h, dtype=float) for h in res_list]
    if not mats:
        if n is None or n < 1:
            raise ShapeError("Composite of an empty mapping list needs the stream count n")
    elif n is None:
        n = mats[0].shape[0]
    for h in mats:
        if h.shape != (n, n):
            raise ShapeError(f"Residual mappings must all be {n} x {n}, got {h.shape}")
    if not 0 <= from_layer <= to_layer <= len(mats):
        raise DomainError(f"Invalid layer range [{from_layer}, {to_layer}) for {len(mats)} mappings")

    product = np.eye(n)
    for h in mats[from_layer:to_layer]:
        product = h @ product
    return product


def amax_gains(h) -> Tuple[np.ndarray, np.ndarray]:
    """Vectorized Amax gains over the trailing two axes"""
    h = np.abs(np.asarray(h, dtype=float))
    if h.ndim < 2 or h.size == 0:
        raise DomainError(f"Amax gain needs a non-empty matrix, got shape {h.shape}")
    return h.sum(axis=-1).max(axis=-1), h.sum(axis=-2).max(axis=-1)


def amax_gain(h) -> Tuple[float, float]:
    """(max absolute row sum, max absolute column sum)"""
    h = np.asarray(h, dtype=float)
    if h.ndim == 1:
        h = h.reshape(1, -1)
    if h.ndim != 2:
        raise DomainError(f"Amax gain expects a matrix, got shape {h.shape}")
    fwd, bwd = amax_gains(h)
    return float(fwd), float(bwd)


def propagate_error(eps: Sequence[float], res_list: Sequence) -> float:
    """
    Scalar error reaching the output layer.

    Each eps[i] is scaled by the forward gain of the composite from depth i
    to the output, so eps[0] passes through every residual mapping.
    """
    depth = len(res_list)
    if depth == 0 or len(eps) != depth:
        raise DomainError(f"Need one error per mapping, got {len(eps)} errors and {depth} mappings")
    eps = np.asarray(eps, dtype=float)
    _require_finite(eps, "Error vector")

    total = 0.0
    for i, e in enumerate(eps):
        if e == 0.0:
            continue
        fwd, _ = amax_gain(composite_mapping(res_list, i, depth))
        total += fwd * float(e)
    return total


def _check_taus(tau: Sequence[float]) -> np.ndarray:
    tau = np.asarray(tau, dtype=float)
    if tau.ndim != 1 or tau.size == 0:
        raise DomainError("Time scales must be a non-empty list")
    if not np.all(np.isfinite(tau)) or np.any(tau <= 0):
        raise DomainError(f"Time scales must be positive and finite, got {tau.tolist()}")
    if np.any(np.diff(tau) <= 0):
        raise DomainError(f"Time scales must be strictly increasing, got {tau.tolist()}")
    return tau


def layer_temperature(layer: int, tau: Sequence[float], t_base: float = 0.1, gamma: float = 0.15) -> float:
    """t_base + gamma * ln(tau_layer / tau_1) for a 1-based layer"""
    taus = _check_taus(tau)
    if not 1 <= layer <= taus.size:
        raise DomainError(f"Layer {layer} outside 1..{taus.size}")
    return float(t_base + gamma * np.log(taus[layer - 1] / taus[0]))


def implied_tau_ratios(ladder: Sequence[float] = TEMPERATURE_LADDER,
                       t_base: float = 0.1, gamma: float = 0.15) -> np.ndarray:
    """Invert layer_temperature: tau_layer / tau_1 for each temperature in the ladder"""
    if gamma == 0:
        raise DomainError("gamma must be nonzero to invert the temperature formula")
    return np.exp((np.asarray(ladder, dtype=float) - t_base) / gamma)


def residual_chain(x: LayeredState,
                   params: Sequence[MappingParams],
                   constrained: bool,
                   tol: float = DEFAULT_TOL,
                   max_iter: int = DEFAULT_MAX_ITER) -> List[np.ndarray]:
    """Residual mappings of every depth synthesized from one state"""
    return [
        compute_mappings(x, params, depth, constrained=constrained, tol=tol, max_iter=max_iter).h_res
        for depth in range(len(params))
    ]
