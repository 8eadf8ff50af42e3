"""Q-network parameters: a two-layer state encoder feeding either an
inner-product head over graph-convolution node embeddings ("graph" mode)
or a plain linear head ("baseline" mode).

Both heads are always allocated and drawn in a fixed order from the run
seed, so two runs with the same seed start from identical parameters
regardless of mode. All math is float64; the models are tiny.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

MODE_GRAPH = "graph"
MODE_BASELINE = "baseline"
MODES = (MODE_GRAPH, MODE_BASELINE)

# (name, shape builder, fan-in builder) in fixed initialization order
_PARAM_SPECS = (
    ("w1", lambda d: (d.d_state, d.hidden), lambda d: d.d_state),
    ("b1", lambda d: (d.hidden,), lambda d: d.d_state),
    ("w2", lambda d: (d.hidden, d.embed), lambda d: d.hidden),
    ("b2", lambda d: (d.embed,), lambda d: d.hidden),
    ("wg", lambda d: (d.n_actions, d.embed), lambda d: d.n_actions),
    ("head_w", lambda d: (d.embed, d.n_actions), lambda d: d.embed),
    ("head_b", lambda d: (d.n_actions,), lambda d: d.embed),
)

PARAM_NAMES = tuple(name for name, _, _ in _PARAM_SPECS)


@dataclass(frozen=True)
class NetDims:
    d_state: int
    hidden: int
    embed: int
    n_actions: int

    def __post_init__(self):
        for field in ("d_state", "hidden", "embed", "n_actions"):
            if getattr(self, field) <= 0:
                raise ValueError(f"{field} must be positive")

    def to_dict(self) -> dict:
        return {"d_state": self.d_state, "hidden": self.hidden,
                "embed": self.embed, "n_actions": self.n_actions}

    @classmethod
    def from_dict(cls, data) -> "NetDims":
        return cls(d_state=int(data["d_state"]), hidden=int(data["hidden"]),
                   embed=int(data["embed"]), n_actions=int(data["n_actions"]))


@dataclass
class QNetwork:
    mode: str
    dims: NetDims
    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    wg: np.ndarray
    head_w: np.ndarray
    head_b: np.ndarray

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode: {self.mode!r}")
        for name, shape_of, _ in _PARAM_SPECS:
            arr = getattr(self, name)
            expected = shape_of(self.dims)
            if arr.shape != expected:
                raise ValueError(f"{name} has shape {arr.shape}, expected {expected}")
            if not np.issubdtype(arr.dtype, np.float64):
                object.__setattr__(self, name, arr.astype(np.float64))

    @classmethod
    def initialize(cls, dims: NetDims, mode: str,
                   rng: np.random.Generator) -> "QNetwork":
        """Uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) draw per tensor."""
        params = {}
        for name, shape_of, fan_in_of in _PARAM_SPECS:
            bound = 1.0 / np.sqrt(fan_in_of(dims))
            params[name] = rng.uniform(-bound, bound, size=shape_of(dims))
        return cls(mode=mode, dims=dims, **params)

    def named_params(self) -> list[tuple[str, np.ndarray]]:
        return [(name, getattr(self, name)) for name in PARAM_NAMES]

    def trained_param_names(self) -> tuple[str, ...]:
        if self.mode == MODE_GRAPH:
            return ("w1", "b1", "w2", "b2", "wg")
        return ("w1", "b1", "w2", "b2", "head_w", "head_b")

    def clone(self) -> "QNetwork":
        return QNetwork(mode=self.mode, dims=self.dims,
                        **{name: getattr(self, name).copy() for name in PARAM_NAMES})

    def copy_params_from(self, other: "QNetwork") -> None:
        """In-place parameter assignment (target-network sync)."""
        if other.dims != self.dims or other.mode != self.mode:
            raise ValueError("cannot sync networks with different shapes or modes")
        for name in PARAM_NAMES:
            np.copyto(getattr(self, name), getattr(other, name))

    def params_equal(self, other: "QNetwork") -> bool:
        return all(np.array_equal(getattr(self, n), getattr(other, n))
                   for n in PARAM_NAMES)
