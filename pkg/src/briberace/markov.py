"""Absorbing chain over the fork-length gap.

Transient states are gap values 0..h-1. From state i the next block lands on
the fork with probability ``fork_power[i]`` (moving to i-1, or into the
success state V when i = 0) and on the main chain otherwise (moving to i+1,
or into the failure state W when i = h-1).

h is configurable: h = C+1 models a race abandoned once the gap exceeds the
confirmation depth, while a deeper wall approximates the open-ended race in
which the attacker keeps mining alone beyond the bribed region.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SOLVER_RESIDUAL_TOL = 1e-8
ROW_SUM_TOL = 1e-6

# Bounds for the unbribed tail appended by extend_fork_power.
TAIL_MIN = 16
TAIL_MAX = 512
TAIL_MASS = 1e-12


class ChainError(ValueError):
    """Raised for structurally invalid chains (degenerate or singular)."""


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float).copy()
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class AbsorbingChain:
    """Gap-indexed birth-death chain with success/failure absorption."""

    fork_power: np.ndarray  # per-state probability of the next block extending the fork

    def __post_init__(self) -> None:
        object.__setattr__(self, "fork_power", _frozen(self.fork_power))
        if self.fork_power.ndim != 1 or self.fork_power.size < 1:
            raise ChainError("fork_power must be a non-empty vector")
        if np.any(self.fork_power <= 0.0) or np.any(self.fork_power >= 1.0):
            raise ChainError("fork power must lie strictly inside (0, 1) at every state")

    @property
    def h(self) -> int:
        return self.fork_power.size

    @property
    def main_power(self) -> np.ndarray:
        return 1.0 - self.fork_power


@dataclass(frozen=True, eq=False)
class CanonicalForm:
    """Transient-to-transient block Q and transient-to-absorbing block G.

    G columns are ordered (success, failure).
    """

    Q: np.ndarray
    G: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "Q", _frozen(self.Q))
        object.__setattr__(self, "G", _frozen(self.G))
        rows = np.hstack([self.Q, self.G]).sum(axis=1)
        if np.max(np.abs(rows - 1.0)) > 1e-9:
            raise ChainError("canonical form rows must sum to 1")


@dataclass(frozen=True, eq=False)
class AbsorptionAnalysis:
    """Fundamental matrix N, expected step counts e, absorption probabilities B."""

    N: np.ndarray
    e: np.ndarray
    B: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "N", _frozen(self.N))
        object.__setattr__(self, "e", _frozen(self.e))
        object.__setattr__(self, "B", _frozen(self.B))


def build_base_chain(scenario, per_state_fork_power=None) -> AbsorbingChain:
    """Build the race chain for a scenario.

    ``per_state_fork_power`` parameterizes the per-state fork share (length
    may exceed C+1 to model states beyond the bribed region); omitted, it
    defaults to the attacker mining alone at every state 0..C.
    """
    if per_state_fork_power is None:
        per_state_fork_power = np.full(scenario.confirmations + 1, scenario.mu)
    return AbsorbingChain(np.asarray(per_state_fork_power, dtype=float))


def extend_fork_power(core: np.ndarray, mu: float, depth: int | None = None) -> np.ndarray:
    """Append unbribed tail states (attacker mining alone) past the core region.

    The default depth makes the truncated tail mass below TAIL_MASS, so the
    finite wall is numerically indistinguishable from an open-ended race.
    """
    if depth is None:
        rho = mu / (1.0 - mu)
        if rho >= 1.0:
            depth = TAIL_MAX
        else:
            depth = int(min(TAIL_MAX, max(TAIL_MIN, math.ceil(math.log(TAIL_MASS) / math.log(rho)))))
    return np.concatenate([np.asarray(core, dtype=float), np.full(depth, mu)])


def canonical_form(chain: AbsorbingChain) -> CanonicalForm:
    h = chain.h
    Q = np.zeros((h, h))
    G = np.zeros((h, 2))
    for i in range(h):
        down, up = chain.fork_power[i], 1.0 - chain.fork_power[i]
        if i == 0:
            G[i, 0] = down
        else:
            Q[i, i - 1] = down
        if i == h - 1:
            G[i, 1] = up
        else:
            Q[i, i + 1] = up
    return CanonicalForm(Q, G)


def fundamental_matrix(cf: CanonicalForm) -> np.ndarray:
    """Expected visit counts N = (I - Q)^{-1} via a dense LU solve."""
    h = cf.Q.shape[0]
    eye = np.eye(h)
    try:
        N = np.linalg.solve(eye - cf.Q, eye)
    except np.linalg.LinAlgError as exc:
        raise ChainError("transient block is singular; chain is not absorbing") from exc
    residual = np.max(np.abs((eye - cf.Q) @ N - eye))
    if residual >= SOLVER_RESIDUAL_TOL:
        raise ChainError(f"solve residual {residual:.3e} exceeds {SOLVER_RESIDUAL_TOL}")
    return N


def expected_steps(N: np.ndarray) -> np.ndarray:
    return N @ np.ones(N.shape[0])


def absorption_probs(N: np.ndarray, G: np.ndarray) -> np.ndarray:
    B = N @ G
    if np.max(np.abs(B.sum(axis=1) - 1.0)) > ROW_SUM_TOL:
        raise ChainError("absorption probabilities must sum to 1 per start state")
    return B


def analyze(chain: AbsorbingChain) -> AbsorptionAnalysis:
    """Full absorption analysis of a chain."""
    cf = canonical_form(chain)
    N = fundamental_matrix(cf)
    return AbsorptionAnalysis(N, expected_steps(N), absorption_probs(N, cf.G))


def catchup_prob(mu_eff: float, lambda_eff: float, i: int) -> float:
    """Probability that the fork ever closes a deficit of i+1 blocks when the
    per-block odds stay fixed at mu_eff vs lambda_eff (open-ended race)."""
    if mu_eff <= 0 or lambda_eff < 0:
        raise ValueError("powers must be positive")
    if mu_eff >= lambda_eff:
        return 1.0
    return (mu_eff / lambda_eff) ** (i + 1)
