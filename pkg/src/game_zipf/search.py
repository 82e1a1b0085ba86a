from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Dict, Iterable, List, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from game_zipf.engines import Engine, GameState, get_engine, validate_prefs
from game_zipf.errors import GameRuleError, InvalidConfigError

logger = logging.getLogger("game_zipf")

NORMALIZATION_TOLERANCE = 1e-12
MIN_TEMPERATURE = 1e-12


@dataclass(frozen=True, eq=False)
class PolicyDistribution:
    """Probabilities over the legal actions of one state; `actions[i]` has probability `probs[i]`."""

    actions: Tuple[int, ...]
    probs: np.ndarray

    def __post_init__(self):
        probs = np.asarray(self.probs, dtype=np.float64)
        object.__setattr__(self, "actions", tuple(int(a) for a in self.actions))
        object.__setattr__(self, "probs", probs)
        if probs.shape != (len(self.actions),):
            raise InvalidConfigError(f"{len(self.actions)} actions but probabilities of shape {probs.shape}")
        if len(self.actions) == 0:
            raise InvalidConfigError("A policy needs at least one action")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise InvalidConfigError("Policy probabilities have to be finite and nonnegative")
        if abs(math.fsum(probs) - 1.0) > NORMALIZATION_TOLERANCE:
            raise InvalidConfigError(f"Policy probabilities sum to {math.fsum(probs)!r}, not 1")

    @classmethod
    def uniform(cls, actions: Sequence[int]) -> "PolicyDistribution":
        return cls(tuple(actions), np.full(len(actions), 1.0 / len(actions)))

    def prob(self, a: int) -> float:
        try:
            return float(self.probs[self.actions.index(a)])
        except ValueError:
            return 0.0

    def argmax(self) -> int:
        return self.actions[int(np.argmax(self.probs))]


@dataclass(frozen=True)
class SearchConfig:
    """
    Args:
        simulations: tree-search simulations per move.
        c_puct: weight of the exploration term.
        temperature: exponent 1/T applied to the root visit counts when forming the final policy.
        rollout_count: random playouts averaged per leaf by the rollout evaluator.
        seed: seed of the generator used when the caller does not pass one.
        unvisited_q: Q value assumed for actions that have not been visited yet.
    """

    simulations: int = 300
    c_puct: float = 2.0
    temperature: float = 1.0
    rollout_count: int = 1
    seed: int = 0
    unvisited_q: float = 0.0

    def __post_init__(self):
        if self.simulations < 1:
            raise InvalidConfigError(f"simulations has to be >= 1, got {self.simulations}")
        if self.c_puct <= 0:
            raise InvalidConfigError(f"c_puct has to be positive, got {self.c_puct}")
        if self.temperature < 0 or math.isnan(self.temperature):
            raise InvalidConfigError(f"temperature has to be >= 0, got {self.temperature}")
        if self.rollout_count < 1:
            raise InvalidConfigError(f"rollout_count has to be >= 1, got {self.rollout_count}")


class SearchNode:
    """
    One expanded state of the search tree. Edge statistics are stored per legal action index:
    visit_counts[i] = N(s, a_i) and value_sums[i] = sum of backed-up values from the mover's perspective.
    The root is evaluated once before the first simulation, so after a search
    sum(visit_counts) == simulations == root visits - 1.
    """

    __slots__ = ("state", "state_key", "actions", "prior", "visit_counts", "value_sums", "children", "terminal_value")

    def __init__(self, state: GameState, state_key: bytes, actions: Sequence[int], prior: Optional[PolicyDistribution]):
        self.state = state
        self.state_key = state_key
        self.actions = tuple(actions)
        self.prior = prior
        self.visit_counts = np.zeros(len(self.actions), dtype=np.int64)
        self.value_sums = np.zeros(len(self.actions), dtype=np.float64)
        self.children: Dict[int, SearchNode] = {}
        self.terminal_value: Optional[float] = None

    @classmethod
    def terminal(cls, state: GameState, state_key: bytes) -> "SearchNode":
        node = cls(state, state_key, (), None)
        node.terminal_value = float(state.result.value_for(state.to_move))
        return node

    @property
    def is_terminal(self) -> bool:
        return self.terminal_value is not None

    def q_values(self, unvisited_q: float = 0.0) -> np.ndarray:
        visited = self.visit_counts > 0
        q = np.full(len(self.actions), unvisited_q, dtype=np.float64)
        q[visited] = self.value_sums[visited] / self.visit_counts[visited]
        return q

    def exploration(self, c_puct: float) -> np.ndarray:
        """U(s,a) = c_puct * p(s,a) * sqrt(sum_b N(s,b)) / (1 + N(s,a))."""
        return c_puct * self.prior.probs * math.sqrt(self.visit_counts.sum()) / (1.0 + self.visit_counts)


def puct_select(node: SearchNode, c_puct: float, unvisited_q: float = 0.0) -> int:
    """Returns argmax_a Q(s,a) + U(s,a); ties go to the lowest action index."""
    if not node.actions:
        raise GameRuleError("Cannot select an action at a node without legal actions")
    scores = node.q_values(unvisited_q) + node.exploration(c_puct)
    return node.actions[int(np.argmax(scores))]


class Evaluator:
    """
    Pluggable leaf evaluation: returns a value estimate in [-1, 1] from the perspective of the player to move
    and a prior over the legal actions. Implementations keep no per-search state, randomness comes in
    through `rng`, so one instance can serve many concurrent searches.
    """

    def __call__(self, state: GameState, rng: np.random.Generator) -> Tuple[float, PolicyDistribution]:
        raise NotImplementedError


class RolloutEvaluator(Evaluator):
    """Uniform prior; value = mean exact outcome of `rollout_count` uniformly random playouts."""

    def __init__(self, rollout_count: int = 1):
        if rollout_count < 1:
            raise InvalidConfigError(f"rollout_count has to be >= 1, got {rollout_count}")
        self.rollout_count = rollout_count

    def __call__(self, state: GameState, rng: np.random.Generator) -> Tuple[float, PolicyDistribution]:
        engine = get_engine(state.game)
        actions = engine.legal_actions(state)
        total = 0.0
        for _ in range(self.rollout_count):
            total += self.rollout(engine, state, rng)
        return total / self.rollout_count, PolicyDistribution.uniform(actions)

    @staticmethod
    def rollout(engine: Engine, state: GameState, rng: np.random.Generator) -> float:
        player = state.to_move
        s = state
        while not s.is_terminal:
            legal = engine.legal_actions(s)
            s = engine.apply(s, legal[int(rng.integers(len(legal)))], legal=legal)
        return float(s.result.value_for(player))


class SolverEvaluator(Evaluator):
    """
    Connect Four oracle: exact game-theoretic value from the alpha-beta solver and a uniform prior.
    The solver keeps its transposition table between calls; cached entries only change speed, never values.
    """

    def __init__(self, solver_config=None):
        from game_zipf.solver import Solver, SolverConfig

        self.solver = Solver(solver_config or SolverConfig())

    def __call__(self, state: GameState, rng: np.random.Generator) -> Tuple[float, PolicyDistribution]:
        actions = get_engine(state.game).legal_actions(state)
        return float(self.solver.value(state)), PolicyDistribution.uniform(actions)


def _expand(engine: Engine, state: GameState, evaluator: Evaluator, rng) -> Tuple[SearchNode, float]:
    key = engine.observation_key(state)
    if state.is_terminal:
        node = SearchNode.terminal(state, key)
        return node, node.terminal_value
    value, prior = evaluator(state, rng)
    actions = engine.legal_actions(state)
    if tuple(prior.actions) != tuple(actions):
        raise InvalidConfigError("Evaluator prior does not cover the legal actions of the state")
    return SearchNode(state, key, actions, prior), value


def mcts_search(
    s: GameState, evaluator: Evaluator, cfg: SearchConfig, rng: Optional[np.random.Generator] = None
) -> SearchNode:
    """
    Plain sequential PUCT search without root noise or virtual loss.

    Values are kept from the perspective of the player to move at each node and negated on backup
    whenever the side to move changes between parent and child (Checkers multi-jumps keep the mover).
    Terminal children are backed up with their exact outcome.

    Returns:
        SearchNode: the root, whose visit counts sum to cfg.simulations.
    """
    if s.is_terminal:
        raise GameRuleError("mcts_search needs a non-terminal state")
    rng = rng if rng is not None else np.random.default_rng(cfg.seed)
    engine = get_engine(s.game)
    root, _ = _expand(engine, s, evaluator, rng)

    for _ in range(cfg.simulations):
        node = root
        path: List[Tuple[SearchNode, int]] = []
        while True:
            a = puct_select(node, cfg.c_puct, cfg.unvisited_q)
            idx = node.actions.index(a)
            path.append((node, idx))
            child = node.children.get(idx)
            if child is None:
                child_state = engine.apply(node.state, a, legal=node.actions)
                child, value = _expand(engine, child_state, evaluator, rng)
                node.children[idx] = child
                break
            if child.is_terminal:
                value = child.terminal_value
                break
            node = child

        # value is from the perspective of the mover at `child`
        mover = child.state.to_move
        for parent, idx in reversed(path):
            if parent.state.to_move != mover:
                value = -value
                mover = parent.state.to_move
            parent.visit_counts[idx] += 1
            parent.value_sums[idx] += value

    return root


def temperature_policy(counts: Sequence[float], T: float, actions: Optional[Sequence[int]] = None) -> PolicyDistribution:
    """
    pi(a) = N(a)^(1/T) / sum_b N(b)^(1/T), evaluated in log space with the largest exponent shifted to 0
    so small temperatures do not overflow. T = 0, and any T below MIN_TEMPERATURE, returns the one-hot argmax
    (lowest index on ties).
    """
    counts = np.asarray(counts, dtype=np.float64)
    actions = tuple(range(len(counts))) if actions is None else tuple(actions)
    if T < 0 or math.isnan(T):
        raise InvalidConfigError(f"Temperature has to be >= 0, got {T}")
    if np.any(counts < 0):
        raise InvalidConfigError("Visit counts have to be nonnegative")
    if counts.sum() <= 0:
        raise InvalidConfigError("temperature_policy needs at least one visited action")

    if T < MIN_TEMPERATURE:
        probs = np.zeros(len(counts))
        probs[int(np.argmax(counts))] = 1.0
        return PolicyDistribution(actions, probs)

    log_weights = np.full(len(counts), -np.inf)
    visited = counts > 0
    log_weights[visited] = np.log(counts[visited]) / T
    log_weights -= log_weights.max()
    weights = np.exp(log_weights)
    return PolicyDistribution(actions, weights / weights.sum())


class Policy:
    def select(self, engine: Engine, state: GameState, legal: Sequence[int], rng: np.random.Generator) -> int:
        raise NotImplementedError


class UniformPolicy(Policy):
    def select(self, engine, state, legal, rng) -> int:
        return legal[int(rng.integers(len(legal)))]


class BiasedPolicy(Policy):
    """Plays toy-game branch i with probability prefs[i] at every turn."""

    def __init__(self, prefs: Sequence[float]):
        validate_prefs(prefs)
        self.prefs = np.asarray(prefs, dtype=np.float64)
        self._cumulative = np.cumsum(self.prefs)
        self._cumulative[-1] = 1.0

    def select(self, engine, state, legal, rng) -> int:
        if len(legal) != len(self.prefs):
            raise InvalidConfigError(f"prefs cover {len(self.prefs)} branches but the state has {len(legal)} actions")
        idx = int(np.searchsorted(self._cumulative, rng.random(), side="right"))
        # zero-probability branches can never be drawn, even at the cumulative boundaries
        while self.prefs[idx] == 0:
            idx -= 1
        return legal[idx]


def biased_policy(prefs: Sequence[float]) -> BiasedPolicy:
    return BiasedPolicy(prefs)


class MctsPolicy(Policy):
    """Runs mcts_search every move and samples from the temperature policy of the root visit counts."""

    def __init__(self, cfg: SearchConfig, evaluator: Evaluator):
        self.cfg = cfg
        self.evaluator = evaluator

    def policy(self, state: GameState, rng: np.random.Generator) -> PolicyDistribution:
        root = mcts_search(state, self.evaluator, self.cfg, rng)
        return temperature_policy(root.visit_counts, self.cfg.temperature, root.actions)

    def select(self, engine, state, legal, rng) -> int:
        pi = self.policy(state, rng)
        return pi.actions[int(rng.choice(len(pi.actions), p=pi.probs))]


class LossBreakdown(NamedTuple):
    value_loss: float
    policy_loss: float
    total: float


def composite_loss(z: float, v: float, pi: PolicyDistribution, p: PolicyDistribution) -> LossBreakdown:
    """(z - v)^2 plus the cross-entropy -sum_a pi[a] ln p[a] (natural log)."""
    if pi.actions != p.actions:
        raise InvalidConfigError("pi and p have to be defined over the same actions")
    support = pi.probs > 0
    if np.any(p.probs[support] == 0):
        raise InvalidConfigError("p assigns zero probability to an action that pi plays")
    value_loss = (z - v) ** 2
    policy_loss = float(-np.sum(pi.probs[support] * np.log(p.probs[support])))
    return LossBreakdown(float(value_loss), policy_loss, float(value_loss) + policy_loss)


def optimal_move_probability(pi: PolicyDistribution, optimal_set: Iterable[int]) -> Optional[float]:
    """Probability mass `pi` puts on the optimal actions. None flags a state without optimal actions (skip it)."""
    optimal_set = set(optimal_set)
    if not optimal_set:
        return None
    return float(sum(pi.prob(a) for a in optimal_set))
