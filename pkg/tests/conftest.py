from __future__ import annotations

import logging

import numpy as np
import pytest

from game_zipf.definitions import GameId
from game_zipf.engines import ConnectFourParams, get_engine
from game_zipf.utils.logger import setup_loggers


@pytest.fixture(scope="session", autouse=True)
def loggers():
    setup_loggers(logging.INFO)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def play(game, actions, params=None):
    """Plays a fixed action sequence from the initial state."""
    engine = get_engine(game)
    s = engine.new_game(params)
    for a in actions:
        s = engine.apply(s, a)
    return s


def random_position(rng, plies, params=None):
    """Connect Four position after `plies` uniformly random moves, or None if the game ended earlier."""
    engine = get_engine(GameId.CONNECT_FOUR)
    s = engine.new_game(params)
    for _ in range(plies):
        legal = engine.legal_actions(s)
        s = engine.apply(s, legal[int(rng.integers(len(legal)))], legal=legal)
        if s.is_terminal:
            return None
    return s


def random_positions(rng, count, plies, params=None):
    positions = []
    while len(positions) < count:
        s = random_position(rng, plies, params)
        if s is not None:
            positions.append(s)
    return positions


SMALL_BOARD = ConnectFourParams(4, 4)
