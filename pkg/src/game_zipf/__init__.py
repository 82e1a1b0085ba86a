from __future__ import annotations

__version__ = "0.1.0"

from game_zipf.api import *
from game_zipf.harness import FrequencyTable, HarnessConfig, run_selfplay
from game_zipf.zipfstats import RankCurve, fit_power_law, rank_curve
