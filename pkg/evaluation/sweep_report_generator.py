#!/usr/bin/env python3
"""
Sweep Report Generator
Builds the `table` reports: ratio statistics across dimensions (`--sweep n`)
or across two-level heights (`--sweep M`), next to the predicted centres.
"""

import logging
import time
from typing import Any, Dict, List, Optional

import pandas as pd

from core.config import ExperimentConfig, resolve_family
from core.moments import euclidean_center
from core.sampling import EUCLIDEAN, WEIGHTED, MonteCarloRunner
from core.weights import WeightFamily, WeightKind, weight_stats

N_SWEEP_COLUMNS = [
    "n", "weights", "samples", "median", "mean", "sd",
    "predicted_center", "theorem_center",
]
M_SWEEP_COLUMNS = [
    "M", "n", "samples", "median", "mean", "sd",
    "predicted_center", "theorem_center",
]
DEFAULT_M_SWEEP_N = 10_000


class SweepReportGenerator:
    """
    Generates sweep tables from Monte Carlo runs:
    - median / mean / sd of the GM/AM ratio for each n of a weight family
    - the same statistics for two-level weights across M at fixed n
    Every row is seeded from the run seed, so the table is reproducible.
    """

    def __init__(self, config: ExperimentConfig):
        self.config = config
        self.logger = logging.getLogger(f"SweepReportGenerator.{config.sweep}")
        self.rows: List[Dict[str, Any]] = []

    def generate(self) -> pd.DataFrame:
        start = time.time()
        if self.config.sweep == "M":
            frame = self._sweep_heights()
        else:
            frame = self._sweep_dimensions()
        self.logger.info(f"Built {len(frame)} rows in {time.time() - start:.2f}s")
        return frame

    def _run(self, n: int, family: Optional[WeightFamily]) -> Dict[str, Any]:
        runner = MonteCarloRunner(
            sphere=EUCLIDEAN if family is None else WEIGHTED,
            n=n,
            weights=None if family is None else family.levels(n),
            seed=self.config.seed,
            batch_size=self.config.batch_size,
            workers=self.config.workers,
            progress=self.config.progress,
        )
        state = runner.run(self.config.samples)
        return {
            "samples": state.count,
            "median": state.median,
            "mean": state.mean,
            "sd": state.sd,
        }

    def _sweep_dimensions(self) -> pd.DataFrame:
        family = resolve_family(self.config)
        n_values = [family.fixed_n] if family is not None and family.fixed_n else list(self.config.n_values)
        for n in n_values:
            self.logger.info(f"Sweeping n={n} ({self.config.weights})")
            if family is None:
                predicted: Optional[float] = euclidean_center()
                theorem: Optional[float] = euclidean_center()
            else:
                predicted = weight_stats(family.levels(n)).predicted_center
                theorem = family.theorem_center()
            row = {"n": n, "weights": self.config.weights}
            row.update(self._run(n, family))
            row.update({"predicted_center": predicted, "theorem_center": theorem})
            self.rows.append(row)
        return pd.DataFrame.from_records(self.rows, columns=N_SWEEP_COLUMNS)

    def _sweep_heights(self) -> pd.DataFrame:
        n = self.config.n or DEFAULT_M_SWEEP_N
        for M in self.config.m_values:
            self.logger.info(f"Sweeping M={M:g} at n={n}")
            family = WeightFamily(WeightKind.TWO_LEVEL, float(M))
            row: Dict[str, Any] = {"M": float(M), "n": n}
            row.update(self._run(n, family))
            row.update({
                "predicted_center": weight_stats(family.levels(n)).predicted_center,
                "theorem_center": family.theorem_center(),
            })
            self.rows.append(row)
        return pd.DataFrame.from_records(self.rows, columns=M_SWEEP_COLUMNS)
