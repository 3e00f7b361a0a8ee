"""Learnable per-(position, edge type) scores and their softmax normalization.

Positions are 1-based in every public function; row ``p - 1`` of a table holds
position ``p``.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True, eq=False)
class ScoreParams:
    raw: np.ndarray

    @property
    def shape(self) -> tuple[int, int]:
        return self.raw.shape


@dataclass(frozen=True, eq=False)
class ScoreTable:
    s: np.ndarray

    @property
    def num_positions(self) -> int:
        return self.s.shape[0]

    @property
    def num_types(self) -> int:
        return self.s.shape[1]

    @classmethod
    def from_rows(cls, rows: Sequence[Sequence[float]]) -> "ScoreTable":
        """Inject scores directly, bypassing softmax."""
        s = np.array(rows, dtype=np.float64)
        if s.ndim != 2:
            raise ValueError("score table must be 2-D (positions x types)")
        return cls(s)


def init_score_params(num_positions: int, num_types: int, rng: np.random.Generator) -> ScoreParams:
    return ScoreParams(rng.uniform(-0.01, 0.01, size=(num_positions, num_types)))


def materialize_softmax(p: ScoreParams) -> ScoreTable:
    z = p.raw - p.raw.max(axis=1, keepdims=True)
    e = np.exp(z)
    return ScoreTable(e / e.sum(axis=1, keepdims=True))


def score_path(table: ScoreTable, types: Sequence[int], start_position: int = 1) -> float:
    """Product of ``s[start_position + i - 1][types[i]]``, multiplied left to right."""
    if start_position < 1:
        raise ValueError("positions are 1-based")
    if start_position - 1 + len(types) > table.num_positions:
        raise ValueError(
            f"path of {len(types)} edges from position {start_position} "
            f"overflows a {table.num_positions}-position table"
        )
    score = 1.0
    for i, t in enumerate(types):
        score *= table.s[start_position - 1 + i, t]
    return float(score)


def softmax_backward(p: ScoreParams, grad_table: np.ndarray) -> np.ndarray:
    grad_table = np.asarray(grad_table, dtype=np.float64)
    if grad_table.shape != p.raw.shape:
        raise ValueError(f"gradient shape {grad_table.shape} != params shape {p.raw.shape}")
    s = materialize_softmax(p).s
    return s * (grad_table - (grad_table * s).sum(axis=1, keepdims=True))
