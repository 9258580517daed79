"""
LP - Exact Rational Simplex
Dense tableau over Fractions with Bland's rule, for max c·x s.t. Ax ≤ b, x ≥ 0, b ≥ 0
"""
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Optional, Sequence
import logging

from .config import DEFAULT_CONFIG, FAQConfig
from .errors import FAQError, SizeLimitError

logger = logging.getLogger("faq.lp")


class UnboundedLPError(FAQError):
    exit_code = 2


@dataclass
class LPResult:
    value: Fraction
    primal: List[Fraction]          # x
    dual: List[Fraction]            # one multiplier per row of A
    pivots: int


class SimplexTableau:
    """
    Rows hold [A | I | b]; the objective row holds reduced costs c_j - c_B B⁻¹A_j.
    The origin is feasible because b ≥ 0, so no first phase is needed.
    """

    def __init__(self, c: Sequence, A: Sequence[Sequence], b: Sequence):
        self.m = len(A)
        self.n = len(c)
        self.rows: List[List[Fraction]] = []
        for i, row in enumerate(A):
            if len(row) != self.n:
                raise ValueError(f"row {i} has {len(row)} columns, expected {self.n}")
            if Fraction(b[i]) < 0:
                raise ValueError("right-hand side must be nonnegative")
            slack = [Fraction(int(i == k)) for k in range(self.m)]
            self.rows.append([Fraction(a) for a in row] + slack + [Fraction(b[i])])
        self.cost = [Fraction(x) for x in c] + [Fraction(0)] * self.m
        self.value = Fraction(0)
        self.basis = list(range(self.n, self.n + self.m))
        self.pivots = 0

    def pivot(self, i: int, j: int) -> None:
        logger.debug("pivot: x%d leaves, x%d enters", self.basis[i], j)
        row = self.rows[i]
        piv = row[j]
        self.rows[i] = row = [a / piv for a in row]
        for k in range(self.m):
            if k != i and self.rows[k][j] != 0:
                f = self.rows[k][j]
                self.rows[k] = [a - f * r for a, r in zip(self.rows[k], row)]
        f = self.cost[j]
        self.cost = [a - f * r for a, r in zip(self.cost, row[:-1])]
        self.value += f * row[-1]
        self.basis[i] = j
        self.pivots += 1

    def bland_step(self) -> str:
        entering = next((j for j in range(self.n + self.m) if self.cost[j] > 0), None)
        if entering is None:
            return "optimal"
        candidates = [(self.rows[i][-1] / self.rows[i][entering], self.basis[i], i)
                      for i in range(self.m) if self.rows[i][entering] > 0]
        if not candidates:
            return "unbounded"
        _, _, leaving = min(candidates)
        self.pivot(leaving, entering)
        return "go_on"

    def solve(self) -> LPResult:
        while True:
            status = self.bland_step()
            if status == "optimal":
                break
            if status == "unbounded":
                raise UnboundedLPError("linear program is unbounded")
        primal = [Fraction(0)] * self.n
        for i, var in enumerate(self.basis):
            if var < self.n:
                primal[var] = self.rows[i][-1]
        dual = [-self.cost[self.n + i] for i in range(self.m)]
        return LPResult(value=self.value, primal=primal, dual=dual, pivots=self.pivots)


def maximize(c: Sequence, A: Sequence[Sequence], b: Sequence,
             config: Optional[FAQConfig] = None) -> LPResult:
    config = config or DEFAULT_CONFIG
    if len(c) > config.lp_variable_cap:
        raise SizeLimitError("LP variables", len(c), config.lp_variable_cap)
    return SimplexTableau(c, A, b).solve()
