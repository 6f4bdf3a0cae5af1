"""Suppression budget: how many records a run may drop.

The global budget is derived from the minimum fraction of records that
must survive (``p_min``) and is handed out to partitions proportionally
to their size. Charges are integers; a checkpoint stack supports undoing
every charge made since a cut was attempted.
"""

from __future__ import annotations

import math


class BudgetError(ValueError):
    pass


def global_budget(n: int, p_min: float = 0.99, multiplier: float = 1.0) -> int:
    """Maximum records the whole run may suppress.

    ``floor(n * (1 - p_min) * multiplier)``.
    """
    if not 0.0 <= p_min <= 1.0:
        raise BudgetError(f"p_min must lie in [0, 1], got {p_min!r}")
    if multiplier < 0:
        raise BudgetError(f"multiplier must be >= 0, got {multiplier!r}")
    return math.floor(n * (1.0 - p_min) * multiplier)


def allocate_proportional(s_max: int, n: int, sizes) -> list:
    """Per-partition shares of a budget: ``floor(size * s_max / n)``.

    Exact integer arithmetic; the floors mean allocations can sum to less
    than ``s_max``, never more.
    """
    if n <= 0:
        raise BudgetError("n must be positive")
    if s_max < 0:
        raise BudgetError("s_max must be >= 0")
    out = []
    for size in sizes:
        if size < 0 or size > n:
            raise BudgetError(f"partition size {size} out of range for n={n}")
        out.append(size * s_max // n)
    return out


class SuppressionBudget:
    """Mutable charge counter with a checkpoint stack.

    ``remaining`` may go negative: charges are validated by callers, and
    a negative remainder is the signal that a cut's subtree overdrew and
    must be rolled back.
    """

    __slots__ = ("s_max", "charged", "_checkpoints")

    def __init__(self, s_max: int):
        if s_max < 0:
            raise BudgetError(f"s_max must be >= 0, got {s_max!r}")
        self.s_max = int(s_max)
        self.charged = 0
        self._checkpoints = []

    @property
    def remaining(self) -> int:
        return self.s_max - self.charged

    def charge(self, count: int) -> None:
        if count < 0:
            raise BudgetError(f"cannot charge a negative count ({count})")
        self.charged += int(count)

    def checkpoint(self) -> None:
        """Remember the current charge level."""
        self._checkpoints.append(self.charged)

    def rollback(self) -> None:
        """Restore the most recent checkpoint, undoing charges since."""
        if not self._checkpoints:
            raise BudgetError("rollback with no checkpoint on the stack")
        self.charged = self._checkpoints.pop()

    def release(self) -> None:
        """Discard the most recent checkpoint, keeping charges."""
        if not self._checkpoints:
            raise BudgetError("release with no checkpoint on the stack")
        self._checkpoints.pop()

    @property
    def checkpoint_depth(self) -> int:
        return len(self._checkpoints)

    def __repr__(self):
        return (
            f"SuppressionBudget(s_max={self.s_max}, charged={self.charged}, "
            f"checkpoints={len(self._checkpoints)})"
        )
