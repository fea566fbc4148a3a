"""Point-count budgets for exhaustive enumerations."""

from __future__ import annotations

import contextlib
import contextvars

DEFAULT_BUDGET = 10**9

_budget = contextvars.ContextVar("enumeration_budget", default=DEFAULT_BUDGET)


class BudgetExceeded(RuntimeError):
    def __init__(self, needed: int, budget: int, what: str = ""):
        self.needed, self.budget, self.what = needed, budget, what
        super().__init__(f"{what or 'enumeration'} needs {needed} points, budget is {budget}")


def current_budget() -> int:
    return _budget.get()


@contextlib.contextmanager
def enumeration_budget(n: int):
    if n <= 0:
        raise ValueError("budget must be positive")
    token = _budget.set(n)
    try:
        yield
    finally:
        _budget.reset(token)


def check_budget(needed: int, budget: int | None = None, what: str = "") -> None:
    cap = current_budget() if budget is None else budget
    if needed > cap:
        raise BudgetExceeded(needed, cap, what)
