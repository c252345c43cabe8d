"""Engine counters collected per solve.

Counting is opt-in: code paths call :func:`current` and skip bookkeeping
when no collector is active.  Each worker gets its own :class:`Counters`
and the results are merged in a fixed order, so totals do not depend on
thread scheduling.
"""

from __future__ import annotations

import contextvars
from contextlib import contextmanager
from dataclasses import asdict, dataclass, fields


@dataclass
class Counters:
    pairwise_sumsets: int = 0
    fft_sumsets: int = 0
    fft_points: int = 0
    oplus_mu_calls: int = 0
    rp_instances: int = 0
    rp_exact_paths: int = 0
    levels_early_stopped: int = 0
    fallback_nodes: int = 0

    def merge(self, other: "Counters") -> None:
        for f in fields(self):
            setattr(self, f.name, getattr(self, f.name) + getattr(other, f.name))

    def as_dict(self) -> dict:
        return asdict(self)


_current: contextvars.ContextVar[Counters | None] = contextvars.ContextVar(
    "partition_fptas_counters", default=None
)


def current() -> Counters | None:
    return _current.get()


@contextmanager
def collecting(counters: Counters | None = None):
    counters = counters if counters is not None else Counters()
    token = _current.set(counters)
    try:
        yield counters
    finally:
        _current.reset(token)
