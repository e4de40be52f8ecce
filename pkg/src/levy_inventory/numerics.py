"""Small numerical utilities shared by the solver and the diagnostics."""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

# one-sided expansions near a threshold carry half-integer powers of the step
# (the scale function behaves like x**1.5 corrections at the origin)
HALF_POWERS = (0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5)


def richardson(approx: Callable[[float], float], h0: float, levels: int = 5, ratio: float = 2.0,
               powers: Sequence[float] = HALF_POWERS) -> tuple[float, float]:
    """Extrapolate approx(h) to h -> 0, eliminating error terms h**p for p in ``powers``.

    Returns the extrapolated value and the size of the final correction.
    """
    col = [approx(h0 / ratio**i) for i in range(levels)]
    best, err = col[-1], np.inf
    for p in powers[: levels - 1]:
        factor = ratio**p
        nxt = [(factor * col[i + 1] - col[i]) / (factor - 1.0) for i in range(len(col) - 1)]
        step = abs(nxt[-1] - col[-1])
        col = nxt
        best, err = col[-1], step
    return best, err


def _trim(powers: Sequence[float], lowest: float) -> tuple[float, ...]:
    return tuple(p for p in powers if p >= lowest)


def one_sided_value(f: Callable[[float], float], x: float, side: int, h0: float = 1e-3,
                    levels: int = 5) -> float:
    val, _ = richardson(lambda h: f(x + side * h), h0, levels, powers=_trim(HALF_POWERS, 1.0))
    return val


def one_sided_slope(f: Callable[[float], float], x: float, side: int, h0: float = 1e-3,
                    levels: int = 5) -> float:
    """Derivative from the right (side=+1) or left (side=-1), Richardson-extrapolated."""
    fx = f(x)
    val, _ = richardson(lambda h: (f(x + side * h) - fx) / (side * h), h0, levels,
                        powers=_trim(HALF_POWERS, 0.5))
    return val


def one_sided_curvature(f: Callable[[float], float], x: float, side: int, h0: float = 2e-3,
                        levels: int = 5) -> float:
    fx = f(x)
    val, _ = richardson(lambda h: (f(x + 2 * side * h) - 2 * f(x + side * h) + fx) / h**2, h0, levels,
                        powers=_trim(HALF_POWERS, 0.5))
    return val
