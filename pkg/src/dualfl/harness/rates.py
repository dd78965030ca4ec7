"""Empirical convergence-rate estimates from error traces."""

from __future__ import annotations

import numpy as np

from ..errors import FitError


def rate_fit(errors, window=None, rounds=None):
    """Fit linear and sublinear convergence summaries.

    Parameters
    ----------
    errors : sequence of float
        Positive error values.
    window : (int, int), optional
        Inclusive range of round indices to use; defaults to all.
    rounds : sequence of int, optional
        Round index of each error; defaults to ``1, 2, ...``.

    Returns
    -------
    linear_factor : float
        ``exp`` of the least-squares slope of ``log(error)`` against round.
    sublinear_sup : float
        ``max(n^2 * error)`` over the window divided by its value at the
        first round of the window.
    """
    e = np.asarray(errors, dtype=float)
    n = np.arange(1, e.size + 1) if rounds is None else np.asarray(rounds, float)
    if n.shape != e.shape:
        raise FitError("rounds and errors differ in length")
    if window is not None:
        lo, hi = window
        keep = (n >= lo) & (n <= hi)
        e, n = e[keep], n[keep]
    if e.size < 5:
        raise FitError(f"window holds {e.size} points, need at least 5")
    if not np.all(e > 0) or not np.all(np.isfinite(e)):
        raise FitError("errors must be positive and finite")
    slope = np.polyfit(n, np.log(e), 1)[0]
    scaled = n * n * e
    return float(np.exp(slope)), float(scaled.max() / scaled[0])
