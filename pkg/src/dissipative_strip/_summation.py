"""Compensated (Neumaier) summation used wherever a series is reduced."""

import numpy as np


def compensated_accumulate(terms):
    """Neumaier sum of an iterable of equally shaped arrays, in iteration order.

    The reduction order is fixed, which keeps results bit-reproducible for
    identical inputs.
    """
    s = comp = None
    for x in terms:
        if s is None:
            s = np.array(x, dtype=float)
            comp = np.zeros_like(s)
            continue
        t = s + x
        big = np.abs(s) >= np.abs(x)
        comp += np.where(big, (s - t) + x, (x - t) + s)
        s = t
    if s is None:
        raise ValueError("nothing to sum")
    return s + comp


def compensated_sum(terms, axis=0):
    """Neumaier sum of ``terms`` along ``axis`` (elementwise on the other axes)."""
    terms = np.moveaxis(np.asarray(terms, dtype=float), axis, 0)
    return compensated_accumulate(iter(terms))
