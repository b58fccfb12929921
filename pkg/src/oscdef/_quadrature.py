"""Composite Gauss-Legendre panel grids and chunked parallel reduction."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor

import numpy as np

__all__ = ["gauss_panels", "panels_for", "map_reduce_chunks", "set_default_threads"]

_DEFAULT_THREADS = max(1, min(8, os.cpu_count() or 1))


def set_default_threads(n: int | None) -> None:
    global _DEFAULT_THREADS
    if n is not None:
        _DEFAULT_THREADS = max(1, int(n))


def gauss_panels(radius: float, panels: int, order: int, center: float = 0.0):
    """Nodes and weights of a composite Gauss-Legendre rule on
    ``[center - radius, center + radius]`` with ``panels`` equal panels."""
    nodes_ref, weights_ref = np.polynomial.legendre.leggauss(order)
    edges = np.linspace(center - radius, center + radius, panels + 1)
    half = 0.5 * (edges[1:] - edges[:-1])
    mid = 0.5 * (edges[1:] + edges[:-1])
    nodes = (mid[:, None] + half[:, None] * nodes_ref[None, :]).ravel()
    weights = (half[:, None] * weights_ref[None, :]).ravel()
    return nodes, weights


def panels_for(radius: float, conj_radius: float, order: int) -> int:
    """Panel count so the rule keeps >= 4 points per oscillation period
    of ``exp(i t u)`` with ``|u| <= conj_radius`` at the panel scale."""
    if conj_radius <= 0:
        return 1
    points_needed = 4.0 * (2.0 * radius) * conj_radius / (2.0 * math.pi)
    return max(1, math.ceil(points_needed / order))


def map_reduce_chunks(n_items: int, chunk: int, fn, threads: int | None = None):
    """Sum ``fn(lo, hi)`` over chunks of ``range(n_items)``.

    ``fn`` must be pure; chunks evaluate on a thread pool (numpy kernels
    release the GIL) and the reduction order is fixed, so results are
    deterministic up to floating point associativity of a fixed split.
    """
    ranges = [(lo, min(lo + chunk, n_items)) for lo in range(0, n_items, chunk)]
    nthreads = _DEFAULT_THREADS if threads is None else max(1, threads)
    if nthreads == 1 or len(ranges) == 1:
        results = [fn(lo, hi) for lo, hi in ranges]
    else:
        with ThreadPoolExecutor(max_workers=nthreads) as pool:
            results = list(pool.map(lambda r: fn(*r), ranges))
    total = results[0]
    for r in results[1:]:
        total = total + r
    return total
