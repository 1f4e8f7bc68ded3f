"""Independent cells, optionally spread over worker processes."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor

from .config import worker_count


def map_cells(fn, cells: list[tuple]) -> list:
    """``[fn(*cell) for cell in cells]``, in input order.

    PMM_DENSITY_THREADS > 1 runs cells in that many processes; results
    are identical either way since every cell seeds its own streams.
    """
    workers = min(worker_count(), len(cells))
    if workers <= 1:
        return [fn(*cell) for cell in cells]
    with ProcessPoolExecutor(workers) as pool:
        return list(pool.map(fn, *zip(*cells)))
