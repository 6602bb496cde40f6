"""
Wall-clock timing for decode runs.
"""
import time


class Stopwatch:
    """Context manager measuring elapsed CPU wall-clock seconds."""

    def __init__(self):
        self.start = 0.0
        self.elapsed = 0.0

    def __enter__(self) -> "Stopwatch":
        self.start = time.perf_counter()
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.elapsed = time.perf_counter() - self.start
