"""Time sources: real wall-clock for benchmarks, virtual clock for tests.

Everything latency-bearing (ledger pipeline, sequencer stamps, payload
timestamps) reads time through one of these, so a run is reproducible
bit-for-bit under the simulated clock: sleeping just advances virtual time.
"""

from __future__ import annotations

import time


class WallClock:
    """Monotonic milliseconds since construction; sleeps for real."""

    def __init__(self) -> None:
        self._t0 = time.perf_counter()

    def now_ms(self) -> float:
        return (time.perf_counter() - self._t0) * 1000.0

    def sleep_until(self, deadline_ms: float) -> None:
        delta = deadline_ms - self.now_ms()
        if delta > 0:
            time.sleep(delta / 1000.0)

    def epoch_ms(self) -> int:
        return int(time.time() * 1000)


class SimulatedClock:
    """Virtual integer milliseconds; single-threaded by design."""

    def __init__(self, start_ms: int = 0) -> None:
        self._now = int(start_ms)

    def now_ms(self) -> int:
        return self._now

    def advance(self, delta_ms: int) -> None:
        if delta_ms < 0:
            raise ValueError("cannot advance time backwards")
        self._now += int(delta_ms)

    def sleep_until(self, deadline_ms: float) -> None:
        if deadline_ms > self._now:
            self._now = int(deadline_ms)

    def epoch_ms(self) -> int:
        return self._now
