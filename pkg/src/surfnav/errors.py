"""Exception types shared across the package."""

from __future__ import annotations


class ScenarioError(ValueError):
    """A scenario file or runtime configuration violates a constraint."""


class SeparationViolationError(RuntimeError):
    """Two robots' virtual coordinates came within the safe radius.

    Exact trajectories keep every pairwise parameter-plane distance strictly
    above the safe radius, so hitting this during a simulation means the
    integration step is too coarse; halve dt and re-run.
    """

    def __init__(self, separation, safe_radius, pair=None, time=None):
        self.separation = float(separation)
        self.safe_radius = float(safe_radius)
        self.pair = pair
        self.time = time
        super().__init__(self._message())

    def _message(self):
        where = ""
        if self.pair is not None:
            where = f" between robots {self.pair[0]} and {self.pair[1]}"
        when = "" if self.time is None else f" at t={self.time:.6g}"
        return (
            f"virtual-coordinate separation {self.separation:.6g}{where}{when}"
            f" is within the safe radius {self.safe_radius:.6g}"
        )

    def with_time(self, time):
        """Copy of this error annotated with the simulation time."""
        if self.time is not None:
            return self
        return SeparationViolationError(
            self.separation, self.safe_radius, pair=self.pair, time=time
        )
