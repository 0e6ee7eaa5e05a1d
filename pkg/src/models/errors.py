"""
Exception hierarchy shared by every service
"""
from dataclasses import dataclass
from typing import Dict, Optional


class PassError(Exception):
    """Base class for all pipeline errors"""


class ConfigError(PassError):
    """Invalid or missing configuration"""

    def __init__(self, message: str, key: Optional[str] = None):
        self.key = key
        super().__init__(f"{key}: {message}" if key else message)


class InputError(PassError):
    """Input violates an operation's precondition"""


class OffRouteError(InputError):
    """Point lies farther from the route than the lateral tolerance"""

    def __init__(self, x: float, y: float, distance: float, tolerance: float):
        self.x = x
        self.y = y
        self.distance = distance
        self.tolerance = tolerance
        super().__init__(
            f"point ({x:.3f}, {y:.3f}) is {distance:.3f} m off route (tolerance {tolerance:.3f} m)"
        )


class SchemaError(InputError):
    """Malformed trajectory or metric file"""

    def __init__(self, message: str, row: Optional[int] = None, path: Optional[str] = None):
        self.row = row
        self.path = path
        where = ""
        if path:
            where += f"{path}"
        if row is not None:
            where += f" row {row}"
        super().__init__(f"{where}: {message}" if where else message)


class ResamplingError(PassError):
    """Tracks cannot be aligned onto a common time grid"""


class IncompleteTravelError(PassError):
    """Track does not cross the whole event window"""

    def __init__(self, vehicle_id: str, message: str):
        self.vehicle_id = vehicle_id
        super().__init__(f"{vehicle_id}: {message}")


class UndefinedCorrelationError(PassError):
    """Rank correlation of a constant vector"""


class CollisionError(PassError):
    """Non-positive gap between two vehicles in the simulator"""

    def __init__(self, time: float, follower: str, leader: str, gap: float):
        self.time = time
        self.follower = follower
        self.leader = leader
        self.gap = gap
        super().__init__(f"collision at t={time:.2f}s: {follower} -> {leader} gap={gap:.3f} m")


class CalibrationError(PassError):
    """Calibration has no usable events"""


@dataclass(frozen=True)
class PipelineWarning:
    """A recoverable condition collected into results instead of raised"""
    source: str
    message: str

    def to_dict(self) -> Dict[str, str]:
        return {"source": self.source, "message": self.message}
