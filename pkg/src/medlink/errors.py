"""Exception types raised across the package."""
from __future__ import annotations


class MedlinkError(Exception):
    """Base class for all package errors."""

    exit_code = 1


class InputError(MedlinkError, ValueError):
    """Bad input geometry or parameters (CLI exit code 2)."""

    exit_code = 2


class MalformedLoopError(InputError):
    pass


class DegenerateTripleError(InputError):
    pass


class ParameterError(InputError):
    pass


class OrientationError(InputError):
    pass


class ValidationError(InputError):
    """Configuration failed validation.

    ``regions`` names the offending region ids, ``locations`` holds
    coordinates of the offending contact or crossing points when known.
    """

    def __init__(self, message, regions=(), locations=()):
        super().__init__(message)
        self.regions = tuple(regions)
        self.locations = tuple(tuple(map(float, p)) for p in locations)

    def to_dict(self):
        return {
            "error": type(self).__name__,
            "message": str(self),
            "regions": list(self.regions),
            "locations": [list(p) for p in self.locations],
        }


class ContainmentError(ValidationError):
    pass


class ResolutionError(MedlinkError):
    """Sampling too coarse (or grid too large); exit code 3."""

    exit_code = 3

    def __init__(self, message, suggested_spacing=None):
        super().__init__(message)
        self.suggested_spacing = suggested_spacing


class ResourceError(ResolutionError):
    pass


class NotLinkedError(MedlinkError):
    pass


class UndefinedLinkingError(MedlinkError):
    pass


class ConsistencyError(MedlinkError):
    """Internal invariant broken (exit code 1)."""
