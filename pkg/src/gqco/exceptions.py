"""Error types shared across the package.

Plain ``ValueError`` is used for domain errors (bad arguments, contract
violations). The two classes below exist so the CLI can map failures to
distinct exit codes (2 for configuration, 3 for resource limits).
"""


class GqcoError(Exception):
    """Base class for package-specific errors."""


class ConfigurationError(GqcoError):
    """Invalid or inconsistent configuration (missing expert, bad config file)."""


class ResourceError(GqcoError):
    """Request exceeds a hard resource bound (e.g. brute force beyond 2^24)."""
