"""Exception types shared across the pipeline."""


class ForgeError(Exception):
    """Base class for all sceneforge errors."""


class ContractViolation(ForgeError, ValueError):
    """An operation precondition was violated (shape/range mismatch)."""


class AlignmentUnderdetermined(ForgeError):
    """Depth alignment attempted with too little known-region support."""


class ScheduleError(ForgeError, ValueError):
    """A denoiser was driven outside its declared step schedule."""


class PluginFailure(ForgeError):
    """A model plugin call failed; carries the pipeline stage label."""

    def __init__(self, stage: str, message: str):
        super().__init__(f"[{stage}] {message}")
        self.stage = stage


class BundleError(ForgeError):
    """Scene bundle is missing, corrupt, or checksum-mismatched."""


class ConfigError(ForgeError, ValueError):
    """Invalid or contradictory configuration."""
