"""Exception taxonomy shared across the package.

Every error carries a short machine-readable ``code`` so the CLI layer and
the network service can map failures to exit codes / protocol error lines
without string matching.
"""
from __future__ import annotations


class SegctlError(Exception):
    """Base class for all package errors."""

    code = "error"


class UnreadableFileError(SegctlError):
    code = "unreadable-file"


class MalformedHeaderError(SegctlError):
    code = "malformed-header"


class UnsupportedBitDepthError(SegctlError):
    code = "unsupported-bit-depth"


class TruncatedPayloadError(SegctlError):
    code = "truncated-payload"


class DimensionMismatchError(SegctlError):
    code = "dimension-mismatch"


class NonFiniteFieldError(SegctlError):
    code = "non-finite-field"


class EmptySeedError(SegctlError):
    code = "empty-seeds"


class UnreachedVoxelError(SegctlError):
    code = "unreached-voxel"


class StrokeBoundsError(SegctlError):
    code = "stroke-out-of-bounds"


class UnknownLabelError(SegctlError):
    code = "unknown-label"


class ImpulseSignError(SegctlError):
    """Raised when an impulse would be applied where the accumulated input
    does not actually support the stroked label (accumulation inconsistency)."""

    code = "impulse-sign"


class LabelCoverageError(SegctlError):
    code = "label-coverage"


class MalformedLogError(SegctlError):
    code = "malformed-log"


class ReplayChecksumError(SegctlError):
    """A replayed session diverged from a snapshot recorded in its log."""

    code = "replay-checksum"


class ConfigDigestError(SegctlError):
    """Log header digest does not match the configuration it carries."""

    code = "config-digest"


class ProtocolError(SegctlError):
    code = "protocol"
