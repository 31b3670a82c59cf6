"""Error taxonomy shared by the library, the CLI and the HTTP service."""


class GfcError(Exception):
    """Base class for all library errors."""

    code = "error"


class DimensionTooSmallError(GfcError):
    """A spatial dimension is below the 3-cell minimum required by the stencils."""

    code = "dimension-too-small"


class ShapeMismatchError(GfcError):
    """Operands do not share batch/channel/spatial geometry."""

    code = "shape-mismatch"


class NonFiniteValueError(GfcError):
    """NaN or Inf encountered at a module boundary."""

    code = "non-finite-value"


class InvalidPadError(GfcError):
    """Pad width below the minimum of 1."""

    code = "invalid-pad"


class ChannelCountMismatchError(GfcError):
    """Mixer weight count does not match the channel count it is applied to."""

    code = "channel-count-mismatch"


class IndivisibleChannelCountError(GfcError):
    """Selected channel count is not divisible by the spatial dimensionality."""

    code = "indivisible-channel-count"


class NumericalHealthError(GfcError):
    """An internal numerical sanity bound was violated (should never happen)."""

    code = "numerical-health"


class GftFormatError(GfcError):
    """Base class for container-format errors."""

    code = "gft-format"


class BadMagicError(GftFormatError):
    code = "bad-magic"


class UnknownDtypeError(GftFormatError):
    code = "unknown-dtype"


class TruncatedPayloadError(GftFormatError):
    code = "truncated-payload"


class UnsupportedImageFormatError(GfcError):
    """Image file is not binary P5/P6 with maxval 255."""

    code = "unsupported-format"
