"""Exception hierarchy shared by the codec, container and CLI."""


class SeedCodecError(Exception):
    """Base class for every error raised by this package."""


class ConfigError(SeedCodecError, ValueError):
    """Block configuration violates the bit budget or parameter bounds."""


class NonMaximalLengthError(SeedCodecError):
    """An LFSR tap set does not produce a cycle of length 2**k - 1."""


class NonFiniteInputError(SeedCodecError, ValueError):
    pass


class ShapeMismatchError(SeedCodecError, ValueError):
    pass


class FormatError(SeedCodecError):
    """Malformed container bytes."""

    def __init__(self, message, tensor=None, block=None):
        self.tensor = tensor
        self.block = block
        context = []
        if tensor is not None:
            context.append(f"tensor {tensor!r}")
        if block is not None:
            context.append(f"block {block}")
        if context:
            message = f"{message} ({', '.join(context)})"
        super().__init__(message)


class BadMagicError(FormatError):
    pass


class UnsupportedVersionError(FormatError):
    pass


class TruncatedPayloadError(FormatError):
    pass


class CorruptBlockError(FormatError):
    pass
