"""Typed errors for dataset files, checkpoints, replay and ground-truth access."""


class DatasetFormatError(ValueError):
    """A dataset file cannot be parsed."""


class BadMagicError(DatasetFormatError):
    """The file does not start with the expected magic bytes."""


class VersionMismatchError(DatasetFormatError):
    """The file was written by an unsupported format version."""


class TruncatedFileError(DatasetFormatError):
    """The file ends before the declared content."""


class CheckpointError(ValueError):
    """A checkpoint cannot be read or applied."""


class ArchitectureMismatchError(CheckpointError):
    """Checkpoint parameters do not fit the model they are loaded into."""


class LeakageError(RuntimeError):
    """Ground-truth state was read outside evaluation access."""


class EmptyBufferError(RuntimeError):
    """Sampling was requested from an empty replay buffer."""


class EncodingContractError(ValueError):
    """Records do not match the representation they are encoded with."""
