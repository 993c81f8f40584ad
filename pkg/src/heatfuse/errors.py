"""Exception types shared across the package."""


class HeatfuseError(Exception):
    """Base class for all errors raised by heatfuse."""


class MeshParseError(HeatfuseError):
    """A mesh file could not be parsed.

    Carries the file path and the 1-based line number (ascii formats) or
    byte offset (binary formats) where parsing failed.
    """

    def __init__(self, path, message, line=None, byte_offset=None):
        self.path = str(path)
        self.line = line
        self.byte_offset = byte_offset
        where = ""
        if line is not None:
            where = f", line {line}"
        elif byte_offset is not None:
            where = f", byte {byte_offset}"
        super().__init__(f"{self.path}{where}: {message}")


class MeshValidationError(HeatfuseError):
    """Mesh data violates an invariant; the message names the first violation."""


class ColorRangeError(HeatfuseError):
    """A color component lies outside its declared range."""


class SolverError(HeatfuseError):
    """Eigenvalue solve failed or did not converge."""


class DescriptorError(HeatfuseError):
    """Descriptor computation could not proceed (bad vocabulary, dimensions, ...)."""


class RetrievalError(HeatfuseError):
    """Benchmark harness failure; names the offending shape where possible."""


class CacheError(HeatfuseError):
    """A cache file is missing, corrupt, or inconsistent with its inputs."""


class ConfigError(HeatfuseError):
    """Invalid run configuration."""
