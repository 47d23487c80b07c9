"""Error taxonomy. Everything raised on purpose derives from GenServiceError
so callers can catch one type at the boundary."""


class GenServiceError(Exception):
    pass


class ConfigError(GenServiceError):
    """Invalid configuration or arguments."""


class FormatError(GenServiceError):
    """A file or payload does not match its declared format."""


class SubprocessError(GenServiceError):
    """An out-of-process tool invocation failed."""

    def __init__(self, command: list[str], returncode: int, stderr: str):
        self.command = command
        self.returncode = returncode
        self.stderr = stderr
        super().__init__(
            f"command {' '.join(command)!r} exited {returncode}: {stderr.strip()[:400]}"
        )
