class HiseError(Exception):
    """Error whose message is printed to stderr as the command's failure reason."""


class ConfigError(HiseError):
    """Invalid run configuration; the message names the offending field."""


class FixtureError(HiseError):
    """Malformed or inconsistent fixture data (carries a line number or record id)."""


class ShapeError(HiseError):
    """Operand shapes do not fit the operation."""


class UnknownOpError(HiseError):
    pass


class NonScalarRootError(HiseError):
    pass


class GradientCheckError(HiseError):
    pass


class EncoderInputError(HiseError):
    pass


class EntitySelectionError(HiseError):
    pass


class MissingPositiveError(HiseError):
    pass


class BankError(HiseError):
    pass


class CheckpointError(HiseError):
    pass


class TrainingError(HiseError):
    def __init__(self, message: str, step: int) -> None:
        super().__init__(f"step {step}: {message}")
        self.step = step


class TapeError(HiseError):
    """A value was used on a tape it was not recorded on."""
