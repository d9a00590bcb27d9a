"""Exception types shared across the package."""


class DomainError(ValueError):
    """An input state or parameter lies outside the admissible set."""


class ConfigError(ValueError):
    """A configuration is internally inconsistent or incomplete."""


class ReconstructionError(DomainError):
    """A conserved vector implies an inadmissible primitive state.

    Carries the offending cell index and the reconstructed value so solver
    failures can be reported precisely.
    """

    def __init__(self, message, cell=None, value=None):
        super().__init__(message)
        self.cell = cell
        self.value = value


class HyperbolicityError(RuntimeError):
    """The pencil produced eigenvalues with non-negligible imaginary part.

    Carries the state and the full spectrum for diagnosis.
    """

    def __init__(self, message, state=None, spectrum=None):
        super().__init__(message)
        self.state = state
        self.spectrum = spectrum


class InternalInconsistencyError(RuntimeError):
    """A mathematically impossible condition occurred (implementation bug)."""
