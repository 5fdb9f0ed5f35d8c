"""Exception hierarchy shared by every module."""


class FunctalError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(FunctalError, ValueError):
    """Matrices or vectors are not conformable."""


class NotSplittingError(FunctalError):
    """The characteristic polynomial has irrational or complex roots.

    Exact arithmetic cannot represent the spectrum; rerun with the
    float64 scalar field.
    """


class DefectiveDecompositionError(FunctalError):
    """A Jordan decomposition could not be assembled at the requested tolerance."""


class SignalError(FunctalError, ValueError):
    """A sampled signal does not live on the expected grid."""


class PreconditionError(FunctalError):
    """A property required by the operation does not hold.

    The failing test report is attached as ``report`` so the caller can
    inspect its certificate.
    """

    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report


class NotFunctionallyObservable(PreconditionError):
    pass


class NotOutputControllable(PreconditionError):
    pass


class SingularProjectionError(FunctalError):
    """The projected Gramian is too ill-conditioned to invert."""


class ConsistencyError(FunctalError):
    """Two tests that must agree did not; almost always a tolerance problem."""


class InputError(FunctalError, ValueError):
    """A system file could not be read, parsed or validated."""
