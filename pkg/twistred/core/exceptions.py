class TwistredError(Exception):
    """Base exception for twistred"""

    pass


class TwistredRuntimeError(RuntimeError, TwistredError):
    """General runtime error"""

    pass


class TwistredValueError(ValueError, TwistredError):
    """General value error"""

    pass


class TwistredTypeError(TypeError, TwistredError):
    """General type error"""

    pass


# exterior algebra


class DimensionMismatchError(TwistredValueError):
    """Operands live on complex spaces of different dimension."""

    pass


class ArityMismatchError(TwistredValueError):
    """Number of vectors does not match the degree of the form."""

    pass


class MixedTypeError(TwistredValueError):
    """A 1-form mixing (1,0) and (0,1) parts where a pure type is required."""

    pass


class GradeMismatchError(TwistredValueError):
    """Forms of different degree compared or combined."""

    pass


# rational fields


class PoleError(TwistredRuntimeError):
    """Evaluation at a zero of a denominator."""

    pass


# torus actions and sampling


class IrregularLevelError(TwistredValueError):
    """The requested level is not a regular value of the moment map."""

    pass


class SamplingError(TwistredRuntimeError):
    """Rejection sampling ran out of retries."""

    pass


class DegenerateFrameError(TwistredRuntimeError):
    """Tangent frame does not have the expected rank."""

    pass


# twist forms


class NotSkewError(TwistredValueError):
    """Matrix is not skew-symmetric, or has odd size."""

    pass


class SingularMatrixError(TwistredValueError):
    """Matrix required to be invertible is singular."""

    pass


class ResourceGuardError(TwistredRuntimeError):
    """Requested computation exceeds the configured size guard."""

    pass


class PreconditionError(TwistredValueError):
    """Input violates a documented precondition."""

    pass


# reduction


class ChargeMismatchError(PreconditionError):
    """Twist charges do not add up to half the charge of the volume form."""

    pass


class OrthogonalityError(PreconditionError):
    """Twist forms are not pairwise orthogonal."""

    pass


class EmptyTwistListError(PreconditionError):
    """Reduction requested without twist forms."""

    pass


class ConventionAuditError(TwistredRuntimeError):
    """No sign/factor convention reaches tolerance."""

    pass


# scenarios


class ScenarioError(TwistredValueError):
    """Unknown scenario or invalid scenario file."""

    pass
