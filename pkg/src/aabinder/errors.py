"""Exception hierarchy shared by all modules."""


class AABinderError(Exception):
    """Base class for every error raised by this package."""


class ValidationError(AABinderError, ValueError):
    """Input data violates a domain invariant."""


# materials
class ZeroAcidicOxides(AABinderError, ZeroDivisionError):
    pass


class ZeroSilica(AABinderError, ZeroDivisionError):
    pass


class RegistryError(ValidationError):
    pass


# mixdesign
class NegativeDosage(ValidationError):
    pass


class DuplicateId(ValidationError):
    pass


class MissingUnitCost(AABinderError, KeyError):
    def __init__(self, material_id):
        super().__init__(material_id)
        self.material_id = material_id

    def __str__(self):
        return f"material {self.material_id!r} has no unit_cost"


# rheology
class SingularSystem(AABinderError, ArithmeticError):
    pass


class NoConvergence(AABinderError, ArithmeticError):
    pass


class EmptyBranch(ValidationError):
    pass


class NoOverlap(ValidationError):
    pass


# thermo
class OutOfRange(ValidationError):
    pass


class UnknownMaterial(AABinderError, KeyError):
    pass


class MissingLOIContext(ValidationError):
    pass


class WindowTooLarge(ValidationError):
    pass


# microanalysis
class ZeroDenominator(AABinderError, ZeroDivisionError):
    pass


class ZeroEarlyRatio(AABinderError, ZeroDivisionError):
    pass


class MismatchedSample(ValidationError):
    pass


# reporting
class ProjectValidation(ValidationError):
    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class MissingSection(AABinderError, LookupError):
    pass
