"""Exception hierarchy shared by the solvers, generators and diagnostics."""


class SdarError(Exception):
    """Base class for every error raised by this package."""


class DimensionMismatch(SdarError, ValueError):
    pass


class ZeroColumn(SdarError, ValueError):
    def __init__(self, j, norm=0.0):
        super().__init__(f"column {j} has norm {norm:.3g}; cannot normalize")
        self.j = j
        self.norm = norm


class BadColumnNorm(SdarError, ValueError):
    def __init__(self, j, norm, expected):
        super().__init__(
            f"column {j} has norm {norm:.6g}, expected sqrt(n) = {expected:.6g}")
        self.j = j
        self.norm = norm


class NonFinite(SdarError, ValueError):
    def __init__(self, location):
        super().__init__(f"non-finite value in {location}")
        self.location = location


class CGBreakdown(SdarError, ArithmeticError):
    """Raised when p'Gp collapses, i.e. the Gram matrix is numerically singular."""


class RankDeficientActiveSet(SdarError, ArithmeticError):
    def __init__(self, active, reason=""):
        active = [int(i) for i in active]
        msg = f"least squares on active set of size {len(active)} is rank deficient"
        if reason:
            msg += f" ({reason})"
        super().__init__(msg)
        self.active = active


class EmptyPath(SdarError, ValueError):
    pass


class TooLarge(SdarError, ValueError):
    """Brute-force enumeration would exceed the subset budget."""


class DegenerateScale(SdarError, ValueError):
    pass


class DenominatorVanishes(SdarError, ZeroDivisionError):
    pass


class ZeroTruth(SdarError, ValueError):
    pass


class EmptyResults(SdarError, ValueError):
    pass
