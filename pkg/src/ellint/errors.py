"""Exception hierarchy shared by every ellint module."""

from __future__ import annotations


class EllintError(Exception):
    """Base class for all errors raised by ellint."""


class NonConvergent(EllintError, ValueError):
    """An infinite product was requested with a base of modulus >= 1."""


class DomainError(EllintError, ValueError):
    pass


class PoleHit(EllintError, ArithmeticError):
    """A factor of a product vanished and zero-tolerant mode was off."""


class NearPole(EllintError, ArithmeticError):
    """Argument lies within the pole-proximity radius of a pole lattice point."""

    def __init__(self, mu: int, nu: int, z: complex | None = None):
        self.mu = mu
        self.nu = nu
        self.z = z
        super().__init__(f"argument {z!r} is near the pole p^-{mu} q^-{nu}")


class DivisionByZero(EllintError, ZeroDivisionError):
    pass


class BudgetExceeded(EllintError, RuntimeError):
    pass


class NonFinite(EllintError, FloatingPointError):
    pass


class PoleTooClose(EllintError, ValueError):
    """A pole family of an integrand comes too close to the unit torus."""

    def __init__(self, factor: str, radius: float, margin: float):
        self.factor = factor
        self.radius = radius
        self.margin = margin
        super().__init__(
            f"{factor}: pole at |monomial| = {radius:.6g} is within {margin} of the torus"
        )


class SamplingExhausted(EllintError, RuntimeError):
    pass


class ArityMismatch(EllintError, ValueError):
    pass


class PrincipalValueUnsupported(EllintError, ValueError):
    pass


class DegenerateDenominator(EllintError, ZeroDivisionError):
    def __init__(self, index, factor: str):
        self.index = index
        self.factor = factor
        super().__init__(f"denominator {factor} vanishes at index {index}")


class NearZeroDenominator(EllintError, ZeroDivisionError):
    def __init__(self, factor: str, value: complex):
        self.factor = factor
        self.value = value
        super().__init__(f"denominator factor {factor} = {value!r} is too close to zero")
