"""Exception types shared by the CLI exit-code mapping."""


class ConfigError(ValueError):
    """Configuration invalid; carries every problem found, not just the first."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


class ScheduleError(ValueError):
    """Regularization schedule violates an admissibility constraint."""

    def __init__(self, message, reasons=()):
        self.reasons = list(reasons)
        super().__init__(message)


class BlowUpError(ArithmeticError):
    def __init__(self, time, magnitude):
        self.time = time
        self.magnitude = magnitude
        super().__init__(f"solution blew up at t={time:.6g} (|coefficient| = {magnitude:.3g})")


class RejectionError(RuntimeError):
    pass
