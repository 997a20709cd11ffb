"""Exception hierarchy shared by every layer of the tool."""


class TimingError(Exception):
    """Base class for all errors raised by symtime."""


class ParseError(TimingError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        where = f"line {line}: " if line is not None else ""
        super().__init__(f"{where}{reason}")


class ValidationError(TimingError):
    pass


# -- expression kernel ------------------------------------------------------

class ZeroDenominator(TimingError, ZeroDivisionError):
    pass


class DivisionByZero(TimingError, ZeroDivisionError):
    pass


class UnboundSymbol(TimingError, KeyError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unbound symbol {name!r}")

    def __str__(self):
        return self.args[0]


class DomainError(TimingError, ValueError):
    pass


# -- delay models -----------------------------------------------------------

class UnknownGateType(TimingError):
    pass


class MissingParameter(TimingError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"parameter {name!r} is not bound")


class DirectionMismatch(TimingError):
    pass


# -- netlists and schedules -------------------------------------------------

class MultipleDrivers(ValidationError):
    def __init__(self, signal):
        self.signal = signal
        super().__init__(f"signal {signal!r} has more than one driver")


class UndeclaredSignal(ValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"signal {name!r} is used but never driven")


class UnknownSignal(ValidationError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"unknown signal {name!r}")


class NonAlternatingDirections(ValidationError):
    def __init__(self, signal, line=None):
        self.signal = signal
        self.line = line
        at = f" (line {line})" if line is not None else ""
        super().__init__(f"consecutive transitions of {signal!r} do not alternate{at}")


class NoFeasibleCause(ValidationError):
    def __init__(self, event):
        self.event = event
        super().__init__(f"no earlier input transition explains {event}")


class InconsistentInitialState(ValidationError):
    pass


class NonLogicalTransition(ValidationError):
    pass


class CausalityViolation(TimingError):
    pass


class UnknownEvent(TimingError, KeyError):
    def __str__(self):
        return f"unknown event {self.args[0]!r}"


class UnknownSymbol(TimingError, KeyError):
    def __str__(self):
        return f"unknown symbol {self.args[0]!r}"


# -- export -----------------------------------------------------------------

class UnsupportedOperator(TimingError):
    pass
