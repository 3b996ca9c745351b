"""Exception types shared across the package."""


class SplitShareError(Exception):
    """Base class for all package errors."""


class ScenarioSyntaxError(SplitShareError):
    """Scenario document is not well-formed (carries line/column when known)."""

    def __init__(self, message, line=None, column=None):
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)
        self.line = line
        self.column = column


class SchemaError(SplitShareError):
    """Scenario document violates the schema (missing/unknown field, bad type)."""


class DanglingReferenceError(SplitShareError):
    """An id in the scenario document refers to nothing."""


class FunctionKeyConflict(SplitShareError):
    """Two modules with the same function key disagree on kind/memory/size."""


class MissingLink(SplitShareError):
    """Network profile has no entry for an ordered device pair."""


class PlacementInfeasible(SplitShareError):
    """No device can host a module within memory/compute constraints."""

    def __init__(self, function_key, message=None):
        super().__init__(message or f"no feasible device for module '{function_key}'")
        self.function_key = function_key


class SearchSpaceTooLarge(SplitShareError):
    """Brute-force enumeration would exceed its candidate guard."""


class ModuleUnplaced(SplitShareError):
    """A required module has no hosting device in the active placement."""


class CapacityExhausted(SplitShareError):
    """Per-(module, device) routing capacity is used up for this trace."""


class RouteInvalid(SplitShareError):
    """A route references a device that does not host the module."""


class GenerationFailed(SplitShareError):
    """Random instance generation exhausted its retry budget."""
