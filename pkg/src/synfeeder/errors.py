"""Exception hierarchy shared by every pipeline stage."""


class SynFeederError(Exception):
    """Base class for all errors raised by synfeeder."""


class ParseError(SynFeederError, ValueError):
    """Input bytes could not be decoded (bad JSON/XML/CSV, non-numeric field)."""


class SchemaError(SynFeederError, ValueError):
    """Input decoded fine but violates the expected schema."""


class EmptyGraphError(SynFeederError):
    pass


class GeometryError(SynFeederError, ValueError):
    pass


class EmptyCellError(SynFeederError):
    def __init__(self, substation_id: str):
        super().__init__(f"no road nodes fall in the region of substation {substation_id!r}")
        self.substation_id = substation_id


class DisconnectedError(SynFeederError):
    pass


class NotRadialError(SynFeederError):
    pass


class NoLoadNodesError(SynFeederError):
    pass


class DegenerateAllocationError(SynFeederError):
    pass


class CapacityExceededError(SynFeederError):
    def __init__(self, edge, s_mva: float, max_capacity: float):
        super().__init__(
            f"edge {edge!r} carries {s_mva:.6f} MVA, above the largest option "
            f"({max_capacity:.6f} MVA)"
        )
        self.edge = edge
        self.s_mva = s_mva


class VoltageCollapseError(SynFeederError):
    def __init__(self, edge, radicand: float):
        super().__init__(f"squared voltage became {radicand:.6g} on edge {edge!r}")
        self.edge = edge
        self.radicand = radicand


class ExhaustedError(SynFeederError):
    pass


class PhaseConsistencyError(SynFeederError):
    pass


class IncompleteModelError(SynFeederError):
    pass


class ConfigError(SynFeederError):
    pass
