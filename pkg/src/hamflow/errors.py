"""Exception types shared across the package."""


class HamflowError(Exception):
    """Base class for all package errors."""


class ConfigError(HamflowError):
    """Invalid run configuration or hamiltonian specification."""


class DomainError(HamflowError):
    """A point lies outside the domain of the requested structure."""


class FlowDivergenceError(HamflowError):
    """The flow left its domain, blew up, or exhausted its step budget.

    `last_good_time` is the last time at which the trajectory was still
    finite and inside the ambient domain.
    """

    def __init__(self, message: str, last_good_time: float):
        super().__init__(f"{message} (last good time t = {last_good_time:.6g})")
        self.last_good_time = float(last_good_time)


class FoliationDegeneracyError(HamflowError):
    """The transported leaf no longer intersects the real locus cleanly.

    Raised on Newton failure, a near-singular intersection system, or a
    branch jump during continuation; signals that the requested time lies
    outside the interval on which the construction is valid.
    """

    def __init__(self, message: str, time: float | None = None,
                 last_good_time: float | None = None,
                 residual: float | None = None):
        parts = [message]
        if time is not None:
            parts.append(f"at t = {time:.6g}")
        if last_good_time is not None:
            parts.append(f"last good time t = {last_good_time:.6g}")
        if residual is not None:
            parts.append(f"residual {residual:.3e}")
        super().__init__("; ".join(parts))
        self.time = time
        self.last_good_time = last_good_time
        self.residual = residual
