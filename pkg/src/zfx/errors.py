"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes, see ``zfx.cli``.
"""


class ZfxError(Exception):
    exit_code = 1


class InvalidArgumentError(ZfxError, ValueError):
    exit_code = 1


class ResourceLimitError(ZfxError):
    """An enumeration guard would be exceeded."""

    exit_code = 2

    def __init__(self, what, value, limit):
        super().__init__(f"{what}: {value} exceeds guard {limit} (raise with ZFX_GUARD_OVERRIDE)")
        self.what = what
        self.value = value
        self.limit = limit


class SearchFailure(ZfxError):
    exit_code = 3

    def __init__(self, message, best_eps=None, candidates=0, best_table=None):
        super().__init__(message)
        self.best_eps = best_eps
        self.candidates = candidates
        self.best_table = best_table


class GuaranteeFailure(ZfxError):
    """The greedy derivative procedure ran out of candidates."""

    exit_code = 4

    def __init__(self, message, partial=(), stage=None):
        super().__init__(message)
        self.partial = tuple(partial)
        self.stage = stage


class VerificationFailure(ZfxError):
    exit_code = 4
