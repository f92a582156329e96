"""Exception hierarchy. The CLI maps structural errors to exit 3 and contract errors to exit 2."""


class LocalForgeError(Exception):
    pass


class StructuralError(LocalForgeError):
    """Malformed input: bad graph/labeling/partition files, uncovered vertices, out-of-range ids."""


class ContractError(LocalForgeError):
    """A precondition or output contract of an algorithm does not hold."""


class SeparationError(ContractError):
    pass


class AlphabetError(ContractError):
    pass


class SizeLimitError(ContractError):
    pass


class CapacityError(ContractError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness


class SearchError(ContractError):
    def __init__(self, message: str, witness=None):
        super().__init__(message)
        self.witness = witness
