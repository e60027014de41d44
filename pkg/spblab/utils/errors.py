class SpbError(Exception):
    "Base class for every error raised by spblab."

    def __reduce__(self):
        # subclasses take custom __init__ arguments, so pickle by state
        return (_rebuild, (type(self), self.args, self.__dict__))


class DomainError(SpbError, ValueError):
    "Raised when an input lies outside the domain of an operation."
    pass


class NumericError(SpbError, ArithmeticError):
    "Raised when an iterative solver fails to reach its tolerance."

    def __init__(self, message: str, residual: float = float("nan")):
        super().__init__(f"{message} (residual={residual:.3e})")
        self.residual = residual


class ContractError(SpbError):
    "Raised when a runtime contract of the algorithm is broken."
    pass


class GammaTooLarge(ContractError):
    "Exploration rate exceeded 1/2; beta1 was configured too small."

    def __init__(self, gamma: float):
        super().__init__(f"exploration rate {gamma:.6g} exceeds 1/2")
        self.gamma = gamma


class RTooLarge(ContractError):
    "Observation rate exceeded 1/2; beta1 was configured too small."

    def __init__(self, r: float):
        super().__init__(f"observation rate {r:.6g} exceeds 1/2")
        self.r = r


class InvariantViolation(ContractError):
    "Raised in strict runs when a monitored invariant fails."

    def __init__(self, round_index: int, name: str, detail: str):
        super().__init__(f"round {round_index}: {name} violated ({detail})")
        self.round_index = round_index
        self.name = name
        self.detail = detail


class GameError(SpbError, ValueError):
    "Raised when a partial monitoring game is outside the supported class."
    pass


class NonParetoAction(GameError):
    def __init__(self, action: int):
        super().__init__(f"action {action + 1} is not Pareto optimal")
        self.action = action


class DuplicateAction(GameError):
    def __init__(self, a: int, b: int):
        super().__init__(f"actions {a + 1} and {b + 1} have identical loss rows")
        self.a = a
        self.b = b


class DisconnectedNeighborGraph(GameError):
    def __init__(self, reached: int, k: int):
        super().__init__(f"neighbor graph is disconnected ({reached} of {k} actions reachable)")
        self.reached = reached


class NotGloballyObservable(GameError):
    def __init__(self, edge: tuple, residual: float):
        a, b = edge
        super().__init__(f"loss difference of actions {a + 1} and {b + 1} is not observable "
                         f"(residual={residual:.3e})")
        self.edge = edge
        self.residual = residual


class LinearProgramError(SpbError):
    pass


class Infeasible(LinearProgramError):
    "Raised when the constraints admit no solution."
    pass


class Unbounded(LinearProgramError):
    "Raised when the objective is unbounded over the feasible region."
    pass


class Inconsistent(LinearProgramError, ValueError):
    "Raised when a linear system has no solution within tolerance."

    def __init__(self, residual: float):
        super().__init__(f"linear system is inconsistent (residual={residual:.3e})")
        self.residual = residual


def _rebuild(cls, args, state):
    error = Exception.__new__(cls)
    error.args = args
    error.__dict__.update(state)
    return error

