class SchedulingError(Exception):
    """Base class for every error raised by the scheduling library."""


class InvalidInstance(SchedulingError):
    pass


class InvalidSchedule(SchedulingError):
    def __init__(self, violations):
        self.violations = list(violations)
        details = '; '.join(str(v) for v in self.violations)
        super().__init__(f'Schedule is invalid: {details}')


class InfeasibleSchedule(SchedulingError):
    """A schedule breaks the nurse overtime limit in at least one scenario."""


class OvertimeLimitExceeded(InfeasibleSchedule):
    def __init__(self, overtime, limit):
        self.overtime = overtime
        self.limit = limit
        super().__init__(f'Nurse overtime {overtime} exceeds the limit of {limit} minutes')


class InstanceTooLarge(SchedulingError):
    pass


class Infeasible(SchedulingError):
    """No candidate schedule satisfies the overtime limit."""


class NoConvergence(SchedulingError):
    def __init__(self, iterations, schedule=None, report=None):
        self.iterations = iterations
        self.schedule = schedule
        self.report = report
        super().__init__(f'No consensus after {iterations} iterations')


class ZeroMean(SchedulingError):
    pass


class GenerationExhausted(SchedulingError):
    pass


class TooFewSamples(SchedulingError):
    pass


class ZeroActual(SchedulingError):
    pass
