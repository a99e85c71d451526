class FixedPolicy(object):
    """Policy stand-in that always pulls the same arm."""


    def __init__(self, arm):
        self.arm = arm
        self.calls = 0


    def choose(self, state, rng):
        self.calls += 1
        return self.arm
