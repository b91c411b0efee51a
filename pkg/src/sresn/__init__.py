"""Echo state networks with dynamic stochastic-resonance nodes.

Builds ESNs whose activation is either the classical static tanh or a bank
of bistable stochastic ODEs advanced one Euler step per network step, plus
the full Mackey-Glass prediction benchmark around them: series generation,
teacher-forced training with a minimum-norm least-squares readout,
free-running evaluation, and seed-averaged accuracy/complexity/noise sweeps.
"""

__version__ = "0.1.0"
