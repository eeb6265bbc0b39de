"""Tail asymptotics and exact simulation for fixed points of the form
R = Q + R_1 + ... + R_N and their multitype versions."""
from . import asymptotics, heavy_tails, models, simulate, tailstats
from .errors import *  # noqa: F401,F403
from .heavy_tails import (Bernoulli, Constant, Empirical, Exponential, Pareto, ParetoInteger,
                          Poisson, RVTail)
from .kernels.rng import RandomStream
from .models import (MG1, AngularMeasure, AtomicMRV, EmpiricalJoint, Independent, IndependentPair,
                     LinkedFloor, MulticlassModel)

__version__ = "0.1.0"
