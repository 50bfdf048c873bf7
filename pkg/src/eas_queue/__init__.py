"""Steady-state analysis of the discrete-time GI^X/Geo^Y/1 queue (early
arrival system) with a continuous-time limit and a simulation cross-check."""

from .chareq import CharSystem, build_cleared_poly, char_fn, find_interior_roots
from .ctlimit import CtModel, Deterministic, Erlang, Exponential, ct_char_roots, ct_distributions, ct_solve
from .errors import (
    DegreeOverflow,
    EpochKindMismatch,
    IllConditioned,
    InvalidPmf,
    ModelSpecError,
    NotSpecialCase,
    PoleAtArgument,
    QueueError,
    RepeatedRoot,
    RootCountMismatch,
    SingularSystem,
    Unstable,
)
from .pgf import FinitePmf, Geometric, NegBinomial, QueueModel, RationalPgf, build_model, deterministic, pgf_eval, pgf_mean
from .sim import EmpiricalDist, SimConfig, compare, simulate
from .specfile import ModelSpec, emit_spec, load_spec, parse_spec
from .steady import (
    EpochDist,
    SteadySolution,
    arbitrary_dist,
    mean_queue_length,
    pre_arrival_dist,
    solve,
    solve_constants,
    solve_special,
    tail_decay_rate,
)

__all__ = [name for name in dir() if not name.startswith("_")]
