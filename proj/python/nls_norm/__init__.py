"""Normalized ground states of -Lap u + lambda u = g(u) with prescribed mass."""

import json

from . import _core
from ._core import ConfigError, SolveError, gn_constant

__all__ = ["check", "solve", "sweep", "shoot", "gn_constant", "run_cli", "power", "ConfigError", "SolveError"]


def power(p, coefficient=1.0):
    return {"kind": "powers", "p": p, "coefficient": coefficient}


def _block(spec):
    return spec if isinstance(spec, str) else json.dumps(spec)


def check(spec, N, rho):
    return json.loads(_core.check(_block(spec), N, rho))


def solve(spec, N, rho, R=30.0, n=4000, auto_scale=False, max_iters=5000):
    return json.loads(_core.solve(_block(spec), N, rho, R, n, auto_scale, max_iters))


def sweep(spec, N, rhos, R=30.0, n=4000, auto_scale=True, warm_start=True, parallelism=1):
    return json.loads(_core.sweep(_block(spec), N, list(rhos), R, n, auto_scale, warm_start, parallelism))


def shoot(spec, N, lam=1.0, R=30.0, n=4000):
    return json.loads(_core.shoot(_block(spec), N, lam, R, n))


def run_cli(*args):
    return _core.run_cli([str(a) for a in args])
