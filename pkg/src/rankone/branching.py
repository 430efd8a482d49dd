"""Multi-type Poisson branching process B_kappa(x).

A particle of type ``x`` has ``Poisson(c psi(x) psi(y) mu(y))`` children of
each type ``y``.  The sampler reports the total progeny (root included) and
the total activity ``sum psi`` over the whole tree.

Three offspring schemes are available and are equal in distribution:

``generation``
    default; for each type ``y`` one Poisson draw per generation with the
    summed intensity ``c psi(y) mu(y) * (activity of the current
    generation)``.  Sums of independent Poissons are Poisson, so this is
    the per-particle, per-type definition evaluated in bulk.
``particle``
    one Poisson draw per particle and per type, literally.
``thinning``
    per particle a single ``Poisson(c psi(x) m1)`` total split over types by
    a multinomial with probabilities ``psi(y) mu(y) / m1``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NotSubcritical, OutOfRange, UnknownRootLabel
from .model import TypeSpace, c_critical, moments
from .rng import as_generator, derive_stream

DEFAULT_CAP = 10**6


@dataclass(frozen=True)
class ProgenyOutcome:
    progeny: int
    total_activity: float
    generations: int
    censored: bool
    root_offspring: int = 0


def _root_index(space: TypeSpace, root_label) -> int:
    try:
        return space.index_of(root_label)
    except KeyError:
        raise UnknownRootLabel(f"type {root_label!r} is not an atom of the space") from None


def sample_progeny(
    space: TypeSpace,
    c: float,
    root_label,
    cap: int = DEFAULT_CAP,
    rng=None,
    method: str = "generation",
) -> ProgenyOutcome:
    """One tree of B_kappa(root), expanded generation by generation.

    Stops as soon as the progeny reaches ``cap`` and flags the outcome as
    censored; the counts then cover every generation drawn so far.
    """
    if cap < 1:
        raise OutOfRange(f"cap must be >= 1, got {cap}")
    if c < 0:
        raise OutOfRange(f"c must be nonnegative, got {c}")
    root = _root_index(space, root_label)
    rng = as_generator(rng)
    psi, mu = space.psi, space.weights
    if method == "generation":
        return _sample_generation(psi, mu, c, root, cap, rng)
    if method in ("particle", "thinning"):
        return _sample_particles(psi, mu, c, root, cap, rng, method == "thinning")
    raise OutOfRange(f"unknown offspring method {method!r}")


def _sample_generation(psi, mu, c, root, cap, rng) -> ProgenyOutcome:
    base = c * psi * mu
    frontier_activity = float(psi[root])
    progeny, total, gens, first = 1, frontier_activity, 0, -1
    while True:
        kids = rng.poisson(base * frontier_activity)
        born = int(kids.sum())
        if first < 0:
            first = born
        if born == 0:
            return ProgenyOutcome(progeny, total, gens, False, first)
        gens += 1
        progeny += born
        frontier_activity = float(kids @ psi)
        total += frontier_activity
        if progeny >= cap:
            return ProgenyOutcome(progeny, total, gens, True, first)


def _sample_particles(psi, mu, c, root, cap, rng, thinning) -> ProgenyOutcome:
    k = psi.shape[0]
    m1 = float(mu @ psi)
    split = psi * mu / m1
    frontier = np.zeros(k, dtype=np.int64)
    frontier[root] = 1
    progeny, total, gens, first = 1, float(psi[root]), 0, -1
    while True:
        nxt = np.zeros(k, dtype=np.int64)
        for x in np.flatnonzero(frontier):
            for _ in range(int(frontier[x])):
                if thinning:
                    nxt += rng.multinomial(rng.poisson(c * psi[x] * m1), split)
                else:
                    nxt += rng.poisson(c * psi[x] * psi * mu)
        born = int(nxt.sum())
        if first < 0:
            first = born
        if born == 0:
            return ProgenyOutcome(progeny, total, gens, False, first)
        gens += 1
        progeny += born
        total += float(nxt @ psi)
        frontier = nxt
        if progeny >= cap:
            return ProgenyOutcome(progeny, total, gens, True, first)


@dataclass(frozen=True)
class ProgenySample:
    """Replica arrays from :func:`sample_many`."""

    progeny: np.ndarray
    total_activity: np.ndarray
    generations: np.ndarray
    censored: np.ndarray
    root_offspring: np.ndarray

    def __len__(self):
        return self.progeny.shape[0]


def sample_many(
    space: TypeSpace,
    c: float,
    root_label,
    reps: int,
    master_seed: int = 0,
    cap: int = DEFAULT_CAP,
    method: str = "generation",
) -> ProgenySample:
    """``reps`` independent trees; replica ``i`` uses stream ``(master_seed, root, i)``."""
    root = _root_index(space, root_label)
    prog = np.empty(reps, dtype=np.int64)
    act = np.empty(reps, dtype=float)
    gens = np.empty(reps, dtype=np.int64)
    cens = np.empty(reps, dtype=bool)
    first = np.empty(reps, dtype=np.int64)
    for i in range(reps):
        out = sample_progeny(
            space, c, root_label, cap, derive_stream(master_seed, "branching", root, i), method
        )
        prog[i], act[i], gens[i] = out.progeny, out.total_activity, out.generations
        cens[i], first[i] = out.censored, out.root_offspring
    return ProgenySample(prog, act, gens, cens, first)


def _check_subcritical(space, c):
    if not c < c_critical(space):
        raise NotSubcritical(f"c={c} is not below c_cr={c_critical(space)}")


def mean_progeny(space: TypeSpace, c: float, root_label) -> float:
    """``E X(x) = 1 + c psi(x) m1 / (1 - c m2)``."""
    _check_subcritical(space, c)
    m = moments(space)
    psi_x = space.psi[_root_index(space, root_label)]
    return 1.0 + c * psi_x * m.m1 / (1.0 - c * m.m2)


def mean_activity(space: TypeSpace, c: float, root_label) -> float:
    """``E Phi(x) = psi(x) / (1 - c m2)``."""
    _check_subcritical(space, c)
    m = moments(space)
    psi_x = space.psi[_root_index(space, root_label)]
    return float(psi_x / (1.0 - c * m.m2))


def empirical_tail(
    space: TypeSpace, c: float, root_label, reps: int, thresholds, master_seed: int = 0
) -> list[tuple[int, float, float]]:
    """Monte Carlo ``P(X > t)`` with binomial standard errors, per threshold."""
    _check_subcritical(space, c)
    if reps < 10_000:
        raise OutOfRange(f"tail estimates need reps >= 10^4, got {reps}")
    prog = sample_many(space, c, root_label, reps, master_seed).progeny
    out = []
    for t in thresholds:
        p = float(np.mean(prog > t))
        out.append((int(t), p, math.sqrt(p * (1.0 - p) / reps)))
    return out


def tail_slope(tail: list[tuple[int, float, float]]) -> float:
    """Decay rate ``-d log P(X > t) / dt`` between the first and last thresholds."""
    (t0, p0, _), (t1, p1, _) = tail[0], tail[-1]
    return -(math.log(p1) - math.log(p0)) / (t1 - t0)
