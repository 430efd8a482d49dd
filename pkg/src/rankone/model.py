"""Discrete type spaces for the rank-1 kernel ``kappa(x, y) = c psi(x) psi(y)``.

A :class:`TypeSpace` is a finite list of atoms ``(label, weight, activity)``.
Countable laws are reduced to finite ones by :func:`truncate_family`, which
cuts the support at the smallest ``D`` whose discarded mass is within
``tail_tol`` and renormalizes by ``M_D``.  Everything downstream only ever
sees finite spaces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Iterable, Optional, Sequence

import numpy as np

from .errors import (
    DuplicateLabel,
    EmptySpace,
    NonPositiveActivity,
    NonPositiveWeight,
    OutOfRange,
    TailTooHeavy,
    TolOutOfRange,
)

DEFAULT_TAIL_TOL = 1e-12


@dataclass(frozen=True)
class TypeAtom:
    label: float
    weight: float
    activity: float


@dataclass(frozen=True)
class Moments:
    m1: float
    m2: float


@dataclass(frozen=True)
class ModelParams:
    c: float

    def __post_init__(self):
        if not (self.c > 0 and math.isfinite(self.c)):
            raise OutOfRange(f"kernel constant c must be positive, got {self.c}")


@dataclass(frozen=True)
class TypeSpace:
    """Finite type space: atoms sorted by label with weights summing to one.

    ``tail_rate`` is the exclusive supremum of the ``a`` for which
    ``sum exp(a psi(x)) mu(x)`` is finite over the un-truncated family
    (``None`` when psi is bounded, i.e. every ``a`` works).
    """

    atoms: tuple[TypeAtom, ...]
    tail_rate: Optional[float] = None
    truncation_residual: float = 0.0
    name: str = field(default="custom", compare=False)

    @cached_property
    def labels(self) -> np.ndarray:
        return np.array([a.label for a in self.atoms], dtype=float)

    @cached_property
    def weights(self) -> np.ndarray:
        return np.array([a.weight for a in self.atoms], dtype=float)

    @cached_property
    def psi(self) -> np.ndarray:
        return np.array([a.activity for a in self.atoms], dtype=float)

    def __len__(self):
        return len(self.atoms)

    def index_of(self, label) -> int:
        """Atom index for a type label; raises KeyError if absent."""
        for i, a in enumerate(self.atoms):
            if a.label == label:
                return i
        raise KeyError(label)

    @property
    def is_constant_activity(self) -> bool:
        return bool(np.all(self.psi == self.psi[0]))


def build_space(atoms: Iterable[Sequence[float]], name: str = "custom") -> TypeSpace:
    """Build a finite space from ``(label, weight, activity)`` triples.

    Weights may be unnormalized counts; they are divided by their sum.

    >>> build_space([(1, 2.0, 1.0), (2, 2.0, 2.0)]).weights
    array([0.5, 0.5])
    """
    rows = [tuple(float(v) for v in row) for row in atoms]
    if not rows:
        raise EmptySpace("a type space needs at least one atom")
    seen = set()
    for label, weight, activity in rows:
        if not (label >= 0 and math.isfinite(label)):
            raise OutOfRange(f"type labels must be nonnegative reals, got {label}")
        if label in seen:
            raise DuplicateLabel(f"label {label} appears more than once")
        seen.add(label)
        if not (weight > 0 and math.isfinite(weight)):
            raise NonPositiveWeight(f"atom {label}: weight {weight} is not positive")
        if not (activity > 0 and math.isfinite(activity)):
            raise NonPositiveActivity(f"atom {label}: activity {activity} is not positive")
    rows.sort(key=lambda r: r[0])
    total = math.fsum(r[1] for r in rows)
    return TypeSpace(
        atoms=tuple(TypeAtom(lab, w / total, a) for lab, w, a in rows),
        name=name,
    )


# ---------------------------------------------------------------------------
# Built-in families


@dataclass(frozen=True)
class CountableFamily:
    """A law on ``{start, start+1, ...}`` with activity function ``psi``.

    ``tail(D)`` is the mass strictly above ``D``; ``tail_rate`` is as in
    :class:`TypeSpace` (``0.0`` means no positive rate works).
    """

    name: str
    pmf: Callable[[int], float]
    tail: Callable[[int], float]
    psi: Callable[[int], float]
    tail_rate: Optional[float]
    start: int = 1
    finite_max: Optional[int] = None


def geometric(success: float, psi: str = "identity", psi_value: float = 1.0) -> CountableFamily:
    """Geometric law ``mu(k) = (1-s)^(k-1) s`` on ``{1, 2, ...}``.

    ``psi`` is ``"identity"`` (psi(k)=k), ``"constant"`` (psi(k)=psi_value) or
    ``"square"`` (psi(k)=k**2, which has no exponential moment).
    """
    if not (0 < success <= 1):
        raise OutOfRange(f"geometric success must lie in (0, 1], got {success}")
    q = 1.0 - success
    if psi == "identity":
        psi_fn, rate = (lambda k: float(k)), (math.inf if q == 0 else -math.log(q))
    elif psi == "constant":
        if not psi_value > 0:
            raise NonPositiveActivity(f"constant activity must be positive, got {psi_value}")
        psi_fn, rate = (lambda k: float(psi_value)), None
    elif psi == "square":
        psi_fn, rate = (lambda k: float(k * k)), (math.inf if q == 0 else 0.0)
    else:
        raise OutOfRange(f"unknown psi {psi!r} for geometric family")
    if rate == math.inf:
        rate = None
    return CountableFamily(
        name=f"geometric({success:g},{psi})",
        pmf=lambda k: q ** (k - 1) * success,
        tail=lambda d: q**d,
        psi=psi_fn,
        tail_rate=rate,
        finite_max=1 if q == 0 else None,
    )


def truncate_family(family: CountableFamily, tail_tol: float = DEFAULT_TAIL_TOL) -> TypeSpace:
    """Truncate a countable family to ``{x <= D}`` and renormalize.

    ``D`` is the smallest cut whose discarded mass is ``<= tail_tol``.

    >>> len(truncate_family(geometric(0.7), 1e-12))
    23
    """
    if not (0 < tail_tol < 1):
        raise TolOutOfRange(f"tail_tol must lie in (0, 1), got {tail_tol}")
    if family.tail_rate is not None and family.tail_rate <= 0:
        raise TailTooHeavy(f"{family.name}: sum exp(a psi) mu diverges for every a > 0")
    d = family.start
    if family.finite_max is not None:
        d = family.finite_max
    else:
        while family.tail(d) > tail_tol:
            d += 1
    residual = 0.0 if family.finite_max is not None else family.tail(d)
    ks = range(family.start, d + 1)
    pm = [family.pmf(k) for k in ks]
    m_d = math.fsum(pm)
    atoms = tuple(TypeAtom(float(k), p / m_d, family.psi(k)) for k, p in zip(ks, pm))
    return TypeSpace(
        atoms=atoms,
        tail_rate=family.tail_rate,
        truncation_residual=residual,
        name=family.name,
    )


def homogeneous(activity: float = 1.0) -> TypeSpace:
    """Single-type space; ``activity=1`` gives the Erdos-Renyi graph G(n, c/n)."""
    return build_space([(1, 1.0, activity)], name="homogeneous" if activity == 1 else f"constant({activity:g})")


def two_type(weights=(0.5, 0.5), activities=(1.0, 2.0)) -> TypeSpace:
    return build_space(
        [(1, weights[0], activities[0]), (2, weights[1], activities[1])], name="two-type"
    )


def space_from_descriptor(
    family: str,
    param: Optional[float] = None,
    psi: str = "identity",
    tail_tol: float = DEFAULT_TAIL_TOL,
    psi_value: float = 1.0,
) -> TypeSpace:
    """Resolve a family descriptor (``homogeneous``, ``two-type``, ``geometric``)."""
    if family == "homogeneous":
        return homogeneous(psi_value if psi == "constant" else 1.0)
    if family == "two-type":
        return two_type()
    if family == "geometric":
        if param is None:
            raise OutOfRange("geometric family needs a success parameter")
        return truncate_family(geometric(param, psi, psi_value), tail_tol)
    raise OutOfRange(f"unknown family {family!r}")


# ---------------------------------------------------------------------------
# Moments and the critical constant


def moments(space: TypeSpace) -> Moments:
    w, p = space.weights, space.psi
    return Moments(m1=math.fsum(w * p), m2=math.fsum(w * p * p))


def c_critical(space: TypeSpace) -> float:
    """``1 / E psi(X)^2``: the subcritical regime is ``c < c_critical``."""
    return 1.0 / moments(space).m2


def operator_norm(space: TypeSpace, c: float) -> float:
    """Norm of the rank-1 integral operator, ``c E psi(X)^2``."""
    return c * moments(space).m2
