"""Dempster-Shafer belief calculus on small discrete frames.

A frame of discernment is the exhaustive, mutually exclusive value set of
one attribute.  Subsets of a frame are bit patterns over the declared value
order, so intersection, subset and complement tests are single integer
operations.  Mass functions are sparse: only focal elements are stored, with
the unassigned remainder held explicitly on the full frame (ignorance).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Iterator

MAX_FRAME_SIZE = 16
MASS_TOL = 1e-9
CONFLICT_EPS = 1e-12


class ConflictError(ArithmeticError):
    """Total conflict: Dempster normalization denominator is (near) zero."""


class FrameMismatchError(ValueError):
    """Operands live on different frames of discernment."""


@dataclass(frozen=True)
class Frame:
    """One attribute together with its ordered, exhaustive value set."""

    attribute: str
    values: tuple[str, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError(f"frame {self.attribute!r} has no values")
        if len(self.values) > MAX_FRAME_SIZE:
            raise ValueError(
                f"frame {self.attribute!r} has {len(self.values)} values; "
                f"maximum is {MAX_FRAME_SIZE}"
            )
        if len(set(self.values)) != len(self.values):
            raise ValueError(f"frame {self.attribute!r} has duplicate values")
        object.__setattr__(self, "values", tuple(self.values))

    @property
    def size(self) -> int:
        return len(self.values)

    @property
    def theta_bits(self) -> int:
        return (1 << len(self.values)) - 1

    def index(self, value: str) -> int:
        try:
            return self.values.index(value)
        except ValueError:
            raise ValueError(
                f"value {value!r} is not in frame {self.attribute!r}"
            ) from None

    def singleton(self, value: str) -> "HypSubset":
        return HypSubset(self, 1 << self.index(value))

    def subset(self, values: Iterable[str]) -> "HypSubset":
        bits = 0
        for v in values:
            bits |= 1 << self.index(v)
        return HypSubset(self, bits)

    def theta(self) -> "HypSubset":
        return HypSubset(self, self.theta_bits)


@dataclass(frozen=True)
class HypSubset:
    """A subset of one frame's hypotheses, encoded as a bit pattern."""

    frame: Frame
    bits: int

    def __post_init__(self) -> None:
        if self.bits < 0 or self.bits & ~self.frame.theta_bits:
            raise ValueError(
                f"bit pattern {self.bits:#x} exceeds frame "
                f"{self.frame.attribute!r} of size {self.frame.size}"
            )

    def members(self) -> tuple[str, ...]:
        return tuple(
            v for i, v in enumerate(self.frame.values) if self.bits >> i & 1
        )

    @property
    def is_empty(self) -> bool:
        return self.bits == 0

    @property
    def is_theta(self) -> bool:
        return self.bits == self.frame.theta_bits

    def __contains__(self, value: str) -> bool:
        return bool(self.bits >> self.frame.index(value) & 1)

    def __len__(self) -> int:
        return bin(self.bits).count("1")

    def __and__(self, other: "HypSubset") -> "HypSubset":
        self._check(other)
        return HypSubset(self.frame, self.bits & other.bits)

    def __or__(self, other: "HypSubset") -> "HypSubset":
        self._check(other)
        return HypSubset(self.frame, self.bits | other.bits)

    def issubset(self, other: "HypSubset") -> bool:
        self._check(other)
        return not self.bits & ~other.bits

    def complement(self) -> "HypSubset":
        return HypSubset(self.frame, self.frame.theta_bits & ~self.bits)

    def _check(self, other: "HypSubset") -> None:
        if self.frame != other.frame:
            raise FrameMismatchError(
                f"subsets on different frames: {self.frame.attribute!r} "
                f"vs {other.frame.attribute!r}"
            )

    def __repr__(self) -> str:
        return f"{{{','.join(self.members())}}}@{self.frame.attribute}"


def negate_subset(frame: Frame, a: HypSubset) -> HypSubset:
    """Set-theoretic negation of a conclusion: evidence against a hypothesis
    set becomes evidence for its complement within the frame."""
    if a.frame != frame:
        raise FrameMismatchError("subset does not belong to the given frame")
    if a.is_empty:
        raise ValueError("cannot negate the empty subset")
    if a.is_theta:
        raise ValueError(
            f"cannot negate the whole frame {frame.attribute!r}: "
            "the complement would be empty"
        )
    return a.complement()


class MassFunction:
    """Sparse exact belief assignment over focal subsets of one frame.

    Invariants: masses lie in (0, 1] and sum to 1 within tolerance, the empty
    set is never focal, and the frame subset (ignorance) is stored explicitly
    whenever it carries mass.
    """

    __slots__ = ("frame", "_focal")

    def __init__(
        self,
        frame: Frame,
        focal: dict[HypSubset, float] | dict[int, float] | Iterable,
    ) -> None:
        self.frame = frame
        masses: dict[int, float] = {}
        items = focal.items() if isinstance(focal, dict) else focal
        for subset, mass in items:
            bits = subset.bits if isinstance(subset, HypSubset) else int(subset)
            if isinstance(subset, HypSubset) and subset.frame != frame:
                raise FrameMismatchError(
                    f"focal element on frame {subset.frame.attribute!r}, "
                    f"expected {frame.attribute!r}"
                )
            if bits == 0:
                raise ValueError("the empty set cannot be a focal element")
            if bits & ~frame.theta_bits:
                raise ValueError("focal element exceeds the frame")
            if bits in masses:
                raise ValueError("duplicate focal element")
            mass = float(mass)
            if not 0.0 < mass <= 1.0 + MASS_TOL:
                raise ValueError(f"mass {mass} outside (0, 1]")
            masses[bits] = mass
        total = math.fsum(masses.values())
        if abs(total - 1.0) > MASS_TOL:
            raise ValueError(f"masses sum to {total}, expected 1")
        # canonical order: singletons first, the full frame last
        self._focal = dict(
            sorted(masses.items(), key=lambda kv: (bin(kv[0]).count("1"), kv[0]))
        )

    @classmethod
    def vacuous(cls, frame: Frame) -> "MassFunction":
        """Total ignorance: all mass on the full frame."""
        return cls(frame, {frame.theta_bits: 1.0})

    @classmethod
    def from_rankings(
        cls,
        rankings: list[tuple[HypSubset, int]],
        relevance: int,
    ) -> "MassFunction":
        """Normalize expert 1-10 rankings into masses.

        Each ranked subset receives ranking * (1 - m(theta)) / sum(rankings),
        where m(theta) = 1 - relevance/10 is the declared ignorance.
        Relevance 0 is tolerated and produces the vacuous assignment.
        """
        if not rankings:
            raise ValueError("rankings must be nonempty")
        frame = rankings[0][0].frame
        for subset, rank in rankings:
            if subset.frame != frame:
                raise FrameMismatchError("rankings mix different frames")
            if not isinstance(rank, int) or not 1 <= rank <= 10:
                raise ValueError(f"ranking {rank!r} outside 1..10")
        if not isinstance(relevance, int) or not 0 <= relevance <= 10:
            raise ValueError(f"relevance {relevance!r} outside 0..10")
        if relevance == 0:
            return cls.vacuous(frame)
        # exact rational arithmetic so 9,3 @ relevance 8 yields 0.6/0.2/0.2
        committed = Fraction(relevance, 10)
        total = sum(rank for _, rank in rankings)
        masses: dict[int, float] = {}
        for subset, rank in rankings:
            if subset.is_empty:
                raise ValueError("cannot rank the empty subset")
            if subset.bits in masses:
                raise ValueError("duplicate subset in rankings")
            masses[subset.bits] = float(Fraction(rank, total) * committed)
        ignorance = float(1 - committed)
        if ignorance > 0.0:
            theta = frame.theta_bits
            masses[theta] = masses.get(theta, 0.0) + ignorance
        return cls(frame, masses)

    def items(self) -> Iterator[tuple[HypSubset, float]]:
        for bits, mass in self._focal.items():
            yield HypSubset(self.frame, bits), mass

    def focal_bits(self) -> dict[int, float]:
        return dict(self._focal)

    def mass(self, subset: HypSubset) -> float:
        if subset.frame != self.frame:
            raise FrameMismatchError("subset on a different frame")
        return self._focal.get(subset.bits, 0.0)

    @property
    def theta_mass(self) -> float:
        return self._focal.get(self.frame.theta_bits, 0.0)

    @property
    def is_vacuous(self) -> bool:
        return self._focal == {self.frame.theta_bits: 1.0}

    def bel(self, subset: HypSubset) -> float:
        """Total belief: the mass of every focal element inside the subset."""
        if subset.frame != self.frame:
            raise FrameMismatchError("subset on a different frame")
        return math.fsum(
            m for bits, m in self._focal.items() if not bits & ~subset.bits
        )

    def pl(self, subset: HypSubset) -> float:
        """Plausibility: the mass of every focal element meeting the subset."""
        if subset.frame != self.frame:
            raise FrameMismatchError("subset on a different frame")
        return math.fsum(
            m for bits, m in self._focal.items() if bits & subset.bits
        )

    def combine(self, other: "MassFunction") -> "MassFunction":
        """Dempster's rule of orthogonal products.

        Pairwise products of focal masses land on the intersection of their
        subsets; products with empty intersection form the conflict, and the
        remainder is renormalized.  Total conflict raises ConflictError.
        """
        if self.frame != other.frame:
            raise FrameMismatchError(
                f"cannot combine masses on {self.frame.attribute!r} "
                f"and {other.frame.attribute!r}"
            )
        products: dict[int, float] = {}
        conflict = 0.0
        for a_bits, a_mass in self._focal.items():
            for b_bits, b_mass in other._focal.items():
                c = a_bits & b_bits
                p = a_mass * b_mass
                if c == 0:
                    conflict += p
                else:
                    products[c] = products.get(c, 0.0) + p
        denom = 1.0 - conflict
        if denom <= CONFLICT_EPS:
            raise ConflictError(
                f"total conflict combining masses on {self.frame.attribute!r}"
            )
        return MassFunction(
            self.frame, {bits: p / denom for bits, p in products.items()}
        )

    def attenuate(self, b: float) -> "MassFunction":
        """Discount by the overall belief in the supporting evidence.

        Every focal mass off the full frame is scaled by b and the released
        mass moves to ignorance, so b=1 is the identity and b=0 is vacuous.
        """
        if not 0.0 <= b <= 1.0:
            raise ValueError(f"attenuation {b} outside [0, 1]")
        if b == 1.0:
            return self
        theta = self.frame.theta_bits
        scaled = {
            bits: m * b
            for bits, m in self._focal.items()
            if bits != theta and m * b > 0.0
        }
        if not scaled:
            return MassFunction.vacuous(self.frame)
        remainder = 1.0 - math.fsum(scaled.values())
        if remainder > 0.0:
            scaled[theta] = remainder
        return MassFunction(self.frame, scaled)

    def max_singleton(self) -> tuple[HypSubset, float] | None:
        """Leading singleton hypothesis by Bel, ties broken by higher Pl and
        then frame declaration order.  None when the mass is vacuous."""
        if self.is_vacuous:
            return None
        best: tuple[float, float, int] | None = None
        best_subset: HypSubset | None = None
        for i in range(self.frame.size):
            s = HypSubset(self.frame, 1 << i)
            key = (self.bel(s), self.pl(s), -i)
            if best is None or key > best:
                best = key
                best_subset = s
        assert best_subset is not None and best is not None
        return best_subset, best[0]

    def approx_equal(self, other: "MassFunction", tol: float = MASS_TOL) -> bool:
        if self.frame != other.frame:
            return False
        keys = set(self._focal) | set(other._focal)
        return all(
            abs(self._focal.get(k, 0.0) - other._focal.get(k, 0.0)) <= tol
            for k in keys
        )

    def __eq__(self, other: object) -> bool:
        return (
            isinstance(other, MassFunction)
            and self.frame == other.frame
            and self._focal == other._focal
        )

    def __hash__(self) -> int:
        return hash((self.frame, tuple(self._focal.items())))

    def __repr__(self) -> str:
        parts = ", ".join(
            f"{{{','.join(s.members()) if not s.is_theta else 'THETA'}}}: {m:.4g}"
            for s, m in self.items()
        )
        return f"MassFunction({self.frame.attribute}: {parts})"


ExitPredicate = Callable[[Frame, MassFunction], bool]
