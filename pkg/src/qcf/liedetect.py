"""Lie generation, lie classification and the four lie-detecting algorithms.

Bob measures each β he receives and announces ``|p'',q''>``, which may differ
from his actual result ``|p',q'>``. Lie types:

* ``A``: same basis, flipped bit
* ``B``: flipped basis, same bit
* ``C``: both flipped

Alice-side functions only ever see announcements, never the ledger.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

from .quantum import (
    ALPHA_DIAG,
    ALPHA_XY,
    PairKind,
    PairState,
    QubitOutcome,
    check_theta,
    measure_alpha,
    measure_beta,
    prepare_pair,
)
from .rng import RandomStream

FREQ_TOL = 1e-12


class LieType(enum.Enum):
    HONEST = "honest"
    A = "a"
    B = "b"
    C = "c"


_FLIPS = {
    LieType.HONEST: (0, 0),
    LieType.A: (0, 1),
    LieType.B: (1, 0),
    LieType.C: (1, 1),
}
_BY_FLIPS = {v: k for k, v in _FLIPS.items()}


def classify_lie(actual: QubitOutcome, announced: QubitOutcome) -> LieType:
    return _BY_FLIPS[(int(actual[0] != announced[0]), int(actual[1] != announced[1]))]


def apply_lie(actual: QubitOutcome, kind: LieType) -> QubitOutcome:
    dp, dq = _FLIPS[kind]
    return QubitOutcome(actual[0] ^ dp, actual[1] ^ dq)


@dataclass(frozen=True)
class LieFrequencies:
    fa: float
    fb: float
    fc: float

    def __post_init__(self) -> None:
        for name in ("fa", "fb", "fc"):
            v = getattr(self, name)
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v!r}")
        if self.fa + self.fb + self.fc > 1.0 + FREQ_TOL:
            raise ValueError("lie frequencies sum above 1")

    @property
    def fh(self) -> float:
        return max(0.0, 1.0 - self.fa - self.fb - self.fc)

    @classmethod
    def from_types(cls, types: Sequence[LieType]) -> "LieFrequencies":
        n = len(types)
        if n == 0:
            return cls(0.0, 0.0, 0.0)
        return cls(
            sum(t is LieType.A for t in types) / n,
            sum(t is LieType.B for t in types) / n,
            sum(t is LieType.C for t in types) / n,
        )

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.fa, self.fb, self.fc)


@dataclass(frozen=True)
class Partition:
    """Alice's split of the indices ``0..s-1`` into ``U``, ``L`` and ``N``."""

    U: frozenset[int]
    L: frozenset[int]
    N: frozenset[int]

    @property
    def M(self) -> frozenset[int]:
        return self.L | self.N

    @property
    def s(self) -> int:
        return len(self.U) + len(self.L) + len(self.N)

    def sizes(self) -> dict[str, int]:
        return {"U": len(self.U), "L": len(self.L), "N": len(self.N), "M": len(self.M)}

    def validate(self, s: int) -> None:
        if self.U & self.L or self.U & self.N or self.L & self.N:
            raise ValueError("partition sets overlap")
        if (self.U | self.L | self.N) != frozenset(range(s)):
            raise ValueError("partition does not cover all indices")


@dataclass
class LedgerEntry:
    actual: QubitOutcome | None
    announced: QubitOutcome
    kind: LieType | None = None


@dataclass
class LieLedger:
    """Bob's private record. ``actual`` is ``None`` while a β is still unmeasured."""

    entries: list[LedgerEntry] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.entries)

    def __getitem__(self, i: int) -> LedgerEntry:
        return self.entries[i]

    def record(self, actual: QubitOutcome, announced: QubitOutcome) -> None:
        self.entries.append(LedgerEntry(actual, announced, classify_lie(actual, announced)))

    def defer(self, announced: QubitOutcome) -> None:
        self.entries.append(LedgerEntry(None, announced, None))

    def resolve(self, i: int, actual: QubitOutcome) -> LieType:
        e = self.entries[i]
        e.actual = actual
        e.kind = classify_lie(actual, e.announced)
        return e.kind

    @property
    def announcements(self) -> list[QubitOutcome]:
        return [e.announced for e in self.entries]

    @property
    def types(self) -> list[LieType | None]:
        return [e.kind for e in self.entries]

    def type_counts(self) -> dict[LieType, int]:
        counts = {t: 0 for t in LieType}
        for e in self.entries:
            if e.kind is not None:
                counts[e.kind] += 1
        return counts


def assign_lie_types(s: int, freqs: LieFrequencies, mode: str, rng: RandomStream) -> list[LieType]:
    """Per-index lie types: exact floor counts shuffled, or independent draws."""
    if mode == "exact":
        na, nb, nc = (math.floor(f * s + FREQ_TOL) for f in freqs.as_tuple())
        types = [LieType.A] * na + [LieType.B] * nb + [LieType.C] * nc
        types += [LieType.HONEST] * (s - len(types))
        rng.shuffle(types)
        return types
    if mode == "iid":
        ca = freqs.fa
        cb = ca + freqs.fb
        cc = cb + freqs.fc
        out = []
        for _ in range(s):
            u = rng.random()
            out.append(LieType.A if u < ca else LieType.B if u < cb else LieType.C if u < cc else LieType.HONEST)
        return out
    raise ValueError(f"unknown lie assignment mode {mode!r}")


# Expected sizes -----------------------------------------------------------------


class ExpectedSizes(NamedTuple):
    U: float
    L: float
    N: float
    M: float


def expected_sizes(freqs: LieFrequencies, s: float) -> ExpectedSizes:
    """Mean ``|U|, |L|, |N|, |M|`` under Algorithm III for lie frequencies ``freqs``."""
    fa, fb, fc, fh = freqs.fa, freqs.fb, freqs.fc, freqs.fh
    u = (0.75 * fh + 0.25 * fa + 0.75 * fb + 0.25 * fc) * s
    lsize = (0.5 * fa + 0.25 * fb + 0.25 * fc) * s
    n = (0.25 * fh + 0.25 * fa + 0.5 * fc) * s
    m = (0.25 + (fa + fc) / 2) * s
    return ExpectedSizes(u, lsize, n, m)


def expected_m_closed(freqs: LieFrequencies, s: float) -> float:
    """|M| written out per lie type, before substituting ``fh``."""
    return (0.25 * freqs.fh + 0.75 * freqs.fa + 0.25 * freqs.fb + 0.75 * freqs.fc) * s


def expected_detected_alg1(freqs: LieFrequencies, s: float) -> float:
    return (0.5 * freqs.fa + 0.25 * freqs.fb + 0.25 * freqs.fc) * s


def expected_detected_alg2(freqs: LieFrequencies, s: float) -> float:
    return 2 * expected_detected_alg1(freqs, s)


def expected_m_prime(freqs: LieFrequencies, s: float) -> float:
    """Mean number of α measured by Algorithm IV."""
    return (0.25 + (freqs.fa + freqs.fb) / 2) * s


@dataclass(frozen=True)
class ToleranceCheck:
    passed: bool
    observed: float
    expected: float
    deviation: float
    bound: float

    def report(self) -> str:
        verdict = "pass" if self.passed else "fail"
        return f"{verdict}: |{self.observed:g} - {self.expected:g}| = {self.deviation:g} vs bound {self.bound:.4g}"


def size_tolerance_check(observed: float, expected: float, s: int, z: float = 4.0) -> ToleranceCheck:
    """Binomial z-sigma acceptance window around ``expected`` out of ``s`` trials."""
    if z <= 0:
        raise ValueError("z must be positive")
    if not (0 <= expected <= s):
        raise ValueError(f"expected count {expected} outside [0, {s}]")
    p_hat = expected / s if s else 0.0
    bound = max(z * math.sqrt(s * p_hat * (1 - p_hat)), z * 1.0)
    dev = abs(observed - expected)
    return ToleranceCheck(dev <= bound, observed, expected, dev, bound)


# Bob's side for standalone runs --------------------------------------------------


@dataclass
class BobRecord:
    ledger: LieLedger
    bases: list[int]


def bob_measure_and_announce(
    pairs: Sequence[PairState],
    freqs: LieFrequencies,
    rng: RandomStream,
    lie_mode: str = "exact",
) -> BobRecord:
    """Measure every β in a uniformly random basis, then lie at the target frequencies."""
    types = assign_lie_types(len(pairs), freqs, lie_mode, rng)
    ledger = LieLedger()
    bases = []
    for pair, kind in zip(pairs, types):
        basis = rng.bit()
        actual = measure_beta(pair, basis, rng)
        bases.append(basis)
        ledger.record(actual, apply_lie(actual, kind))
    return BobRecord(ledger, bases)


def bob_announce_unmeasured(s: int, rng: RandomStream) -> BobRecord:
    """Delayed mode: announce uniformly random labels now, measure later."""
    ledger = LieLedger()
    for _ in range(s):
        ledger.defer(QubitOutcome(rng.bit(), rng.bit()))
    return BobRecord(ledger, [-1] * s)


def bob_measure_deferred(pairs: Sequence[PairState], record: BobRecord, rng: RandomStream) -> None:
    """Measure every still-unmeasured β in a random basis and resolve its lie type."""
    for i, pair in enumerate(pairs):
        if record.ledger[i].actual is None:
            basis = rng.bit()
            record.bases[i] = basis
            record.ledger.resolve(i, measure_beta(pair, basis, rng))


# Alice's algorithms -----------------------------------------------------------------


def prepare_alg1(s: int, rng: RandomStream) -> tuple[list[QubitOutcome], list[PairState]]:
    prepared = [QubitOutcome(rng.bit(), rng.bit()) for _ in range(s)]
    pairs = [prepare_pair(PairKind.PRODUCT, q, p=p) for p, q in prepared]
    return prepared, pairs


def algorithm_I(prepared: Sequence[QubitOutcome], announcements: Sequence[QubitOutcome]) -> set[int]:
    """Flag announcements in Alice's own basis carrying the wrong bit."""
    return {
        i
        for i, ((p, q), (pa, qa)) in enumerate(zip(prepared, announcements))
        if pa == p and qa != q
    }


def algorithm_II(
    pairs: Sequence[PairState], announcements: Sequence[QubitOutcome], rng: RandomStream
) -> set[int]:
    """Steer each β into the announced basis by measuring α, then compare bits."""
    detected = set()
    for i, (pair, (pa, qa)) in enumerate(zip(pairs, announcements)):
        q = measure_alpha(pair, ALPHA_XY if pa == 0 else ALPHA_DIAG, rng)
        if qa != q:
            detected.add(i)
    return detected


def split_by_alpha(
    announcements: Sequence[QubitOutcome],
    in_m: Iterable[bool],
    measure_xy: Callable[[int], int],
) -> Partition:
    """Measure α in ``{x, y}`` for indices flagged ``in_m`` and sort them into ``L``/``N``.

    ``measure_xy(i)`` must return 0 for ``|x>`` and 1 for ``|y>``; the outcome is
    Alice's basis ``p_i``, and ``L`` holds indices where it matches ``p''_i``.
    """
    u, lset, n = set(), set(), set()
    for i, (a, measured) in enumerate(zip(announcements, in_m)):
        if not measured:
            u.add(i)
        elif measure_xy(i) == a.p:
            lset.add(i)
        else:
            n.add(i)
    return Partition(frozenset(u), frozenset(lset), frozenset(n))


def alg3_mask(q: Sequence[int], announcements: Sequence[QubitOutcome]) -> list[bool]:
    return [a.q != qi for a, qi in zip(announcements, q)]


def alg4_mask(q: Sequence[int], announcements: Sequence[QubitOutcome]) -> list[bool]:
    return [(a.p == 0 and a.q != qi) or (a.p == 1 and a.q == qi) for a, qi in zip(announcements, q)]


def algorithm_III(
    pairs: Sequence[PairState],
    q: Sequence[int],
    announcements: Sequence[QubitOutcome],
    rng: RandomStream,
) -> Partition:
    """Measure α only where the announced bit disagrees with Alice's ``q``."""
    return split_by_alpha(announcements, alg3_mask(q, announcements), lambda i: measure_alpha(pairs[i], ALPHA_XY, rng))


def algorithm_IV(
    pairs: Sequence[PairState],
    q: Sequence[int],
    announcements: Sequence[QubitOutcome],
    rng: RandomStream,
) -> Partition:
    """Measure α where the announcement is ``|0,¬q>`` or ``|1,q>``."""
    return split_by_alpha(announcements, alg4_mask(q, announcements), lambda i: measure_alpha(pairs[i], ALPHA_XY, rng))


# Standalone experiment ---------------------------------------------------------------


@dataclass
class DetectionRun:
    algorithm: str
    s: int
    theta: float | None
    ledger: LieLedger
    detected: set[int] | None = None
    partition: Partition | None = None

    def types_in(self, indices: Iterable[int]) -> dict[LieType, int]:
        counts = {t: 0 for t in LieType}
        for i in indices:
            counts[self.ledger[i].kind] += 1
        return counts


def run_detection(
    algorithm: str,
    s: int,
    freqs: LieFrequencies,
    rng: RandomStream,
    theta: float = math.pi / 4,
    bob_mode: str = "measure-first",
    lie_mode: str = "exact",
) -> DetectionRun:
    """One lie-detecting round outside the protocol: Alice prepares, Bob announces, Alice detects."""
    alice_rng, bob_rng = rng.child("alice"), rng.child("bob")
    if algorithm in ("III", "IV"):
        check_theta(theta)
    q = [alice_rng.bit() for _ in range(s)]
    if algorithm == "I":
        prepared, pairs = prepare_alg1(s, alice_rng)
    elif algorithm == "II":
        pairs = [prepare_pair(PairKind.MAX_ENTANGLED) for _ in range(s)]
    elif algorithm == "III":
        pairs = [prepare_pair(PairKind.ALG3, qi, theta) for qi in q]
    elif algorithm == "IV":
        pairs = [prepare_pair(PairKind.ALG4, qi, theta) for qi in q]
    else:
        raise ValueError(f"unknown algorithm {algorithm!r}")

    if bob_mode == "measure-first":
        record = bob_measure_and_announce(pairs, freqs, bob_rng, lie_mode)
    elif bob_mode == "delayed":
        record = bob_announce_unmeasured(s, bob_rng)
    else:
        raise ValueError(f"unknown Bob mode {bob_mode!r}")
    announced = record.ledger.announcements

    run = DetectionRun(algorithm, s, theta if algorithm in ("III", "IV") else None, record.ledger)
    if algorithm == "I":
        run.detected = algorithm_I(prepared, announced)
    elif algorithm == "II":
        run.detected = algorithm_II(pairs, announced, alice_rng)
    elif algorithm == "III":
        run.partition = algorithm_III(pairs, q, announced, alice_rng)
    else:
        run.partition = algorithm_IV(pairs, q, announced, alice_rng)
    if bob_mode == "delayed":
        bob_measure_deferred(pairs, record, bob_rng)
    return run
