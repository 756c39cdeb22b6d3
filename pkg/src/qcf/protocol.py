"""The coin-flipping protocol as two party state machines over a shared quantum environment.

Steps, in order:

2. Alice prepares ``s`` protocol pairs for her codeword ``q`` and sends every β.
3. Bob measures (or defers), lies at his chosen frequencies and announces ``|p'',q''>``.
4. Alice checks the announced bit counts, runs the partition algorithm and checks ``|M|``.
5. Alice announces ``L``.
6. Bob checks ``|L|`` and that every member of ``L`` really was a lie.
7. Bob announces a random bit ``f``.
8. Alice announces ``N`` and ``U`` and hands over α for every index in ``U``.
9. Bob deduces ``q`` and runs the four final checks.
10. Both output ``c = parity(sum_{i in N} q_i) xor f``.

Parties only touch qubits through a :class:`QuantumPort`, which enforces ownership
of each half. Bob's ledger and bases live on the Bob object, which Alice never sees.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Iterator, Sequence

import numpy as np

from .codes import LinearCode, feasible, feasibility_line, is_codeword, parity_census, sample_codeword
from .liedetect import (
    LieFrequencies,
    LieLedger,
    LieType,
    Partition,
    alg3_mask,
    apply_lie,
    assign_lie_types,
    expected_sizes,
    size_tolerance_check,
    split_by_alpha,
)
from .quantum import (
    ALPHA_XY,
    PairKind,
    PairState,
    QubitOutcome,
    SingleQubitState,
    collective_check,
    conditional_alpha,
    measure_alpha,
    measure_beta,
    measure_beta_in,
    prepare_pair,
    reprepare,
)
from .rng import RandomStream
from .transcript import (
    Abort,
    Aborted,
    AlphaTransfer,
    AnnounceF,
    AnnounceL,
    AnnounceNU,
    AnnounceResults,
    BetaTransfer,
    CheckId,
    CheckRecord,
    Completed,
    Outcome,
    Transcript,
)

PROTOCOL_THETA = math.pi / 4
FEASIBILITY_MARGIN = 0.05
MIN_CODEWORDS_PER_PARITY = 2
BOB_MODES = ("measure-first", "delayed")


class ConfigError(ValueError):
    """A protocol configuration that must be rejected before any run."""


class CapabilityError(RuntimeError):
    """A party tried to act on something it does not own."""


class ProtocolError(RuntimeError):
    """A strategy sent a malformed message (a harness bug, not an abort)."""


# Configuration ------------------------------------------------------------------------


@dataclass(frozen=True)
class PublicParams:
    """What both parties know up front."""

    code: LinearCode
    z: float
    nontrivial_threshold: int

    @property
    def s(self) -> int:
        return self.code.s

    @property
    def d(self) -> int:
        return self.code.d


@dataclass(frozen=True)
class BobParams:
    """Honest Bob's private choices."""

    freqs: LieFrequencies
    lie_mode: str
    mode: str
    withhold_fraction: float


@dataclass(frozen=True)
class ProtocolConfig:
    code: LinearCode
    bob_freqs: LieFrequencies
    z: float = 4.0
    nontrivial_fraction: float = 1 / 8
    lie_mode: str = "exact"
    bob_mode: str = "measure-first"
    withhold_fraction: float = 0.2
    margin: float = FEASIBILITY_MARGIN

    def __post_init__(self) -> None:
        if self.z <= 0:
            raise ConfigError("z must be positive")
        if not (0 < self.nontrivial_fraction <= 0.5):
            raise ConfigError("nontrivial_fraction must lie in (0, 1/2]")
        if self.lie_mode not in ("exact", "iid"):
            raise ConfigError(f"unknown lie mode {self.lie_mode!r}")
        if self.bob_mode not in BOB_MODES:
            raise ConfigError(f"unknown Bob mode {self.bob_mode!r}; expected one of {BOB_MODES}")
        if not (0 <= self.withhold_fraction < 1):
            raise ConfigError("withhold_fraction must lie in [0, 1)")
        even, odd = parity_census(self.code)
        if min(even, odd) < MIN_CODEWORDS_PER_PARITY:
            raise ConfigError(
                f"code {self.code.name or '?'} has parity census ({even}, {odd}); "
                f"both classes need at least {MIN_CODEWORDS_PER_PARITY} codewords"
            )
        f = self.bob_freqs
        if not feasible(self.code, f):
            raise ConfigError(
                f"lie frequencies (fa={f.fa}, fb={f.fb}, fc={f.fc}) are infeasible for "
                f"{self.code.name or 'this code'}: need {feasibility_line(self.code)} and fb > fc"
            )
        if self.bob_mode == "delayed":
            compensated_freqs(f, self.withhold_fraction)

    @property
    def s(self) -> int:
        return self.code.s

    @property
    def theta(self) -> float:
        return PROTOCOL_THETA

    @property
    def nontrivial_threshold(self) -> int:
        return math.ceil(self.nontrivial_fraction * self.s)

    @property
    def within_margin(self) -> bool:
        return self.bob_freqs.fa + self.bob_freqs.fc >= 2 * self.code.d / self.s + self.margin

    def warn_if_tight(self) -> None:
        if not self.within_margin:
            warnings.warn(
                f"fa+fc = {self.bob_freqs.fa + self.bob_freqs.fc:.3f} is within {self.margin} of 2d/s; "
                "honest runs will often fail the |M| check",
                stacklevel=2,
            )

    def public(self) -> PublicParams:
        return PublicParams(self.code, self.z, self.nontrivial_threshold)

    def bob_params(self) -> BobParams:
        return BobParams(self.bob_freqs, self.lie_mode, self.bob_mode, self.withhold_fraction)

    def describe(self) -> dict:
        return {
            "code": self.code.descriptor(),
            "bob_freqs": {"fa": self.bob_freqs.fa, "fb": self.bob_freqs.fb, "fc": self.bob_freqs.fc},
            "z": self.z,
            "theta": self.theta,
            "nontrivial_threshold": self.nontrivial_threshold,
            "lie_mode": self.lie_mode,
            "bob_mode": self.bob_mode,
            "withhold_fraction": self.withhold_fraction if self.bob_mode == "delayed" else 0.0,
        }


def compensated_freqs(target: LieFrequencies, w: float) -> LieFrequencies:
    """Frequencies for the measured ``1-w`` share so the overall mix hits ``target``.

    A withheld index carries a uniformly random label, which acts like each lie
    type (and honesty) with probability 1/4.
    """
    vals = [(f - w / 4) / (1 - w) for f in target.as_tuple()]
    if min(vals) < -1e-12:
        raise ConfigError(
            f"withhold fraction {w} is too large for frequencies {target.as_tuple()}: each must be >= w/4"
        )
    return LieFrequencies(*(max(0.0, v) for v in vals))


# Quantum environment -------------------------------------------------------------------


class QuantumEnvironment:
    """Owns every pair; tracks who may touch each half.

    A half that was already measured is still a qubit in its collapsed state.
    Measuring it again swaps in :func:`reprepare` of the pair first, so the
    single-measurement rule of :class:`PairState` keeps holding.
    """

    def __init__(self, rng: RandomStream):
        self._rng = rng
        self._pairs: list[PairState] = []
        self._alpha_owner: list[str] = []
        self._beta_owner: list[str] = []

    def __len__(self) -> int:
        return len(self._pairs)

    def port(self, party: str) -> "QuantumPort":
        return QuantumPort(self, party)

    def _add(self, pair: PairState, owner: str) -> int:
        self._pairs.append(pair)
        self._alpha_owner.append(owner)
        self._beta_owner.append(owner)
        return len(self._pairs) - 1

    def _pair(self, h: int, party: str, half: str) -> PairState:
        if not (0 <= h < len(self._pairs)):
            raise CapabilityError(f"unknown handle {h}")
        owners = self._alpha_owner if half == "alpha" else self._beta_owner
        if owners[h] != party:
            raise CapabilityError(f"{party} does not hold the {half} half of pair {h}")
        return self._pairs[h]

    def _fresh(self, h: int, half: str) -> PairState:
        pair = self._pairs[h]
        done = pair.alpha_measured if half == "alpha" else pair.beta_measured
        if done or (half == "both" and not pair.intact):
            pair = self._pairs[h] = reprepare(pair)
        return pair

    def owner(self, h: int, half: str) -> str:
        return (self._alpha_owner if half == "alpha" else self._beta_owner)[h]

    def inspect(self, h: int) -> PairState:
        """Test-only view of a pair. Strategies must not call this."""
        return self._pairs[h]


class QuantumPort:
    """One party's access to the environment."""

    __slots__ = ("_env", "party")

    def __init__(self, env: QuantumEnvironment, party: str):
        self._env = env
        self.party = party

    def create(self, pair: PairState) -> int:
        if not pair.intact:
            raise CapabilityError("only fresh pairs can be introduced")
        return self._env._add(pair, self.party)

    def owns(self, h: int, half: str) -> bool:
        return self._env.owner(h, half) == self.party

    def _get(self, h: int, half: str) -> PairState:
        self._env._pair(h, self.party, half)
        return self._env._fresh(h, half)

    def measure_alpha(self, h: int, basis) -> int:
        return measure_alpha(self._get(h, "alpha"), basis, self._env._rng)

    def measure_beta(self, h: int, basis: int) -> QubitOutcome:
        return measure_beta(self._get(h, "beta"), basis, self._env._rng)

    def measure_beta_in(self, h: int, basis) -> int:
        return measure_beta_in(self._get(h, "beta"), basis, self._env._rng)

    def collective_check(self, h: int, target: PairState) -> bool:
        self._env._pair(h, self.party, "beta")
        self._env._pair(h, self.party, "alpha")
        return collective_check(self._env._fresh(h, "both"), target, self._env._rng)

    def send(self, handles: Sequence[int], half: str, to: str) -> None:
        owners = self._env._alpha_owner if half == "alpha" else self._env._beta_owner
        for h in handles:
            self._env._pair(h, self.party, half)
        for h in handles:
            owners[h] = to


@dataclass
class PartyContext:
    port: QuantumPort
    rng: RandomStream
    public: PublicParams
    bob: BobParams | None = None


# Checks ------------------------------------------------------------------------------------


def _exact(check_id: CheckId, party: str, observed, expected, passed: bool, detail: str = "") -> CheckRecord:
    return CheckRecord(check_id, party, observed, expected, 0, passed, detail)


def check_counts(announcements: Sequence[QubitOutcome], threshold: int) -> CheckRecord:
    ones = sum(a.q for a in announcements)
    zeros = len(announcements) - ones
    ok = zeros >= threshold and ones >= threshold
    return CheckRecord(
        CheckId.A4_COUNTS, "alice", {"zeros": zeros, "ones": ones}, {"min": threshold}, 0, ok
    )


def check_m_size(partition: Partition, public: PublicParams) -> CheckRecord:
    m = len(partition.M)
    bound = public.d + public.s / 4
    return _exact(CheckId.A4_MSIZE, "alice", m, {"greater_than": bound}, m > bound)


def check_l_size(L: frozenset[int], freqs: LieFrequencies, public: PublicParams) -> CheckRecord:
    exp = expected_sizes(freqs, public.s).L
    t = size_tolerance_check(len(L), exp, public.s, public.z)
    return CheckRecord(CheckId.B6_LSIZE, "bob", len(L), round(exp, 9), round(t.bound, 9), t.passed)


def check_l_all_lies(L: frozenset[int], ledger: LieLedger) -> CheckRecord:
    honest = sorted(i for i in L if ledger[i].kind is LieType.HONEST)
    detail = f"honest announcements named as lies: {honest[:8]}" if honest else ""
    return _exact(CheckId.B6_LALLLIES, "bob", len(honest), 0, not honest, detail)


def check_codeword(code: LinearCode, q_deduced: np.ndarray) -> CheckRecord:
    ok = is_codeword(code, q_deduced)
    return _exact(CheckId.B91_CODEWORD, "bob", int(ok), 1, ok, "" if ok else "deduced q is not a codeword")


def check_nu_sizes(partition: Partition, freqs: LieFrequencies, public: PublicParams) -> CheckRecord:
    exp = expected_sizes(freqs, public.s)
    tn = size_tolerance_check(len(partition.N), exp.N, public.s, public.z)
    tu = size_tolerance_check(len(partition.U), exp.U, public.s, public.z)
    return CheckRecord(
        CheckId.B92_SIZES,
        "bob",
        {"N": len(partition.N), "U": len(partition.U)},
        {"N": round(exp.N, 9), "U": round(exp.U, 9)},
        {"N": round(tn.bound, 9), "U": round(tu.bound, 9)},
        tn.passed and tu.passed,
    )


def check_no_type_b(N: frozenset[int], ledger: LieLedger) -> CheckRecord:
    bad = sorted(i for i in N if ledger[i].kind is LieType.B)
    detail = f"type-b lies in N: {bad[:8]}" if bad else ""
    return _exact(CheckId.B93_NOTYPEB, "bob", len(bad), 0, not bad, detail)


def deduce_q(q_announced: Sequence[int], partition: Partition) -> np.ndarray:
    """Bob's reconstruction: keep ``q''`` on ``U``, flip it on ``L ∪ N``."""
    q = np.array(q_announced, dtype=np.uint8)
    for i in partition.M:
        q[i] ^= 1
    return q


def public_coin(announcements: Sequence[QubitOutcome], N: frozenset[int], f: int) -> int:
    """The coin as fixed by public messages: on ``N`` each ``q_i`` is ``¬q''_i``."""
    return (sum(1 - announcements[i].q for i in N) + f) % 2


_CHECK_BASES: dict[tuple[int, QubitOutcome], tuple[SingleQubitState, SingleQubitState]] = {}


def alpha_check_basis(q: int, actual: QubitOutcome) -> tuple[SingleQubitState, SingleQubitState]:
    """``{expected α, its complement}`` for a protocol pair whose β gave ``actual``."""
    key = (int(q), QubitOutcome(*actual))
    basis = _CHECK_BASES.get(key)
    if basis is None:
        good = conditional_alpha(key[0], key[1], PROTOCOL_THETA)
        basis = (good, good.orthogonal())
        _CHECK_BASES[key] = basis
    return basis


def alpha_state_check(port: QuantumPort, h: int, q: int, actual: QubitOutcome) -> bool:
    """Measure α in the conditional basis; ``False`` on the orthogonal outcome."""
    return port.measure_alpha(h, alpha_check_basis(q, actual)) == 0


def protocol_target(q: int) -> PairState:
    return prepare_pair(PairKind.PROTOCOL, q)


# Strategies -------------------------------------------------------------------------------


class AliceStrategy:
    """Base for Alice. Subclasses override the hooks they deviate on."""

    party = "alice"
    name = "alice"
    honest = False

    def bind(self, ctx: PartyContext) -> None:
        self.ctx = ctx

    def prepare(self) -> list[int]:
        raise NotImplementedError

    def partition(self, announcements: Sequence[QubitOutcome]) -> Partition:
        raise NotImplementedError

    def announce_L(self) -> frozenset[int]:
        raise NotImplementedError

    def announce_NU(self, f: int) -> tuple[frozenset[int], frozenset[int]]:
        raise NotImplementedError

    def alpha_handles(self, U: frozenset[int]) -> list[int]:
        raise NotImplementedError

    def coin(self, f: int) -> int:
        raise NotImplementedError

    def stats(self) -> dict:
        return {}


class BobStrategy:
    party = "bob"
    name = "bob"
    honest = False

    def bind(self, ctx: PartyContext) -> None:
        self.ctx = ctx

    def announce(self, handles: Sequence[int]) -> list[QubitOutcome]:
        raise NotImplementedError

    def check_L(self, L: frozenset[int]) -> Iterator[CheckRecord]:
        return iter(())

    def choose_f(self) -> int:
        raise NotImplementedError

    def final_checks(self, N: frozenset[int], U: frozenset[int], alpha: Sequence[int]) -> Iterator[CheckRecord]:
        return iter(())

    def coin(self, f: int) -> int:
        raise NotImplementedError

    def stats(self) -> dict:
        return {}


class HonestAlice(AliceStrategy):
    name = "honest"
    honest = True

    def prepare(self) -> list[int]:
        ctx = self.ctx
        self.q = sample_codeword(ctx.public.code, ctx.rng)
        self.handles = [ctx.port.create(prepare_pair(PairKind.PROTOCOL, int(qi))) for qi in self.q]
        return list(self.handles)

    def partition(self, announcements: Sequence[QubitOutcome]) -> Partition:
        port, handles = self.ctx.port, self.handles
        self.announcements = list(announcements)
        self.part = split_by_alpha(
            announcements,
            alg3_mask(self.q, announcements),
            lambda i: port.measure_alpha(handles[i], ALPHA_XY),
        )
        return self.part

    def announce_L(self) -> frozenset[int]:
        return self.part.L

    def announce_NU(self, f: int) -> tuple[frozenset[int], frozenset[int]]:
        self.N, self.U = self.part.N, self.part.U
        return self.N, self.U

    def alpha_handles(self, U: frozenset[int]) -> list[int]:
        return [self.handles[i] for i in sorted(U)]

    def coin(self, f: int) -> int:
        return (int(sum(int(self.q[i]) for i in self.N)) + f) % 2


class HonestBob(BobStrategy):
    name = "honest"
    honest = True

    def bind(self, ctx: PartyContext) -> None:
        super().bind(ctx)
        if ctx.bob is None:
            raise ConfigError("Bob needs his private parameters")
        self.params = ctx.bob

    def announce(self, handles: Sequence[int]) -> list[QubitOutcome]:
        ctx, params = self.ctx, self.params
        s = len(handles)
        self.handles = list(handles)
        self.ledger = LieLedger()
        self.bases = [-1] * s
        self.withheld: frozenset[int] = frozenset()
        freqs = params.freqs
        if params.mode == "delayed":
            w = round(params.withhold_fraction * s)
            self.withheld = frozenset(ctx.rng.sample(range(s), w))
            freqs = compensated_freqs(params.freqs, params.withhold_fraction)
        measured = [i for i in range(s) if i not in self.withheld]
        types = iter(assign_lie_types(len(measured), freqs, params.lie_mode, ctx.rng))
        for i, h in enumerate(handles):
            if i in self.withheld:
                self.ledger.defer(QubitOutcome(ctx.rng.bit(), ctx.rng.bit()))
                continue
            basis = ctx.rng.bit()
            actual = ctx.port.measure_beta(h, basis)
            self.bases[i] = basis
            self.ledger.record(actual, apply_lie(actual, next(types)))
        self.announced = self.ledger.announcements
        return list(self.announced)

    def effective_freqs(self) -> LieFrequencies:
        """Realized lie mix, counting each withheld index as a uniform label."""
        s = len(self.ledger)
        counts = {t: 0.0 for t in LieType}
        for i, e in enumerate(self.ledger.entries):
            if i in self.withheld:
                for t in LieType:
                    counts[t] += 0.25
            else:
                counts[e.kind] += 1
        return LieFrequencies(counts[LieType.A] / s, counts[LieType.B] / s, counts[LieType.C] / s)

    def _resolve_withheld(self, indices) -> None:
        # α is already collapsed for these, so measuring in the announced basis is safe.
        for i in sorted(indices):
            if i in self.withheld and self.ledger[i].actual is None:
                basis = self.announced[i].p
                self.bases[i] = basis
                self.ledger.resolve(i, self.ctx.port.measure_beta(self.handles[i], basis))

    def check_L(self, L: frozenset[int]) -> Iterator[CheckRecord]:
        self.L = L
        self._resolve_withheld(L)
        freqs = self.effective_freqs()
        yield check_l_size(L, freqs, self.ctx.public)
        yield check_l_all_lies(L, self.ledger)

    def choose_f(self) -> int:
        self.f = self.ctx.rng.bit()
        return self.f

    def final_checks(self, N: frozenset[int], U: frozenset[int], alpha: Sequence[int]) -> Iterator[CheckRecord]:
        public = self.ctx.public
        self.N = N
        part = Partition(U, self.L, N)
        self._resolve_withheld(N)
        self.q = deduce_q([a.q for a in self.announced], part)
        yield check_codeword(public.code, self.q)
        yield check_nu_sizes(part, self.effective_freqs(), public)
        yield check_no_type_b(N, self.ledger)
        yield self._check_alpha_states(sorted(U), alpha)

    def _check_alpha_states(self, order: list[int], alpha: Sequence[int]) -> CheckRecord:
        if len(alpha) != len(order):
            return _exact(CheckId.B94_ALPHASTATES, "bob", {"checked": 0, "failed": len(order)}, {"failed": 0},
                          False, "α count does not match |U|")
        port = self.ctx.port
        failed = []
        for i, h in zip(order, alpha):
            qi = int(self.q[i])
            if i in self.withheld:
                ok = port.collective_check(h, protocol_target(qi))
            else:
                ok = alpha_state_check(port, h, qi, self.ledger[i].actual)
            if not ok:
                failed.append(i)
        detail = f"failing indices: {failed[:8]}" if failed else ""
        return _exact(
            CheckId.B94_ALPHASTATES, "bob", {"checked": len(order), "failed": len(failed)}, {"failed": 0},
            not failed, detail,
        )

    def coin(self, f: int) -> int:
        return (int(sum(int(self.q[i]) for i in self.N)) + f) % 2


# Runner ------------------------------------------------------------------------------------


def _validate_announcements(ann: Sequence[QubitOutcome], s: int) -> list[QubitOutcome]:
    if len(ann) != s:
        raise ProtocolError(f"Bob announced {len(ann)} results for {s} pairs")
    out = []
    for a in ann:
        if a[0] not in (0, 1) or a[1] not in (0, 1):
            raise ProtocolError(f"malformed announcement {a!r}")
        out.append(QubitOutcome(int(a[0]), int(a[1])))
    return out


def _validate_sets(s: int, **sets: frozenset[int]) -> None:
    seen: set[int] = set()
    for name, idx in sets.items():
        if not all(0 <= i < s for i in idx):
            raise ProtocolError(f"set {name} has an index outside 0..{s - 1}")
        if seen & idx:
            raise ProtocolError(f"set {name} overlaps an earlier set")
        seen |= idx
    if len(sets) == 3 and len(seen) != s:
        raise ProtocolError("U, L and N do not cover every index")


@dataclass
class RunResult:
    outcome: Outcome
    transcript: Transcript
    alice: AliceStrategy
    bob: BobStrategy
    sizes: dict[str, int] | None = field(default=None)


def run_protocol_full(
    alice: AliceStrategy,
    bob: BobStrategy,
    config: ProtocolConfig,
    seed: int,
    stream_id: int = 0,
) -> RunResult:
    root = RandomStream(seed, ("trial", stream_id))
    env = QuantumEnvironment(root.child("env"))
    public = config.public()
    alice_port, bob_port = env.port("alice"), env.port("bob")
    alice.bind(PartyContext(alice_port, root.child("alice"), public))
    bob.bind(PartyContext(bob_port, root.child("bob"), public, config.bob_params()))
    t = Transcript()
    s = public.s

    def abort(step: str, rec: CheckRecord) -> RunResult:
        t.message(step, rec.party, Abort(rec.check_id))
        t.finish(step, Aborted(rec.check_id, rec.party))
        return RunResult(t.outcome, t, alice, bob, t.set_sizes())

    handles = alice.prepare()
    if len(handles) != s:
        raise ProtocolError(f"Alice sent {len(handles)} β for s = {s}")
    alice_port.send(handles, "beta", "bob")
    t.message("2", "alice", BetaTransfer(tuple(handles)))

    ann = _validate_announcements(bob.announce(handles), s)
    t.message("3", "bob", AnnounceResults(tuple(tuple(a) for a in ann)))

    rec = check_counts(ann, public.nontrivial_threshold)
    t.check("4", rec)
    if not rec.passed:
        return abort("4", rec)
    part = alice.partition(ann)
    rec = check_m_size(part, public)
    t.check("4", rec)
    if not rec.passed:
        return abort("4", rec)

    L = frozenset(alice.announce_L())
    _validate_sets(s, L=L)
    t.message("5", "alice", AnnounceL(L))

    for rec in bob.check_L(L):
        t.check("6", rec)
        if not rec.passed:
            return abort("6", rec)

    f = bob.choose_f()
    if f not in (0, 1):
        raise ProtocolError(f"f must be a bit, got {f!r}")
    t.message("7", "bob", AnnounceF(f))

    N, U = (frozenset(x) for x in alice.announce_NU(f))
    _validate_sets(s, L=L, N=N, U=U)
    t.message("8", "alice", AnnounceNU(N, U))
    alpha = alice.alpha_handles(U)
    alice_port.send(alpha, "alpha", "bob")
    t.message("8", "alice", AlphaTransfer(tuple(alpha)))

    for rec in bob.final_checks(N, U, alpha):
        t.check("9", rec)
        if not rec.passed:
            return abort("9", rec)

    c = public_coin(ann, N, f)
    t.finish("10", Completed(c, alice.coin(f), bob.coin(f)))
    return RunResult(t.outcome, t, alice, bob, t.set_sizes())


def run_protocol(
    alice: AliceStrategy,
    bob: BobStrategy,
    config: ProtocolConfig,
    seed: int,
    stream_id: int = 0,
) -> tuple[Outcome, Transcript]:
    r = run_protocol_full(alice, bob, config, seed, stream_id)
    return r.outcome, r.transcript


# Step-level entry points for tests and the CLI ----------------------------------------------


def alice_prepare(config: ProtocolConfig, rng: RandomStream) -> tuple[np.ndarray, list[PairState]]:
    """Codeword and fresh protocol pairs, outside any environment."""
    q = sample_codeword(config.code, rng)
    return q, [prepare_pair(PairKind.PROTOCOL, int(qi)) for qi in q]


def bob_announce(
    pairs: Sequence[PairState], freqs: LieFrequencies, rng: RandomStream, lie_mode: str = "exact"
) -> tuple[list[QubitOutcome], LieLedger]:
    types = assign_lie_types(len(pairs), freqs, lie_mode, rng)
    ledger = LieLedger()
    for pair, kind in zip(pairs, types):
        actual = measure_beta(pair, rng.bit(), rng)
        ledger.record(actual, apply_lie(actual, kind))
    return ledger.announcements, ledger


def alice_check_and_partition(
    q: Sequence[int],
    pairs: Sequence[PairState],
    announcements: Sequence[QubitOutcome],
    config: ProtocolConfig,
    rng: RandomStream,
) -> tuple[Partition, list[CheckRecord]]:
    public = config.public()
    counts = check_counts(announcements, public.nontrivial_threshold)
    part = split_by_alpha(
        announcements, alg3_mask(q, announcements), lambda i: measure_alpha(pairs[i], ALPHA_XY, rng)
    )
    return part, [counts, check_m_size(part, public)]


def bob_check_L(L: frozenset[int], ledger: LieLedger, freqs: LieFrequencies, config: ProtocolConfig) -> list[CheckRecord]:
    public = config.public()
    return [check_l_size(L, freqs, public), check_l_all_lies(L, ledger)]
