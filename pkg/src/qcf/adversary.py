"""Dishonest strategies and the Monte Carlo bias estimator."""

from __future__ import annotations

import itertools
import math
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Callable, Iterator, Sequence

import numpy as np

from .codes import LinearCode, feasible, feasibility_line, low_weight_codewords, sample_codeword
from .liedetect import (
    LieFrequencies,
    LieType,
    Partition,
    alg3_mask,
    apply_lie,
    assign_lie_types,
    classify_lie,
)
from .protocol import (
    FEASIBILITY_MARGIN,
    AliceStrategy,
    BobStrategy,
    ConfigError,
    HonestAlice,
    HonestBob,
    ProtocolConfig,
    alpha_check_basis,
    public_coin,
    run_protocol_full,
)
from .quantum import (
    ALPHA_XY,
    PairKind,
    QubitOutcome,
    helstrom_basis,
    measure_alpha,
    measure_beta,
    prepare_pair,
    reduced_rho_q,
    reprepare,
)
from .rng import RandomStream
from .transcript import CheckRecord

KITAEV_BOUND = 1 / math.sqrt(2) - 0.5


def parity_guess_accuracy(p: float, m: int) -> float:
    """Chance that the parity of ``m`` independently guessed bits is right, each right with ``p``."""
    if not (0.5 <= p <= 1.0):
        raise ValueError("per-bit accuracy must lie in [1/2, 1]")
    if m < 0:
        raise ValueError("m must be non-negative")
    return 0.5 + (2 * p - 1) ** m / 2


# Dishonest Alice -----------------------------------------------------------------------------


def _parity_movers(
    N: frozenset[int], U: frozenset[int], q: Sequence[int]
) -> tuple[list[int], list[int]]:
    """Indices whose N<->U move changes the public coin, and those whose move does not.

    On ``N`` the coin reads ``q_i``; moving ``i`` out drops it. On ``U`` it reads
    nothing, and moving ``i`` in adds ``¬q''_i = 1 - q_i``.
    """
    changers = sorted([i for i in N if q[i] == 1] + [i for i in U if q[i] == 0])
    keepers = sorted([i for i in N if q[i] == 0] + [i for i in U if q[i] == 1])
    return changers, keepers


def _move(N: frozenset[int], U: frozenset[int], movers) -> tuple[frozenset[int], frozenset[int]]:
    m = frozenset(movers)
    return (N - m) | (U & m), (U - m) | (N & m)


class BitflipAlice(HonestAlice):
    """Honest until step 8, then relabels ``flips`` indices between N and U if the coin is wrong."""

    honest = False

    def __init__(self, flips: int = 1, desired: int = 0):
        if flips < 1:
            raise ValueError("flips must be at least 1")
        self.flips = flips
        self.desired = desired
        self.activated = False
        self.moved: list[int] = []

    @property
    def name(self) -> str:
        return f"bitflip-{self.flips}"

    def announce_NU(self, f: int) -> tuple[frozenset[int], frozenset[int]]:
        N, U = self.part.N, self.part.U
        if public_coin(self.announcements, N, f) != self.desired:
            changers, keepers = _parity_movers(N, U, self.q)
            rng = self.ctx.rng
            for k in range(1, self.flips + 1, 2):
                if k <= len(changers) and self.flips - k <= len(keepers):
                    self.moved = sorted(rng.sample(changers, k) + rng.sample(keepers, self.flips - k))
                    N, U = _move(N, U, self.moved)
                    self.activated = True
                    break
        self.N, self.U = N, U
        return N, U

    def coin(self, f: int) -> int:
        return public_coin(self.announcements, self.N, f)

    def stats(self) -> dict:
        return {"cheat_activated": self.activated, "moved": len(self.moved)}


_SUPPORT_CACHE: dict[tuple, list[tuple[int, ...]]] = {}


def weight_d_supports(code: LinearCode) -> list[tuple[int, ...]]:
    """Supports of all weight-``d`` codewords, cached per generator matrix."""
    key = (code.s, code.d, code.generator.tobytes())
    if key not in _SUPPORT_CACHE:
        _SUPPORT_CACHE[key] = [tuple(np.flatnonzero(w).tolist()) for w in low_weight_codewords(code, code.d)]
    return _SUPPORT_CACHE[key]


class CodewordRelabelAlice(HonestAlice):
    """Relabels the support of a weight-``d`` codeword so Bob still deduces a codeword."""

    honest = False
    name = "codeword-relabel"

    def __init__(self, desired: int = 0):
        self.desired = desired
        self.activated = False
        self.moved: list[int] = []

    def announce_NU(self, f: int) -> tuple[frozenset[int], frozenset[int]]:
        N, U = self.part.N, self.part.U
        if public_coin(self.announcements, N, f) != self.desired:
            changers, _ = _parity_movers(N, U, self.q)
            changer_set = set(changers)
            options = []
            for support in weight_d_supports(self.ctx.public.code):
                if self.part.L.isdisjoint(support) and sum(i in changer_set for i in support) % 2 == 1:
                    options.append(support)
            if options:
                self.moved = list(self.ctx.rng.choice(options))
                N, U = _move(N, U, self.moved)
                self.activated = True
        self.N, self.U = N, U
        return N, U

    def coin(self, f: int) -> int:
        return public_coin(self.announcements, self.N, f)

    def stats(self) -> dict:
        return {"cheat_activated": self.activated, "moved": len(self.moved)}


class ProductStateAlice(AliceStrategy):
    """Sends unentangled ``|p_i,q_i>`` and builds the partition from classical knowledge.

    ``l_mode="random"`` names a random subset of ``M`` as ``L``, sized like the
    certain-lie set; ``"semi-classical"`` names exactly the certain lies
    (announced basis equal to hers, bit different).
    """

    honest = False

    def __init__(self, l_mode: str = "random"):
        if l_mode not in ("random", "semi-classical"):
            raise ValueError(f"unknown L mode {l_mode!r}")
        self.l_mode = l_mode

    @property
    def name(self) -> str:
        return "product-state" if self.l_mode == "random" else "product-state-semiclassical"

    def prepare(self) -> list[int]:
        ctx = self.ctx
        self.q = sample_codeword(ctx.public.code, ctx.rng)
        self.p = [ctx.rng.bit() for _ in self.q]
        self.handles = [
            ctx.port.create(prepare_pair(PairKind.PRODUCT, int(qi), p=pi)) for pi, qi in zip(self.p, self.q)
        ]
        return list(self.handles)

    def partition(self, announcements: Sequence[QubitOutcome]) -> Partition:
        self.announcements = list(announcements)
        m = [i for i, flag in enumerate(alg3_mask(self.q, announcements)) if flag]
        certain = [i for i in m if announcements[i].p == self.p[i]]
        if self.l_mode == "semi-classical":
            lset = frozenset(certain)
        else:
            lset = frozenset(self.ctx.rng.sample(m, len(certain)))
        nset = frozenset(m) - lset
        uset = frozenset(range(len(self.q))) - frozenset(m)
        self.part = Partition(uset, lset, nset)
        return self.part

    def announce_L(self) -> frozenset[int]:
        return self.part.L

    def announce_NU(self, f: int) -> tuple[frozenset[int], frozenset[int]]:
        self.N, self.U = self.part.N, self.part.U
        return self.N, self.U

    def alpha_handles(self, U: frozenset[int]) -> list[int]:
        return [self.handles[i] for i in sorted(U)]

    def coin(self, f: int) -> int:
        return public_coin(self.announcements, self.N, f)


# Dishonest Bob -----------------------------------------------------------------------------


def default_cheat_freqs(code: LinearCode, margin: float = FEASIBILITY_MARGIN) -> LieFrequencies:
    """Feasible announcement frequencies with ``fa+fc`` at least ``margin`` above ``2d/s``."""
    total = min(max(0.4, 2 * code.d / code.s + margin), 0.49)
    fa, fc = 0.6 * total, 0.4 * total
    fb = min(fc + 0.05, 1 - total)
    freqs = LieFrequencies(fa, fb, fc)
    if not feasible(code, freqs):
        raise ConfigError(f"no default cheating frequencies for {code.name}: need {feasibility_line(code)}")
    return freqs


class _GuessingBob(BobStrategy):
    """Shared parity-forcing logic: guess the coin from per-index bit guesses ``q_hat``."""

    honest = False

    def __init__(self, desired: int = 0):
        self.desired = desired

    def check_L(self, L: frozenset[int]) -> Iterator[CheckRecord]:
        self.L = L
        return iter(())

    def _coin_bits(self) -> list[int]:
        # N lies outside L, and on N the coin reads q_i = ¬q''_i, so only q''_i = 0 counts.
        return [i for i, a in enumerate(self.announced) if a.q == 0 and i not in self.L]

    def choose_f(self) -> int:
        self.coin_bits = self._coin_bits()
        self.guess = sum(int(self.q_hat[i]) for i in self.coin_bits) % 2
        self.f = self.guess ^ self.desired
        return self.f

    def final_checks(self, N: frozenset[int], U: frozenset[int], alpha: Sequence[int]) -> Iterator[CheckRecord]:
        self.N = N
        truth = [1 - a.q if i in N or i in self.L else a.q for i, a in enumerate(self.announced)]
        self.q_true = truth
        self.actual_parity = sum(truth[i] for i in self.coin_bits) % 2
        return iter(())

    def coin(self, f: int) -> int:
        return public_coin(self.announced, self.N, f)

    def stats(self) -> dict:
        if not hasattr(self, "actual_parity"):
            return {}
        out = {
            "m": len(self.coin_bits),
            "parity_correct": self.guess == self.actual_parity,
            "bits_correct": sum(int(self.q_hat[i]) == self.q_true[i] for i in range(len(self.q_hat))),
            "bits": len(self.q_hat),
            "coin_bits_correct": sum(int(self.q_hat[i]) == self.q_true[i] for i in self.coin_bits),
        }
        return out


class HelstromBob(_GuessingBob):
    """Measures each β with the optimal discriminator for ``q_i = 0`` vs ``1`` and forces ``f``."""

    name = "helstrom-guess"

    def __init__(self, freqs: LieFrequencies | None = None, desired: int = 0):
        super().__init__(desired)
        self.freqs = freqs

    def announce(self, handles: Sequence[int]) -> list[QubitOutcome]:
        ctx = self.ctx
        freqs = self.freqs or default_cheat_freqs(ctx.public.code)
        basis = helstrom_basis(reduced_rho_q(0), reduced_rho_q(1))
        types = assign_lie_types(len(handles), freqs, "exact", ctx.rng)
        self.q_hat = []
        announced = []
        for h, kind in zip(handles, types):
            guess = ctx.port.measure_beta_in(h, basis)
            self.q_hat.append(guess)
            pseudo = QubitOutcome(ctx.rng.bit(), guess)
            announced.append(apply_lie(pseudo, kind))
        self.announced = announced
        return announced


class TypeBFloodBob(_GuessingBob):
    """Honest measurements, heavy type-b lying; a type-b index outside ``L`` reveals ``q_i``."""

    name = "typeb-flood"

    def __init__(self, fb: float = 0.5, fa: float = 0.2, fc: float = 0.1, desired: int = 0):
        super().__init__(desired)
        self.freqs = LieFrequencies(fa, fb, fc)

    def bind(self, ctx) -> None:
        super().bind(ctx)
        if not feasible(ctx.public.code, self.freqs):
            f = self.freqs
            raise ConfigError(
                f"flood frequencies ({f.fa}, {f.fb}, {f.fc}) infeasible: need {feasibility_line(ctx.public.code)} and fb > fc"
            )

    def announce(self, handles: Sequence[int]) -> list[QubitOutcome]:
        ctx = self.ctx
        types = assign_lie_types(len(handles), self.freqs, "exact", ctx.rng)
        self.types = types
        self.q_hat = []
        announced = []
        for h, kind in zip(handles, types):
            actual = ctx.port.measure_beta(h, ctx.rng.bit())
            self.q_hat.append(actual.q)
            announced.append(apply_lie(actual, kind))
        self.announced = announced
        return announced

    def choose_f(self) -> int:
        # Outside L a type-b lie must sit in U, so q_i = q''_i exactly; inside L, q_i = ¬q''_i.
        self.known = set(self.L)
        for i, kind in enumerate(self.types):
            if i in self.L:
                self.q_hat[i] = 1 - self.announced[i].q
            elif kind is LieType.B:
                self.q_hat[i] = self.announced[i].q
                self.known.add(i)
        return super().choose_f()

    def stats(self) -> dict:
        out = super().stats()
        if not out:
            return out
        out["known_bits"] = len(self.known)
        out["L"] = len(self.L)
        return out


# Registry -------------------------------------------------------------------------------


def make_alice(name: str) -> AliceStrategy:
    if name == "honest":
        return HonestAlice()
    if name.startswith("bitflip-"):
        return BitflipAlice(int(name.split("-", 1)[1]))
    if name == "codeword-relabel":
        return CodewordRelabelAlice()
    if name == "product-state":
        return ProductStateAlice("random")
    if name == "product-state-semiclassical":
        return ProductStateAlice("semi-classical")
    raise KeyError(f"unknown Alice strategy {name!r}; known: {', '.join(ALICE_STRATEGIES)}")


def make_bob(name: str) -> BobStrategy:
    if name == "honest":
        return HonestBob()
    if name == "helstrom-guess":
        return HelstromBob()
    if name == "typeb-flood":
        return TypeBFloodBob()
    raise KeyError(f"unknown Bob strategy {name!r}; known: {', '.join(BOB_STRATEGIES)}")


ALICE_STRATEGIES = ("honest", "bitflip-<k>", "codeword-relabel", "product-state", "product-state-semiclassical")
BOB_STRATEGIES = ("honest", "helstrom-guess", "typeb-flood")
SHIPPED_PAIRS = (
    ("bitflip-1", "honest"),
    ("bitflip-3", "honest"),
    ("codeword-relabel", "honest"),
    ("product-state", "honest"),
    ("product-state-semiclassical", "honest"),
    ("honest", "helstrom-guess"),
    ("honest", "typeb-flood"),
)


# Bias estimation ---------------------------------------------------------------------------


@dataclass
class TrialSummary:
    index: int
    outcome: dict
    sizes: dict | None
    alice: dict
    bob: dict


@dataclass
class BiasReport:
    alice: str
    bob: str
    trials: int
    p0: float
    p1: float
    p_abort: float
    epsilon_hat: float | None
    epsilon_hat_abort_loss: float
    ci_halfwidth: float | None
    abort_histogram: dict[str, int]
    disagreements: int
    cheat: dict | None = None
    bob_stats: dict | None = None
    convention: str = "epsilon_hat = max(p0, p1)/(p0 + p1) - 1/2 over completed runs"

    def as_dict(self) -> dict:
        return {
            "alice": self.alice,
            "bob": self.bob,
            "trials": self.trials,
            "p0": self.p0,
            "p1": self.p1,
            "p_abort": self.p_abort,
            "epsilon_hat": self.epsilon_hat,
            "epsilon_hat_abort_loss": self.epsilon_hat_abort_loss,
            "ci_halfwidth": self.ci_halfwidth,
            "abort_histogram": dict(sorted(self.abort_histogram.items())),
            "disagreements": self.disagreements,
            "cheat": self.cheat,
            "bob_stats": self.bob_stats,
            "convention": self.convention,
        }


Factory = Callable[[], object]


def _resolve(factory, maker) -> Callable[[], object]:
    return (lambda: maker(factory)) if isinstance(factory, str) else factory


def run_trials(
    alice, bob, config: ProtocolConfig, seed: int, indices: Sequence[int]
) -> list[TrialSummary]:
    make_a, make_b = _resolve(alice, make_alice), _resolve(bob, make_bob)
    out = []
    for i in indices:
        r = run_protocol_full(make_a(), make_b(), config, seed, i)
        out.append(TrialSummary(i, r.outcome.payload(), r.sizes, r.alice.stats(), r.bob.stats()))
    return out


def _chunk(args) -> list[TrialSummary]:
    return run_trials(*args)


def collect_trials(alice, bob, config: ProtocolConfig, trials: int, seed: int, workers: int = 1) -> list[TrialSummary]:
    """All trial summaries in trial order. Worker pools need strategy names, not callables."""
    if trials < 1:
        raise ValueError("trials must be at least 1")
    if workers <= 1 or trials < 2 * workers:
        return run_trials(alice, bob, config, seed, range(trials))
    if not (isinstance(alice, str) and isinstance(bob, str)):
        raise ValueError("parallel runs need registered strategy names")
    bounds = np.linspace(0, trials, workers + 1).astype(int)
    jobs = [(alice, bob, config, seed, range(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_chunk, jobs))
    merged = [t for part in parts for t in part]
    merged.sort(key=lambda t: t.index)
    return merged


def bias_report(summaries: Sequence[TrialSummary], alice: str = "?", bob: str = "?") -> BiasReport:
    n = len(summaries)
    c0 = sum(1 for t in summaries if t.outcome["status"] == "completed" and t.outcome["c"] == 0)
    c1 = sum(1 for t in summaries if t.outcome["status"] == "completed" and t.outcome["c"] == 1)
    aborted = n - c0 - c1
    hist = Counter(t.outcome["check_id"] for t in summaries if t.outcome["status"] == "aborted")
    disagreements = sum(
        1
        for t in summaries
        if t.outcome["status"] == "completed" and not (t.outcome["c"] == t.outcome["alice_c"] == t.outcome["bob_c"])
    )
    done = c0 + c1
    eps = max(c0, c1) / done - 0.5 if done else None
    ci = 4 * math.sqrt(0.25 / done) if done else None
    cheat = None
    if any("cheat_activated" in t.alice for t in summaries):
        act = [t for t in summaries if t.alice.get("cheat_activated")]
        act_hist = Counter(t.outcome["check_id"] for t in act if t.outcome["status"] == "aborted")
        cheat = {
            "activated": len(act),
            "activated_aborted": sum(act_hist.values()),
            "activated_abort_histogram": dict(sorted(act_hist.items())),
        }
    bob_stats = None
    keys = sorted({k for t in summaries for k in t.bob})
    if keys:
        bob_stats = {k: sum(int(t.bob[k]) for t in summaries if k in t.bob) for k in keys}
        bob_stats["runs"] = sum(1 for t in summaries if t.bob)
    return BiasReport(
        alice, bob, n, c0 / n, c1 / n, aborted / n, eps, max(c0, c1) / n - 0.5, ci, dict(hist), disagreements, cheat, bob_stats
    )


def estimate_bias(
    alice: str | Factory,
    bob: str | Factory,
    config: ProtocolConfig,
    trials: int,
    seed: int,
    workers: int = 1,
) -> BiasReport:
    summaries = collect_trials(alice, bob, config, trials, seed, workers)
    return bias_report(summaries, alice if isinstance(alice, str) else "custom", bob if isinstance(bob, str) else "custom")


# Pair-level experiments -------------------------------------------------------------------


def claim_detection_trial(q: int, claimed_q: int, rng: RandomStream) -> bool:
    """One α Alice already measured in ``{x, y}`` and then hands over as unmeasured.

    Bob measured β in a random basis and checks α against the conditional state for
    ``claimed_q``. Returns ``True`` when the check catches it.
    """
    pair = prepare_pair(PairKind.PROTOCOL, q)
    measure_alpha(pair, ALPHA_XY, rng)
    actual = measure_beta(pair, rng.bit(), rng)
    return measure_alpha(reprepare(pair), alpha_check_basis(claimed_q, actual), rng) == 1


def claim_detection_rate(trials: int, seed: int, claimed_flip: bool = False) -> float:
    rng = RandomStream(seed, ("claim-detection", int(claimed_flip)))
    hits = 0
    for _ in range(trials):
        q = rng.bit()
        hits += claim_detection_trial(q, q ^ int(claimed_flip), rng)
    return hits / trials


def relabel_detection_rate(code: LinearCode, trials: int, seed: int) -> float:
    """Fraction of trials in which at least one of ``d`` relabeled α claims is caught.

    Alice measures α on a weight-``d`` support and claims every one of them as
    unmeasured with her true bit, the cheapest honest-looking relabeling.
    """
    rng = RandomStream(seed, ("relabel", code.s, code.d))
    caught = 0
    for _ in range(trials):
        q = sample_codeword(code, rng, mixed=False)
        caught += any(claim_detection_trial(int(q[i]), int(q[i]), rng) for i in range(code.d))
    return caught / trials


def product_claim_lie_rate(freqs: LieFrequencies, trials: int, seed: int) -> float:
    """Per-index chance that a random member of ``M`` (product-state Alice) is a real lie."""
    rng = RandomStream(seed, ("product-claim",))
    lies = inm = 0
    cum = list(itertools.accumulate((freqs.fa, freqs.fb, freqs.fc)))
    kinds = (LieType.A, LieType.B, LieType.C)
    while inm < trials:
        p, q = rng.bit(), rng.bit()
        pair = prepare_pair(PairKind.PRODUCT, q, p=p)
        actual = measure_beta(pair, rng.bit(), rng)
        u = rng.random()
        kind = next((k for k, c in zip(kinds, cum) if u < c), LieType.HONEST)
        ann = apply_lie(actual, kind)
        if ann.q != q:
            inm += 1
            lies += classify_lie(actual, ann) is not LieType.HONEST
    return lies / inm


__all__ = [
    "KITAEV_BOUND",
    "BiasReport",
    "BitflipAlice",
    "CodewordRelabelAlice",
    "HelstromBob",
    "ProductStateAlice",
    "TypeBFloodBob",
    "TrialSummary",
    "bias_report",
    "claim_detection_rate",
    "claim_detection_trial",
    "collect_trials",
    "default_cheat_freqs",
    "estimate_bias",
    "make_alice",
    "make_bob",
    "parity_guess_accuracy",
    "product_claim_lie_rate",
    "relabel_detection_rate",
]
