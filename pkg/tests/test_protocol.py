import math
import warnings

import numpy as np
import pytest
from oracles import m_size_abort_probability, z_ok

from qcf.adversary import default_cheat_freqs
from qcf.codes import build_code, codeword_masks, encode, is_codeword
from qcf.liedetect import LieFrequencies, LieLedger, Partition, expected_sizes
from qcf.protocol import (
    CapabilityError,
    ConfigError,
    HonestAlice,
    HonestBob,
    PartyContext,
    ProtocolConfig,
    ProtocolError,
    PublicParams,
    QuantumEnvironment,
    alice_check_and_partition,
    alice_prepare,
    bob_announce,
    bob_check_L,
    check_l_size,
    check_m_size,
    compensated_freqs,
    deduce_q,
    protocol_target,
    public_coin,
    run_protocol,
    run_protocol_full,
)
from qcf.quantum import PairKind, QubitOutcome, prepare_pair, project_pair
from qcf.rng import RandomStream
from qcf.transcript import EXACT_CHECKS, TOLERANCE_CHECKS, CheckId, CheckRecord

H63 = build_code("hamming-63-57")
H15 = build_code("hamming-15-11")
SPEC_FREQS = LieFrequencies(0.1, 0.1, 0.05)


@pytest.fixture(scope="module")
def cfg():
    """Hamming(63,57) with the honest feasibility margin."""
    return ProtocolConfig(H63, default_cheat_freqs(H63))


def honest(config, seed, stream=0):
    return run_protocol_full(HonestAlice(), HonestBob(), config, seed, stream)


# Configuration


def test_config_rejects_zero_freqs():
    with pytest.raises(ConfigError, match="infeasible"):
        ProtocolConfig(H63, LieFrequencies(0, 0, 0))


def test_config_accepts_reference_freqs():
    c = ProtocolConfig(H63, SPEC_FREQS)
    assert 2 * 3 / 63 < 0.15 < 0.5
    assert c.theta == pytest.approx(math.pi / 4)
    assert c.nontrivial_threshold == 8
    assert c.within_margin
    tight = ProtocolConfig(H63, LieFrequencies(0.08, 0.1, 0.05))
    assert not tight.within_margin
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tight.warn_if_tight()
        c.warn_if_tight()
    assert len(caught) == 1


@pytest.mark.parametrize(
    "kwargs",
    [dict(z=0), dict(bob_mode="later"), dict(lie_mode="poisson"), dict(withhold_fraction=1.0), dict(nontrivial_fraction=0)],
)
def test_config_field_validation(cfg, kwargs):
    with pytest.raises(ConfigError):
        ProtocolConfig(H63, cfg.bob_freqs, **kwargs)


def test_config_rejects_single_parity_codes():
    with pytest.raises(ConfigError, match="parity census"):
        ProtocolConfig(build_code("repetition-9"), LieFrequencies(0.3, 0.25, 0.15))


def test_compensated_freqs():
    target = LieFrequencies(0.24, 0.21, 0.16)
    m = compensated_freqs(target, 0.2)
    # Mixing (1-w) of m with w of uniform labels restores the target.
    for got, want in zip(m.as_tuple(), target.as_tuple()):
        assert 0.8 * got + 0.2 * 0.25 == pytest.approx(want)
    with pytest.raises(ConfigError):
        compensated_freqs(LieFrequencies(0.3, 0.15, 0.01), 0.2)
    with pytest.raises(ConfigError):
        ProtocolConfig(H63, LieFrequencies(0.3, 0.15, 0.01), bob_mode="delayed")


# Step-level operations


def test_alice_prepare(cfg):
    q, pairs = alice_prepare(cfg, RandomStream(1))
    assert is_codeword(cfg.code, q)
    for qi, pair in zip(q, pairs):
        assert project_pair(pair, prepare_pair(PairKind.PROTOCOL, int(qi))) == pytest.approx(1.0)


def test_codeword_marginals_match_column_density():
    config = ProtocolConfig(H15, LieFrequencies(0.27, 0.23, 0.18))
    # Oracle: mixed codewords (neither all-zero nor all-one), enumerated.
    words = [(int(m) >> np.arange(15)) & 1 for m in codeword_masks(H15)]
    mixed = np.array([w for w in words if 0 < w.sum() < 15])
    density = mixed.mean(axis=0)
    rng = RandomStream(2)
    n = 10_000
    ones = np.zeros(15)
    for _ in range(n):
        ones += alice_prepare(config, rng)[0]
    for i in range(15):
        assert z_ok(ones[i], n, density[i])


def test_announced_bit_counts_balanced():
    s = 10_000
    rng = RandomStream(3)
    q = [i % 2 for i in range(s)]
    pairs = [prepare_pair(PairKind.PROTOCOL, qi) for qi in q]
    ann, ledger = bob_announce(pairs, LieFrequencies(0.2, 0.2, 0.1), rng)
    assert z_ok(sum(a.q for a in ann), s, 0.5)
    assert len(ledger) == s


def test_alice_checks_on_constructed_announcements(cfg):
    q, pairs = alice_prepare(cfg, RandomStream(4))
    zeros = [QubitOutcome(0, 0)] * cfg.s
    part, (counts, msize) = alice_check_and_partition(q, pairs, zeros, cfg, RandomStream(5))
    assert counts.check_id is CheckId.A4_COUNTS and not counts.passed
    part.validate(cfg.s)
    assert msize.check_id is CheckId.A4_MSIZE


def test_m_size_threshold_is_strict(cfg):
    public = cfg.public()
    bound = 3 + 63 / 4
    for m, ok in ((18, False), (19, True)):
        part = Partition(frozenset(range(m, 63)), frozenset(), frozenset(range(m)))
        rec = check_m_size(part, public)
        assert rec.passed is ok and rec.expected == {"greater_than": bound}


def test_all_honest_bob_m_size_abort_rate():
    # E|M| = s/4 sits below d + s/4, so the check fails most of the time.
    config = ProtocolConfig(H63, SPEC_FREQS)
    n = 400
    rng = RandomStream(6)
    fails = 0
    for _ in range(n):
        q, pairs = alice_prepare(config, rng)
        ann, _ = bob_announce(pairs, LieFrequencies(0, 0, 0), rng)
        _, (_, msize) = alice_check_and_partition(q, pairs, ann, config, rng)
        fails += not msize.passed
    p = m_size_abort_probability(63, 3, 0, 0, 0)
    assert p > 0.75
    assert z_ok(fails, n, p)


def test_empty_L_fails_size_check_at_large_s():
    freqs = LieFrequencies(0.2, 0.2, 0.1)
    big = PublicParams(build_code((400, 8, 1)), 4.0, 50)
    assert not check_l_size(frozenset(), freqs, big).passed
    # At s = 63 the 4-sigma window around 11.0 still reaches zero.
    small = ProtocolConfig(H63, freqs)
    rec = check_l_size(frozenset(), freqs, small.public())
    assert rec.expected == pytest.approx(expected_sizes(freqs, 63).L)
    assert rec.passed


def test_honest_index_in_L_fails():
    config = ProtocolConfig(H63, SPEC_FREQS)
    ledger = LieLedger()
    ledger.record(QubitOutcome(0, 0), QubitOutcome(0, 1))
    ledger.record(QubitOutcome(1, 0), QubitOutcome(1, 0))
    size, all_lies = bob_check_L(frozenset({0, 1}), ledger, SPEC_FREQS, config)
    assert size.check_id is CheckId.B6_LSIZE
    assert all_lies.check_id is CheckId.B6_LALLLIES and not all_lies.passed
    _, ok = bob_check_L(frozenset({0}), ledger, SPEC_FREQS, config)
    assert ok.passed


def test_deduce_q():
    qa = [0, 1, 1, 0]
    everything = Partition(frozenset(range(4)), frozenset(), frozenset())
    assert deduce_q(qa, everything).tolist() == qa
    part = Partition(frozenset({0}), frozenset({1}), frozenset({2, 3}))
    assert deduce_q(qa, part).tolist() == [0, 0, 0, 1]
    moved = Partition(frozenset({0, 3}), frozenset({1}), frozenset({2}))
    diff = deduce_q(qa, part) ^ deduce_q(qa, moved)
    assert diff.tolist() == [0, 0, 0, 1]


def test_public_coin():
    ann = [QubitOutcome(0, 1), QubitOutcome(1, 0), QubitOutcome(0, 0)]
    assert public_coin(ann, frozenset(), 1) == 1
    assert public_coin(ann, frozenset({0}), 0) == 0
    assert public_coin(ann, frozenset({1, 2}), 0) == 0
    assert public_coin(ann, frozenset({1}), 1) == 0


# Capability discipline


def test_capabilities():
    env = QuantumEnvironment(RandomStream(7))
    alice, bob = env.port("alice"), env.port("bob")
    h = alice.create(prepare_pair(PairKind.PROTOCOL, 0))
    with pytest.raises(CapabilityError):
        bob.measure_beta(h, 0)
    alice.send([h], "beta", "bob")
    with pytest.raises(CapabilityError):
        alice.measure_beta(h, 0)
    with pytest.raises(CapabilityError):
        bob.measure_alpha(h, "xy")
    with pytest.raises(CapabilityError):
        bob.collective_check(h, protocol_target(0))
    with pytest.raises(CapabilityError):
        bob.send([h], "alpha", "bob")
    with pytest.raises(CapabilityError):
        alice.measure_alpha(99, "xy")
    bob.measure_beta(h, 1)
    alice.send([h], "alpha", "bob")
    assert bob.owns(h, "alpha") and not alice.owns(h, "alpha")
    collapsed = prepare_pair(PairKind.PROTOCOL, 0)
    collapsed.beta_measured = True
    with pytest.raises(CapabilityError):
        alice.create(collapsed)


def test_remeasuring_a_collapsed_half_goes_through_reprepare():
    env = QuantumEnvironment(RandomStream(8))
    alice = env.port("alice")
    h = alice.create(prepare_pair(PairKind.PROTOCOL, 0))
    first = alice.measure_alpha(h, "xy")
    assert all(alice.measure_alpha(h, "xy") == first for _ in range(10))


def test_alice_never_sees_bob_private_data(cfg):
    r = honest(cfg, 9)
    assert r.alice.ctx.bob is None
    assert not hasattr(r.alice, "ledger")
    assert r.bob.ctx.bob is not None


def test_honest_bob_needs_private_params(cfg):
    env = QuantumEnvironment(RandomStream(0))
    with pytest.raises(ConfigError):
        HonestBob().bind(PartyContext(env.port("bob"), RandomStream(0), cfg.public()))


# Whole runs


def test_determinism(cfg):
    a = honest(cfg, 42)
    b = honest(cfg, 42)
    assert a.transcript.to_text() == b.transcript.to_text()
    assert a.transcript.full_digest() == b.transcript.full_digest()
    c = honest(cfg, 43)
    assert c.transcript.full_digest() != a.transcript.full_digest()
    d = honest(cfg, 42, stream=1)
    assert d.transcript.full_digest() != a.transcript.full_digest()


def test_run_protocol_returns_outcome_and_transcript(cfg):
    outcome, transcript = run_protocol(HonestAlice(), HonestBob(), cfg, 5)
    assert transcript.outcome == outcome


def test_message_order(cfg):
    r = honest(cfg, 10)
    assert r.outcome.completed
    steps = [(e.step, e.kind, e.name) for e in r.transcript.entries]
    assert [s for s, _, _ in steps] == ["2", "3", "4", "4", "5", "6", "6", "7", "8", "8", "9", "9", "9", "9", "10"]
    names = [n for _, k, n in steps if k == "message"]
    assert names == ["BetaTransfer", "AnnounceResults", "AnnounceL", "AnnounceF", "AnnounceNU", "AlphaTransfer"]
    checks = [n for _, k, n in steps if k == "check"]
    assert checks == [c.value for c in CheckId]


@pytest.mark.parametrize("mode", ["measure-first", "delayed"])
def test_honest_runs_pass_every_check(cfg, mode):
    config = ProtocolConfig(H63, cfg.bob_freqs, bob_mode=mode)
    completed = 0
    for seed in range(200):
        r = honest(config, 100, seed)
        if not r.outcome.completed:
            assert r.outcome.check_id is CheckId.A4_MSIZE
            continue
        completed += 1
        assert all(c["verdict"] == "pass" for c in r.transcript.checks)
        o = r.outcome
        assert o.c == o.alice_c == o.bob_c
        assert np.array_equal(r.bob.q, r.alice.q)
        part = Partition(r.alice.part.U, r.alice.part.L, r.alice.part.N)
        part.validate(63)
        assert part.U == frozenset(i for i in range(63) if r.bob.announced[i].q == r.alice.q[i])
    assert completed >= 195


def test_exactness_split(cfg):
    r = honest(cfg, 11)
    for rec in r.transcript.checks:
        cid = CheckId(rec["check_id"])
        if cid in EXACT_CHECKS:
            assert rec["tolerance"] == 0
        else:
            assert cid in TOLERANCE_CHECKS or cid is CheckId.A4_COUNTS
    assert TOLERANCE_CHECKS == {CheckId.B6_LSIZE, CheckId.B92_SIZES}
    assert {CheckId.B6_LALLLIES, CheckId.B93_NOTYPEB, CheckId.A4_MSIZE, CheckId.B91_CODEWORD} <= EXACT_CHECKS


def test_reference_config_abort_rate_matches_exact_distribution():
    # Honest aborts at the reference frequencies are almost all |M| <= d + s/4.
    config = ProtocolConfig(H63, SPEC_FREQS)
    n = 1500
    aborts = sum(not honest(config, 12, i).outcome.completed for i in range(n))
    assert z_ok(aborts, n, m_size_abort_probability(63, 3, 0.1, 0.1, 0.05))


def _sizes(config, seed, n):
    out = {k: [] for k in ("U", "L", "N")}
    for i in range(n):
        part = honest(config, seed, i).alice.part
        for k, v in part.sizes().items():
            if k in out:
                out[k].append(v)
    return {k: np.array(v, dtype=float) for k, v in out.items()}


def test_order_independence_of_set_sizes(cfg):
    n = 1500
    first = _sizes(ProtocolConfig(H63, cfg.bob_freqs, lie_mode="iid"), 13, n)
    late = _sizes(ProtocolConfig(H63, cfg.bob_freqs, lie_mode="iid", bob_mode="delayed"), 14, n)
    for k in first:
        a, b = first[k], late[k]
        se = math.sqrt(a.var(ddof=1) / n + b.var(ddof=1) / n)
        assert abs(a.mean() - b.mean()) <= 4 * se, k
        # Spread agrees too: variance ratio within a loose F-type window.
        assert 0.8 < a.var() / b.var() < 1.25, k


def test_protocol_errors_on_malformed_strategies(cfg):
    class ShortBob(HonestBob):
        def announce(self, handles):
            return super().announce(handles)[:-1]

    with pytest.raises(ProtocolError):
        run_protocol_full(HonestAlice(), ShortBob(), cfg, 0)

    class OverlapAlice(HonestAlice):
        def announce_NU(self, f):
            return self.part.N | self.part.L, self.part.U

    r = None
    for seed in range(20):
        try:
            r = run_protocol_full(OverlapAlice(), HonestBob(), cfg, seed)
        except ProtocolError:
            break
    else:
        pytest.fail(f"overlapping sets were accepted: {r.outcome}")


def test_check_record_payload():
    rec = CheckRecord(CheckId.B91_CODEWORD, "bob", 0, 1, 0, False)
    assert rec.payload()["verdict"] == "fail"


def test_encode_sanity_for_runs():
    assert is_codeword(H63, encode(H63, np.zeros(57, dtype=np.uint8)))
