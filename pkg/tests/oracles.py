"""Independent reference computations for the tests.

Nothing here imports the simulator's state code: kets are written out by hand,
pairs are built with np.kron, and probabilities come from enumeration.
"""

import itertools
import math

import numpy as np

R = 1 / math.sqrt(2)
KET = {
    (0, 0): np.array([1, 0], complex),
    (0, 1): np.array([0, 1], complex),
    (1, 0): np.array([R, R], complex),
    (1, 1): np.array([R, -R], complex),
}
X = np.array([1, 0], complex)
Y = np.array([0, 1], complex)


def protocol_pair(q):
    return R * np.kron(X, KET[0, q]) + R * np.kron(Y, KET[1, q])


def alpha_given_beta(psi, beta_ket):
    """Unnormalized α left after projecting β of ``psi`` on ``beta_ket``."""
    m = psi.reshape(2, 2)
    return m @ beta_ket.conj()


def claim_detection_probability(flip_claim=False):
    """P(check fails) for an α Alice measured in {x,y}, then claimed as unmeasured.

    Enumerates q, Alice's outcome, Bob's basis and Bob's outcome. Bob's check
    basis is the α state conditional on his β result for the claimed bit.
    """
    total = 0.0
    for q in (0, 1):
        psi = protocol_pair(q)
        claimed = q ^ int(flip_claim)
        for a_ket in (X, Y):
            beta = a_ket.conj() @ psi.reshape(2, 2)  # β left after α -> a_ket
            pa = float(np.vdot(beta, beta).real)
            if pa < 1e-15:
                continue
            beta = beta / math.sqrt(pa)
            for p, qb in itertools.product((0, 1), (0, 1)):
                pb = abs(np.vdot(KET[p, qb], beta)) ** 2
                good = alpha_given_beta(protocol_pair(claimed), KET[p, qb])
                norm = np.linalg.norm(good)
                if norm < 1e-15:
                    # The claimed state can never produce this β result: any α fails.
                    fail = 1.0
                else:
                    fail = 1.0 - abs(np.vdot(good / norm, a_ket)) ** 2
                total += 0.5 * pa * 0.5 * pb * fail
    return total


def product_lie_probability(fa, fb, fc):
    """P(real lie | index in M) when β was a product |p,q> known to Alice.

    Alice prepares uniformly random |p,q>, Bob measures in a random basis and
    lies with iid types. M holds indices whose announced bit differs from q.
    """
    fh = 1 - fa - fb - fc
    flips = {"h": (0, 0, fh), "a": (0, 1, fa), "b": (1, 0, fb), "c": (1, 1, fc)}
    in_m = lie_in_m = 0.0
    for p, q, pb in itertools.product((0, 1), (0, 1), (0, 1)):
        for qb in (0, 1):
            prob = 0.125 * abs(np.vdot(KET[pb, qb], KET[p, q])) ** 2
            for name, (dp, dq, w) in flips.items():
                ann_q = qb ^ dq
                if ann_q != q:
                    in_m += prob * w
                    if name != "h":
                        lie_in_m += prob * w
    return lie_in_m / in_m


def parity_accuracy_bruteforce(p, m):
    """P(guessed parity correct) by summing all 2^m error patterns."""
    total = 0.0
    for errs in itertools.product((0, 1), repeat=m):
        k = sum(errs)
        if k % 2 == 0:
            total += p ** (m - k) * (1 - p) ** k
    return total


def binom_pmf(n, p):
    return np.array([math.comb(n, k) * p**k * (1 - p) ** (n - k) for k in range(n + 1)])


def m_size_pmf(s, fa, fb, fc):
    """Distribution of |M| under exact lie counts.

    An index joins M when its announced bit differs from q: probability 1/4 for
    honest and type-b indices, 3/4 for type-a and type-c ones.
    """
    na, nb, nc = (math.floor(f * s + 1e-12) for f in (fa, fb, fc))
    low = s - na - nc
    return np.convolve(binom_pmf(low, 0.25), binom_pmf(na + nc, 0.75))


def m_size_abort_probability(s, d, fa, fb, fc):
    """P(|M| <= d + s/4) for an honest run."""
    pmf = m_size_pmf(s, fa, fb, fc)
    return float(sum(pmf[k] for k in range(len(pmf)) if not k > d + s / 4))


def z_ok(hits, n, p, z=4.0):
    sigma = math.sqrt(n * p * (1 - p))
    return abs(hits - n * p) <= max(z * sigma, z)


def distance_two_code():
    """Length-63 code with d = 2 by construction: weight-2 blocks plus one weight-3 tail.

    Supports are disjoint, so every nonzero codeword is a union of blocks.
    """
    from qcf.codes import LinearCode

    g = np.zeros((31, 63), dtype=np.uint8)
    for j in range(30):
        g[j, 2 * j] = g[j, 2 * j + 1] = 1
    g[30, 60:] = 1
    return LinearCode(63, 31, g, 2, "hand-built", "pairs-63")
