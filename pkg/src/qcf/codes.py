"""Binary linear codes used to constrain Alice's secret string.

Only two properties matter here: both parity classes must be well populated,
and distinct codewords must differ in at least ``d`` positions. No decoding.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .liedetect import LieFrequencies
from .rng import RandomStream

BRUTE_FORCE_MAX_K = 24
RANDOM_MAX_K = 12


class CodeError(ValueError):
    """Infeasible or malformed code request."""


# GF(2) helpers ----------------------------------------------------------------------


def gf2_rref(m: np.ndarray) -> tuple[np.ndarray, list[int]]:
    r = np.array(m, dtype=np.uint8) % 2
    rows, cols = r.shape
    pivots: list[int] = []
    row = 0
    for col in range(cols):
        if row >= rows:
            break
        hits = np.nonzero(r[row:, col])[0]
        if hits.size == 0:
            continue
        pivot = row + hits[0]
        if pivot != row:
            r[[row, pivot]] = r[[pivot, row]]
        others = np.nonzero(r[:, col])[0]
        for o in others:
            if o != row:
                r[o] ^= r[row]
        pivots.append(col)
        row += 1
    return r[:row], pivots


def gf2_rank(m: np.ndarray) -> int:
    return len(gf2_rref(m)[1])


def gf2_nullspace(m: np.ndarray) -> np.ndarray:
    """Rows spanning ``{v : m v = 0}``."""
    r, pivots = gf2_rref(m)
    n = np.asarray(m).shape[1]
    free = [c for c in range(n) if c not in pivots]
    basis = np.zeros((len(free), n), dtype=np.uint8)
    for i, f in enumerate(free):
        basis[i, f] = 1
        for row, pc in enumerate(pivots):
            basis[i, pc] = r[row, f]
    return basis


# Code type ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class LinearCode:
    s: int
    k: int
    generator: np.ndarray
    d: int
    provenance: str
    name: str = ""
    parity_check: np.ndarray = field(init=False, repr=False)

    def __post_init__(self) -> None:
        g = np.asarray(self.generator, dtype=np.uint8)
        if g.shape != (self.k, self.s):
            raise CodeError(f"generator shape {g.shape} does not match (k, s) = ({self.k}, {self.s})")
        if gf2_rank(g) != self.k:
            raise CodeError("generator rows are not linearly independent over GF(2)")
        g.setflags(write=False)
        object.__setattr__(self, "generator", g)
        h = gf2_nullspace(g)
        h.setflags(write=False)
        object.__setattr__(self, "parity_check", h)

    def __repr__(self) -> str:
        label = self.name or "code"
        return f"<LinearCode {label} (s={self.s}, k={self.k}, d={self.d}, {self.provenance})>"

    @property
    def size(self) -> int:
        return 2**self.k

    def descriptor(self) -> dict:
        return {"name": self.name, "s": self.s, "k": self.k, "d": self.d, "provenance": self.provenance}


def encode(code: LinearCode, message) -> np.ndarray:
    msg = np.asarray(message, dtype=np.uint8)
    if msg.shape != (code.k,):
        raise CodeError(f"message must have length k={code.k}")
    return (msg @ code.generator) % 2


def is_codeword(code: LinearCode, word) -> bool:
    w = np.asarray(word, dtype=np.uint8)
    if w.shape != (code.s,):
        raise CodeError(f"word must have length s={code.s}")
    if code.parity_check.shape[0] == 0:
        return True
    return not np.any((code.parity_check.astype(np.int64) @ w.astype(np.int64)) % 2)


def hamming_distance(u, v) -> int:
    return int(np.count_nonzero(np.asarray(u) != np.asarray(v)))


# Enumeration -------------------------------------------------------------------------


def _row_masks(code: LinearCode) -> list[int]:
    weights = 1 << np.arange(code.s, dtype=object)
    return [int(sum(int(b) * int(w) for b, w in zip(row, weights))) for row in code.generator]


def codeword_masks(code: LinearCode) -> np.ndarray:
    """All ``2^k`` codewords as bit masks (bit ``i`` = position ``i``)."""
    if code.k > BRUTE_FORCE_MAX_K:
        raise CodeError(f"k={code.k} is above the brute-force bound {BRUTE_FORCE_MAX_K}")
    rows = _row_masks(code)
    if code.s <= 64:
        words = np.zeros(1, dtype=np.uint64)
        for r in rows:
            words = np.concatenate([words, words ^ np.uint64(r)])
        return words
    words_obj = [0]
    for r in rows:
        words_obj = words_obj + [w ^ r for w in words_obj]
    return np.array(words_obj, dtype=object)


def _weights(words: np.ndarray) -> np.ndarray:
    if words.dtype == np.uint64:
        return np.bitwise_count(words).astype(np.int64)
    return np.array([int(w).bit_count() for w in words], dtype=np.int64)


def mask_to_bits(mask: int, s: int) -> np.ndarray:
    return np.array([(int(mask) >> i) & 1 for i in range(s)], dtype=np.uint8)


def bits_to_mask(bits) -> int:
    return sum(int(b) << i for i, b in enumerate(bits))


def min_distance(code: LinearCode) -> int:
    """Minimum weight over nonzero codewords, by exhaustive enumeration."""
    if code.k == 0:
        raise CodeError("a zero-dimensional code has no nonzero codeword")
    w = _weights(codeword_masks(code))
    return int(w[1:].min())


def parity_census(code: LinearCode) -> tuple[int, int]:
    """(even, odd) codeword counts.

    Overall parity is a linear functional on the code: it vanishes on every
    codeword when all generator rows are even, and otherwise splits the code in
    two equal cosets. Exact for any ``k``.
    """
    odd_row = bool(np.any(code.generator.sum(axis=1) % 2))
    if not odd_row:
        return code.size, 0
    half = 2 ** (code.k - 1)
    return half, half


def low_weight_codewords(code: LinearCode, weight: int, limit: int | None = None) -> list[np.ndarray]:
    """Codewords of exactly ``weight`` found by scanning supports against the parity check."""
    h = code.parity_check.astype(np.int64)
    cols = [h[:, i] for i in range(code.s)]
    found = []
    for support in itertools.combinations(range(code.s), weight):
        if not np.any(sum(cols[i] for i in support) % 2):
            w = np.zeros(code.s, dtype=np.uint8)
            w[list(support)] = 1
            found.append(w)
            if limit is not None and len(found) >= limit:
                break
    return found


# Construction ------------------------------------------------------------------------


def hamming_code(r: int) -> LinearCode:
    n = 2**r - 1
    h = np.array([[(j >> b) & 1 for j in range(1, n + 1)] for b in range(r)], dtype=np.uint8)
    g = gf2_nullspace(h)
    return LinearCode(n, n - r, g, 3, "preset", f"hamming-{n}-{n - r}")


def repetition_code(s: int) -> LinearCode:
    if s < 2:
        raise CodeError("repetition code needs s >= 2")
    return LinearCode(s, 1, np.ones((1, s), dtype=np.uint8), s, "preset", f"repetition-{s}")


PRESETS = {
    "hamming-7-4": lambda: hamming_code(3),
    "hamming-15-11": lambda: hamming_code(4),
    "hamming-31-26": lambda: hamming_code(5),
    "hamming-63-57": lambda: hamming_code(6),
}


def random_code(s: int, k: int, seed: int, max_tries: int = 1000) -> LinearCode:
    """Random full-rank code with an odd-weight codeword and brute-forced ``d >= 2``."""
    if not (1 <= k <= RANDOM_MAX_K) or k >= s:
        raise CodeError(f"random codes need 1 <= k <= {RANDOM_MAX_K} and k < s (got s={s}, k={k})")
    rng = RandomStream(seed, ("random-code", s, k))
    for _ in range(max_tries):
        g = np.array([[rng.bit() for _ in range(s)] for _ in range(k)], dtype=np.uint8)
        if gf2_rank(g) != k or not np.any(g.sum(axis=1) % 2):
            continue
        trial = LinearCode(s, k, g, 0, "random-verified", f"random-{s}-{k}-{seed}")
        d = min_distance(trial)
        if d >= 2:
            return LinearCode(s, k, g, d, "random-verified", trial.name)
    raise CodeError(f"no admissible random ({s},{k}) code found in {max_tries} attempts")


def build_code(spec: str | tuple[int, int, int]) -> LinearCode:
    """Preset name (``hamming-15-11``, ``repetition-7``) or ``(s, k, seed)``."""
    if isinstance(spec, tuple):
        return random_code(*spec)
    if spec in PRESETS:
        return PRESETS[spec]()
    m = re.fullmatch(r"repetition-(\d+)", spec)
    if m:
        return repetition_code(int(m.group(1)))
    m = re.fullmatch(r"random-(\d+)-(\d+)-(\d+)", spec)
    if m:
        return random_code(int(m.group(1)), int(m.group(2)), int(m.group(3)))
    raise CodeError(f"unknown code {spec!r}")


# Descriptor files: "s k d" header, then k rows of 0/1 ------------------------------------


def dumps_code(code: LinearCode) -> str:
    lines = [f"{code.s} {code.k} {code.d}"]
    lines += ["".join(str(int(b)) for b in row) for row in code.generator]
    return "\n".join(lines) + "\n"


def loads_code(text: str, name: str = "file") -> LinearCode:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    if not lines:
        raise CodeError("empty code descriptor")
    try:
        s, k, d = (int(x) for x in lines[0].split())
    except ValueError as exc:
        raise CodeError(f"bad header {lines[0]!r}; expected 's k d'") from exc
    rows = lines[1:]
    if len(rows) != k:
        raise CodeError(f"header promises {k} rows, found {len(rows)}")
    for r in rows:
        if len(r) != s or set(r) - {"0", "1"}:
            raise CodeError(f"generator row {r!r} is not a {s}-bit 0/1 string")
    g = np.array([[int(c) for c in r] for r in rows], dtype=np.uint8)
    code = LinearCode(s, k, g, d, "file", name)
    if k <= BRUTE_FORCE_MAX_K:
        actual = min_distance(code)
        if actual != d:
            raise CodeError(f"declared d={d} but the code's minimum distance is {actual}")
    return code


def load_code_file(path: str | Path) -> LinearCode:
    p = Path(path)
    return loads_code(p.read_text(), name=p.stem)


# Protocol compatibility ----------------------------------------------------------------


def feasible(code: LinearCode, freqs: LieFrequencies) -> bool:
    """Lie frequencies Bob may use with this code: ``2d/s < fa+fc < 1/2`` and ``fb > fc``."""
    return 2 * code.d / code.s < freqs.fa + freqs.fc < 0.5 and freqs.fb > freqs.fc


def feasibility_line(code: LinearCode) -> str:
    return f"2d/s = {2 * code.d / code.s:.3f} < f_a+f_c < 0.5"


def has_mixed_codeword(code: LinearCode) -> bool:
    """True when some codeword is neither all-zero nor all-one."""
    return code.k >= 2 or int(code.generator[0].sum()) < code.s


def sample_codeword(code: LinearCode, rng: RandomStream, mixed: bool = True) -> np.ndarray:
    """Uniform codeword; with ``mixed``, all-zero and all-one words are rejected when avoidable."""
    mixed = mixed and has_mixed_codeword(code)
    while True:
        word = encode(code, np.array([rng.bit() for _ in range(code.k)], dtype=np.uint8))
        weight = int(word.sum())
        if not mixed or 0 < weight < code.s:
            return word
