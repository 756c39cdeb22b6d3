"""Exact state-vector simulation of one α⊗β pair.

Amplitudes of a pair are stored over the product basis
``{|x>, |y>} ⊗ {|0,0>, |0,1>}`` in the order ``(x0, x1, y0, y1)``. Diagonal
basis kets are expanded at construction, so every pair is a plain 4-vector.
Each half can be measured exactly once; after a measurement the vector is the
collapsed product state and the residual of each half is kept alongside. A
collapsed qubit that is measured again is modelled by :func:`reprepare`, which
starts a fresh pair from the residual product state.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence, Union

import numpy as np

from .rng import RandomStream

NORM_TOL = 1e-9
SQRT_HALF = 1.0 / math.sqrt(2.0)

Amplitudes2 = tuple[complex, complex]


class QubitOutcome(NamedTuple):
    """A labelled qubit state ``|p,q>``: ``p`` selects the basis, ``q`` the ket."""

    p: int
    q: int

    def flip_p(self) -> "QubitOutcome":
        return QubitOutcome(1 - self.p, self.q)

    def flip_q(self) -> "QubitOutcome":
        return QubitOutcome(self.p, 1 - self.q)


def _check_bit(value: int, name: str) -> None:
    if value not in (0, 1):
        raise ValueError(f"{name} must be 0 or 1, got {value!r}")


def check_theta(theta: float) -> float:
    if not (0.0 < theta < math.pi / 2):
        raise ValueError(f"theta must lie strictly between 0 and pi/2, got {theta!r}")
    return float(theta)


@dataclass(frozen=True)
class SingleQubitState:
    amplitudes: Amplitudes2
    role: str = "beta"

    def __post_init__(self) -> None:
        if self.role not in ("alpha", "beta"):
            raise ValueError(f"role must be 'alpha' or 'beta', got {self.role!r}")
        a, b = self.amplitudes
        norm2 = abs(a) ** 2 + abs(b) ** 2
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"single-qubit state not normalized (|psi|^2 = {norm2})")

    def overlap(self, other: "SingleQubitState") -> complex:
        """<self|other>."""
        (a0, a1), (b0, b1) = self.amplitudes, other.amplitudes
        return a0.conjugate() * b0 + a1.conjugate() * b1

    def fidelity(self, other: "SingleQubitState") -> float:
        return abs(self.overlap(other)) ** 2

    def orthogonal(self) -> "SingleQubitState":
        """The unique (up to phase) state orthogonal to this one."""
        a, b = self.amplitudes
        return SingleQubitState((-b.conjugate(), a.conjugate()), self.role)

    def to_array(self) -> np.ndarray:
        return np.array(self.amplitudes, dtype=complex)


def normalized(amplitudes: Sequence[complex], role: str = "beta") -> SingleQubitState:
    a, b = complex(amplitudes[0]), complex(amplitudes[1])
    norm = math.sqrt(abs(a) ** 2 + abs(b) ** 2)
    if norm < 1e-15:
        raise ValueError("cannot normalize the zero vector")
    return SingleQubitState((a / norm, b / norm), role)


_KETS: dict[tuple[int, int], Amplitudes2] = {
    (0, 0): (1 + 0j, 0j),
    (0, 1): (0j, 1 + 0j),
    (1, 0): (SQRT_HALF + 0j, SQRT_HALF + 0j),
    (1, 1): (SQRT_HALF + 0j, -SQRT_HALF + 0j),
}
_BETA_BASES = {p: (_KETS[(p, 0)], _KETS[(p, 1)]) for p in (0, 1)}


def encode_outcome(p: int, q: int) -> SingleQubitState:
    """The pure β state ``|p,q>`` in computational amplitudes."""
    _check_bit(p, "p")
    _check_bit(q, "q")
    return SingleQubitState(_KETS[(p, q)], "beta")


ALPHA_X = SingleQubitState((1 + 0j, 0j), "alpha")
ALPHA_Y = SingleQubitState((0j, 1 + 0j), "alpha")
ALPHA_XY: tuple[SingleQubitState, SingleQubitState] = (ALPHA_X, ALPHA_Y)
ALPHA_DIAG: tuple[SingleQubitState, SingleQubitState] = (
    SingleQubitState((SQRT_HALF + 0j, SQRT_HALF + 0j), "alpha"),
    SingleQubitState((SQRT_HALF + 0j, -SQRT_HALF + 0j), "alpha"),
)

BasisLike = Union[str, Sequence[SingleQubitState], Sequence[Amplitudes2]]


def _basis_amplitudes(basis: BasisLike, role: str) -> tuple[Amplitudes2, Amplitudes2]:
    if isinstance(basis, str):
        if role == "alpha" and basis in ("xy", "diag"):
            pair = ALPHA_XY if basis == "xy" else ALPHA_DIAG
            return pair[0].amplitudes, pair[1].amplitudes
        raise ValueError(f"unknown {role} basis name {basis!r}")
    if len(basis) != 2:
        raise ValueError("a basis needs exactly two vectors")
    vecs = [b.amplitudes if isinstance(b, SingleQubitState) else tuple(complex(z) for z in b) for b in basis]
    for v in vecs:
        if abs(abs(v[0]) ** 2 + abs(v[1]) ** 2 - 1.0) > NORM_TOL:
            raise ValueError("basis vectors must be normalized")
    cross = vecs[0][0].conjugate() * vecs[1][0] + vecs[0][1].conjugate() * vecs[1][1]
    if abs(cross) > NORM_TOL:
        raise ValueError("basis vectors must be orthogonal")
    return vecs[0], vecs[1]


class PairKind(enum.Enum):
    MAX_ENTANGLED = "max-entangled"
    ALG3 = "alg3"
    ALG4 = "alg4"
    PROTOCOL = "protocol"
    PRODUCT = "product"
    GENERAL = "general"


class MeasurementError(RuntimeError):
    """A half was measured twice, or a residual was requested from an entangled pair."""


class PairState:
    """One α⊗β pair. Mutated only by measurement."""

    __slots__ = ("amps", "alpha_measured", "beta_measured", "_alpha_res", "_beta_res")

    def __init__(self, amps: Sequence[complex]):
        if len(amps) != 4:
            raise ValueError("a pair needs exactly four amplitudes")
        vec = [complex(a) for a in amps]
        norm2 = sum(abs(a) ** 2 for a in vec)
        if abs(norm2 - 1.0) > NORM_TOL:
            raise ValueError(f"pair state not normalized (|psi|^2 = {norm2})")
        self.amps = vec
        self.alpha_measured = False
        self.beta_measured = False
        self._alpha_res: Amplitudes2 | None = None
        self._beta_res: Amplitudes2 | None = None

    def __repr__(self) -> str:
        return f"PairState({self.status}, amps={[complex(round(a.real, 6), round(a.imag, 6)) for a in self.amps]})"

    @property
    def status(self) -> str:
        if self.alpha_measured and self.beta_measured:
            return "both-measured"
        if self.alpha_measured:
            return "alpha-measured"
        if self.beta_measured:
            return "beta-measured"
        return "intact"

    @property
    def intact(self) -> bool:
        return not (self.alpha_measured or self.beta_measured)

    @property
    def alpha_residual(self) -> SingleQubitState:
        """State of α once β (or α itself) has been measured."""
        if self._alpha_res is None:
            raise MeasurementError("alpha is still entangled; no residual state exists")
        return SingleQubitState(self._alpha_res, "alpha")

    @property
    def beta_residual(self) -> SingleQubitState:
        if self._beta_res is None:
            raise MeasurementError("beta is still entangled; no residual state exists")
        return SingleQubitState(self._beta_res, "beta")

    def to_array(self) -> np.ndarray:
        return np.array(self.amps, dtype=complex)

    def norm2(self) -> float:
        return sum(abs(a) ** 2 for a in self.amps)

    def _collapse(self, alpha: Amplitudes2, beta: Amplitudes2) -> None:
        ax, ay = alpha
        b0, b1 = beta
        self.amps = [ax * b0, ax * b1, ay * b0, ay * b1]
        self._alpha_res = alpha
        self._beta_res = beta


def _product(alpha: Amplitudes2, beta: Amplitudes2) -> list[complex]:
    return [alpha[0] * beta[0], alpha[0] * beta[1], alpha[1] * beta[0], alpha[1] * beta[1]]


def _add(u: list[complex], v: list[complex], cu: complex = 1.0, cv: complex = 1.0) -> list[complex]:
    return [cu * a + cv * b for a, b in zip(u, v)]


def prepare_pair(
    kind: PairKind,
    q: int = 0,
    theta: float = math.pi / 4,
    *,
    p: int = 0,
    coefficients: Sequence[complex] | None = None,
    alpha_kets: Sequence[SingleQubitState] | None = None,
) -> PairState:
    """Build a fresh, intact pair of the requested family.

    ``ALG3`` is ``cos θ|x>|0,q> + sin θ|y>|1,q>``; ``ALG4`` swaps the second ket
    for ``|1,¬q>``; ``PROTOCOL`` is ``ALG3`` at θ = π/4. ``PRODUCT`` pairs
    ``|p,q>`` on β with α parked in ``|x>``. ``GENERAL`` takes the four
    coefficients ``(c_x, c_y, c_x', c_y')`` multiplying ``|0,0>, |1,0>, |0,1>,
    |1,1>`` on β and normalizes; ``alpha_kets`` defaults to ``(x, y, x, y)``.
    """
    kind = PairKind(kind)
    x, y = ALPHA_X.amplitudes, ALPHA_Y.amplitudes
    if kind is PairKind.MAX_ENTANGLED:
        return PairState([SQRT_HALF, 0j, 0j, SQRT_HALF])
    if kind is PairKind.PRODUCT:
        _check_bit(p, "p")
        _check_bit(q, "q")
        return PairState(_product(x, _KETS[(p, q)]))
    if kind is PairKind.GENERAL:
        if coefficients is None or len(coefficients) != 4:
            raise ValueError("GENERAL pairs need four coefficients")
        kets = alpha_kets if alpha_kets is not None else (ALPHA_X, ALPHA_Y, ALPHA_X, ALPHA_Y)
        betas = (_KETS[(0, 0)], _KETS[(1, 0)], _KETS[(0, 1)], _KETS[(1, 1)])
        vec = [0j] * 4
        for c, a, b in zip(coefficients, kets, betas):
            amp = a.amplitudes if isinstance(a, SingleQubitState) else tuple(a)
            vec = _add(vec, _product(amp, b), 1.0, complex(c))
        norm = math.sqrt(sum(abs(v) ** 2 for v in vec))
        if norm < 1e-12:
            raise ValueError("coefficient set is not normalizable (zero vector)")
        return PairState([v / norm for v in vec])

    _check_bit(q, "q")
    if kind is PairKind.PROTOCOL:
        theta = math.pi / 4
    check_theta(theta)
    c, s = math.cos(theta), math.sin(theta)
    second_q = q if kind in (PairKind.ALG3, PairKind.PROTOCOL) else 1 - q
    return PairState(_add(_product(x, _KETS[(0, q)]), _product(y, _KETS[(1, second_q)]), c, s))


def _born_index(r0: float, rng: RandomStream) -> int:
    r0 = min(1.0, max(0.0, r0))
    return 0 if rng.random() < r0 else 1


def beta_branches(state: PairState, basis: BasisLike | int) -> list[tuple[float, Amplitudes2]]:
    """Unmeasured look-ahead: ``[(probability, normalized α residual or None)]`` per β outcome."""
    vecs = _BETA_BASES[basis] if isinstance(basis, int) else _basis_amplitudes(basis, "beta")
    a = state.amps
    out = []
    for e in vecs:
        e0, e1 = e[0].conjugate(), e[1].conjugate()
        rx = a[0] * e0 + a[1] * e1
        ry = a[2] * e0 + a[3] * e1
        prob = abs(rx) ** 2 + abs(ry) ** 2
        out.append((prob, (rx, ry)))
    return out


def measure_beta_in(state: PairState, basis: BasisLike | int, rng: RandomStream) -> int:
    """Measure β in ``basis`` (0/1 for the conjugate bases, or two vectors); returns the index."""
    if state.beta_measured:
        raise MeasurementError("beta half already measured")
    vecs = _BETA_BASES[basis] if isinstance(basis, int) else _basis_amplitudes(basis, "beta")
    a = state.amps
    e = vecs[0]
    e0, e1 = e[0].conjugate(), e[1].conjugate()
    rx = a[0] * e0 + a[1] * e1
    ry = a[2] * e0 + a[3] * e1
    k = _born_index(abs(rx) ** 2 + abs(ry) ** 2, rng)
    if k == 1:
        e = vecs[1]
        e0, e1 = e[0].conjugate(), e[1].conjugate()
        rx = a[0] * e0 + a[1] * e1
        ry = a[2] * e0 + a[3] * e1
    norm = math.sqrt(abs(rx) ** 2 + abs(ry) ** 2)
    state._collapse((rx / norm, ry / norm), e)
    state.beta_measured = True
    return k


def measure_beta(state: PairState, basis: int, rng: RandomStream) -> QubitOutcome:
    """Measure β in the conjugate basis ``basis`` and report ``|p',q'>``."""
    _check_bit(basis, "basis")
    return QubitOutcome(basis, measure_beta_in(state, basis, rng))


def measure_alpha(state: PairState, basis: BasisLike, rng: RandomStream) -> int:
    """Measure α in ``basis`` (``"xy"``, ``"diag"`` or two α vectors); returns 0 or 1."""
    if state.alpha_measured:
        raise MeasurementError("alpha half already measured")
    vecs = _basis_amplitudes(basis, "alpha")
    a = state.amps
    v = vecs[0]
    v0, v1 = v[0].conjugate(), v[1].conjugate()
    r0 = v0 * a[0] + v1 * a[2]
    r1 = v0 * a[1] + v1 * a[3]
    k = _born_index(abs(r0) ** 2 + abs(r1) ** 2, rng)
    if k == 1:
        v = vecs[1]
        v0, v1 = v[0].conjugate(), v[1].conjugate()
        r0 = v0 * a[0] + v1 * a[2]
        r1 = v0 * a[1] + v1 * a[3]
    norm = math.sqrt(abs(r0) ** 2 + abs(r1) ** 2)
    state._collapse(v, (r0 / norm, r1 / norm))
    state.alpha_measured = True
    return k


def reprepare(state: PairState) -> PairState:
    """Fresh pair in the collapsed product state of a measured pair.

    After either half is measured the pair is a product state, so this is what
    a later holder of the qubits physically has.
    """
    if state.intact:
        raise MeasurementError("an intact pair is still entangled; nothing to re-prepare")
    return PairState(state.amps)


def conditional_alpha(q: int, beta_outcome: QubitOutcome, theta: float) -> SingleQubitState:
    """α state left behind when β of ``cos θ|x>|0,q> + sin θ|y>|1,q>`` yields ``beta_outcome``."""
    pair = prepare_pair(PairKind.ALG3, q, theta)
    e = _KETS[(beta_outcome.p, beta_outcome.q)]
    a = pair.amps
    rx = a[0] * e[0].conjugate() + a[1] * e[1].conjugate()
    ry = a[2] * e[0].conjugate() + a[3] * e[1].conjugate()
    norm = math.sqrt(abs(rx) ** 2 + abs(ry) ** 2)
    if norm < 1e-12:
        raise ValueError(f"outcome {tuple(beta_outcome)} has zero amplitude for q={q}")
    return SingleQubitState((rx / norm, ry / norm), "alpha")


def project_pair(state: PairState, target: PairState) -> float:
    """|<target|state>|^2 for an intact pair."""
    if not state.intact:
        raise MeasurementError("collective projection needs an intact pair")
    if abs(target.norm2() - 1.0) > NORM_TOL:
        raise ValueError("target pair state is not normalized")
    amp = sum(t.conjugate() * v for t, v in zip(target.amps, state.amps))
    return min(1.0, abs(amp) ** 2)


def collective_check(state: PairState, target: PairState, rng: RandomStream) -> bool:
    """Two-outcome projective test ``{|target><target|, 1 - |target><target|}``; consumes both halves."""
    prob = project_pair(state, target)
    ok = rng.random() < prob
    state.alpha_measured = state.beta_measured = True
    if ok:
        state.amps = list(target.amps)
    return ok


# Density matrices -------------------------------------------------------------

DensityMatrix2 = np.ndarray


def validate_density_matrix(rho: np.ndarray, tol: float = NORM_TOL) -> np.ndarray:
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (2, 2):
        raise ValueError("expected a 2x2 matrix")
    if not np.allclose(rho, rho.conj().T, atol=tol):
        raise ValueError("density matrix is not Hermitian")
    if abs(np.trace(rho).real - 1.0) > tol:
        raise ValueError("density matrix trace is not 1")
    if min(_eigvals_hermitian(rho)) < -tol:
        raise ValueError("density matrix is not positive semidefinite")
    return rho


def _eigvals_hermitian(m: np.ndarray) -> tuple[float, float]:
    a, d = m[0, 0].real, m[1, 1].real
    b = m[0, 1]
    mean = (a + d) / 2
    rad = math.sqrt(((a - d) / 2) ** 2 + abs(b) ** 2)
    return mean - rad, mean + rad


def reduced_rho_q(q: int) -> DensityMatrix2:
    """Reduced β density matrix of the protocol pair for bit ``q``."""
    _check_bit(q, "q")
    a = prepare_pair(PairKind.PROTOCOL, q).to_array().reshape(2, 2)
    return a.T @ a.conj()


def trace_norm(m: np.ndarray) -> float:
    lo, hi = _eigvals_hermitian(np.asarray(m, dtype=complex))
    return abs(lo) + abs(hi)


def helstrom_success(rho0: DensityMatrix2, rho1: DensityMatrix2) -> float:
    """Optimal equal-prior success probability for telling ``rho0`` from ``rho1``."""
    rho0 = validate_density_matrix(rho0)
    rho1 = validate_density_matrix(rho1)
    return 0.5 + 0.25 * trace_norm(rho0 - rho1)


def helstrom_basis(rho0: DensityMatrix2, rho1: DensityMatrix2) -> tuple[SingleQubitState, SingleQubitState]:
    """Projective measurement achieving :func:`helstrom_success`; index 0 means "guess rho0"."""
    diff = validate_density_matrix(rho0) - validate_density_matrix(rho1)
    _, vecs = np.linalg.eigh(diff)
    guess0 = normalized(vecs[:, 1])
    return guess0, guess0.orthogonal()
