"""Construction of every optical state family used in the pipelines.

Finite-rank states are built as core state -> Gaussian circuit -> loss
channels, all in truncated Fock space.  The named families (N00N, cat,
squeezed vacuum) have dedicated constructors.  Operator conventions are
documented in statelab.fock.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import TruncationError, ValidationError
from .fock import (DEFAULT_TAIL_TOL, DensityMatrix, FockSpec, PureState,
                   annihilation_matrix, apply_single_mode_op,
                   apply_two_mode_op, creation_matrix)


def fock_cutoff(r: int, xi_max: float) -> int:
    """Per-mode cutoff heuristic for circuit-built states: r + ceil(10 xi) + 6,
    clamped to [8, 24]."""
    return int(np.clip(r + math.ceil(10.0 * xi_max) + 6, 8, 24))


def squeezed_cutoff(xi: float) -> int:
    """Cutoff for single-mode squeezed vacuum states.

    The generic clamp to 24 levels is far too small at xi ~ 1: the photon
    number tail decays like tanh(xi)^(2n), so quadrature variances converge
    to 1e-6 only around a hundred levels.  16 + ceil(80 xi) keeps the
    truncation error below 1e-7 across xi <= 1.2.
    """
    return int(np.clip(16 + math.ceil(80.0 * xi), 16, 120))


# ---------------------------------------------------------------------------
# Core states


@dataclass
class CoreState:
    """Bounded-support superposition in the multimode Fock basis."""

    num_modes: int
    terms: list[tuple[tuple[int, ...], complex]]

    def __post_init__(self):
        if not self.terms:
            raise ValidationError("core state needs at least one term")
        for ns, _ in self.terms:
            if len(ns) != self.num_modes:
                raise ValidationError(f"index {ns} has wrong mode count")
        nrm = math.sqrt(sum(abs(c) ** 2 for _, c in self.terms))
        if abs(nrm - 1.0) > 1e-9:
            raise ValidationError(f"core state norm {nrm} != 1")

    @property
    def stellar_rank(self) -> int:
        return max(sum(ns) for ns, c in self.terms if abs(c) > 0)

    def max_rank_weight(self) -> float:
        """Largest |coefficient| among the maximal-total-photon terms."""
        r = self.stellar_rank
        return max(abs(c) for ns, c in self.terms if sum(ns) == r)

    def to_pure(self, spec: FockSpec) -> PureState:
        if spec.num_modes != self.num_modes:
            raise ValidationError("mode count mismatch")
        amps = np.zeros(spec.total_dim, dtype=complex)
        for ns, c in self.terms:
            if max(ns) >= spec.cutoff:
                raise ValidationError(
                    f"core term {ns} exceeds cutoff {spec.cutoff}")
            amps[spec.basis_index(ns)] = c
        return PureState(spec, amps)


def _random_multi_index(total: int, m: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform composition of `total` photons over m modes (stars and bars)."""
    if total == 0 or m == 1:
        out = [0] * m
        out[0] = total
        if m > 1:
            return tuple(out[:])  # all zeros when total == 0
        return tuple(out)
    bars = np.sort(rng.choice(total + m - 1, size=m - 1, replace=False))
    prev = -1
    parts = []
    for b in bars:
        parts.append(int(b - prev - 1))
        prev = b
    parts.append(int(total + m - 2 - prev))
    return tuple(parts)


def random_core_state(m: int, r: int, rng_seed) -> CoreState:
    """Random core state of exact stellar rank r.

    1 to 4 distinct multi-indices with total photon number <= r, one of them
    attaining r; coefficients are complex standard normal, then normalized.
    Rank 0 is the vacuum with coefficient exactly 1.
    """
    if r < 0:
        raise ValidationError("stellar rank must be >= 0")
    rng = _as_rng(rng_seed)
    if r == 0:
        return CoreState(m, [((0,) * m, 1.0 + 0.0j)])
    k = int(rng.integers(1, 5))
    indices = {_random_multi_index(r, m, rng)}
    attempts = 0
    while len(indices) < k and attempts < 200:
        total = int(rng.integers(0, r + 1))
        indices.add(_random_multi_index(total, m, rng))
        attempts += 1
    ordered = sorted(indices)
    coeffs = rng.standard_normal(len(ordered)) + 1j * rng.standard_normal(len(ordered))
    coeffs /= np.linalg.norm(coeffs)
    core = CoreState(m, [(ns, complex(c)) for ns, c in zip(ordered, coeffs)])
    assert core.stellar_rank == r
    return core


def _as_rng(seed_or_rng) -> np.random.Generator:
    if isinstance(seed_or_rng, np.random.Generator):
        return seed_or_rng
    return np.random.Generator(np.random.PCG64(seed_or_rng))


def stellar_function_eval(core: CoreState, alpha) -> complex:
    """Value of the core state's stellar function at a complex point.

    For a finite-rank core this is the multivariate polynomial
    sum_terms c * prod_i alpha_i^{n_i} / sqrt(n_i!).
    """
    alpha = np.asarray(alpha, dtype=complex).reshape(-1)
    if alpha.shape != (core.num_modes,):
        raise ValidationError(f"expected {core.num_modes} components")
    val = 0.0 + 0.0j
    for ns, c in core.terms:
        term = c
        for a_i, n_i in zip(alpha, ns):
            term = term * a_i ** n_i / math.sqrt(math.factorial(n_i))
        val += term
    return complex(val)


# ---------------------------------------------------------------------------
# Gaussian circuits (Fock-space realization)


@dataclass(frozen=True)
class BeamSplitter:
    """Coupler between two modes; theta = |coupling|, phi = arg(coupling)."""

    mode_a: int
    mode_b: int
    coupling: complex

    @property
    def theta(self) -> float:
        return abs(self.coupling)

    @property
    def phi(self) -> float:
        return float(np.angle(self.coupling))


@dataclass
class GaussianCircuit:
    """Interferometer / per-mode squeeze+displace / interferometer sandwich.

    Realizes G = U * (prod_i S_i(xi_i) D_i(alpha_i)) * V, so V acts first and
    each mode is displaced before it is squeezed.
    """

    m: int
    pre: list[BeamSplitter] = field(default_factory=list)
    squeezings: list[complex] = field(default_factory=list)
    displacements: list[complex] = field(default_factory=list)
    post: list[BeamSplitter] = field(default_factory=list)
    xi_max: float | None = None

    def __post_init__(self):
        if not self.squeezings:
            self.squeezings = [0j] * self.m
        if not self.displacements:
            self.displacements = [0j] * self.m
        if len(self.squeezings) != self.m or len(self.displacements) != self.m:
            raise ValidationError("per-mode parameter count mismatch")
        for chain, name in ((self.pre, "pre"), (self.post, "post")):
            if self.m > 1 and len(chain) != self.m - 1:
                raise ValidationError(
                    f"{name} interferometer must have {self.m - 1} couplers, got {len(chain)}")
            if self.m == 1 and chain:
                raise ValidationError("single-mode circuit cannot have couplers")
            for bs in chain:
                if not (0 <= bs.mode_a < self.m and 0 <= bs.mode_b < self.m):
                    raise ValidationError("coupler mode out of range")
        if self.xi_max is not None:
            for xi in self.squeezings:
                if abs(xi) > self.xi_max + 1e-12:
                    raise ValidationError(f"|xi|={abs(xi)} exceeds xi_max={self.xi_max}")

    @property
    def max_squeezing(self) -> float:
        return max(abs(xi) for xi in self.squeezings)


def identity_circuit(m: int) -> GaussianCircuit:
    pre = [BeamSplitter(i, i + 1, 0j) for i in range(m - 1)]
    post = [BeamSplitter(i, i + 1, 0j) for i in range(m - 1)]
    return GaussianCircuit(m=m, pre=pre, post=post)


def random_gaussian_circuit(m: int, rng_seed, xi_mag_range=(0.1, 0.2),
                            disp_max: float = 0.5, complex_squeeze: bool = True,
                            theta_range=(0.0, np.pi / 2)) -> GaussianCircuit:
    """Random chain circuit: couplers between neighbours i, i+1."""
    rng = _as_rng(rng_seed)

    def chain():
        out = []
        for i in range(m - 1):
            theta = rng.uniform(*theta_range)
            phi = rng.uniform(0.0, 2 * np.pi)
            out.append(BeamSplitter(i, i + 1, theta * np.exp(1j * phi)))
        return out

    pre = chain()
    post = chain()
    xi_mag = rng.uniform(*xi_mag_range, size=m)
    xi_phase = rng.uniform(0.0, 2 * np.pi, size=m) if complex_squeeze else np.zeros(m)
    disp_mag = rng.uniform(0.0, disp_max, size=m)
    disp_phase = rng.uniform(0.0, 2 * np.pi, size=m)
    return GaussianCircuit(
        m=m, pre=pre, post=post,
        squeezings=[complex(a * np.exp(1j * b)) for a, b in zip(xi_mag, xi_phase)],
        displacements=[complex(a * np.exp(1j * b)) for a, b in zip(disp_mag, disp_phase)])


def squeeze_matrix(xi: complex, d: int) -> np.ndarray:
    """S(xi) = exp[(xi* a^2 - xi a^dag^2)/2] on d levels."""
    a = annihilation_matrix(d)
    gen = 0.5 * (np.conj(xi) * (a @ a) - xi * (a.conj().T @ a.conj().T))
    return expm(gen)


def displacement_matrix(alpha: complex, d: int) -> np.ndarray:
    """D(alpha) = exp[alpha a^dag - alpha* a] on d levels."""
    a = annihilation_matrix(d)
    return expm(alpha * a.conj().T - np.conj(alpha) * a)


def beamsplitter_matrix(theta: float, phi: float, d: int) -> np.ndarray:
    """exp[theta (e^{i phi} a^dag b - e^{-i phi} a b^dag)] on two d-level modes."""
    a = annihilation_matrix(d)
    eye = np.eye(d, dtype=complex)
    adag_b = np.kron(a.conj().T, a)
    gen = theta * (np.exp(1j * phi) * adag_b - np.exp(-1j * phi) * adag_b.conj().T)
    return expm(gen)


def apply_gaussian_circuit(core: CoreState, circuit: GaussianCircuit, spec: FockSpec,
                           tail_tol: float = DEFAULT_TAIL_TOL) -> PureState:
    """Apply G to a core state, working with two headroom levels per mode.

    Operators are exponentiated at cutoff d+2 and the result is projected
    back to d; generation fails loudly when the top-level population of any
    mode exceeds tail_tol.
    """
    if circuit.m != spec.num_modes:
        raise ValidationError("circuit/spec mode count mismatch")
    d = spec.cutoff
    work = FockSpec(spec.num_modes, d + 2)
    psi = core.to_pure(work).amplitudes
    for bs in circuit.pre:
        if bs.theta != 0.0:
            op = beamsplitter_matrix(bs.theta, bs.phi, work.cutoff)
            psi = apply_two_mode_op(op, psi, bs.mode_a, bs.mode_b, work)
    for i in range(circuit.m):
        alpha = circuit.displacements[i]
        if alpha != 0:
            psi = apply_single_mode_op(displacement_matrix(alpha, work.cutoff), psi, i, work)
        xi = circuit.squeezings[i]
        if xi != 0:
            psi = apply_single_mode_op(squeeze_matrix(xi, work.cutoff), psi, i, work)
    for bs in circuit.post:
        if bs.theta != 0.0:
            op = beamsplitter_matrix(bs.theta, bs.phi, work.cutoff)
            psi = apply_two_mode_op(op, psi, bs.mode_a, bs.mode_b, work)
    tens = psi.reshape((work.cutoff,) * work.num_modes)
    proj = tens[(slice(0, d),) * spec.num_modes].reshape(-1)
    state = PureState(spec, proj, normalize=True)
    tails = state.top_level_populations()
    if tails.max() > tail_tol:
        raise TruncationError(
            f"top-level population {tails.max():.2e} exceeds {tail_tol:.0e} "
            f"(cutoff {d} insufficient)")
    return state


# ---------------------------------------------------------------------------
# Loss channels


@dataclass(frozen=True)
class LossSpec:
    """Per-mode loss efficiencies and the Kraus-rank truncation."""

    efficiencies: tuple
    kraus_truncation: int = 10

    def __post_init__(self):
        object.__setattr__(self, "efficiencies", tuple(float(e) for e in self.efficiencies))
        for eta in self.efficiencies:
            if not 0.0 < eta <= 1.0:
                raise ValidationError(f"efficiency {eta} outside (0, 1]")
        if self.kraus_truncation < 1:
            raise ValidationError("kraus_truncation must be >= 1")


def loss_kraus_ops(eta: float, d: int, n_max: int = 10) -> list[np.ndarray]:
    """Kraus operators L_n = sqrt((1-eta)^n / (n! eta^n)) a^n eta^{N/2}, n <= n_max."""
    if not 0.0 < eta <= 1.0:
        raise ValidationError(f"efficiency {eta} outside (0, 1]")
    a = annihilation_matrix(d)
    half = np.diag(eta ** (0.5 * np.arange(d))).astype(complex)
    ops = [half.copy()]
    if eta == 1.0:
        return ops
    a_pow = np.eye(d, dtype=complex)
    for n in range(1, min(n_max, d - 1) + 1):
        a_pow = a_pow @ a
        coef = math.sqrt((1.0 - eta) ** n / (math.factorial(n) * eta ** n))
        ops.append(coef * (a_pow @ half))
    return ops


def _channel_on_mode(rho_t: np.ndarray, kraus: list[np.ndarray], mode: int, m: int) -> np.ndarray:
    """Apply a single-mode channel to ket/bra axes `mode` of a (d,)*2m tensor."""
    out = np.zeros_like(rho_t)
    for L in kraus:
        t = np.moveaxis(np.tensordot(L, rho_t, axes=([1], [mode])), 0, mode)
        t = np.moveaxis(np.tensordot(t, L.conj(), axes=([m + mode], [1])), -1, m + mode)
        out += t
    return out


def apply_loss_channel(state, loss: LossSpec, validate: bool | None = None) -> DensityMatrix:
    """Photon-loss channel, one efficiency per mode, as an explicit Kraus sum."""
    if isinstance(state, PureState):
        rho = state.density_matrix()
    elif isinstance(state, DensityMatrix):
        rho = state
    else:
        raise ValidationError(f"unsupported state type {type(state).__name__}")
    spec = rho.spec
    if len(loss.efficiencies) != spec.num_modes:
        raise ValidationError(
            f"{len(loss.efficiencies)} efficiencies for {spec.num_modes} modes")
    d, m = spec.cutoff, spec.num_modes
    tens = rho.tensor().copy()
    for i, eta in enumerate(loss.efficiencies):
        if eta == 1.0:
            continue
        kraus = loss_kraus_ops(eta, d, loss.kraus_truncation)
        tens = _channel_on_mode(tens, kraus, i, m)
    if validate is None:
        validate = spec.total_dim <= 512
    return DensityMatrix(spec, tens.reshape(spec.total_dim, spec.total_dim), validate=validate)


def apply_single_mode_loss(rho: DensityMatrix, eta: float, n_max: int | None = None) -> DensityMatrix:
    """Loss on a single-mode density matrix with full Kraus rank by default."""
    if rho.spec.num_modes != 1:
        raise ValidationError("expected a single-mode state")
    d = rho.spec.cutoff
    if n_max is None:
        n_max = d - 1
    return apply_loss_channel(rho, LossSpec((eta,), kraus_truncation=n_max),
                              validate=d <= 512)


# ---------------------------------------------------------------------------
# Named families


def coherent_amplitudes(alpha: complex, d: int) -> np.ndarray:
    """<n|alpha> = e^{-|alpha|^2/2} alpha^n / sqrt(n!) for n < d."""
    n = np.arange(d)
    log_fact = np.cumsum(np.concatenate(([0.0], np.log(np.arange(1, d)))))
    if alpha == 0:
        amps = np.zeros(d, dtype=complex)
        amps[0] = 1.0
        return amps
    log_mag = -0.5 * abs(alpha) ** 2 + n * np.log(abs(alpha)) - 0.5 * log_fact
    return np.exp(log_mag) * np.exp(1j * n * np.angle(alpha))


def make_noon(N: int, phase: float = 0.0, eta=(1.0, 1.0),
              cutoff: int | None = None) -> DensityMatrix:
    """Lossy two-mode N00N state (|N,0> + e^{i N phase} |0,N>)/sqrt(2)."""
    if N < 1:
        raise ValidationError("N00N state needs N >= 1")
    if cutoff is None:
        cutoff = fock_cutoff(N, 0.0)
    if N > cutoff - 1:
        raise ValidationError(f"N={N} exceeds cutoff capacity {cutoff - 1}")
    spec = FockSpec(2, cutoff)
    amps = np.zeros(spec.total_dim, dtype=complex)
    amps[spec.basis_index((N, 0))] = 1.0 / math.sqrt(2)
    amps[spec.basis_index((0, N))] = np.exp(1j * N * phase) / math.sqrt(2)
    pure = PureState(spec, amps)
    return apply_loss_channel(pure, LossSpec(tuple(eta)))


def make_cat(alpha: complex, phase: float = 0.0, eta: float = 1.0,
             cutoff: int = 24) -> DensityMatrix:
    """Lossy cat state N_a (|alpha> + e^{i phase} |-alpha>) at fixed cutoff 24.

    The alpha -> 0, phase -> pi corner is handled by its analytic limit, the
    single-photon state.
    """
    spec = FockSpec(1, cutoff)
    raw = coherent_amplitudes(alpha, cutoff) + np.exp(1j * phase) * coherent_amplitudes(-alpha, cutoff)
    denom = 2.0 + 2.0 * math.cos(phase) * math.exp(-2.0 * abs(alpha) ** 2)
    if denom < 1e-12 or np.linalg.norm(raw) < 1e-9:
        amps = np.zeros(cutoff, dtype=complex)
        amps[1] = 1.0
        pure = PureState(spec, amps)
    else:
        amps = raw / math.sqrt(denom)
        nrm2 = np.linalg.norm(amps) ** 2
        if abs(nrm2 - 1.0) > 1e-6:
            raise TruncationError(
                f"cat norm {nrm2:.8f} deviates from 1 beyond 1e-6 at cutoff {cutoff}")
        pure = PureState(spec, amps, normalize=True)
    return apply_loss_channel(pure, LossSpec((eta,), kraus_truncation=cutoff - 1))


def make_squeezed_vacuum(xi: float, eta: float = 1.0,
                         cutoff: int | None = None) -> DensityMatrix:
    """Lossy squeezed vacuum S(xi)|0> with a variance-safe cutoff."""
    if not 0.0 <= xi <= 1.2:
        raise ValidationError(f"xi={xi} outside [0, 1.2]")
    if cutoff is None:
        cutoff = squeezed_cutoff(xi)
    pure = squeezed_vacuum_pure(xi, cutoff)
    return apply_loss_channel(pure, LossSpec((eta,), kraus_truncation=cutoff - 1),
                              validate=cutoff <= 512)


def squeezed_vacuum_pure(xi: float, cutoff: int) -> PureState:
    """Analytic amplitudes of S(xi)|0> for real xi, truncated and renormalized."""
    spec = FockSpec(1, cutoff)
    amps = np.zeros(cutoff, dtype=complex)
    t = math.tanh(xi)
    amps[0] = 1.0
    # c_{2n} = (-t)^n sqrt((2n)!)/(2^n n!); ratio c_{2n}/c_{2n-2} = -t sqrt((2n-1)/(2n))
    c = 1.0
    for n in range(1, (cutoff - 1) // 2 + 1):
        c *= -t * math.sqrt((2 * n - 1) / (2 * n))
        amps[2 * n] = c
    return PureState(spec, amps, normalize=True)
