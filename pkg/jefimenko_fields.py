#!/usr/bin/env python3
"""
Causal electromagnetic fields of ring sources
Direct retarded-time quadrature of the Jefimenko line integrals, the far-field
Gamma/Delta basis and series, Wallis integral tables and the power coefficients
"""

import logging
import math
import threading
from dataclasses import dataclass
from types import MappingProxyType
from typing import Dict, Iterable, Mapping, Tuple, Union

import numpy as np

from errors import InputDomainError, SingularityError
from flow_extension import RingSource
from quadrature import DEFAULT_PERIODIC_NODES, periodic_nodes
from spectral_wave import ModePair, mode_pair

__version__ = "1.0.0"

logger = logging.getLogger(__name__)

EPSILON_0 = 1.0
MU_0 = 1.0
DEFAULT_C = 10.0
MIN_THETA_NODES = 64
RING_TOLERANCE = 1e-9
# samples per vectorised block (points x theta nodes)
BLOCK_ELEMENTS = 1 << 20

_TRIG = {'cos': np.cos, 'sin': np.sin}
_TRIG_PRIME = {'cos': lambda u: -np.sin(u), 'sin': np.cos}

Source = Union[RingSource, ModePair]


@dataclass(frozen=True)
class EvalPoint:
    position: Tuple[float, float, float]
    time: float = 0.0

    def __post_init__(self):
        position = tuple(float(v) for v in self.position)
        if len(position) != 3 or not np.all(np.isfinite(position)) or not np.isfinite(self.time):
            raise InputDomainError(f"evaluation point must be a finite 3-vector, got {self.position}")
        object.__setattr__(self, 'position', position)

    @property
    def r(self) -> float:
        return float(np.linalg.norm(self.position))

    @property
    def array(self) -> np.ndarray:
        return np.array(self.position)


@dataclass(frozen=True, eq=False)
class FieldSample:
    """The five Jefimenko terms at one point, in the order E1, E2, E3, B1, B2."""
    E1: np.ndarray
    E2: np.ndarray
    E3: np.ndarray
    B1: np.ndarray
    B2: np.ndarray

    @property
    def E_total(self) -> np.ndarray:
        return self.E1 + self.E2 + self.E3

    @property
    def B_total(self) -> np.ndarray:
        return self.B1 + self.B2

    def as_dict(self) -> Dict[str, list]:
        names = ('E1', 'E2', 'E3', 'B1', 'B2', 'E_total', 'B_total')
        return {name: [float(v) for v in getattr(self, name)] for name in names}


def _as_pair(src: Source) -> ModePair:
    if isinstance(src, RingSource):
        return src.pair
    return ModePair(*src)


def _positions(points) -> np.ndarray:
    positions = np.atleast_2d(np.asarray(points, dtype=float))
    if positions.shape[-1] != 3:
        raise InputDomainError(f"positions must have shape (N, 3), got {positions.shape}")
    return positions


def _check_off_ring(positions: np.ndarray) -> None:
    ring_gap = np.hypot(np.hypot(positions[:, 0], positions[:, 1]) - 1.0, positions[:, 2])
    if np.any(ring_gap < RING_TOLERANCE):
        bad = positions[int(np.argmin(ring_gap))]
        raise SingularityError(f"evaluation point {tuple(bad)} lies on the source ring")


def _blocks(count: int, nodes: int) -> Iterable[slice]:
    step = max(1, BLOCK_ELEMENTS // nodes)
    for start in range(0, count, step):
        yield slice(start, min(start + step, count))


def retarded_distance(point: Union[EvalPoint, np.ndarray], theta: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Distance from the point to the ring element at angle theta."""
    x, y, z = point.position if isinstance(point, EvalPoint) else np.asarray(point, dtype=float)
    theta = np.asarray(theta, dtype=float)
    squared = x * x + y * y + z * z + 1.0 - 2.0 * x * np.cos(theta) - 2.0 * y * np.sin(theta)
    value = np.sqrt(np.maximum(squared, 0.0))
    return float(value) if value.ndim == 0 else value


def direct_fields_batch(src: Source, positions: np.ndarray, t: float, c: float = DEFAULT_C,
                        nodes: int = DEFAULT_PERIODIC_NODES,
                        eps0: float = EPSILON_0, mu0: float = MU_0) -> np.ndarray:
    """
    Jefimenko terms at many points by periodic trapezoid quadrature over theta.

    Returns:
        Array of shape (5, N, 3) holding E1, E2, E3, B1, B2
    """
    if c <= 1.0:
        raise InputDomainError(f"signal speed must exceed 1 in rescaled units, got {c}")
    if nodes < MIN_THETA_NODES:
        raise InputDomainError(f"theta quadrature needs at least {MIN_THETA_NODES} nodes, got {nodes}")
    positions = _positions(positions)
    _check_off_ring(positions)

    pair = _as_pair(src)
    rho, rho_dot = pair.density, pair.density.dt()
    cur, cur_dot = pair.current, pair.current.dt()

    theta = periodic_nodes(nodes)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    weight = 2.0 * np.pi / nodes
    k_e = 1.0 / (4.0 * np.pi * eps0)
    k_m = mu0 / (4.0 * np.pi)

    out = np.zeros((5, len(positions), 3))
    for block in _blocks(len(positions), nodes):
        x = positions[block, 0:1]
        y = positions[block, 1:2]
        z = positions[block, 2:3]
        dx = x - cos_t
        dy = y - sin_t
        dz = np.broadcast_to(z, dx.shape)
        dist = np.sqrt(dx * dx + dy * dy + dz * dz)
        t_r = t - dist / c
        inv = 1.0 / dist

        q = rho(theta, t_r)
        q_dot = rho_dot(theta, t_r)
        j = cur(theta, t_r)
        j_dot = cur_dot(theta, t_r)

        # t_hat x (r - r') with t_hat = (-sin, cos, 0)
        cross = (cos_t * dz, sin_t * dz, -sin_t * dy - cos_t * dx)
        sep = (dx, dy, dz)
        tangent = (-sin_t, cos_t, 0.0)

        e1_w = k_e * weight * q * inv ** 3
        e2_w = k_e * weight * q_dot * inv ** 2 / c
        e3_w = -k_e * weight * j_dot * inv / c ** 2
        b1_w = k_m * weight * j * inv ** 3
        b2_w = k_m * weight * j_dot * inv ** 2 / c
        for axis in range(3):
            out[0, block, axis] = np.sum(e1_w * sep[axis], axis=1)
            out[1, block, axis] = np.sum(e2_w * sep[axis], axis=1)
            out[2, block, axis] = np.sum(e3_w * tangent[axis], axis=1)
            out[3, block, axis] = np.sum(b1_w * cross[axis], axis=1)
            out[4, block, axis] = np.sum(b2_w * cross[axis], axis=1)
    return out


def causal_fields_direct(src: Source, point: EvalPoint, c: float = DEFAULT_C,
                         nodes: int = DEFAULT_PERIODIC_NODES,
                         eps0: float = EPSILON_0, mu0: float = MU_0) -> FieldSample:
    """
    Causal fields of a ring source at one point by retarded-time quadrature.

    Args:
        src: RingSource or (density, current) pair
        point: Evaluation position and time
        c: Signal speed, c > 1
        nodes: Periodic trapezoid nodes over theta, at least 64

    Raises:
        SingularityError: The point lies on the ring
    """
    terms = direct_fields_batch(src, point.array[None, :], point.time, c, nodes, eps0, mu0)
    return FieldSample(*(terms[k, 0].copy() for k in range(5)))


# --- Wallis integrals -------------------------------------------------------

def _wallis_I_closed(alpha: int, beta: int) -> float:
    if alpha % 2 or beta % 2:
        return 0.0
    numerator = math.factorial(alpha) * math.factorial(beta)
    denominator = (math.factorial(alpha // 2) * math.factorial(beta // 2)
                   * math.factorial((alpha + beta) // 2))
    return math.pi * numerator / denominator / 2.0 ** (alpha + beta - 1)


def _wallis_J_closed(gamma: int) -> float:
    half = math.factorial((gamma - 1) // 2)
    return 2.0 ** gamma * half * half / math.factorial(gamma)


def _check_order(value: int, name: str) -> int:
    if int(value) != value or value < 0:
        raise InputDomainError(f"{name} must be a non-negative integer, got {value}")
    return int(value)


def _check_odd(gamma: int) -> int:
    gamma = _check_order(gamma, 'gamma')
    if gamma % 2 == 0:
        raise InputDomainError(f"gamma must be odd and positive, got {gamma}")
    return gamma


class WallisTable:
    """
    Read-mostly cache of the Wallis integrals

        I(alpha, beta) = integral of cos^alpha sin^beta over [-pi, pi]
        J(gamma)       = integral of sin^gamma over [0, pi], gamma odd

    Writes take a lock; reads are plain dict lookups and never block.
    """

    def __init__(self):
        self._I: Dict[Tuple[int, int], float] = {}
        self._J: Dict[int, float] = {}
        self._lock = threading.Lock()

    @property
    def I(self) -> Mapping[Tuple[int, int], float]:
        return MappingProxyType(self._I)

    @property
    def J(self) -> Mapping[int, float]:
        return MappingProxyType(self._J)

    def integral_I(self, alpha: int, beta: int) -> float:
        key = (_check_order(alpha, 'alpha'), _check_order(beta, 'beta'))
        value = self._I.get(key)
        if value is None:
            value = _wallis_I_closed(*key)
            with self._lock:
                value = self._I.setdefault(key, value)
        return value

    def integral_J(self, gamma: int) -> float:
        gamma = _check_odd(gamma)
        value = self._J.get(gamma)
        if value is None:
            value = _wallis_J_closed(gamma)
            with self._lock:
                value = self._J.setdefault(gamma, value)
        return value

    def populate(self, max_order: int) -> 'WallisTable':
        for alpha in range(max_order + 1):
            for beta in range(max_order + 1):
                self.integral_I(alpha, beta)
        for gamma in range(1, max_order + 2, 2):
            self.integral_J(gamma)
        return self


WALLIS_TABLE = WallisTable()


def wallis_I(alpha: int, beta: int, table: WallisTable = WALLIS_TABLE) -> float:
    return table.integral_I(alpha, beta)


def wallis_J(gamma: int, table: WallisTable = WALLIS_TABLE) -> float:
    return table.integral_J(gamma)


def wallis_J_printed(gamma: int) -> float:
    """The 2^(gamma+1) form of J(gamma); twice the true integral."""
    return 2.0 * _wallis_J_closed(_check_odd(gamma))


# --- far-field series -------------------------------------------------------

SPATIAL = ('cos', 'sin')
PHASE = ('cos', 'sin')
DIRECTIONS = ('radial', 'tangential', 'magnetic')

# named members of the basis: (spatial factor of m*theta, factor of the phase argument, direction)
BASIS_NAMES = {
    'Gamma': ('cos', 'cos', 'radial'),
    'GammaP': ('sin', 'sin', 'magnetic'),
    'GammaPP': ('sin', 'sin', 'tangential'),
    'GammaPPP': ('cos', 'sin', 'radial'),
    'GammaPPPP': ('sin', 'cos', 'magnetic'),
    'GammaPPPPP': ('sin', 'cos', 'tangential'),
    'Delta': ('sin', 'cos', 'radial'),
    'DeltaP': ('cos', 'sin', 'magnetic'),
    'DeltaPP': ('cos', 'sin', 'tangential'),
    'DeltaPPP': ('sin', 'sin', 'radial'),
    'DeltaPPPP': ('cos', 'cos', 'magnetic'),
    'DeltaPPPPP': ('cos', 'cos', 'tangential'),
}

BasisKey = Tuple[str, str, str]


def _radius_factor(positions: np.ndarray) -> np.ndarray:
    return np.sqrt(np.sum(positions * positions, axis=1) + 1.0)


def basis_batch(m: float, positions: np.ndarray, c: float = DEFAULT_C,
                nodes: int = DEFAULT_PERIODIC_NODES,
                time_frequency: float = None) -> Dict[BasisKey, np.ndarray]:
    """
    All twelve far-field theta-integrals at many points.

        K[S, P, V] = integral of S(m theta) * P(a(theta)) * V(theta) over [-pi, pi]
        a(theta)   = k (x cos theta + y sin theta) / (c sqrt(r^2 + 1))

    with k the time frequency (m unless the source is rescaled) and V the
    radial (x, y, z), tangential (-sin, cos, 0) or magnetic
    (z cos, z sin, -y sin - x cos) direction field.

    Returns:
        Mapping from (S, P, V) to arrays of shape (N, 3)
    """
    positions = _positions(positions)
    k = m if time_frequency is None else time_frequency
    theta = periodic_nodes(nodes)
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    weight = 2.0 * np.pi / nodes
    spatial = {'cos': np.cos(m * theta), 'sin': np.sin(m * theta)}
    R = _radius_factor(positions)

    out = {key: np.zeros((len(positions), 3)) for key in
           ((s, p, v) for s in SPATIAL for p in PHASE for v in DIRECTIONS)}
    for block in _blocks(len(positions), nodes):
        x = positions[block, 0:1]
        y = positions[block, 1:2]
        z = positions[block, 2]
        arg = k * (x * cos_t + y * sin_t) / (c * R[block, None])
        phase = {'cos': np.cos(arg), 'sin': np.sin(arg)}
        for s in SPATIAL:
            for p in PHASE:
                f = spatial[s] * phase[p] * weight
                i0 = f.sum(axis=1)
                ic = f @ cos_t
                is_ = f @ sin_t
                out[(s, p, 'radial')][block] = positions[block] * i0[:, None]
                out[(s, p, 'tangential')][block] = np.stack([-is_, ic, np.zeros_like(ic)], axis=1)
                out[(s, p, 'magnetic')][block] = np.stack(
                    [z * ic, z * is_, -positions[block, 1] * is_ - positions[block, 0] * ic], axis=1)
    return out


@dataclass(frozen=True, eq=False)
class FarFieldBasis:
    """Far-field theta-integrals and series coefficients at one point."""
    m: int
    point: EvalPoint
    c: float
    vectors: Mapping[BasisKey, np.ndarray]
    alpha: float
    beta: float
    gamma_coef: float

    def vector(self, spatial: str, phase: str, direction: str) -> np.ndarray:
        return self.vectors[(spatial, phase, direction)]

    def __getattr__(self, name: str) -> np.ndarray:
        if name in BASIS_NAMES:
            return self.vectors[BASIS_NAMES[name]]
        raise AttributeError(name)


def series_coefficients(r: Union[float, np.ndarray], c: float = DEFAULT_C,
                        eps0: float = EPSILON_0, mu0: float = MU_0) -> Tuple:
    """(alpha, beta, gamma) of the far-field series at radius r."""
    R2 = np.asarray(r, dtype=float) ** 2 + 1.0
    alpha = 1.0 / (4.0 * np.pi * eps0 * c * R2)
    beta = mu0 / (4.0 * np.pi * c * R2)
    gamma = 1.0 / (4.0 * np.pi * eps0 * c * c * np.sqrt(R2))
    return alpha, beta, gamma


def far_field_basis(m: int, point: EvalPoint, c: float = DEFAULT_C,
                    nodes: int = DEFAULT_PERIODIC_NODES) -> FarFieldBasis:
    """
    Far-field basis Gamma ... Delta''''' at a point outside the unit sphere.

    Raises:
        InputDomainError: |position| <= 1
    """
    if point.r <= 1.0:
        raise InputDomainError(f"far-field basis needs r > 1, got r = {point.r}")
    batch = basis_batch(m, point.array[None, :], c, nodes)
    alpha, beta, gamma = series_coefficients(point.r, c)
    vectors = MappingProxyType({key: value[0] for key, value in batch.items()})
    return FarFieldBasis(m, point, c, vectors, float(alpha), float(beta), float(gamma))


class FarFieldEvaluator:
    """
    Far-field series (E2, E3, B2) of a source pair at fixed positions.

    The theta-integrals depend only on position, so they are computed once and
    every time sample is a cheap recombination. Each trigonometric term
    amp * S(kx theta) * T(kt t) of d(rho)/dt or dJ/dt is evaluated at retarded time
    through T(X + a) = T(X) cos a + T'(X) sin a with X = kt (t - sqrt(r^2 + 1)/c).
    """

    def __init__(self, src: Source, positions: np.ndarray, c: float = DEFAULT_C,
                 nodes: int = DEFAULT_PERIODIC_NODES, eps0: float = EPSILON_0, mu0: float = MU_0):
        self.positions = _positions(positions)
        r = np.linalg.norm(self.positions, axis=1)
        if np.any(r <= 1.0):
            raise InputDomainError(f"far-field series needs r > 1, got min r = {r.min()}")
        pair = _as_pair(src)
        self.c = c
        self.R = _radius_factor(self.positions)
        alpha, beta, gamma = series_coefficients(r, c, eps0, mu0)
        self.alpha, self.beta, self.gamma = alpha[:, None], beta[:, None], gamma[:, None]
        self.rho_terms = pair.density.dt().terms
        self.current_terms = pair.current.dt().terms
        self._bases: Dict[Tuple[float, float], Dict[BasisKey, np.ndarray]] = {}
        for term in self.rho_terms + self.current_terms:
            key = (term.kx, term.kt)
            if key not in self._bases:
                self._bases[key] = basis_batch(term.kx, self.positions, c, nodes, time_frequency=term.kt)

    def _contribution(self, term, t: float, direction: str) -> np.ndarray:
        basis = self._bases[(term.kx, term.kt)]
        X = term.kt * (t - self.R / self.c)
        in_phase = term.amplitude * _TRIG[term.time](X)[:, None]
        quadrature = term.amplitude * _TRIG_PRIME[term.time](X)[:, None]
        return (in_phase * basis[(term.space, 'cos', direction)]
                + quadrature * basis[(term.space, 'sin', direction)])

    def fields(self, t: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
        shape = self.positions.shape
        e2, e3, b2 = np.zeros(shape), np.zeros(shape), np.zeros(shape)
        for term in self.rho_terms:
            e2 += self._contribution(term, t, 'radial')
        for term in self.current_terms:
            e3 += self._contribution(term, t, 'tangential')
            b2 += self._contribution(term, t, 'magnetic')
        return self.alpha * e2, -self.gamma * e3, self.beta * b2


def far_field_fields(src: Source, point: EvalPoint, t: float, c: float = DEFAULT_C,
                     nodes: int = DEFAULT_PERIODIC_NODES) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Far-field series (E2, E3, B2) of any ring source pair at one point."""
    e2, e3, b2 = FarFieldEvaluator(src, point.array[None, :], c, nodes).fields(t)
    return e2[0], e3[0], b2[0]


def _mode_fields(m: int, point: EvalPoint, t: float, c: float, mode: int, nodes: int):
    if point.r <= 1.0:
        raise InputDomainError(f"far-field series needs r > 1, got r = {point.r}")
    return far_field_fields(mode_pair(mode, m), point, t, c, nodes)


def far_field_E2(m: int, point: EvalPoint, t: float, c: float = DEFAULT_C, mode: int = 1,
                 nodes: int = DEFAULT_PERIODIC_NODES) -> np.ndarray:
    """
    Series E2 of a fundamental mode. For mode 1 and even m this is
    alpha m (-sin(mt) cos(phi) + cos(mt) sin(phi)) Gamma with phi = m sqrt(r^2 + 1)/c;
    odd m selects Gamma''' instead.
    """
    return _mode_fields(m, point, t, c, mode, nodes)[0]


def far_field_E3(m: int, point: EvalPoint, t: float, c: float = DEFAULT_C, mode: int = 1,
                 nodes: int = DEFAULT_PERIODIC_NODES) -> np.ndarray:
    return _mode_fields(m, point, t, c, mode, nodes)[1]


def far_field_B2(m: int, point: EvalPoint, t: float, c: float = DEFAULT_C, mode: int = 1,
                 nodes: int = DEFAULT_PERIODIC_NODES) -> np.ndarray:
    return _mode_fields(m, point, t, c, mode, nodes)[2]


def coefficient_functions(m: int, r: float, t: float, c: float = DEFAULT_C,
                          eps0: float = EPSILON_0, mu0: float = MU_0) -> Tuple[float, float, float]:
    """
    Trigonometric power coefficients C1, C2, C3 at radius r and time t.

    C1 + C2 = -beta gamma m^2 and C3 integrates to zero over a period pi/m.
    """
    if r <= 0.0:
        raise InputDomainError(f"coefficient functions need r > 0, got {r}")
    _, beta, gamma = series_coefficients(r, c, eps0, mu0)
    scale = float(beta * gamma) * m * m
    phase = m * math.sqrt(r * r + 1.0) / c
    sp, cp = math.sin(phase), math.cos(phase)
    st, ct = math.sin(m * t), math.cos(m * t)
    c1 = scale * (-ct * ct * sp * sp + 2.0 * st * ct * sp * cp - st * st * cp * cp)
    c2 = scale * (-st * st * sp * sp - 2.0 * st * ct * sp * cp - ct * ct * cp * cp)
    c3 = scale * (ct * st * sp * sp - st * ct * cp * cp - st * st * sp * cp + ct * ct * sp * cp)
    return c1, c2, c3
