"""Parameter sampling and nodal field evaluation for the three test cases.

Case 1: affine coefficient, constant obstacle -0.035, forcing 1.
Case 2: case 1 with the obstacle value as the last parameter entry.
Case 3: constant coefficient 1, rough-surface cosine obstacle, forcing 25.
"""

import enum
import json
from dataclasses import dataclass

import numpy as np

from .grid import GridLevel, coordinate_arrays


class FieldError(ValueError):
    pass


class DegenerateCoefficientError(FieldError):
    pass


class Case(enum.IntEnum):
    DETERMINISTIC_OBSTACLE = 1
    STOCHASTIC_CONSTANT_OBSTACLE = 2
    ROUGH_SURFACE = 3


DEFAULT_WAVE_CUTOFF = 26.0


@dataclass(frozen=True)
class CaseConfig:
    case: Case
    p: int = 10
    wave_cutoff: float = DEFAULT_WAVE_CUTOFF
    master_seed: int = 0

    def __post_init__(self):
        if self.case != Case.ROUGH_SURFACE and self.p < 1:
            raise FieldError(f"parameter dimension must be >= 1, got {self.p}")
        if self.wave_cutoff <= 0:
            raise FieldError(f"wave cutoff must be > 0, got {self.wave_cutoff}")

    @property
    def param_dim(self) -> int:
        """Actual sampled length: case 3 derives it from the wave-vector set."""
        if self.case == Case.ROUGH_SURFACE:
            return len(wavevector_set(self.wave_cutoff)) + 1
        return self.p

    def to_json(self) -> dict:
        return {"case": int(self.case), "p": self.p,
                "wave_cutoff": self.wave_cutoff, "master_seed": self.master_seed}

    @classmethod
    def from_json(cls, d: dict) -> "CaseConfig":
        return cls(case=Case(d["case"]), p=int(d.get("p", 10)),
                   wave_cutoff=float(d.get("wave_cutoff", DEFAULT_WAVE_CUTOFF)),
                   master_seed=int(d.get("master_seed", 0)))

    def dumps(self) -> str:
        return json.dumps(self.to_json())

    @classmethod
    def loads(cls, s: str) -> "CaseConfig":
        return cls.from_json(json.loads(s))


_WAVE_CACHE: dict = {}


def wavevector_set(wave_cutoff: float = DEFAULT_WAVE_CUTOFF) -> np.ndarray:
    """All q = pi*(k1, k2), integer (k1, k2) != 0, with 1 <= |q|_2 <= cutoff,
    in lexicographic (k1, k2) order.  Shape (count, 2)."""
    if wave_cutoff <= 0:
        raise FieldError("wave cutoff must be positive")
    key = float(wave_cutoff)
    if key in _WAVE_CACHE:
        return _WAVE_CACHE[key]
    kmax = int(np.floor(wave_cutoff / np.pi))
    out = []
    for k1 in range(-kmax, kmax + 1):
        for k2 in range(-kmax, kmax + 1):
            if k1 == 0 and k2 == 0:
                continue
            norm = np.pi * np.hypot(k1, k2)
            if 1.0 <= norm <= wave_cutoff:
                out.append((np.pi * k1, np.pi * k2))
    if not out:
        raise FieldError(f"no wave vectors with 1 <= |q| <= {wave_cutoff}")
    arr = np.array(out, dtype=float)
    arr.setflags(write=False)
    _WAVE_CACHE[key] = arr
    return arr


def _rng(cfg: CaseConfig, sample_index: int) -> np.random.Generator:
    # spawn_key isolates per-sample streams; generation order never matters
    ss = np.random.SeedSequence(entropy=cfg.master_seed, spawn_key=(sample_index,))
    return np.random.default_rng(ss)


def sample_params(cfg: CaseConfig, sample_index: int) -> np.ndarray:
    rng = _rng(cfg, sample_index)
    if cfg.case == Case.DETERMINISTIC_OBSTACLE:
        return rng.uniform(-1.0, 1.0, size=cfg.p)
    if cfg.case == Case.STOCHASTIC_CONSTANT_OBSTACLE:
        y = np.empty(cfg.p)
        y[: cfg.p - 1] = rng.uniform(-1.0, 1.0, size=cfg.p - 1)
        y[cfg.p - 1] = rng.uniform(-0.045, -0.025)
        return y
    nq = len(wavevector_set(cfg.wave_cutoff))
    y = np.empty(nq + 1)
    y[:nq] = rng.uniform(0.0, 2.0 * np.pi, size=nq)
    y[nq] = rng.uniform(0.0, 1.0)  # Hurst exponent
    return y


def _affine_terms(m: np.ndarray, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
    # a_m(x) = m^-2 sin(floor((m+2)/2) pi x1) sin(ceil((m+2)/2) pi x2)
    lo = np.floor((m + 2) / 2)
    hi = np.ceil((m + 2) / 2)
    return (m.astype(float) ** -2)[:, None] * np.sin(np.pi * np.outer(lo, x1)) \
        * np.sin(np.pi * np.outer(hi, x2))


def eval_coefficient(cfg: CaseConfig, y: np.ndarray, level: GridLevel) -> np.ndarray:
    x1, x2 = coordinate_arrays(level)
    if cfg.case == Case.ROUGH_SURFACE:
        return np.ones(level.node_count)
    p_coef = cfg.p if cfg.case == Case.DETERMINISTIC_OBSTACLE else cfg.p - 1
    kappa = np.ones(level.node_count)  # a_0 == 1
    if p_coef > 0:
        m = np.arange(1, p_coef + 1)
        kappa = kappa + y[:p_coef] @ _affine_terms(m, x1, x2)
    if np.min(kappa) <= 0.0:
        i = int(np.argmin(kappa))
        raise DegenerateCoefficientError(
            f"coefficient non-positive at node {i}: {kappa[i]:.3e}")
    return kappa


def eval_obstacle(cfg: CaseConfig, y: np.ndarray, level: GridLevel) -> np.ndarray:
    if cfg.case == Case.DETERMINISTIC_OBSTACLE:
        return np.full(level.node_count, -0.035)
    if cfg.case == Case.STOCHASTIC_CONSTANT_OBSTACLE:
        return np.full(level.node_count, y[cfg.p - 1])
    q = wavevector_set(cfg.wave_cutoff)
    nq = len(q)
    hurst = y[nq]
    x1, x2 = coordinate_arrays(level)
    qnorm = np.hypot(q[:, 0], q[:, 1])
    amp = np.pi * (2.0 * np.pi * np.maximum(qnorm, 10.0)) ** (-(hurst + 1.0)) / 25.0
    phase = np.outer(q[:, 0], x1) + np.outer(q[:, 1], x2) + y[:nq, None]
    return amp @ np.cos(phase)


def eval_forcing(cfg: CaseConfig, level: GridLevel) -> np.ndarray:
    value = 25.0 if cfg.case == Case.ROUGH_SURFACE else 1.0
    return np.full(level.node_count, value)
