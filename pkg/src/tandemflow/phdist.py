"""Phase-type distributions: representation, analytics, generation, sampling.

A phase-type (PH) variable is the absorption time of a transient Markov
chain with initial distribution ``alpha`` and sub-generator ``subgen``.
PH is the sole distribution family used for external inter-arrival and
service times; everything downstream (simulation, descriptors, training
data) consumes these objects.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .errors import InvalidDistributionError

MAX_ORDER = 1000  # generation cap on the number of phases

_ATOL = 1e-9


def _as_matrix(x) -> np.ndarray:
    a = np.array(x, dtype=float)
    if a.ndim == 0:
        a = a.reshape(1, 1)
    return a


@dataclass(frozen=True, eq=False)
class PhaseType:
    """Initial probability vector plus sub-generator matrix.

    Immutable after construction; the backing arrays are marked
    read-only so instances can be shared freely across workers.
    """

    alpha: np.ndarray
    subgen: np.ndarray

    def __post_init__(self):
        alpha = np.atleast_1d(np.array(self.alpha, dtype=float))
        subgen = _as_matrix(self.subgen)
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "subgen", subgen)
        self._validate()
        alpha.setflags(write=False)
        subgen.setflags(write=False)

    def _validate(self):
        p = self.alpha.shape[0]
        if p > MAX_ORDER:
            raise InvalidDistributionError(f"order {p} exceeds cap {MAX_ORDER}")
        if self.subgen.shape != (p, p):
            raise InvalidDistributionError(
                f"subgen shape {self.subgen.shape} incompatible with order {p}"
            )
        if np.any(self.alpha < 0) or abs(self.alpha.sum() - 1.0) > _ATOL:
            raise InvalidDistributionError("alpha must be a probability vector")
        diag = np.diag(self.subgen)
        if np.any(diag >= 0):
            raise InvalidDistributionError("sub-generator diagonal must be negative")
        off = self.subgen - np.diag(diag)
        if np.any(off < -_ATOL * np.abs(diag).max()):
            raise InvalidDistributionError("off-diagonal rates must be nonnegative")
        exit_vec = self.exit_rates
        if np.any(exit_vec < -_ATOL * np.abs(diag).max()):
            raise InvalidDistributionError("row sums of subgen must be <= 0")
        if not np.any(exit_vec > 0):
            raise InvalidDistributionError("chain has no exit to absorption")

    @property
    def p(self) -> int:
        """Number of phases."""
        return self.alpha.shape[0]

    @property
    def exit_rates(self) -> np.ndarray:
        """Absorption rate from each phase: t = -subgen @ 1."""
        return -self.subgen.sum(axis=1)

    def to_json_dict(self) -> dict:
        return {"alpha": self.alpha.tolist(), "subgen": self.subgen.tolist()}

    @classmethod
    def from_json_dict(cls, d: dict) -> "PhaseType":
        return cls(np.array(d["alpha"], dtype=float), np.array(d["subgen"], dtype=float))


def ph_moments(ph: PhaseType, n: int) -> np.ndarray:
    """First ``n`` raw moments, computed by repeated LU solves against -T.

    Solving rather than inverting keeps the computation stable at large
    orders (chains up to 1000 phases).
    """
    if n < 1:
        raise ValueError("need n >= 1")
    neg_t = -ph.subgen
    try:
        lu = lu_factor(neg_t)
    except Exception as exc:  # singular matrix -> corrupted representation
        raise InvalidDistributionError(f"sub-generator is singular: {exc}") from exc
    v = np.ones(ph.p)
    out = np.empty(n)
    fact = 1.0
    for i in range(1, n + 1):
        v = lu_solve(lu, v)
        if not np.all(np.isfinite(v)):
            raise InvalidDistributionError("moment solve produced non-finite values")
        fact *= i
        out[i - 1] = fact * float(ph.alpha @ v)
    return out


def ph_moment(ph: PhaseType, i: int) -> float:
    """Exact i-th raw moment; ``ph_moment(ph, 1)`` is the mean."""
    return float(ph_moments(ph, i)[i - 1])


def ph_mean(ph: PhaseType) -> float:
    return ph_moment(ph, 1)


def ph_scv(ph: PhaseType) -> float:
    """Squared coefficient of variation: variance over squared mean."""
    m1, m2 = ph_moments(ph, 2)
    return (m2 - m1 * m1) / (m1 * m1)


def scale_to_mean(ph: PhaseType, target_mean: float) -> PhaseType:
    """Rescale time so the mean becomes ``target_mean``; SCV is unchanged."""
    if target_mean <= 0:
        raise ValueError("target_mean must be positive")
    m1 = ph_mean(ph)
    return PhaseType(ph.alpha.copy(), ph.subgen * (m1 / target_mean))


# ---------------------------------------------------------------------------
# Named constructors


def exponential(rate: float) -> PhaseType:
    if rate <= 0:
        raise ValueError("rate must be positive")
    return PhaseType(np.array([1.0]), np.array([[-rate]]))


def erlang(k: int, rate: float) -> PhaseType:
    """Sum of k i.i.d. exponentials, each with the given rate."""
    if k < 1 or rate <= 0:
        raise ValueError("need k >= 1 and rate > 0")
    sub = np.zeros((k, k))
    idx = np.arange(k)
    sub[idx, idx] = -rate
    sub[idx[:-1], idx[:-1] + 1] = rate
    alpha = np.zeros(k)
    alpha[0] = 1.0
    return PhaseType(alpha, sub)


def hyperexponential(probs, rates) -> PhaseType:
    probs = np.asarray(probs, dtype=float)
    rates = np.asarray(rates, dtype=float)
    return PhaseType(probs, np.diag(-rates))


def hyperexp_balanced(scv: float, mean: float = 1.0) -> PhaseType:
    """Two-branch hyperexponential with balanced means (p1/r1 == p2/r2).

    Matches the requested mean and SCV exactly; requires SCV > 1.
    """
    if scv <= 1.0:
        raise ValueError("balanced hyperexponential needs scv > 1")
    s = math.sqrt((scv - 1.0) / (scv + 1.0))
    r1 = (1.0 + s) / mean
    r2 = (1.0 - s) / mean
    p1 = r1 * mean / 2.0
    return hyperexponential([p1, 1.0 - p1], [r1, r2])


def hyperexp_fit3(m1: float, m2: float, m3: float) -> PhaseType:
    """Two-branch hyperexponential matched to three raw moments.

    The branch means are the roots of the quadratic whose coefficients
    follow from the two-atom moment recurrence on mu_k = m_k / k!.
    Raises ValueError outside the feasible region.
    """
    mu = np.array([1.0, m1, m2 / 2.0, m3 / 6.0])
    den = mu[0] * mu[2] - mu[1] ** 2
    if den <= 0:
        raise ValueError("moments infeasible for a hyperexponential (need scv > 1)")
    b = (mu[0] * mu[3] - mu[1] * mu[2]) / den
    c = (mu[1] * mu[3] - mu[2] ** 2) / den
    disc = b * b - 4.0 * c
    if disc < 0:
        raise ValueError("third moment infeasible for a two-branch fit")
    u = (b + math.sqrt(disc)) / 2.0
    v = (b - math.sqrt(disc)) / 2.0
    if v <= 0 or u <= 0 or u - v < 1e-12 * u:
        raise ValueError("branch means must be positive and distinct")
    p = (m1 - v) / (u - v)
    if not 0.0 <= p <= 1.0:
        raise ValueError("branch weight outside [0, 1]")
    return hyperexponential([p, 1.0 - p], [1.0 / u, 1.0 / v])


def mixed_erlang_fit(scv: float, mean: float = 1.0) -> PhaseType:
    """Mixture of Erlang(k-1) and Erlang(k) with a common rate.

    Standard two-moment fit for SCV <= 1; the order k = ceil(1/scv) stays
    within the generation cap as long as scv >= 1/MAX_ORDER.
    """
    if not 0 < scv <= 1.0:
        raise ValueError("mixed Erlang fit needs 0 < scv <= 1")
    if scv < 1.0 / MAX_ORDER:
        raise ValueError(f"scv {scv} needs more than {MAX_ORDER} phases")
    k = max(2, math.ceil(1.0 / scv))
    disc = k * (1.0 - (k - 1) * scv)
    q = (k * scv - math.sqrt(max(disc, 0.0))) / (1.0 + scv)
    q = min(max(q, 0.0), 1.0)
    rate = (k - q) / mean
    ph = erlang(k, rate)
    alpha = np.zeros(k)
    alpha[0] = 1.0 - q  # full k stages
    alpha[1] = q        # skip one stage -> k-1 stages
    return PhaseType(alpha, ph.subgen.copy())


def coxian(rates, continue_probs) -> PhaseType:
    """Sequential chain where stage i continues with probability b_i."""
    rates = np.asarray(rates, dtype=float)
    cont = np.asarray(continue_probs, dtype=float)
    q = rates.shape[0]
    if cont.shape[0] != q - 1:
        raise ValueError("need one continue probability per non-final stage")
    sub = np.zeros((q, q))
    idx = np.arange(q)
    sub[idx, idx] = -rates
    sub[idx[:-1], idx[:-1] + 1] = rates[:-1] * cont
    alpha = np.zeros(q)
    alpha[0] = 1.0
    return PhaseType(alpha, sub)


# ---------------------------------------------------------------------------
# Library generation


@dataclass(frozen=True)
class GenConfig:
    """Box constraints for the stratified library generator."""

    count: int
    scv_min: float
    scv_max: float
    mean: float = 1.0
    max_order: int = 10
    seed: int = 0
    family_weights: tuple = field(default=(0.35, 0.35, 0.15, 0.15))

    def __post_init__(self):
        if self.count < 1:
            raise ValueError("count must be positive")
        if not 0 < self.scv_min < self.scv_max:
            raise ValueError("need 0 < scv_min < scv_max")
        if self.scv_max > 15.0:
            raise ValueError("scv_max above 15 is outside the supported regime")
        if self.scv_min < 1.0 / MAX_ORDER:
            raise ValueError(f"scv_min below {1.0 / MAX_ORDER} needs orders above the cap")
        if self.mean <= 0:
            raise ValueError("mean must be positive")
        if not 2 <= self.max_order <= MAX_ORDER:
            raise ValueError("max_order must be in [2, 1000]")


def _loguniform(rng, lo, hi):
    return math.exp(rng.uniform(math.log(lo), math.log(hi)))


def _random_hyperexp(rng, cfg: GenConfig) -> PhaseType:
    """H2 at an exact target SCV, or a rejected-sampled H3 for variety."""
    lo = max(cfg.scv_min, 1.0 + 1e-6)
    target = _loguniform(rng, lo, cfg.scv_max)
    if rng.random() < 0.3:
        for _ in range(50):
            w = rng.dirichlet(np.ones(3))
            rates = np.exp(rng.uniform(-2.5, 2.5, size=3))
            cand = hyperexponential(w, rates)
            scv = ph_scv(cand)
            if cfg.scv_min <= scv <= cfg.scv_max:
                return scale_to_mean(cand, cfg.mean)
    return hyperexp_balanced(target, cfg.mean)


def _random_erlang_mix(rng, cfg: GenConfig) -> PhaseType:
    hi = min(cfg.scv_max, 1.0)
    target = _loguniform(rng, cfg.scv_min, hi)
    return mixed_erlang_fit(target, cfg.mean)


def _random_coxian(rng, cfg: GenConfig) -> PhaseType | None:
    order = int(rng.integers(2, min(cfg.max_order, 10) + 1))
    rates = np.exp(rng.uniform(-1.5, 1.5, size=order))
    cont = rng.uniform(0.3, 1.0, size=order - 1)
    cand = coxian(rates, cont)
    scv = ph_scv(cand)
    if cfg.scv_min <= scv <= cfg.scv_max:
        return scale_to_mean(cand, cfg.mean)
    return None


def _random_dense(rng, cfg: GenConfig) -> PhaseType | None:
    order = int(rng.integers(2, min(cfg.max_order, 10) + 1))
    alpha = rng.dirichlet(np.ones(order))
    alpha = alpha / alpha.sum()
    off = rng.uniform(0.0, 1.0, size=(order, order))
    off *= rng.random(size=(order, order)) < 0.6  # sparsify
    np.fill_diagonal(off, 0.0)
    exit_rates = rng.uniform(0.1, 1.5, size=order)
    sub = off.copy()
    np.fill_diagonal(sub, -(off.sum(axis=1) + exit_rates))
    cand = PhaseType(alpha, sub)
    scv = ph_scv(cand)
    if cfg.scv_min <= scv <= cfg.scv_max:
        return scale_to_mean(cand, cfg.mean)
    return None


def _family_weights(cfg: GenConfig) -> np.ndarray:
    w = np.array(cfg.family_weights, dtype=float)
    feasible = np.array(
        [cfg.scv_max > 1.0 + 1e-6, cfg.scv_min <= 1.0, True, True], dtype=bool
    )
    w = np.where(feasible, w, 0.0)
    if w.sum() == 0:
        raise ValueError("no feasible family for the requested SCV box")
    return w / w.sum()


def sample_ph(rng: np.random.Generator, cfg: GenConfig) -> PhaseType:
    """One draw from the stratified family mixture, respecting the SCV box."""
    w = _family_weights(cfg)
    fam = rng.choice(4, p=w)
    if fam == 0:
        return _random_hyperexp(rng, cfg)
    if fam == 1:
        return _random_erlang_mix(rng, cfg)
    maker = _random_coxian if fam == 2 else _random_dense
    for _ in range(200):
        ph = maker(rng, cfg)
        if ph is not None:
            return ph
    if cfg.scv_min <= 1.0:
        return _random_erlang_mix(rng, cfg)
    return _random_hyperexp(rng, cfg)


def generate_library(cfg: GenConfig) -> list[PhaseType]:
    """Stratified mixture of structural families covering the SCV box.

    Hyperexponentials cover SCV > 1, Erlang mixtures SCV < 1, plus Coxian
    chains and dense random chains (accepted by rejection) for shape
    variety. Deterministic for a fixed seed; every output has the
    configured mean and an SCV inside the box.
    """
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed))
    return [sample_ph(rng, cfg) for _ in range(cfg.count)]


# ---------------------------------------------------------------------------
# Sampling


def _classify(ph: PhaseType) -> str:
    """Pick a sampling strategy from the chain structure."""
    p = ph.p
    if p == 1:
        return "exponential"
    off = ph.subgen - np.diag(np.diag(ph.subgen))
    if not off.any():
        return "hyperexponential"
    sup = np.diag(ph.subgen, k=1)
    chain = np.zeros_like(ph.subgen)
    idx = np.arange(p)
    chain[idx, idx] = np.diag(ph.subgen)
    chain[idx[:-1], idx[:-1] + 1] = sup
    rates = -np.diag(ph.subgen)
    if (
        np.array_equal(chain, ph.subgen)
        and np.all(rates == rates[0])
        and np.all(sup == rates[:-1])
    ):
        # uniform-rate pure chain with exit only from the last phase
        return "erlang_chain"
    return "general"


def draw_variates(ph: PhaseType, n: int, rng: np.random.Generator) -> np.ndarray:
    """i.i.d. absorption-time samples from the phase chain.

    Structure-aware fast paths (exponential, hyperexponential and
    uniform-rate chains) avoid walking the chain; everything else runs a
    vectorized simulation of the embedded jump process.
    """
    if n < 0:
        raise ValueError("n must be nonnegative")
    if n == 0:
        return np.empty(0)
    kind = _classify(ph)
    rates = -np.diag(ph.subgen)
    if kind == "exponential":
        return rng.exponential(1.0 / rates[0], size=n)
    if kind == "hyperexponential":
        branch = rng.choice(ph.p, size=n, p=ph.alpha / ph.alpha.sum())
        return rng.exponential(1.0, size=n) / rates[branch]
    if kind == "erlang_chain":
        start = rng.choice(ph.p, size=n, p=ph.alpha / ph.alpha.sum())
        shapes = (ph.p - start).astype(float)
        return rng.gamma(shapes, 1.0 / rates[0], size=n)
    return _walk_chain(ph, n, rng)


def _walk_chain(ph: PhaseType, n: int, rng: np.random.Generator) -> np.ndarray:
    """Simulate the embedded chain round by round over the active samples."""
    p = ph.p
    rates = -np.diag(ph.subgen)
    jump = ph.subgen / rates[:, None]
    np.fill_diagonal(jump, 0.0)
    # cumulative transition table; final column absorbs
    cum = np.cumsum(np.hstack([jump, (ph.exit_rates / rates)[:, None]]), axis=1)
    cum[:, -1] = 1.0
    cur = rng.choice(p, size=n, p=ph.alpha / ph.alpha.sum())
    total = np.zeros(n)
    active = np.arange(n)
    while active.size:
        here = cur[active]
        total[active] += rng.exponential(1.0, size=active.size) / rates[here]
        u = rng.random(active.size)
        nxt = (u[:, None] > cum[here]).sum(axis=1)
        moved = nxt < p
        cur[active[moved]] = nxt[moved]
        active = active[moved]
    return total
