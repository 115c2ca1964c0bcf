"""Information-spectrum sampling and exact small-blocklength coding oracles.

The normalisation exponent is fixed at 1/2 throughout: samples are
(1/sqrt(n)) (sum_i ln W(y_i|x_i)/ref(y_i) - n * center).
"""

from __future__ import annotations

import itertools
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .channel import (
    ProbabilityVector,
    _matrix,
    _probs,
    log_ratio,
    mutual_information,
    output_distribution,
)
from .errors import (
    AbsoluteContinuityViolation,
    DomainError,
    EnumerationTooLarge,
    TypeEnumerationTooLarge,
)

ENUMERATION_LIMIT = 10_000_000
TYPE_LIMIT = 1_000_000
MAX_EXACT_BLOCKLENGTH = 14
# Relative width inside which an information density counts as equal to a threshold.
TIE_TOL = 1e-10


@dataclass(frozen=True)
class SpectrumSample:
    values: np.ndarray
    n: int
    center: float
    replicas: int
    seed: int


def replica_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for one replica; a pure function of (master seed, replica index)."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(index,)))


def _density_table(w: np.ndarray, p: np.ndarray, ref: np.ndarray) -> np.ndarray:
    used = (p[:, None] > 0) & (w > 0)
    if np.any(used & (ref[None, :] == 0)):
        raise AbsoluteContinuityViolation("a used row W_x puts mass outside support(ref)")
    return log_ratio(w, ref[None, :])


def _sample_block(args) -> np.ndarray:
    joint, table, n, center, seed, start, stop = args
    out = np.empty(stop - start)
    scale = math.sqrt(n)
    for k, index in enumerate(range(start, stop)):
        counts = replica_rng(seed, index).multinomial(n, joint)
        out[k] = (np.dot(counts, table) - n * center) / scale
    return out


def sample_information_density(w, p, ref=None, n: int = 1000, replicas: int = 1000,
                               seed: int = 0, center: Optional[float] = None,
                               workers: int = 1) -> SpectrumSample:
    """Normalised information densities for i.i.d. (x_i ~ P, y_i ~ W_{x_i}).

    Only the pair counts of a block matter, so each replica draws one
    multinomial vector. ``ref`` defaults to W_P and ``center`` to I(P, W).
    Output is identical for any number of workers.
    """
    if n < 1 or replicas < 1:
        raise DomainError("n and replicas must be positive")
    w, p = _matrix(w), _probs(p)
    ref = output_distribution(w, p).probs if ref is None else _probs(ref)
    if center is None:
        center = mutual_information(w, p)
    table = _density_table(w, p, ref).ravel()
    joint = (p[:, None] * w).ravel()
    joint = joint / joint.sum()
    workers = max(1, int(workers))
    bounds = np.linspace(0, replicas, workers + 1).astype(int)
    jobs = [(joint, table, n, float(center), int(seed), int(a), int(b))
            for a, b in zip(bounds[:-1], bounds[1:]) if b > a]
    if workers == 1:
        parts = [_sample_block(job) for job in jobs]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(_sample_block, jobs))
    return SpectrumSample(np.concatenate(parts), n, float(center), replicas, int(seed))


def empirical_ip(sample: SpectrumSample, r2: float) -> float:
    """Fraction of sample values strictly below r2."""
    values = sample.values if isinstance(sample, SpectrumSample) else np.asarray(sample)
    if values.size == 0:
        raise DomainError("empty sample")
    return float(np.mean(values < r2))


def ks_distance(values, cdf) -> float:
    """sup_x |F_emp(x) - cdf(x)| for a continuous reference cdf."""
    x = np.sort(np.asarray(values, dtype=float))
    m = x.size
    f = np.asarray(cdf(x), dtype=float)
    upper = np.arange(1, m + 1) / m - f
    lower = f - np.arange(0, m) / m
    return float(max(upper.max(), lower.max()))


# ---------------------------------------------------------------------------
# Exact enumeration over output blocks
# ---------------------------------------------------------------------------


def _check_enumerable(size: int, n: int):
    if n < 1:
        raise DomainError("blocklength must be positive")
    if n > MAX_EXACT_BLOCKLENGTH or size ** n > ENUMERATION_LIMIT:
        raise EnumerationTooLarge(
            f"|Y|^n = {size}^{n} exceeds the exact-enumeration limit {ENUMERATION_LIMIT}")


def _block_log_prob(log_row_table: np.ndarray, word) -> np.ndarray:
    """ln prod_i T[word_i, y_i] for every y in Y^n (row-major, y_1 most significant)."""
    out = log_row_table[word[0]]
    for letter in word[1:]:
        out = np.add.outer(out, log_row_table[letter]).ravel()
    return out


def _iid_log_prob(q: np.ndarray, n: int) -> np.ndarray:
    logq = np.full(q.shape, -np.inf)
    logq[q > 0] = np.log(q[q > 0])
    out = logq
    for _ in range(n - 1):
        out = np.add.outer(out, logq).ravel()
    return out


def _log_table(w: np.ndarray) -> np.ndarray:
    out = np.full(w.shape, -np.inf)
    out[w > 0] = np.log(w[w > 0])
    return out


def _exceeds(value: np.ndarray, threshold: float) -> np.ndarray:
    return value > threshold + TIE_TOL * max(1.0, abs(threshold))


def _strictly_below(value: np.ndarray, threshold: float) -> np.ndarray:
    return value < threshold - TIE_TOL * max(1.0, abs(threshold))


@dataclass(frozen=True)
class RandomCodeTrial:
    n: int
    codebook_size: int
    threshold: float
    exact_error: float
    seed: int
    codebook: np.ndarray = field(repr=False)


def threshold_decoder_error(w, p, codebook: np.ndarray, threshold: float) -> float:
    """Exact average error of the inductive threshold decoder for a given codebook.

    Codeword i decodes the outputs whose normalised density against W_P^{x n}
    exceeds ``threshold`` and that no earlier codeword has claimed.
    """
    w, p = _matrix(w), _probs(p)
    codebook = np.asarray(codebook, dtype=int)
    n = codebook.shape[1]
    _check_enumerable(w.shape[1], n)
    log_w = _log_table(w)
    log_ref = _iid_log_prob(output_distribution(w, p).probs, n)
    taken = np.zeros(w.shape[1] ** n, dtype=bool)
    success = 0.0
    for word in codebook:
        log_cond = _block_log_prob(log_w, word)
        region = _exceeds(log_cond - log_ref, n * threshold) & ~taken
        success += float(np.exp(log_cond[region]).sum())
        taken |= region
    return min(max(1.0 - success / len(codebook), 0.0), 1.0)


def exact_random_code(w, p, n: int, codebook_size: int, rate: float,
                      seed: int) -> RandomCodeTrial:
    """Draw an i.i.d. P codebook and evaluate its threshold decoder exactly.

    The decoder compares against the product reference W_P^{x n}, which is the
    exact output law only because the codebook is drawn i.i.d. from P.
    """
    w, p = _matrix(w), _probs(p)
    if codebook_size < 1:
        raise DomainError("codebook size must be positive")
    _check_enumerable(w.shape[1], n)
    rng = np.random.default_rng(seed)
    codebook = rng.choice(w.shape[0], size=(codebook_size, n), p=p)
    error = threshold_decoder_error(w, p, codebook, rate)
    return RandomCodeTrial(n, codebook_size, float(rate), error, int(seed), codebook)


def _compositions(n: int, parts: int):
    """All vectors of ``parts`` non-negative integers summing to n."""
    for bars in itertools.combinations(range(n + parts - 1), parts - 1):
        prev = -1
        counts = []
        for b in bars:
            counts.append(b - prev - 1)
            prev = b
        counts.append(n + parts - 1 - prev - 1)
        yield counts


def _composition_count(n: int, parts: int) -> int:
    return math.comb(n + parts - 1, parts - 1)


def density_tail(w, p, n: int, rate: float, ref=None, strict: bool = False) -> float:
    """P{(1/n) sum_i ln W(y_i|x_i)/ref(y_i) <= rate} under i.i.d. P x W, exactly.

    Summed over joint-type count vectors with multinomial weights. ``strict``
    switches to ``< rate``. ``ref`` defaults to W_P.
    """
    w, p = _matrix(w), _probs(p)
    ref = output_distribution(w, p).probs if ref is None else _probs(ref)
    table = _density_table(w, p, ref).ravel()
    joint = (p[:, None] * w).ravel()
    cells = np.flatnonzero(joint > 0)
    if _composition_count(n, cells.size) > ENUMERATION_LIMIT:
        raise EnumerationTooLarge("too many joint types to enumerate")
    log_joint = np.log(joint[cells])
    values = table[cells]
    log_n_fact = math.lgamma(n + 1)
    threshold = n * rate
    total = 0.0
    for counts in _compositions(n, cells.size):
        k = np.asarray(counts)
        density = float(np.dot(k, values))
        hit = _strictly_below(density, threshold) if strict else not _exceeds(density, threshold)
        if hit:
            log_coef = log_n_fact - sum(math.lgamma(c + 1) for c in counts)
            total += math.exp(log_coef + float(np.dot(k, log_joint)))
    return min(total, 1.0)


def direct_bound(w, p, n: int, codebook_size: int, rate: float) -> float:
    """Union bound on the expected random-code error: tail(rate) + (N/2) e^{-n rate}."""
    return density_tail(w, p, n, rate) + 0.5 * codebook_size * math.exp(-n * rate)


# ---------------------------------------------------------------------------
# Converse machinery
# ---------------------------------------------------------------------------


class MixtureReference:
    """Q_U^n: uniform mixture of (W_P)^{x n} over all n-types P, plus Q_M^{x n}.

    Densities are evaluated in the log domain from output type counts.
    """

    def __init__(self, w, n: int, q_m=None):
        w = _matrix(w)
        if n < 1:
            raise DomainError("n must be positive")
        n_types = _composition_count(n, w.shape[0])
        if n_types > TYPE_LIMIT:
            raise TypeEnumerationTooLarge(f"{n_types} input types exceed {TYPE_LIMIT}")
        if q_m is None:
            from .capacity import capacity

            q_m = capacity(w).q_m
        types = np.array(list(_compositions(n, w.shape[0])), dtype=float) / n
        outputs = np.vstack([types @ w, _probs(q_m)[None, :]])
        self.n = n
        self.types = types
        self.component_outputs = outputs
        self._log_outputs = _log_table(outputs)
        self.output_size = w.shape[1]

    @property
    def component_count(self) -> int:
        return self.component_outputs.shape[0]

    def _counts(self, y) -> np.ndarray:
        y = np.atleast_2d(np.asarray(y, dtype=int))
        if y.shape[1] != self.n:
            raise DomainError(f"sequences must have length {self.n}")
        counts = np.zeros((y.shape[0], self.output_size))
        for letter in range(self.output_size):
            counts[:, letter] = np.sum(y == letter, axis=1)
        return counts

    def component_log_densities(self, y) -> np.ndarray:
        """ln (W_P)^{x n}(y) per component, shape (len(y), component_count)."""
        counts = self._counts(y)
        logs = np.where(counts[:, None, :] > 0,
                        counts[:, None, :] * self._log_outputs[None, :, :], 0.0)
        # A zero-probability letter that actually occurs sends the component to -inf.
        dead = np.any((counts[:, None, :] > 0) & np.isneginf(self._log_outputs)[None, :, :],
                      axis=2)
        out = np.nan_to_num(logs, neginf=0.0).sum(axis=2)
        out[dead] = -np.inf
        return out

    def log_density(self, y) -> np.ndarray:
        comps = self.component_log_densities(y)
        return np.logaddexp.reduce(comps, axis=1) - math.log(self.component_count)

    def all_outputs(self) -> np.ndarray:
        """Every y in Y^n in row-major order (matches the exact enumerators)."""
        _check_enumerable(self.output_size, self.n)
        return np.array(list(itertools.product(range(self.output_size), repeat=self.n)))

    def log_density_all(self) -> np.ndarray:
        return self.log_density(self.all_outputs())


def converse_bound_check(w, trial: RandomCodeTrial, qref, gamma: float) -> tuple:
    """(P_e, rhs) for the converse inequality P_e >= rhs.

    rhs = (1/N) sum_i W^n_{phi(i)}{(1/n) ln W^n_{phi(i)}/Q^n < R - gamma}
          - e^{n(R - gamma)} / N,   with R = ln(N)/n.

    ``qref`` is a single-letter distribution (Q^n its i.i.d. power) or a
    ``MixtureReference``.
    """
    w = _matrix(w)
    n, size = trial.n, trial.codebook_size
    _check_enumerable(w.shape[1], n)
    if isinstance(qref, MixtureReference):
        if qref.n != n:
            raise DomainError("mixture reference built for a different blocklength")
        log_q = qref.log_density_all()
    else:
        log_q = _iid_log_prob(_probs(qref), n)
    rate = math.log(size) / n
    threshold = n * (rate - gamma)
    log_w = _log_table(w)
    tail = 0.0
    for word in trial.codebook:
        log_cond = _block_log_prob(log_w, word)
        if np.any(np.isfinite(log_cond) & np.isneginf(log_q)):
            raise AbsoluteContinuityViolation("W^n_x is not dominated by the reference Q^n")
        finite = np.isfinite(log_cond)
        low = np.zeros_like(finite)
        low[finite] = _strictly_below(log_cond[finite] - log_q[finite], threshold)
        tail += float(np.exp(log_cond[low]).sum())
    rhs = tail / size - math.exp(threshold) / size
    return trial.exact_error, rhs


def max_discrimination(p, q, a: float) -> tuple:
    """(max over subsets D of P(D) - a Q(D), the value on {P - a Q >= 0}).

    The first entry is an exhaustive subset search, so keep alphabets small.
    """
    p, q = np.asarray(p, dtype=float), np.asarray(q, dtype=float)
    if p.size > 20:
        raise EnumerationTooLarge("exhaustive subset search limited to 20 points")
    diff = p - a * q
    best = -math.inf
    for mask in range(1 << p.size):
        chosen = [(mask >> i) & 1 for i in range(p.size)]
        best = max(best, float(np.dot(chosen, diff)))
    region = diff >= 0
    return best, float(p[region].sum() - a * q[region].sum())
