"""Preconditioned Crank-Nicolson sampling over whitened coefficients.

The chain state is the whitened coefficient vector xi of a truncated
Gaussian field, so the prior is exactly N(0, I) and the proposal
xi' = sqrt(1 - b^2) xi + b zeta with zeta ~ N(0, I) leaves it
invariant.  Acceptance then depends only on the log-likelihood
difference, with a single likelihood evaluation per iteration.

During burn-in the step size follows a Robbins-Monro recursion on
log b toward a target acceptance rate; it freezes afterwards so the
retained samples come from a fixed Metropolis kernel.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .fem import SolverError
from .priors import make_rng

#: step-size clamp
B_MIN, B_MAX = 1e-6, 1.0


@dataclass(frozen=True)
class SamplerConfig:
    """Total iteration budget (burn-in included) and adaptation knobs."""

    step_size: float
    iterations: int
    burn_in: int
    target_acceptance: float = 0.30
    n_saved: int = 100
    adapt_batch: int = 100
    adapt_gain: float = 0.05
    seed: int = 0

    def __post_init__(self):
        if not 0.0 < self.step_size <= 1.0:
            raise ValueError("step size must lie in (0, 1]")
        if not 0 <= self.burn_in <= self.iterations:
            raise ValueError("burn-in cannot exceed the iteration budget")
        if self.n_saved < 0 or self.adapt_batch < 1:
            raise ValueError("bad subsample or adaptation batch size")

    @property
    def retained(self):
        return self.iterations - self.burn_in


@dataclass
class Chain:
    """Live sampler state; advanced in place by pcn_step."""

    xi: np.ndarray
    log_like: float
    step_size: float
    rng: np.random.Generator
    iteration: int = 0
    accepts: int = 0
    rejects: int = 0
    failures: int = 0


def init_chain(config, log_likelihood, xi0):
    """Evaluate the starting state and wrap it into a Chain."""
    xi0 = np.asarray(xi0, dtype=float).copy()
    return Chain(
        xi=xi0,
        log_like=float(log_likelihood(xi0)),
        step_size=config.step_size,
        rng=make_rng(config.seed),
    )


def pcn_step(chain, log_likelihood):
    """One Metropolis step; exactly one likelihood evaluation.

    A likelihood failure (solver breakdown, non-finite value) aborts the
    step: the state is kept and the failure counted.
    """
    b = chain.step_size
    zeta = chain.rng.standard_normal(chain.xi.size)
    proposal = np.sqrt(1.0 - b * b) * chain.xi + b * zeta
    chain.iteration += 1
    try:
        log_like = float(log_likelihood(proposal))
    except SolverError:
        chain.failures += 1
        return chain
    if not np.isfinite(log_like):
        chain.failures += 1
        return chain
    if np.log(chain.rng.uniform()) < min(0.0, log_like - chain.log_like):
        chain.xi = proposal
        chain.log_like = log_like
        chain.accepts += 1
    else:
        chain.rejects += 1
    return chain


def adapt_step(step_size, batch_acceptance, target=0.30, gain=0.05):
    """Robbins-Monro update of log b toward the target acceptance."""
    b = step_size * np.exp(gain * (batch_acceptance - target))
    return float(np.clip(b, B_MIN, B_MAX))


@dataclass(frozen=True)
class ChainRecord:
    """Diagnostics plus the thinned post-burn-in subsample."""

    config: SamplerConfig
    saved_iterations: np.ndarray
    saved_states: np.ndarray
    log_like_trace: np.ndarray
    accept_trace: np.ndarray
    step_trace: np.ndarray
    accepts: int
    rejects: int
    failures: int
    final_xi: np.ndarray = field(repr=False, default=None)

    @property
    def acceptance_rate(self):
        return self.accepts / max(self.config.iterations, 1)


def subsample_indices(burn_in, iterations, n_saved):
    """Equally spaced 1-based iteration numbers in the retained stretch."""
    retained = iterations - burn_in
    if retained <= 0 or n_saved == 0:
        return np.empty(0, dtype=np.int64)
    n = min(n_saved, retained)
    return burn_in + np.ceil(np.arange(1, n + 1) * retained / n).astype(np.int64)


def run(config, log_likelihood, xi0):
    """Drive a full chain; deterministic given the config seed."""
    chain = init_chain(config, log_likelihood, xi0)
    keep = subsample_indices(config.burn_in, config.iterations, config.n_saved)
    keep_set = {int(k): j for j, k in enumerate(keep)}
    saved = np.empty((keep.size, chain.xi.size))
    log_like_trace = np.empty(config.iterations)
    accept_trace = np.zeros(config.iterations, dtype=np.int8)
    step_trace = np.empty(config.iterations)
    batch_start_accepts = 0
    for it in range(1, config.iterations + 1):
        before = chain.accepts
        pcn_step(chain, log_likelihood)
        log_like_trace[it - 1] = chain.log_like
        accept_trace[it - 1] = chain.accepts - before
        step_trace[it - 1] = chain.step_size
        if it <= config.burn_in and it % config.adapt_batch == 0:
            rate = (chain.accepts - batch_start_accepts) / config.adapt_batch
            chain.step_size = adapt_step(
                chain.step_size, rate, config.target_acceptance, config.adapt_gain
            )
            batch_start_accepts = chain.accepts
        j = keep_set.get(it)
        if j is not None:
            saved[j] = chain.xi
    return ChainRecord(
        config=config,
        saved_iterations=keep,
        saved_states=saved,
        log_like_trace=log_like_trace,
        accept_trace=accept_trace,
        step_trace=step_trace,
        accepts=chain.accepts,
        rejects=chain.rejects,
        failures=chain.failures,
        final_xi=chain.xi.copy(),
    )


def posterior_mean(record, push_forward):
    """Average of the pushed-forward thinned states, in field space."""
    if record.saved_states.shape[0] == 0:
        raise ValueError("chain record holds no retained samples")
    first = push_forward(record.saved_states[0])
    total = first.values.copy()
    for xi in record.saved_states[1:]:
        total += push_forward(xi).values
    mean = total / record.saved_states.shape[0]
    return type(first)(first.mesh, mean)


def save_trace(record, path):
    """Per-iteration CSV: iter,log_like,accept,b."""
    buf = io.StringIO()
    buf.write("iter,log_like,accept,b\n")
    for i in range(record.config.iterations):
        buf.write(
            f"{i + 1},{record.log_like_trace[i]:.17g},"
            f"{int(record.accept_trace[i])},{record.step_trace[i]:.17g}\n"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(buf.getvalue())


def save_states(record, path):
    """Thinned coefficient CSV: iter,c0,...,cN."""
    dim = record.saved_states.shape[1] if record.saved_states.size else 0
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iter," + ",".join(f"c{j}" for j in range(dim)) + "\n")
        for it, state in zip(record.saved_iterations, record.saved_states):
            fh.write(str(int(it)) + "," + ",".join(f"{v:.17g}" for v in state) + "\n")
