"""Gibbs sampler for the posterior over ranking-model weights.

Generative story per annotator: every class k gets an independent arrival
time tau_k ~ Exp(lambda_k); sorting the arrivals yields a full ordering, and
the observed partial ranking is that ordering with positions grouped into
the annotator's blocks. With independent Gamma(alpha, beta) priors on the
weights, all three conditionals are exact:

  * the ordering within each block, given the weights, via the block's
    subset table (a trellis walk);
  * the arrival times, given weights and orderings, via interarrival
    exponentials whose rate at position k is the weight still unranked;
  * each weight, given the arrival times, via a Gamma whose shape counts
    the class's appearances in non-trailing blocks and whose rate adds up
    arrival times. A class an annotator never ranked is only known not to
    have arrived before that annotator's last ranked class, so its arrival
    contributes censored at that time and its shape is untouched.

Reliability is an integer repetition count: each annotation is entered that
many times with its own latent ordering and arrival times, which sharpens
the likelihood exactly like observing the annotator repeatedly.

Weights stay unnormalized inside the chain; emitted samples are projected
onto the simplex. With no annotations the chain reproduces the prior, whose
normalized draws are Dirichlet(alpha, ..., alpha).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .pl_likelihood import _table_values
from .rankings import ClassSpace, PartialRanking
from .samples import PosteriorSamples

__all__ = [
    "DEFAULT_REPETITION_GRID",
    "GibbsConfig",
    "GibbsState",
    "GibbsSampler",
    "gibbs_run",
]

# Reliability settings swept by default, loosest to tightest.
DEFAULT_REPETITION_GRID = (1, 2, 3, 5, 10)


@dataclass(frozen=True)
class GibbsConfig:
    """Chain settings.

    Defaults keep 1500 of 2000 sweeps after a 500-sweep burn-in.
    """

    alpha: float = 1.0
    beta: float = 1.0
    iterations: int = 2000
    burn_in: int = 500
    thinning: int = 1
    repetitions: int = 1
    seed: int | None = None

    def __post_init__(self) -> None:
        if not self.alpha > 0 or not self.beta > 0:
            raise ValueError("alpha and beta must be positive")
        if self.iterations < 1:
            raise ValueError("iterations must be >= 1")
        if not (0 <= self.burn_in < self.iterations):
            raise ValueError("burn_in must lie in [0, iterations)")
        if self.thinning < 1:
            raise ValueError("thinning must be >= 1")
        if not (isinstance(self.repetitions, (int, np.integer)) and self.repetitions >= 1):
            raise ValueError("repetitions must be a positive integer")

    @property
    def num_retained(self) -> int:
        """Samples the chain will emit."""
        span = self.iterations - self.burn_in
        return (span + self.thinning - 1) // self.thinning


@dataclass
class GibbsState:
    """Mutable chain state.

    Attributes:
        lam: (K,) current unnormalized weights.
        sigmas: per effective annotation, a full compatible permutation
            (position -> class id). Empty until the first ordering pass.
        taus: per effective annotation, (K,) arrival times by class id.
    """

    lam: np.ndarray
    sigmas: list = field(default_factory=list)
    taus: list = field(default_factory=list)


class _AnnotationPrep:
    """Per-annotation constants the sweep loop reuses."""

    __slots__ = ("blocks", "final_block", "ranked_ids", "num_ranked")

    def __init__(self, ranking: PartialRanking):
        parts = ranking.partition()
        # Non-trailing blocks carry likelihood; the trailing one is free.
        self.blocks = [np.array(sorted(b), dtype=np.int64) for b in parts[:-1]]
        self.final_block = np.array(sorted(parts[-1]), dtype=np.int64)
        if self.blocks:
            self.ranked_ids = np.concatenate(self.blocks)
        else:
            self.ranked_ids = np.empty(0, dtype=np.int64)
        self.num_ranked = int(self.ranked_ids.size)


class GibbsSampler:
    """Runs the three-conditional chain for one case.

    Args:
        rankings: annotations sharing one class space. May be empty, in
            which case ``class_space`` fixes the class count and the chain
            samples the prior.
        config: chain settings; reliability comes from ``config.repetitions``.
        class_space: required when ``rankings`` is empty.
    """

    def __init__(
        self,
        rankings,
        config: GibbsConfig | None = None,
        class_space: ClassSpace | None = None,
    ):
        self.config = config or GibbsConfig()
        rankings = list(rankings)
        if rankings:
            class_space = rankings[0].class_space
            for r in rankings:
                if r.class_space.size != class_space.size:
                    raise ValueError("rankings must share one class space")
        elif class_space is None:
            raise ValueError("class_space is required when no rankings are given")
        self.class_space = class_space
        self.num_classes = class_space.size

        # Repetitions literally duplicate the annotation, each copy with its
        # own latent ordering and arrival times.
        base = [_AnnotationPrep(r) for r in rankings]
        self.preps = [p for p in base for _ in range(self.config.repetitions)]

        n = np.zeros(self.num_classes)
        for prep in self.preps:
            if prep.num_ranked:
                n[prep.ranked_ids] += 1.0
        self.ranked_counts = n

        self.rng = np.random.default_rng(self.config.seed)
        lam0 = self.rng.gamma(self.config.alpha, 1.0 / self.config.beta, size=self.num_classes)
        self.state = GibbsState(lam=lam0)

    # -- conditional 1: orderings ------------------------------------------

    def _sample_block_order(self, members: np.ndarray, zbar: float, lam: np.ndarray) -> list:
        """Order one tied block with the exact within-block conditional.

        At each step the next class s is drawn with probability proportional
        to the subset value of the remaining set minus s.
        """
        n = members.size
        if n == 1:
            return [int(members[0])]
        values, _ = _table_values(lam[members], zbar)
        order = []
        mask = (1 << n) - 1
        while mask:
            rest = mask
            weights = []
            picks = []
            while rest:
                bit = rest & -rest
                weights.append(values[mask ^ bit])
                picks.append(bit)
                rest ^= bit
            if len(picks) == 1:
                chosen = picks[0]
            else:
                u = self.rng.random() * sum(weights)
                acc = 0.0
                chosen = picks[-1]
                for wgt, bit in zip(weights, picks):
                    acc += wgt
                    if u < acc:
                        chosen = bit
                        break
            order.append(int(members[chosen.bit_length() - 1]))
            mask ^= chosen
        return order

    def sample_sigma(self) -> None:
        """Redraw every annotation's compatible full ordering given lam."""
        lam = self.state.lam
        total = float(lam.sum())
        sigmas = []
        for prep in self.preps:
            positions = []
            zbar = total
            for members in prep.blocks:
                zbar -= float(lam[members].sum())
                positions.extend(self._sample_block_order(members, zbar, lam))
            if prep.final_block.size:
                fb = prep.final_block
                if fb.size == 1:
                    positions.append(int(fb[0]))
                else:
                    # Ordering what remains is the model itself: run the race.
                    arrivals = self.rng.exponential(1.0 / lam[fb])
                    positions.extend(fb[np.argsort(arrivals, kind="stable")].tolist())
            sigmas.append(np.array(positions, dtype=np.int64))
        self.state.sigmas = sigmas

    # -- conditional 2: arrival times --------------------------------------

    def sample_tau(self) -> None:
        """Redraw arrival times given lam and the current orderings.

        The interarrival time into position k is exponential with rate equal
        to the total weight of everything not yet ranked, so the first
        arrival has rate sum(lam) and arrivals are strictly increasing.
        """
        if len(self.state.sigmas) != len(self.preps):
            raise RuntimeError("orderings not sampled yet; call sample_sigma first")
        lam = self.state.lam
        taus = []
        for sigma in self.state.sigmas:
            by_pos = lam[sigma]
            rates = np.cumsum(by_pos[::-1])[::-1]
            arrivals = np.cumsum(self.rng.exponential(1.0 / rates))
            tau = np.empty_like(arrivals)
            tau[sigma] = arrivals
            taus.append(tau)
        self.state.taus = taus

    # -- conditional 3: weights --------------------------------------------

    def _posterior_gamma_params(self):
        """Shape and rate vectors for the weight update.

        Shape adds the class's ranked appearances; the rate adds each
        annotation's arrival time, censored at that annotation's last ranked
        arrival for classes it never ranked (an unranked class is only known
        to have arrived after that point; zero when nothing was ranked).
        """
        shape = self.config.alpha + self.ranked_counts
        rate = np.full(self.num_classes, self.config.beta)
        for prep, sigma, tau in zip(self.preps, self.state.sigmas, self.state.taus):
            if prep.num_ranked:
                horizon = float(tau[sigma[prep.num_ranked - 1]])
                rate += np.minimum(tau, horizon)
        return shape, rate

    def sample_lambda(self) -> None:
        """Redraw every weight from its Gamma full conditional."""
        if self.preps and len(self.state.taus) != len(self.preps):
            raise RuntimeError("arrival times not sampled yet; call sample_tau first")
        shape, rate = self._posterior_gamma_params()
        self.state.lam = self.rng.gamma(shape, 1.0 / rate)

    # -- driver -------------------------------------------------------------

    def run(self) -> PosteriorSamples:
        """Sweep the chain and emit retained, normalized samples."""
        cfg = self.config
        kept = np.empty((cfg.num_retained, self.num_classes))
        row = 0
        for t in range(1, cfg.iterations + 1):
            self.sample_sigma()
            self.sample_tau()
            self.sample_lambda()
            if t > cfg.burn_in and (t - cfg.burn_in - 1) % cfg.thinning == 0:
                lam = self.state.lam
                kept[row] = lam / lam.sum()
                row += 1
        return PosteriorSamples(
            samples=kept,
            model="pl-gibbs",
            reliability=cfg.repetitions,
            seed=cfg.seed,
        )


def gibbs_run(
    rankings,
    config: GibbsConfig | None = None,
    class_space: ClassSpace | None = None,
) -> PosteriorSamples:
    """Build a sampler and run it. See :class:`GibbsSampler`."""
    return GibbsSampler(rankings, config=config, class_space=class_space).run()
