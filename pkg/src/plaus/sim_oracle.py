"""Synthetic annotation generator and slow reference implementations.

Everything here exists to check the fast code against something independent:
annotations drawn from a known ground-truth weight vector, partial-ranking
probabilities summed permutation by permutation, and a brute-force grid
posterior for two or three classes. The oracles trade speed for obvious
correctness and are used by the test suite and the command line selfcheck.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .rankings import (
    ClassSpace,
    CombinatorialCapError,
    PartialRanking,
    count_compatible_permutations,
)
from .pl_likelihood import pl_partial_ranking_log_prob

__all__ = [
    "SimSpec",
    "simulate_annotations",
    "brute_force_partial_prob",
    "GridPosterior",
    "grid_posterior_oracle",
]

BRUTE_FORCE_CAP = 10_000_000


@dataclass(frozen=True)
class SimSpec:
    """Recipe for one synthetic case.

    Args:
        true_lambda: ground-truth plausibilities; positive, any scale.
        num_annotators: rankings to draw.
        block_sizes: sizes of the explicit blocks each annotator reports,
            e.g. (1, 2) for a top choice plus two tied runners-up. Must fit
            within the class count; remaining classes stay unranked.
        sharpness: exponent applied to the weights before sampling. Values
            above one make annotators agree more than the model that will
            be fit to them assumes; one draws from the model itself.
        seed: RNG seed.
    """

    true_lambda: tuple[float, ...]
    num_annotators: int
    block_sizes: tuple[int, ...]
    sharpness: float = 1.0
    seed: int | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "true_lambda", tuple(float(v) for v in self.true_lambda))
        object.__setattr__(self, "block_sizes", tuple(int(s) for s in self.block_sizes))
        if any(v <= 0 for v in self.true_lambda):
            raise ValueError("true_lambda must be strictly positive")
        if self.num_annotators < 1:
            raise ValueError("need at least one annotator")
        if any(s < 1 for s in self.block_sizes):
            raise ValueError("block sizes must be positive")
        if sum(self.block_sizes) > len(self.true_lambda):
            raise ValueError("block sizes exceed the class count")
        if not self.sharpness > 0:
            raise ValueError("sharpness must be positive")


def simulate_annotations(spec: SimSpec) -> list[PartialRanking]:
    """Draw annotations by running the ranking model on the true weights.

    Each annotator's full ordering comes from an exponential race: class k
    arrives at Exp(lambda_k) and earlier arrivals rank higher, which is
    exactly sampling without replacement in proportion to the weights. The
    ordering is then cut into the requested block sizes and the rest is
    left unranked. Deterministic given the seed.
    """
    rng = np.random.default_rng(spec.seed)
    lam = np.asarray(spec.true_lambda) ** spec.sharpness
    space = ClassSpace(size=lam.size)
    out = []
    for _ in range(spec.num_annotators):
        arrivals = rng.exponential(1.0 / lam)
        order = np.argsort(arrivals, kind="stable")
        blocks = []
        start = 0
        for size in spec.block_sizes:
            blocks.append(order[start : start + size].tolist())
            start += size
        out.append(PartialRanking(blocks, space))
    return out


def brute_force_partial_prob(lam, ranking: PartialRanking, cap: int = BRUTE_FORCE_CAP) -> float:
    """Partial-ranking probability by summing over compatible orderings.

    Enumerates every interleaving of the non-trailing blocks and adds up the
    sequential-choice probabilities; the trailing block is skipped because
    the conditional probability of any ordering of what remains sums to one.
    Independent of the subset recursion, so the two can check each other.

    Raises:
        CombinatorialCapError: the enumeration would exceed ``cap`` terms.
    """
    lam = np.asarray(lam, dtype=float)
    if np.any(lam <= 0):
        raise ValueError("weights must be strictly positive")
    parts = ranking.partition()
    if len(parts) <= 1:
        return 1.0
    ranked_blocks = parts[:-1]
    count = math.prod(math.factorial(len(b)) for b in ranked_blocks)
    if count > cap:
        raise CombinatorialCapError(f"{count} orderings exceed the cap of {cap}")
    total_mass = float(lam.sum())
    prob = 0.0
    per_block_orders = [itertools.permutations(sorted(b)) for b in ranked_blocks]
    for pieces in itertools.product(*per_block_orders):
        prefix = list(itertools.chain.from_iterable(pieces))
        residual = total_mass
        term = 1.0
        for cid in prefix:
            term *= lam[cid] / residual
            residual -= lam[cid]
        prob += term
    return prob


@dataclass(frozen=True, eq=False)
class GridPosterior:
    """Posterior moments from simplex quadrature.

    Attributes:
        mean: (K,) posterior mean of the normalized weights.
        variance: (K,) posterior variance per coordinate.
        resolution: lattice subdivisions per edge.
        num_nodes: quadrature nodes evaluated.
    """

    mean: np.ndarray
    variance: np.ndarray
    resolution: int
    num_nodes: int


def grid_posterior_oracle(rankings, alpha: float = 1.0, resolution: int = 200) -> GridPosterior:
    """Posterior of the normalized weights by brute-force quadrature.

    Works for two or three classes only. Because the ranking likelihood
    depends on the weights only through their direction, a Gamma(alpha, beta)
    prior on each unnormalized weight induces a Dirichlet(alpha, ..., alpha)
    prior on the simplex with beta dropping out; the oracle therefore weighs
    each lattice node by Dirichlet density times likelihood and normalizes.

    Nodes are cell midpoints, ``(i + 0.5) / resolution`` in each barycentric
    coordinate, scaled to the simplex; equal quadrature weights. Accuracy
    improves as the resolution grows.

    Args:
        rankings: annotations for one case; may be empty (prior only).
        alpha: Gamma shape of the sampler prior being mirrored.
        resolution: lattice subdivisions, >= 2.

    Returns:
        GridPosterior with mean and variance per class.
    """
    rankings = list(rankings)
    if rankings:
        k = rankings[0].class_space.size
    else:
        raise ValueError("need at least one ranking to fix the class count")
    if k not in (2, 3):
        raise ValueError(f"grid oracle supports 2 or 3 classes, got {k}")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if not alpha > 0:
        raise ValueError("alpha must be positive")

    if k == 2:
        x = (np.arange(resolution) + 0.5) / resolution
        nodes = np.column_stack([x, 1.0 - x])
    else:
        ij = [
            (i, j)
            for i in range(resolution)
            for j in range(resolution - i)
        ]
        arr = np.array(ij, dtype=float)
        third = resolution - 1 - arr.sum(axis=1)
        nodes = np.column_stack([arr + 0.5, third + 0.5]) / (resolution + 0.5)

    log_w = (alpha - 1.0) * np.log(nodes).sum(axis=1)
    for r in rankings:
        log_w += np.array([pl_partial_ranking_log_prob(node, r) for node in nodes])
    log_w -= log_w.max()
    w = np.exp(log_w)
    w /= w.sum()
    mean = w @ nodes
    variance = w @ (nodes - mean) ** 2
    return GridPosterior(
        mean=mean, variance=variance, resolution=resolution, num_nodes=nodes.shape[0]
    )
