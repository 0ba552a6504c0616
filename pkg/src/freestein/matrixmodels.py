"""Random-matrix Monte Carlo backend.

Coordinates are sampled as independent GUE matrices (Hermitian N x N,
strictly-upper entries complex Gaussian with variance 1/N, real
diagonal with variance 1/N) or as self-adjoint polynomial images of
fresh GUE matrices.  Word moments are averaged normalized traces over
``samples`` independent draws; each draw gets its own RNG stream spawned
from the master seed, so results are identical no matter how sampling
is scheduled.

The output is a ``MomentTable`` carrying per-word standard errors and,
as the per-coordinate upper norm estimate, the largest spectral norm
seen across samples.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .algebra import NcPoly
from .errors import ParseError
from .states import MomentTable, words_up_to


@dataclass(frozen=True)
class GueGenerator:
    """One independent GUE coordinate."""

    kind = "gue"


@dataclass(frozen=True)
class PolyOfGueGenerator:
    """Coordinate given by a self-adjoint polynomial of fresh GUE inputs."""

    poly: NcPoly
    fresh_gues: int

    kind = "poly_of_gue"

    def __post_init__(self):
        if self.fresh_gues < 1:
            raise ValueError("fresh_gues must be >= 1")
        if self.poly.nvars != self.fresh_gues:
            raise ValueError("generator polynomial nvars must equal fresh_gues")
        if self.poly.star() != self.poly:
            raise ValueError("generator polynomial must be self-adjoint")


@dataclass(frozen=True)
class EnsembleConfig:
    size: int
    samples: int
    seed: int
    generators: tuple

    def __post_init__(self):
        if self.size < 1:
            raise ValueError("matrix size must be >= 1")
        if self.samples < 1:
            raise ValueError("sample count must be >= 1")
        if not self.generators:
            raise ValueError("at least one generator required")
        object.__setattr__(self, "generators", tuple(self.generators))

    @property
    def nvars(self):
        return len(self.generators)


def sample_gue(rng, size):
    """One GUE draw: Hermitian, E|H_ij|^2 = 1/size off-diagonal,
    real diagonal with variance 1/size."""
    scale = 1.0 / np.sqrt(2.0 * size)
    a = rng.standard_normal((size, size))
    b = rng.standard_normal((size, size))
    h = scale * (a + 1j * b)
    return (h + h.conj().T) / np.sqrt(2.0)


def eval_poly_matrices(poly, mats, size):
    """Evaluate a noncommutative polynomial on concrete matrices."""
    out = np.zeros((size, size), dtype=complex)
    eye = np.eye(size)
    for word, coeff in poly.terms.items():
        acc = eye
        for letter in word:
            acc = acc @ mats[letter - 1]
        out = out + complex(coeff) * acc
    return out


def _coordinate_matrices(config, rng):
    mats = []
    for gen in config.generators:
        if isinstance(gen, GueGenerator):
            mats.append(sample_gue(rng, config.size))
        elif isinstance(gen, PolyOfGueGenerator):
            fresh = [sample_gue(rng, config.size) for _ in range(gen.fresh_gues)]
            mats.append(eval_poly_matrices(gen.poly, fresh, config.size))
        else:
            raise ParseError(f"unknown generator {gen!r}", field="generators")
    return mats


def _word_traces(mats, size, max_order, words):
    """Normalized traces of all words, via half-length product tables."""
    half = (max_order + 1) // 2
    prods = {(): np.eye(size, dtype=complex)}
    for w in words:
        if 0 < len(w) <= half:
            prods[w] = prods[w[:-1]] @ mats[w[-1] - 1]
    traces = {}
    for w in words:
        cut = (len(w) + 1) // 2
        left, right = w[:cut], w[cut:]
        if right:
            traces[w] = np.einsum("ij,ji->", prods[left], prods[right]) / size
        else:
            traces[w] = np.trace(prods[left]) / size
    return traces


def mc_moment_table(config, max_order):
    """Monte Carlo moment table: per-word sample mean, standard error,
    and sampled spectral-norm upper estimates. Deterministic in the seed."""
    n = config.nvars
    words = words_up_to(n, max_order, min_len=1)
    mean = {w: 0j for w in words}
    msq = {w: 0.0 for w in words}
    norm_max = [0.0] * n

    streams = np.random.SeedSequence(config.seed).spawn(config.samples)
    for s, ss in enumerate(streams):
        rng = np.random.default_rng(ss)
        mats = _coordinate_matrices(config, rng)
        for i, m in enumerate(mats):
            eigs = np.linalg.eigvalsh(m)
            norm_max[i] = max(norm_max[i], float(np.abs(eigs).max()))
        traces = _word_traces(mats, config.size, max_order, words)
        # Welford over complex values
        for w, t in traces.items():
            d = t - mean[w]
            mean[w] = mean[w] + d / (s + 1)
            msq[w] += (d.conjugate() * (t - mean[w])).real

    count = config.samples
    stderr = {
        w: float(np.sqrt(msq[w] / count / max(count - 1, 1))) for w in words
    }
    entries = {w: mean[w] for w in words}
    return MomentTable(
        n,
        max_order,
        entries,
        tracial=True,
        norm_upper=tuple(norm_max),
        stderr=stderr,
    )


def moment_table_from_matrices(mats, max_order, atol=1e-12):
    """Exact trace state of a fixed tuple of Hermitian matrices.

    phi(w) = tr(prod of the word) / N.  Such states satisfy every moment
    invariant (unit, Hermitian symmetry, positivity, traciality) up to
    floating point, and their spectral norms are exact upper norm
    estimates.  Useful both as a deterministic table backend and as an
    independent oracle in tests.
    """
    mats = [np.asarray(m, dtype=complex) for m in mats]
    size = mats[0].shape[0]
    for m in mats:
        if m.shape != (size, size):
            raise ValueError("all matrices must share one square shape")
        if np.abs(m - m.conj().T).max() > atol:
            raise ValueError("matrices must be Hermitian")
    n = len(mats)
    words = words_up_to(n, max_order, min_len=1)
    traces = _word_traces(mats, size, max_order, words)
    norms = tuple(float(np.abs(np.linalg.eigvalsh(m)).max()) for m in mats)
    return MomentTable(n, max_order, traces, tracial=True, norm_upper=norms)
