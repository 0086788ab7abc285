"""Adaptive-subspace self-organizing map (ASSOM).

Each module of the network holds an orthonormal basis of an H-dimensional
subspace of R^D.  Modules compete on squared reconstruction error; the
winner and its neighbours (weighted by a Gaussian of the distance between
their reconstructions and the winner's) rotate their bases towards the
input, followed by a dissipation step that shrinks small basis components
and a Gram-Schmidt re-orthonormalization.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, DegenerateBasis, DimensionMismatch
from .subspace import (
    DEPENDENCE_TOL,
    BasisSet,
    gram_schmidt,
    orthonormality_error,
)

log = logging.getLogger(__name__)

FORMAT_VERSION = 1
INIT_RETRIES = 16


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 100
    eta_start: float = 0.1
    eta_end: float = 0.001
    sigma: float = 1.0
    alpha: float = 1e-4
    episode_size: int = 1
    seed: int = 0
    denom_floor: float = 1e-9

    def __post_init__(self):
        if int(self.epochs) != self.epochs or self.epochs < 0:
            raise ConfigError(f"epochs must be a non-negative integer, got {self.epochs!r}")
        if not (0 < self.eta_end <= self.eta_start <= 1):
            raise ConfigError(
                f"learning rates must satisfy 0 < eta_end <= eta_start <= 1, "
                f"got eta_start={self.eta_start}, eta_end={self.eta_end}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if not self.alpha >= 0:
            raise ConfigError(f"alpha must be non-negative, got {self.alpha}")
        if int(self.episode_size) != self.episode_size or self.episode_size < 1:
            raise ConfigError(f"episode_size must be a positive integer, got {self.episode_size!r}")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError(f"seed must fit in an unsigned 64-bit integer, got {self.seed}")
        if not self.denom_floor > 0:
            raise ConfigError(f"denom_floor must be positive, got {self.denom_floor}")

    def learning_rate(self, epoch: int) -> float:
        """Linearly decayed learning rate for ``epoch`` (0-based)."""
        if self.epochs <= 1:
            return self.eta_start
        frac = epoch / (self.epochs - 1)
        return self.eta_start + (self.eta_end - self.eta_start) * frac


@dataclass
class AssomModule:
    """One competing unit.

    ``vectors`` is the working basis, an ``(H, D)`` array.  Between an
    update and the following re-orthonormalization it need not be
    orthonormal; ``basis`` validates and freezes it.
    """

    index: int
    vectors: np.ndarray
    prev_vectors: np.ndarray = None

    def __post_init__(self):
        self.vectors = np.array(self.vectors, dtype=float)
        if self.prev_vectors is None:
            self.prev_vectors = self.vectors.copy()
        else:
            self.prev_vectors = np.array(self.prev_vectors, dtype=float)

    @property
    def basis(self) -> BasisSet:
        return BasisSet(self.vectors)

    @property
    def prev_basis(self) -> BasisSet:
        return BasisSet(self.prev_vectors)


@dataclass
class AssomNetwork:
    modules: list[AssomModule]
    input_dim: int
    subspace_dim: int

    def __post_init__(self):
        if not self.modules:
            raise ConfigError("a network needs at least one module")
        for pos, m in enumerate(self.modules):
            if m.index != pos:
                raise ValueError(f"module at position {pos} has index {m.index}")
            if m.vectors.shape != (self.subspace_dim, self.input_dim):
                raise DimensionMismatch(
                    f"module {pos} has shape {m.vectors.shape}, "
                    f"expected {(self.subspace_dim, self.input_dim)}")

    @property
    def n_modules(self) -> int:
        return len(self.modules)

    def stacked(self) -> np.ndarray:
        """All bases as an ``(N, H, D)`` array (a copy)."""
        return np.stack([m.vectors for m in self.modules])

    def copy(self) -> "AssomNetwork":
        return AssomNetwork(
            [AssomModule(m.index, m.vectors.copy(), m.prev_vectors.copy()) for m in self.modules],
            self.input_dim, self.subspace_dim)

    def max_orthonormality_error(self) -> float:
        return max(orthonormality_error(m.vectors) for m in self.modules)

    @classmethod
    def from_stacked(cls, bases: np.ndarray) -> "AssomNetwork":
        bases = np.asarray(bases, dtype=float)
        n, h, d = bases.shape
        return cls([AssomModule(i, bases[i].copy()) for i in range(n)], d, h)


@dataclass
class TrainingHistory:
    cost: list[float] = field(default_factory=list)
    orthonormality: list[float] = field(default_factory=list)


# ---------------------------------------------------------------------------
# Construction
# ---------------------------------------------------------------------------

def init_network(input_dim: int, subspace_dim: int, n_modules: int, seed: int) -> AssomNetwork:
    """Random orthonormal bases drawn from uniform(-1, 1) vectors.

    Deterministic in ``(input_dim, subspace_dim, n_modules, seed)``.
    """
    if not 1 <= subspace_dim <= input_dim:
        raise ConfigError(f"need 1 <= H <= D, got H={subspace_dim}, D={input_dim}")
    if n_modules < 1:
        raise ConfigError(f"need at least one module, got {n_modules}")
    rng = np.random.default_rng(seed)
    modules = []
    for n in range(n_modules):
        for attempt in range(INIT_RETRIES):
            draw = rng.uniform(-1.0, 1.0, size=(subspace_dim, input_dim))
            try:
                basis = gram_schmidt(draw)
            except DegenerateBasis:
                continue
            break
        else:
            raise DegenerateBasis(
                f"could not draw an independent basis for module {n} "
                f"after {INIT_RETRIES} attempts")
        modules.append(AssomModule(n, np.array(basis.vectors)))
    return AssomNetwork(modules, input_dim, subspace_dim)


# ---------------------------------------------------------------------------
# Competition, kernel, cost
# ---------------------------------------------------------------------------

def _as_rows(x, dim: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        x = x[None, :]
    if x.ndim != 2 or x.shape[1] != dim:
        raise DimensionMismatch(f"expected rows of length {dim}, got shape {x.shape}")
    return x


def _reconstruct_all(bases: np.ndarray, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Reconstructions and squared residuals of every row under every module.

    Returns ``xhat`` with shape (N, R, D) and ``res2`` with shape (N, R).
    """
    coef = np.einsum("nhd,rd->nrh", bases, x)
    xhat = np.einsum("nrh,nhd->nrd", coef, bases)
    diff = x[None, :, :] - xhat
    res2 = np.einsum("nrd,nrd->nr", diff, diff)
    return xhat, res2


def find_winner(network: AssomNetwork, episode) -> int:
    """Index of the module with the smallest summed squared residual.

    Ties go to the lowest module index.
    """
    x = _as_rows(episode, network.input_dim)
    if len(x) == 0:
        raise ValueError("episode must contain at least one sample")
    _, res2 = _reconstruct_all(network.stacked(), x)
    return int(np.argmin(res2.sum(axis=1)))


def neighborhood_kernel(xhat_winner, xhat_n, sigma: float) -> float:
    """Gaussian of the distance between two reconstructions."""
    d = np.asarray(xhat_winner, dtype=float) - np.asarray(xhat_n, dtype=float)
    return float(np.exp(-float(d @ d) / (2.0 * sigma * sigma)))


def _episode_bounds(n_rows: int, episode_size: int) -> np.ndarray:
    return np.arange(0, n_rows, episode_size)


def cost(network: AssomNetwork, data, sigma: float) -> float:
    """Kernel-weighted total squared residual over a list of episodes.

    ``data`` is a sequence of episodes, each an ``(S, D)`` array (or a
    single vector).  For every sample the winner of its episode is
    determined, and each module contributes its squared residual weighted
    by the kernel between its reconstruction and the winner's.
    """
    episodes = [_as_rows(ep, network.input_dim) for ep in data]
    if not episodes:
        return 0.0
    bases = network.stacked()
    total = 0.0
    for ep in episodes:
        xhat, res2 = _reconstruct_all(bases, ep)
        c = int(np.argmin(res2.sum(axis=1)))
        d = xhat - xhat[c][None, :, :]
        g = np.exp(-np.einsum("nrd,nrd->nr", d, d) / (2.0 * sigma * sigma))
        total += float(np.sum(g * res2))
    return total


def dataset_cost(network: AssomNetwork, x, sigma: float, episode_size: int = 1) -> float:
    """``cost`` over rows of ``x`` grouped in order into episodes."""
    x = _as_rows(x, network.input_dim)
    if len(x) == 0:
        return 0.0
    bases = network.stacked()
    xhat, res2 = _reconstruct_all(bases, x)
    starts = _episode_bounds(len(x), episode_size)
    sums = np.add.reduceat(res2, starts, axis=1)            # (N, n_episodes)
    winners = np.argmin(sums, axis=0)
    lengths = np.diff(np.append(starts, len(x)))
    row_winner = np.repeat(winners, lengths)
    xhat_c = xhat[row_winner, np.arange(len(x))]             # (R, D)
    d = xhat - xhat_c[None, :, :]
    g = np.exp(-np.einsum("nrd,nrd->nr", d, d) / (2.0 * sigma * sigma))
    return float(np.sum(g * res2))


# ---------------------------------------------------------------------------
# Learning rule
# ---------------------------------------------------------------------------

def basis_gradient(g: float, x, b) -> np.ndarray:
    """Gradient of the kernel-weighted residual energy w.r.t. one basis vector.

    Returns ``-2 g (x . b) x``; the kernel value ``g`` is treated as a
    constant.
    """
    x = np.asarray(x, dtype=float)
    b = np.asarray(b, dtype=float)
    return -2.0 * g * float(x @ b) * x


def update_module(module: AssomModule, x, lambda_bar: float, denom_floor: float = 1e-9) -> AssomModule:
    """Rotate a module's basis towards ``x``.

    Every basis vector gets ``b + lambda_bar (x . b) x / denom`` with
    ``denom = max(|xhat| |x|, denom_floor)`` and ``xhat`` the module's
    reconstruction of ``x`` before the update.  The result is not
    re-orthonormalized.
    """
    if lambda_bar < 0:
        raise ValueError(f"lambda_bar must be non-negative, got {lambda_bar}")
    x = np.asarray(x, dtype=float)
    b = module.vectors
    if x.shape != (b.shape[1],):
        raise DimensionMismatch(f"x has shape {x.shape}, module lives in R^{b.shape[1]}")
    coef = b @ x
    xhat = coef @ b
    denom = max(float(np.linalg.norm(xhat)) * float(np.linalg.norm(x)), denom_floor)
    new = b + (lambda_bar / denom) * np.outer(coef, x)
    return AssomModule(module.index, new, module.prev_vectors.copy())


def dissipate(b_now, b_prev, alpha: float) -> np.ndarray:
    """Shrink every component towards zero by ``alpha * |b_now - b_prev|``.

    Components never change sign and never grow in magnitude; a component
    whose magnitude is below its threshold becomes exactly zero.
    """
    b_now = np.asarray(b_now, dtype=float)
    b_prev = np.asarray(b_prev, dtype=float)
    if b_now.shape != b_prev.shape:
        raise DimensionMismatch(f"shapes differ: {b_now.shape} vs {b_prev.shape}")
    eps = alpha * np.abs(b_now - b_prev)
    return np.sign(b_now) * np.maximum(0.0, np.abs(b_now) - eps)


def _orthonormalize_stack(bases: np.ndarray) -> np.ndarray:
    """Modified Gram-Schmidt applied to every module of an (N, H, D) stack.

    Same arithmetic as ``gram_schmidt`` but vectorized over modules.
    Raises DegenerateBasis naming the first failing module.
    """
    work = bases.copy()
    h = work.shape[1]
    for i in range(h):
        if i:
            c = np.einsum("nkd,nd->nk", work[:, :i, :], work[:, i, :])
            work[:, i, :] -= np.einsum("nk,nkd->nd", c, work[:, :i, :])
        norms = np.linalg.norm(work[:, i, :], axis=1)
        bad = ~(np.isfinite(norms) & (norms >= DEPENDENCE_TOL))
        if bad.any():
            n = int(np.flatnonzero(bad)[0])
            raise DegenerateBasis(
                f"module {n}: basis vector {i} collapsed (residual norm {norms[n]:.3g})")
        work[:, i, :] /= norms[:, None]
        if i + 1 < h:
            coeffs = np.einsum("nkd,nd->nk", work[:, i + 1:, :], work[:, i, :])
            work[:, i + 1:, :] -= coeffs[:, :, None] * work[:, i, None, :]
    return work


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _train_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(int(seed), spawn_key=(1,)))


def train(network: AssomNetwork, data, config: TrainingConfig,
          callback=None) -> tuple[AssomNetwork, TrainingHistory]:
    """Fit the network to the rows of ``data``.

    Per epoch the rows are shuffled and grouped into episodes.  For each
    episode the winner is chosen on the bases at the start of the episode;
    then for every sample each module is rotated towards it with rate
    ``eta * g`` where ``g`` is the kernel between the module's and the
    winner's current reconstructions.  After the episode the bases are
    dissipated against their start-of-epoch copy and re-orthonormalized.

    The input network is not modified; a trained copy is returned together
    with the per-epoch cost and orthonormality deviation.  ``callback``, if
    given, is called as ``callback(epoch, cost)`` after every epoch.
    """
    x = _as_rows(data, network.input_dim)
    history = TrainingHistory()
    net = network.copy()
    if config.epochs == 0 or len(x) == 0:
        return net, history

    rng = _train_rng(config.seed)
    bases = net.stacked()
    n_rows = len(x)
    two_sigma2 = 2.0 * config.sigma * config.sigma
    floor = config.denom_floor
    norms_x = np.linalg.norm(x, axis=1)

    for epoch in range(config.epochs):
        eta = config.learning_rate(epoch)
        prev = bases.copy()
        order = rng.permutation(n_rows)
        for start in range(0, n_rows, config.episode_size):
            idx = order[start:start + config.episode_size]
            ep = x[idx]
            _, res2 = _reconstruct_all(bases, ep)
            c = int(np.argmin(res2.sum(axis=1)))
            for t, row in enumerate(idx):
                xt = x[row]
                coef = bases @ xt                                   # (N, H)
                xhat = np.einsum("nh,nhd->nd", coef, bases)         # (N, D)
                d = xhat - xhat[c]
                g = np.exp(-np.einsum("nd,nd->n", d, d) / two_sigma2)
                denom = np.maximum(np.linalg.norm(xhat, axis=1) * norms_x[row], floor)
                step = (eta * g / denom)[:, None, None] * coef[:, :, None]
                bases = bases + step * xt[None, None, :]
            if config.alpha > 0:
                bases = dissipate(bases, prev, config.alpha)
            try:
                bases = _orthonormalize_stack(bases)
            except DegenerateBasis as exc:
                raise DegenerateBasis(f"epoch {epoch}: {exc}") from exc

        trained = AssomNetwork.from_stacked(bases)
        e = dataset_cost(trained, x, config.sigma, config.episode_size)
        history.cost.append(e)
        history.orthonormality.append(trained.max_orthonormality_error())
        log.debug("epoch %d eta=%.5f cost=%.6g", epoch, eta, e)
        if callback is not None:
            callback(epoch, e)

    for m, b, p in zip(net.modules, bases, prev):
        m.vectors = b.copy()
        m.prev_vectors = p.copy()
    return net, history


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def network_to_dict(network: AssomNetwork) -> dict:
    return {
        "version": FORMAT_VERSION,
        "D": network.input_dim,
        "H": network.subspace_dim,
        "N": network.n_modules,
        "modules": [
            {"index": m.index, "basis": [[float(v) for v in row] for row in m.vectors]}
            for m in network.modules
        ],
    }


def network_from_dict(doc: dict) -> AssomNetwork:
    try:
        version = doc["version"]
        d, h, n = int(doc["D"]), int(doc["H"]), int(doc["N"])
        raw = doc["modules"]
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"malformed network document: {exc}") from exc
    if version != FORMAT_VERSION:
        raise ConfigError(f"unsupported network format version {version!r}")
    if len(raw) != n:
        raise ConfigError(f"document declares N={n} but holds {len(raw)} modules")
    modules = []
    for pos, entry in enumerate(sorted(raw, key=lambda m: m["index"])):
        vectors = np.array(entry["basis"], dtype=float)
        if vectors.shape != (h, d):
            raise DimensionMismatch(f"module {entry['index']} has shape {vectors.shape}, expected {(h, d)}")
        BasisSet(vectors)  # validates orthonormality
        modules.append(AssomModule(int(entry["index"]), vectors))
    return AssomNetwork(modules, d, h)


def save_network(network: AssomNetwork, path) -> None:
    Path(path).write_text(json.dumps(network_to_dict(network), indent=2) + "\n")


def load_network(path) -> AssomNetwork:
    return network_from_dict(json.loads(Path(path).read_text()))


def principal_angles(a: BasisSet, b: BasisSet) -> np.ndarray:
    """Principal angles (radians, ascending) between two subspaces."""
    s = np.linalg.svd(a.vectors @ b.vectors.T, compute_uv=False)
    return np.sort(np.arccos(np.clip(s, -1.0, 1.0)))
