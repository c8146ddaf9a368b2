"""Incremental sensorimotor memory with local linear models.

Entries are stored in flat growing arrays; nearest-neighbor retrieval runs
on a kd-tree that is rebuilt every few hundred inserts, with the
not-yet-indexed tail scanned exactly.  Queries are exact by default; an
approximation slack can be passed through to the tree for large memories.

Two memory flavours exist:

* ``EvolvingMemory`` stores (context, action, effect-change) triples keyed
  by the context, and fits local Jacobians of effect-change per action.
* ``FixedMemory`` stores (params, effect) pairs keyed by the effect (with a
  secondary key on the params), and fits local inverse models effect->params.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree


class EmptyMemoryError(RuntimeError):
    """Raised when a nearest-neighbor query hits an empty memory."""


@dataclass(frozen=True)
class SensorimotorEntry:
    """One learning exemplar as returned by queries."""

    context: np.ndarray
    action: np.ndarray | None
    effect: np.ndarray


@dataclass(frozen=True)
class LocalLinearModel:
    """A local linear map with its Moore-Penrose pseudo-inverse.

    ``jacobian`` maps action/parameter changes to effect changes (m x n);
    ``pseudo_inverse`` maps the other way (n x m).  The pair satisfies the
    Moore-Penrose identities to numerical precision.
    """

    jacobian: np.ndarray
    pseudo_inverse: np.ndarray
    support_size: int


class NearestIndex:
    """Append-only point set with amortized kd-tree nearest-neighbor search.

    Points newer than the last tree build are scanned exactly, so queries
    stay exact (or within the tree's (1+eps) bound when eps > 0).
    """

    def __init__(self, dim: int, eps: float = 0.0, rebuild_every: int = 512):
        self.dim = int(dim)
        self.eps = float(eps)
        self.rebuild_every = int(rebuild_every)
        self._rows = np.empty((256, dim), dtype=float)
        self._n = 0
        self._tree: cKDTree | None = None
        self._tree_n = 0

    def __len__(self) -> int:
        return self._n

    @property
    def points(self) -> np.ndarray:
        return self._rows[: self._n]

    def add(self, row: np.ndarray) -> int:
        if self._n == self._rows.shape[0]:
            grown = np.empty((2 * self._n, self.dim), dtype=float)
            grown[: self._n] = self._rows[: self._n]
            self._rows = grown
        self._rows[self._n] = row
        self._n += 1
        if self._n - self._tree_n >= self.rebuild_every:
            self._tree = cKDTree(self._rows[: self._n].copy())
            self._tree_n = self._n
        return self._n - 1

    def query(self, key: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
        """Indices and distances of the k nearest points, ascending."""
        if self._n == 0:
            raise EmptyMemoryError("nearest-neighbor query on empty memory")
        k_eff = min(k, self._n)
        tail = self._rows[self._tree_n : self._n]
        cand_idx: list[np.ndarray] = []
        cand_dist: list[np.ndarray] = []
        if self._tree is not None:
            kt = min(k_eff, self._tree_n)
            dist, idx = self._tree.query(key, k=kt, eps=self.eps)
            cand_idx.append(np.atleast_1d(idx).astype(np.intp))
            cand_dist.append(np.atleast_1d(dist))
        if tail.shape[0]:
            diff = tail - key
            d2 = np.einsum("ij,ij->i", diff, diff)
            order = np.argsort(d2, kind="stable")[:k_eff]
            cand_idx.append(order + self._tree_n)
            cand_dist.append(np.sqrt(d2[order]))
        idx = np.concatenate(cand_idx)
        dist = np.concatenate(cand_dist)
        order = np.argsort(dist, kind="stable")[:k_eff]
        return idx[order], dist[order]


def _fit_ridge(actions: np.ndarray, effects: np.ndarray, ridge: float) -> np.ndarray:
    """Least-squares fit of effects ~ J @ actions, ridge-stabilized.

    Returns J with shape (effect_dim, action_dim).  The ridge term keeps
    rank-deficient neighborhoods (e.g. collinear probes) solvable.
    """
    gram = actions.T @ actions
    gram[np.diag_indices_from(gram)] += ridge
    coef = np.linalg.solve(gram, actions.T @ effects)
    return coef.T


class EvolvingMemory:
    """(context, action, effect-change) exemplars keyed by context."""

    def __init__(
        self,
        context_dim: int,
        effect_dim: int = 2,
        neighbors: int = 12,
        support_radius: float = 0.5,
        min_support: int | None = None,
        ridge: float = 1e-6,
        eps: float = 0.0,
    ):
        self.context_dim = int(context_dim)
        self.effect_dim = int(effect_dim)
        self.neighbors = int(neighbors)
        self.support_radius = float(support_radius)
        # Below 2x the effect dimension a local fit is not trusted and the
        # caller is told to go collect data instead.
        self.min_support = int(min_support) if min_support is not None else 2 * self.effect_dim
        self.ridge = float(ridge)
        self._index = NearestIndex(context_dim, eps=eps)
        self._actions = np.empty((256, context_dim), dtype=float)
        self._effects = np.empty((256, effect_dim), dtype=float)

    def __len__(self) -> int:
        return len(self._index)

    def insert(self, context: np.ndarray, action: np.ndarray, effect: np.ndarray) -> None:
        context = np.asarray(context, dtype=float)
        action = np.asarray(action, dtype=float)
        effect = np.asarray(effect, dtype=float)
        if context.shape != (self.context_dim,) or action.shape != (self.context_dim,):
            raise ValueError("context/action dimension mismatch")
        if effect.shape != (self.effect_dim,):
            raise ValueError("effect dimension mismatch")
        i = self._index.add(context)
        if i == self._actions.shape[0]:
            self._actions = _grow(self._actions)
            self._effects = _grow(self._effects)
        self._actions[i] = action
        self._effects[i] = effect

    def nearest(self, key: np.ndarray, k: int = 1) -> list[SensorimotorEntry]:
        """The k stored exemplars whose context is closest to `key`."""
        idx, _ = self._index.query(np.asarray(key, dtype=float), k)
        ctx = self._index.points
        return [SensorimotorEntry(ctx[i].copy(), self._actions[i].copy(), self._effects[i].copy()) for i in idx]

    def local_jacobian(self, context: np.ndarray, k: int | None = None) -> LocalLinearModel | None:
        """Fit the local linear action->effect map around `context`.

        Returns None when fewer than ``min_support`` exemplars lie within
        ``support_radius``, signalling that exploration is needed first.
        """
        if len(self) == 0:
            return None
        k = self.neighbors if k is None else k
        idx, dist = self._index.query(np.asarray(context, dtype=float), k)
        keep = idx[dist <= self.support_radius]
        if keep.shape[0] < self.min_support:
            return None
        jac = _fit_ridge(self._actions[keep], self._effects[keep], self.ridge)
        return LocalLinearModel(jac, np.linalg.pinv(jac), keep.shape[0])

    def dump_csv(self, path) -> None:
        _dump_csv(
            path,
            [f"context_{i}" for i in range(self.context_dim)]
            + [f"action_{i}" for i in range(self.context_dim)]
            + [f"effect_{i}" for i in range(self.effect_dim)],
            np.hstack([self._index.points, self._actions[: len(self)], self._effects[: len(self)]]),
        )

    @classmethod
    def load_csv(cls, path, **kwargs) -> "EvolvingMemory":
        header, rows = _load_csv(path)
        context_dim = sum(name.startswith("context_") for name in header)
        effect_dim = sum(name.startswith("effect_") for name in header)
        memory = cls(context_dim, effect_dim, **kwargs)
        for row in rows:
            memory.insert(row[:context_dim], row[context_dim : 2 * context_dim], row[2 * context_dim :])
        return memory


class FixedMemory:
    """(params, effect) exemplars keyed by effect, with a secondary params key."""

    def __init__(
        self,
        param_dim: int,
        effect_dim: int = 2,
        inverse_candidates: int = 5,
        inverse_neighborhood: int = 10,
        eps: float = 0.0,
    ):
        self.param_dim = int(param_dim)
        self.effect_dim = int(effect_dim)
        self.inverse_candidates = int(inverse_candidates)
        self.inverse_neighborhood = int(inverse_neighborhood)
        self._effect_index = NearestIndex(effect_dim, eps=eps)
        self._param_index = NearestIndex(param_dim, eps=eps)

    def __len__(self) -> int:
        return len(self._effect_index)

    @property
    def params(self) -> np.ndarray:
        return self._param_index.points

    @property
    def effects(self) -> np.ndarray:
        return self._effect_index.points

    def insert(self, params: np.ndarray, effect: np.ndarray) -> None:
        params = np.asarray(params, dtype=float)
        effect = np.asarray(effect, dtype=float)
        if params.shape != (self.param_dim,):
            raise ValueError("params dimension mismatch")
        if effect.shape != (self.effect_dim,):
            raise ValueError("effect dimension mismatch")
        self._effect_index.add(effect)
        self._param_index.add(params)

    def nearest(self, key: np.ndarray, k: int = 1) -> list[SensorimotorEntry]:
        """The k stored exemplars whose effect is closest to `key`."""
        idx, _ = self._effect_index.query(np.asarray(key, dtype=float), k)
        return [
            SensorimotorEntry(self.params[i].copy(), None, self.effects[i].copy())
            for i in idx
        ]

    def nearest_effect(self, key: np.ndarray, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
        return self._effect_index.query(np.asarray(key, dtype=float), k)

    def nearest_params(self, key: np.ndarray, k: int = 1) -> tuple[np.ndarray, np.ndarray]:
        return self._param_index.query(np.asarray(key, dtype=float), k)

    def local_inverse(
        self, goal: np.ndarray, candidates: int | None = None, neighborhood: int | None = None
    ) -> tuple[np.ndarray, LocalLinearModel]:
        """Predict the parameters for `goal` from the most consistent
        neighborhood of past outcomes.

        Around each of the `candidates` nearest effects to the goal, the
        `neighborhood` nearest-in-params exemplars form a candidate set; the
        set whose params spread the least (summed per-component standard
        deviation) wins, and a centered linear effect->params fit on it
        yields the prediction.  Redundant memories keep multiple param
        families for one effect region; picking the tightest set avoids
        averaging across families.
        """
        if len(self) == 0:
            raise EmptyMemoryError("local inverse model requires at least one exemplar")
        le = self.inverse_candidates if candidates is None else candidates
        m = self.inverse_neighborhood if neighborhood is None else neighborhood
        goal = np.asarray(goal, dtype=float)
        cand_idx, _ = self._effect_index.query(goal, min(le, len(self)))
        best_set: np.ndarray | None = None
        best_spread = math.inf
        params = self.params
        for i in cand_idx:
            set_idx, _ = self._param_index.query(params[i], min(m, len(self)))
            spread = _param_spread(params[set_idx])
            if spread < best_spread:
                best_spread = spread
                best_set = set_idx
        assert best_set is not None
        chosen_params = params[best_set]
        chosen_effects = self.effects[best_set]
        param_center = chosen_params.mean(axis=0)
        effect_center = chosen_effects.mean(axis=0)
        if best_set.shape[0] < 2:
            inverse = np.zeros((self.param_dim, self.effect_dim))
        else:
            coef, *_ = np.linalg.lstsq(chosen_effects - effect_center, chosen_params - param_center, rcond=None)
            inverse = coef.T
        predicted = param_center + inverse @ (goal - effect_center)
        model = LocalLinearModel(np.linalg.pinv(inverse), inverse, best_set.shape[0])
        return predicted, model

    def dump_csv(self, path) -> None:
        _dump_csv(
            path,
            [f"params_{i}" for i in range(self.param_dim)] + [f"effect_{i}" for i in range(self.effect_dim)],
            np.hstack([self.params, self.effects]),
        )

    @classmethod
    def load_csv(cls, path, **kwargs) -> "FixedMemory":
        header, rows = _load_csv(path)
        param_dim = sum(name.startswith("params_") for name in header)
        memory = cls(param_dim, len(header) - param_dim, **kwargs)
        for row in rows:
            memory.insert(row[:param_dim], row[param_dim:])
        return memory


def _param_spread(params: np.ndarray) -> float:
    """Summed per-component sample standard deviation; 0 for singletons."""
    if params.shape[0] < 2:
        return 0.0
    return float(np.std(params, axis=0, ddof=1).sum())


def _grow(array: np.ndarray) -> np.ndarray:
    grown = np.empty((2 * array.shape[0], array.shape[1]), dtype=float)
    grown[: array.shape[0]] = array
    return grown


def _dump_csv(path, header: list[str], rows: np.ndarray) -> None:
    with open(path, "w", newline="") as f:
        writer = csv.writer(f, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([repr(float(v)) for v in row])


def _load_csv(path) -> tuple[list[str], np.ndarray]:
    with open(path, newline="") as f:
        reader = csv.reader(f)
        header = next(reader)
        rows = np.array([[float(v) for v in row] for row in reader], dtype=float)
    if rows.size == 0:
        rows = rows.reshape(0, len(header))
    return header, rows
