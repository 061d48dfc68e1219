"""
Nearest neighbor retrieval over codebook descriptors. Exact mode is a chunked brute-force scan,
approximate mode is a forest of random projection trees (annoy) whose candidates are re-ranked
with exact distances.
"""
from dataclasses import dataclass
from threading import Lock

import numpy as np
from annoy import AnnoyIndex

from src.utils.exceptions import ParameterError
from src.utils.logging import get_default_logger

logger = get_default_logger(__name__)

# upper bound of the (queries x entries) distance block of the brute-force scan
_BLOCK_VALUES = 4_000_000
# extra candidates kept before the exact re-ranking of the brute-force scan
_SLACK = 8


@dataclass(frozen=True)
class IndexParams:
    """
    Parameters of the retrieval.
    :param exact: use the brute-force scan instead of the tree forest
    :param n_trees: number of random projection trees
    :param search_k: number of tree nodes inspected per query, bounds the query time
    :param candidates_factor: the forest returns candidates_factor * k candidates for re-ranking
    :param seed: seed of the tree construction
    """
    exact: bool = False
    n_trees: int = 16
    search_k: int = 2000
    candidates_factor: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1 or self.search_k < 1 or self.candidates_factor < 1:
            raise ParameterError(f"Invalid index parameters {self}", "IndexParams")


class DescriptorIndex:
    """
    k-NN index over a fixed (N, F) descriptor matrix. The tree forest is built on the first
    approximate query.
    :param descriptors: (N, F) descriptors
    :param params: retrieval parameters
    """

    def __init__(self, descriptors: np.ndarray, params: IndexParams = None):
        self.params = params or IndexParams()
        self.descriptors = np.asarray(descriptors, dtype=np.float64)
        self.squared_norms = np.einsum("ij,ij->i", self.descriptors, self.descriptors)
        self._forest = None
        self._forest_lock = Lock()

    def __len__(self):
        return len(self.descriptors)

    @property
    def dimension(self) -> int:
        """descriptor dimension F"""
        return self.descriptors.shape[1]

    def _build_forest(self) -> AnnoyIndex:
        forest = AnnoyIndex(self.dimension, "euclidean")
        forest.set_seed(self.params.seed)
        for i, descriptor in enumerate(self.descriptors):
            forest.add_item(i, descriptor)
        forest.build(self.params.n_trees, n_jobs=1)
        logger.info(f"Built {self.params.n_trees} projection trees over {len(self)} descriptors")
        return forest

    def query(self, queries: np.ndarray, k: int,
              exact: bool = None) -> tuple[np.ndarray, np.ndarray]:
        """
        k nearest neighbors of every query.
        :param queries: (Q, F) descriptors
        :param k: number of neighbors
        :param exact: overrides params.exact
        :return: (Q, min(k, N)) entry indices and Euclidean distances, ascending per row with
            ties ordered by entry index
        """
        if k < 1:
            raise ParameterError(f"k has to be >= 1, got {k}", "DescriptorIndex")
        queries = np.atleast_2d(np.asarray(queries, dtype=np.float64))
        if queries.shape[1] != self.dimension:
            raise ParameterError(f"Query dimension {queries.shape[1]} does not match the index "
                                 f"dimension {self.dimension}", "DescriptorIndex")
        k = min(k, len(self))
        if k == 0 or len(queries) == 0:
            return np.zeros((len(queries), k), dtype=np.int64), np.zeros((len(queries), k))

        exact = self.params.exact if exact is None else exact
        if exact or k == len(self):
            candidates = self._scan_candidates(queries, k)
        else:
            candidates = self._forest_candidates(queries, k)
        return self._rerank(queries, candidates, k)

    def _scan_candidates(self, queries: np.ndarray, k: int) -> list[np.ndarray]:
        keep = min(len(self), k + _SLACK)
        chunk = max(1, _BLOCK_VALUES // len(self))
        candidates = []
        for start in range(0, len(queries), chunk):
            block = queries[start:start + chunk]
            squared = (np.einsum("ij,ij->i", block, block)[:, None]
                       - 2.0 * block @ self.descriptors.T + self.squared_norms[None, :])
            if keep < len(self):
                nearest = np.argpartition(squared, keep - 1, axis=1)[:, :keep]
            else:
                nearest = np.broadcast_to(np.arange(len(self)), squared.shape)
            candidates.extend(nearest)
        return candidates

    def _forest_candidates(self, queries: np.ndarray, k: int) -> list[np.ndarray]:
        with self._forest_lock:
            if self._forest is None:
                self._forest = self._build_forest()
        count = min(len(self), k * self.params.candidates_factor)
        return [np.asarray(self._forest.get_nns_by_vector(query, count,
                                                          search_k=self.params.search_k),
                           dtype=np.int64)
                for query in queries]

    def _rerank(self, queries: np.ndarray, candidates: list[np.ndarray],
                k: int) -> tuple[np.ndarray, np.ndarray]:
        indices = np.full((len(queries), k), -1, dtype=np.int64)
        distances = np.full((len(queries), k), np.inf)
        for row, (query, candidate) in enumerate(zip(queries, candidates)):
            candidate = np.unique(candidate)
            exact = np.linalg.norm(self.descriptors[candidate] - query, axis=1)
            order = np.lexsort((candidate, exact))[:k]
            indices[row, :len(order)] = candidate[order]
            distances[row, :len(order)] = exact[order]
        return indices, distances
