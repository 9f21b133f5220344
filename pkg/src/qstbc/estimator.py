"""scikit-learn style front end: the ML detector as a classifier."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import codebook as cbmod
from ._validation import check_indices, check_received
from .codec import batch_branches, batch_metrics, codeword_matrices
from .config import CodeConfig
from .stab import build_code


class QSTBCDetector(ClassifierMixin, TransformerMixin, BaseEstimator):
    """Noncoherent ML detector for one ``(M, N, T)`` code and codebook.

    Samples are received blocks ``Y = H X + noise`` of shape ``(N, T)``
    (or column-vectorized, ``N*T`` long); classes are codebook indices.
    ``fit`` needs no training data: it builds the code and the codebook.

    Parameters
    ----------
    M, N, T : int
        Code configuration; ``d = T // M``.
    codebook : Codebook, str, path or None
        Symbol codebook, a path to a codebook file, or ``None`` for the
        built-in packing of ``K`` lines (generated with ``packing_seed`` if
        none ships).
    K : int
        Codebook size when ``codebook`` is ``None``.
    packing_seed : int

    Attributes
    ----------
    config_ : CodeConfig
    code_ : StabilizerCode
    codebook_ : Codebook
    codewords_ : ndarray, shape (K, M, T)
    classes_ : ndarray, shape (K,)
    """

    def __init__(self, M=2, N=2, T=4, codebook=None, K=4, packing_seed=0):
        self.M = M
        self.N = N
        self.T = T
        self.codebook = codebook
        self.K = K
        self.packing_seed = packing_seed

    def fit(self, X=None, y=None):
        M, N, T = self.M, self.N, self.T
        if T % M:
            # let CodeConfig produce the diagnostic
            CodeConfig(M, N, T, 0)
        self.config_ = CodeConfig(M, N, T, T // M)
        self.code_ = build_code(self.config_)
        self.codebook_ = self._resolve_codebook()
        if self.codebook_.d != self.config_.d:
            raise ValueError(f"codebook dimension {self.codebook_.d} != d={self.config_.d}")
        self.codewords_ = codeword_matrices(self.code_, self.codebook_)
        self.classes_ = np.arange(self.codebook_.K)
        self.n_features_in_ = N * T
        return self

    def _resolve_codebook(self):
        cb = self.codebook
        if isinstance(cb, cbmod.Codebook):
            return cb
        if cb is not None:
            return cbmod.load(cb)
        d = self.T // self.M
        try:
            return cbmod.builtin(d, self.K)
        except KeyError:
            return cbmod.generate_packing(d, self.K, seed=self.packing_seed)

    def encode(self, indices) -> np.ndarray:
        """Transmit matrices ``(n, M, T)`` for codebook indices."""
        check_is_fitted(self)
        return self.codewords_[check_indices(indices, self.codebook_.K)]

    def branches(self, Y) -> np.ndarray:
        """Recovered branch vectors, shape ``(n, M*N, d)``."""
        check_is_fitted(self)
        return batch_branches(check_received(Y, self.config_), self.config_)

    def transform(self, Y) -> np.ndarray:
        """Branch vectors flattened to ``(n, M*N*d)`` features."""
        P = self.branches(Y)
        return P.reshape(P.shape[0], -1)

    def decision_function(self, Y) -> np.ndarray:
        """Quadratic-form scores ``s_k^* G s_k``, shape ``(n, K)``."""
        return batch_metrics(self.branches(Y), self.codebook_)

    def predict(self, Y) -> np.ndarray:
        return np.argmax(self.decision_function(Y), axis=1)

    def predict_bits(self, Y) -> np.ndarray:
        """Decoded bit labels, shape ``(n, log2 K)``."""
        return self.codebook_.bit_table[self.predict(Y)]
