"""scikit-learn style front end for the martingale decomposition pipeline."""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import chain as chain_mod
from . import decomposition as decomp
from .resolvent import estimate_growth, partial_sums
from .simulate import path_functionals, sample_path


class MartingaleApproximator(BaseEstimator, TransformerMixin):
    """Fits the martingale decomposition of an additive functional.

    fit(Q, g) validates the chain, centers the observable, solves for the
    martingale kernel along the shrinking-epsilon schedule, and estimates the
    diffusion matrix. transform(paths) decomposes integer state paths into
    cumulative (S, M, R) arrays.

    Parameters
    ----------
    p_exponent : declared moment exponent of the observable (p > 2).
    kernel_tol : L2 stopping tolerance of the epsilon schedule.
    k_max : maximum number of epsilon-halving steps.
    n_growth : partial-sum table depth for the growth-exponent fit.
    """

    def __init__(self, p_exponent=4.0, kernel_tol=1e-9, k_max=60, n_growth=256):
        self.p_exponent = p_exponent
        self.kernel_tol = kernel_tol
        self.k_max = k_max
        self.n_growth = n_growth

    def fit(self, Q, g):
        Q = np.asarray(Q, dtype=float)
        self.chain_ = chain_mod.validate_chain(Q)
        self.observable_ = chain_mod.center_observable(np.asarray(g, dtype=float), self.chain_, self.p_exponent)
        self.pi_ = self.chain_.pi
        self.h_ = decomp.poisson_solve(self.chain_, self.observable_)
        self.kernel_ = decomp.limit_kernel(self.chain_, self.observable_, k_max=self.k_max, tol=self.kernel_tol)
        diff = decomp.diffusion_matrix(self.chain_, self.kernel_)
        self.diffusion_ = diff.D
        self.Lambda_ = diff.Lambda
        self.rank_ = diff.rank_m
        self.partial_sums_ = partial_sums(self.chain_, self.observable_, self.n_growth)
        self.growth_ = estimate_growth(self.partial_sums_, (4, self.n_growth))
        self.n_features_in_ = Q.shape[0]
        return self

    def transform(self, X):
        """Decompose integer state paths into stacked (S, M, R) columns.

        X is (n_paths, length + 1) of state indices; returns
        (n_paths, length + 1, 3 * d).
        """
        check_is_fitted(self, "kernel_")
        X = np.atleast_2d(np.asarray(X, dtype=np.int64))
        out = []
        for row in X:
            tr = path_functionals(row, self.observable_, self.kernel_, self.partial_sums_)
            out.append(np.concatenate([tr.S, tr.M, tr.R], axis=1))
        return np.stack(out)

    def sample(self, start, n, seed, path_id=0):
        """Draw one path from the fitted chain; convenience wrapper."""
        check_is_fitted(self, "chain_")
        return sample_path(self.chain_, start, n, seed, path_id)
