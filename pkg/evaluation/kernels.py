"""RBF-kernel support vector classification solved with SMO.

The binary solver follows Platt's sequential minimal optimization: an outer
loop alternating full and non-bound sweeps, a second-choice heuristic that
maximizes |E1 - E2|, and an error cache updated after every joint step.
Multi-class problems are handled one-vs-rest.
"""

import logging

import numpy as np

from representations.exceptions import ConfigError

logger = logging.getLogger(__name__)

EPS = 1e-12


def rbf_gamma(X):
    """1 / (n_features * variance of X)."""
    X = np.asarray(X, dtype=np.float64)
    variance = float(X.var())
    return 1.0 / (X.shape[1] * variance) if variance > 0 else 1.0


def rbf_kernel(A, B, gamma):
    A = np.asarray(A, dtype=np.float64)
    B = np.asarray(B, dtype=np.float64)
    sq = (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * A @ B.T
    return np.exp(-gamma * np.maximum(sq, 0.0))


class SMOSolver:
    """Dual solver for a binary soft-margin SVM over a precomputed kernel matrix."""

    def __init__(self, kernel, y, C, tol=1e-3, max_passes=10_000, rng=None):
        self.K = kernel
        self.y = np.asarray(y, dtype=np.float64)
        self.C = float(C)
        self.tol = tol
        self.max_passes = max_passes
        self.rng = rng or np.random.default_rng(0)
        self.n = len(self.y)
        self.alphas = np.zeros(self.n)
        self.b = 0.0
        # f(x_i) - y_i with f = sum_j alpha_j y_j K_ij + b
        self.errors = -self.y.copy()

    def take_step(self, i1, i2):
        if i1 == i2:
            return False
        a1, a2 = self.alphas[i1], self.alphas[i2]
        y1, y2 = self.y[i1], self.y[i2]
        e1, e2 = self.errors[i1], self.errors[i2]
        if y1 != y2:
            low, high = max(0.0, a2 - a1), min(self.C, self.C + a2 - a1)
        else:
            low, high = max(0.0, a1 + a2 - self.C), min(self.C, a1 + a2)
        if high - low < EPS:
            return False
        k11, k12, k22 = self.K[i1, i1], self.K[i1, i2], self.K[i2, i2]
        eta = k11 + k22 - 2.0 * k12
        if eta <= EPS:
            return False
        a2_new = float(np.clip(a2 + y2 * (e1 - e2) / eta, low, high))
        if abs(a2_new - a2) < EPS * (a2_new + a2 + EPS):
            return False
        a1_new = a1 + y1 * y2 * (a2 - a2_new)

        d1, d2 = y1 * (a1_new - a1), y2 * (a2_new - a2)
        b1 = self.b - e1 - d1 * k11 - d2 * k12
        b2 = self.b - e2 - d1 * k12 - d2 * k22
        if 0.0 < a1_new < self.C:
            b_new = b1
        elif 0.0 < a2_new < self.C:
            b_new = b2
        else:
            b_new = 0.5 * (b1 + b2)

        self.errors += d1 * self.K[i1] + d2 * self.K[i2] + (b_new - self.b)
        self.alphas[i1], self.alphas[i2] = a1_new, a2_new
        self.b = b_new
        return True

    def _non_bound(self):
        return np.flatnonzero((self.alphas > 0.0) & (self.alphas < self.C))

    def examine_example(self, i2):
        r2 = self.errors[i2] * self.y[i2]
        a2 = self.alphas[i2]
        if not ((r2 < -self.tol and a2 < self.C) or (r2 > self.tol and a2 > 0.0)):
            return 0
        non_bound = self._non_bound()
        if len(non_bound) > 1:
            i1 = non_bound[np.argmax(np.abs(self.errors[non_bound] - self.errors[i2]))]
            if self.take_step(i1, i2):
                return 1
        for candidates in (non_bound, np.arange(self.n)):
            if len(candidates) == 0:
                continue
            for i1 in np.roll(candidates, int(self.rng.integers(len(candidates)))):
                if self.take_step(i1, i2):
                    return 1
        return 0

    def solve(self):
        changed, examine_all, passes = 0, True, 0
        while (changed > 0 or examine_all) and passes < self.max_passes:
            indices = np.arange(self.n) if examine_all else self._non_bound()
            changed = sum(self.examine_example(i) for i in indices)
            if examine_all:
                examine_all = False
            elif changed == 0:
                examine_all = True
            passes += 1
        if passes >= self.max_passes:
            logger.warning("SMO stopped at the pass cap (%d) before converging", self.max_passes)
        return self.alphas, self.b


class KernelClassifier:
    """One-vs-rest RBF SVM. Binary problems train a single machine."""

    def __init__(self, C=1.0, gamma=None, tol=1e-3, max_passes=10_000, seed=0):
        if C <= 0:
            raise ConfigError(f"penalty C must be positive, got {C}")
        self.C = float(C)
        self.gamma = gamma
        self.tol = tol
        self.max_passes = max_passes
        self.seed = seed
        self.classes = None
        self.support_vectors = None
        self.dual_coef = None
        self.intercepts = None

    def fit(self, X, y):
        X = np.asarray(X, dtype=np.float64)
        y = np.asarray(y)
        self.classes = np.unique(y)
        if len(self.classes) < 2:
            logger.warning("single-class training set; classifier will predict %r", self.classes.tolist())
            self.support_vectors = X[:0]
            self.dual_coef = np.zeros((0, 0))
            self.intercepts = np.zeros(0)
            return self
        if self.gamma is None:
            self.gamma = rbf_gamma(X)
        K = rbf_kernel(X, X, self.gamma)
        targets = [self.classes[1]] if len(self.classes) == 2 else list(self.classes)
        rng = np.random.default_rng(self.seed)
        coefs, intercepts = [], []
        for positive in targets:
            signs = np.where(y == positive, 1.0, -1.0)
            alphas, b = SMOSolver(K, signs, self.C, self.tol, self.max_passes, rng).solve()
            coefs.append(alphas * signs)
            intercepts.append(b)
        coefs = np.array(coefs)
        keep = np.any(coefs != 0.0, axis=0)
        self.support_vectors = X[keep]
        self.dual_coef = coefs[:, keep]
        self.intercepts = np.array(intercepts)
        return self

    def decision_function(self, X):
        X = np.asarray(X, dtype=np.float64)
        if len(self.support_vectors) == 0:
            return np.tile(self.intercepts, (X.shape[0], 1))
        K = rbf_kernel(X, self.support_vectors, self.gamma)
        return K @ self.dual_coef.T + self.intercepts

    def predict(self, X):
        X = np.asarray(X, dtype=np.float64)
        if len(self.classes) < 2:
            return np.full(X.shape[0], self.classes[0])
        scores = self.decision_function(X)
        if len(self.classes) == 2:
            return np.where(scores[:, 0] > 0.0, self.classes[1], self.classes[0])
        return self.classes[np.argmax(scores, axis=1)]

    def to_dict(self):
        return {
            "C": self.C,
            "gamma": self.gamma,
            "classes": self.classes.tolist(),
            "support_vectors": self.support_vectors.tolist(),
            "dual_coef": self.dual_coef.tolist(),
            "intercepts": self.intercepts.tolist(),
        }

    @classmethod
    def from_dict(cls, document):
        model = cls(C=document["C"], gamma=document["gamma"])
        model.classes = np.asarray(document["classes"])
        model.intercepts = np.asarray(document["intercepts"], dtype=np.float64)
        n_features = len(document["support_vectors"][0]) if document["support_vectors"] else 0
        model.support_vectors = np.asarray(document["support_vectors"], dtype=np.float64).reshape(-1, n_features)
        model.dual_coef = np.asarray(document["dual_coef"], dtype=np.float64).reshape(
            len(model.intercepts), len(model.support_vectors)
        )
        return model
