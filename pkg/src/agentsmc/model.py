"""Shared model containers: networks, parameters, per-agent rates, JSON IO."""
import json
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.special import expit, logit


@dataclass(frozen=True)
class Network:
    """Undirected contact network on agents ``0..N-1``.

    The complete graph is held implicitly (``full=True``). By default an
    agent is not its own neighbour, so D(n) = N - 1; ``include_self=True``
    makes every agent its own neighbour with D(n) = N.
    """

    N: int
    full: bool = True
    include_self: bool = False
    adjacency: sparse.csr_matrix | None = None

    @classmethod
    def complete(cls, N, include_self=False):
        if N < 1 or (N < 2 and not include_self):
            raise ValueError("complete graph needs at least two agents")
        return cls(N=N, full=True, include_self=include_self)

    @classmethod
    def from_edges(cls, N, edges):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        if edges.size and (edges.min() < 0 or edges.max() >= N):
            raise ValueError("edge endpoint out of range")
        if np.any(edges[:, 0] == edges[:, 1]):
            raise ValueError("self-loops are not allowed")
        a = sparse.coo_matrix(
            (np.ones(len(edges)), (edges[:, 0], edges[:, 1])), shape=(N, N)
        )
        a = ((a + a.T) > 0).astype(float).tocsr()
        if np.any(np.diff(a.indptr) == 0):
            raise ValueError("every agent needs at least one neighbour")
        return cls(N=N, full=False, adjacency=a)

    @property
    def degree(self):
        if self.full:
            return np.full(self.N, self.N if self.include_self else self.N - 1, float)
        return np.diff(self.adjacency.indptr).astype(float)

    def neighbours(self, n):
        if self.full:
            idx = np.arange(self.N)
            return idx if self.include_self else idx[idx != n]
        a = self.adjacency
        return a.indices[a.indptr[n]:a.indptr[n + 1]]

    def infected_neighbours(self, infected):
        """Number of infected neighbours per agent; ``infected`` is (..., N)."""
        infected = np.asarray(infected, dtype=float)
        if self.full:
            tot = infected.sum(axis=-1, keepdims=True)
            return tot if self.include_self else tot - infected
        flat = infected.reshape(-1, self.N)
        out = (self.adjacency @ flat.T).T
        return np.asarray(out).reshape(infected.shape)

    def infected_fraction(self, infected):
        return self.infected_neighbours(infected) / self.degree

    def to_json(self):
        if self.full:
            doc = {"type": "full"}
            if self.include_self:
                doc["include_self"] = True
            return doc
        a = sparse.triu(self.adjacency, k=1).tocoo()
        return {"type": "edges", "edges": [[int(i), int(j)] for i, j in zip(a.row, a.col)]}

    @classmethod
    def from_json(cls, N, doc):
        kind = doc.get("type")
        if kind == "full":
            return cls.complete(N, include_self=bool(doc.get("include_self", False)))
        if kind == "edges":
            return cls.from_edges(N, doc["edges"])
        raise ValueError(f"unknown network type {kind!r}")


@dataclass(frozen=True)
class Theta:
    """Regression coefficients for the three rates plus reporting rate."""

    beta0: np.ndarray
    beta_lambda: np.ndarray
    beta_gamma: np.ndarray
    rho: float

    def __post_init__(self):
        for name in ("beta0", "beta_lambda", "beta_gamma"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float).ravel())
        if not 0.0 < self.rho <= 1.0:
            raise ValueError("rho must lie in (0, 1]")

    @property
    def d(self):
        return self.beta0.size

    def names(self):
        d = self.d
        return ([f"beta0[{k}]" for k in range(d)] + [f"beta_lambda[{k}]" for k in range(d)]
                + [f"beta_gamma[{k}]" for k in range(d)] + ["rho"])

    def to_natural(self):
        return np.concatenate([self.beta0, self.beta_lambda, self.beta_gamma, [self.rho]])

    def to_unconstrained(self):
        """Coefficients followed by logit(rho)."""
        return np.concatenate([self.beta0, self.beta_lambda, self.beta_gamma,
                               [logit(min(self.rho, 1.0 - 1e-12))]])

    @classmethod
    def from_unconstrained(cls, v, d):
        v = np.asarray(v, dtype=float)
        return cls(v[:d], v[d:2 * d], v[2 * d:3 * d], float(expit(v[3 * d])))

    def to_json(self):
        return {"beta0": self.beta0.tolist(), "beta_lambda": self.beta_lambda.tolist(),
                "beta_gamma": self.beta_gamma.tolist(), "rho": self.rho}

    @classmethod
    def from_json(cls, doc):
        return cls(doc["beta0"], doc["beta_lambda"], doc["beta_gamma"], float(doc["rho"]))


@dataclass(frozen=True)
class AgentRates:
    """Per-agent initial, infection and recovery probabilities.

    ``clusters`` optionally labels each agent with a cluster in ``0..K-1``;
    ``lam_bar`` and ``gam_bar`` then hold per-cluster means (length K),
    otherwise population means (length 1).
    """

    alpha0: np.ndarray
    lam: np.ndarray
    gam: np.ndarray
    clusters: np.ndarray | None = None
    lam_bar: np.ndarray = field(default=None)
    gam_bar: np.ndarray = field(default=None)

    def __post_init__(self):
        labels = np.zeros(self.lam.size, np.int64) if self.clusters is None else self.clusters
        K = int(labels.max()) + 1
        cnt = np.bincount(labels, minlength=K)
        if np.any(cnt == 0):
            raise ValueError("every cluster must contain at least one agent")
        object.__setattr__(self, "lam_bar", np.bincount(labels, self.lam, K) / cnt)
        object.__setattr__(self, "gam_bar", np.bincount(labels, self.gam, K) / cnt)

    @property
    def N(self):
        return self.lam.size

    @property
    def labels(self):
        return np.zeros(self.N, np.int64) if self.clusters is None else self.clusters

    @property
    def K(self):
        return self.lam_bar.size

    def with_clusters(self, clusters):
        return AgentRates(self.alpha0, self.lam, self.gam,
                          None if clusters is None else np.asarray(clusters, np.int64))


def agent_rates(theta, W, clusters=None):
    """Logistic-regression rates from covariates ``W`` of shape (N, d)."""
    W = np.asarray(W, dtype=float)
    if W.ndim != 2 or W.shape[1] != theta.d:
        raise ValueError("covariates must have shape (N, d) matching theta")
    return AgentRates(expit(W @ theta.beta0), expit(W @ theta.beta_lambda),
                      expit(W @ theta.beta_gamma),
                      None if clusters is None else np.asarray(clusters, np.int64))


def cluster_by_rates(rates, K):
    """Group agents into K clusters with similar (lambda, gamma).

    Deterministic Lloyd iterations on the two rates, started from quantiles
    of lambda. Empty clusters are dropped and labels compacted.
    """
    pts = np.column_stack([rates.lam, rates.gam])
    order = np.argsort(pts[:, 0], kind="stable")
    labels = np.empty(rates.N, np.int64)
    for k, chunk in enumerate(np.array_split(order, K)):
        labels[chunk] = k
    for _ in range(100):
        cent = np.array([pts[labels == k].mean(axis=0) for k in np.unique(labels)])
        new = np.argmin(((pts[:, None, :] - cent[None]) ** 2).sum(-1), axis=1)
        _, new = np.unique(new, return_inverse=True)
        if np.array_equal(new, labels):
            break
        labels = new
    return labels


@dataclass(frozen=True)
class ModelSpec:
    """Everything needed to run a filter: covariates, network, parameters."""

    W: np.ndarray
    network: Network
    theta: Theta
    kind: str = "sis"

    @property
    def N(self):
        return self.network.N

    @property
    def d(self):
        return self.W.shape[1]

    def rates(self, theta=None, clusters=None):
        return agent_rates(self.theta if theta is None else theta, self.W, clusters)

    def with_theta(self, theta):
        return ModelSpec(self.W, self.network, theta, self.kind)

    def to_json(self):
        return {"model": self.kind, "N": self.N, "d": self.d,
                "covariates": self.W.ravel().tolist(),
                "network": self.network.to_json(), "theta": self.theta.to_json()}

    @classmethod
    def from_json(cls, doc):
        N, d = int(doc["N"]), int(doc["d"])
        W = np.asarray(doc["covariates"], dtype=float).reshape(N, d)
        kind = doc.get("model", "sis")
        if kind not in ("sis", "sir"):
            raise ValueError(f"unknown model kind {kind!r}")
        return cls(W, Network.from_json(N, doc["network"]), Theta.from_json(doc["theta"]), kind)


def load_model(path):
    with open(path) as fh:
        return ModelSpec.from_json(json.load(fh))


def save_model(model, path):
    with open(path, "w") as fh:
        json.dump(model.to_json(), fh, indent=1)


def load_data(path):
    with open(path) as fh:
        doc = json.load(fh)
    y = np.asarray(doc["y"], dtype=np.int64)
    x = doc.get("x_true")
    return y, (None if x is None else np.asarray(x, dtype=np.int8))


def save_data(path, y, x_true=None):
    doc = {"y": [int(v) for v in y]}
    if x_true is not None:
        doc["x_true"] = np.asarray(x_true).astype(int).tolist()
    with open(path, "w") as fh:
        json.dump(doc, fh)


def reference_setup(rng, N=100, d=2):
    """Complete graph, intercept plus standard normal covariate, and the
    reference parameters: beta0 = (-log(N-1), 0), beta_lambda = (-1, 2),
    beta_gamma = (-1, -1), rho = 0.8."""
    W = np.column_stack([np.ones(N), rng.standard_normal((N, d - 1))])
    theta = Theta([-np.log(N - 1)] + [0.0] * (d - 1), [-1.0, 2.0][:d] + [0.0] * max(d - 2, 0),
                  [-1.0, -1.0][:d] + [0.0] * max(d - 2, 0), 0.8)
    return ModelSpec(W, Network.complete(N), theta)
