"""Model boundary value problems and their biorthogonal eigensystems.

Two presets are supported:

``Oh1D``
    ``-i d/dx`` on (0, 1) with ``h y(0) = y(1)``.  Eigenvalues
    ``-i ln h + 2 pi xi``, eigenfunctions ``u_xi(x) = h^x e^{2 pi i x xi}`` and
    biorthogonal partners ``v_xi(x) = h^{-x} e^{2 pi i x xi}``.

``OhND``
    The Laplacian on (0, 1)^d with ``h_j f|_{x_j=0} = f|_{x_j=1}``.  The
    eigenfunctions are tensor products of the 1D ones and the eigenvalue of
    ``u_xi`` is ``sum_j (ln h_j + 2 pi i xi_j)^2``.

The normalisation is the unnormalised pair above with ``(u_xi, v_eta) = delta``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import itertools

import numpy as np

KINDS = ("Oh1D", "OhND")


@dataclass(frozen=True)
class ModelProblem:
    """Which boundary value problem generates the calculus.

    Parameters
    ----------
    kind : {"Oh1D", "OhND"}
    h : tuple of float
        Boundary weights, one per axis, all positive.
    """

    kind: str
    h: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown problem kind {self.kind!r}")
        h = tuple(float(v) for v in np.atleast_1d(self.h))
        object.__setattr__(self, "h", h)
        if not h or any(not np.isfinite(v) or v <= 0 for v in h):
            raise ValueError(f"boundary weights must be positive, got {h}")
        if self.kind == "Oh1D" and len(h) != 1:
            raise ValueError("Oh1D is one-dimensional")
        if not 1 <= len(h) <= 3:
            raise ValueError("dimension must be 1, 2 or 3")

    @classmethod
    def oh1d(cls, h=1.0):
        return cls("Oh1D", (h,))

    @classmethod
    def ohnd(cls, h):
        return cls("OhND", tuple(np.atleast_1d(h)))

    @property
    def d(self) -> int:
        return len(self.h)

    @property
    def m(self) -> int:
        """Order of the generating differential operator."""
        return 1 if self.kind == "Oh1D" else 2

    @property
    def log_h(self) -> np.ndarray:
        return np.log(np.asarray(self.h))

    @property
    def self_adjoint(self) -> bool:
        return all(v == 1.0 for v in self.h)

    @property
    def s0(self) -> int:
        return 2 if self.d == 1 else self.d + 1

    @property
    def mu0(self) -> float:
        return 0.0

    @property
    def u_sup(self) -> float:
        """``sup_x |u_xi(x)|``, the same for every xi."""
        return float(np.prod([max(1.0, v) for v in self.h]))

    @property
    def v_sup(self) -> float:
        return float(np.prod([max(1.0, 1.0 / v) for v in self.h]))

    def to_config(self) -> dict:
        return {"kind": self.kind, "h": list(self.h), "d": self.d}

    @classmethod
    def from_config(cls, record: dict) -> "ModelProblem":
        h = record["h"]
        if isinstance(h, str):
            h = [float(s) for s in h.replace(",", " ").split()]
        p = cls(record["kind"], tuple(np.atleast_1d(h)))
        if "d" in record and int(record["d"]) != p.d:
            if len(p.h) == 1 and p.kind == "OhND":
                return cls("OhND", p.h * int(record["d"]))
            raise ValueError(f"d={record['d']} does not match h of length {p.d}")
        return p


@dataclass(frozen=True)
class EigenData:
    lam: complex
    weight: float
    wz_lower: float
    mu0: float
    s0: float


def _as_index(p: ModelProblem, xi) -> np.ndarray:
    xi = np.asarray(xi)
    if xi.ndim == 0 or xi.shape[-1] != p.d:
        xi = xi[..., None]
    if xi.shape[-1] != p.d:
        raise ValueError(f"index of length {xi.shape[-1]} for a {p.d}-dimensional problem")
    return xi


def _unwrap(a):
    a = np.asarray(a)
    return a[()] if a.ndim == 0 else a


def eigenvalue(p: ModelProblem, xi):
    """Eigenvalue(s) ``lambda_xi``; ``xi`` may be an array of indices (..., d)."""
    xi = _as_index(p, xi)
    if p.kind == "Oh1D":
        lam = -1j * p.log_h[0] + 2 * np.pi * xi[..., 0]
    else:
        lam = np.sum((p.log_h + 2j * np.pi * xi) ** 2, axis=-1)
    return _unwrap(lam)


def angle_weight(p: ModelProblem, xi):
    """``<xi> = (1 + |lambda_xi|^2)^{1/(2m)}``."""
    lam = eigenvalue(p, xi)
    return (1.0 + np.abs(lam) ** 2) ** (1.0 / (2 * p.m))


def _points(p: ModelProblem, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.ndim == 0 or x.shape[-1] != p.d:
        x = x[..., None]
    return x


def eval_u(p: ModelProblem, xi, x):
    """``u_xi(x) = prod_j h_j^{x_j} e^{2 pi i x_j xi_j}``, broadcasting xi against x."""
    xi = _as_index(p, xi)
    x = _points(p, x)
    out = np.exp(np.sum(x * p.log_h + 2j * np.pi * x * xi, axis=-1))
    return _unwrap(out)


def eval_v(p: ModelProblem, xi, x):
    xi = _as_index(p, xi)
    x = _points(p, x)
    out = np.exp(np.sum(-x * p.log_h + 2j * np.pi * x * xi, axis=-1))
    return _unwrap(out)


def wz_bound(p: ModelProblem) -> float:
    """``inf_{xi, x} |u_xi(x)| = prod_j min(1, h_j)``."""
    return float(np.prod([min(1.0, v) for v in p.h]))


def eigendata(p: ModelProblem, xi) -> EigenData:
    return EigenData(
        lam=complex(eigenvalue(p, xi)),
        weight=float(angle_weight(p, xi)),
        wz_lower=wz_bound(p),
        mu0=p.mu0,
        s0=p.s0,
    )


class Window:
    """All indices with ``|xi|_inf <= N``, ordered by ``|lambda_xi|`` then lexicographically.

    ``indices`` has shape (W, d).  ``cube_pos`` maps each entry into a dense
    ``(2N+1)^d`` array (offset N per axis), which is where shift-type
    operations are done.
    """

    def __init__(self, p: ModelProblem, N: int):
        if N < 0:
            raise ValueError("truncation must be nonnegative")
        self.problem = p
        self.N = int(N)
        self.indices = _window_indices(p, self.N)
        self.size = len(self.indices)
        self.cube_shape = (2 * self.N + 1,) * p.d
        self.cube_pos = np.ravel_multi_index(tuple((self.indices + self.N).T), self.cube_shape)
        self.lam = eigenvalue(p, self.indices)
        self.weight = angle_weight(p, self.indices)

    def __len__(self):
        return self.size

    def __eq__(self, other):
        return isinstance(other, Window) and other.problem == self.problem and other.N == self.N

    def __hash__(self):
        return hash((self.problem, self.N))

    def position(self, xi) -> int:
        xi = np.atleast_1d(np.asarray(xi, dtype=int))
        if np.any(np.abs(xi) > self.N):
            raise KeyError(f"{tuple(xi)} outside window N={self.N}")
        flat = np.ravel_multi_index(tuple(xi + self.N), self.cube_shape)
        return int(self._inverse[flat])

    @property
    def _inverse(self):
        inv = getattr(self, "_inv", None)
        if inv is None:
            inv = np.empty(self.size, dtype=int)
            inv[self.cube_pos] = np.arange(self.size)
            self._inv = inv
        return inv

    def to_cube(self, values, axis=-1):
        """Scatter window-ordered values (along ``axis``) into the dense cube."""
        values = np.moveaxis(np.asarray(values), axis, -1)
        cube = np.zeros(values.shape[:-1] + (int(np.prod(self.cube_shape)),), dtype=values.dtype)
        cube[..., self.cube_pos] = values
        return cube.reshape(values.shape[:-1] + self.cube_shape)

    def from_cube(self, cube):
        """Inverse of :meth:`to_cube` (window axis comes out last)."""
        lead = cube.shape[: cube.ndim - self.problem.d]
        return cube.reshape(lead + (-1,))[..., self.cube_pos]

    def restrict(self, values, sub: "Window", axis=-1):
        """Take the entries of a smaller window ``sub`` out of window-ordered values."""
        if sub.N > self.N:
            raise ValueError("cannot restrict to a larger window")
        values = np.moveaxis(np.asarray(values), axis, -1)
        cube = self.to_cube(values)
        sl = (Ellipsis,) + (slice(self.N - sub.N, self.N + sub.N + 1),) * self.problem.d
        return sub.from_cube(cube[sl])


@lru_cache(maxsize=64)
def _window_indices(p: ModelProblem, N: int) -> np.ndarray:
    rng = range(-N, N + 1)
    idx = np.array(list(itertools.product(rng, repeat=p.d)), dtype=int).reshape(-1, p.d)
    mag = np.round(np.abs(eigenvalue(p, idx)), 9)
    keys = [idx[:, j] for j in reversed(range(p.d))] + [mag]
    order = np.lexsort(keys)
    out = idx[order]
    out.setflags(write=False)
    return out


def index_window(p: ModelProblem, N: int) -> list:
    """Indices with ``|xi|_inf <= N`` as tuples, sorted by ``(|lambda|, xi)``."""
    return [tuple(int(c) for c in row) for row in Window(p, N).indices]


@lru_cache(maxsize=256)
def window_for(p: ModelProblem, N: int) -> Window:
    """Cached :class:`Window` (windows are immutable)."""
    return Window(p, N)
