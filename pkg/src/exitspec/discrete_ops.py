"""Discrete generator -(1/2)Delta_h with Dirichlet conditions, CG solves,
low eigenpairs, and quadrature.

Everything is built around a symmetrized representation. With W the diagonal
of quadrature weights and M the operator in node space, the matrix

    S = W^{1/2} M W^{-1/2}

is symmetric positive definite for both grid kinds (for lattice grids W is a
multiple of the identity and S equals M; for the radial finite-volume scheme
W M is symmetric by construction). Solves and eigensolves run on S in the
variable z = W^{1/2} u, where the quadrature inner product is the plain dot
product. Eigenvalues of S are lambda/2 under the probabilist convention.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.sparse as sparse
import scipy.sparse.linalg as splinalg

from .geometry import Grid


class SolverError(RuntimeError):
    pass


class Field:
    """One real value per interior grid node."""

    __slots__ = ("grid", "values")

    def __init__(self, grid: Grid, values):
        values = np.asarray(values, dtype=float)
        if values.shape != (grid.n,):
            raise ValueError(f"field length {values.shape} != node count {grid.n}")
        self.grid = grid
        self.values = values

    @staticmethod
    def ones(grid):
        return Field(grid, np.ones(grid.n))

    @staticmethod
    def zeros(grid):
        return Field(grid, np.zeros(grid.n))

    def value_at(self, coord):
        """Value at exact node coordinates (lattice lookup)."""
        grid = self.grid
        if grid.kind == "radial":
            i = int(round(coord / grid.h))
            key = (i,)
        else:
            c = np.atleast_1d(np.asarray(coord, dtype=float))
            key = tuple(int(round(x / grid.h)) for x in c)
        if key not in grid.index:
            raise KeyError(f"{coord} is not an interior node")
        return float(self.values[grid.index[key]])


class DiscreteOperator:
    """Sparse symmetric form of -(1/2)Delta_h on a grid (Dirichlet eliminated)."""

    def __init__(self, grid, sym, weights):
        self.grid = grid
        self.sym = sym.tocsr()
        self.w = np.asarray(weights, dtype=float)
        self.sqrtw = np.sqrt(self.w)
        self.diag = self.sym.diagonal()
        self._lu = None
        self._norm_inf = None

    def lu_solve(self, b):
        """Direct sparse solve in the symmetric gauge; factored once.

        One step of iterative refinement pushes the relative residual to
        machine level, which matters because the matrix entries scale with
        1/h^2 and plain LU backward error would sit near kappa * eps.
        """
        if self._lu is None:
            self._lu = splinalg.splu(self.sym.tocsc())
        z = self._lu.solve(b)
        z += self._lu.solve(b - self.sym @ z)
        return z

    @property
    def n(self):
        return self.sym.shape[0]

    def apply(self, u):
        """Node-space operator: M u = W^{-1/2} S W^{1/2} u."""
        return (self.sym @ (u * self.sqrtw)) / self.sqrtw

    def norm_inf(self):
        if self._norm_inf is None:
            self._norm_inf = float(np.max(np.abs(self.sym).sum(axis=1)))
        return self._norm_inf

    def dump_coo(self, path):
        """Node-space matrix in `row col value` coordinate text format."""
        coo = self.sym.tocoo()
        with open(path, "w") as fh:
            for r, c, v in zip(coo.row, coo.col, coo.data):
                m = v * self.sqrtw[c] / self.sqrtw[r]
                fh.write(f"{r} {c} {m:.17g}\n")


def assemble_half_laplacian(grid: Grid) -> DiscreteOperator:
    """Standard 3-point (1D) / 5-point (2D) stencil scaled by 1/(2 h^2).

    Neighbors outside the interior contribute zero (Dirichlet). Radial grids
    get the finite-volume flux form of (1/2)(u'' + u'/r) with the symmetric
    regularization u'(0) = 0; the returned matrix is the symmetrized S.
    """
    n = grid.n
    if grid.kind == "radial":
        h = grid.h
        r = grid.nodes
        # flux through the face at r_{i+1/2}; the factor pi (not 2 pi)
        # carries the probabilist 1/2
        face = (r + h / 2.0) * math.pi / h
        rows, cols, vals = [], [], []
        for i in range(n):
            fp = face[i] if i + 1 < n else (r[i] + h / 2.0) * math.pi / h
            fm = face[i - 1] if i > 0 else 0.0
            rows.append(i); cols.append(i); vals.append(fp + fm)
            if i + 1 < n:
                rows.append(i); cols.append(i + 1); vals.append(-face[i])
                rows.append(i + 1); cols.append(i); vals.append(-face[i])
        WM = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
        inv_sqrt = 1.0 / np.sqrt(grid.weights)
        S = sparse.diags(inv_sqrt) @ WM @ sparse.diags(inv_sqrt)
        return DiscreteOperator(grid, S, grid.weights)

    h = grid.h
    c = 1.0 / (2.0 * h * h)
    rows, cols, vals = [], [], []
    for i, coord in enumerate(grid.lattice):
        deg = 2 * len(coord)
        rows.append(i); cols.append(i); vals.append(deg * c)
        for j in grid.neighbors(coord):
            if j is not None:
                rows.append(i); cols.append(j); vals.append(-c)
    S = sparse.coo_matrix((vals, (rows, cols)), shape=(n, n))
    return DiscreteOperator(grid, S, grid.weights)


def _pcg(A, b, x0=None, tol=1e-10, max_iter=None, diag=None):
    """Jacobi-preconditioned conjugate gradients on a CSR SPD matrix.

    Fixed iteration order, hence deterministic. Convergence criterion is
    ||A x - b|| <= tol * ||b||. Returns (x, iterations, converged).
    """
    n = A.shape[0]
    if max_iter is None:
        # 20 sqrt(N) is far too small for 1D chains (CG needs ~N steps on a
        # tridiagonal Poisson matrix); keep the finite-termination bound
        max_iter = max(int(20 * math.sqrt(n)), 2 * n)
    if diag is None:
        diag = A.diagonal()
    inv_diag = 1.0 / diag
    bnorm = math.sqrt(float(np.dot(b, b)))
    if bnorm == 0.0:
        return np.zeros(n), 0, True
    x = np.zeros(n) if x0 is None else x0.astype(float).copy()
    r = b - A @ x
    target = tol * bnorm
    if math.sqrt(float(np.dot(r, r))) <= target:
        return x, 0, True
    z = inv_diag * r
    p = z.copy()
    rz = float(np.dot(r, z))
    for it in range(1, max_iter + 1):
        Ap = A @ p
        alpha = rz / float(np.dot(p, Ap))
        x += alpha * p
        r -= alpha * Ap
        if math.sqrt(float(np.dot(r, r))) <= target:
            # recompute the true residual; accumulated r can drift
            rt = b - A @ x
            if math.sqrt(float(np.dot(rt, rt))) <= target:
                return x, it, True
            r = rt
        z = inv_diag * r
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, False


def solve_poisson(op: DiscreteOperator, rhs: Field, tol: float = 1e-10,
                  max_iter=None, x0=None) -> Field:
    """Solve M u = rhs with ||M u - rhs|| <= tol * ||rhs|| in node space.

    The contract saturates at the backward-stable floor eps*||A||*||u||: for
    fine grids ||A|| ~ 1/h^2 makes very small relative tolerances physically
    meaningless in double precision, so residuals at that floor count as
    converged no matter what tol asks for.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    b = rhs.values * op.sqrtw          # z-space right-hand side W^{1/2} b
    z0 = None if x0 is None else x0.values * op.sqrtw
    bnorm = math.sqrt(float(np.dot(rhs.values, rhs.values)))
    if bnorm == 0.0:
        return Field.zeros(op.grid)
    if op.grid.spec.dim == 1 or op.grid.kind == "radial":
        # tridiagonal: a cached direct factorization beats CG outright
        z = op.lu_solve(b)
    else:
        z, _, _ = _pcg(op.sym, b, x0=z0, tol=tol, max_iter=max_iter,
                       diag=op.diag)
    u = z / op.sqrtw
    # the contract is in node space; tighten and retry if weight scaling ate it
    eps = np.finfo(float).eps
    for _ in range(4):
        res = rhs.values - op.apply(u)
        rnorm = math.sqrt(float(np.dot(res, res)))
        floor = 8.0 * eps * op.norm_inf() * math.sqrt(float(np.dot(u, u)))
        if rnorm <= max(tol * bnorm, floor):
            return Field(op.grid, u)
        z, _, _ = _pcg(op.sym, b, x0=z, tol=tol * 0.03, max_iter=max_iter,
                       diag=op.diag)
        u = z / op.sqrtw
    raise SolverError(f"solve stalled above tol={tol:g} and the "
                      "backward-stable floor")


def integrate(f: Field) -> float:
    """Quadrature sum(f * weight), compensated."""
    return math.fsum(f.values * f.grid.weights)


def inner(f: Field, g: Field) -> float:
    """Quadrature inner product of two fields on one grid."""
    return math.fsum(f.values * g.values * f.grid.weights)


def lowest_eigenpairs(op: DiscreteOperator, m: int, tol: float = 1e-7,
                      max_outer: int = 400):
    """Lowest m eigenpairs of the generator by block inverse iteration.

    Block of m plus a small buffer; each sweep solves S Y = Z by CG (warm
    started), re-orthonormalizes by Gram-Schmidt (QR), and Rayleigh-Ritz
    rotates. Returned eigenvalues follow the positive-Laplacian convention:
    lambda = 2 * (matrix eigenvalue of S). Fields are orthonormal under grid
    quadrature. Residual contract: ||(S - lambda/2) z|| <= tol per pair.
    """
    n = op.n
    if m < 1:
        raise ValueError("m must be >= 1")
    if m > min(32, n - 2):
        raise SolverError(f"m={m} beyond solver capacity for n={n}")
    mb = min(m + 4, n - 1)
    rng = np.random.default_rng(7042)   # fixed: lowest_eigenpairs is deterministic
    Z, _ = np.linalg.qr(rng.standard_normal((n, mb)))
    A = op.sym
    theta = None
    res = np.full(mb, np.inf)
    inner_tol = 1e-4
    Y = Z.copy()
    for _ in range(max_outer):
        for j in range(mb):
            Y[:, j], _, _ = _pcg(A, Z[:, j], x0=Y[:, j], tol=inner_tol,
                                 diag=op.diag)
        Q, _ = np.linalg.qr(Y)
        AQ = A @ Q
        T = Q.T @ AQ
        T = (T + T.T) / 2.0
        theta, U = np.linalg.eigh(T)
        Z = Q @ U
        AZ = AQ @ U
        res = np.linalg.norm(AZ - Z * theta, axis=0)
        if np.all(res[:m] <= tol):
            break
        # the residual floor of a sweep is about theta_m * inner_tol, so the
        # inner solves must be driven well below the remaining gap
        theta_m = max(float(theta[min(m - 1, mb - 1)]), 1.0)
        inner_tol = max(1e-13,
                        min(inner_tol, 0.05 * float(res[:m].max()) / theta_m))
        # near convergence A^{-1} z ~ z / theta, an excellent warm start
        Y = Z / theta
    else:
        raise SolverError(f"eigensolver stalled: residuals {res[:m]}, tol={tol}")
    pairs = []
    for i in range(m):
        phi = Z[:, i] / op.sqrtw
        # fix an overall sign so results are reproducible run to run
        k = int(np.argmax(np.abs(phi)))
        if phi[k] < 0:
            phi = -phi
        pairs.append((2.0 * float(theta[i]), Field(op.grid, phi)))
    return pairs
