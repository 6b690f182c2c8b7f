"""Exit-time moment fields u_k = E^x[tau^k], the invariants A_n, normalized
moments mu_n = A_n/n!, the Carleman diagnostic, and the Laplace transform.

The recursion is the probabilist one: (1/2) Delta u_1 = -1 and
(1/2) Delta u_k = -k u_{k-1}, all with zero boundary values, so that
A_n = integral of u_n and mu_n = A_n / n! is a Stieltjes moment sequence
with atoms at 2/lambda.
"""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import scipy.sparse as sparse

from .geometry import Interval, Rectangle, Disk, DomainSpec, Grid, build_radial_grid
from .discrete_ops import (DiscreteOperator, Field, SolverError,
                           assemble_half_laplacian, integrate, solve_poisson, _pcg)


class MomentSequence:
    """Invariants A_0..A_{n_max} and normalized moments mu_n = A_n/n!.

    provenance is one of {"pde", "analytic", "montecarlo"}; lambda1 is the
    estimate of the principal eigenvalue used by diagnostics. mu_exact, when
    present, carries the same moments as exact fractions (interval closed
    form) for the extended-precision inversion path.
    """

    def __init__(self, A, provenance, lambda1=None, mu_exact=None, stderr=None):
        self.A = [float(a) for a in A]
        self.n_max = len(self.A) - 1
        self.mu = [a / math.factorial(n) for n, a in enumerate(self.A)]
        self.provenance = provenance
        self.mu_exact = mu_exact
        self.stderr = stderr
        if lambda1 is None and self.n_max >= 1:
            # A_{n+1}/((n+1) A_n) decreases to 2/lambda_1 from above
            n = self.n_max
            lambda1 = 2.0 * n * self.A[n - 1] / self.A[n]
        self.lambda1 = lambda1

    def validate(self):
        for n, a in enumerate(self.A):
            if a <= 0:
                raise ValueError(f"A_{n} = {a} is not positive")

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("n,A_n,mu_n\n")
            for n, (a, m) in enumerate(zip(self.A, self.mu)):
                fh.write(f"{n},{a:.17g},{m:.17g}\n")

    @staticmethod
    def from_csv(path, provenance="pde", lambda1=None):
        A = {}
        with open(path) as fh:
            header = fh.readline().strip()
            if header.split(",")[:2] != ["n", "A_n"]:
                raise ValueError(f"{path}: expected header n,A_n,mu_n")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                parts = line.split(",")
                A[int(parts[0])] = float(parts[1])
        if sorted(A) != list(range(len(A))):
            raise ValueError(f"{path}: moment orders must be 0..n_max contiguous")
        return MomentSequence([A[n] for n in sorted(A)], provenance, lambda1)


def exit_moment_fields(grid: Grid, n_max: int, tol: float = 1e-11):
    """Fields u_1..u_{n_max} by recursive Poisson solves.

    Per-level solver target is tol * max(1, ||rhs||), which keeps recursion
    error below the moment-inversion noise floor.
    """
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    op = assemble_half_laplacian(grid)
    fields = []
    prev = Field.ones(grid)
    for k in range(1, n_max + 1):
        rhs = Field(grid, k * prev.values)
        bnorm = math.sqrt(float(np.dot(rhs.values, rhs.values)))
        rel = tol * max(1.0, bnorm) / bnorm
        try:
            u = solve_poisson(op, rhs, tol=rel)
        except SolverError as e:
            raise SolverError(f"moment recursion failed at level {k}: {e}") from e
        lo = float(u.values.min())
        if lo < -1e-8 * max(1.0, float(np.abs(u.values).max())):
            raise SolverError(f"u_{k} has a significantly negative value {lo:g}")
        fields.append(u)
        prev = u
    return fields


def moment_sequence(fields, lambda1=None) -> MomentSequence:
    """A_n = integral of u_n with A_0 the discrete volume."""
    if not fields:
        raise ValueError("need at least u_1")
    grid = fields[0].grid
    A = [integrate(Field.ones(grid))]
    for u in fields:
        A.append(integrate(u))
    return MomentSequence(A, "pde", lambda1)


def carleman_diagnostic(ms: MomentSequence, eps_tol: float = 1e-9):
    """Check mu_{2n}^{-1/(2n)} >= (lambda1/2) * A_0^{-1/(2n)} for all 2n <= n_max.

    Returns {"holds": bool, "margins": list}; margins are relative,
    mu_{2n}^{-1/(2n)} * A_0^{1/(2n)} * (2/lambda1) - 1, nonnegative when the
    bound holds. This is the testable surrogate for the Carleman condition
    (the true sequence satisfies mu_n <= (2/lambda1)^n A_0).
    """
    ms.validate()
    if ms.lambda1 is None or ms.lambda1 <= 0:
        raise ValueError("carleman_diagnostic needs a positive lambda1 estimate")
    margins = []
    n = 1
    while 2 * n <= ms.n_max:
        mu2n = ms.mu[2 * n]
        if mu2n <= 0:
            raise ValueError(f"mu_{2*n} = {mu2n} is not positive")
        lhs = mu2n ** (-1.0 / (2 * n))
        rhs = (ms.lambda1 / 2.0) * ms.A[0] ** (-1.0 / (2 * n))
        margins.append(lhs / rhs - 1.0)
        n += 1
    return {"holds": all(m >= -eps_tol for m in margins), "margins": margins}


def laplace_transform(grid: Grid, s: float, tol: float = 1e-11) -> Field:
    """h(x, s) = E^x[exp(-s tau)]: solve (1/2) Delta h = s h, h = 1 on boundary.

    Implemented through w = 1 - h with zero boundary: (-(1/2)Delta + s) w = s.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if s == 0.0:
        return Field.ones(grid)
    op = assemble_half_laplacian(grid)
    A = (op.sym + s * sparse.eye(op.n, format="csr")).tocsr()
    b = s * op.sqrtw      # z-space image of the constant rhs s
    z, _, ok = _pcg(A, b, tol=tol)
    if not ok:
        raise SolverError(f"laplace solve at s={s} did not converge")
    w = z / op.sqrtw
    return Field(grid, 1.0 - w)


# ---------------------------------------------------------------------------
# closed-form moment sequences for the separable domains


def _bernoulli_fractions(n_max):
    """B_0..B_{n_max} as exact fractions, via the defining recurrence."""
    B = [Fraction(1)]
    for m in range(1, n_max + 1):
        s = Fraction(0)
        for k in range(m):
            s += math.comb(m + 1, k) * B[k]
        B.append(-s / (m + 1))
    return B


def _interval_mu_exact(n_max):
    """mu_n of the unit interval as exact rationals.

    mu_n = sum over odd k of 8/(k pi)^2 * (2/(k pi)^2)^n, which evaluates in
    closed form through the even zeta values:
    mu_n = 8 * 2^n * (1 - 4^{-(n+1)}) * (-1)^n * B_{2n+2} * 2^{2n+1} / (2n+2)!.
    """
    B = _bernoulli_fractions(2 * n_max + 2)
    out = []
    for n in range(n_max + 1):
        val = (Fraction(8) * Fraction(2) ** n * (1 - Fraction(1, 4 ** (n + 1)))
               * (-1) ** n * B[2 * n + 2]
               * Fraction(2 ** (2 * n + 1), math.factorial(2 * n + 2)))
        out.append(val)
    return out


def analytic_moments(spec: DomainSpec, n_max: int) -> MomentSequence:
    """Closed-form moment sequence for interval, rectangle, or disk.

    Interval values are exact rationals (scaled by length); rectangle and
    disk use spectral sums with mu_0 pinned to the exact volume (the n >= 1
    sums converge rapidly, the mass sum does not).
    """
    if isinstance(spec, Interval):
        L = spec.b - spec.a
        exact = _interval_mu_exact(n_max)
        if L != 1.0:
            exact = [m * Fraction(L) ** (2 * n + 1) for n, m in enumerate(exact)]
        A = [float(m) * math.factorial(n) for n, m in enumerate(exact)]
        return MomentSequence(A, "analytic", lambda1=math.pi ** 2 / L ** 2,
                              mu_exact=exact)
    if isinstance(spec, Rectangle):
        K = 399
        i = np.arange(1, K + 1, 2, dtype=float)
        lam = np.pi ** 2 * (i[:, None] ** 2 / spec.Lx ** 2
                            + i[None, :] ** 2 / spec.Ly ** 2)
        a2 = 64.0 * spec.Lx * spec.Ly / (i[:, None] ** 2 * i[None, :] ** 2
                                         * np.pi ** 4)
        mu = [spec.volume()]
        for n in range(1, n_max + 1):
            mu.append(math.fsum((a2 * (2.0 / lam) ** n).ravel()))
        lam1 = np.pi ** 2 * (1.0 / spec.Lx ** 2 + 1.0 / spec.Ly ** 2)
        A = [m * math.factorial(n) for n, m in enumerate(mu)]
        return MomentSequence(A, "analytic", lambda1=lam1)
    if isinstance(spec, Disk):
        import scipy.special as special
        j0 = special.jn_zeros(0, 2000)
        lam = j0 ** 2 / spec.R ** 2
        a2 = 4.0 * math.pi * spec.R ** 2 / j0 ** 2
        mu = [spec.volume()]
        for n in range(1, n_max + 1):
            mu.append(math.fsum(a2 * (2.0 / lam) ** n))
        A = [m * math.factorial(n) for n, m in enumerate(mu)]
        return MomentSequence(A, "analytic", lambda1=float(lam[0]))
    raise ValueError(f"no closed-form moments for {spec!r}")


def pde_moments(spec: DomainSpec, h: float, n_max: int,
                tol: float = 1e-11, radial: bool = True):
    """Convenience pipeline: grid + recursion + integration.

    Disks route through the radial reduction by default (second order);
    pass radial=False to force the stair-step 2D grid.
    """
    from .geometry import build_grid
    if isinstance(spec, Disk) and radial:
        grid = build_radial_grid(spec, h)
    else:
        grid = build_grid(spec, h)
    fields = exit_moment_fields(grid, n_max, tol=tol)
    return moment_sequence(fields), fields, grid
