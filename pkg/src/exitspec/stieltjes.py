"""Stieltjes moment inversion: recover the atomic measure psi with
moments mu_n from the Hankel generalized eigenproblem H1 v = x H0 v,
then eigenvalues lambda = 2/x and weights a^2 from the atoms.

The map is fixed as lambda = 2/x: mu_n = sum a^2 (2/lambda)^n places the
atoms of psi at 2/lambda, which the interval closed form mu_1 = 1/6 pins
down. Conditioning of Hankel sections degrades geometrically in p, so the
atom count is capped from the (diagonally balanced) singular values against
the moment noise floor, and a software double-double path handles the
factorization when 64-bit arithmetic is not enough.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg as sla

from .analysis import HeatContentCurve
from .ddouble import (DD, dd_back_solve, dd_cholesky, dd_forward_solve,
                      dd_jacobi_eigh, dd_matrix)
from .moments import MomentSequence
from .spectral import SpectralData

# relative noise floor of a moment sequence by provenance; pde reflects the
# per-level solver tolerance, analytic the 64-bit rounding of closed forms
NOISE_FLOOR = {"pde": 1e-11, "analytic": 2.3e-16, "montecarlo": 1e-3}
CAP_SAFETY = 1e3
SPURIOUS_WEIGHT = 1e-10


class InversionError(RuntimeError):
    pass


class AtomicMeasure:
    """Atoms (x_j, w_j) with x strictly decreasing, plus recovery diagnostics."""

    def __init__(self, atoms, diagnostics=None):
        atoms = [(float(x), float(w)) for x, w in atoms]
        for (x1, _), (x2, _) in zip(atoms, atoms[1:]):
            if not x1 > x2:
                raise ValueError("atoms must be strictly decreasing in x")
        for x, w in atoms:
            if x <= 0 or w <= 0:
                raise ValueError(f"atoms must be positive, got ({x}, {w})")
        self.atoms = atoms
        self.diagnostics = diagnostics or {}

    @property
    def p(self):
        return len(self.atoms)

    def total_mass(self):
        return math.fsum(w for _, w in self.atoms)

    def moment(self, n):
        return math.fsum(w * x ** n for x, w in self.atoms)

    def to_csv(self, path):
        with open(path, "w") as fh:
            fh.write("x,w\n")
            for x, w in self.atoms:
                fh.write(f"{x:.17g},{w:.17g}\n")

    @staticmethod
    def from_csv(path):
        atoms = []
        with open(path) as fh:
            header = fh.readline().strip()
            if not header.startswith("x,"):
                raise ValueError(f"{path}: expected header x,w")
            for line in fh:
                line = line.strip()
                if not line:
                    continue
                x, w = line.split(",")
                atoms.append((float(x), float(w)))
        atoms.sort(key=lambda a: -a[0])
        return AtomicMeasure(atoms)


def _hankel(mu, p, shift):
    return np.array([[mu[i + j + shift] for j in range(p)] for i in range(p)])


def hankel_psd_check(ms: MomentSequence, p: int, eps_psd: float = 1e-9):
    """Positive semidefiniteness of H_p = [mu_{i+j}] and the shifted
    H'_p = [mu_{i+j+1}]: the solvability certificate for the Stieltjes
    problem. Pass iff both smallest eigenvalues >= -eps_psd * trace."""
    if 2 * p > ms.n_max + 1:
        raise ValueError(f"p={p} needs moments up to 2p-1={2*p-1}, "
                         f"have n_max={ms.n_max}")
    report = {"p": p, "pass": True}
    for name, shift in (("H0", 0), ("H1", 1)):
        if 2 * p - 2 + shift > ms.n_max:
            raise ValueError(f"not enough moments for {name} at p={p}")
        H = _hankel(ms.mu, p, shift)
        ev = np.linalg.eigvalsh((H + H.T) / 2.0)
        report[name + "_min_eig"] = float(ev[0])
        report[name + "_trace"] = float(np.trace(H))
        if ev[0] < -eps_psd * np.trace(H):
            report["pass"] = False
    return report


def atom_count_cap(ms: MomentSequence, p_max: int, floor: float = None) -> int:
    """Largest p <= p_max whose balanced Hankel section is numerically full
    rank: p-th singular value of D^{-1/2} H0 D^{-1/2} (D = diag of H0) above
    CAP_SAFETY times the moment noise floor. Balancing is essential: raw
    Hankel singular values decay with the moment scale itself and would veto
    sections that are perfectly recoverable.

    floor overrides the provenance noise model; pass the arithmetic epsilon
    of the downstream factorization when the moments themselves are exact.
    """
    if floor is None:
        floor = NOISE_FLOOR.get(ms.provenance, 1e-11)
        if ms.stderr is not None:
            rel = max(s / abs(a) for s, a in zip(ms.stderr, ms.A) if a != 0)
            floor = max(floor, rel)
    best = 0
    for p in range(1, p_max + 1):
        if 2 * p - 1 > ms.n_max:
            break
        H = _hankel(ms.mu, p, 0)
        d = np.sqrt(np.diag(H))
        sv = np.linalg.svd(H / np.outer(d, d), compute_uv=False)
        if sv[-1] >= CAP_SAFETY * floor:
            best = p
    return best


def _invert_standard(mu, p):
    H0 = _hankel(mu, p, 0)
    H1 = _hankel(mu, p, 1)
    try:
        L = np.linalg.cholesky(H0)
    except np.linalg.LinAlgError as e:
        raise InversionError(f"H0 numerically rank deficient at p={p}; "
                             "reduce p") from e
    X = sla.solve_triangular(L, H1, lower=True)
    W = sla.solve_triangular(L, X.T, lower=True).T
    W = (W + W.T) / 2.0
    nodes = np.linalg.eigvalsh(W)[::-1]
    V = np.stack([nodes ** r / mu[r] for r in range(2 * p)])
    b = np.ones(2 * p)
    w, *_ = np.linalg.lstsq(V, b, rcond=None)
    return list(nodes), list(w)


def _invert_extended(mu_dd, p):
    H0 = dd_matrix([[mu_dd[i + j] for j in range(p)] for i in range(p)])
    H1 = dd_matrix([[mu_dd[i + j + 1] for j in range(p)] for i in range(p)])
    try:
        L = dd_cholesky(H0)
    except ArithmeticError as e:
        raise InversionError(f"H0 numerically rank deficient at p={p}; "
                             "reduce p") from e
    # W = L^{-1} H1 L^{-T}, symmetric positive map of nodes
    X = [dd_forward_solve(L, [H1[i][j] for i in range(p)]) for j in range(p)]
    # X[j] is column j of L^{-1} H1; now solve again on its transpose
    W = [dd_forward_solve(L, [X[j][i] for j in range(p)]) for i in range(p)]
    # symmetrize
    for i in range(p):
        for j in range(i):
            v = (W[i][j] + W[j][i]) * 0.5
            W[i][j] = v
            W[j][i] = v
    ev, _ = dd_jacobi_eigh(W)
    nodes = sorted(ev, key=float, reverse=True)
    # weights: row-scaled Vandermonde normal equations in dd
    m = 2 * p
    V = [[nodes[c] ** r / mu_dd[r] for c in range(p)] for r in range(m)]
    A = [[sum((V[r][i] * V[r][j] for r in range(m)), DD(0.0)) for j in range(p)]
         for i in range(p)]
    # right-hand side of the scaled system is all ones: rhs = V^T 1
    rhs = [sum((V[r][i] for r in range(m)), DD(0.0)) for i in range(p)]
    Lw = dd_cholesky(A)
    w = dd_back_solve(Lw, dd_forward_solve(Lw, rhs))
    return [float(x) for x in nodes], [float(x) for x in w]


def invert_moments(ms: MomentSequence, p: int,
                   precision: str = "standard") -> AtomicMeasure:
    """Solve the truncated Stieltjes moment problem for p atoms.

    Nodes from the generalized eigenproblem H1 v = x H0 v (Cholesky
    reduction to an ordinary symmetric problem), weights by least squares on
    the row-scaled Vandermonde system over mu_0..mu_{2p-1}. precision
    "extended" runs the factorization in double-double arithmetic, using
    exact rational moments when the sequence carries them.

    The requested p is capped by atom_count_cap; the effective value is in
    diagnostics["p_effective"].
    """
    if precision not in ("standard", "extended"):
        raise ValueError(f"unknown precision {precision!r}")
    if p < 1:
        raise ValueError("p must be >= 1")
    if 2 * p > ms.n_max + 1:
        raise ValueError(f"p={p} needs n_max >= {2*p-1}, have {ms.n_max}")
    ms.validate()
    if precision == "extended" and ms.mu_exact is not None:
        # exact rational moments: the only noise is the double-double
        # factorization itself, so cap against that epsilon instead of the
        # provenance floor (the balanced sigma_min is still measured in
        # doubles, which quietly limits p to sections it can certify)
        cap = atom_count_cap(ms, p, floor=1e-26)
    else:
        cap = atom_count_cap(ms, p)
    if cap < 1:
        raise InversionError("moment noise floor leaves no recoverable atoms")
    p_eff = min(p, cap)
    if precision == "extended":
        if ms.mu_exact is not None:
            mu_dd = [DD.from_fraction(f) for f in ms.mu_exact]
        else:
            mu_dd = [DD.from_float(v) for v in ms.mu]
        nodes, weights = _invert_extended(mu_dd, p_eff)
    else:
        nodes, weights = _invert_standard(ms.mu, p_eff)

    atoms = []
    dropped = []
    for x, w in zip(nodes, weights):
        if w < -1e-8 * ms.mu[0]:
            raise InversionError(f"negative weight {w:.3e} at node {x:.3e}; "
                                 f"reject p={p_eff}")
        if x <= 0 or w < SPURIOUS_WEIGHT * ms.mu[0]:
            dropped.append((x, w))
            continue
        atoms.append((x, w))
    atoms.sort(key=lambda a: -a[0])
    residuals = []
    for n in range(2 * p_eff):
        rec = math.fsum(w * x ** n for x, w in atoms)
        residuals.append(abs(rec - ms.mu[n]) / abs(ms.mu[n]))
    diagnostics = {
        "p_requested": p,
        "p_effective": p_eff,
        "precision": precision,
        "dropped_atoms": dropped,
        "moment_residuals": residuals,
        "max_moment_residual": max(residuals),
    }
    return AtomicMeasure(atoms, diagnostics)


def measure_to_spectrum(am: AtomicMeasure) -> SpectralData:
    """Atoms to (lambda = 2/x, a2 = w); multiplicity 0 marks "unknown"
    (the moment data carries no multiplicity information)."""
    entries = [(2.0 / x, 0, w) for x, w in sorted(am.atoms, key=lambda a: -a[0])]
    return SpectralData(entries, "inverted")


def reconstruct_heat_content(am: AtomicMeasure, times) -> HeatContentCurve:
    """q(t) = sum w_j exp(-t / x_j), the heat content determined by mspec."""
    times = np.asarray(times, dtype=float)
    q = np.array([math.fsum(w * math.exp(-t / x) for x, w in am.atoms)
                  for t in times])
    return HeatContentCurve(times, q, "reconstructed")
