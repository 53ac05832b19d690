"""Newton iteration and sparse direct linear solves."""
from __future__ import annotations

import functools
import hashlib
import importlib.metadata
import logging
import os
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .assembly import apply_dirichlet

log = logging.getLogger(__name__)

LINEAR_RTOL = 1e-10
BACKENDS = ("auto", "pardiso", "superlu")


class SingularMatrixError(np.linalg.LinAlgError):
    """Linear system is singular; `row` is the offending row when known."""

    def __init__(self, message: str, row: int | None = None):
        super().__init__(message)
        self.row = row


@dataclass
class NewtonReport:
    iterations: int = 0
    relative_update: float = np.inf
    converged: bool = False
    history: list[float] = field(default_factory=list)


class NewtonError(RuntimeError):
    def __init__(self, message: str, report: NewtonReport, state: np.ndarray | None = None):
        super().__init__(message)
        self.report = report
        self.state = state


@functools.lru_cache(maxsize=1)
def _pardiso_module():
    """Import pypardiso, pointing it at the pip-installed MKL runtime if needed."""
    if "PYPARDISO_MKL_RT" not in os.environ:
        try:
            files = importlib.metadata.distribution("mkl").files or []
        except importlib.metadata.PackageNotFoundError:
            files = []
        libs = sorted(str(f.locate()) for f in files if "libmkl_rt" in f.name)
        if libs:
            os.environ["PYPARDISO_MKL_RT"] = libs[0]
    try:
        import pypardiso
    except ImportError:
        return None
    return pypardiso


def available_backends() -> tuple[str, ...]:
    return ("pardiso", "superlu") if _pardiso_module() is not None else ("superlu",)


class _PardisoCache:
    """One PARDISO handle whose symbolic analysis is reused while the sparsity pattern repeats.

    Newton Jacobians share their pattern across iterations and time steps, so
    only the numeric factorisation is redone.
    """

    def __init__(self):
        self.solver = None
        self.key = None

    def factorize(self, A: sp.csr_matrix):
        pyp = _pardiso_module()
        key = (A.shape, hashlib.sha1(A.indptr).hexdigest(), hashlib.sha1(A.indices).hexdigest())
        if self.solver is None or key != self.key:
            self.release()
            self.solver = pyp.PyPardisoSolver(mtype=11)
            self.solver._check_A(A)
            self.solver.set_phase(11)
            self.solver._call_pardiso(A, np.zeros((A.shape[0], 1)))
            self.key = key
        solver = self.solver
        solver._check_A(A)
        solver.set_phase(22)
        solver._call_pardiso(A, np.zeros((A.shape[0], 1)))

        def solve(rhs):
            solver.set_phase(33)
            return solver._call_pardiso(A, np.asfortranarray(rhs.reshape(-1, 1))).ravel()

        return solve

    def release(self):
        if self.solver is not None:
            self.solver.free_memory(everything=True)
        self.solver = None
        self.key = None


_PARDISO = _PardisoCache()


def _factorize(A: sp.csr_matrix, backend: str):
    """Return a solve callable for `A`, or raise SingularMatrixError."""
    if backend == "auto":
        backend = available_backends()[0]
    if backend == "pardiso":
        pyp = _pardiso_module()
        if pyp is None:
            raise ImportError("pypardiso is not installed")
        A = A.astype(float)
        A.sort_indices()
        try:
            return _PARDISO.factorize(A)
        except pyp.pardiso_wrapper.PyPardisoError as exc:
            _PARDISO.release()
            raise SingularMatrixError(f"PARDISO factorisation failed: {exc}") from exc
    if backend == "superlu":
        try:
            lu = spla.splu(A.tocsc())
        except RuntimeError as exc:
            raise SingularMatrixError(f"LU factorisation failed: {exc}") from exc
        return lu.solve
    raise ValueError(f"unknown linear solver backend {backend!r}; expected one of {BACKENDS}")


def linear_solve(A, b: np.ndarray, rtol: float = LINEAR_RTOL, refine: int = 3,
                 backend: str | None = None) -> np.ndarray:
    """Solve ``A x = b`` by sparse LU with iterative refinement.

    Parameters
    ----------
    backend : {"auto", "pardiso", "superlu"}, optional
        Factorisation routine. ``"auto"`` (default, or the ``KVBF_LINEAR_SOLVER``
        environment variable) prefers MKL PARDISO via pypardiso and falls
        back to SuperLU.

    Raises SingularMatrixError for empty rows or a failed factorisation, and
    when the relative residual stays above `rtol` after refinement.
    """
    if backend is None:
        backend = os.environ.get("KVBF_LINEAR_SOLVER", "auto")
    A = sp.csr_matrix(A)
    b = np.asarray(b, dtype=float)
    n, m = A.shape
    if n != m:
        raise ValueError(f"matrix must be square, got {A.shape}")
    if b.shape != (n,):
        raise ValueError(f"right-hand side must have length {n}")
    nnz_per_row = np.diff(A.indptr)
    empty = np.flatnonzero(nnz_per_row == 0)
    if empty.size == 0:
        A_nz = A.copy()
        A_nz.eliminate_zeros()
        empty = np.flatnonzero(np.diff(A_nz.indptr) == 0)
    if empty.size:
        raise SingularMatrixError(f"row {empty[0]} of the matrix is zero", row=int(empty[0]))
    bnorm = np.linalg.norm(b)
    if bnorm == 0.0:
        return np.zeros(n)
    solve = _factorize(A, backend)
    x = solve(b)
    for _ in range(refine + 1):
        r = b - A @ x
        rel = np.linalg.norm(r) / bnorm
        if not np.isfinite(rel):
            raise SingularMatrixError("non-finite solution; matrix is numerically singular")
        if rel <= rtol:
            return x
        x = x + solve(r)
    raise SingularMatrixError(f"relative residual {rel:.2e} above {rtol:.0e}; matrix is ill-conditioned")


def newton_solve(residual: Callable[[np.ndarray], np.ndarray],
                 jacobian: Callable[[np.ndarray], sp.spmatrix],
                 init: np.ndarray,
                 tol: float = 1e-6,
                 maxit: int = 25,
                 fixed_dofs: np.ndarray | None = None,
                 ) -> tuple[np.ndarray, NewtonReport]:
    """Full-step Newton iteration.

    Stops at the first iterate with ``|x_{m+1} - x_m| / |x_{m+1}| <= tol``.
    DOFs in `fixed_dofs` keep their value from `init` (their updates are
    constrained to zero by symmetric elimination).
    """
    x = np.array(init, dtype=float, copy=True)
    if not np.all(np.isfinite(x)):
        raise ValueError("initial guess is not finite")
    fixed = np.zeros(0, dtype=int) if fixed_dofs is None else np.asarray(fixed_dofs, dtype=int)
    report = NewtonReport()
    for it in range(1, maxit + 1):
        r = np.asarray(residual(x), dtype=float)
        J = jacobian(x)
        J, rhs = apply_dirichlet(J, -r, fixed, 0.0)
        try:
            dx = linear_solve(J, rhs)
        except SingularMatrixError as exc:
            report.iterations = it
            raise NewtonError(f"linear solve failed at Newton iteration {it}: {exc}", report, x) from exc
        x = x + dx
        step = np.linalg.norm(dx)
        size = np.linalg.norm(x)
        rel = 0.0 if step == 0.0 else (step / size if size > 0 else np.inf)
        report.iterations = it
        report.relative_update = float(rel)
        report.history.append(float(rel))
        log.debug("newton it=%d rel_update=%.3e", it, rel)
        if rel <= tol:
            report.converged = True
            return x, report
    raise NewtonError(f"Newton did not converge in {maxit} iterations "
                      f"(last relative update {report.relative_update:.3e})", report, x)
