"""In-repo numerical kernels: eigenvalues, polynomial roots, linear solves, Newton, ODEs."""

from .eigen import Spectrum, balance, eigenvalues, hessenberg, hqr
from .integrate import IntegratorOptions, Solution, integrate
from .linalg import lu_solve
from .newton import NewtonOptions, NewtonResult, dedupe, fd_jacobian, newton_multistart, newton_solve
from .polynomial import Poly, companion, polynomial_roots, root_residual_ok

__all__ = [
    "Spectrum", "balance", "eigenvalues", "hessenberg", "hqr",
    "IntegratorOptions", "Solution", "integrate",
    "lu_solve",
    "NewtonOptions", "NewtonResult", "dedupe", "fd_jacobian", "newton_multistart", "newton_solve",
    "Poly", "companion", "polynomial_roots", "root_residual_ok",
]
