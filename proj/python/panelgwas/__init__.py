"""Linear association scans for large phenotype panels."""

from ._core import (
    P_FLOOR,
    Error,
    associate,
    ols,
    p_from_t,
    read_full_matrix,
    read_genotypes,
    read_results,
    reg_inc_beta,
    scan,
    simulate,
    t_from_r,
)

__all__ = [
    "P_FLOOR",
    "Error",
    "associate",
    "ols",
    "p_from_t",
    "read_full_matrix",
    "read_genotypes",
    "read_results",
    "reg_inc_beta",
    "scan",
    "simulate",
    "t_from_r",
]
