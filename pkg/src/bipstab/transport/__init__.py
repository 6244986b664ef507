from .solvers import (
    IPMValue,
    TransportPlan,
    coupling_cost,
    exact_ot,
    ipm_value,
    quantile_cost_1d,
    sinkhorn,
    solve_cost_matrix,
    transport_cost,
    w1_1d_oracle,
)

__all__ = [
    "IPMValue",
    "TransportPlan",
    "coupling_cost",
    "exact_ot",
    "ipm_value",
    "quantile_cost_1d",
    "sinkhorn",
    "solve_cost_matrix",
    "transport_cost",
    "w1_1d_oracle",
]
