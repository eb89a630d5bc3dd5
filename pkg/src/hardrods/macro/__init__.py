"""Deterministic macroscopic layer: densities, operators, evolution and residuals."""

from .density import (SIGMA_GUARD, DensityField, GridDensity, ModelDensity, NodeSet, contract_inverse,
                      contract_point, cumulative_primitive, density_contract, density_dilate,
                      density_shift, density_transport, dilate_inverse, dilate_point, model_nodes,
                      read_grid_binary, read_grid_csv, scale_density, to_grid, write_grid_binary,
                      write_grid_csv, zero_density)
from .evolution import (ClosedFormEvolution, MacroTrajectory, characteristics_integrate,
                        effective_velocity, evolve_density, evolve_density_pushforward, node_flow,
                        sigma, zeta)
from .model import (kappa, macro_contract_label, macro_field_H, macro_field_H_segment, macro_flow,
                    macro_label, macro_position, macro_trajectory_closed, transported_sigma)
from .residual import ResidualReport, pde_residual

macro_dilate_point = dilate_point
macro_contract_point = contract_point
macro_dilate_inverse = dilate_inverse
macro_contract_inverse = contract_inverse

__all__ = [name for name in dir() if not name.startswith("_")]
