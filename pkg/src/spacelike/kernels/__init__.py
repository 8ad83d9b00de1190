from .common import KernelValue, LueParams, SpaceTimePoint, precedes
from .gue import (gue_kernel_diag, gue_kernel_grid, heat_kernel, kernel_diffusion_scaled,
                  kernel_gue_extended, kernel_gue_static, phi_gue, phi_spacelike_gue, psi_gue)
from .lue import (bessel_transition, kernel_lue, lue_kernel_diag, lue_kernel_grid, phi_lue,
                  phi_spacelike_lue, psi_lue)
from .discrete import (discrete_kernel_diag, discrete_kernel_grid, kernel_discrete,
                       kernel_discrete_value)
