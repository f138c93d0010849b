from .bounds import (
    KernelBoundSpec,
    Region,
    check_chapman_kolmogorov,
    check_factorization,
    check_oracle,
    check_scaling,
    check_sup_decay,
    check_table_invariants,
    check_tail_law,
    check_two_sided_bounds,
    classify_regions,
    image_sum,
    periodic_image_tail,
    q_envelopes,
)
from .quadrature import (
    kernel_by_quadrature,
    tail_alpha,
    quadrature_table,
    radial_kernel_by_quadrature,
    tail_constant,
)
from .tables import (
    Construction,
    KernelKind,
    KernelTable,
    convolve,
    convolve_tables,
    fractional_kernel,
    gaussian_kernel,
    kernel_table,
    mixed_kernel,
    poisson_kernel,
    resolving_half_width,
)
