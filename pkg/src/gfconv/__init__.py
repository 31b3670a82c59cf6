"""Green's-function convolution over 2D/3D multi-channel grids.

Spectral solving of the discrete Laplacian, integration of gradient fields,
and projection of feature fields onto conservative (curl-free) ones, with
exact adjoints for use inside gradient-based learners.
"""

from .bench import BenchRecord, run_bench
from .diffops import (
    curl2d,
    curl3d,
    divergence,
    divergence_adjoint,
    gradient,
    gradient_adjoint,
    interior_max_curl,
)
from .errors import (
    BadMagicError,
    ChannelCountMismatchError,
    DimensionTooSmallError,
    GfcError,
    GftFormatError,
    IndivisibleChannelCountError,
    InvalidPadError,
    NonFiniteValueError,
    NumericalHealthError,
    ShapeMismatchError,
    TruncatedPayloadError,
    UnknownDtypeError,
    UnsupportedImageFormatError,
)
from .fields import (
    Field,
    VectorField,
    field_axpy,
    field_inner,
    field_new,
    from_array,
    vector_inner,
)
from .io import gft_read, gft_write, pnm_read, pnm_write
from .kernels import (
    DEFAULT_PAD,
    KernelCache,
    SpectralKernel,
    build_green_kernel,
    cache_get_or_build,
    default_cache,
)
from .layers import (
    GI,
    GID,
    LI,
    ChannelMixer,
    LayerAdjointResult,
    LayerSpec,
    gi_forward,
    gid_forward,
    layer_adjoint,
    layer_forward,
    li_forward,
    mix_channels,
)
from .solver import (
    CORNER_ZERO,
    MEAN_ZERO,
    PotentialField,
    SolverConfig,
    laplacian_stencil,
    solve_laplacian,
    solve_laplacian_adjoint,
)

__version__ = "0.1.0"
