"""Coverage, meta distribution and local delay of UAV-assisted cellular downlinks.

Submodules: ``model`` (parameters and channel), ``geometry`` (distances and
association), ``oba`` (interferer off-boresight angles and gains),
``moments`` (CSP moments, meta distribution, delay), ``numerics``
(quadrature), ``sim`` (Monte Carlo) and ``cli``.
"""

__version__ = "0.1.0"

from .errors import (  # noqa: E402
    ConfigError,
    DomainError,
    EmptyNetworkError,
    NumericError,
    UavMetaError,
    UndefinedConditionalError,
    UnsupportedMethodError,
)
from .geometry import AssociationResult, association_probabilities  # noqa: E402
from .model import (  # noqa: E402
    ENVIRONMENTS,
    AntennaPattern,
    Environment,
    Mode,
    NetworkConfig,
    TierId,
    TierParams,
    default_config,
)
from .moments import (  # noqa: E402
    csp_moment,
    csp_moments,
    mean_local_delay,
    meta_distribution_beta,
    meta_distribution_gilpelaez,
)
from .oba import mean_interfering_gain  # noqa: E402
