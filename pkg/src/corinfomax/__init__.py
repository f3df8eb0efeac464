"""Log-determinant mutual information objectives for self-supervised learning.

Covariance-regularised SSL on numpy: log-determinant information measures,
recursive covariance tracking, the big-bang/attraction loss with analytic
gradients, a small weight-shared MLP, and probe/spectrum diagnostics.
"""

from .covtrack import Batch, CovarianceState
from .data import AugmentConfig, Dataset, gen_blobs
from .densela import NotPositiveDefinite, ShapeError
from .infomeasures import SecondOrderPair, ld_entropy, ldmi, ldmi_symmetric
from .loss import LossBreakdown, LossParams, grad_z, grad_z_fd, objective
from .net import MlpParams, NetConfig
from .train import EpochMetrics, TrainConfig, pretrain

__version__ = "0.1.0"
