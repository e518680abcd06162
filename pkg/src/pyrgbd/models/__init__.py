from .autoencoder import CrossModalAutoEncoder, Direction, build_autoencoders
from .backbone import NetworkShapeError, VggEncoder
from .fusion import (
    AdditiveFusion,
    AddConvFusion,
    CdaModule,
    CdaOutput,
    FusionShapeError,
    build_fusion,
)
from .sod import SodModel, SodOutput
from .transfer import (
    StageTag,
    TransferError,
    TransferPolicy,
    TransferReport,
    freeze_encoders,
    transfer_weights,
)
