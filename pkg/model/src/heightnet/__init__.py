"""heightnet: encoder-decoder height estimation from single SAR intensity tiles."""

from .network import HeightNet, NetworkConfig, build_network, masked_mse
from .training import TrainConfig, TrainResult, load_checkpoint, save_checkpoint, train
from .predict import predict_array, predict_raster

__version__ = "0.1.0"

__all__ = [
    "HeightNet", "NetworkConfig", "build_network", "masked_mse",
    "TrainConfig", "TrainResult", "load_checkpoint", "save_checkpoint", "train",
    "predict_array", "predict_raster",
    "__version__",
]
