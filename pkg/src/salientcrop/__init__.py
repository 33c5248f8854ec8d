"""Salient-region cropping and bag-of-visual-words labelling."""

__version__ = "0.1.0"

from ._kernels import BACKEND as KERNEL_BACKEND  # noqa: E402
from .imaging import RasterImage, decode_image, read_image  # noqa: E402
from .pipeline import PipelineParams, analyze_bytes, analyze_image  # noqa: E402
from .saliency import compute_saliency  # noqa: E402
from .store import load_model, save_model  # noqa: E402

__all__ = [
    "__version__", "KERNEL_BACKEND", "RasterImage", "decode_image", "read_image",
    "PipelineParams", "analyze_bytes", "analyze_image", "compute_saliency", "load_model", "save_model",
]
