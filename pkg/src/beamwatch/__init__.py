"""Multi-camera collision monitoring for scripted equipment workcells."""

from .core import CameraId, Category, FrameBundle, Mask, PixelPoint, mask_centroid, mask_iou

__all__ = ["CameraId", "Category", "FrameBundle", "Mask", "PixelPoint", "mask_centroid", "mask_iou"]
__version__ = "0.1.0"
