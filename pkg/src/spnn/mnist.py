"""MNIST ingestion and the complex frequency-domain feature pipeline.

Images arrive in the IDX binary format (big-endian headers; gzip
variants are detected by magic bytes).  Each 28x28 image is scaled to
[0, 1], transformed with a 2-D FFT, center-shifted so the zero-frequency
bin lands at index (14, 14), and cropped to the central 4x4 block
(rows and columns 12..15).  The 16 retained bins, scaled by 1/784, form
the complex feature vector the network consumes.
"""

import gzip
import hashlib
import pathlib
import struct

import numpy as np

__all__ = [
    "IdxFormatError",
    "BadMagicError",
    "TruncatedPayloadError",
    "CountMismatchError",
    "LabelRangeError",
    "IMAGE_MAGIC",
    "LABEL_MAGIC",
    "load_idx",
    "fft_center_features",
    "preprocess_dataset",
]

IMAGE_MAGIC = 2051
LABEL_MAGIC = 2049

CROP_LO = 12
CROP_HI = 16
FEATURE_SCALE = 1.0 / 784.0


class IdxFormatError(ValueError):
    """Base class for IDX parsing failures."""


class BadMagicError(IdxFormatError):
    pass


class TruncatedPayloadError(IdxFormatError):
    pass


class CountMismatchError(IdxFormatError):
    pass


class LabelRangeError(IdxFormatError):
    pass


def _read_bytes(path):
    raw = pathlib.Path(path).read_bytes()
    if raw[:2] == b"\x1f\x8b":
        raw = gzip.decompress(raw)
    return raw


def _parse_images(raw, path):
    if len(raw) < 16:
        raise TruncatedPayloadError(f"{path}: image header truncated")
    magic, count, rows, cols = struct.unpack(">IIII", raw[:16])
    if magic != IMAGE_MAGIC:
        raise BadMagicError(
            f"{path}: image magic {magic}, expected {IMAGE_MAGIC}")
    if (rows, cols) != (28, 28):
        raise IdxFormatError(f"{path}: expected 28x28 images, got {rows}x{cols}")
    expected = 16 + count * rows * cols
    if len(raw) != expected:
        raise TruncatedPayloadError(
            f"{path}: payload {len(raw)} bytes, header declares {expected}")
    return np.frombuffer(raw, dtype=np.uint8, offset=16).reshape(count, rows, cols)


def _parse_labels(raw, path):
    if len(raw) < 8:
        raise TruncatedPayloadError(f"{path}: label header truncated")
    magic, count = struct.unpack(">II", raw[:8])
    if magic != LABEL_MAGIC:
        raise BadMagicError(
            f"{path}: label magic {magic}, expected {LABEL_MAGIC}")
    if len(raw) != 8 + count:
        raise TruncatedPayloadError(
            f"{path}: payload {len(raw)} bytes, header declares {8 + count}")
    labels = np.frombuffer(raw, dtype=np.uint8, offset=8)
    if labels.size and labels.max() > 9:
        raise LabelRangeError(f"{path}: label {labels.max()} outside 0..9")
    return labels


def load_idx(images_path, labels_path):
    """Load an IDX image/label file pair.

    Returns:
        (images uint8 array (N, 28, 28), labels uint8 array (N,))

    Raises:
        BadMagicError, TruncatedPayloadError, CountMismatchError,
        LabelRangeError for the respective malformations.
    """
    images = _parse_images(_read_bytes(images_path), images_path)
    labels = _parse_labels(_read_bytes(labels_path), labels_path)
    if images.shape[0] != labels.shape[0]:
        raise CountMismatchError(
            f"{images.shape[0]} images vs {labels.shape[0]} labels")
    return images, labels


def fft_center_features(pixels):
    """Complex feature vector of one image.

    The DC bin of the shifted spectrum sits at (14, 14), which is
    position (2, 2) inside the 4x4 crop; a constant image therefore
    maps to a single nonzero feature.

    Args:
        pixels: (28, 28) array of uint8 (or float already in [0, 1]).

    Returns:
        (16,) complex array: row-major crop of the shifted spectrum,
        scaled by 1/784.
    """
    pixels = np.asarray(pixels)
    if pixels.shape != (28, 28):
        raise ValueError(f"expected a 28x28 image, got {pixels.shape}")
    scaled = pixels.astype(float) / 255.0 if pixels.dtype == np.uint8 else pixels.astype(float)
    spectrum = np.fft.fftshift(np.fft.fft2(scaled))
    crop = spectrum[CROP_LO:CROP_HI, CROP_LO:CROP_HI]
    return crop.reshape(16) * FEATURE_SCALE


def _features_batch(images):
    scaled = images.astype(float) / 255.0
    spectra = np.fft.fftshift(np.fft.fft2(scaled, axes=(1, 2)), axes=(1, 2))
    crop = spectra[:, CROP_LO:CROP_HI, CROP_LO:CROP_HI]
    return crop.reshape(images.shape[0], 16) * FEATURE_SCALE


def preprocess_dataset(images, cache_path=None):
    """Feature vectors for a whole image set, optionally disk-cached.

    The cache is a single .npz keyed by the SHA-256 of the raw image
    bytes; a stale or mismatched cache is recomputed and rewritten.

    Args:
        images: (N, 28, 28) uint8 array.
        cache_path: optional path for the feature cache.

    Returns:
        (N, 16) complex array, order preserved.
    """
    key = hashlib.sha256(np.ascontiguousarray(images).tobytes()).hexdigest()
    if cache_path is not None:
        cache_path = pathlib.Path(cache_path)
        if cache_path.exists():
            with np.load(cache_path, allow_pickle=False) as doc:
                if str(doc["key"]) == key:
                    return doc["features"]
    features = _features_batch(images)
    if cache_path is not None:
        cache_path.parent.mkdir(parents=True, exist_ok=True)
        np.savez(cache_path, key=np.str_(key), features=features)
    return features
