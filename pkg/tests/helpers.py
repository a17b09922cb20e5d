"""Shared test builders."""

import numpy as np

from vmnet import Descriptor, FeatureSet, FeatureTensor, Plane, l2_normalize


def tensor_of(values) -> FeatureTensor:
    arr = np.asarray(values, dtype=np.float32)
    if arr.ndim == 2:
        arr = arr[None, :, :]
    return FeatureTensor(arr)


def plane_of(values) -> Plane:
    return Plane(np.asarray(values, dtype=np.float64))


def rand_tensor(rng, c=3, h=4, w=5, lo=0.0, hi=1.0) -> FeatureTensor:
    return FeatureTensor(rng.uniform(lo, hi, size=(c, h, w)).astype(np.float32))


def unit_descriptor(rng, dim) -> Descriptor:
    return l2_normalize(Descriptor(rng.normal(size=dim).astype(np.float32)))


def rand_feature_set(rng, image_id, last_dim=8, middle_dim=6) -> FeatureSet:
    return FeatureSet(
        image_id,
        unit_descriptor(rng, last_dim),
        unit_descriptor(rng, last_dim),
        unit_descriptor(rng, middle_dim),
    )
