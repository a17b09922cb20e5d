"""Convolutional backbone wrapper with two feature taps.

Wraps a torchvision classification model and exposes the activations of
two named stages: a middle stage (earlier, higher spatial resolution)
and the last convolutional stage. Both taps must be post-activation, so
the emitted feature maps are non-negative; this is checked at runtime.

Inference is configured for bit-identical reruns: single thread,
deterministic kernels only, and (in ``random`` weights mode) a seeded
parameter initialization, so the same image always produces the same
bytes on disk.
"""

from __future__ import annotations

import numpy as np
import torch

from .errors import ExtractorError

_DETERMINISM_SET = False


class ModelUnavailableError(ExtractorError):
    """The requested backbone or its weights cannot be loaded. Fatal."""


def _configure_determinism() -> None:
    global _DETERMINISM_SET
    if _DETERMINISM_SET:
        return
    torch.set_num_threads(1)
    torch.use_deterministic_algorithms(True)
    # The oneDNN path may pick layout-dependent kernels; the reference
    # path is slower but stable across runs, which is the contract here.
    torch.backends.mkldnn.enabled = False
    _DETERMINISM_SET = True


class FeatureBackbone:
    """A named torchvision model with ``middle`` and ``last`` taps.

    Parameters
    ----------
    name:
        torchvision model identifier, e.g. ``"resnet18"``.
    weights:
        ``"pretrained"`` loads the packaged default checkpoint (fatal if
        it cannot be found or fetched); ``"random"`` draws a fresh
        initialization from ``seed``, which is enough for format and
        determinism testing without any checkpoint on disk.
    seed:
        RNG seed for ``random`` weights.
    middle_tap / last_tap:
        Stage names inside the model. The middle tap must sit earlier in
        the network than the last tap, so its grid is at least as large.
    """

    def __init__(
        self,
        name: str = "resnet18",
        weights: str = "random",
        seed: int = 0,
        middle_tap: str = "layer3",
        last_tap: str = "layer4",
    ) -> None:
        if weights not in ("pretrained", "random"):
            raise ValueError(f"weights must be 'pretrained' or 'random', got {weights!r}")
        _configure_determinism()
        from torchvision import models
        from torchvision.models.feature_extraction import create_feature_extractor

        if weights == "random":
            torch.manual_seed(seed)
        try:
            model = models.get_model(
                name, weights="DEFAULT" if weights == "pretrained" else None
            )
        except ValueError as exc:
            raise ModelUnavailableError(f"unknown backbone {name!r}: {exc}") from exc
        except Exception as exc:  # checkpoint download/read failure
            raise ModelUnavailableError(
                f"weights for backbone {name!r} unavailable: {exc}"
            ) from exc

        model.eval()
        model.requires_grad_(False)
        try:
            self._extractor = create_feature_extractor(
                model, return_nodes={middle_tap: "middle", last_tap: "last"}
            )
        except ValueError as exc:
            stages = ", ".join(n for n, _ in model.named_children())
            raise ValueError(
                f"tap not found in {name!r} ({exc}); top-level stages: {stages}"
            ) from exc

        self.name = name
        self.weights = weights
        self.seed = seed
        self.middle_tap = middle_tap
        self.last_tap = last_tap

    def feature_maps(self, chw: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Run one preprocessed (3, H, W) image; return (last, middle) maps.

        Both returned arrays are float32 (C, H, W) activations. Raises if
        a tap yields negative values, which means it is not a
        post-activation stage and would break downstream pooling.
        """
        if chw.ndim != 3 or chw.shape[0] != 3:
            raise ValueError(f"expected a (3, H, W) array, got shape {chw.shape}")
        batch = torch.from_numpy(np.ascontiguousarray(chw, dtype=np.float32))[None]
        with torch.no_grad():
            out = self._extractor(batch)
        maps = {}
        for key, tap in (("last", self.last_tap), ("middle", self.middle_tap)):
            arr = out[key][0].numpy().astype(np.float32, copy=False)
            if (arr < 0).any():
                raise ValueError(
                    f"tap {tap!r} produced negative activations; "
                    "choose a post-activation stage"
                )
            maps[key] = arr
        return maps["last"], maps["middle"]
