import numpy as np
import pytest
from PIL import Image

from fmap_extractor import ExtractionJob, run_job


@pytest.fixture
def verdict(request):
    """Emit a per-criterion verdict line that survives output capture.

    Returns a callable ``verdict(name, ok, detail="")`` that writes one
    PASS/FAIL line through pytest's terminal reporter (visible even while
    stdout is captured) and then asserts ``ok``.
    """
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def emit(name: str, ok: bool, detail: str = "") -> None:
        line = f"[ACCEPTANCE] {name}: {'PASS' if ok else 'FAIL'}"
        if detail:
            line += f" ({detail})"
        if reporter is not None:
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line

    return emit


@pytest.fixture(scope="session")
def image_dir(tmp_path_factory):
    """Ten decodable PNGs covering the awkward inputs.

    Five plain RGB images of assorted sizes, one all-black image (its
    saliency map is exactly zero everywhere), one grayscale image, one
    16x16 image below the upscale threshold, and two files with
    identical pixels under different names.
    """
    root = tmp_path_factory.mktemp("images")
    rng = np.random.default_rng(42)

    def save_rgb(name, h, w):
        arr = (rng.random((h, w, 3)) * 255).astype(np.uint8)
        Image.fromarray(arr).save(root / f"{name}.png")

    save_rgb("im0", 72, 88)
    save_rgb("im1", 96, 64)
    save_rgb("im2", 100, 80)
    save_rgb("im3", 64, 64)
    save_rgb("im4", 90, 120)
    Image.fromarray(np.zeros((70, 70, 3), np.uint8)).save(root / "flat.png")
    gray = (rng.random((80, 80)) * 255).astype(np.uint8)
    Image.fromarray(gray, mode="L").save(root / "gray.png")
    save_rgb("tiny", 16, 16)
    twin = (rng.random((84, 76, 3)) * 255).astype(np.uint8)
    Image.fromarray(twin).save(root / "twin_a.png")
    Image.fromarray(twin).save(root / "twin_b.png")
    return root


@pytest.fixture(scope="session")
def image_paths(image_dir):
    return tuple(sorted(image_dir.glob("*.png")))


@pytest.fixture(scope="session")
def first_run(image_paths, tmp_path_factory):
    out = tmp_path_factory.mktemp("run1")
    job = ExtractionJob(images=image_paths, out_dir=out)
    return job, run_job(job)


@pytest.fixture(scope="session")
def second_run(image_paths, tmp_path_factory):
    """The exact same job rerun into a fresh directory."""
    out = tmp_path_factory.mktemp("run2")
    job = ExtractionJob(images=image_paths, out_dir=out)
    return job, run_job(job)
