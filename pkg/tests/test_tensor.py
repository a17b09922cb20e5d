"""Core value types, normalization, resampling, and the FMAP file format."""

import struct

import numpy as np
import pytest

from vmnet import (
    Descriptor,
    FeatureTensor,
    FormatError,
    Plane,
    bilinear_resize,
    l2_normalize,
    load_plane,
    load_tensor,
    save_tensor,
)

from helpers import plane_of, rand_tensor, tensor_of


class TestFeatureTensor:
    def test_shape_accessors(self):
        t = FeatureTensor(np.zeros((3, 4, 5), dtype=np.float32))
        assert (t.channels, t.height, t.width) == (3, 4, 5)
        assert t.shape == (3, 4, 5)

    def test_casts_to_float32(self):
        t = FeatureTensor(np.ones((1, 2, 2), dtype=np.float64))
        assert t.data.dtype == np.float32

    def test_rejects_wrong_ndim(self):
        with pytest.raises(ValueError, match="3-D"):
            FeatureTensor(np.zeros((4, 5), dtype=np.float32))

    def test_rejects_empty_axis(self):
        with pytest.raises(ValueError, match="positive"):
            FeatureTensor(np.zeros((0, 4, 5), dtype=np.float32))

    def test_rejects_non_finite(self):
        bad = np.ones((1, 2, 2), dtype=np.float32)
        bad[0, 0, 0] = np.nan
        with pytest.raises(ValueError, match="non-finite"):
            FeatureTensor(bad)
        bad[0, 0, 0] = np.inf
        with pytest.raises(ValueError, match="non-finite"):
            FeatureTensor(bad)

    def test_data_is_read_only(self):
        t = FeatureTensor(np.ones((1, 2, 2), dtype=np.float32))
        with pytest.raises(ValueError):
            t.data[0, 0, 0] = 5.0

    def test_detached_from_caller_array(self):
        src = np.ones((1, 2, 2), dtype=np.float32)
        t = FeatureTensor(src)
        src[0, 0, 0] = 99.0  # caller's array stays writable...
        assert t.data[0, 0, 0] == 1.0  # ...and the tensor does not see it

    def test_equality(self):
        rng = np.random.default_rng(0)
        a = rand_tensor(rng)
        assert a == FeatureTensor(a.data)
        assert a != FeatureTensor(a.data + 1.0)
        assert a != FeatureTensor(np.zeros((1, 1, 1), dtype=np.float32))


class TestPlaneAndDescriptor:
    def test_plane_is_float64(self):
        p = Plane(np.ones((2, 3), dtype=np.float32))
        assert p.data.dtype == np.float64
        assert (p.height, p.width) == (2, 3)

    def test_plane_rejects_bad_shapes(self):
        with pytest.raises(ValueError):
            Plane(np.zeros((2, 3, 4)))
        with pytest.raises(ValueError):
            Plane(np.zeros((0, 3)))

    def test_descriptor_dim_and_dtype(self):
        d = Descriptor(np.array([3.0, 4.0]))
        assert d.dim == 2
        assert d.values.dtype == np.float32
        assert d.norm() == pytest.approx(5.0)

    def test_descriptor_rejects_bad_input(self):
        with pytest.raises(ValueError):
            Descriptor(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            Descriptor(np.zeros(0))
        with pytest.raises(ValueError, match="non-finite"):
            Descriptor(np.array([1.0, np.nan]))

    def test_unit_or_zero_predicate(self):
        assert Descriptor(np.zeros(4, dtype=np.float32)).is_unit_or_zero()
        assert Descriptor(np.array([1.0, 0.0])).is_unit_or_zero()
        assert not Descriptor(np.array([1.0, 1.0])).is_unit_or_zero()

    def test_not_hashable(self):
        with pytest.raises(TypeError):
            hash(Descriptor(np.array([1.0])))
        with pytest.raises(TypeError):
            hash(Plane(np.zeros((1, 1))))
        with pytest.raises(TypeError):
            hash(FeatureTensor(np.zeros((1, 1, 1))))


class TestL2Normalize:
    def test_random_vectors_become_unit(self):
        rng = np.random.default_rng(42)
        for _ in range(50):
            v = Descriptor(rng.normal(size=rng.integers(1, 40)).astype(np.float32))
            out = l2_normalize(v)
            assert abs(out.norm() - 1.0) < 1e-6

    def test_direction_preserved(self):
        out = l2_normalize(Descriptor(np.array([3.0, 4.0])))
        np.testing.assert_allclose(out.values, [0.6, 0.8], atol=1e-7)

    def test_zero_vector_stays_zero(self):
        out = l2_normalize(Descriptor(np.zeros(5, dtype=np.float32)))
        assert out.is_zero()

    def test_tiny_vector_collapses_to_zero(self):
        out = l2_normalize(Descriptor(np.full(3, 1e-30, dtype=np.float32)))
        assert out.is_zero()


class TestBilinearResize:
    def test_identity_when_dims_match(self):
        rng = np.random.default_rng(7)
        p = Plane(rng.uniform(size=(5, 9)))
        out = bilinear_resize(p, 5, 9)
        np.testing.assert_array_equal(out.data, p.data)

    def test_hand_case_1x2_to_1x4(self):
        out = bilinear_resize(plane_of([[0.0, 1.0]]), 1, 4)
        np.testing.assert_allclose(out.data[0], [0.0, 0.25, 0.75, 1.0], atol=1e-12)

    def test_constant_plane_stays_constant(self):
        out = bilinear_resize(Plane(np.full((3, 4), 0.7)), 11, 6)
        np.testing.assert_allclose(out.data, 0.7, atol=1e-12)

    def test_output_within_source_range(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            src = Plane(rng.uniform(-5, 5, size=(rng.integers(1, 9), rng.integers(1, 9))))
            out = bilinear_resize(src, int(rng.integers(1, 15)), int(rng.integers(1, 15)))
            assert out.data.min() >= src.data.min() - 1e-12
            assert out.data.max() <= src.data.max() + 1e-12

    def test_matches_opencv(self):
        cv2 = pytest.importorskip("cv2")
        rng = np.random.default_rng(13)
        for _ in range(20):
            h, w = rng.integers(2, 12, size=2)
            out_h, out_w = rng.integers(1, 20, size=2)
            src = rng.uniform(size=(h, w))
            ours = bilinear_resize(Plane(src), int(out_h), int(out_w)).data
            ref = cv2.resize(src, (int(out_w), int(out_h)), interpolation=cv2.INTER_LINEAR)
            np.testing.assert_allclose(ours, ref, atol=1e-5)

    def test_rejects_bad_targets(self):
        p = Plane(np.zeros((2, 2)))
        with pytest.raises(ValueError):
            bilinear_resize(p, 0, 3)
        with pytest.raises(ValueError):
            bilinear_resize(p, 3, -1)


class TestFmapFormat:
    def test_round_trip_bit_exact(self, tmp_path):
        rng = np.random.default_rng(42)
        t = rand_tensor(rng, c=6, h=7, w=5, lo=-2.0, hi=2.0)
        path = tmp_path / "t.fmap"
        save_tensor(t, path)
        back = load_tensor(path)
        assert back == t
        assert back.data.dtype == np.float32

    def test_resave_is_byte_identical(self, tmp_path):
        rng = np.random.default_rng(1)
        t = rand_tensor(rng)
        a, b = tmp_path / "a.fmap", tmp_path / "b.fmap"
        save_tensor(t, a)
        save_tensor(load_tensor(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_on_disk_layout(self, tmp_path):
        t = tensor_of([[[1.5, -2.0], [0.0, 3.25]]])
        path = tmp_path / "t.fmap"
        save_tensor(t, path)
        raw = path.read_bytes()
        assert raw[:4] == b"FMAP"
        assert struct.unpack_from("<IIIII", raw, 4) == (1, 3, 1, 2, 2)
        assert len(raw) == 24 + 4 * 4
        np.testing.assert_array_equal(
            np.frombuffer(raw[24:], dtype="<f4"), [1.5, -2.0, 0.0, 3.25]
        )

    def _write(self, tmp_path, blob):
        path = tmp_path / "bad.fmap"
        path.write_bytes(blob)
        return path

    def test_rejects_bad_magic(self, tmp_path):
        path = self._write(tmp_path, b"JUNK" + b"\x00" * 40)
        with pytest.raises(FormatError, match="magic"):
            load_tensor(path)

    def test_rejects_truncated_header(self, tmp_path):
        path = self._write(tmp_path, b"FMAP\x01\x00")
        with pytest.raises(FormatError, match="truncated header"):
            load_tensor(path)

    def test_rejects_unknown_version(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 9, 3, 1, 1, 1) + b"\x00" * 4
        with pytest.raises(FormatError, match="version"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_wrong_ndim(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 1, 2, 1, 1, 1) + b"\x00" * 4
        with pytest.raises(FormatError, match="ndim"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_zero_dim(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 1, 3, 1, 0, 1)
        with pytest.raises(FormatError, match="zero dimension"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_implausible_dims(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 1, 3, 2**30, 2**20, 2**20)
        with pytest.raises(FormatError, match="overflow"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_truncated_payload(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 1, 3, 1, 2, 2) + b"\x00" * 8
        with pytest.raises(FormatError, match="truncated payload"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_trailing_bytes(self, tmp_path):
        blob = b"FMAP" + struct.pack("<IIIII", 1, 3, 1, 1, 1) + b"\x00" * 8
        with pytest.raises(FormatError, match="trailing"):
            load_tensor(self._write(tmp_path, blob))

    def test_rejects_non_finite_payload(self, tmp_path):
        payload = struct.pack("<f", float("nan"))
        blob = b"FMAP" + struct.pack("<IIIII", 1, 3, 1, 1, 1) + payload
        with pytest.raises(FormatError, match="non-finite"):
            load_tensor(self._write(tmp_path, blob))


class TestLoadPlane:
    def test_single_channel_round_trip(self, tmp_path):
        rng = np.random.default_rng(5)
        values = rng.uniform(size=(1, 4, 6)).astype(np.float32)
        path = tmp_path / "s.fmap"
        save_tensor(FeatureTensor(values), path)
        p = load_plane(path)
        assert (p.height, p.width) == (4, 6)
        np.testing.assert_array_equal(p.data, values[0].astype(np.float64))

    def test_rejects_multi_channel(self, tmp_path):
        path = tmp_path / "m.fmap"
        save_tensor(FeatureTensor(np.zeros((2, 2, 2), dtype=np.float32)), path)
        with pytest.raises(FormatError, match="single-channel"):
            load_plane(path)
