import numpy as np
import pytest

from angiodiff import _kernels
from angiodiff.features import (
    FeatureError,
    FilterBankExtractor,
    InceptionExtractor,
    MomentExtractor,
    extract_features,
    get_extractor,
)


class TestMomentExtractor:
    def test_constant_image(self):
        img = np.full((16, 16), 0.7)
        row = MomentExtractor()([img])[0]
        # (mean, std, gradient energy, centroid) = (c, 0, 0, center)
        np.testing.assert_allclose(row, [0.7, 0.0, 0.0, 0.5], atol=1e-12)

    def test_all_zero_image_centroid_defaults_to_center(self):
        row = MomentExtractor()([np.zeros((8, 8))])[0]
        assert row[3] == 0.5

    def test_off_center_mass_moves_centroid(self):
        img = np.zeros((32, 32))
        img[24:, 24:] = 1.0  # bright lower-right corner
        row = MomentExtractor()([img])[0]
        assert row[3] > 0.5


class TestFilterBankExtractor:
    def test_dim_and_determinism(self):
        ex = FilterBankExtractor()
        rng = np.random.default_rng(0)
        img = rng.random((64, 64))
        rows = ex([img, img])
        assert rows.shape == (2, 32)
        np.testing.assert_array_equal(rows[0], rows[1])

    def test_resizes_larger_inputs(self):
        ex = FilterBankExtractor()
        rng = np.random.default_rng(1)
        rows = ex([rng.random((128, 128))])
        assert rows.shape == (1, 32)
        assert np.all(np.isfinite(rows))

    def test_histogram_sums_to_one(self):
        ex = FilterBankExtractor()
        rng = np.random.default_rng(2)
        row = ex([rng.random((64, 64))])[0]
        assert row[24:32].sum() == pytest.approx(1.0)

    def test_distinguishes_structures(self):
        flat = np.full((64, 64), 0.5)
        stripes = np.tile(np.array([0.0, 1.0] * 32), (64, 1))
        rows = FilterBankExtractor()([flat, stripes])
        assert np.linalg.norm(rows[0] - rows[1]) > 0.1


class TestKernelPaths:
    """The jitted kernel and the interpreted fallback must agree exactly."""

    def test_filterbank_jit_matches_python(self):
        rng = np.random.default_rng(3)
        img = rng.random((64, 64))
        jit = _kernels.filterbank_features(img, 4, 8, 8)
        ref = _kernels.filterbank_features_py(img, 4, 8, 8)
        np.testing.assert_array_equal(jit, ref)

    def test_box_resize_jit_matches_python(self):
        rng = np.random.default_rng(4)
        img = rng.random((96, 96))
        np.testing.assert_array_equal(_kernels.box_resize(img, 64),
                                      _kernels.box_resize_py(img, 64))

    def test_draw_segments_jit_matches_python(self):
        segs = np.array([
            [5.0, 5.0, 50.0, 40.0, 2.0, 1.0],
            [20.0, 50.0, 20.0, 10.0, 1.5, 0.7],
            [0.0, 0.0, 63.0, 63.0, 0.8, 0.4],
        ])
        a = _kernels.draw_segments(np.zeros((64, 64)), segs)
        b = _kernels.draw_segments_py(np.zeros((64, 64)), segs)
        np.testing.assert_array_equal(a, b)

    def test_box_resize_identity(self):
        rng = np.random.default_rng(5)
        img = rng.random((32, 32))
        np.testing.assert_allclose(_kernels.box_resize(img, 32), img, atol=1e-15)


class TestRegistryAndIO:
    def test_get_extractor(self):
        assert get_extractor("toy-moments").dim == 4
        assert get_extractor("desk-filterbank").dim == 32
        with pytest.raises(FeatureError):
            get_extractor("nope")

    def test_inception_without_weights_names_fallback(self):
        with pytest.raises(FeatureError, match="desk-filterbank"):
            InceptionExtractor(weights_path=None)

    def test_extract_features_from_paths(self, tmp_path):
        from PIL import Image

        rng = np.random.default_rng(6)
        arr = (rng.random((64, 64)) * 255).astype(np.uint8)
        p = tmp_path / "img.png"
        Image.fromarray(arr, mode="L").save(p)
        rows = extract_features([p, arr / 255.0], FilterBankExtractor())
        np.testing.assert_allclose(rows[0], rows[1], atol=1e-12)

    def test_unreadable_image_raises(self, tmp_path):
        p = tmp_path / "broken.png"
        p.write_bytes(b"not a png")
        with pytest.raises(FeatureError):
            extract_features([p], FilterBankExtractor())
