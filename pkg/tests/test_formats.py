import numpy as np
import pytest

from tpam import formats
from tpam.spiking import SpikeRaster


class TestContainers:
    def test_matrix_round_trip(self, tmp_path):
        rng = np.random.default_rng(0)
        W = rng.normal(size=(7, 5)) + 1j * rng.normal(size=(7, 5))
        formats.save_complex(tmp_path / "w.tpam", W)
        np.testing.assert_array_equal(formats.load_complex(tmp_path / "w.tpam"), W)

    def test_vector_round_trip(self, tmp_path):
        z = np.exp(1j * np.arange(6.0))
        formats.save_complex(tmp_path / "z.tpam", z)
        np.testing.assert_array_equal(formats.load_complex(tmp_path / "z.tpam"), z)

    def test_header_layout(self, tmp_path):
        formats.save_complex(tmp_path / "w.tpam", np.zeros((2, 3)))
        data = (tmp_path / "w.tpam").read_bytes()
        assert data[:4] == b"TPAM" and len(data) == 24 + 6 * 16

    def test_bad_magic(self, tmp_path):
        (tmp_path / "x").write_bytes(b"NOPE" + bytes(40))
        with pytest.raises(formats.FormatError):
            formats.load_complex(tmp_path / "x")

    def test_truncated(self, tmp_path):
        formats.save_complex(tmp_path / "w.tpam", np.ones((4, 4)))
        data = (tmp_path / "w.tpam").read_bytes()
        (tmp_path / "t").write_bytes(data[:-8])
        with pytest.raises(formats.FormatError):
            formats.load_complex(tmp_path / "t")


class TestCsv:
    def test_weights(self):
        W = np.array([[0, 1 + 2j], [1 - 2j, 0]])
        text = "# run abc\n" + formats.weights_to_csv(W)
        np.testing.assert_array_equal(formats.weights_from_csv(text), W)

    def test_weights_missing_shape(self):
        with pytest.raises(formats.FormatError):
            formats.weights_from_csv("i,j,re,im\n")

    def test_state(self):
        z = np.array([0, 1j, -1, np.exp(0.3j)])
        np.testing.assert_array_equal(formats.state_from_csv("# note\n" + formats.state_to_csv(z)), z)

    def test_raster(self):
        r = SpikeRaster([2, 0, 1], [0.3, 0.1, 0.1], 1.5, 0.2)
        back = formats.raster_from_csv("# config x\n" + formats.raster_to_csv(r))
        assert back.events == r.events and back.duration == 1.5 and back.T == 0.2


class TestBinary:
    def test_raster(self, tmp_path):
        r = SpikeRaster(np.arange(10) % 3, np.linspace(0, 1, 10), 2.0, 0.25)
        formats.save_raster(tmp_path / "r.spk", r)
        back = formats.load_raster(tmp_path / "r.spk")
        assert back.events == r.events and (back.duration, back.T) == (2.0, 0.25)

    def test_raster_empty(self, tmp_path):
        formats.save_raster(tmp_path / "r.spk", SpikeRaster.empty(1.0))
        assert len(formats.load_raster(tmp_path / "r.spk")) == 0

    def test_ppm(self, tmp_path):
        img = np.random.default_rng(0).integers(0, 256, size=(7, 9, 3), dtype=np.uint8)
        formats.write_ppm(tmp_path / "a.ppm", img, comment="hash 123\nsecond")
        np.testing.assert_array_equal(formats.read_ppm(tmp_path / "a.ppm"), img)

    def test_ppm_rejects_ascii(self, tmp_path):
        (tmp_path / "a.ppm").write_bytes(b"P3\n1 1\n255\n0 0 0\n")
        with pytest.raises(formats.FormatError):
            formats.read_ppm(tmp_path / "a.ppm")

    def test_tensor(self, tmp_path):
        P = np.random.default_rng(1).normal(size=(432, 20)).astype(np.float32)
        formats.save_tensor(tmp_path / "p.bin", P)
        np.testing.assert_array_equal(formats.load_tensor(tmp_path / "p.bin"), P)
        assert (tmp_path / "p.bin").stat().st_size == 8 + 432 * 20 * 4
