import json

import numpy as np
import pytest

from scengen.archive import (
    FORMAT_VERSION,
    ModelArchive,
    decode_tensor,
    encode_tensor,
    load_archive,
    save_archive,
)
from scengen.autoencoder import AutoEncoder
from scengen.dataset import fit_normalizer
from scengen.errors import DataError
from scengen.generator import MmdConfig, ScenarioGenerator, sample_noise

from .conftest import make_samples


@pytest.fixture
def archive():
    ae = AutoEncoder.create(seed=1)
    ae.trained = True
    gen = ScenarioGenerator.create(seed=2)
    gen.mmd_config = MmdConfig(bandwidth=0.37, batch_size=32)
    normalizer = fit_normalizer(make_samples(10))
    return ModelArchive.from_models(ae, gen, normalizer, {"seeds": {"split": 1}, "test_dates": ["2011-07-17"]})


def test_tensor_encoding_is_bitwise(rng):
    tensor = rng.normal(size=(3, 4, 2))
    tensor[0, 0, 0] = 1e-310
    decoded = decode_tensor(encode_tensor(tensor))
    assert decoded.shape == tensor.shape
    assert decoded.tobytes() == tensor.tobytes()


def test_tensor_with_wrong_dtype_is_rejected():
    payload = encode_tensor(np.zeros(2))
    payload["dtype"] = "<f4"
    with pytest.raises(DataError, match="dtype"):
        decode_tensor(payload)


def test_tensor_with_short_payload_is_rejected():
    payload = encode_tensor(np.zeros(4))
    payload["shape"] = [5]
    with pytest.raises(DataError, match="bytes"):
        decode_tensor(payload)


def test_save_load_round_trip_is_bitwise(archive, tmp_path):
    path = save_archive(archive, tmp_path / "model.json")
    loaded = load_archive(path)

    assert loaded.format_version == FORMAT_VERSION
    assert loaded.tensors.keys() == archive.tensors.keys()
    for key, value in archive.tensors.items():
        assert loaded.tensors[key].tobytes() == value.tobytes(), key
    assert loaded.normalizer == archive.normalizer
    assert loaded.metadata == archive.metadata
    assert loaded.to_bytes() == path.read_bytes()


def test_loaded_generator_reproduces_output(archive, tmp_path):
    loaded = load_archive(save_archive(archive, tmp_path / "model.json"))
    original = archive.build_generator()
    rebuilt = loaded.build_generator()

    noise = sample_noise(4, original.noise_dim, seed=9)
    assert rebuilt.generate(noise).tobytes() == original.generate(noise).tobytes()
    assert rebuilt.mmd_config == MmdConfig(bandwidth=0.37, batch_size=32)


def test_loaded_autoencoder_is_trained_and_frozen(archive):
    ae = archive.build_autoencoder()
    assert ae.trained and ae.frozen
    assert ae.latent_dim == 16


def test_digest_is_stable(archive, tmp_path):
    first = archive.digest()
    assert len(first) == 64
    assert load_archive(save_archive(archive, tmp_path / "a.json")).digest() == first


def test_canonical_bytes_sort_keys(archive):
    text = archive.to_bytes().decode("utf-8")
    assert text.startswith('{"architecture":')
    assert ", " not in text and ": " not in text


def test_wrong_format_version_is_rejected(archive, tmp_path):
    data = archive.to_dict()
    data["format_version"] = FORMAT_VERSION + 1
    path = tmp_path / "future.json"
    path.write_text(json.dumps(data))
    with pytest.raises(DataError, match="Unsupported archive format_version"):
        load_archive(path)


def test_missing_section_is_corrupt(archive, tmp_path):
    data = archive.to_dict()
    del data["normalizer"]
    path = tmp_path / "partial.json"
    path.write_text(json.dumps(data))
    with pytest.raises(DataError, match="Corrupt model archive"):
        load_archive(path)


def test_truncated_file_is_rejected(archive, tmp_path):
    path = save_archive(archive, tmp_path / "model.json")
    path.write_bytes(path.read_bytes()[:500])
    with pytest.raises(DataError, match="not valid JSON"):
        load_archive(path)


def test_non_object_json_is_rejected(tmp_path):
    path = tmp_path / "list.json"
    path.write_text("[1, 2, 3]")
    with pytest.raises(DataError, match="not a JSON object"):
        load_archive(path)


def test_missing_file_is_rejected(tmp_path):
    with pytest.raises(DataError, match="Cannot read"):
        load_archive(tmp_path / "nowhere.json")


def test_missing_tensor_fails_on_build(archive):
    del archive.tensors["generator.2.kernels"]
    with pytest.raises(DataError, match="generator.2"):
        archive.build_generator()


def test_reshaped_tensor_fails_on_build(archive):
    archive.tensors["encoder.0.weights"] = np.zeros((72, 63))
    with pytest.raises(DataError):
        archive.build_autoencoder()


def test_trained_run_archive_carries_run_metadata(trained_run):
    _, result = trained_run
    metadata = result.archive.metadata
    assert set(metadata) >= {"config", "seeds", "epochs", "learning_rates", "final_losses",
                             "train_dates", "test_dates"}
    assert "data_path" not in metadata["config"]
    assert not set(metadata["train_dates"]) & set(metadata["test_dates"])


def test_noise_width_must_match_input_layer(archive):
    archive.architecture["generator"]["noise_dim"] = 50
    with pytest.raises(DataError, match="layer 0"):
        archive.build_generator()


def test_unknown_architecture_is_rejected(archive):
    archive.architecture["generator"]["architecture"] = "tconv9"
    with pytest.raises(DataError, match="Unknown generator architecture"):
        archive.build_generator()


def test_dense_generator_round_trips(tmp_path):
    ae = AutoEncoder.create(seed=1)
    ae.trained = True
    gen = ScenarioGenerator.create(seed=4, architecture="dense2")
    gen.mmd_config = MmdConfig(bandwidth=1.5, consistency=0.0)
    archive = ModelArchive.from_models(ae, gen, fit_normalizer(make_samples(10)), {})

    rebuilt = load_archive(save_archive(archive, tmp_path / "dense.json")).build_generator()
    noise = sample_noise(3, gen.noise_dim, seed=0)
    assert rebuilt.architecture == "dense2"
    assert rebuilt.mmd_config == gen.mmd_config
    assert rebuilt.generate(noise).tobytes() == gen.generate(noise).tobytes()
