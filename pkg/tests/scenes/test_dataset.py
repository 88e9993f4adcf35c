import numpy as np
import pytest
import torch

from gdrlab.core.exceptions import ValidationError
from gdrlab.models.scene_models import AttributeVocabulary
from gdrlab.resources.presets import Presets
from gdrlab.resources.scenes import SceneDataset, generate_video, pad_boxes, preprocess
from gdrlab.utils.generators import Generates


@pytest.fixture(scope="module")
def video():
    vocab = AttributeVocabulary.from_preset(Presets.DESK)
    return generate_video(vocab, 3, 10, 32, Generates.numpy_rng(2), max_speed=2.0)


class TestPreprocess:

    @pytest.mark.smoke
    @pytest.mark.pc
    def test_image_normalization(self, image_store):
        dataset = SceneDataset(image_store, training=True, num_slots=5)
        record = dataset.record(0)
        sample = dataset[0]
        assert sample["image"].shape == (3, 32, 32)
        expected = (torch.from_numpy(record.image).permute(2, 0, 1).float() - 127.5) / 127.5
        assert torch.allclose(sample["image"], expected)
        assert sample["image"].min() >= -1 and sample["image"].max() <= 1
        assert sample["mask"].dtype == torch.int64
        assert sample["boxes"].shape == (5, 4)
        dataset.close()

    @pytest.mark.pc
    def test_pad_boxes(self):
        boxes = np.array([[0.1, 0.1, 0.5, 0.5], [0.2, 0.2, 0.4, 0.6]], dtype=np.float32)
        padded = pad_boxes(boxes, 4)
        assert padded.shape == (4, 4)
        assert np.array_equal(padded[:2], boxes)
        assert not padded[2:].any()
        assert pad_boxes(np.zeros((6, 2, 4)), 3).shape == (6, 3, 4)

    @pytest.mark.pc
    def test_training_crop_is_shared(self, video):
        sample = preprocess(video, training=True, num_slots=4, rng=Generates.numpy_rng(0), time_window=6)
        assert sample.image.shape == (6, 3, 32, 32)
        assert sample.mask.shape == (6, 32, 32)
        assert sample.boxes.shape == (6, 4, 4)

        start = next(s for s in range(5) if np.array_equal(video.mask[s:s + 6], sample.mask.numpy()))
        assert np.allclose(sample.boxes[:, :3].numpy(), video.boxes[start:start + 6])
        expected = (video.image[start:start + 6].astype(np.float32) - 127.5) / 127.5
        assert np.allclose(sample.image.permute(0, 2, 3, 1).numpy(), expected)

    @pytest.mark.pc
    def test_evaluation_keeps_every_frame(self, video):
        sample = preprocess(video, training=False, num_slots=4)
        assert sample.image.shape[0] == 10

    @pytest.mark.nc
    def test_video_shorter_than_window(self, video):
        with pytest.raises(ValidationError):
            preprocess(video, training=True, num_slots=4, time_window=12)

    @pytest.mark.nc
    def test_more_boxes_than_slots(self, video):
        with pytest.raises(ValidationError):
            preprocess(video, training=False, num_slots=2)


class TestSceneDataset:

    @pytest.mark.pc
    def test_crops_depend_on_seed_epoch_and_index(self, video_store):
        first = SceneDataset(video_store, training=True, num_slots=5, seed=3)
        second = SceneDataset(video_store, training=True, num_slots=5, seed=3)
        for i in range(len(first)):
            assert torch.equal(first[i]["image"], second[i]["image"])
        first.set_epoch(1)
        second.set_epoch(1)
        assert torch.equal(first[0]["mask"], second[0]["mask"])
        first.close()
        second.close()

    @pytest.mark.pc
    def test_info_passthrough(self, video_store):
        dataset = SceneDataset(video_store, training=False, num_slots=5)
        assert dataset.info.is_video
        assert len(dataset) == 4
        assert dataset[0]["image"].shape == (6, 3, 32, 32)
        dataset.close()

    @pytest.mark.pc
    def test_loader_batches(self, lab_context, image_store):
        data = lab_context.tools_manager.data
        loader = data.loader(data.open_dataset(image_store, training=False), shuffle=False, batch_size=4)
        batch = next(iter(loader))
        assert batch["image"].shape == (4, 3, 32, 32)
        assert batch["boxes"].shape == (4, 5, 4)
