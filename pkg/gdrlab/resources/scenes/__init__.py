from .renderer import generate_scene, generate_video, sample_num_objects, draw_shape, render_background
from .store import pack_dataset, unpack_dataset, SceneStore, encode_record, decode_record
from .dataset import preprocess, pad_boxes, SceneDataset, PreparedSample
