"""
Сжатое key-value хранилище сэмплов поверх LMDB.

Значение по ключу - zlib(msgpack(package)), где package:
    fields:  таблица [(name, dtype, shape, offset, nbytes), ...]
    payload: байты всех массивов подряд, little-endian
    labels:  атрибуты объектов
    texture: текстура фона
Служебный ключ __meta__ хранит DatasetInfo.
"""
import shutil
import zlib
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Sequence

import lmdb
import msgpack
import numpy as np

from gdrlab.core.exceptions import StoreExistsError, ValidationError
from gdrlab.core.logger import logger
from gdrlab.models.pipeline_models import DatasetInfo
from gdrlab.models.scene_models import SceneRecord

META_KEY = b"__meta__"
ARRAY_FIELDS = ("image", "mask", "boxes")
_FIELD_DTYPES = {"image": np.uint8, "mask": np.uint8, "boxes": np.float32}


def sample_key(index: int) -> bytes:
    return f"{index:08d}".encode("ascii")


def encode_record(record: SceneRecord) -> bytes:
    fields, chunks, offset = [], [], 0
    for name in ARRAY_FIELDS:
        array = np.ascontiguousarray(getattr(record, name), dtype=np.dtype(_FIELD_DTYPES[name]).newbyteorder("<"))
        raw = array.tobytes()
        fields.append({"name": name, "dtype": array.dtype.str, "shape": list(array.shape),
                       "offset": offset, "nbytes": len(raw)})
        chunks.append(raw)
        offset += len(raw)
    package = {"fields": fields, "payload": b"".join(chunks),
               "labels": [list(label) for label in record.labels], "texture": record.texture}
    return zlib.compress(msgpack.packb(package, use_bin_type=True))


def decode_record(blob: bytes) -> SceneRecord:
    package = msgpack.unpackb(zlib.decompress(blob), raw=False)
    payload = package["payload"]
    arrays = {}
    for field in package["fields"]:
        dtype = np.dtype(field["dtype"])
        count = field["nbytes"] // dtype.itemsize
        array = np.frombuffer(payload, dtype=dtype, count=count, offset=field["offset"])
        arrays[field["name"]] = array.reshape(field["shape"]).astype(dtype.newbyteorder("="))
    return SceneRecord(image=arrays["image"], mask=arrays["mask"], boxes=arrays["boxes"],
                       labels=[tuple(label) for label in package["labels"]], texture=package.get("texture"))


def _check_homogeneous(records: Sequence[SceneRecord]) -> None:
    shapes = {(r.image.shape, r.mask.shape) for r in records}
    if len(shapes) > 1:
        raise ValidationError("records must share image and mask shapes", {"shapes": sorted(shapes)})


def pack_dataset(records: Sequence[SceneRecord], path, overwrite: bool = False, preset: str = "") -> Path:
    """
    Пишет записи в хранилище: один ключ на сэмпл плюс __meta__.

    Raises:
        StoreExistsError: каталог существует и не пуст, а overwrite не задан.
    """
    path = Path(path)
    if path.exists() and any(path.iterdir()):
        if not overwrite:
            raise StoreExistsError("store path exists and is not empty", {"path": str(path)})
        shutil.rmtree(path)
    records = list(records)
    _check_homogeneous(records)

    blobs = [encode_record(r) for r in records]
    map_size = max(sum(len(b) for b in blobs) * 4, 1 << 24)
    path.mkdir(parents=True, exist_ok=True)

    first = records[0] if records else None
    info = DatasetInfo(
        is_video=bool(first is not None and first.is_video),
        has_boxes=True,
        resolution=first.resolution if first is not None else 0,
        num_frames=first.num_frames if first is not None else 0,
        max_objects=max((r.num_objects for r in records), default=0),
        count=len(records),
        preset=preset,
    )
    env = lmdb.open(str(path), map_size=map_size, subdir=True)
    try:
        with env.begin(write=True) as txn:
            for i, blob in enumerate(blobs):
                txn.put(sample_key(i), blob)
            txn.put(META_KEY, msgpack.packb(info.to_record(), use_bin_type=True))
    finally:
        env.close()
    logger.info(f"Packed {len(records)} records into {path}")
    return path


class SceneStore:
    """Чтение хранилища с произвольным доступом. Окружение LMDB открывается лениво (отдельно в каждом воркере)."""

    def __init__(self, path):
        self.path = Path(path)
        if not (self.path / "data.mdb").exists():
            raise ValidationError("no packed store at path", {"path": str(self.path)})
        self._env: Optional[lmdb.Environment] = None
        self._info: Optional[DatasetInfo] = None

    @property
    def env(self) -> lmdb.Environment:
        if self._env is None:
            self._env = lmdb.open(str(self.path), readonly=True, lock=False, readahead=False, subdir=True)
        return self._env

    @property
    def info(self) -> DatasetInfo:
        if self._info is None:
            with self.env.begin() as txn:
                self._info = DatasetInfo.from_record(msgpack.unpackb(txn.get(META_KEY), raw=False))
        return self._info

    def __len__(self) -> int:
        return self.info.count

    def __getitem__(self, index: int) -> SceneRecord:
        if not 0 <= index < len(self):
            raise IndexError(index)
        with self.env.begin() as txn:
            return decode_record(txn.get(sample_key(index)))

    def __iter__(self) -> Iterator[SceneRecord]:
        for i in range(len(self)):
            yield self[i]

    def keys(self) -> List[bytes]:
        with self.env.begin() as txn:
            return [key for key, _ in txn.cursor() if key != META_KEY]

    def close(self) -> None:
        if self._env is not None:
            self._env.close()
            self._env = None

    def __getstate__(self) -> Dict:
        # Окружение LMDB не переживает fork/pickle, воркер откроет своё
        state = self.__dict__.copy()
        state["_env"] = None
        return state

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.close()


def unpack_dataset(path) -> List[SceneRecord]:
    with SceneStore(path) as store:
        return list(store)
