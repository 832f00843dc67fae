import json
import struct
import numpy as np

from .checkpoint import MAGIC, Checkpoint


def dumps(checkpoint: Checkpoint) -> bytes:
    config = json.dumps(checkpoint.config, sort_keys=True).encode("utf-8")
    chunks = [
        MAGIC,
        struct.pack("<IQ", checkpoint.version, checkpoint.seed),
        struct.pack("<I", len(config)),
        config,
        struct.pack("<I", len(checkpoint.params)),
    ]
    # 名前順に並べて毎回同じバイト列にする
    for name in sorted(checkpoint.params):
        value = np.ascontiguousarray(checkpoint.params[name], dtype="<f8")
        encoded = name.encode("utf-8")
        chunks.append(struct.pack("<H", len(encoded)))
        chunks.append(encoded)
        chunks.append(struct.pack("<B", value.ndim))
        chunks.append(struct.pack(f"<{value.ndim}I", *value.shape))
        chunks.append(value.tobytes())
    return b"".join(chunks)


def export(path: str, checkpoint: Checkpoint):
    with open(path, "wb") as f:
        f.write(dumps(checkpoint))
