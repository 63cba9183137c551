"""8-bit grayscale frame export (PGM or PNG)."""
import os

import numpy as np

FORMATS = ("pgm", "png")


def to_uint8(frame):
    """Clamp to [0, 1], scale to 255 and round half up."""
    a = np.clip(np.asarray(frame, dtype=np.float64), 0.0, 1.0)
    return np.floor(a * 255.0 + 0.5).astype(np.uint8)


def write_pgm(path, frame):
    px = to_uint8(frame)
    h, w = px.shape
    with open(path, "wb") as fh:
        fh.write(b"P5\n%d %d\n255\n" % (w, h))
        fh.write(px.tobytes())


def read_pgm(path):
    with open(path, "rb") as fh:
        data = fh.read()
    magic, w, h, maxval, rest = data.split(maxsplit=4)
    if magic != b"P5" or int(maxval) != 255:
        raise ValueError(f"{path}: not an 8-bit binary PGM")
    return np.frombuffer(rest, dtype=np.uint8, count=int(w) * int(h)).reshape(int(h), int(w))


def write_png(path, frame):
    from PIL import Image

    Image.fromarray(to_uint8(frame), mode="L").save(path)


def export_frames(cube, directory, fmt="pgm", prefix="frame"):
    """Write one grayscale image per frame; returns the written paths."""
    fmt = fmt.lower()
    if fmt not in FORMATS:
        raise ValueError(f"unknown image format {fmt!r}; expected one of {FORMATS}")
    cube = np.asarray(cube, dtype=np.float64)
    if cube.ndim == 2:
        cube = cube[None]
    os.makedirs(directory, exist_ok=True)
    width = max(3, len(str(cube.shape[0] - 1)))
    writer = write_pgm if fmt == "pgm" else write_png
    paths = []
    for k, frame in enumerate(cube):
        path = os.path.join(directory, f"{prefix}_{k:0{width}d}.{fmt}")
        writer(path, frame)
        paths.append(path)
    return paths


def snapshot_callback(directory, every, fmt="pgm", frames=None):
    """Solver callback exporting the current estimate every ``every`` iterations.

    Snapshots land in ``directory/iter_NNNN/``; ``frames`` restricts the
    export to a subset of frame indices.
    """
    if every < 1:
        raise ValueError("snapshot interval must be >= 1")

    def callback(t, estimate, data_iterate):
        if t % every:
            return
        sel = estimate if frames is None else estimate[list(frames)]
        export_frames(sel, os.path.join(directory, f"iter_{t:04d}"), fmt)

    return callback
