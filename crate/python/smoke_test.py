"""Smoke test for the regiongem Python module: build, save, load and query a tiny index."""

import os
import sys
import tempfile

from PIL import Image

import regiongem


def write_blob(path, color, size=(48, 40)):
    img = Image.new("RGB", size, (235, 235, 230))
    w, h = size
    for y in range(h // 4, 3 * h // 4):
        for x in range(w // 4, 3 * w // 4):
            img.putpixel((x, y), color)
    img.save(path)


def main():
    assert regiongem.region_names() == ["rTl", "rTr", "rBr", "rBl", "ellipseC"]
    assert regiongem.make_region_spec(100, 100) == (50, 50, 35, 35)
    assert regiongem.region_pixel_counts(100, 100) == [1572, 1537, 1501, 1537, 3853]
    h, s, v = regiongem.rgb_to_hsv(0, 255, 0)
    assert (round(h), s, v) == (120, 1.0, 1.0)
    assert regiongem.chi_square([0.5, 0.5, 0.0], [0.5, 0.5, 0.0]) == 0.0

    cfg = regiongem.BinConfig()
    assert cfg.feature_len() == 2100
    try:
        regiongem.BinConfig(hue_bins=0)
    except ValueError:
        pass
    else:
        raise AssertionError("zero bins accepted")

    colors = {"red": (200, 20, 20), "green": (20, 180, 40), "blue": (30, 40, 210)}
    with tempfile.TemporaryDirectory() as root:
        data = os.path.join(root, "data")
        for label, color in colors.items():
            os.makedirs(os.path.join(data, label))
            for i in range(3):
                shade = tuple(max(0, c - 3 * i) for c in color)
                write_blob(os.path.join(data, label, f"{i}.png"), shade)
        with open(os.path.join(data, "green", "broken.png"), "wb") as f:
            f.write(b"not a png")

        index, skipped = regiongem.FeatureIndex.build(data)
        assert len(index) == 9, len(index)
        assert len(skipped) == 1 and skipped[0].endswith("broken.png")
        assert index.class_labels() == ["blue", "green", "red"]

        path = os.path.join(root, "tiny.idx")
        index.save(path)
        loaded = regiongem.FeatureIndex.load(path)
        assert loaded.image_ids() == index.image_ids()

        query = os.path.join(data, "red", "0.png")
        hits = loaded.query_path(query, k=3)
        assert hits[0] == ("red/0.png", 0.0, "red"), hits
        assert all(label == "red" for _, _, label in hits)
        with open(query, "rb") as f:
            assert loaded.query_bytes(f.read(), k=3) == hits

        feature = regiongem.describe_path(query)
        assert len(feature) == 2100
        assert abs(sum(feature) - 5.0) < 1e-9
        assert feature == loaded.feature("red/0.png")

        try:
            regiongem.FeatureIndex.load(os.path.join(root, "missing.idx"))
        except OSError:
            pass
        else:
            raise AssertionError("missing index loaded")

    print("python smoke test ok:", regiongem.FeatureIndex.__name__, cfg)
    return 0


if __name__ == "__main__":
    sys.exit(main())
