import numpy as np
import pytest
from PIL import Image

from boxlevelset.core import BoxAnnotation, InstanceMask, InvalidArgumentError
from boxlevelset.io import (
    BoxFileError,
    ImageFormatError,
    load_boxes,
    load_image,
    load_mask,
    read_pgm,
    save_boxes,
    save_masks,
    write_pgm,
    write_png,
)
from boxlevelset.pipeline import SegmentationResult, resolve_labels
from boxlevelset.scenes import SceneSpec, Shape, evaluate_iou, generate_scene, rasterize

PGM_VALUES = np.array([[0, 255], [128, 64]])
PGM_EXPECTED = np.array([[0.0, 1.0], [128 / 255, 64 / 255]])


@pytest.mark.parametrize("binary", [True, False])
def test_pgm_scaling(tmp_path, binary):
    path = tmp_path / "a.pgm"
    write_pgm(path, PGM_VALUES, binary=binary)
    grid = load_image(path)
    assert grid.shape == (2, 2, 1)
    np.testing.assert_allclose(grid.data[:, :, 0], PGM_EXPECTED, atol=0)
    np.testing.assert_allclose(grid.data[:, :, 0], [[0, 1.0], [0.50196, 0.25098]], atol=5e-6)


def test_pgm_header_comments_and_maxval(tmp_path):
    path = tmp_path / "c.pgm"
    path.write_bytes(b"P2\n# made by hand\n3 1\n# max\n10\n0 5 10\n")
    values, maxval = read_pgm(path)
    assert maxval == 10
    np.testing.assert_array_equal(values, [[0, 5, 10]])
    np.testing.assert_allclose(load_image(path).data[0, :, 0], [0, 0.5, 1.0])


@pytest.mark.parametrize("content, message", [
    (b"P5\n2 2\n65535\n" + bytes(8), "maxval"),
    (b"P2\n2 2\n255\n1 2 3\n", "truncated"),
    (b"P2\n2 2\n255\n1 2 3 300\n", "exceeds"),
    (b"P2\n2\n", "truncated"),
])
def test_bad_pgm(tmp_path, content, message):
    path = tmp_path / "bad.pgm"
    path.write_bytes(content)
    with pytest.raises(ImageFormatError, match=message):
        load_image(path)


def test_gray_png(tmp_path):
    path = tmp_path / "g.png"
    write_png(path, PGM_VALUES)
    np.testing.assert_allclose(load_image(path).data[:, :, 0], PGM_EXPECTED)


def test_rgb_png_has_three_channels(tmp_path, rng):
    values = rng.integers(0, 256, (5, 7, 3))
    path = tmp_path / "rgb.png"
    write_png(path, values)
    grid = load_image(path)
    assert grid.shape == (5, 7, 3)
    np.testing.assert_allclose(grid.data, values / 255.0)


def test_rgba_png_drops_alpha(tmp_path):
    path = tmp_path / "rgba.png"
    Image.fromarray(np.full((3, 3, 4), 200, dtype=np.uint8), "RGBA").save(path)
    assert load_image(path).shape == (3, 3, 3)


def test_sixteen_bit_png_rejected(tmp_path):
    path = tmp_path / "deep.png"
    Image.fromarray(np.full((4, 4), 40000, dtype=np.uint16)).save(path)
    with pytest.raises(ImageFormatError, match="bit depth"):
        load_image(path)


def test_missing_and_unknown_files(tmp_path):
    with pytest.raises(FileNotFoundError):
        load_image(tmp_path / "nope.png")
    path = tmp_path / "x.bmp"
    path.write_bytes(b"BM" + bytes(40))
    with pytest.raises(ImageFormatError):
        load_image(path)


def test_load_single_box(tmp_path):
    path = tmp_path / "b.txt"
    path.write_text("1 0 0 4 4\n")
    assert load_boxes(path) == [BoxAnnotation(1, 0, 0, 4, 4)]


def test_comment_only_box_file(tmp_path):
    path = tmp_path / "b.txt"
    path.write_text("# comment\n\n")
    assert load_boxes(path) == []


@pytest.mark.parametrize("text, message", [
    ("1 4 0 2 4\n", r":1: .*x0"),
    ("# header\n1 0 0 4 4\n1 2 2 8 8\n", r":3: duplicate id 1"),
    ("1 0 0 4\n", r":1: expected 5"),
    ("1 0 0 4 4.5\n", r":1: non-integer"),
    ("1 0 0 1 1\n", r":1: "),
])
def test_malformed_box_files(tmp_path, text, message):
    path = tmp_path / "b.txt"
    path.write_text(text)
    with pytest.raises(BoxFileError, match=message):
        load_boxes(path)


def test_box_file_round_trip(tmp_path):
    boxes = [BoxAnnotation(3, 1, 2, 9, 7), BoxAnnotation(10, 0, 0, 5, 5)]
    save_boxes(tmp_path / "b.txt", boxes)
    assert load_boxes(tmp_path / "b.txt") == boxes


def _instance(id, mask):
    mask = np.asarray(mask, dtype=np.uint8)
    return InstanceMask(id, mask, [2.0, 1.5], 2, probability=mask * 0.9, final_objective=1.5)


def _result(instances, shape):
    finals = [m.final_objective for m in instances]
    return SegmentationResult(instances, float(np.mean(finals)), resolve_labels(instances, shape))


def test_save_two_instances_writes_three_pngs_and_report(tmp_path):
    a = np.zeros((10, 12)); a[1:4, 2:6] = 1
    b = np.zeros((10, 12)); b[5:9, 6:11] = 1
    save_masks(_result([_instance(1, a), _instance(2, b)], (10, 12)), tmp_path)
    assert sorted(p.name for p in tmp_path.glob("*.png")) == ["labels.png", "mask_1.png", "mask_2.png"]
    report = (tmp_path / "report.txt").read_text()
    assert "mean_objective" in report and report.count("1.5") >= 2
    labels = np.asarray(Image.open(tmp_path / "labels.png"))
    np.testing.assert_array_equal(labels, a + 2 * b)


def test_saved_mask_values(tmp_path):
    box = BoxAnnotation(1, 2, 1, 8, 6)
    full = np.zeros((8, 10)); full[box.slices] = 1
    save_masks(_result([_instance(1, full), _instance(2, np.zeros((8, 10)))], (8, 10)), tmp_path)
    one = np.asarray(Image.open(tmp_path / "mask_1.png"))
    assert one.dtype == np.uint8
    assert np.all(one[box.slices] == 255) and one.sum() == 255 * box.area
    assert not np.asarray(Image.open(tmp_path / "mask_2.png")).any()


def test_large_ids_use_sixteen_bit_labels(tmp_path):
    mask = np.zeros((4, 4)); mask[:2, :2] = 1
    save_masks(_result([_instance(300, mask)], (4, 4)), tmp_path)
    labels = np.asarray(Image.open(tmp_path / "labels.png"))
    assert labels.max() == 300


def test_unwritable_directory(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        save_masks(_result([_instance(1, np.ones((4, 4)))], (4, 4)), blocker / "sub")


def test_mask_round_trip(tmp_path, rng):
    mask = (rng.random((9, 13)) > 0.5).astype(np.uint8)
    save_masks(_result([_instance(4, mask)], mask.shape), tmp_path)
    first = load_mask(tmp_path / "mask_4.png")
    np.testing.assert_array_equal(first, mask)
    save_masks(_result([_instance(4, first)], mask.shape), tmp_path / "again")
    np.testing.assert_array_equal(load_mask(tmp_path / "again" / "mask_4.png"), mask)


def test_disk_scene_geometry(disk_scene):
    image, boxes, truths = disk_scene
    assert image.shape == (64, 64, 1)
    assert boxes == [BoxAnnotation(1, 20, 20, 44, 44)]
    assert boxes[0].width == boxes[0].height == 24
    assert set(np.unique(image.data)) == {0.1, 0.9}
    # brute-force rasterization of pixel centres inside the circle
    expected = np.array([[(c + 0.5 - 32) ** 2 + (r + 0.5 - 32) ** 2 <= 100 for c in range(64)]
                         for r in range(64)])
    np.testing.assert_array_equal(truths[0], expected)


def test_box_clipped_at_border():
    spec = SceneSpec(30, 30, [Shape("disk", (3, 27), 5, 0.8)])
    _, boxes, _ = generate_scene(spec)
    assert boxes[0].x0 == 0 and boxes[0].y1 == 30


def test_rectangle_truth_exact(rectangle_scene):
    _, boxes, truths = rectangle_scene
    expected = np.zeros((64, 64), dtype=np.uint8)
    # centre (30, 34), half-extents (12, 7): centres 18.5..41.5 x 27.5..40.5
    expected[27:41, 18:42] = 1
    np.testing.assert_array_equal(truths[0], expected)
    assert boxes[0] == BoxAnnotation(1, 16, 25, 44, 43)


def test_scene_determinism():
    spec = SceneSpec(32, 32, [Shape("ellipse", (16, 16), (8, 5), 0.7)], noise_amplitude=0.2, seed=9)
    a, b = generate_scene(spec)[0], generate_scene(spec)[0]
    np.testing.assert_array_equal(a.data, b.data)
    assert a.data.min() >= 0 and a.data.max() <= 1
    other = generate_scene(SceneSpec.from_dict({**spec.to_dict(), "seed": 10}))[0]
    assert not np.array_equal(a.data, other.data)
    noiseless = SceneSpec(32, 32, spec.shapes)
    np.testing.assert_array_equal(generate_scene(noiseless)[0].data, generate_scene(noiseless)[0].data)


def test_later_shapes_occlude_earlier():
    spec = SceneSpec(20, 20, [Shape("rectangle", (10, 10), (6, 6), 0.4),
                              Shape("disk", (10, 10), 3, 0.8)])
    image, _, truths = generate_scene(spec)
    assert image.data[10, 10, 0] == 0.8
    assert truths[0][10, 10] == 1


@pytest.mark.parametrize("bad", [
    lambda: SceneSpec(10, 10, []),
    lambda: SceneSpec(10, 10, [Shape("disk", (5, 5), 2, 0.5)], noise_amplitude=-1),
    lambda: Shape("star", (1, 1), 1, 0.5),
    lambda: Shape("disk", (1, 1), 1, 1.5),
    lambda: generate_scene(SceneSpec(10, 10, [Shape("disk", (50, 50), 2, 0.5)])),
])
def test_scene_validation(bad):
    with pytest.raises(InvalidArgumentError):
        bad()


def test_iou_examples():
    full = np.ones((4, 4))
    left = np.zeros((4, 4)); left[:, :2] = 1
    right = 1 - left
    assert evaluate_iou(full, full) == 1.0
    assert evaluate_iou(left, right) == 0.0
    assert evaluate_iou(left, full) == 0.5
    assert evaluate_iou(np.zeros((3, 3)), np.zeros((3, 3))) == 1.0
    with pytest.raises(InvalidArgumentError):
        evaluate_iou(full, np.ones((4, 5)))


def test_iou_symmetric(rng):
    for _ in range(20):
        a, b = rng.random((2, 6, 6)) > rng.random(2)[:, None, None]
        assert evaluate_iou(a, b) == evaluate_iou(b, a)


def test_rasterize_ellipse_axes():
    mask = rasterize(Shape("ellipse", (10, 10), (6, 2), 0.5), 20, 20)
    assert mask[10, 4] and not mask[10, 3]
    assert mask[8, 10] and not mask[7, 10]
