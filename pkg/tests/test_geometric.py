from __future__ import annotations

import pytest

from fieldvision.errors import AmbiguousShapeError, ConfigError
from fieldvision.geometric import (
    HsvRange,
    Mask,
    circularity,
    classify_arrow,
    detect_arrows,
    detect_line,
    detect_round,
    find_contours,
    load_builtin_profile,
    parse_profile,
    rgb_to_hsv,
    segment,
)
from conftest import (
    BLUE_ARROW,
    GREEN,
    ORANGE_BRIGHT,
    ORANGE_DIM,
    RED,
    TEST_PROFILE_TEXT,
    arrow_polygon,
    draw_disk,
    draw_split_disk,
    fill_polygon,
    single_range_profile,
    solid_image,
    test_profile,
)


def test_rgb_to_hsv_reference_points():
    assert rgb_to_hsv(255, 0, 0) == (0.0, 1.0, 1.0)
    assert rgb_to_hsv(0, 0, 0) == (0.0, 0.0, 0.0)
    h, s, v = rgb_to_hsv(128, 128, 0)
    assert h == pytest.approx(60.0)
    assert s == pytest.approx(1.0)
    assert v == pytest.approx(128 / 255)


def test_hsv_range_wraparound():
    r = HsvRange(h_lo=350.0, h_hi=10.0, s_lo=0.5, s_hi=1.0, v_lo=0.5, v_hi=1.0)
    assert r.contains(355.0, 0.8, 0.8)
    assert r.contains(5.0, 0.8, 0.8)
    assert not r.contains(180.0, 0.8, 0.8)


def test_segment_universal_and_disjoint_ranges():
    img = solid_image(20, 10, ORANGE_BRIGHT)
    full = segment(img, [HsvRange(0.0, 359.999, 0.0, 1.0, 0.0, 1.0)])
    assert full.count() == 200
    none = segment(img, [HsvRange(180.0, 200.0, 0.5, 1.0, 0.5, 1.0)])
    assert none.count() == 0


def test_segment_union_is_idempotent():
    img = solid_image(16, 16, ORANGE_BRIGHT)
    draw_disk(img, 8, 8, 5, RED)
    r = HsvRange(340.0, 20.0, 0.4, 1.0, 0.2, 1.0)
    assert segment(img, [r]) == segment(img, [r, r])


def test_segment_dual_ranges_cover_split_disk():
    img = solid_image(120, 120, GREEN)
    draw_split_disk(img, 60, 60, 30, ORANGE_BRIGHT, ORANGE_DIM)
    bright = HsvRange(15.0, 45.0, 0.5, 1.0, 0.6, 1.0)
    dim = HsvRange(15.0, 45.0, 0.5, 1.0, 0.25, 0.55)
    full = segment(img, [bright, dim]).count()
    top = segment(img, [bright]).count()
    bottom = segment(img, [dim]).count()
    assert top + bottom == full
    assert abs(top - bottom) < 0.1 * full
    assert full > 0.95 * 3.14159 * 30 * 30


def test_find_contours_empty_mask():
    assert find_contours(Mask(10, 10)) == []


def test_find_contours_rectangle_geometry():
    m = Mask(30, 20)
    for y in range(5, 11):
        for x in range(8, 18):
            m.bits[y * 30 + x] = 1
    (c,) = find_contours(m)
    assert c.area == 60
    assert c.centroid == (13.0, 8.0)
    assert (c.bbox.x1, c.bbox.y1, c.bbox.x2, c.bbox.y2) == (8, 5, 18, 11)
    assert c.perimeter == pytest.approx(2 * 9 + 2 * 5)


def test_find_contours_two_blobs():
    m = Mask(40, 10)
    for x in range(2, 6):
        m.bits[2 * 40 + x] = 1
        m.bits[3 * 40 + x] = 1
    for x in range(20, 30):
        m.bits[7 * 40 + x] = 1
        m.bits[8 * 40 + x] = 1
    assert len(find_contours(m)) == 2


def make_ball_frame(cx=320.0, cy=240.0, r=40.0, size=(640, 480), color=ORANGE_BRIGHT):
    img = solid_image(size[0], size[1], GREEN)
    draw_disk(img, cx, cy, r, color)
    return img


def test_detect_round_centers_on_disk(test_profile):
    img = make_ball_frame()
    det = detect_round(img, test_profile, class_id=0)
    assert det is not None
    assert det.label == "ball"
    gx, gy = det.box.center
    assert abs(gx - 320.0) <= 2.0 and abs(gy - 240.0) <= 2.0
    assert 0.8 <= det.confidence <= 1.0


def test_detect_round_rejects_half_disk(test_profile):
    img = solid_image(640, 480, GREEN)
    # occlude the right half: only a half-disk of orange remains
    draw_disk(img, 320, 240, 40, ORANGE_BRIGHT)
    img.fill_rect(320, 0, 640, 480, GREEN)
    (c,) = find_contours(segment(img, test_profile.rule_for("ball").ranges))
    assert circularity(c) < 0.8  # analytic half-disk value is ~0.75
    assert detect_round(img, test_profile, class_id=0) is None


def test_detect_round_blank_frame(test_profile):
    assert detect_round(solid_image(640, 480, GREEN), test_profile, 0) is None


def test_detect_round_translation_equivariance(test_profile):
    base = detect_round(make_ball_frame(200, 200), test_profile, 0)
    for dx, dy in ((37, -21), (-60, 55), (111, 13)):
        moved = detect_round(make_ball_frame(200 + dx, 200 + dy), test_profile, 0)
        assert abs((moved.box.x1 - base.box.x1) - dx) <= 1.0
        assert abs((moved.box.y1 - base.box.y1) - dy) <= 1.0
        assert abs((moved.box.x2 - base.box.x2) - dx) <= 1.0
        assert abs((moved.box.y2 - base.box.y2) - dy) <= 1.0


def test_detect_round_dual_range_needed_for_split_disk():
    img = solid_image(640, 480, GREEN)
    draw_split_disk(img, 320, 240, 40, ORANGE_BRIGHT, ORANGE_DIM)
    both = single_range_profile("15:45 0.5:1.0 0.6:1.0 | 15:45 0.5:1.0 0.25:0.55")
    bright_only = single_range_profile("15:45 0.5:1.0 0.6:1.0")
    dim_only = single_range_profile("15:45 0.5:1.0 0.25:0.55")
    assert detect_round(img, both, 0) is not None
    assert detect_round(img, bright_only, 0) is None
    assert detect_round(img, dim_only, 0) is None


def test_detect_round_background_noise_characterization(test_profile):
    # the known failure mode: a larger same-color distractor wins
    clean = detect_round(make_ball_frame(160, 240, 40), test_profile, 0)
    noisy_img = make_ball_frame(160, 240, 40)
    draw_disk(noisy_img, 480, 240, 70, ORANGE_BRIGHT)
    noisy = detect_round(noisy_img, test_profile, 0)
    assert noisy is not None
    assert abs(noisy.box.center[0] - clean.box.center[0]) > 100


def arrow_contour(angle_deg, size=(320, 240)):
    img = solid_image(size[0], size[1], GREEN)
    fill_polygon(img, arrow_polygon(size[0] / 2, size[1] / 2, angle_deg), BLUE_ARROW)
    mask = segment(img, [HsvRange(200.0, 260.0, 0.5, 1.0, 0.4, 1.0)])
    return max(find_contours(mask), key=lambda c: c.area)


@pytest.mark.parametrize(
    "angle,expected",
    [
        (0.0, "right"),
        (180.0, "left"),
        (-90.0, "forward"),
        (10.0, "right"),
        (-10.0, "right"),
        (170.0, "left"),
        (190.0, "left"),
        (-80.0, "forward"),
        (-100.0, "forward"),
    ],
)
def test_classify_arrow_with_rotation_tolerance(angle, expected):
    assert classify_arrow(arrow_contour(angle)) == expected


def test_classify_arrow_mirror_property():
    for angle in (0.0, 7.0, -9.0, 180.0, -90.0, -83.0):
        c = arrow_contour(angle)
        mirrored = c.mirrored(320)
        got = classify_arrow(c)
        swapped = classify_arrow(mirrored)
        if got == "forward":
            assert swapped == "forward"
        else:
            assert {got, swapped} == {"left", "right"}


def test_classify_arrow_rejects_isotropic_contour():
    img = solid_image(200, 200, GREEN)
    draw_disk(img, 100, 100, 40, BLUE_ARROW)
    mask = segment(img, [HsvRange(200.0, 260.0, 0.5, 1.0, 0.4, 1.0)])
    (c,) = find_contours(mask)
    with pytest.raises(AmbiguousShapeError):
        classify_arrow(c)


def test_detect_arrows_labels_and_classes(test_profile):
    img = solid_image(320, 240, GREEN)
    fill_polygon(img, arrow_polygon(160, 120, 0.0), BLUE_ARROW)
    dets = detect_arrows(img, test_profile, frame_id=5)
    assert len(dets) == 1
    assert dets[0].label == "right_arrow"
    assert dets[0].class_id == test_profile.class_map.id_for("right_arrow")
    assert dets[0].frame_id == 5


def make_line_frame(stripe_x0, stripe_x1, size=(640, 480)):
    img = solid_image(size[0], size[1], GREEN)
    img.fill_rect(stripe_x0, 0, stripe_x1, size[1], RED)
    return img


def test_detect_line_centered_stripe(test_profile):
    img = make_line_frame(310, 330)
    assert detect_line(img, test_profile) == pytest.approx(0.0, abs=1e-9)


def test_detect_line_offset_three_quarters(test_profile):
    # stripe centered at 3/4 of the width
    img = make_line_frame(470, 490)
    assert detect_line(img, test_profile) == pytest.approx(0.5, abs=1e-9)


def test_detect_line_absent(test_profile):
    assert detect_line(solid_image(640, 480, GREEN), test_profile) is None


def test_detect_line_requires_rule():
    profile = single_range_profile("15:45 0.5:1.0 0.5:1.0")
    with pytest.raises(ConfigError):
        detect_line(solid_image(64, 64, GREEN), profile)


def test_parse_profile_round_trip():
    p = parse_profile(TEST_PROFILE_TEXT)
    assert p.class_map.labels == ("ball", "line", "right_arrow", "left_arrow", "forward_arrow")
    ball = p.rule_for("ball")
    assert ball.shape == "round"
    assert len(ball.ranges) == 2
    assert ball.circularity == (0.8, 1.3)
    assert p.rules_with_shape("arrow")[0].min_area == 400


def test_parse_profile_errors():
    with pytest.raises(ConfigError):
        parse_profile("event = nosuch\n[x]\nshape = round\nranges = 1:2 0:1 0:1\n")
    with pytest.raises(ConfigError):
        parse_profile("event = basketball\n[ball]\nshape = blob\nranges = 1:2 0:1 0:1\n")
    with pytest.raises(ConfigError):
        parse_profile("event = basketball\n[ball]\nshape = round\n")  # no ranges
    with pytest.raises(ConfigError):
        parse_profile("event = basketball\n[net]\nshape = round\nranges = 1:2 0:1 0:1\n")
    with pytest.raises(ConfigError):
        parse_profile(
            "event = basketball\n[ball]\nshape = round\nranges = 1:2 0:1\n"
        )  # malformed triple


def test_builtin_profiles_load():
    for event in ("basketball", "archery", "marathon"):
        p = load_builtin_profile(event)
        assert p.event == event
        assert len(p.rules) >= 1
    with pytest.raises(ConfigError):
        load_builtin_profile("chess")
