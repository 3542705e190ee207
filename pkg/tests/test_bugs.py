import numpy as np
import pytest

from bugworld.bugs import (CATALOG_SPECS, MAGENTA, POST_PHASE_ORDER,
                           ZFIGHT_ID_BASE, BugCatalog, bug_frame_rng, bug_rng)
from bugworld.errors import TargetNotFoundError, UnknownBugError
from bugworld.tags import TagRegistry


def fresh_catalog():
    reg = TagRegistry()
    return BugCatalog(reg), reg


def scene_with_props():
    from bugworld.envs import _build_static_room, EnvConfig

    grid, level, defaults = _build_static_room(0, EnvConfig())
    return level.scene, defaults


def catalog_for_scene():
    scene, defaults = scene_with_props()
    reg = TagRegistry()
    return BugCatalog(reg, defaults), scene, reg


SCENE_BUGS = ["texture_missing", "texture_corruption", "z_fighting",
              "geometry_corruption", "boundary_hole", "geometry_clipping"]


# -- catalog listing ---------------------------------------------------------


def test_catalog_has_17_entries_all_disabled():
    cat, _ = fresh_catalog()
    entries = cat.list()
    assert len(entries) == 17
    assert all(not e["enabled"] for e in entries)


def test_catalog_names_unique_and_ordered():
    cat, _ = fresh_catalog()
    names = [e["name"] for e in cat.list()]
    assert len(set(names)) == 17
    assert names == [n for n, _, _ in CATALOG_SPECS]


def test_catalog_tags_unique_and_sequential():
    cat, _ = fresh_catalog()
    tags = [e["tag"] for e in cat.list()]
    assert tags == list(range(1, 18))


def test_enable_reflected_in_list():
    cat, _ = fresh_catalog()
    cat.set_bug("black_screen", True)
    entries = {e["name"]: e for e in cat.list()}
    assert entries["black_screen"]["enabled"]
    assert sum(e["enabled"] for e in cat.list()) == 1


def test_unknown_bug_rejected():
    cat, _ = fresh_catalog()
    with pytest.raises(UnknownBugError):
        cat.set_bug("nosuch", True)


def test_phases_nonempty():
    for _, phases, _ in CATALOG_SPECS:
        assert phases


# -- per-bug RNG streams ------------------------------------------------------


def test_bug_rng_deterministic_and_name_separated():
    a = bug_rng(42, "texture_corruption").random(4)
    b = bug_rng(42, "texture_corruption").random(4)
    c = bug_rng(42, "geometry_corruption").random(4)
    assert (a == b).all()
    assert not (a == c).all()


def test_bug_frame_rng_varies_by_frame():
    a = bug_frame_rng(1, "screen_tear", 10).random()
    b = bug_frame_rng(1, "screen_tear", 11).random()
    assert a != b


# -- scene phase mutations ----------------------------------------------------


def scene_fingerprint(scene):
    parts = []
    for o in scene.draw_order():
        parts.append((o.id, o.bug_tag,
                      o.mesh.vertices.tobytes(),
                      o.transform.translation.x, o.transform.translation.y,
                      o.transform.translation.z, o.transform.yaw,
                      None if o.material.texture is None
                      else o.material.texture.texels.tobytes()))
    return parts


@pytest.mark.parametrize("name", SCENE_BUGS)
@pytest.mark.parametrize("seed", range(10))
def test_scene_bug_round_trip_restores_exactly(name, seed):
    cat, scene, _ = catalog_for_scene()
    before = scene_fingerprint(scene)
    cat.set_bug(name, True, scene=scene, episode_seed=seed)
    assert scene_fingerprint(scene) != before
    cat.set_bug(name, False, scene=scene)
    assert scene_fingerprint(scene) == before


def test_texture_missing_paints_magenta():
    cat, scene, _ = catalog_for_scene()
    cat.set_bug("texture_missing", True, scene=scene, episode_seed=0)
    target = scene.get(cat.states["texture_missing"].params["target"])
    assert (target.material.texture.texels == MAGENTA).all()
    assert target.bug_tag == cat.tag("texture_missing")


def test_texture_corruption_is_a_permutation():
    cat, scene, _ = catalog_for_scene()
    target_id = cat.states["texture_corruption"].params["target"]
    before = scene.get(target_id).material.texture.texels.copy()
    cat.set_bug("texture_corruption", True, scene=scene, episode_seed=3)
    after = scene.get(target_id).material.texture.texels
    assert not (after == before).all()
    a = np.sort(before.reshape(-1, 3), axis=0)
    b = np.sort(after.reshape(-1, 3), axis=0)
    assert (a == b).all()


def test_texture_corruption_seed_deterministic():
    outs = []
    for _ in range(2):
        cat, scene, _ = catalog_for_scene()
        cat.set_bug("texture_corruption", True, scene=scene, episode_seed=9)
        tid = cat.states["texture_corruption"].params["target"]
        outs.append(scene.get(tid).material.texture.texels.copy())
    assert (outs[0] == outs[1]).all()


def test_z_fighting_inserts_coplanar_duplicate():
    cat, scene, _ = catalog_for_scene()
    n_before = len(scene.objects)
    cat.set_bug("z_fighting", True, scene=scene, episode_seed=0)
    assert len(scene.objects) == n_before + 1
    dup = scene.get(ZFIGHT_ID_BASE + cat.tag("z_fighting"))
    src = scene.get(cat.states["z_fighting"].params["target"])
    assert dup.transform.translation.x == src.transform.translation.x
    assert dup.transform.yaw == src.transform.yaw
    assert dup.bug_tag == cat.tag("z_fighting")
    assert dup.material.texture is None


def test_geometry_corruption_bounded_displacement():
    cat, scene, _ = catalog_for_scene()
    tid = cat.states["geometry_corruption"].params["target"]
    before = scene.get(tid).mesh.vertices.copy()
    cat.set_bug("geometry_corruption", True, scene=scene, episode_seed=1)
    delta = scene.get(tid).mesh.vertices - before
    assert np.abs(delta).max() <= 0.3
    assert np.abs(delta).max() > 0


def test_boundary_hole_removes_floor_tile():
    cat, scene, _ = catalog_for_scene()
    tid = cat.states["boundary_hole"].params["target"]
    assert scene.get(tid) is not None
    cat.set_bug("boundary_hole", True, scene=scene, episode_seed=0)
    assert scene.get(tid) is None
    cat.set_bug("boundary_hole", False, scene=scene)
    assert scene.get(tid) is not None


def test_geometry_clipping_translates_by_params():
    cat, scene, _ = catalog_for_scene()
    tid = cat.states["geometry_clipping"].params["target"]
    z0 = scene.get(tid).transform.translation.z
    cat.set_bug("geometry_clipping", True, scene=scene, episode_seed=0)
    dz = cat.states["geometry_clipping"].params["dz"]
    assert scene.get(tid).transform.translation.z == pytest.approx(z0 + dz)


def test_target_not_found_raises():
    cat, scene, _ = catalog_for_scene()
    with pytest.raises(TargetNotFoundError):
        cat.set_bug("texture_missing", True, params={"target": 424242},
                    scene=scene, episode_seed=0)


# -- post phase ----------------------------------------------------------


def post_buffers(h=8, w=8):
    rng = np.random.default_rng(0)
    frame = rng.integers(0, 255, (h, w, 3), dtype=np.uint8)
    mask = np.zeros((h, w, 3), dtype=np.uint8)
    return frame, mask


def lut_for(cat, reg):
    return reg.color_lut()


def test_post_phase_order_constant():
    assert POST_PHASE_ORDER == ["freeze", "screen_tear", "flicker",
                                "black_screen"]


def test_no_post_bugs_identity():
    cat, reg = fresh_catalog()
    frame, mask = post_buffers()
    f0, m0 = frame.copy(), mask.copy()
    f, m = cat.apply_post_phase(frame, mask, None, 0, 1, reg.color_lut())
    assert (f == f0).all() and (m == m0).all()


def test_screen_tear_first_frame_noop():
    cat, reg = fresh_catalog()
    cat.set_bug("screen_tear", True)
    frame, mask = post_buffers()
    f0 = frame.copy()
    f, m = cat.apply_post_phase(frame, mask, None, 0, 0, reg.color_lut())
    assert (f == f0).all()
    assert not m.any()


def test_screen_tear_splices_previous_frame():
    cat, reg = fresh_catalog()
    cat.set_bug("screen_tear", True)
    h = 16
    frame = np.full((h, h, 3), 200, dtype=np.uint8)
    prev = np.full((h, h, 3), 20, dtype=np.uint8)
    mask = np.zeros((h, h, 3), dtype=np.uint8)
    lut = reg.color_lut()
    f, m = cat.apply_post_phase(frame, mask, prev, 5, 3, lut)
    rows_from_prev = np.where((f == 20).all(axis=(1, 2)))[0]
    assert len(rows_from_prev) > 0
    r = rows_from_prev[0]
    assert h // 4 <= r < 3 * h // 4
    assert (f[:r] == 200).all()
    assert (f[r:] == 20).all()
    tear_color = lut[cat.tag("screen_tear")]
    assert (m[r:] == tear_color).all()
    assert not m[:r].any()


def test_screen_tear_row_deterministic_per_frame():
    rows = []
    for _ in range(2):
        cat, reg = fresh_catalog()
        cat.set_bug("screen_tear", True)
        frame = np.full((16, 16, 3), 200, dtype=np.uint8)
        prev = np.zeros((16, 16, 3), dtype=np.uint8)
        mask = np.zeros((16, 16, 3), dtype=np.uint8)
        f, _ = cat.apply_post_phase(frame, mask, prev, 5, 7, reg.color_lut())
        rows.append(int(np.where((f == 0).all(axis=(1, 2)))[0][0]))
    assert rows[0] == rows[1]


def test_black_screen_full_frame():
    cat, reg = fresh_catalog()
    cat.set_bug("black_screen", True)
    frame, mask = post_buffers()
    lut = reg.color_lut()
    f, m = cat.apply_post_phase(frame, mask, None, 0, 1, lut)
    assert not f.any()
    assert (m == lut[cat.tag("black_screen")]).all()


def test_black_screen_overwrites_screen_tear():
    cat, reg = fresh_catalog()
    cat.set_bug("screen_tear", True)
    cat.set_bug("black_screen", True)
    frame, mask = post_buffers(16, 16)
    prev = np.full((16, 16, 3), 99, dtype=np.uint8)
    lut = reg.color_lut()
    f, m = cat.apply_post_phase(frame, mask, prev, 0, 2, lut)
    assert not f.any()
    assert (m == lut[cat.tag("black_screen")]).all()


def test_flicker_probability_seeded():
    cat, reg = fresh_catalog()
    cat.set_bug("flicker", True)
    lut = reg.color_lut()
    dark = 0
    n = 200
    for i in range(n):
        frame = np.full((4, 4, 3), 100, dtype=np.uint8)
        mask = np.zeros((4, 4, 3), dtype=np.uint8)
        f, m = cat.apply_post_phase(frame, mask, None, 7, i, lut)
        if not f.any():
            dark += 1
            assert (m == lut[cat.tag("flicker")]).all()
        else:
            assert not m.any()
    assert 0.35 * n < dark < 0.65 * n


def test_freeze_repeats_captured_frame():
    cat, reg = fresh_catalog()
    lut = reg.color_lut()
    cat.set_bug("freeze", True)
    first = np.full((4, 4, 3), 77, dtype=np.uint8)
    mask = np.zeros((4, 4, 3), dtype=np.uint8)
    f1, m1 = cat.apply_post_phase(first.copy(), mask.copy(), None, 0, 1, lut)
    assert (f1 == 77).all()
    assert (m1 == lut[cat.tag("freeze")]).all()
    second = np.full((4, 4, 3), 5, dtype=np.uint8)
    f2, _ = cat.apply_post_phase(second, mask.copy(), f1, 0, 2, lut)
    assert (f2 == 77).all()


def test_freeze_capture_cleared_on_disable():
    cat, reg = fresh_catalog()
    lut = reg.color_lut()
    cat.set_bug("freeze", True)
    a = np.full((4, 4, 3), 10, dtype=np.uint8)
    mask = np.zeros((4, 4, 3), dtype=np.uint8)
    cat.apply_post_phase(a, mask.copy(), None, 0, 1, lut)
    cat.set_bug("freeze", False)
    cat.set_bug("freeze", True)
    b = np.full((4, 4, 3), 60, dtype=np.uint8)
    f, _ = cat.apply_post_phase(b, mask.copy(), a, 0, 3, lut)
    assert (f == 60).all()
