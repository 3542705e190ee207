import os
import re
import signal
import subprocess
import sys
import time

import numpy as np
import pytest

from bugworld_client import RemoteEnv, RemoteError, gym_id

CFG = {"resolution": 32}


@pytest.fixture(scope="module")
def server_port():
    env = dict(os.environ, BUGWORLD_PORT="0")
    proc = subprocess.Popen(
        [sys.executable, "-m", "bugworld.cli", "serve", "--resolution", "32"],
        stdout=subprocess.PIPE, stderr=subprocess.STDOUT, text=True, env=env)
    line = proc.stdout.readline()
    m = re.search(r"listening on [\d.]+:(\d+)", line)
    assert m, f"unexpected server output: {line!r}"
    yield int(m.group(1))
    proc.send_signal(signal.SIGTERM)
    try:
        proc.wait(timeout=5)
    except subprocess.TimeoutExpired:
        proc.kill()


def test_reset_is_deterministic(server_port):
    with RemoteEnv(port=server_port, env_id="Maze-v0", config=CFG) as env:
        a = env.reset(42)
        b = env.reset(42)
    assert a.frame.shape == (32, 32, 3)
    assert np.array_equal(a.frame, b.frame)
    assert np.array_equal(a.mask, b.mask)
    assert a.state == b.state


def test_default_config_resolution(server_port):
    with RemoteEnv(port=server_port, env_id="StaticRoom-v0") as env:
        obs = env.reset(0)
    assert obs.frame.shape == (128, 128, 3)
    assert obs.mask.shape == (128, 128, 3)


def test_pixels_match_local_engine(server_port):
    bugworld = pytest.importorskip("bugworld")
    rng = np.random.default_rng(8)
    actions = [int(a) for a in rng.integers(0, 11, 30)]

    local = bugworld.make("StaticRoom-v0", CFG)
    local_stream = [local.reset(5)]
    local.set_bug("texture_missing", True)
    for a in actions:
        obs, _ = local.step(a)
        local_stream.append(obs)

    with RemoteEnv(port=server_port, env_id="StaticRoom-v0",
                   config=CFG) as env:
        remote = [env.reset(5)]
        env.set_bug("texture_missing", True)
        for a in actions:
            obs, _ = env.step(a)
            remote.append(obs)

    for lo, ro in zip(local_stream, remote):
        assert np.array_equal(lo.frame, ro.frame)
        assert np.array_equal(lo.mask, ro.mask)
        assert [float(x) for x in lo.state] == ro.state


def test_step_info_and_flags(server_port):
    with RemoteEnv(port=server_port, env_id="StaticRoom-v0",
                   config=CFG) as env:
        env.reset(0)
        obs, info = env.step(1)
    assert info.step == 1
    assert not info.done
    assert set(info.flags) >= {"stuck", "out_of_bounds", "crash"}


def test_episode_done_error_surfaced(server_port):
    config = {"resolution": 16, "step_limit": 1}
    with RemoteEnv(port=server_port, env_id="StaticRoom-v0",
                   config=config) as env:
        env.reset(0)
        _, info = env.step(0)
        assert info.done
        with pytest.raises(RemoteError) as exc:
            env.step(0)
    assert exc.value.code == "EPISODE_DONE"


def test_unknown_bug_error_surfaced(server_port):
    with RemoteEnv(port=server_port, env_id="StaticRoom-v0",
                   config=CFG) as env:
        env.reset(0)
        with pytest.raises(RemoteError) as exc:
            env.set_bug("nosuch", True)
    assert exc.value.code == "UNKNOWN_BUG"


def test_list_bugs_and_set_bug(server_port):
    with RemoteEnv(port=server_port, env_id="StaticRoom-v0",
                   config=CFG) as env:
        env.reset(0)
        bugs = env.list_bugs()
        assert len(bugs) == 17
        assert not any(b["enabled"] for b in bugs)
        env.set_bug("black_screen", True)
        obs, _ = env.step(0)
        assert not obs.frame.any()
        assert obs.mask.any()
        bugs = {b["name"]: b for b in env.list_bugs()}
        assert bugs["black_screen"]["enabled"]


def test_spec_and_behaviour(server_port):
    with RemoteEnv(port=server_port, env_id="Maze-v0", config=CFG) as env:
        spec = env.spec()
        assert spec["actions"]["NOOP"] == 0
        assert len(spec["palette"]) >= 17
        env.reset(1)
        env.set_behaviour("nav")  # accepted without error


def test_gym_id_mapping():
    assert gym_id("Maze-v0") == "BugWorld/Maze-v0"
    with pytest.raises(ValueError):
        gym_id("nosuch")
