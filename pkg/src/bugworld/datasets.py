"""Dataset generation, validation and iteration.

A dataset directory holds manifest.json, scene.json, trajectory.jsonl and
paired frames/frame_%06d.png + masks/mask_%06d.png images. The manifest
records everything needed to regenerate the run bit-for-bit: env id,
config, seed, behaviour and the bug schedule, plus per-file checksums.
"""

from __future__ import annotations

import json
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Optional

import numpy as np
from PIL import Image

from .envs import make
from .errors import BugWorldError
from .world import NOOP

MANIFEST_VERSION = 1
FRAME_PATTERN = "frame_%06d.png"
MASK_PATTERN = "mask_%06d.png"


@dataclass
class ScheduleEntry:
    step: int
    name: str
    enabled: bool = True
    params: Optional[dict] = None

    def to_dict(self) -> dict:
        return {"step": self.step, "name": self.name, "enabled": self.enabled,
                "params": self.params or {}}

    @staticmethod
    def from_dict(d: dict) -> "ScheduleEntry":
        return ScheduleEntry(int(d["step"]), d["name"], bool(d["enabled"]),
                             d.get("params") or None)


@dataclass
class DatasetRecord:
    step: int
    frame: np.ndarray
    mask: np.ndarray
    state: list
    action: Optional[int]
    flags: dict
    active_bugs: list


@dataclass
class ValidationReport:
    problems: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.problems

    def add(self, code: str, detail: str) -> None:
        self.problems.append({"code": code, "detail": detail})


def _pixel_crc(arr: np.ndarray) -> int:
    return zlib.crc32(np.ascontiguousarray(arr).tobytes())


def _save_png(path: Path, arr: np.ndarray) -> None:
    Image.fromarray(arr, mode="RGB").save(path)


def _load_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        return np.asarray(im.convert("RGB"))


def generate(env_id: str, out_dir, steps: int, seed: int = 0,
             behaviour: str = "nav",
             schedule: Optional[list] = None,
             config: Optional[dict] = None) -> dict:
    """Run an episode and write it to out_dir, returning the manifest.

    Exactly `steps` frames, masks and trajectory rows are written (the
    reset observation is not recorded). The schedule is a list of
    ScheduleEntry (or dicts); entries at step s take effect before frame s
    is produced, so step-0 entries shape the first recorded frame.
    """
    entries = sorted(
        (e if isinstance(e, ScheduleEntry) else ScheduleEntry.from_dict(e)
         for e in (schedule or [])),
        key=lambda e: e.step)
    out = Path(out_dir)
    frames_dir = out / "frames"
    masks_dir = out / "masks"
    frames_dir.mkdir(parents=True, exist_ok=True)
    masks_dir.mkdir(parents=True, exist_ok=True)

    env = make(env_id, config)
    env.set_behaviour(behaviour)
    pending = list(entries)

    def apply_due(step: int) -> None:
        while pending and pending[0].step <= step:
            e = pending.pop(0)
            env.set_bug(e.name, e.enabled, e.params)

    frame_crcs: list[int] = []
    mask_crcs: list[int] = []
    manifest = {
        "version": MANIFEST_VERSION,
        "env_id": env_id,
        "config": env.config.to_dict(),
        "seed": int(seed),
        "behaviour": behaviour,
        "requested_steps": int(steps),
        "bug_schedule": [e.to_dict() for e in entries],
        "palette": {name: list(c) for name, c in env.registry.palette().items()},
        "complete": False,
    }

    traj_path = out / "trajectory.jsonl"
    frame_count = 0
    crashed = False
    try:
        with open(traj_path, "w", encoding="utf-8") as traj:
            env.reset(int(seed))
            (out / "scene.json").write_text(
                json.dumps(env.scene_document(), sort_keys=True,
                           separators=(",", ":")),
                encoding="utf-8")
            for i in range(int(steps)):
                apply_due(i)
                action = env.act() if behaviour == "nav" else NOOP
                obs, info = env.step(action)
                if obs is None:
                    crashed = True
                    manifest["crash_step"] = i
                    break
                _write_record(traj, frames_dir, masks_dir, i, obs, int(action),
                              info.flags, info.active_bugs,
                              frame_crcs, mask_crcs)
                frame_count += 1
                if info.done:
                    break
    except OSError:
        manifest["frame_count"] = frame_count
        manifest["checksums"] = _checksum_block(frame_crcs, mask_crcs, traj_path)
        _write_manifest(out, manifest)
        raise

    manifest["frame_count"] = frame_count
    manifest["crashed"] = crashed
    manifest["checksums"] = _checksum_block(frame_crcs, mask_crcs, traj_path)
    manifest["complete"] = True
    _write_manifest(out, manifest)
    return manifest


def _write_record(traj, frames_dir: Path, masks_dir: Path, step: int, obs,
                  action, flags: dict, active_bugs: list,
                  frame_crcs: list, mask_crcs: list) -> None:
    _save_png(frames_dir / (FRAME_PATTERN % step), obs.frame)
    _save_png(masks_dir / (MASK_PATTERN % step), obs.mask)
    frame_crcs.append(_pixel_crc(obs.frame))
    mask_crcs.append(_pixel_crc(obs.mask))
    line = {"step": step, "action": action, "state": obs.state,
            "flags": flags, "active_bugs": active_bugs}
    traj.write(json.dumps(line, sort_keys=True, separators=(",", ":")) + "\n")


def _checksum_block(frame_crcs, mask_crcs, traj_path: Path) -> dict:
    traj_crc = zlib.crc32(traj_path.read_bytes()) if traj_path.exists() else 0
    return {"frames": list(frame_crcs), "masks": list(mask_crcs),
            "trajectory": traj_crc}


def _write_manifest(out: Path, manifest: dict) -> None:
    (out / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8")


def load_manifest(dataset_dir) -> dict:
    path = Path(dataset_dir) / "manifest.json"
    if not path.is_file():
        raise BugWorldError(f"missing manifest: {path}")
    return json.loads(path.read_text(encoding="utf-8"))


def validate(dataset_dir) -> ValidationReport:
    """Check a dataset directory for structural and content problems."""
    root = Path(dataset_dir)
    report = ValidationReport()

    mpath = root / "manifest.json"
    if not mpath.is_file():
        report.add("MISSING_FILE", "manifest.json")
        return report
    try:
        manifest = json.loads(mpath.read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        report.add("BAD_MANIFEST", str(e))
        return report
    if manifest.get("version") != MANIFEST_VERSION:
        report.add("BAD_MANIFEST",
                   f"unsupported version {manifest.get('version')!r}")
        return report
    if not manifest.get("complete", False):
        report.add("INCOMPLETE", "dataset is marked as partial output")

    n = int(manifest.get("frame_count", 0))
    cfg = manifest.get("config", {})
    w, h = int(cfg.get("width", 0)), int(cfg.get("height", 0))
    sums = manifest.get("checksums", {})
    frame_crcs = sums.get("frames", [])
    mask_crcs = sums.get("masks", [])
    if len(frame_crcs) != n or len(mask_crcs) != n:
        report.add("BAD_MANIFEST", "checksum list length != frame_count")

    allowed = {(0, 0, 0)}
    for color in manifest.get("palette", {}).values():
        allowed.add(tuple(int(c) for c in color))

    for i in range(n):
        for sub, pattern, crcs, check_palette in (
                ("frames", FRAME_PATTERN, frame_crcs, False),
                ("masks", MASK_PATTERN, mask_crcs, True)):
            path = root / sub / (pattern % i)
            if not path.is_file():
                report.add("MISSING_FILE", str(path.relative_to(root)))
                continue
            arr = _load_png(path)
            if arr.shape != (h, w, 3):
                report.add("BAD_SHAPE",
                           f"{path.name}: {arr.shape} != {(h, w, 3)}")
                continue
            if i < len(crcs) and _pixel_crc(arr) != crcs[i]:
                report.add("CHECKSUM_MISMATCH", f"{sub}/{pattern % i}")
            if check_palette:
                colors = {tuple(c) for c in
                          np.unique(arr.reshape(-1, 3), axis=0).tolist()}
                bad = colors - allowed
                if bad:
                    report.add("PALETTE",
                               f"{pattern % i}: colors outside palette {sorted(bad)}")

    tpath = root / "trajectory.jsonl"
    if not tpath.is_file():
        report.add("MISSING_FILE", "trajectory.jsonl")
    else:
        data = tpath.read_bytes()
        if "trajectory" in sums and zlib.crc32(data) != sums["trajectory"]:
            report.add("CHECKSUM_MISMATCH", "trajectory.jsonl")
        lines = [ln for ln in data.decode("utf-8").splitlines() if ln.strip()]
        if len(lines) != n:
            report.add("TRAJECTORY_MISMATCH",
                       f"{len(lines)} lines, expected {n}")
        else:
            for i, ln in enumerate(lines):
                try:
                    row = json.loads(ln)
                except json.JSONDecodeError as e:
                    report.add("TRAJECTORY_MISMATCH", f"bad JSON line: {e}")
                    break
                if row.get("step") != i:
                    report.add("TRAJECTORY_MISMATCH",
                               f"row {i} has step {row.get('step')}")
                    break

    if not (root / "scene.json").is_file():
        report.add("MISSING_FILE", "scene.json")
    return report


def iterate(dataset_dir) -> Iterator[DatasetRecord]:
    """Yield per-step records (frame, mask, trajectory line) in order."""
    root = Path(dataset_dir)
    manifest = load_manifest(root)
    lines = (root / "trajectory.jsonl").read_text(encoding="utf-8").splitlines()
    n = int(manifest["frame_count"])
    for i in range(n):
        rec = json.loads(lines[i])
        yield DatasetRecord(
            step=rec["step"],
            frame=_load_png(root / "frames" / (FRAME_PATTERN % i)),
            mask=_load_png(root / "masks" / (MASK_PATTERN % i)),
            state=rec["state"],
            action=rec["action"],
            flags=rec["flags"],
            active_bugs=rec["active_bugs"],
        )


def mask_tags(mask: np.ndarray, palette: dict) -> set:
    """Names of bugs present in a mask image, by exact color match."""
    colors = {tuple(c) for c in np.unique(mask.reshape(-1, 3), axis=0).tolist()}
    by_color = {tuple(v): k for k, v in palette.items()}
    found = set()
    for c in colors:
        if c in by_color:
            found.add(by_color[c])
    return found
