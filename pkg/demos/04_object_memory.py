"""Track desk objects in world space through a camera sweep.

An object that leaves the frame is kept as out-of-view, re-identified on
return, and only marked moved after repeated misses while its spot is
visible.

Run from the repository root:

    python3 demos/04_object_memory.py
"""

import numpy as np

from tim.memory3d import CameraModel, Detection2D, ObjectMemory, reproject_to_image

SEC = 1_000_000_000

MUG_WORLD = np.array([-0.3, 0.0, 1.0])
JAR_WORLD = np.array([0.4, 0.0, 1.2])


def camera(yaw_rad: float) -> CameraModel:
    c, s = np.cos(yaw_rad), np.sin(yaw_rad)
    rotation = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
    return CameraModel(fx=500.0, fy=500.0, cx=320.0, cy=240.0,
                       width=640, height=480,
                       rotation=rotation, translation=np.zeros(3))


def detection_of(world_point: np.ndarray, cam: CameraModel,
                 object_class: str) -> tuple[Detection2D, float]:
    u, v, depth = reproject_to_image(world_point, cam)
    bbox = (u - 12.0, v - 12.0, 24.0, 24.0)
    return Detection2D(object_class, 0.9, bbox), depth


def show(memory: ObjectMemory, events):
    for ev in events:
        tracklet = memory.tracklets[ev.object_id]
        print(f"  {ev.kind:>10}  {tracklet.object_class:<4} "
              f"at ({tracklet.position[0]:+.2f}, {tracklet.position[1]:+.2f}, "
              f"{tracklet.position[2]:+.2f})  status={tracklet.status}")
    if not events:
        print("  (no membership changes)")


def main():
    memory = ObjectMemory()

    print("t=1s  camera forward, mug and jar on the desk:")
    cam = camera(0.0)
    show(memory, memory.update(
        [detection_of(MUG_WORLD, cam, "mug"), detection_of(JAR_WORLD, cam, "jar")],
        cam, 1 * SEC))

    print("t=2s  camera yawed 90 degrees, desk out of frame:")
    cam = camera(np.pi / 2)
    show(memory, memory.update([], cam, 2 * SEC))
    for t in memory.tracklets.values():
        print(f"  {t.object_class} remembered as {t.status}")

    print("t=3s  camera back, both objects re-identified (no new tracklets):")
    cam = camera(0.0)
    show(memory, memory.update(
        [detection_of(MUG_WORLD, cam, "mug"), detection_of(JAR_WORLD, cam, "jar")],
        cam, 3 * SEC))
    print(f"  tracklet count stays at {len(memory.tracklets)}")

    print("t=4s..8s  mug gone from the visible desk; misses accumulate:")
    for k in range(5):
        events = memory.update([detection_of(JAR_WORLD, cam, "jar")],
                               cam, (4 + k) * SEC)
        for ev in events:
            if memory.tracklets[ev.object_id].object_class == "mug":
                print(f"  t={4 + k}s  mug {ev.kind} "
                      f"-> {memory.tracklets[ev.object_id].status}")
    mug = next(t for t in memory.tracklets.values() if t.object_class == "mug")
    print(f"  final mug status: {mug.status}")

    print("\nexported world model:")
    for entry in memory.export_payload()["tracklets"]:
        pos = entry["positions"][-1]["xyz"]
        print(f"  {entry['class']:<4} {entry['status']:<12} "
              f"({pos[0]:+.2f}, {pos[1]:+.2f}, {pos[2]:+.2f})  "
              f"{len(entry['positions'])} position fixes")


if __name__ == "__main__":
    main()
