"""Analytics arithmetic against hand-computed fixtures and brute-force oracles."""

import random
import xml.etree.ElementTree as ET

import numpy as np
import pytest

from tim.analytics import (
    Segment,
    analyze_session,
    build_point_cloud,
    confidence_matrix,
    depth_frame_points,
    dwell_by_object,
    eval_metrics,
    format_mean_std,
    gaze_points,
    global_summaries,
    hold_segments,
    phi_coefficient,
    report_to_xml,
    summary_matrix,
    workload_distribution,
    write_ply,
)
from tim.memory3d import CameraModel
from tim.stream_bus import StreamBus


def sec(x) -> int:
    return int(x * 1_000_000_000)


class TestConfidenceMatrix:
    def test_cell_is_the_mean_of_its_estimates(self):
        cm = confidence_matrix([(sec(10), "s1", 0.6), (sec(12), "s1", 0.8)], 10.0)
        assert cm.n_bins == 1
        assert cm.cells == ((0.7,),)

    def test_bins_tile_from_the_first_output(self):
        # First output at 10 s, last at 95 s, width 10 s: floor(85/10)+1 = 9 bins.
        cm = confidence_matrix([(sec(10), "s1", 0.9), (sec(95), "s1", 0.9)], 10.0)
        assert cm.n_bins == 9
        assert cm.first_ts_ns == sec(10)
        assert cm.cells[0][0] == 0.9 and cm.cells[0][8] == 0.9
        assert all(v is None for v in cm.cells[0][1:8])

    def test_boundary_estimate_goes_to_the_next_bin(self):
        cm = confidence_matrix([(sec(0), "s1", 0.5), (sec(10), "s1", 0.9)], 10.0)
        assert cm.n_bins == 2
        assert cm.cells == ((0.5, 0.9),)

    def test_rows_follow_first_appearance(self):
        cm = confidence_matrix([(sec(0), "s2", 0.5), (sec(1), "s1", 0.5)], 10.0)
        assert cm.step_ids == ("s2", "s1")

    def test_empty_input(self):
        cm = confidence_matrix([], 10.0)
        assert cm.n_bins == 0 and cm.step_ids == () and cm.cells == ()
        assert global_summaries(cm) == {}

    def test_summaries_average_present_cells_and_count_coverage(self):
        # 10 bins; estimates land in bins 0, 4, 9, every cell averaging 0.7.
        ests = [(sec(0), "s1", 0.6), (sec(1), "s1", 0.8),
                (sec(45), "s1", 0.7), (sec(95), "s1", 0.7),
                (sec(45), "s2", 0.4)]
        cm = confidence_matrix(ests, 10.0)
        assert cm.n_bins == 10
        summaries = global_summaries(cm, threshold=0.5)
        assert summaries["s1"]["average"] == pytest.approx(0.7)
        assert summaries["s1"]["coverage"] == pytest.approx(0.3)
        # Present cells count toward the average regardless of the threshold.
        assert summaries["s2"]["average"] == pytest.approx(0.4)
        assert summaries["s2"]["coverage"] == 0.0

    def test_bad_width_rejected(self):
        with pytest.raises(ValueError, match="bin_width"):
            confidence_matrix([], 0.0)


class TestTimeline:
    def test_hold_rule_merges_consecutive_labels(self):
        samples = [(sec(0), "optimal"), (sec(10), "optimal"), (sec(20), "underload"),
                   (sec(30), "underload"), (sec(40), "overload")]
        segs = hold_segments(samples, sec(50))
        assert segs == [
            Segment("optimal", sec(0), sec(20)),
            Segment("underload", sec(20), sec(40)),
            Segment("overload", sec(40), sec(50)),
        ]

    def test_last_segment_extends_to_session_end(self):
        segs = hold_segments([(sec(5), "s1")], sec(42))
        assert segs == [Segment("s1", sec(5), sec(42))]

    def test_empty_and_unsorted(self):
        assert hold_segments([], sec(10)) == []
        with pytest.raises(ValueError, match="timestamp order"):
            hold_segments([(sec(2), "a"), (sec(1), "b")], sec(10))

    def test_distribution_fractions(self):
        segs = hold_segments(
            [(sec(0), "optimal"), (sec(20), "underload"), (sec(40), "overload")], sec(50))
        dist = workload_distribution(segs, sec(0), sec(50))
        assert dist == {"underload": 0.4, "optimal": 0.4, "overload": 0.2}

    def test_distribution_without_samples_is_all_zero(self):
        assert workload_distribution([], sec(0), sec(50)) == {
            "underload": 0.0, "optimal": 0.0, "overload": 0.0}

    def test_summary_matrix_overlap_seconds(self):
        steps = [Segment("s1", sec(0), sec(40)), Segment("s2", sec(40), sec(60)),
                 Segment("s3", sec(60), sec(100))]
        loads = [Segment("optimal", sec(0), sec(50)), Segment("overload", sec(50), sec(100))]
        step_ids, cats, matrix = summary_matrix(steps, loads)
        assert step_ids == ["s1", "s2", "s3"]
        assert cats == ["underload", "optimal", "overload"]
        assert matrix == [[0.0, 40.0, 0.0], [0.0, 10.0, 10.0], [0.0, 0.0, 40.0]]


class TestPhi:
    def test_perfect_association(self):
        steps = [Segment("s1", sec(0), sec(40)), Segment("s2", sec(40), sec(60)),
                 Segment("s3", sec(60), sec(100))]
        loads = [Segment("optimal", sec(0), sec(40)), Segment("overload", sec(40), sec(60)),
                 Segment("optimal", sec(60), sec(100))]
        assert phi_coefficient(steps, "s2", loads, "overload", sec(0), sec(100)) == 1.0

    def test_hand_computed_partial_overlap(self):
        # a=0, b=40, c=20, d=40 over a 100 s span: phi = -800 / sqrt(2400*1600).
        steps = [Segment("s1", sec(0), sec(40))]
        loads = [Segment("overload", sec(40), sec(60))]
        got = phi_coefficient(steps, "s1", loads, "overload", sec(0), sec(100))
        assert got == pytest.approx(-0.4082482904638631, abs=1e-9)

    def test_zero_variance_is_zero(self):
        steps = [Segment("s1", sec(0), sec(100))]  # always active: no variance
        loads = [Segment("optimal", sec(0), sec(50))]
        assert phi_coefficient(steps, "s1", loads, "optimal", sec(0), sec(100)) == 0.0
        assert phi_coefficient(steps, "never", loads, "optimal", sec(0), sec(100)) == 0.0

    def test_degenerate_span(self):
        assert phi_coefficient([], "a", [], "b", sec(5), sec(5)) == 0.0


def brute_force_metrics(y_true, y_pred):
    classes = sorted(set(y_true) | set(y_pred))
    per = {}
    for cls in classes:
        tp = fp = fn = 0
        for t, p in zip(y_true, y_pred):
            if p == cls and t == cls:
                tp += 1
            elif p == cls:
                fp += 1
            elif t == cls:
                fn += 1
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        per[cls] = (precision, recall, f1, tp + fn)
    acc = sum(t == p for t, p in zip(y_true, y_pred)) / len(y_true)
    return per, acc


class TestMetrics:
    def test_hand_computed_example(self):
        m = eval_metrics(list("aaabbc"), list("aabbba"))
        assert m["accuracy"] == pytest.approx(4 / 6)
        assert m["classes"]["a"]["precision"] == pytest.approx(2 / 3)
        assert m["classes"]["a"]["recall"] == pytest.approx(2 / 3)
        assert m["classes"]["b"]["recall"] == 1.0
        assert m["classes"]["c"] == {"precision": 0.0, "recall": 0.0, "f1": 0.0, "support": 1}
        assert m["classes"]["b"]["f1"] == pytest.approx(0.8)

    def test_against_brute_force_on_random_datasets(self):
        rng = random.Random(99)
        for _ in range(100):
            labels = [f"c{i}" for i in range(rng.randint(2, 5))]
            n = rng.randint(5, 60)
            y_true = [rng.choice(labels) for _ in range(n)]
            y_pred = [rng.choice(labels) for _ in range(n)]
            m = eval_metrics(y_true, y_pred)
            per, acc = brute_force_metrics(y_true, y_pred)
            assert abs(m["accuracy"] - acc) <= 1e-12
            for cls, (precision, recall, f1, support) in per.items():
                got = m["classes"][cls]
                assert abs(got["precision"] - precision) <= 1e-12
                assert abs(got["recall"] - recall) <= 1e-12
                assert abs(got["f1"] - f1) <= 1e-12
                assert got["support"] == support

    def test_weighted_recall_equals_accuracy_exactly(self):
        rng = random.Random(7)
        for _ in range(50):
            labels = ["x", "y", "z"]
            n = rng.randint(3, 40)
            y_true = [rng.choice(labels) for _ in range(n)]
            y_pred = [rng.choice(labels) for _ in range(n)]
            m = eval_metrics(y_true, y_pred)
            assert m["weighted_recall"] == m["accuracy"]

    def test_input_validation(self):
        with pytest.raises(ValueError):
            eval_metrics(["a"], [])
        with pytest.raises(ValueError):
            eval_metrics([], [])

    def test_mean_std_rendering(self):
        assert format_mean_std([2, 4, 4, 4, 5, 5, 7, 9]) == "5.00±2.00"
        assert format_mean_std([1.0]) == "1.00±0.00"
        with pytest.raises(ValueError):
            format_mean_std([])


def flat_cam(width=2, height=2):
    return CameraModel(1.0, 1.0, 0.0, 0.0, width, height, np.eye(3), np.zeros(3))


class TestSpatial:
    def test_identity_pose_unit_depth_is_a_planar_grid(self):
        pts = depth_frame_points(np.ones((2, 2)), flat_cam())
        got = {tuple(p) for p in pts}
        assert got == {(0.0, 0.0, 1.0), (1.0, 0.0, 1.0), (0.0, 1.0, 1.0), (1.0, 1.0, 1.0)}

    def test_zero_depth_pixels_are_dropped(self):
        depth = np.ones((2, 2))
        depth[0, 0] = 0.0
        assert len(depth_frame_points(depth, flat_cam())) == 3

    def test_translation_moves_the_cloud(self):
        cam = CameraModel(1.0, 1.0, 0.0, 0.0, 2, 2, np.eye(3), np.array([1.0, 2.0, 3.0]))
        pts = depth_frame_points(np.ones((2, 2)), cam)
        assert {tuple(p) for p in pts} == {
            (1.0, 2.0, 4.0), (2.0, 2.0, 4.0), (1.0, 3.0, 4.0), (2.0, 3.0, 4.0)}

    def test_stride_subsamples(self):
        pts = depth_frame_points(np.ones((4, 4)), flat_cam(4, 4), stride=2)
        assert len(pts) == 4

    def test_build_and_write_ply(self, tmp_path):
        cloud = build_point_cloud([(np.ones((2, 2)), flat_cam())])
        path = tmp_path / "cloud.ply"
        write_ply(cloud, path)
        lines = path.read_text().splitlines()
        assert lines[0] == "ply" and lines[2] == "element vertex 4"
        assert lines[7] == "0.000000 0.000000 1.000000"
        assert len(lines) == 7 + 4

    def test_empty_cloud(self):
        assert build_point_cloud([]).shape == (0, 3)

    def test_gaze_rays_cast_to_default_depth(self):
        cam = CameraModel(500.0, 500.0, 320.0, 240.0, 640, 480, np.eye(3), np.zeros(3))
        pts = gaze_points([(sec(1), np.array([0.0, 0.0, 1.0])),
                           (sec(2), np.array([0.0, 0.0, 5.0]))], [(sec(0), cam)])
        assert len(pts) == 2
        for _, p in pts:
            np.testing.assert_allclose(p, [0.0, 0.0, 1.5], atol=1e-12)

    def test_gaze_before_any_pose_is_dropped(self):
        cam = flat_cam()
        pts = gaze_points([(sec(1), np.array([0.0, 0.0, 1.0]))], [(sec(5), cam)])
        assert pts == []

    def test_dwell_attribution_and_hold_rule(self):
        points = [(sec(0), np.array([0.0, 0.0, 1.5])),
                  (sec(10), np.array([0.0, 0.0, 1.5])),
                  (sec(20), np.array([5.0, 5.0, 5.0]))]
        objects = [(1, np.array([0.0, 0.0, 1.4])), (2, np.array([3.0, 0.0, 0.0]))]
        dwell = dwell_by_object(points, objects, end_ns=sec(30))
        assert dwell == {1: 20.0, 2: 0.0}


class TestSessionReport:
    @pytest.fixture
    def session_bus(self):
        bus = StreamBus("sess-rpt", "quesadilla")
        bus.create_topic("reasoning.steps", "step_estimate")
        bus.create_topic("workload", "workload_sample")
        bus.create_topic("reasoning.errors", "error_event")
        bus.create_topic("phases", "phase_marker")
        bus.create_topic("guidance", "guidance_prompt")
        bus.create_topic("memory3d", "tracklet_set")
        est = {"tag": "step_estimate", "source": "reasoning", "confidence": 1.0}
        bus.publish("reasoning.steps", sec(0), {**est, "step_id": "s1"})
        bus.publish("reasoning.steps", sec(40), {**est, "step_id": "s2"})
        bus.publish("reasoning.steps", sec(60), {**est, "step_id": "s3"})
        bus.publish("workload", sec(0), {"tag": "workload_sample", "category": "optimal"})
        bus.publish("workload", sec(40), {"tag": "workload_sample", "category": "overload"})
        bus.publish("workload", sec(60), {"tag": "workload_sample", "category": "optimal"})
        bus.publish("reasoning.errors", sec(41), {
            "tag": "error_event", "kind": "out_of_order",
            "message": "evidence for step s3 arrived before its prerequisites were met",
            "step_id": "s3"})
        bus.publish("phases", sec(0), {"tag": "phase_marker", "label": "setup"})
        bus.publish("phases", sec(10), {"tag": "phase_marker", "label": "proc-a",
                                        "track": "procedure"})
        bus.publish("phases", sec(30), {"tag": "phase_marker", "label": "main",
                                        "track": "phase"})
        bus.publish("guidance", sec(1), {"tag": "guidance_prompt",
                                         "kind": "instruction", "text": "Do step 1"})
        bus.publish("guidance", sec(41), {"tag": "guidance_prompt",
                                          "kind": "warning", "text": "Out of order"})
        bus.publish("memory3d", sec(90), {"tag": "tracklet_set", "tracklets": [
            {"object_id": 1, "class": "tortilla", "status": "visible",
             "positions": [{"ts_ns": sec(1), "xyz": [0.0, 0.0, 2.0]}]}]})
        # Latest overall timestamp defines the session end at 100 s.
        bus.publish("reasoning.steps", sec(100), {**est, "step_id": "s3"})
        return bus

    def test_report_composition(self, session_bus):
        report = analyze_session(session_bus, bin_width_s=10.0)
        assert report.session_id == "sess-rpt" and report.task_id == "quesadilla"
        assert report.duration_s == 100.0
        assert [s.label for s in report.step_segments] == ["s1", "s2", "s3"]
        assert report.step_segments[-1].t_end_ns == sec(100)
        assert [s.label for s in report.workload_segments] == [
            "optimal", "overload", "optimal"]
        assert report.distribution["overload"] == pytest.approx(0.2)
        assert [s.label for s in report.phase_segments] == ["setup", "main"]
        assert [s.label for s in report.procedure_segments] == ["proc-a"]
        assert report.errors[0]["kind"] == "out_of_order"
        assert report.prompt_counts["instruction"] == 1
        assert report.prompt_counts["warning"] == 1
        assert report.prompt_counts["arrow"] == 0
        assert report.objects[0]["class"] == "tortilla"
        assert report.confidence.n_bins == 11
        # s2 runs 40..60 s; overload is exactly 40..60 s.
        assert report.phi["s2"]["overload"] == 1.0

    def test_xml_document_is_well_formed_and_complete(self, session_bus):
        report = analyze_session(session_bus)
        text = report_to_xml(report)
        assert text.startswith('<?xml version="1.0"')
        root = ET.fromstring(text)
        assert root.tag == "session"
        assert root.get("id") == "sess-rpt"
        assert root.get("task") == "quesadilla"
        sections = [child.tag for child in root]
        assert sections == ["steps", "workload", "phases", "procedures", "errors",
                            "confidence", "associations", "guidance", "objects"]
        steps = root.find("steps")
        assert [seg.get("label") for seg in steps] == ["s1", "s2", "s3"]
        assert steps[0].get("start_s") == "0.00"
        err = root.find("errors")[0]
        assert err.get("kind") == "out_of_order" and err.get("at_s") == "41.00"
        shares = root.find("workload").findall("share")
        assert {s.get("category") for s in shares} == {"underload", "optimal", "overload"}

    def test_sessions_without_optional_topics_still_analyze(self):
        bus = StreamBus("sparse", "quesadilla")
        bus.create_topic("reasoning.steps", "step_estimate")
        bus.publish("reasoning.steps", sec(3), {
            "tag": "step_estimate", "step_id": "s1",
            "confidence": 0.9, "source": "reasoning"})
        report = analyze_session(bus)
        assert report.workload_segments == []
        assert report.distribution == {"underload": 0.0, "optimal": 0.0, "overload": 0.0}
        assert report.errors == [] and report.objects == []
        ET.fromstring(report_to_xml(report))
