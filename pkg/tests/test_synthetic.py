import math

import numpy as np
import pytest

from rotbox.anchors import POSITIVE
from rotbox.errors import AnnotationError, PlacementFailed
from rotbox.geometry import iou_matrix
from rotbox.postprocess import PipelineConfig, run_pipeline
from rotbox.synthetic import load_scene, synth_scene, write_scene
from rotbox.tensorfile import write_tensor


class TestSynthScene:
    def test_deterministic_files(self, tmp_path):
        a_dir = tmp_path / "a"
        b_dir = tmp_path / "b"
        write_scene(synth_scene(5, 6, 640, 640), a_dir)
        write_scene(synth_scene(5, 6, 640, 640), b_dir)
        names = sorted(p.name for p in a_dir.iterdir())
        assert names == sorted(p.name for p in b_dir.iterdir())
        for name in names:
            assert (a_dir / name).read_bytes() == (b_dir / name).read_bytes(), name

    def test_different_seeds_differ(self):
        a = synth_scene(1, 4, 640, 640)
        b = synth_scene(2, 4, 640, 640)
        assert [g.astuple() for g in a.gts] != [g.astuple() for g in b.gts]

    def test_pairwise_iou_contract(self):
        scene = synth_scene(9, 12, 1024, 1024)
        boxes = scene.gts
        m = iou_matrix(boxes, boxes)
        np.fill_diagonal(m, 0.0)
        assert m.max() < 0.1

    def test_ideal_map_invariants(self):
        scene = synth_scene(4, 5, 640, 640)
        total_pos = 0
        for sm, rm, asg in zip(scene.score_maps, scene.reg_maps, scene.assignments):
            pos = asg.status == POSITIVE
            total_pos += int(pos.sum())
            assert (sm.values[pos] == 1.0).all()
            assert (sm.values[~pos] == 0.0).all()
            # regression channels are zero away from positives
            assert (rm.values[:, :, ~pos.any(axis=0)] == 0.0).all()
        assert total_pos > 0
        # every gt owns at least one positive slot
        owned = set()
        for asg in scene.assignments:
            owned.update(np.unique(asg.gt_index[asg.status == POSITIVE]).tolist())
        assert owned == set(range(len(scene.gts)))

    def test_zero_boxes(self):
        scene = synth_scene(0, 0, 256, 256)
        assert scene.gts == []
        assert all((sm.values == 0.0).all() for sm in scene.score_maps)
        dets = run_pipeline(scene.score_maps, scene.reg_maps, scene.anchors,
                            PipelineConfig())
        assert dets == []

    def test_placement_failure(self):
        with pytest.raises(PlacementFailed):
            synth_scene(0, 1, 20, 20)  # no prior fits an image this small

    def test_angles_stay_clear_of_logit_clamp(self):
        scene = synth_scene(13, 15, 1024, 1024)
        for gt in scene.gts:
            assert abs(gt.theta) < math.pi / 4 - 9e-4


class TestSceneFiles:
    def test_load_round_trip(self, tmp_path):
        scene = synth_scene(21, 3, 512, 512)
        write_scene(scene, tmp_path / "scene")
        loaded = load_scene(tmp_path / "scene")
        assert loaded.image_id == scene.image_id
        assert [lv.name for lv in loaded.levels] == [lv.name for lv in scene.levels]
        assert len(loaded.gts) == 3
        # maps survive the float32 container within float32 precision
        for sm_mem, sm_disk in zip(scene.score_maps, loaded.score_maps):
            assert np.array_equal(sm_mem.values, sm_disk.values)
        for rm_mem, rm_disk in zip(scene.reg_maps, loaded.reg_maps):
            assert np.allclose(rm_mem.values, rm_disk.values, atol=1e-6)

    def test_load_checks_gt_overlap(self, tmp_path):
        scene = synth_scene(22, 1, 512, 512)
        write_scene(scene, tmp_path / "scene")
        ann = (tmp_path / "scene" / "annotations.jsonl")
        line = ann.read_text().strip()
        import json
        doc = json.loads(line)
        doc["objects"].append(dict(doc["objects"][0]))  # duplicate gt: IoU 1
        ann.write_text(json.dumps(doc) + "\n")
        with pytest.raises(AnnotationError):
            load_scene(tmp_path / "scene")

    def test_map_override(self, tmp_path):
        scene = synth_scene(23, 1, 512, 512)
        write_scene(scene, tmp_path / "scene")
        zero = np.zeros_like(scene.score_maps[0].values)
        write_tensor(zero, tmp_path / "zeros.rbk")
        loaded = load_scene(tmp_path / "scene",
                            score_override={"P2": str(tmp_path / "zeros.rbk")})
        assert (loaded.score_maps[0].values == 0.0).all()

    def test_missing_manifest(self, tmp_path):
        with pytest.raises(AnnotationError):
            load_scene(tmp_path)
