"""Staged networks: planning, validation, execution, mode overrides."""

import numpy as np
import pytest

from pillarconv.backbone import (
    ConvMode,
    LayerSpec,
    NetworkSpec,
    SelectionSpec,
    StageSpec,
    compare_modes,
    dense_flops_of_spec,
    make_centerpoint_backbone,
    make_pillarnet_neck,
    make_pointpillars,
    network_from_json,
    network_to_json,
    override_topk_percent,
    plan_layers,
    preset_network,
    run_network,
    total_flops,
    validate_network,
    with_body_mode,
)
from pillarconv.errors import SpecMismatchError
from pillarconv.scenes import SceneSpec, generate


def small_spec(t=2.0, **kw):
    return make_pointpillars(height=32, width=24, channels=8, t=t, **kw)


def small_scene(seed=0, density=0.15):
    return generate(SceneSpec(height=32, width=24, channels=8, density=density,
                              pattern="clustered", clusters=4, spread=2.0, seed=seed))


class TestPlanning:
    def test_pointpillars_layer_plan(self):
        plan = plan_layers(make_pointpillars())
        assert len(plan) == 22
        ids = [p.layer_id for p in plan]
        assert ids[:4] == ["s1.down", "s1.body0", "s1.body1", "s1.body2"]
        assert ids[4] == "s2.down"
        assert ids[-1] == "neck3.up2"
        down1 = plan[0]
        assert (down1.in_h, down1.in_w, down1.out_h, down1.out_w) == (496, 432, 248, 216)
        last = plan[-1]
        assert (last.out_h, last.out_w) == (496, 432)

    def test_grid_halves_per_stage(self):
        plan = plan_layers(make_pointpillars())
        grids = {p.layer_id: (p.out_h, p.out_w) for p in plan}
        assert grids["s1.body0"] == (248, 216)
        assert grids["s2.body0"] == (124, 108)
        assert grids["s3.body0"] == (62, 54)

    def test_dense_taps(self):
        plan = plan_layers(make_pointpillars())
        by_kind = {p.kind: p for p in plan}
        assert by_kind["downsample"].dense_taps == 4
        assert by_kind["body"].dense_taps == 9
        assert by_kind["deconv"].dense_taps == 1


class TestValidation:
    def test_presets_validate(self):
        for name in ("pointpillars", "centerpoint-backbone", "pillarnet-neck"):
            validate_network(preset_network(name))

    def test_channel_mismatch_rejected(self):
        spec = small_spec()
        bad_body = LayerSpec(mode=ConvMode.SUBMANIFOLD, c_in=99, c_out=64)
        stages = (StageSpec(spec.stages[0].downsample, (bad_body,)),) + spec.stages[1:]
        with pytest.raises(SpecMismatchError):
            validate_network(NetworkSpec("bad", 32, 24, 8, stages, spec.neck))

    def test_indivisible_grid_with_neck_rejected(self):
        with pytest.raises(SpecMismatchError):
            validate_network(make_pointpillars(height=30, width=24, channels=8))

    def test_selective_downsample_rejected(self):
        spec = small_spec()
        bad_down = LayerSpec(mode=ConvMode.SUBMANIFOLD, c_in=8, c_out=64,
                             k_h=2, k_w=2, stride=2)
        stages = (StageSpec(bad_down, spec.stages[0].body),) + spec.stages[1:]
        with pytest.raises(SpecMismatchError):
            validate_network(NetworkSpec("bad", 32, 24, 8, stages, spec.neck))

    def test_neck_chain_count_must_match_stages(self):
        spec = small_spec()
        with pytest.raises(SpecMismatchError):
            validate_network(NetworkSpec("bad", 32, 24, 8, spec.stages, spec.neck[:2]))

    def test_selective_needs_stride1(self):
        with pytest.raises(SpecMismatchError):
            LayerSpec(mode=ConvMode.SELECTIVE, c_in=4, c_out=4, k_h=2, k_w=2, stride=2)

    def test_selection_spec_requires_parameter(self):
        with pytest.raises(SpecMismatchError):
            SelectionSpec(kind="topk", t=None)
        with pytest.raises(SpecMismatchError):
            SelectionSpec(kind="threshold", theta=None)
        with pytest.raises(SpecMismatchError):
            SelectionSpec(kind="quantile", t=1.0)


class TestJsonRoundTrip:
    @pytest.mark.parametrize("name", ["pointpillars", "centerpoint-backbone",
                                      "pillarnet-neck"])
    def test_preset_round_trips(self, name):
        spec = preset_network(name)
        assert network_from_json(network_to_json(spec)) == spec

    def test_threshold_selection_round_trips(self):
        spec = small_spec()
        sel = SelectionSpec(kind="threshold", t=None, theta=0.25)
        body = tuple(
            LayerSpec(mode=ConvMode.SELECTIVE, c_in=64, c_out=64, selection=sel)
            for _ in range(2)
        )
        stages = (StageSpec(spec.stages[0].downsample, body),) + spec.stages[1:]
        spec2 = NetworkSpec("thresholded", 32, 24, 8, stages, spec.neck)
        assert network_from_json(network_to_json(spec2)) == spec2

    def test_garbage_rejected(self):
        with pytest.raises(SpecMismatchError):
            network_from_json('{"name": "x"}')


class TestRunNetwork:
    def test_output_lands_on_input_grid_with_concat_channels(self):
        res = run_network(small_scene(), small_spec())
        assert (res.output.height, res.output.width) == (32, 24)
        assert res.output.channels == 128 * 3
        assert len(res.reports) == 22
        assert len(res.traces) == 22

    def test_report_chain_is_consistent(self):
        res = run_network(small_scene(), small_spec())
        trunk = [r for r in res.reports if not r.layer_id.startswith("neck")]
        for prev, cur in zip(trunk, trunk[1:]):
            assert cur.active_in == prev.active_out
        for r in res.reports:
            assert 0 <= r.selected <= r.active_in
            assert r.density_out == pytest.approx(r.active_out / (r.out_h * r.out_w))
            assert r.flops > 0

    def test_weights_seed_controls_output(self):
        t = small_scene()
        a = run_network(t, small_spec(), weights_seed=1)
        b = run_network(t, small_spec(), weights_seed=1)
        c = run_network(t, small_spec(), weights_seed=2)
        assert np.array_equal(a.output.features, b.output.features)
        assert not np.array_equal(a.output.features, c.output.features)

    def test_scene_must_match_spec_dims(self):
        with pytest.raises(SpecMismatchError):
            run_network(small_scene(), make_pointpillars())

    def test_explicit_kernels_must_cover_the_plan(self):
        with pytest.raises(SpecMismatchError):
            run_network(small_scene(), small_spec(), weights=[])

    def test_traces_expose_simulator_counts(self):
        res = run_network(small_scene(), small_spec())
        by_id = {tr.layer_id: tr for tr in res.traces}
        body = by_id["s1.body0"]
        assert body.flags is not None
        assert body.flags.shape == (body.in_coords.shape[0],)
        assert body.n_per_offset.sum() > 0
        down = by_id["s1.down"]
        assert down.flags is None
        for tr, r in zip(res.traces, res.reports):
            assert tr.n_out == r.active_out
            assert tr.flops == r.flops

    def test_empty_scene_flows_through(self):
        t = generate(SceneSpec(height=32, width=24, channels=8, density=0.0, seed=0))
        res = run_network(t, small_spec())
        assert res.output.n_active == 0


class TestModeEquivalences:
    def test_t0_equals_submanifold_bitwise(self):
        t = small_scene(seed=3)
        sd0 = run_network(t, override_topk_percent(small_spec(), 0.0))
        subm = run_network(t, with_body_mode(small_spec(), ConvMode.SUBMANIFOLD))
        assert sd0.output.coords == subm.output.coords
        assert np.array_equal(sd0.output.features, subm.output.features)

    def test_t100_equals_sparse_bitwise(self):
        t = small_scene(seed=3)
        sd100 = run_network(t, override_topk_percent(small_spec(), 100.0))
        sparse = run_network(t, with_body_mode(small_spec(), ConvMode.SPARSE_FULL))
        assert sd100.output.coords == sparse.output.coords
        assert np.array_equal(sd100.output.features, sparse.output.features)

    def test_sparse_network_matches_dense_network(self):
        # with zero bias the dense mirror is zero off the dilated set, so the
        # full-sparse run must reproduce it exactly on its own support
        t = small_scene(seed=4)
        sparse = run_network(t, with_body_mode(small_spec(), ConvMode.SPARSE_FULL))
        dense = run_network(t, with_body_mode(small_spec(), ConvMode.DENSE))
        a = sparse.output.to_dense().data
        b = dense.output.to_dense().data
        np.testing.assert_allclose(a, b, rtol=1e-4, atol=1e-4)

    def test_dense_run_matches_analytic_flop_count(self):
        t = small_scene(seed=5)
        spec = with_body_mode(small_spec(), ConvMode.DENSE)
        res = run_network(t, spec)
        assert total_flops(res.reports) == dense_flops_of_spec(small_spec())


class TestOverridesAndComparison:
    def test_override_topk_percent_touches_only_selective(self):
        spec = override_topk_percent(small_spec(t=2.0), 7.0)
        for stage in spec.stages:
            assert stage.downsample.selection is None
            for b in stage.body:
                assert b.selection.t == 7.0

    def test_with_body_mode_dense_forces_everything_dense(self):
        spec = with_body_mode(small_spec(), ConvMode.DENSE)
        plan = plan_layers(spec)
        assert all(p.spec.mode is ConvMode.DENSE for p in plan)

    def test_with_body_mode_subm_keeps_strided_sparse(self):
        spec = with_body_mode(small_spec(), ConvMode.SUBMANIFOLD)
        for p in plan_layers(spec):
            if p.kind == "body":
                assert p.spec.mode is ConvMode.SUBMANIFOLD
            else:
                assert p.spec.mode is ConvMode.SPARSE_FULL

    def test_compare_modes_orders_flops(self):
        rows = compare_modes(small_scene(seed=6), small_spec(),
                             selective_t=(2.0, 20.0))
        by_label = {r.label: r.total_flops for r in rows}
        assert rows[0].label == "dense"
        assert rows[0].flops_vs_dense == 1.0
        assert by_label["subm"] <= by_label["selective(t=2)"]
        assert by_label["selective(t=2)"] <= by_label["selective(t=20)"]
        assert by_label["selective(t=20)"] <= by_label["sparse"]
        assert by_label["sparse"] <= by_label["dense"]


class TestPresetShapes:
    def test_pointpillars_channels(self):
        spec = make_pointpillars()
        assert spec.stages[0].downsample.c_out == 64
        assert spec.stages[1].downsample.c_out == 128
        assert spec.stages[2].downsample.c_out == 256
        assert [len(s.body) for s in spec.stages] == [3, 5, 5]
        assert [len(chain) for chain in spec.neck] == [1, 2, 3]
        assert all(chain[-1].c_out == 128 for chain in spec.neck)

    def test_centerpoint_defaults(self):
        spec = make_centerpoint_backbone()
        assert (spec.height, spec.width) == (512, 512)
        sel = spec.stages[0].body[0].selection
        assert sel.t == 4.0

    def test_pillarnet_neck_modes(self):
        spec = make_pillarnet_neck()
        assert all(b.mode is ConvMode.SUBMANIFOLD for b in spec.stages[0].body)
        assert all(b.mode is ConvMode.SUBMANIFOLD for b in spec.stages[1].body)
        assert all(b.mode is ConvMode.SELECTIVE for b in spec.stages[2].body)
