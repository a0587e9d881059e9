import numpy as np
import pytest
import torch

from stylesched.procgen import make_content_image
from stylesched.schedule import WarpShape
from stylesched.struct_cond import (CondConfig, CondWeights, StructureMap,
                                    build_scale_schedule, conditioning_hook,
                                    conditioning_residual, extract_structure,
                                    resolve_scale, scaled_residual)
from stylesched.style_injection import InjectionConfig, InjectionLog
from stylesched.experiment import RunConfig, stylize_pair


class TestExtractStructure:
    def test_constant_image_edge_is_zero(self):
        img = np.full((16, 16, 3), 0.6, dtype=np.float32)
        smap = extract_structure(img, "edge")
        assert float(smap.data.abs().max()) == 0.0

    def test_vertical_step_edge_concentrated(self):
        img = np.zeros((16, 16, 3), dtype=np.float32)
        img[:, 8:, :] = 1.0
        smap = extract_structure(img, "edge")
        # step at image column 8 lands in pooled columns 3-4; away from it the
        # response is zero up to float residue of the luminance weights
        assert float(smap.data[:, 3:5].max()) == 1.0
        assert float(smap.data[:, :2].abs().max()) < 1e-6
        assert float(smap.data[:, 6:].abs().max()) < 1e-6

    def test_constant_image_depth_proxy_is_constant(self):
        img = np.full((16, 16, 3), 0.6, dtype=np.float32)
        smap = extract_structure(img, "depth-proxy")
        assert float(smap.data.max() - smap.data.min()) < 1e-6

    def test_normalized_to_unit_interval(self):
        smap = extract_structure(make_content_image(4, 32), "edge")
        assert 0.0 <= float(smap.data.min()) and float(smap.data.max()) <= 1.0
        assert smap.data.shape == (16, 16)

    def test_deterministic(self):
        img = make_content_image(4, 32)
        a = extract_structure(img, "depth-proxy")
        b = extract_structure(img, "depth-proxy")
        assert torch.equal(a.data, b.data)

    def test_rejects_unknown_kind(self):
        with pytest.raises(ValueError):
            extract_structure(make_content_image(4, 16), "normals")


@pytest.fixture(scope="module")
def cond_setup(small_weights):
    shapes = small_weights.config.decoder_layer_shapes()
    weights = CondWeights(5, shapes)
    smap = extract_structure(make_content_image(4, 32), "edge")
    return weights, smap, shapes


class TestConditioningResidual:
    def test_zero_map_zero_residual(self, cond_setup):
        weights, _, shapes = cond_setup
        zero = StructureMap(torch.zeros(16, 16), "edge")
        for label in shapes:
            assert float(conditioning_residual(zero, label, weights).abs().max()) == 0.0

    def test_shapes_match_layers(self, cond_setup):
        weights, smap, shapes = cond_setup
        for label, (ch, res) in shapes.items():
            r = conditioning_residual(smap, label, weights)
            assert tuple(r.shape) == (ch, res, res)

    def test_deterministic(self, cond_setup):
        weights, smap, _ = cond_setup
        a = conditioning_residual(smap, 8, weights)
        b = conditioning_residual(smap, 8, weights)
        assert torch.equal(a, b)

    def test_linearity(self, cond_setup):
        weights, smap, _ = cond_setup
        doubled = StructureMap(smap.data * 2.0, smap.kind)
        r1 = conditioning_residual(smap, 10, weights)
        r2 = conditioning_residual(doubled, 10, weights)
        assert torch.allclose(r2, 2.0 * r1, atol=1e-6)

    def test_unknown_layer(self, cond_setup):
        weights, smap, _ = cond_setup
        with pytest.raises(ValueError, match="unknown decoder layer"):
            conditioning_residual(smap, 12, weights)


class TestScaledResidual:
    def test_zero_scale(self):
        r = torch.randn(3, 4, 4, generator=torch.Generator().manual_seed(0))
        assert float(scaled_residual(r, 0.0).abs().max()) == 0.0

    def test_identity_scale(self):
        r = torch.randn(3, 4, 4, generator=torch.Generator().manual_seed(0))
        assert torch.equal(scaled_residual(r, 1.0), r)

    def test_half_scale(self):
        r = torch.randn(3, 4, 4, generator=torch.Generator().manual_seed(0))
        assert torch.allclose(scaled_residual(r, 0.5), scaled_residual(r, 1.0) / 2.0)


class TestCondConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            CondConfig(scale_base=-0.1)
        with pytest.raises(ValueError):
            CondConfig(kind="segmentation")
        with pytest.raises(ValueError):
            CondConfig(scale_axis="channel")

    def test_scheduled_scale_endpoints(self):
        cfg = CondConfig(enabled=True, scale_base=0.25, scale_axis="timestep",
                         scale_direction="decreasing")
        sched = build_scale_schedule(cfg, 50)
        assert sched.values[0] == 0.25
        assert sched.values[-1] == 0.125

    def test_layer_scale_resolution(self):
        cfg = CondConfig(enabled=True, scale_base=0.25, scale_axis="layer",
                         scale_direction="decreasing")
        sched = build_scale_schedule(cfg, 50)
        assert resolve_scale(cfg, sched, 0, 6) == 0.25
        assert resolve_scale(cfg, sched, 0, 11) == 0.125


class TestPipelineIdentities:
    def test_disabled_vs_zero_scale_bit_identical(self, small_weights, small_images):
        content, style = small_images
        rc_off = RunConfig("cn_off", InjectionConfig(), CondConfig(enabled=False), steps=4)
        rc_zero = RunConfig("cn_zero", InjectionConfig(),
                            CondConfig(enabled=True, scale_base=0.0), steps=4)
        a = stylize_pair(content, style, rc_off, small_weights)
        b = stylize_pair(content, style, rc_zero, small_weights)
        assert np.array_equal(a, b)

    def test_cn_does_not_change_resolved_gammas(self, small_weights, small_images):
        content, style = small_images
        inj = InjectionConfig(gamma_base=0.75, gamma_axis="timestep",
                              gamma_direction="decreasing")
        log_off, log_on = InjectionLog(), InjectionLog()
        rc_off = RunConfig("off", inj, CondConfig(enabled=False), steps=3)
        rc_on = RunConfig("on", inj, CondConfig(enabled=True, scale_base=0.5), steps=3)
        stylize_pair(content, style, rc_off, small_weights, log=log_off)
        stylize_pair(content, style, rc_on, small_weights, log=log_on)
        gammas_off = [(t, l, g) for t, l, g, _ in log_off.rows]
        gammas_on = [(t, l, g) for t, l, g, _ in log_on.rows]
        assert gammas_off == gammas_on

    def test_enabled_cn_changes_output(self, small_weights, small_images):
        content, style = small_images
        inj = InjectionConfig()
        a = stylize_pair(content, style,
                         RunConfig("off", inj, CondConfig(enabled=False), steps=3),
                         small_weights)
        b = stylize_pair(content, style,
                         RunConfig("on", inj, CondConfig(enabled=True, scale_base=1.0),
                                   steps=3),
                         small_weights)
        assert not np.array_equal(a, b)

    def test_hook_requires_enabled_config(self, cond_setup):
        weights, smap, _ = cond_setup
        with pytest.raises(ValueError):
            conditioning_hook(CondConfig(enabled=False), weights, smap)

    def test_structure_map_serializes_as_rank2_tlat(self, tmp_path, cond_setup):
        from stylesched.io import read_tlat, write_tlat

        _, smap, _ = cond_setup
        path = tmp_path / "smap.tlat"
        write_tlat(path, smap.data.numpy())
        back = read_tlat(path)
        assert back.shape == tuple(smap.data.shape)
        assert np.allclose(back, smap.data.numpy())
