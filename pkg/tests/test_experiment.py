import csv

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stylesched import metrics as M
from stylesched.experiment import (BenchmarkSpec, ParetoPoint, RunConfig,
                                   additivity_residual, compare_directions,
                                   directional_grid, dominates, emit_report,
                                   paper_preset_grid, pareto_front,
                                   results_to_points, run_grid, run_one,
                                   smoke_grid, stylize_pair)
from stylesched.procgen import (make_benchmark, make_content_image,
                                make_style_image)
from stylesched.struct_cond import CondConfig
from stylesched.style_injection import InjectionConfig


def brute_force_front(points):
    """Exhaustive pairwise-dominance oracle (kept independent of the sweep)."""
    kept = []
    for i, p in enumerate(points):
        if not any(q.x <= p.x and q.y <= p.y and (q.x < p.x or q.y < p.y)
                   for j, q in enumerate(points) if j != i):
            kept.append(p)
    return kept


class TestProcgen:
    def test_deterministic(self):
        assert np.array_equal(make_content_image(5, 32), make_content_image(5, 32))
        assert np.array_equal(make_style_image(5, 32), make_style_image(5, 32))

    def test_range_and_shape(self):
        for maker in (make_content_image, make_style_image):
            img = maker(9, 24)
            assert img.shape == (24, 24, 3)
            assert img.dtype == np.float32
            assert 0.0 <= img.min() and img.max() <= 1.0

    def test_benchmark_counts(self):
        contents, styles = make_benchmark(0, 3, 5, 16)
        assert len(contents) == 3 and len(styles) == 5

    def test_distinct_seeds_distinct_images(self):
        assert not np.array_equal(make_style_image(1, 32), make_style_image(2, 32))


class TestParetoFront:
    def test_singleton(self):
        pts = [ParetoPoint(1.0, 1.0, "a")]
        assert pareto_front(pts) == pts

    def test_three_point_example(self):
        pts = [ParetoPoint(1.0, 1.0, "a"), ParetoPoint(2.0, 2.0, "b"),
               ParetoPoint(0.5, 3.0, "c")]
        front = pareto_front(pts)
        assert [p.id for p in front] == ["c", "a"]

    def test_published_ablation_points_all_retained(self):
        pts = [ParetoPoint(16.572, 0.561, "fixed_050"),
               ParetoPoint(18.135, 0.505, "fixed_075"),
               ParetoPoint(16.285, 0.564, "combo_sqrt")]
        assert len(pareto_front(pts)) == 3

    def test_duplicates_survive_together(self):
        pts = [ParetoPoint(1.0, 1.0, "a"), ParetoPoint(1.0, 1.0, "b")]
        assert {p.id for p in pareto_front(pts)} == {"a", "b"}

    def test_non_finite_rejected(self):
        with pytest.raises(ValueError):
            ParetoPoint(float("nan"), 0.0, "bad")

    def test_output_sorted_by_x_stable(self):
        pts = [ParetoPoint(2.0, 0.5, "late"), ParetoPoint(1.0, 1.0, "first"),
               ParetoPoint(1.0, 1.0, "second")]
        assert [p.id for p in pareto_front(pts)] == ["first", "second", "late"]

    @settings(max_examples=300, deadline=None)
    @given(st.lists(st.tuples(st.integers(0, 20), st.integers(0, 20)),
                    min_size=1, max_size=60))
    def test_matches_brute_force_oracle(self, coords):
        pts = [ParetoPoint(float(x), float(y), str(i))
               for i, (x, y) in enumerate(coords)]
        got = {p.id for p in pareto_front(pts)}
        expected = {p.id for p in brute_force_front(pts)}
        assert got == expected

    @settings(max_examples=100, deadline=None)
    @given(st.lists(st.tuples(st.floats(0, 10), st.floats(0, 10)),
                    min_size=1, max_size=40))
    def test_excluded_points_are_dominated(self, coords):
        pts = [ParetoPoint(x, y, str(i)) for i, (x, y) in enumerate(coords)]
        front = pareto_front(pts)
        front_ids = {p.id for p in front}
        for a in front:
            assert not any(dominates(b, a) for b in front)
        for p in pts:
            if p.id not in front_ids:
                assert any(dominates(q, p) for q in front)


class TestAdditivity:
    def test_paper_lpips_axis(self):
        mk = M.MetricRecord.from_components
        res = additivity_residual(mk(18.135, 0.505, 0.228), mk(16.250, 0.570, 0.291),
                                  mk(18.384, 0.498, 0.225), mk(16.476, 0.555, 0.284))
        assert res["content"] == pytest.approx(-0.008, abs=1e-3)
        assert res["style"] == pytest.approx(-0.023, abs=1e-3)

    def test_identical_records_zero(self):
        rec = M.MetricRecord.from_components(1.0, 0.5, 0.2)
        res = additivity_residual(rec, rec, rec, rec)
        assert all(v == pytest.approx(0.0, abs=1e-12) for v in res.values())

    @settings(max_examples=100, deadline=None)
    @given(b=st.floats(0.1, 5.0), dg=st.floats(-0.05, 0.5), dc=st.floats(-0.05, 0.5))
    def test_zero_residual_when_combined_is_additive(self, b, dg, dc):
        mk = M.MetricRecord.from_components
        base = mk(b, b / 2.0, b / 4.0)
        gamma_only = mk(b + dg, b / 2.0 + dg, b / 4.0)
        cn_only = mk(b + dc, b / 2.0 + dc, b / 4.0)
        combined_s = base.style + dg + dc
        combined_c = base.content + dg + dc
        combined = mk(combined_s, combined_c, b / 4.0)
        res = additivity_residual(base, gamma_only, cn_only, combined)
        assert res["style"] == pytest.approx(0.0, abs=1e-9)
        assert res["content"] == pytest.approx(0.0, abs=1e-9)


class TestPresets:
    def test_paper_grid_has_35_distinct_configs(self):
        grid = paper_preset_grid()
        ids = [rc.config_id for rc in grid]
        assert len(ids) == 35
        assert len(set(ids)) == 35

    def test_paper_grid_composition(self):
        grid = {rc.config_id: rc for rc in paper_preset_grid()}
        baselines = [rc for rc in grid.values()
                     if rc.injection.gamma_axis == "none" and not rc.cond.enabled]
        assert sorted(rc.injection.gamma_base for rc in baselines) == [0.50, 0.75, 0.90]
        combos = [rc for rc in grid.values()
                  if rc.injection.gamma_axis != "none" and rc.cond.enabled]
        assert len(combos) == 4
        ref = grid["gamma_timestep_dec_linear_g075_ref"]
        main = grid["gamma_timestep_dec_linear_g075"]
        assert ref.injection == main.injection  # printed twice upstream, kept as reference

    def test_directional_grid_covers_axes_and_shapes(self):
        grid = directional_grid()
        assert len(grid) == 20
        cells = {(rc.injection.gamma_axis, rc.injection.gamma_shape,
                  rc.injection.gamma_direction) for rc in grid}
        assert len(cells) == 20

    def test_config_validation(self):
        with pytest.raises(ValueError):
            RunConfig("", InjectionConfig(), CondConfig())
        with pytest.raises(ValueError):
            RunConfig("x", InjectionConfig(), CondConfig(), steps=0)


@pytest.fixture(scope="module")
def mini_bench():
    return BenchmarkSpec(n_content=2, n_style=2, image_size=16, seed=1)


class TestStylizePair:
    def test_deterministic(self, tiny_weights):
        content, style = make_content_image(1, 16), make_style_image(2, 16)
        rc = smoke_grid(steps=4)[0]
        a = stylize_pair(content, style, rc, tiny_weights)
        b = stylize_pair(content, style, rc, tiny_weights)
        assert np.array_equal(a, b)

    def test_identity_configuration_close_to_reconstruction(self, tiny_weights,
                                                            tiny_autoencoder):
        from stylesched.toy_diffusion import NoiseSchedule, ddim_invert, ddim_sample

        content = make_content_image(1, 16)
        rc = RunConfig("ident", InjectionConfig(gamma_base=1.0, tau=1.0),
                       CondConfig(enabled=False), steps=6)
        out = stylize_pair(content, content, rc, tiny_weights)
        ns = NoiseSchedule.cosine(6)
        xt, _, _ = ddim_invert(tiny_autoencoder.encode(content), tiny_weights, ns,
                               capture=False)
        recon_latent, _ = ddim_sample(xt, tiny_weights, ns)
        recon = tiny_autoencoder.decode(recon_latent)
        assert float(np.abs(out - recon).mean()) < 0.05

    def test_output_shape_and_range(self, tiny_weights):
        out = stylize_pair(make_content_image(1, 16), make_style_image(2, 16),
                           smoke_grid(steps=3)[0], tiny_weights)
        assert out.shape == (16, 16, 3)
        assert 0.0 <= out.min() and out.max() <= 1.0


class TestRunGrid:
    def test_empty_grid_rejected(self, tiny_weights, mini_bench):
        with pytest.raises(ValueError, match="empty"):
            run_grid([], mini_bench, tiny_weights)

    def test_duplicate_ids_rejected(self, tiny_weights, mini_bench):
        rc = smoke_grid(steps=2)[0]
        with pytest.raises(ValueError, match="duplicate"):
            run_grid([rc, rc], mini_bench, tiny_weights)

    def test_empty_benchmark_rejected(self, tiny_weights):
        with pytest.raises(ValueError, match="at least one"):
            BenchmarkSpec(n_content=0, n_style=2, image_size=16).generate()

    def test_counts_and_aggregate(self, tiny_weights, mini_bench, tmp_path):
        res = run_grid(smoke_grid(steps=3), mini_bench, tiny_weights,
                       results_dir=tmp_path)
        assert len(res) == 1
        assert len(res[0].pairs) == 4
        with open(tmp_path / "results.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert len(rows) == 1
        with open(tmp_path / "results_pairs.csv", newline="") as fh:
            pair_rows = list(csv.DictReader(fh))
        assert len(pair_rows) == 4
        agg = res[0].record
        assert agg.style == pytest.approx(
            np.mean([p.record.style for p in res[0].pairs]), abs=1e-12)
        assert agg.combined == pytest.approx(
            (1.0 + agg.style) * (1.0 + agg.content), abs=1e-9)

    def test_resume_skips_completed(self, tiny_weights, mini_bench, tmp_path):
        grid = smoke_grid(steps=3)
        first = run_grid(grid, mini_bench, tiny_weights, results_dir=tmp_path)
        second = run_grid(grid, mini_bench, tiny_weights, results_dir=tmp_path)
        assert second[0].record.style == pytest.approx(first[0].record.style, rel=1e-9)
        with open(tmp_path / "results.csv", newline="") as fh:
            assert len(list(csv.DictReader(fh))) == 1  # not duplicated

    def test_aggregate_permutation_invariant(self, tiny_weights, mini_bench):
        # run_one sorts pair rows before aggregating: feed reversed benchmarks
        contents, styles = mini_bench.generate()
        fx = M.FeatureExtractor(0)
        from stylesched.toy_diffusion import LinearAutoencoder

        enc = LinearAutoencoder(image_size=16)
        rc = smoke_grid(steps=3)[0]
        res_fwd = run_one(rc, contents, styles, tiny_weights, fx, enc)
        res_rev = run_one(rc, list(reversed(contents)), list(reversed(styles)),
                          tiny_weights, fx, enc)
        # same pair set, different execution order; aggregates must agree
        fwd = sorted((p.record.style for p in res_fwd.pairs))
        rev = sorted((p.record.style for p in res_rev.pairs))
        assert fwd == pytest.approx(rev, rel=1e-9)


class TestReport:
    def _results(self, tiny_weights, mini_bench, tmp_path):
        grid = [smoke_grid(steps=3)[0]]
        return run_grid(grid, mini_bench, tiny_weights), grid

    def test_single_result_report(self, tiny_weights, mini_bench, tmp_path):
        results, grid = self._results(tiny_weights, mini_bench, tmp_path)
        md, svg = emit_report(results)
        assert md.count("| smoke_gamma_timestep_dec_g075 |") == 1
        assert svg.count("<circle") == 1

    def test_report_deterministic(self, tiny_weights, mini_bench, tmp_path):
        results, grid = self._results(tiny_weights, mini_bench, tmp_path)
        assert emit_report(results) == emit_report(results)

    def test_frontier_polyline_through_dominating_point(self):
        mk = M.MetricRecord.from_components
        from stylesched.experiment import RunResult

        dominating = RunResult("win", mk(0.5, 0.5, 0.1), 1.0)
        dominated = RunResult("lose", mk(1.0, 1.0, 0.1), 1.0)
        md, svg = emit_report([dominating, dominated])
        assert "- win:" in md
        assert "- lose:" not in md
        assert svg.count("polyline") == 1

    def test_empty_results_rejected(self):
        with pytest.raises(ValueError):
            emit_report([])

    def test_compare_directions_pairs_runs(self, tiny_weights):
        bench = BenchmarkSpec(n_content=1, n_style=1, image_size=16, seed=1)
        grid = directional_grid(steps=2)[:4]  # layer-axis linear+quadratic, both dirs
        results = run_grid(grid, bench, tiny_weights)
        comps = compare_directions(results, grid)
        assert len(comps) == 2
        for comp in comps:
            assert comp.decreasing.config_id.endswith("dec_g075")
            assert comp.increasing.config_id.endswith("inc_g075")
