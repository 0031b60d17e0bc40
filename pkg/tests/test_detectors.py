import math
from dataclasses import replace

import numpy as np
import pytest

from wfscope import (DetectorConfig, PhasePoint, SampledSignal, Verdict, WindowSpec, seminorm_uniformity_audit,
                     wf_map, wf_smooth_detect, wf_sobolev_detect, window_robustness_audit)
from wfscope.corpus import COMPASS, GRID_1D, ROBUSTNESS_WINDOWS, corpus_members, get_member
from wfscope.detectors import TestFunction, random_test_functions

CFG = DetectorConfig()
P0 = PhasePoint((0.0,), (1.0,))
N0 = PhasePoint((0.0,), (-1.0,))


def cfg_for(name, f, **kw):
    return replace(get_member(name).detector_config(f.grid), **kw)


class TestConfig:
    def test_partition_below_cap(self):
        part = CFG.partition(GRID_1D)
        assert part.outer == pytest.approx(GRID_1D.cap())
        assert part.count == 4

    def test_max_frequency(self):
        part = replace(CFG, max_frequency=128.0).partition(GRID_1D)
        assert part.outer == pytest.approx(128.0)

    def test_digest_stable_and_sensitive(self):
        assert CFG.digest() == DetectorConfig().digest()
        assert replace(CFG, threads=8).digest() == CFG.digest()
        assert replace(CFG, k_radius=0.1).digest() != CFG.digest()

    def test_inner_cone(self):
        assert CFG.cone((1.0, 0.0)).half_angle == pytest.approx(math.pi / 8)


class TestSmooth:
    def test_smooth_bump_regular(self, corpus_signal):
        f = corpus_signal("smooth_bump")
        for x in (-0.5, 0.0, 0.5):
            for u in (1.0, -1.0):
                assert wf_smooth_detect(f, PhasePoint((x,), (u,)), CFG).verdict is Verdict.REGULAR

    def test_delta_singular(self, corpus_signal):
        v = wf_smooth_detect(corpus_signal("delta"), P0, CFG)
        assert v.verdict is Verdict.SINGULAR
        assert v.exponent == pytest.approx(0.0, abs=0.2)

    def test_plus_i0_direction(self, corpus_signal):
        f = corpus_signal("plus_i0")
        cfg = cfg_for("plus_i0", f)
        assert wf_smooth_detect(f, P0, cfg).verdict is Verdict.SINGULAR
        assert wf_smooth_detect(f, N0, cfg).verdict is Verdict.REGULAR

    def test_heaviside_away_from_jump(self, corpus_signal):
        f = corpus_signal("heaviside")
        for u in (1.0, -1.0):
            assert wf_smooth_detect(f, PhasePoint((0.5,), (u,)), CFG).verdict is Verdict.REGULAR

    def test_regular_implies_threshold(self, corpus_signal):
        for name in ("heaviside", "smooth_bump", "abs_t"):
            f = corpus_signal(name)
            for v in wf_map(f, [(-0.5,), (0.0,), (0.5,)], [(1.0,), (-1.0,)], CFG):
                if v.verdict is Verdict.REGULAR:
                    assert v.diagnostics["floor_hit"] or v.exponent >= v.diagnostics["threshold"]
                    assert v.diagnostics["threshold"] <= CFG.n_threshold

    def test_zero_signal_floor(self):
        f = SampledSignal(GRID_1D, np.zeros(GRID_1D.n))
        v = wf_smooth_detect(f, P0, CFG)
        assert v.verdict is Verdict.REGULAR and v.diagnostics["floor_hit"] and v.exponent == math.inf

    def test_overhang_inconclusive(self, corpus_signal):
        v = wf_smooth_detect(corpus_signal("heaviside"), PhasePoint((15.9,), (1.0,)), CFG)
        assert v.verdict is Verdict.INCONCLUSIVE
        assert "overhangs" in v.diagnostics["reason"]

    def test_bad_shells_inconclusive(self, corpus_signal):
        from wfscope import ShellPartition
        cfg = replace(CFG, shells=ShellPartition(500.0, 4))
        v = wf_smooth_detect(corpus_signal("heaviside"), P0, cfg)
        assert v.verdict is Verdict.INCONCLUSIVE and "cap" in v.diagnostics["reason"]

    def test_calibration_off_uses_absolute_threshold(self, corpus_signal):
        v = wf_smooth_detect(corpus_signal("smooth_bump"), P0, replace(CFG, calibration=None))
        assert v.diagnostics["threshold"] == CFG.n_threshold

    def test_deterministic(self, corpus_signal):
        f = corpus_signal("abs_t")
        a, b = wf_smooth_detect(f, P0, CFG), wf_smooth_detect(f, P0, CFG)
        assert a == b


class TestSobolev:
    @pytest.mark.parametrize("name,lo,hi", [("heaviside", 0.3, 0.7), ("abs_t", 1.0, 1.8)])
    def test_examples(self, corpus_signal, name, lo, hi):
        f = corpus_signal(name)
        assert wf_sobolev_detect(f, P0, lo, CFG).verdict is Verdict.REGULAR
        assert wf_sobolev_detect(f, P0, hi, CFG).verdict is Verdict.SINGULAR

    def test_very_negative_order(self, corpus_signal):
        for m in corpus_members():
            f = corpus_signal(m.name)
            cfg = m.detector_config(f.grid)
            for p in m.scan_points()[:4]:
                assert wf_sobolev_detect(f, p, -10.0, cfg).verdict is Verdict.REGULAR, (m.name, p)

    def test_rapid_decay_override_reported(self, corpus_signal):
        f = corpus_signal("plus_i0")
        cfg = cfg_for("plus_i0", f)
        v = wf_sobolev_detect(f, PhasePoint((0.5,), (1.0,)), 2.0, cfg)
        assert v.verdict is Verdict.REGULAR and v.diagnostics.get("rapid_decay")
        raw = wf_sobolev_detect(f, PhasePoint((0.5,), (1.0,)), 2.0, replace(cfg, rapid_override=False))
        assert raw.tail is v.tail

    @pytest.mark.parametrize("name", ["heaviside", "abs_t", "delta", "square_wave", "plus_i0"])
    def test_monotone_in_s(self, corpus_signal, name):
        m = get_member(name)
        f = corpus_signal(name)
        cfg = m.detector_config(f.grid)
        orders = [-1.0, -0.25, 0.3, 0.7, 1.2, 1.8, 2.5]
        for p in m.scan_points():
            verdicts = [wf_sobolev_detect(f, p, s, cfg).verdict for s in orders]
            for i, v in enumerate(verdicts):
                if v is Verdict.REGULAR:
                    assert all(w is Verdict.REGULAR for w in verdicts[:i]), (p, verdicts)

    @pytest.mark.parametrize("m", corpus_members(), ids=lambda m: m.name)
    def test_smooth_regular_implies_sobolev_regular(self, corpus_signal, m):
        f = corpus_signal(m.name)
        cfg = m.detector_config(f.grid)
        smooth = {v.point: v.verdict for v in wf_map(f, m.scan_positions, m.scan_directions, cfg)}
        for s in (0.0, 1.0, 2.0):
            for v in wf_map(f, m.scan_positions, m.scan_directions, replace(cfg, s=s)):
                if smooth[v.point] is Verdict.REGULAR:
                    assert v.verdict is Verdict.REGULAR, (v.point, s)


class TestMap:
    def test_heaviside(self, corpus_signal):
        xs = [(-1.0,), (-0.5,), (0.0,), (0.5,), (1.0,)]
        out = wf_map(corpus_signal("heaviside"), xs, [(1.0,), (-1.0,)], CFG)
        assert len(out) == 10
        for v in out:
            want = Verdict.SINGULAR if v.point.x0 == (0.0,) else Verdict.REGULAR
            assert v.verdict is want

    def test_sorted_and_thread_independent(self, corpus_signal):
        f = corpus_signal("square_wave")
        xs = [(1.0,), (-1.0,), (0.0,), (0.5,)]
        a = wf_map(f, xs, [(-1.0,), (1.0,)], CFG)
        b = wf_map(f, xs, [(-1.0,), (1.0,)], replace(CFG, threads=4))
        assert a == b
        keys = [v.point.sort_key() for v in a]
        assert keys == sorted(keys)

    def test_errors_isolated(self, corpus_signal):
        out = wf_map(corpus_signal("heaviside"), [(0.0,), (15.99,)], [(1.0,)], CFG)
        assert [v.verdict for v in out] == [Verdict.SINGULAR, Verdict.INCONCLUSIVE]

    def test_empty(self, corpus_signal):
        with pytest.raises(ValueError):
            wf_map(corpus_signal("heaviside"), [], [(1.0,)], CFG)

    def test_edge_conormal(self, corpus_signal):
        f = corpus_signal("half_plane_edge")
        cfg = get_member("half_plane_edge").detector_config(f.grid)
        for v in wf_map(f, [(0.0, 0.0)], COMPASS, cfg):
            conormal = abs(abs(v.point.direction[0]) - 1) < 1e-12
            assert v.verdict is (Verdict.SINGULAR if conormal else Verdict.REGULAR)

    def test_cone_shrinking_keeps_singular(self, corpus_signal):
        for name in ("delta", "heaviside", "abs_t", "square_wave"):
            m = get_member(name)
            f = corpus_signal(name)
            for angle in (math.pi / 4, math.pi / 8, math.pi / 32):
                cfg = replace(m.detector_config(f.grid), cone_angle=angle)
                for p in m.scan_points():
                    if m.wf_truth(p.x0, p.direction) is Verdict.SINGULAR:
                        assert wf_smooth_detect(f, p, cfg).verdict is Verdict.SINGULAR

    def test_cone_shrinking_2d(self, corpus_signal):
        f = corpus_signal("half_plane_edge")
        m = get_member("half_plane_edge")
        for angle in (math.pi / 4, math.pi / 6):
            cfg = replace(m.detector_config(f.grid), cone_angle=angle)
            for u in ((1.0, 0.0), (-1.0, 0.0)):
                assert wf_smooth_detect(f, PhasePoint((0.0, 0.0), u), cfg).verdict is Verdict.SINGULAR


class TestRobustness:
    def test_delta(self, corpus_signal):
        r = window_robustness_audit(corpus_signal("delta"), P0, CFG, ROBUSTNESS_WINDOWS)
        assert r.agreement and r.verdicts[0] is Verdict.SINGULAR
        assert r.dispersion < 0.3

    def test_heaviside(self, corpus_signal):
        r = window_robustness_audit(corpus_signal("heaviside"), P0, CFG, ROBUSTNESS_WINDOWS)
        assert r.agreement and r.verdicts[0] is Verdict.SINGULAR
        assert all(abs(n - 1) < 0.3 for n in r.exponents)

    def test_smooth(self, corpus_signal):
        r = window_robustness_audit(corpus_signal("smooth_bump"), P0, CFG, ROBUSTNESS_WINDOWS)
        assert r.agreement and r.verdicts[0] is Verdict.REGULAR

    def test_sobolev_thresholds(self, corpus_signal):
        r = window_robustness_audit(corpus_signal("heaviside"), P0, CFG, ROBUSTNESS_WINDOWS, s=0.7)
        assert r.agreement and r.verdicts[0] is Verdict.SINGULAR
        assert all(abs(t - 0.5) < 0.15 for t in r.thresholds)
        assert r.dispersion < 0.15

    def test_bspline_window_reported(self, corpus_signal):
        wins = ROBUSTNESS_WINDOWS[:2] + (WindowSpec("bspline", 1.0, order=5),)
        r = window_robustness_audit(corpus_signal("heaviside"), P0, CFG, wins)
        assert r.windows[-1] == "bspline5:1"
        assert r.agreement

    def test_needs_three(self, corpus_signal):
        with pytest.raises(ValueError):
            window_robustness_audit(corpus_signal("delta"), P0, CFG, ROBUSTNESS_WINDOWS[:2])


class TestSeminormAudit:
    def test_family_supported_in_ball(self):
        for chi in random_test_functions(20, 0.0625, 1, seed=4):
            assert chi.support_radius <= 0.0625 + 1e-15
        fam2 = random_test_functions(6, 0.5, 2, seed=4)
        rng = np.random.default_rng(0)
        ang = rng.uniform(0, 2 * np.pi, 500)
        t = 0.5001 * np.stack([np.cos(ang), np.sin(ang)], -1)
        for chi in fam2:
            assert np.all(chi.evaluate(t, dim=2) == 0)

    def test_replayable(self):
        a = random_test_functions(5, 0.1, 1, seed=9)
        b = random_test_functions(5, 0.1, 1, seed=9)
        assert [c.ident for c in a] == [c.ident for c in b]
        assert [c.ident for c in a] != [c.ident for c in random_test_functions(5, 0.1, 1, seed=10)]

    def test_smooth_bump(self, corpus_signal):
        r = seminorm_uniformity_audit(corpus_signal("smooth_bump"), P0, CFG, m=8, k=6, n=4, seed=1)
        assert len(r.ratios) == 8
        assert math.isfinite(r.family_max) and r.family_max > 0
        assert not r.growth_flag

    def test_zero_signal(self):
        f = SampledSignal(GRID_1D, np.zeros(GRID_1D.n))
        r = seminorm_uniformity_audit(f, P0, CFG, m=4, k=2, n=4)
        assert all(v == 0 for v in r.ratios)

    def test_scale_invariant_ratio(self, corpus_signal):
        from wfscope.stft import stft_discrete
        from wfscope import window_seminorm
        f = corpus_signal("smooth_bump")
        chi = random_test_functions(1, 0.0625, 1, seed=2)[0]
        ratios = []
        for lam in (1.0, 3.5):
            c = chi.scaled(lam)
            tab = stft_discrete(f, c, [0.0])
            ratios.append(np.max(np.abs(tab.values)) / window_seminorm(c, 2))
        assert ratios[1] == pytest.approx(ratios[0], rel=1e-9)

    def test_not_regular(self, corpus_signal):
        with pytest.raises(ValueError, match="not Regular"):
            seminorm_uniformity_audit(corpus_signal("heaviside"), P0, CFG, m=2, k=2, n=4)
