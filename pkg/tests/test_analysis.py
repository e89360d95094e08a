import json

import numpy as np
import pytest

from ngsr.analysis import (
    MULT_ADDS_TOL,
    PARAMS_TOL,
    PUBLISHED,
    check_against_published,
    cost_report,
    count_multadds,
    count_params,
    nstb_multadds_estimate,
    stage1_block_multadds,
    wsa_complexity,
)
from ngsr.config import default_config, micro_config
from ngsr.weights import init_weights


class TestWsaComplexity:
    def test_direct_evaluation(self):
        assert wsa_complexity(8, 8, 4, 8) == 36864

    def test_polynomial_scaling_in_dim(self):
        base_first = 4 * 8 * 8 * 16
        base_second = 2 * 64 * 8 * 8 * 4
        doubled = wsa_complexity(8, 8, 8, 8)
        assert doubled == 4 * base_first + 2 * base_second

    def test_m1_substitution(self):
        h, w, d = 5, 7, 16
        assert wsa_complexity(h, w, d, 1) == 4 * h * w * d * d + 2 * h * w * d


class TestNstbEstimate:
    def test_training_resolution_x2(self):
        assert nstb_multadds_estimate(64 * 64, 2) == pytest.approx(10.0)

    def test_training_resolution_x4(self):
        assert nstb_multadds_estimate(64 * 64, 4) == pytest.approx(2.5)

    def test_linear_in_hw(self):
        assert nstb_multadds_estimate(2 * 64 * 64, 2) == pytest.approx(20.0)


class TestCountParams:
    @pytest.mark.parametrize("scale", [2, 3, 4])
    def test_within_published_band(self, scale):
        total = count_params(default_config(scale))
        target = PUBLISHED[scale]["params"]
        assert abs(total - target) / target <= PARAMS_TOL

    def test_scale_deltas_exact(self):
        p2 = count_params(default_config(2))
        assert count_params(default_config(3)) - p2 == 8655
        assert count_params(default_config(4)) - p2 == 20772

    def test_matches_initializer_exactly(self):
        for cfg in (micro_config(), default_config(2), default_config(3, attention="dot")):
            assert count_params(cfg) == init_weights(cfg, 0).total_params()


class TestCostReport:
    def test_totals_equal_layer_sums(self):
        rep = cost_report(default_config(2))
        assert rep.total_params == sum(l.params for l in rep.layers)
        assert rep.total_mult_adds == sum(l.mult_adds for l in rep.layers)

    def test_shallow_layer_values(self):
        rep = cost_report(default_config(2), (128, 128))    # LR 64x64, no padding
        shallow = next(l for l in rep.layers if l.path == "shallow")
        assert shallow.params == 1792
        assert shallow.mult_adds == 7077888                 # 27 * 64 * 4096

    def test_merge_layer_params(self):
        rep = cost_report(default_config(2))
        merge = next(l for l in rep.layers if l.path == "enc1.merge")
        assert merge.params == 16384 + 512

    def test_padding_rule_and_flag(self):
        rep = cost_report(default_config(2), (1280, 720))
        assert rep.lr == (640, 360)
        assert rep.lr_padded == (640, 384)
        assert rep.padded
        rep2 = cost_report(default_config(2), (1280, 768))
        assert not rep2.padded

    def test_conv_layers_scale_linearly_in_pixels(self):
        cfg = default_config(2)
        a = cost_report(cfg, (1024, 1024))
        b = cost_report(cfg, (2048, 2048))
        for la, lb in zip(a.layers, b.layers):
            if la.path.endswith((".ffn", ".merge", "shallow", ".cascade", ".dw", ".pw", ".conv1", ".conv2")):
                assert lb.mult_adds == 4 * la.mult_adds, la.path

    def test_monotone_in_resolution(self):
        cfg = default_config(3)
        small = count_multadds(cfg, (640, 360))
        big = count_multadds(cfg, (1280, 720))
        assert big > small

    def test_report_deterministic(self):
        a = cost_report(default_config(2)).to_json()
        b = cost_report(default_config(2)).to_json()
        assert a == b

    def test_json_schema(self):
        doc = json.loads(cost_report(default_config(2)).to_json())
        for key in ("config", "hr", "lr", "layers", "total_params", "total_mult_adds", "convention"):
            assert key in doc
        assert doc["convention"] == "mac-v1"
        assert doc["hr"] == [1280, 720]
        assert all(set(l) == {"path", "params", "mult_adds"} for l in doc["layers"])


class TestPublishedFigures:
    @pytest.mark.parametrize("scale", [2, 3, 4])
    def test_mult_adds_within_band(self, scale):
        total = count_multadds(default_config(scale), (1280, 720))
        target = PUBLISHED[scale]["mult_adds"]
        assert abs(total - target) / target <= MULT_ADDS_TOL

    def test_check_passes_for_defaults(self):
        for scale in (2, 3, 4):
            chk = check_against_published(cost_report(default_config(scale)))
            assert chk["pass"]
            assert chk["params"]["residual"] == count_params(default_config(scale)) - PUBLISHED[scale]["params"]

    def test_check_rejects_non_default_config(self):
        with pytest.raises(ValueError, match="default"):
            check_against_published(cost_report(micro_config()))

    @pytest.mark.parametrize("r", [2, 4])
    def test_stage1_block_cross_check(self, r):
        measured = stage1_block_multadds(default_config(r)) / 1e9
        approx = nstb_multadds_estimate(64 * 64, r)
        assert abs(measured - approx) / approx <= 0.15
