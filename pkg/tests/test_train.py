"""Training-loop tests: convergence smoke, bitwise determinism and
resume, divergence detection, and evaluation table contracts."""

import os

import numpy as np
import pytest

from spikekit.dataset import build_dataset
from spikekit.errors import ConfigMismatchError, NumericalError
from spikekit.metrics import PSNR_CAP
from spikekit.simulate import SensorParams, synthetic_scene
from spikekit.swinsf import ModelConfig, load_checkpoint
from spikekit.training import (
    TrainRunConfig,
    evaluate_checkpoint,
    evaluate_classic,
    evaluate_model,
    train,
)

TINY = dict(
    channels=8, n_rssb=1, n_sab_per_rssb=2, window=5, n_heads=2,
    t_left=3, t_mid=5, t_right=3,
)


def tiny_samples(cfg, n=2, size=16, speed=1.0, seed=0):
    scene = synthetic_scene("moving_bar", size, size, cfg.t_total * n, speed=speed)
    return build_dataset([scene], windows=(cfg.t_left, cfg.t_mid, cfg.t_right), seed=seed)


class TestTrainLoop:
    def test_loss_decreases_on_overfit_smoke(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        run = TrainRunConfig(epochs=32, lr0=1e-3, decay_every=1000, batch_size=1)
        res = train(cfg, run, samples)
        first, last = res.history[0][1], res.history[-1][1]
        assert last < first
        assert len(res.history) == 32
        # After a warm-up quarter, epoch-average losses fall monotonically
        # at quarter granularity.
        losses = [h[1] for h in res.history]
        quarters = [np.mean(losses[i : i + 8]) for i in range(0, 32, 8)]
        assert quarters[1] > quarters[2] > quarters[3]

    def test_two_runs_bitwise_identical(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        run = TrainRunConfig(epochs=6, lr0=1e-3, decay_every=100)

        a = train(cfg, run, samples)
        b = train(cfg, run, samples)
        for name in a.params:
            np.testing.assert_array_equal(a.params[name].data, b.params[name].data)
        assert [h[1] for h in a.history] == [h[1] for h in b.history]

    def test_resume_reproduces_full_run_bitwise(self, tmp_path):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        full = train(cfg, TrainRunConfig(epochs=8, lr0=1e-3, decay_every=3), samples)

        part_dir = str(tmp_path / "part")
        train(
            cfg,
            TrainRunConfig(epochs=4, lr0=1e-3, decay_every=3, checkpoint_every=50),
            samples,
            out_dir=part_dir,
        )
        resumed = train(
            cfg,
            TrainRunConfig(epochs=8, lr0=1e-3, decay_every=3),
            samples,
            resume_from=os.path.join(part_dir, "ckpt_final.swsf"),
        )
        for name in full.params:
            np.testing.assert_array_equal(full.params[name].data, resumed.params[name].data)
        # Resumed history covers exactly the remaining epochs.
        assert [h[0] for h in resumed.history] == [4, 5, 6, 7]
        assert [h[1] for h in resumed.history] == [h[1] for h in full.history[4:]]

    def test_lambda_changes_trajectory(self):
        cfg_on = ModelConfig(**TINY)
        cfg_off = ModelConfig(**{**TINY, "lam": 0.0})
        samples = tiny_samples(cfg_on)
        run = TrainRunConfig(epochs=6, lr0=1e-3, decay_every=100)
        res_on = train(cfg_on, run, samples)
        res_off = train(cfg_off, run, samples)
        psnr_left_on = res_on.eval_rows[-1]["psnr_left"]
        psnr_left_off = res_off.eval_rows[-1]["psnr_left"]
        assert psnr_left_on != psnr_left_off

    @pytest.mark.filterwarnings("ignore::RuntimeWarning")  # overflow is the point
    def test_divergent_run_raises(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        run = TrainRunConfig(epochs=50, lr0=1e6, decay_every=1000)
        with pytest.raises(NumericalError, match="non-finite"):
            train(cfg, run, samples)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError, match="empty"):
            train(ModelConfig(**TINY), TrainRunConfig(epochs=1), [])

    def test_stream_length_mismatch_rejected(self):
        cfg = ModelConfig(**TINY)
        other = ModelConfig(**{**TINY, "t_mid": 7})
        samples = tiny_samples(other)
        with pytest.raises(ConfigMismatchError):
            train(cfg, TrainRunConfig(epochs=1), samples)

    def test_out_dir_artifacts(self, tmp_path):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        out = str(tmp_path / "run")
        res = train(
            cfg,
            TrainRunConfig(epochs=4, lr0=1e-3, decay_every=100, checkpoint_every=2),
            samples,
            out_dir=out,
        )
        assert os.path.exists(os.path.join(out, "ckpt_final.swsf"))
        assert os.path.exists(os.path.join(out, "ckpt_epoch00002.swsf"))
        assert os.path.exists(os.path.join(out, "train_log.txt"))
        assert os.path.exists(os.path.join(out, "loss_curve.png"))
        assert os.path.exists(os.path.join(out, "final_eval_metrics.csv"))
        assert os.path.exists(os.path.join(out, "final_eval_metrics.png"))
        ck = load_checkpoint(res.checkpoint_path)
        assert ck.epoch == 4 and ck.config == cfg

    def test_holdout_split_used_for_final_eval(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg, n=3)
        res = train(
            cfg,
            TrainRunConfig(epochs=2, lr0=1e-3),
            samples[:2],
            holdout=samples[2:],
        )
        # One holdout sample plus the mean row.
        assert len(res.eval_rows) == 2
        assert any("holdout" in line for line in res.log_lines)


class TestEvaluate:
    def test_perfect_reconstruction_hits_caps(self):
        # Constant half-intensity scenes are recovered exactly by the
        # interval estimator, so PSNR caps and SSIM is 1.
        scene = synthetic_scene("moving_bar", 16, 16, 17, speed=0.0)
        frames = np.full((17, 16, 16), 0.5)
        from spikekit.simulate import LuminanceSequence

        samples = build_dataset([LuminanceSequence(frames)], windows=(5, 7, 5))
        rows = evaluate_classic("tfi", samples, SensorParams(), (5, 7, 5))
        assert rows[0]["psnr_mid"] == PSNR_CAP
        assert rows[0]["ssim_mid"] == 1.0

    def test_mean_row_is_arithmetic_mean(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg, n=3)
        rows = evaluate_classic("tfp", samples, SensorParams(), (3, 5, 3))
        body, mean = rows[:-1], rows[-1]
        assert mean["sample"] == "mean"
        for key in mean:
            if key != "sample":
                assert abs(mean[key] - np.mean([r[key] for r in body])) <= 1e-9

    def test_both_classic_methods_report(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        for method in ("tfi", "tfp"):
            rows = evaluate_classic(method, samples, SensorParams(), (3, 5, 3))
            assert len(rows) == len(samples) + 1
            assert all(np.isfinite(row["psnr_mid"]) for row in rows)

    def test_model_evaluation_from_checkpoint(self, tmp_path):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        out = str(tmp_path)
        res = train(cfg, TrainRunConfig(epochs=2, lr0=1e-3), samples, out_dir=out)
        ck = load_checkpoint(res.checkpoint_path)
        rows = evaluate_checkpoint(ck, samples)
        assert len(rows) == 3
        np.testing.assert_allclose(
            [r["psnr_mid"] for r in rows],
            [r["psnr_mid"] for r in res.eval_rows],
            atol=1e-5,
        )

    def test_window_mismatch_rejected(self):
        cfg = ModelConfig(**TINY)
        samples = tiny_samples(cfg)
        with pytest.raises(ConfigMismatchError):
            evaluate_classic("tfi", samples, SensorParams(), (28, 41, 28))
        other = ModelConfig(**{**TINY, "t_mid": 9})
        from spikekit.swinsf import init_parameters

        with pytest.raises(ConfigMismatchError):
            evaluate_model(other, init_parameters(other, np.float32), samples)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            evaluate_classic("wavelet", [], SensorParams(), (1, 1, 1))
