import pandas as pd
import pytest

from pyrgbd.config.ablation import AblationTableConfig
from pyrgbd.models.sod import SodModel
from pyrgbd.training import ablation
from pyrgbd.training.ablation import PretextCache, count_cda_invocations, row_config, run_ablation_matrix


@pytest.mark.parametrize("model", range(1, 10))
def test_t3_rows_build_and_count_their_cdas(tiny_config, synth_samples, model):
    row = AblationTableConfig("t3").get_row(model)
    config = row_config(tiny_config, row)
    network = SodModel(config.backbone(), config.ablation_config())

    assert config.ablation == row.name
    assert config.init_p1 == row.init_p1 and config.init_p2 == row.init_p2
    assert count_cda_invocations(network, synth_samples[0]) == row.cda_count


def test_counting_restores_training_mode(tiny_model, synth_samples):
    tiny_model.train()

    count_cda_invocations(tiny_model, synth_samples[0])

    assert tiny_model.training
    assert tiny_model.cda_invocations == 0


def test_pretext_cache_shares_stage1(tiny_config, synth_samples, monkeypatch):
    calls = []
    real_stage1 = ablation.run_stage1

    def counting_stage1(*args, **kwargs):
        calls.append(args[1].pretrain_fraction)
        return real_stage1(*args, **kwargs)

    monkeypatch.setattr(ablation, "run_stage1", counting_stage1)
    cache = PretextCache(synth_samples)
    table = AblationTableConfig("t3")

    cache.stage2(row_config(tiny_config, table.get_row(5)))
    cache.stage2(row_config(tiny_config, table.get_row(9)))
    cache.stage1(row_config(tiny_config, table.get_row(2)))

    assert calls == [1.0]
    assert len(cache._stage2) == 2


def test_run_ablation_matrix_small_table(tiny_config, synth_samples, tmp_path):
    frame = run_ablation_matrix(
        "t3",
        pretext_samples=synth_samples,
        train_samples=synth_samples[:4],
        config=tiny_config,
        test_samples=synth_samples[4:],
        models=[1, 3, 9],
        out_dir=tmp_path,
    )

    assert list(frame["row"]) == ["t3m1", "t3m3", "t3m9"]
    assert list(frame["cda_invocations"]) == [0, 0, 9]
    assert list(frame["cda_count"]) == [0, 0, 9]
    assert frame["mae"].between(0.0, 1.0).all()
    assert (frame["count"] == 2).all()
    saved = pd.read_csv(tmp_path / "ablation_t3.csv")
    assert list(saved["row"]) == list(frame["row"])
    assert (tmp_path / "t3m9" / "downstream_sod.pt").is_file()
    assert (tmp_path / "pretext" / "f1.00" / "stage1_rgb2depth.pt").is_file()


@pytest.mark.parametrize("model", range(1, 10))
def test_t3_rows_train_one_step(tiny_config, synth_samples, model):
    row = AblationTableConfig("t3").get_row(model)
    # keep the row's fusion structure but start from random weights
    config = row_config(tiny_config, row).with_overrides(
        ["ablation=null", "init_p1=false", "init_p2=false", "iterations=1"]
    )

    result = ablation.run_downstream(synth_samples, config)

    assert result.report.iterations_done == 1
    assert result.model.ablation.cda_count == row.cda_count
