import pytest
import yaml

from pyrgbd.config.ablation import AblationTableConfig, load_ablation
from pyrgbd.config.preset import PresetConfig, available_presets
from pyrgbd.config.specs import AblationConfig
from pyrgbd.config.training import ConfigError, TrainConfig
from pyrgbd.utils import resolve_ablation_name, resolve_table_name


class TestResolver:
    @pytest.mark.parametrize("name", ["t3", "ssl-pretext", "Self-Supervised-Pretext", " t3 "])
    def test_table_aliases(self, name):
        assert resolve_table_name(name) == ("t3", "ssl-pretext", "self-supervised-pretext")

    @pytest.mark.parametrize("name", ["t3m9", "t3-m9", "t3:9", "ssl-pretext:9", "ssl-pretext/model-9"])
    def test_row_forms(self, name):
        assert resolve_ablation_name(name) == ("t3", 9)

    def test_unknown_table(self):
        with pytest.raises(ValueError, match="Unknown ablation table"):
            resolve_table_name("t4")

    def test_unparseable_row(self):
        with pytest.raises(ValueError, match="Cannot parse"):
            resolve_ablation_name("t3")


class TestTables:
    def test_row_counts(self):
        assert AblationTableConfig("t2").model_numbers() == list(range(1, 8))
        assert AblationTableConfig("t3").model_numbers() == list(range(1, 10))

    def test_t3_structure(self):
        rows = AblationTableConfig("ssl-pretext").rows()

        assert rows[0].cda_count == 0 and not rows[0].needs_pretraining
        assert rows[-1].cda_count == 9 and rows[-1].init_p1 and rows[-1].init_p2
        assert [row.name for row in rows] == [f"t3m{n}" for n in range(1, 10)]

    def test_defaults_are_filled_in(self):
        row = load_ablation("t2m2")

        assert row.init_p1 is False and row.init_p2 is False
        assert row.use_cm_jc and not row.use_cm_jd
        assert row.cda_count == 5

    def test_missing_row(self):
        with pytest.raises(ValueError, match="no model 10"):
            AblationTableConfig("t3").get_row(10)

    def test_partial_pretraining_rows(self):
        fractions = [row.pretrain_fraction for row in AblationTableConfig("t5").rows()]

        assert fractions == [1.0, 0.34, 0.67, 1.0]


class TestPresets:
    def test_available(self):
        assert {"tiny", "vgg16"} <= set(available_presets())

    def test_vgg16_topology(self):
        backbone = PresetConfig("vgg16").to_backbone()

        assert list(backbone.widths) == [64, 128, 256, 512, 512]
        assert list(backbone.convs) == [2, 2, 3, 3, 3]

    def test_overrides_skip_none(self):
        backbone = PresetConfig("tiny").to_backbone(transition_width=None, norm="none")

        assert backbone.transition_width == 16
        assert backbone.norm == "none"

    def test_unknown_preset(self):
        with pytest.raises(FileNotFoundError, match="Available presets"):
            PresetConfig("resnet50")


class TestTrainConfig:
    def test_defaults(self):
        config = TrainConfig()

        assert config.preset == "vgg16"
        assert config.contour_m == 5
        assert config.ablation_config() == AblationConfig(name="custom")

    @pytest.mark.parametrize(
        "kwargs, message",
        [
            ({"image_size": 100}, "divisible by 16"),
            ({"contour_m": 4}, "odd"),
            ({"iterations": -1}, "non-negative"),
            ({"batch_size": 0}, "positive integer"),
            ({"val_fraction": 1.0}, "below 1"),
            ({"preset": "resnet"}, "Invalid preset"),
            ({"norm": "group"}, "Invalid norms"),
            ({"ablation": "t3m10"}, "no model 10"),
        ],
    )
    def test_invalid_values(self, kwargs, message):
        with pytest.raises(ConfigError, match=message):
            TrainConfig(**kwargs)

    def test_ablation_row_replaces_flags(self):
        config = TrainConfig(ablation="t3m1", use_cm_jc=True)

        assert config.ablation == "t3m1"
        assert config.ablation_config().cda_count == 0
        assert not config.init_p1

    def test_overrides_are_yaml_scalars(self, tiny_config):
        config = tiny_config.with_overrides(["epochs=3", "brightness=[0.8, 1.2]", "augment=false"])

        assert config.epochs == 3
        assert config.brightness == (0.8, 1.2)
        assert config.augment is False
        assert config.augment_spec() is None

    def test_malformed_override(self, tiny_config):
        with pytest.raises(ConfigError, match="key=value"):
            tiny_config.with_overrides(["epochs"])

    def test_unknown_key(self, tiny_config):
        with pytest.raises(ConfigError, match="Unknown config keys"):
            tiny_config.with_overrides(["learning_rate=0.1"])

    def test_file_roundtrip_ignores_echo_entries(self, tiny_config, tmp_path):
        path = tmp_path / "config.yml"
        tiny_config.save(path, extra={"command": "train", "argv": ["train"]})

        assert yaml.safe_load(path.read_text())["command"] == "train"
        assert TrainConfig.from_file(path) == tiny_config

    def test_iteration_budget(self, tiny_config):
        assert tiny_config.total_iterations(100) == 2
        by_epochs = tiny_config.with_overrides(["iterations=null", "epochs=3"])
        assert by_epochs.total_iterations(5) == 9

    def test_fingerprint_tracks_architecture_only(self, tiny_config):
        other_seed = tiny_config.with_overrides(["seed=5", "init_p1=false"])
        no_cm = tiny_config.with_overrides(["use_cm_jc=false", "use_cm_jd=false"])
        wider = tiny_config.with_overrides(["transition_width=32"])

        assert other_seed.fingerprint() == tiny_config.fingerprint()
        assert no_cm.fingerprint() != tiny_config.fingerprint()
        assert no_cm.fingerprint(include_fusion=False) == tiny_config.fingerprint(include_fusion=False)
        assert wider.fingerprint(include_fusion=False) != tiny_config.fingerprint(include_fusion=False)

    def test_stage_specs(self, tiny_config):
        pretext = tiny_config.optim_spec("pretext")
        downstream = tiny_config.optim_spec("downstream")

        assert pretext.lr_backbone == pretext.lr_other == tiny_config.lr_pretext
        assert downstream.lr_backbone == tiny_config.lr_backbone
        assert tiny_config.schedule_spec("pretext", 10).kind == "poly"
        assert tiny_config.schedule_spec("downstream", 10).kind == "warmup_linear"
        with pytest.raises(ConfigError):
            tiny_config.optim_spec("stage3")
