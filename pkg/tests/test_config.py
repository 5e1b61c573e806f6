import dataclasses

import numpy as np
import pytest

from asii_enhance.config import ConfigError, config_to_dict, dump_config, load_config, parse_config
from asii_enhance.scene import ScenarioConfig


def test_bundled_default_is_the_reference_scenario():
    assert load_config() == ScenarioConfig()


def test_shipped_config_file_matches_bundled(tmp_path):
    from pathlib import Path
    path = Path(__file__).resolve().parents[1] / "configs" / "default_scenario.ini"
    assert load_config(path) == load_config()


def test_round_trip(tmp_path):
    cfg = dataclasses.replace(ScenarioConfig(), far_snr_db=np.inf, seed=42, band_shape="triangular")
    path = tmp_path / "c.ini"
    path.write_text(dump_config(cfg))
    assert load_config(path) == cfg


def test_partial_file_takes_defaults():
    cfg = parse_config("[levels]\nnear_snr_db = -5\n[frame]\nframe_len = 256\n")
    assert cfg.near_snr_db == -5.0 and cfg.frame.frame_len == 256 and cfg.frame.hop == 128
    assert cfg.far_snr_db == ScenarioConfig().far_snr_db


@pytest.mark.parametrize(
    "text",
    [
        "[bogus]\nx = 1\n",
        "[levels]\nnear = 1\n",
        "[levels]\nnear_snr_db = loud\n",
        "[signals]\nseed = 1.5\n",
        "[geometry]\nsource_pos = 1, 2\n",
        "[geometry]\nsource_pos = 9, 9, 9\n",
        "[frame]\nhop = 100\n",
        "no section header\n",
    ],
)
def test_strict_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_config_to_dict_is_flat():
    d = config_to_dict(ScenarioConfig())
    assert d["frame_len"] == 512 and d["hop"] == 256 and "frame" not in d
