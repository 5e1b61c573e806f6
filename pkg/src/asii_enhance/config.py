"""Strict INI reader/writer for :class:`ScenarioConfig`.

Keys are the :class:`ScenarioConfig` field names grouped in fixed sections.
Unknown sections or keys are errors; missing keys take the defaults.
Points are written ``x, y, z`` and lists of points separate points with
``;``.  ``inf`` disables a noise component (far-end and microphone SNRs).
"""

import configparser
import dataclasses
from importlib import resources
from pathlib import Path

from .scene import ScenarioConfig
from .spectral import FrameParams


def _float(text):
    return float(text.strip())


def _int(text):
    value = float(text.strip())
    if value != int(value):
        raise ValueError(f"expected an integer, got {text!r}")
    return int(value)


def _point(text):
    parts = [p for p in text.replace(" ", "").split(",") if p]
    if len(parts) != 3:
        raise ValueError(f"expected three coordinates, got {text!r}")
    return tuple(float(p) for p in parts)


def _points(text):
    return tuple(_point(p) for p in text.split(";") if p.strip())


def _str(text):
    return text.strip()


def _optional_str(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else text


def _optional_int(text):
    text = text.strip()
    return None if text.lower() in ("", "none") else _int(text)


SCHEMA = {
    "geometry": {
        "room_dims": (_point, lambda v: ", ".join(map(repr, v))),
        "source_pos": (_point, lambda v: ", ".join(map(repr, v))),
        "mic_pos": (_points, lambda v: "; ".join(", ".join(map(repr, p)) for p in v)),
        "noise_pos": (_points, lambda v: "; ".join(", ".join(map(repr, p)) for p in v)),
    },
    "levels": {
        "far_snr_db": (_float, repr),
        "near_snr_db": (_float, repr),
        "mic_snr_db": (_float, repr),
    },
    "signals": {
        "near_noise_kind": (_str, str),
        "far_noise_kind": (_str, str),
        "speech_source": (_str, str),
        "duration_s": (_float, repr),
        "seed": (_int, str),
        "repeats": (_int, str),
    },
    "frame": {
        "sample_rate": (_int, str),
        "frame_len": (_int, str),
        "hop": (_optional_int, str),
        "window": (_str, str),
    },
    "processing": {
        "band_shape": (_str, str),
        "band_table": (_optional_str, lambda v: "none" if v is None else v),
        "loading_rel": (_float, repr),
    },
}
FRAME_KEYS = {"sample_rate", "frame_len", "hop", "window"}


class ConfigError(ValueError):
    pass


def parse_config(text, source="<string>"):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#",))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(f"{source}: {exc}") from None
    values, frame = {}, {}
    for section in parser.sections():
        if section not in SCHEMA:
            raise ConfigError(f"{source}: unknown section [{section}]")
        for key, raw in parser.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"{source}: unknown key {key!r} in [{section}]")
            try:
                value = SCHEMA[section][key][0](raw)
            except ValueError as exc:
                raise ConfigError(f"{source}: [{section}] {key}: {exc}") from None
            (frame if key in FRAME_KEYS else values)[key] = value
    try:
        return ScenarioConfig(frame=FrameParams(**frame), **values)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{source}: {exc}") from None


def load_config(path=None):
    """Read a scenario file; None loads the bundled default scenario."""
    if path is None:
        text = resources.files("asii_enhance").joinpath("data").joinpath("default_scenario.ini").read_text()
        return parse_config(text, "default_scenario.ini")
    path = Path(path)
    return parse_config(path.read_text(), str(path))


def config_to_dict(config):
    out = {f.name: getattr(config, f.name) for f in dataclasses.fields(config) if f.name != "frame"}
    out.update({k: getattr(config.frame, k) for k in ("sample_rate", "frame_len", "hop", "window")})
    return out


def dump_config(config):
    flat = config_to_dict(config)
    lines = []
    for section, keys in SCHEMA.items():
        lines.append(f"[{section}]")
        for key, (_, fmt) in keys.items():
            lines.append(f"{key} = {fmt(flat[key])}")
        lines.append("")
    return "\n".join(lines)
