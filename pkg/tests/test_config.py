import argparse
from pathlib import Path

import pytest

from src.shift_leak_lab.cli import build_parser, resolve_run_config
from src.shift_leak_lab.utils.config import ConfigManager, LabConfig
from src.shift_leak_lab.utils.exceptions import ConfigurationError

SHIPPED = Path(__file__).resolve().parent.parent / "config" / "lab_config.yaml"


@pytest.fixture
def write_config(tmp_path):
    def write(text: str):
        path = tmp_path / "lab_config.yaml"
        path.write_text(text)
        return ConfigManager(str(path), env_file=None)
    return write


def test_missing_file_gives_defaults(tmp_path):
    config = ConfigManager(str(tmp_path / "absent.yaml"), env_file=None).load_config()
    assert config == LabConfig()
    assert config.locking.key_bits == 16
    assert config.scan.chains == [1]
    assert config.chip.defense == "dfs"


def test_shipped_config_matches_defaults():
    assert ConfigManager(str(SHIPPED), env_file=None).load_config() == LabConfig()


def test_file_values(write_config):
    config = write_config("locking:\n  scheme: sll\n  key_bits: 8\nscan:\n  chains: [1, 2, 4]\n").load_config()
    assert config.locking.scheme == "sll"
    assert config.locking.key_bits == 8
    assert config.scan.chains == [1, 2, 4]


def test_environment_overrides_file(write_config, monkeypatch):
    monkeypatch.setenv("SHIFT_LEAK_KEY_BITS", "12")
    monkeypatch.setenv("SHIFT_LEAK_CHAINS", "2,8")
    monkeypatch.setenv("SHIFT_LEAK_DEFENSE", "mssd")
    config = write_config("locking:\n  key_bits: 8\n").load_config()
    assert config.locking.key_bits == 12
    assert config.scan.chains == [2, 8]
    assert config.chip.defense == "mssd"


def test_dotenv_file_is_read(tmp_path, monkeypatch):
    monkeypatch.delenv("SHIFT_LEAK_SEED_ATTACK", raising=False)
    env = tmp_path / ".env"
    env.write_text("SHIFT_LEAK_SEED_ATTACK=42\n")
    config = ConfigManager(str(tmp_path / "absent.yaml"), env_file=str(env)).load_config()
    assert config.attack.seed == 42


def test_bad_environment_value(write_config, monkeypatch):
    monkeypatch.setenv("SHIFT_LEAK_KEY_BITS", "many")
    with pytest.raises(ConfigurationError, match="locking.key_bits"):
        write_config("").load_config()


@pytest.mark.parametrize("text, message", [
    ("locking:\n  scheme: antisat\n", "locking.scheme must be one of"),
    ("locking:\n  key_bits: 0\n", "key_bits must be >= 1"),
    ("chip:\n  defense: none\n", "chip.defense"),
    ("scan:\n  chains: [0]\n", "scan.chains"),
    ("attack:\n  fill: ones\n", "attack.fill"),
    ("attack:\n  scan_check_budget: 0\n", "attack.scan_check_trials and attack.scan_check_budget"),
    ("report:\n  budget: 0\n", "report.budget"),
    ("locking:\n  colour: red\n", "Invalid configuration format"),
    ("plotting: {}\n", "Unknown configuration sections"),
    ("- just\n- a list\n", "must be a mapping"),
    ("locking: [\n", "Invalid YAML"),
])
def test_invalid_configs(write_config, text, message):
    with pytest.raises(ConfigurationError, match=message):
        write_config(text).load_config()


def test_config_is_cached_until_reload(write_config):
    manager = write_config("locking:\n  key_bits: 8\n")
    first = manager.load_config()
    assert manager.load_config() is first
    assert manager.load_config(reload=True) is not first


def _args(*argv) -> argparse.Namespace:
    return build_parser().parse_args(["attack", *argv])


def test_flags_override_config():
    config = LabConfig()
    run = resolve_run_config(_args("-i", "x.bench", "--key-bits", "4", "--chains", "1", "3",
                                   "--seed-attack", "9", "--dip-ceiling", "50"), config)
    assert (run.key_bits, run.chains, run.seed_attack) == (4, [1, 3], 9)
    assert run.seeds() == {"lock": 1, "stitch": 1, "attack": 9}
    assert config.attack.seed == 9
    assert config.attack.dip_iteration_ceiling == 50
    assert run.to_dict()["input_paths"] == ["x.bench"]


def test_unset_flags_keep_config_values():
    config = LabConfig()
    config.chip.defense = "mssd"
    run = resolve_run_config(_args(), config)
    assert run.defense == "mssd"
    assert run.trace is False
    assert run.budget == 10000


@pytest.mark.parametrize("argv, message", [
    (["--key-bits", "0"], "--key-bits"),
    (["--chains", "0"], "--chains"),
    (["--budget", "0"], "--budget"),
])
def test_flag_validation(argv, message):
    with pytest.raises(ConfigurationError, match=message):
        resolve_run_config(_args(*argv), LabConfig())
