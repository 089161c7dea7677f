import pytest

from govsheet.config import ServiceConfig, load_config, parse_config_text


def test_parse_key_values_with_comments_and_blanks():
    text = """
    # service settings
    listen_addr = 0.0.0.0:9999

    store_path = /tmp/x.db
    admin_token = seed-token
    """
    values = parse_config_text(text)
    assert values == {"listen_addr": "0.0.0.0:9999", "store_path": "/tmp/x.db", "admin_token": "seed-token"}


def test_load_config_from_file(tmp_path):
    path = tmp_path / "govsheet.conf"
    path.write_text("listen_addr = 127.0.0.1:9101\nadmin_token = abc\nsync_writes = false\n")
    config = load_config(path)
    assert config.port == 9101
    assert config.admin_token == "abc"
    assert config.sync_writes is False


def test_env_overrides_file(tmp_path, monkeypatch):
    path = tmp_path / "govsheet.conf"
    path.write_text("listen_addr = 127.0.0.1:9101\nlog_level = info\n")
    monkeypatch.setenv("GOVSHEET_LISTEN_ADDR", "127.0.0.1:9202")
    monkeypatch.setenv("GOVSHEET_LOG_LEVEL", "debug")
    config = load_config(path)
    assert config.listen_addr == "127.0.0.1:9202"
    assert config.log_level == "debug"


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "govsheet.conf"
    path.write_text("listen_adress = typo\n")
    with pytest.raises(ValueError):
        load_config(path)


def test_defaults():
    config = ServiceConfig()
    assert config.host == "127.0.0.1"
    assert config.port == 8080
