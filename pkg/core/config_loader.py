# /core/config_loader.py
from pathlib import Path
import os
import yaml
from dotenv import load_dotenv

CONFIG_DIR = Path(__file__).resolve().parent.parent / "config"
CONFIG_PATH = CONFIG_DIR / "config.yaml"
ENV_PATH = CONFIG_DIR / ".env"


def _env_int(name: str) -> int | None:
    raw = os.getenv(name, "").strip()
    return int(raw) if raw else None


def load_config(path: str | Path | None = None) -> dict:
    # Load .env first so RIS_CONFIG can point at another YAML file
    if ENV_PATH.exists():
        load_dotenv(ENV_PATH)

    cfg_path = Path(path or os.getenv("RIS_CONFIG", "").strip() or CONFIG_PATH)
    if not cfg_path.is_absolute() and not cfg_path.exists():
        cfg_path = (CONFIG_DIR / cfg_path).resolve()

    cfg = {}
    if cfg_path.exists():
        with open(cfg_path, "r", encoding="utf-8") as f:
            cfg = yaml.safe_load(f) or {}

    # Env overrides
    threads = _env_int("RIS_THREADS")
    if threads is not None:
        cfg.setdefault("simulation", {})["threads"] = threads
    gen_size = _env_int("RIS_GENERATION_SIZE")
    if gen_size is not None:
        cfg.setdefault("simulation", {})["generation_size"] = gen_size
    log_level = os.getenv("RIS_LOG_LEVEL", "").strip()
    if log_level:
        cfg.setdefault("logging", {})["level"] = log_level.upper()

    # Ensure required keys exist with default values
    cfg.setdefault("channel", {}).setdefault("delta_n", 0.8)
    cfg.setdefault("channel", {}).setdefault("delta_s", 0.5)
    cfg.setdefault("channel", {}).setdefault("delta_d", 0.3)
    cfg.setdefault("simulation", {}).setdefault("n", 200_000)
    cfg.setdefault("simulation", {}).setdefault("trials", 20)
    cfg.setdefault("simulation", {}).setdefault("seed", 1)
    cfg.setdefault("simulation", {}).setdefault("payload_len", 64)
    cfg.setdefault("simulation", {}).setdefault("generation_size", 32)
    cfg.setdefault("simulation", {}).setdefault("threads", 0)
    cfg.setdefault("sweep", {}).setdefault("param", "eta")
    cfg.setdefault("sweep", {}).setdefault("from", 0.01)
    cfg.setdefault("sweep", {}).setdefault("to", 0.49)
    cfg.setdefault("sweep", {}).setdefault("steps", 49)
    cfg.setdefault("output", {}).setdefault("digits", 9)
    cfg.setdefault("logging", {}).setdefault("level", "WARNING")
    cfg.setdefault("logging", {}).setdefault(
        "format", "%(asctime)s %(levelname)s %(name)s: %(message)s"
    )

    return cfg


def resolve_threads(cfg: dict) -> int:
    threads = int(cfg["simulation"]["threads"])
    return threads if threads > 0 else (os.cpu_count() or 1)
