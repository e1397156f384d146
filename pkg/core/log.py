# /core/log.py
import logging
import sys


def setup_logging(cfg: dict, level: str | None = None) -> None:
    """Configure the root logger once; stderr only so CSV/JSON on stdout stay clean."""
    log_cfg = cfg.get("logging", {})
    logging.basicConfig(
        level=(level or log_cfg.get("level", "WARNING")).upper(),
        format=log_cfg.get("format", "%(levelname)s %(name)s: %(message)s"),
        stream=sys.stderr,
        force=True,
    )
