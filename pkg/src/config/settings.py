import os
import sys
import logging
from dotenv import load_dotenv

# Load environment variables
load_dotenv()

PROJECT_ROOT = os.path.dirname(os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

# Run configuration
PASS_CONFIG_PATH = os.getenv("PASS_CONFIG_PATH", os.path.join(PROJECT_ROOT, "config", "desk_study.yaml"))
PASS_OUTPUT_DIR = os.getenv("PASS_OUTPUT_DIR", "output")

# Execution settings
PASS_WORKERS = int(os.getenv("PASS_WORKERS", "1"))
PASS_STRICT = os.getenv("PASS_STRICT", "false").lower() == "true"

# Serialization: 9 significant digits is the round-trip precision contract
PASS_FLOAT_FORMAT = os.getenv("PASS_FLOAT_FORMAT", "%.9g")

# Logging
PASS_LOG_LEVEL = os.getenv("PASS_LOG_LEVEL", "INFO").upper()
LOG_FORMAT = "%(levelname)s [%(name)s]: %(message)s"


def configure_logging(level: str = None) -> None:
    """Configure root logging once for the command-line entry point"""
    logging.basicConfig(
        level=getattr(logging, (level or PASS_LOG_LEVEL).upper(), logging.INFO),
        stream=sys.stdout,
        format=LOG_FORMAT,
    )
