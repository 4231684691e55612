"""Early-boot side effects.

This module is imported before any other pmkit modules so that
environment variables and logging are configured before other imports.
"""

import logging
import os

from dotenv import load_dotenv

# -- Load .env (PMKIT_SEED, PMKIT_LOG_LEVEL) ------------------------------------
load_dotenv()

# -- pmkit logging setup ---------------------------------------------------------
_level = os.getenv("PMKIT_LOG_LEVEL", "INFO").upper()
pmkit_logger = logging.getLogger("pmkit")
pmkit_logger.setLevel(_level)
if not pmkit_logger.handlers:
    handler = logging.StreamHandler()
    handler.setLevel(_level)
    handler.setFormatter(logging.Formatter("%(asctime)s %(levelname)s %(name)s - %(message)s"))
    pmkit_logger.addHandler(handler)
pmkit_logger.propagate = False
