from settings.config import config, BASE_DIR
from settings.logging_config import get_logger, set_console_level
