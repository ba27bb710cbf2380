"""
Logging utility for the EGM field simulator
"""
import logging
import sys

from config import Config


def setup_logger(name='egm_sim', log_file=None, level=None):
    """
    Setup logging configuration

    Args:
        name: Logger name
        log_file: Optional path to log file (defaults to Config.LOG_FILE)
        level: Logging level name (defaults to Config.LOG_LEVEL)

    Returns:
        Logger instance
    """
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, (level or Config.LOG_LEVEL).upper()))

    # Avoid adding handlers multiple times
    if logger.handlers:
        return logger

    formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )

    # Console handler
    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setFormatter(formatter)
    logger.addHandler(console_handler)

    # File handler
    log_file = Config.LOG_FILE if log_file is None else log_file
    if log_file:
        file_handler = logging.FileHandler(log_file)
        file_handler.setFormatter(formatter)
        logger.addHandler(file_handler)

    return logger


# Create default logger
logger = setup_logger()
