"""
Configuration module for the EGM field simulator
Loads runtime settings from the environment (.env) and holds numeric defaults.
Physics parameters never come from here: they live in scenario files.
"""
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()


class Config:
    """Application configuration"""

    # Logging
    LOG_LEVEL = os.getenv('EGM_LOG_LEVEL', 'INFO')
    LOG_FILE = os.getenv('EGM_LOG_FILE', '')  # empty = console only

    # Output defaults
    DEFAULT_OUT_DIR = os.getenv('EGM_OUT_DIR', 'runs')
    DEFAULT_ORDER = 2  # central-difference stencil order
    LOG_EVERY = int(os.getenv('EGM_LOG_EVERY', '10'))

    # Tolerances
    IDENTITY_TOL = 1e-12   # relative, algebra and Lorentz identities
    REALNESS_TOL = 1e-12   # imaginary residue allowed in W and P
    CLASSIFY_TOL = 1e-12   # relative tolerance of the energy classification
    MIN_GRID_POINTS = 8

    # Picard iteration
    DIVERGENCE_WINDOW = 3  # consecutive residual growths before reporting

    @classmethod
    def validate(cls):
        """Validate that the runtime settings are usable"""
        if cls.LOG_LEVEL.upper() not in ('DEBUG', 'INFO', 'WARNING', 'ERROR', 'CRITICAL'):
            raise ValueError(f"EGM_LOG_LEVEL not a logging level: {cls.LOG_LEVEL}")
        if cls.DEFAULT_ORDER not in (2, 4):
            raise ValueError("DEFAULT_ORDER must be 2 or 4")
        if cls.LOG_EVERY < 1:
            raise ValueError("EGM_LOG_EVERY must be positive")
        return True


# Validate config on import
Config.validate()
