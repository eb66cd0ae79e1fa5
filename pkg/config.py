"""
Configuration management for the adversarial training lab.
"""
import os
from dotenv import load_dotenv

load_dotenv()


class Config:
    """Application configuration"""

    # Logging
    LOG_LEVEL = os.getenv('LAB_LOG_LEVEL', 'INFO')
    LOG_DIR = os.getenv('LAB_LOG_DIR')

    # Execution
    THREADS = int(os.getenv('LAB_THREADS', 1))

    # Outputs
    OUTPUT_DIR = os.getenv('LAB_OUTPUT_DIR', 'runs')
    CHECKPOINT_NAME = os.getenv('LAB_CHECKPOINT_NAME', 'model')

    # Sweeps
    SWEEP_SEEDS = int(os.getenv('LAB_SWEEP_SEEDS', 5))
