#!/usr/bin/env python3
"""
FEC Laboratory - Main Entry Point
Sparse-graph code construction, analysis, decoding and simulation

Usage: python main.py <command> [options]    (python main.py --help)
"""

import sys
import os
import time
import logging
from datetime import datetime
from logging.handlers import RotatingFileHandler

# Add src directory to Python path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), 'src'))

from src.config.settings import LOGGING
from src.cli.commands import cli_main


def setup_logging():
    """Setup application logging"""
    log_dir = LOGGING['log_dir']
    if not os.path.exists(log_dir):
        os.makedirs(log_dir)

    timestamp = datetime.now().strftime('%Y%m%d_%H%M%S')
    log_filename = os.path.join(log_dir, f"{LOGGING['file_prefix']}{timestamp}.log")

    file_handler = RotatingFileHandler(
        log_filename,
        maxBytes=LOGGING['max_bytes'],
        backupCount=LOGGING['backup_count']
    )
    file_handler.setLevel(logging.DEBUG)

    # Console shows errors only; stdout carries the JSON results
    console_handler = logging.StreamHandler()
    console_handler.setLevel(logging.ERROR)

    detailed_formatter = logging.Formatter(
        '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    simple_formatter = logging.Formatter(
        '%(levelname)s: %(message)s'
    )

    file_handler.setFormatter(detailed_formatter)
    console_handler.setFormatter(simple_formatter)

    root_logger = logging.getLogger()
    root_logger.setLevel(logging.DEBUG)
    root_logger.addHandler(file_handler)
    root_logger.addHandler(console_handler)

    # Reduce verbosity of third-party libraries
    logging.getLogger('networkx').setLevel(logging.WARNING)
    logging.getLogger('scipy').setLevel(logging.WARNING)

    logger = logging.getLogger(__name__)
    logger.info(f"FEC laboratory logging started - Log file: {log_filename}")
    return logger


def cleanup_old_logs(log_dir):
    """Clean up log files older than the retention period"""
    try:
        cutoff = time.time() - LOGGING['retention_days'] * 24 * 60 * 60

        for filename in os.listdir(log_dir):
            if filename.startswith(LOGGING['file_prefix']) and '.log' in filename:
                file_path = os.path.join(log_dir, filename)
                if os.path.isfile(file_path) and os.path.getmtime(file_path) < cutoff:
                    os.remove(file_path)
    except Exception as e:
        print(f"Warning: Failed to clean up old logs: {e}", file=sys.stderr)


def main():
    """Main application entry point"""
    logger = setup_logging()
    cleanup_old_logs(LOGGING['log_dir'])

    try:
        code = cli_main(sys.argv[1:])
    except Exception as e:
        logger.exception(f"Unhandled error: {e}")
        print(f"Error: {e}", file=sys.stderr)
        code = 1

    logger.info(f"FEC laboratory exiting with status {code}")
    sys.exit(code)


if __name__ == "__main__":
    main()
