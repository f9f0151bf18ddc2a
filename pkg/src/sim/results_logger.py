"""
CSV logger for simulation result rows

One row per channel point, header fixed by RESULT_HEADERS.
"""

import csv
import logging
import threading
from typing import Any, Dict, List, Optional

from src.sim.simulator import RESULT_HEADERS, SimResult


class ResultsLogger:
    """Thread-safe writer of result rows to one CSV file"""

    def __init__(self, path: str, headers: Optional[List[str]] = None):
        """
        Args:
            path: CSV file to create (overwritten)
            headers: Column headers (default RESULT_HEADERS)
        """
        self.logger = logging.getLogger(__name__)
        self.path = path
        self.headers = headers or RESULT_HEADERS
        self.lock = threading.Lock()
        self.csv_file = None
        self.csv_writer = None
        self.write_count = 0

    def __enter__(self):
        self.start_logging()
        return self

    def __exit__(self, exc_type, exc, tb):
        self.stop_logging()

    def start_logging(self) -> None:
        try:
            self.csv_file = open(self.path, 'w', newline='', encoding='utf-8')
            self.csv_writer = csv.DictWriter(self.csv_file, fieldnames=self.headers)
            self.csv_writer.writeheader()
            self.csv_file.flush()
            self.logger.info(f"Started results logging to {self.path}")
        except Exception as e:
            self.logger.error(f"Failed to start results logging: {e}")
            self._cleanup()
            raise

    def stop_logging(self) -> None:
        if self.csv_file:
            self.logger.info(f"Stopped results logging - {self.write_count} row(s) saved to {self.path}")
        self._cleanup()

    def log_row(self, row: Dict[str, Any]) -> None:
        if not self.csv_writer:
            raise RuntimeError("Results logger is not started")
        filtered = {k: row.get(k, '') for k in self.headers}
        with self.lock:
            self.csv_writer.writerow(filtered)
            self.csv_file.flush()
            self.write_count += 1

    def log_result(self, result: SimResult) -> None:
        for row in result.to_rows():
            self.log_row(row)

    def _cleanup(self) -> None:
        if self.csv_file:
            self.csv_file.close()
        self.csv_file = None
        self.csv_writer = None


def write_results_csv(path: str, result: SimResult) -> None:
    with ResultsLogger(path) as results:
        results.log_result(result)
