"""
Run Session Manager for simulation outputs

Manages timestamped run directories holding result CSVs, code files and a
run_metadata.json describing how the run was produced.
"""

import os
import json
import logging
from datetime import datetime
from typing import Optional, Dict, Any

from src.config.settings import OUTPUT

METADATA_FILE = "run_metadata.json"


class RunSessionManager:
    """Manages session directories for simulation runs"""

    def __init__(self, base_dir: Optional[str] = None):
        """Initialize the manager with its base directory (default OUTPUT['runs_dir'])"""
        self.logger = logging.getLogger(__name__)
        self.base_dir = base_dir or OUTPUT['runs_dir']
        self.current_session_dir = None
        self.session_metadata = {}
        self._started = None

        os.makedirs(self.base_dir, exist_ok=True)

    def create_session(self, session_name: Optional[str] = None,
                       metadata: Optional[Dict[str, Any]] = None) -> str:
        """Create a new timestamped run directory

        Args:
            session_name: Optional name inserted after the timestamp
            metadata: Initial metadata (seed, command, channel points, ...)

        Returns:
            Path to the created session directory
        """
        self._started = datetime.now()
        timestamp = self._started.strftime("%Y-%m-%d_%H-%M-%S")

        if session_name:
            session_dir_name = f"{timestamp}_{session_name}_session"
        else:
            session_dir_name = f"{timestamp}_session"

        session_path = os.path.join(self.base_dir, session_dir_name)
        suffix = 1
        while os.path.exists(session_path):
            session_path = os.path.join(self.base_dir, f"{session_dir_name}_{suffix}")
            suffix += 1

        try:
            os.makedirs(session_path)

            self.session_metadata = {
                "start_time": self._started.isoformat(timespec='seconds'),
                "session_name": session_name or "default",
            }
            self.session_metadata.update(metadata or {})
            self.current_session_dir = session_path
            self._write_metadata()
            self.logger.info(f"Created new run directory: {session_path}")
            return session_path

        except Exception as e:
            self.logger.error(f"Failed to create run directory: {e}")
            raise

    def get_output_path(self, filename: str) -> str:
        """Path of a file inside the active session

        Args:
            filename: File name such as 'results.csv' or 'code.json'
        """
        if not self.current_session_dir:
            raise RuntimeError("No active session")
        return os.path.join(self.current_session_dir, filename)

    def _write_metadata(self) -> None:
        metadata_path = os.path.join(self.current_session_dir, METADATA_FILE)
        with open(metadata_path, 'w') as f:
            json.dump(self.session_metadata, f, indent=2)

    def update_session_metadata(self, updates: Dict[str, Any]) -> None:
        if not self.current_session_dir:
            return
        try:
            self.session_metadata.update(updates)
            self._write_metadata()
        except Exception as e:
            self.logger.error(f"Failed to update run metadata: {e}")

    def finish_session(self, extra: Optional[Dict[str, Any]] = None) -> None:
        """Record end time and duration, plus any final fields"""
        if not self.current_session_dir:
            return
        ended = datetime.now()
        updates = {
            "end_time": ended.isoformat(timespec='seconds'),
            "duration_s": round((ended - self._started).total_seconds(), 3),
        }
        updates.update(extra or {})
        self.update_session_metadata(updates)
        self.logger.info(f"Run finished in {updates['duration_s']} s: {self.current_session_dir}")
