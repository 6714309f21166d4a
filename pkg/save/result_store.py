"""
Result persistence for experiment runs.
Writes the CSV table and a JSON metadata sidecar, keeping a backup of any
previous table until the new one is complete.
"""

import csv
import json
import logging
import os
from datetime import datetime, timezone
from importlib import metadata

import config
from utils.errors import ValidationError

logger = logging.getLogger(__name__)

PACKAGE_NAME = "rf-fso-secrecy-lab"


def package_version():
    try:
        return metadata.version(PACKAGE_NAME)
    except metadata.PackageNotFoundError:
        return "unknown"


def format_cell(value):
    """CSV text of one cell; floats use a fixed exponent format."""
    if value is None:
        return ""
    if isinstance(value, float):
        return config.CSV_FLOAT_FORMAT.format(value)
    if isinstance(value, (tuple, list)):
        return ";".join(format_cell(v) for v in value)
    return str(value)


class ResultStore:
    def __init__(self, path):
        """Initialize the store for one CSV target."""
        self.path = os.fspath(path)
        self.backup_path = self.path + config.RESULT_BACKUP_EXTENSION
        self.metadata_path = self.path + config.RESULT_METADATA_SUFFIX

    def ensure_directory(self):
        directory = os.path.dirname(self.path)
        if directory and not os.path.exists(directory):
            os.makedirs(directory)
            logger.info("created output directory %s", directory)

    def write(self, rows, run_metadata=None, columns=config.CSV_COLUMNS, timestamp=False):
        """Write rows (dicts keyed by column) and the metadata sidecar.

        An existing table is moved to the backup path first and restored
        if writing fails.
        """
        self.ensure_directory()
        if os.path.exists(self.path):
            if os.path.exists(self.backup_path):
                os.remove(self.backup_path)
            os.rename(self.path, self.backup_path)
            logger.info("created backup %s", self.backup_path)
        try:
            with open(self.path, "w", newline="", encoding="utf-8") as handle:
                writer = csv.writer(handle, lineterminator="\n")
                writer.writerow(columns)
                for row in rows:
                    unknown = set(row) - set(columns)
                    if unknown:
                        raise ValidationError(f"row has unknown columns {sorted(unknown)}")
                    writer.writerow([format_cell(row.get(column)) for column in columns])
            self._write_metadata(run_metadata or {}, columns, timestamp)
        except Exception:
            logger.exception("writing %s failed", self.path)
            if os.path.exists(self.backup_path):
                os.replace(self.backup_path, self.path)
                logger.warning("restored %s from backup", self.path)
            raise
        logger.info("wrote %d rows to %s", len(rows), self.path)
        return self.path

    def _write_metadata(self, run_metadata, columns, timestamp):
        payload = {
            "version": config.RESULT_FORMAT_VERSION,
            "package_version": package_version(),
            "columns": list(columns),
            **run_metadata,
        }
        if timestamp:
            payload["timestamp"] = datetime.now(timezone.utc).isoformat()
        with open(self.metadata_path, "w", encoding="utf-8") as handle:
            json.dump(payload, handle, indent=2, sort_keys=True, default=_json_default)
            handle.write("\n")

    def read(self):
        """Rows of the stored table as dicts of strings."""
        if not os.path.exists(self.path):
            raise ValidationError(f"result file not found: {self.path}")
        with open(self.path, "r", newline="", encoding="utf-8") as handle:
            reader = csv.DictReader(handle)
            if tuple(reader.fieldnames or ()) != config.CSV_COLUMNS:
                raise ValidationError(f"{self.path} does not carry the expected columns")
            return list(reader)

    def read_metadata(self):
        with open(self.metadata_path, "r", encoding="utf-8") as handle:
            data = json.load(handle)
        if not self._is_version_compatible(data.get("version", "1.0")):
            raise ValidationError(f"incompatible result format {data.get('version')}")
        return data

    def _is_version_compatible(self, version):
        return version.split(".")[0] == config.RESULT_FORMAT_VERSION.split(".")[0]


def _json_default(obj):
    if hasattr(obj, "to_dict"):
        return obj.to_dict()
    if isinstance(obj, (set, tuple)):
        return list(obj)
    if hasattr(obj, "__dict__"):
        return obj.__dict__
    return str(obj)
