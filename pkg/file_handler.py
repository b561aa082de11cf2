import json
import logging
import os
from typing import Any, Dict

from data_manager import FileOperationError

logger = logging.getLogger(__name__)

METADATA_FILE = "run_metadata.json"


def prepare_output_dir(output_dir: str, resolve_path: bool = False) -> str:
    """
    Create the output directory for a run if needed.

    Args:
        output_dir: Directory path (relative or absolute)
        resolve_path: Whether to resolve a relative path against this module's directory

    Returns:
        The directory path that outputs are written to

    Raises:
        FileOperationError: If the path exists and is not a directory, or cannot be created
    """
    if resolve_path and not os.path.isabs(output_dir):
        base_dir = os.path.dirname(os.path.abspath(__file__))
        output_dir = os.path.join(base_dir, output_dir)

    if os.path.exists(output_dir) and not os.path.isdir(output_dir):
        raise FileOperationError(f"Output path {output_dir} exists and is not a directory")
    try:
        os.makedirs(output_dir, exist_ok=True)
    except OSError as e:
        logger.error(f"Failed to create output directory {output_dir}: {str(e)}")
        raise FileOperationError(f"Failed to create output directory {output_dir}: {str(e)}") from e
    logger.info(f"Writing outputs to {output_dir}")
    return output_dir


def output_path(output_dir: str, file_name: str) -> str:
    return os.path.join(output_dir, file_name)


def write_run_metadata(output_dir: str, metadata: Dict[str, Any], encoding: str = 'utf-8') -> str:
    """
    Write the run configuration next to the outputs it produced.

    Keys are sorted and no timestamps are added, so repeating a run with the
    same inputs rewrites the same bytes.

    Returns:
        Path of the metadata file

    Raises:
        FileOperationError: If the file cannot be written
    """
    path = output_path(output_dir, METADATA_FILE)
    try:
        with open(path, 'w', encoding=encoding, newline='\n') as f:
            json.dump(metadata, f, indent=2, sort_keys=True, ensure_ascii=False)
            f.write("\n")
    except (OSError, TypeError) as e:
        logger.error(f"Failed to save run metadata to {path}: {str(e)}")
        raise FileOperationError(f"Failed to save run metadata: {str(e)}") from e
    logger.info(f"Saved run metadata to {path}")
    return path
