"""CSV tables and emitted plot scripts."""

import csv
import logging
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Sequence, Union

import yaml

from periodic_fde.utils.helpers import format_float

logger = logging.getLogger(__name__)

DEFAULT_TEMPLATES_PATH = Path(__file__).parent / "templates" / "plot_scripts.yaml"


def _cell(value: Any) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Union[str, Path], header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """Write a table; floats get 17 significant digits, booleans are true/false."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.writer(f)
        writer.writerow(header)
        for row in rows:
            if len(row) != len(header):
                raise ValueError(f"Row {row!r} does not match header {list(header)}")
            writer.writerow([_cell(value) for value in row])
            count += 1
    logger.info(f"Wrote {count} rows to {path}")
    return path


def read_csv(path: Union[str, Path]) -> list:
    with open(path, newline="", encoding="utf-8") as f:
        return list(csv.DictReader(f))


class PlotScriptLibrary:
    """Plot script templates stored in YAML, rendered with str.format."""

    def __init__(self, templates_path: Union[str, Path] = DEFAULT_TEMPLATES_PATH):
        self.templates_path = Path(templates_path)
        self._templates_cache: Optional[Dict[str, Any]] = None

    def _load_templates(self) -> Dict[str, Any]:
        """Load script templates from the YAML file."""
        if self._templates_cache is not None:
            return self._templates_cache

        if not self.templates_path.exists():
            raise FileNotFoundError(f"Plot script templates not found: {self.templates_path}")

        with open(self.templates_path, "r", encoding="utf-8") as f:
            config = yaml.safe_load(f) or {}

        self._templates_cache = config.get("scripts", {})
        return self._templates_cache

    def available(self) -> list:
        return sorted(self._load_templates())

    def render(self, name: str, /, **values: Any) -> str:
        templates = self._load_templates()
        if name not in templates:
            raise KeyError(f"Unknown plot script '{name}'; available: {', '.join(sorted(templates))}")
        try:
            return templates[name]["template"].format(**values)
        except KeyError as e:
            logger.error(f"Plot script '{name}' needs value {e}")
            raise

    def write(self, name: str, path: Union[str, Path], /, **values: Any) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.render(name, **values), encoding="utf-8")
        logger.info(f"Wrote {name} plot script to {path}")
        return path


_library = PlotScriptLibrary()


def write_plot_script(name: str, path: Union[str, Path], /, **values: Any) -> Path:
    return _library.write(name, path, **values)
