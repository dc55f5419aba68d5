"""Named problem factories selectable from configuration files and the CLI."""

import importlib
import logging
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional

from periodic_fde.core.problem import ProblemBundle, builtin_cd_proto, builtin_sd_proto

logger = logging.getLogger(__name__)


@dataclass
class ProblemEntry:
    """A registered problem factory."""

    name: str
    factory: Callable[[], ProblemBundle]
    description: str = ""


class ProblemRegistry:
    """Registry of problem factories, resolvable by name or by 'module:attribute'."""

    def __init__(self):
        self.problems: Dict[str, ProblemEntry] = {}
        self._initialize_problems()

    def _initialize_problems(self):
        self.problems.update(
            {
                "sd_proto": ProblemEntry(
                    name="sd_proto",
                    factory=builtin_sd_proto,
                    description="Scalar state-dependent delay prototype y'(t) = -y(t - p - y(t))",
                ),
                "cd_proto": ProblemEntry(
                    name="cd_proto",
                    factory=builtin_cd_proto,
                    description="Constant-delay linear variant y'(t) = -y(t - p) with exact sine solutions",
                ),
            }
        )

    def get_entry(self, name: str) -> Optional[ProblemEntry]:
        return self.problems.get(name)

    def available(self) -> List[str]:
        return sorted(self.problems)

    def register_problem(self, entry: ProblemEntry):
        if entry.name in self.problems:
            logger.warning(f"Replacing registered problem '{entry.name}'")
        self.problems[entry.name] = entry

    def resolve(self, reference: str) -> ProblemBundle:
        """Build (problem, constraint family) from a registered name or 'package.module:factory'."""
        entry = self.get_entry(reference)
        if entry is not None:
            return entry.factory()

        if ":" not in reference:
            raise ValueError(f"Unknown problem '{reference}'; available: {', '.join(self.available())}")

        module_name, attribute = reference.split(":", 1)
        try:
            factory = getattr(importlib.import_module(module_name), attribute)
        except (ImportError, AttributeError) as e:
            logger.error(f"Cannot load problem factory '{reference}': {e}")
            raise ValueError(f"Cannot load problem factory '{reference}': {e}") from e

        bundle = factory() if callable(factory) else factory
        if not isinstance(bundle, tuple) or len(bundle) != 2:
            raise ValueError(f"Problem factory '{reference}' must return (ProblemDefinition, constraint family)")
        return bundle


_registry = ProblemRegistry()


def get_problem(reference: str) -> ProblemBundle:
    return _registry.resolve(reference)


def register_problem(name: str, factory: Callable[[], ProblemBundle], description: str = "") -> None:
    _registry.register_problem(ProblemEntry(name=name, factory=factory, description=description))


def available_problems() -> List[str]:
    return _registry.available()
