"""Base classes for the steps of an experiment pipeline."""

import logging
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, Optional, Tuple

__all__ = [
    "BasePipelineStep",
]

logger = logging.getLogger(__name__)


class BasePipelineStep(ABC):
    """Abstract base class for pipeline steps in a Chain of Responsibility pattern.

    Each step reads what it needs from a shared data dictionary (the system configuration, rate
    profiles, simulation summaries, ...), adds its own results and hands the dictionary to the
    next step.

    Subclasses list the keys they read in ``requires``; a missing key is reported before the
    step runs.
    """

    requires: Tuple[str, ...] = ()

    def __init__(self, name: Optional[str] = None):
        """
        Initialize a pipeline step.

        Args:
            name (str, optional): A descriptive name for this pipeline step.
        """
        self.name = name or self.__class__.__name__
        self._next_step: Optional["BasePipelineStep"] = None

    def set_next(self, step: "BasePipelineStep") -> "BasePipelineStep":
        """
        Set the next step in the pipeline chain.

        Args:
            step: The next step in the pipeline.

        Returns:
            The next step for chaining purposes.
        """
        self._next_step = step
        return step

    def process(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run this step and pass the result to the next step if available.

        Args:
            data: Shared experiment data.

        Returns:
            Data with the results of this and all following steps.

        Raises:
            ValueError: If a required key is missing.
        """
        missing = [key for key in self.requires if key not in data]
        if missing:
            raise ValueError(f"Step {self.name} needs missing keys: {', '.join(missing)}")

        start = time.perf_counter()
        result = self._process_step(data)
        logger.debug("Step %s finished in %.3f s", self.name, time.perf_counter() - start)

        if self._next_step:
            return self._next_step.process(result)
        return result

    @abstractmethod
    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Process the current step.

        Must be implemented by concrete pipeline steps.

        Args:
            data: Shared experiment data.

        Returns:
            Processed data.
        """
        raise NotImplementedError()
