"""
The base module for gjsq experiment pipelines.

A pipeline chains steps that share one data dictionary: the system configuration goes in, rate
profiles, queue statistics and comparisons come out.
"""

import logging
from typing import Any, Dict, List, Optional

from ..step.base import BasePipelineStep

# set __all__ to control what gets imported with 'from module import *'
__all__ = ["Pipeline"]

logger = logging.getLogger(__name__)


class Pipeline:
    """Class that manages a chain of experiment steps."""

    def __init__(self, name: Optional[str] = None, first_step: Optional[BasePipelineStep] = None):
        """
        Initialize the pipeline.

        Args:
            name (str, optional): Name used in logs; defaults to the class name.
            first_step (BasePipelineStep, optional): The first step of the pipeline.
        """
        self.name = name or self.__class__.__name__
        self.first_step = first_step
        self.steps: List[BasePipelineStep] = []
        if first_step:
            self.steps.append(first_step)

    def add_step(self, step: BasePipelineStep) -> "Pipeline":
        """
        Append a step to the pipeline.

        Args:
            step: The step to add.

        Returns:
            The pipeline instance for chaining.
        """
        if not self.first_step:
            self.first_step = step
        else:
            self.steps[-1].set_next(step)

        self.steps.append(step)
        return self

    def process(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """
        Run the data through every step.

        Args:
            data: Initial experiment data, typically ``{"config": SystemConfig}``.

        Returns:
            The data after the last step.

        Raises:
            ValueError: If the pipeline has no steps.
        """
        if not self.first_step:
            raise ValueError("Pipeline has no steps")

        logger.debug("Running pipeline %s with %d steps", self.name, len(self.steps))
        return self.first_step.process(data)

    def __len__(self) -> int:
        return len(self.steps)
