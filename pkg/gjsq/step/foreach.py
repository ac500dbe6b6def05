"""ForEach step running a sub-pipeline once per cell of a parameter grid."""

from typing import Any, Dict, List, Optional, Sequence

from tqdm import tqdm

from ..pipeline.base import Pipeline
from .base import BasePipelineStep

__all__ = ["ForEachStep"]


class ForEachStep(BasePipelineStep):
    """Pipeline step that runs a sub-pipeline for every cell of a grid.

    Each cell (for example ``{"s": 2, "rho": 0.7}``) is processed on a shallow copy of the input
    data with the cell stored under ``item_key``; the outputs are collected in order under
    ``results_key``. A ``tqdm`` bar on stderr reports progress over the cells.
    """

    def __init__(
        self,
        items_key: str = "cells",
        item_key: str = "cell",
        results_key: str = "cell_results",
        progress: bool = True,
        name: Optional[str] = None,
    ):
        """Initialize a ForEach step.

        Args:
            items_key: Key in the input data holding the grid cells.
            item_key: Key under which each cell is handed to the sub-pipeline.
            results_key: Key in the output data where the per-cell results are stored.
            progress: Show a progress bar.
            name: Name of this pipeline step.
        """
        super().__init__(name)
        self.items_key = items_key
        self.item_key = item_key
        self.results_key = results_key
        self.progress = progress
        self.sub_pipeline = Pipeline(name=f"{self.name}_SubPipeline")
        self.requires = (items_key,)

    def add_sub_step(self, step: BasePipelineStep) -> "ForEachStep":
        """Add a step to the sub-pipeline.

        Args:
            step: Step to add to the sub-pipeline.

        Returns:
            Self for method chaining.
        """
        self.sub_pipeline.add_step(step)
        return self

    def _process_step(self, data: Dict[str, Any]) -> Dict[str, Any]:
        """Run the sub-pipeline on every cell.

        Raises:
            ValueError: If the grid is empty.
        """
        cells: Sequence[Any] = data[self.items_key]
        if isinstance(cells, (str, dict)) or not hasattr(cells, "__len__"):
            cells = [cells]
        if len(cells) == 0:
            raise ValueError(f"Grid '{self.items_key}' is empty")

        results: List[Dict[str, Any]] = []
        for index, cell in enumerate(
            tqdm(cells, total=len(cells), desc=f"Processing {self.name}", unit="cell", disable=not self.progress)
        ):
            cell_data = data.copy()
            cell_data[self.item_key] = cell
            cell_data["_cell_index"] = index
            if self.sub_pipeline.steps:
                results.append(self.sub_pipeline.process(cell_data))
            else:
                results.append(cell_data)

        data[self.results_key] = results
        return data
