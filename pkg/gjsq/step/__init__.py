"""
gjsq Step Module.

Steps are the links of a pipeline; each reads a few keys of the data dictionary and adds its own.

The step module contains:
    - BasePipelineStep: Abstract base class for all pipeline steps
    - ForEachStep: Runs a sub-pipeline over the cells of a parameter grid
    - Single queue approximation steps (limiting rates, rate profiles, birth-death solve, comparison)
    - SimulateStep: Independent replications of a simulation

Example:
    >>> from gjsq.pipeline.base import Pipeline
    >>> from gjsq.step.foreach import ForEachStep
    >>> from gjsq.step.sqa import ApproximateRatesStep, BirthDeathStep, CellConfigStep, LimitingRatesStep
    >>>
    >>> grid = ForEachStep(progress=False)
    >>> for step in (CellConfigStep(), LimitingRatesStep(), ApproximateRatesStep(), BirthDeathStep()):
    ...     grid.add_sub_step(step)  # doctest: +ELLIPSIS
    <...>
    >>> data = Pipeline("Grid").add_step(grid).process({"cells": [{"s": 2, "rho": 0.7}]})
    >>> len(data["cell_results"])
    1
"""
