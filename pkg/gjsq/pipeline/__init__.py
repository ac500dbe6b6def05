"""
gjsq Pipeline Module.

Pipelines chain experiment steps in a Chain of Responsibility over one shared data dictionary.

The pipeline module contains:
    - Pipeline: Main class for managing and executing pipeline steps
    - sqa_pipeline: The single queue approximation of a two-server system

Example:
    >>> from gjsq.model.base import SystemConfig
    >>> from gjsq.pipeline.sqa import sqa_pipeline
    >>>
    >>> result = sqa_pipeline(SystemConfig.two_server(s=2, rho=0.7))
    >>> round(result.metrics()["mean_q2"], 3)
    2.033
"""
