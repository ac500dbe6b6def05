"""Tests for gjsq.pipeline.base module."""

from unittest.mock import MagicMock

import pytest

from gjsq.pipeline.base import Pipeline
from gjsq.step.base import BasePipelineStep


class TestPipeline:
    """
    Test class for Pipeline.

    This class contains tests for the Pipeline class, which chains experiment steps over one
    shared data dictionary.
    """

    @pytest.fixture
    def mock_step(self):
        """Fixture that provides a mock BasePipelineStep for testing."""
        step = MagicMock(spec=BasePipelineStep)
        step.name = "MockStep"
        return step

    @pytest.fixture
    def pipeline(self):
        """Fixture that provides an empty Pipeline."""
        return Pipeline("SQA")

    class TestDunderInit:
        """Tests for the __init__ method of Pipeline."""

        def test_init_without_first_step(self):
            """An empty pipeline has no steps."""
            pipeline = Pipeline("SQA")
            assert pipeline.name == "SQA"
            assert pipeline.first_step is None
            assert pipeline.steps == []
            assert len(pipeline) == 0

        def test_init_with_first_step(self, mock_step):
            """The first step is registered."""
            pipeline = Pipeline("SQA", mock_step)
            assert pipeline.first_step == mock_step
            assert pipeline.steps == [mock_step]

        def test_init_defaults_to_class_name(self):
            """Without a name the class name is used."""
            assert Pipeline().name == "Pipeline"

    class TestAddStep:
        """Tests for the add_step method of Pipeline."""

        def test_add_step_to_empty_pipeline(self, pipeline, mock_step):
            """The first added step becomes the head of the chain."""
            result = pipeline.add_step(mock_step)

            assert result is pipeline
            assert pipeline.first_step == mock_step
            mock_step.set_next.assert_not_called()

        def test_add_steps_links_the_chain(self, pipeline):
            """Each added step is linked to its predecessor."""
            limits, profiles, solve = (MagicMock(spec=BasePipelineStep) for _ in range(3))

            pipeline.add_step(limits).add_step(profiles).add_step(solve)

            assert pipeline.steps == [limits, profiles, solve]
            assert len(pipeline) == 3
            limits.set_next.assert_called_once_with(profiles)
            profiles.set_next.assert_called_once_with(solve)

    class TestProcess:
        """Tests for the process method of Pipeline."""

        def test_process_with_empty_pipeline(self, pipeline):
            """An empty pipeline refuses to run."""
            with pytest.raises(ValueError, match="Pipeline has no steps"):
                pipeline.process({"config": None})

        def test_process_delegates_to_first_step(self, pipeline, mock_step):
            """The data goes through the first step only; the chain does the rest."""
            second = MagicMock(spec=BasePipelineStep)
            pipeline.add_step(mock_step).add_step(second)
            mock_step.process.return_value = {"config": "c", "stats": []}

            result = pipeline.process({"config": "c"})

            assert result == {"config": "c", "stats": []}
            mock_step.process.assert_called_once_with({"config": "c"})
            second.process.assert_not_called()

        def test_process_runs_real_steps_in_order(self, pipeline):
            """Concrete steps see the keys added by their predecessors."""

            class Append(BasePipelineStep):
                def __init__(self, value):
                    super().__init__(f"Append[{value}]")
                    self.value = value

                def _process_step(self, data):
                    data.setdefault("trace", []).append(self.value)
                    return data

            pipeline.add_step(Append("spectral")).add_step(Append("profiles")).add_step(Append("stats"))

            assert pipeline.process({})["trace"] == ["spectral", "profiles", "stats"]
