"""Tests for the BasePipelineStep class."""

import logging
from unittest.mock import MagicMock

import pytest

from gjsq.step.base import BasePipelineStep


class TestBasePipelineStep:
    """
    Test class for BasePipelineStep.

    This class contains tests for the abstract step of the experiment pipelines.
    """

    @pytest.fixture
    def base_step(self):
        """Fixture that provides a concrete step that marks the data."""

        class MarkStep(BasePipelineStep):
            def _process_step(self, data):
                data["marked"] = True
                return data

        return MarkStep()

    @pytest.fixture
    def needy_step(self):
        """Fixture that provides a step requiring ``config`` and ``profiles``."""

        class NeedyStep(BasePipelineStep):
            requires = ("config", "profiles")

            def _process_step(self, data):
                return data

        return NeedyStep()

    class TestDunderInit:
        """Tests for the __init__ method of BasePipelineStep."""

        def test_init(self, base_step):
            """The name defaults to the class name and no next step is set."""
            assert base_step.name == "MarkStep"
            assert base_step._next_step is None

        def test_init_with_name(self):
            """An explicit name is kept."""

            class Step(BasePipelineStep):
                def _process_step(self, data):
                    return data

            assert Step("Simulate[exp]").name == "Simulate[exp]"

        def test_cannot_instantiate_abstract_step(self):
            """The base class is abstract."""
            with pytest.raises(TypeError):
                BasePipelineStep()  # type: ignore[abstract]

    class TestSetNext:
        """Tests for the set_next method of BasePipelineStep."""

        def test_set_next_returns_next(self, base_step):
            """The next step is stored and returned for chaining."""
            next_step = MagicMock(spec=BasePipelineStep)
            assert base_step.set_next(next_step) is next_step
            assert base_step._next_step == next_step

    class TestProcess:
        """Tests for the process method of BasePipelineStep."""

        def test_process(self, base_step):
            """Without a next step the processed data is returned."""
            assert base_step.process({"config": 1}) == {"config": 1, "marked": True}

        def test_process_with_next_step(self, base_step):
            """The processed data is handed to the next step."""
            next_step = MagicMock(spec=BasePipelineStep)
            next_step.process.return_value = {"done": True}
            base_step.set_next(next_step)

            result = base_step.process({})

            assert result == {"done": True}
            next_step.process.assert_called_once_with({"marked": True})

        def test_missing_required_keys(self, needy_step):
            """Missing keys are reported before the step runs."""
            needy_step._process_step = MagicMock()
            with pytest.raises(ValueError, match="needs missing keys: profiles"):
                needy_step.process({"config": 1})
            needy_step._process_step.assert_not_called()

        def test_present_required_keys(self, needy_step):
            """A step with all its keys runs."""
            data = {"config": 1, "profiles": []}
            assert needy_step.process(data) is data

        def test_debug_timing(self, base_step, caplog):
            """Each step logs its duration at DEBUG level."""
            with caplog.at_level(logging.DEBUG, logger="gjsq.step.base"):
                base_step.process({})
            assert "Step MarkStep finished" in caplog.text
