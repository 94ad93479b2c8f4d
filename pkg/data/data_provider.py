# data/data_provider.py
from abc import ABC, abstractmethod
from pathlib import Path
from typing import Union

from models.problem import Problem

PathLike = Union[str, Path]


class ProblemProvider(ABC):
    """Interface for all problem stores"""

    @abstractmethod
    def save(self, problem: Problem, location: PathLike) -> Path:
        """Persist a problem instance"""
        pass

    @abstractmethod
    def load(self, location: PathLike) -> Problem:
        """Load a problem instance"""
        pass

    @abstractmethod
    def exists(self, location: PathLike) -> bool:
        """Whether a complete instance is stored at ``location``"""
        pass
