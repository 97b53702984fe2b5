"""Plots for graded-material optimization artifacts (VTK fields, history CSV)."""

from .render import FIELDS, PlotJob, RenderResult, render
from .vtk_reader import VtkFormatError, VtkMesh, read_vtk

__version__ = "0.1.0"
