from .excel_generator import SweepWorkbook

__all__ = ['SweepWorkbook']
