"""
Observability Package
"""

from .trace_logger import TraceLogger

__all__ = ['TraceLogger']
