"""Kernel fusion for element-wise pipelines on multicore CPUs"""

__version__ = "0.1.0"
