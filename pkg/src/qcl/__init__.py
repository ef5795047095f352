"""qcl: exact local counting and exponential-sum toolkit for integral
quaternion quadrics."""

__version__ = "0.1.0"
