"""Top-level package for lenslesspy."""

__author__ = """The lenslesspy developers"""
__version__ = '0.1.0'
