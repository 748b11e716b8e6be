"""
Shared pytest setup: CI environment and module import path
"""
import os
import sys

os.environ.setdefault('ENVIRONMENT', 'ci')

modules_path = os.path.join(os.path.dirname(__file__), '..', 'modules')
sys.path.insert(0, os.path.abspath(modules_path))
