"""
SocSec test suite
"""
