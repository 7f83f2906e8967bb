import matmi.matlog

# set matmi version number (single source)
__version__ = "0.1.0"
