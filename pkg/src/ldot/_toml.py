try:
    from tomllib import load, loads
except ModuleNotFoundError:  # Python < 3.11
    from tomli import load, loads

__all__ = ["load", "loads"]
