# This file allows the package to be run with 'python -m szego_toolkit'
from .app import start

if __name__ == "__main__":
    start()
