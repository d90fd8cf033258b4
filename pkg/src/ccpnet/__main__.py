"""
Allow running ccpnet as a module: python -m ccpnet
"""

import sys
from .cli import main

if __name__ == '__main__':
    sys.exit(main())
