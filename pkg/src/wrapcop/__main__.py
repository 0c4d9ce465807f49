"""Allow ``python -m wrapcop``."""

import sys

from wrapcop.cli import main

sys.exit(main())
