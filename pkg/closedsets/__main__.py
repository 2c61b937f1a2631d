import sys

from closedsets.cli import main

sys.exit(main())
