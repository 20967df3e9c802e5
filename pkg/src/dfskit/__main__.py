import sys

from dfskit.cli import main

sys.exit(main())
