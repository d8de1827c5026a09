import sys

from it2sail.cli import main

sys.exit(main())
