import sys

from frogsim.cli import main

sys.exit(main())
