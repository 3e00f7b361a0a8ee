import sys

from graphgtn.cli import main

sys.exit(main())
