import sys

from vchest.cli import main

sys.exit(main())
