import sys

from qlink.cli import main

sys.exit(main())
