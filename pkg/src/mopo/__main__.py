import sys

from mopo.cli import main

sys.exit(main())
