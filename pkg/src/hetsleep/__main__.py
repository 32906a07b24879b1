import sys

from hetsleep.cli import main

sys.exit(main())
