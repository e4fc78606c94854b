import sys

from sucs.cli import main

sys.exit(main())
